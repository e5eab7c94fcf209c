"""Linear (singular-value ratio) dimension estimation and the transversality relation."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Any

import numpy as np


class Method(str, enum.Enum):
    LINEAR = "linear"
    CCA = "cca"
    CCA_BOOT_INFINITESIMAL = "cca-boot-inf"
    CCA_BOOT_FINITE = "cca-boot-finite"


@dataclass(eq=False)
class DimensionEstimate:
    value: int
    method: Method
    diagnostics: Any = None  # singular spectrum or cost profile


def singular_spectrum(S, return_factors: bool = False):
    """Singular values of the variation matrix in decreasing order.

    With ``return_factors`` the thin factors ``(U, s, Vt)`` are returned instead.
    """
    data = np.asarray(getattr(S, "data", S), dtype=float)
    if data.size == 0:
        raise ValueError("empty matrix")
    if return_factors:
        U, s, Vt = np.linalg.svd(data, full_matrices=False)
        _check_spectrum(s)
        return U, s, Vt
    s = np.linalg.svd(data, compute_uv=False)
    _check_spectrum(s)
    return s


def _check_spectrum(s: np.ndarray) -> None:
    if np.any(s < 0) or np.any(np.diff(s) > 0):
        raise AssertionError("singular values are not non-negative and non-increasing")


def linear_argmax(spectrum) -> int:
    """argmax_j s_j / s_{j+1} over j in [1, len-1], 1-based, smallest j on ties.

    A zero right after a positive value is decisive and returned immediately.
    """
    s = np.asarray(spectrum, dtype=float)
    if s.size < 2:
        raise ValueError("spectrum needs at least two values")
    if not np.any(s > 0):
        raise ValueError("degenerate spectrum")
    for j in range(len(s) - 1):
        if s[j] > 0 and s[j + 1] == 0:
            return j + 1
    return int(np.argmax(s[:-1] / s[1:])) + 1


def estimate_dim_linear(spectrum) -> DimensionEstimate:
    """Number of significant singular values, located by the largest successive ratio."""
    s = np.asarray(getattr(spectrum, "data", spectrum), dtype=float)
    if s.ndim == 2:
        s = singular_spectrum(s)
    else:
        _check_spectrum(s)
    return DimensionEstimate(linear_argmax(s), Method.LINEAR, s)


def displacement_dim(m: int, e: int, b: int) -> int:
    """Dimension of the compensable-displacement group, e + m - b.

    A negative result means the inputs are inconsistent; it is returned as is.
    """
    return e + m - b
