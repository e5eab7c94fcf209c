"""Active unstretching of the exploratory commands.

Each iteration explores with the current command set, finds through an SVD
which command combinations produce each sensory singular direction, strips
the combinations that produce no sensory change at all, and re-weights the
rest so weak sensory directions get amplified. The largest absolute
command is kept fixed, so the movement amplitude never grows.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from sensodim.estimators import linear_argmax
from sensodim.sim import (
    ExplorationMode,
    System,
    VariationMatrix,
    configs_from_offsets,
    explore,
    sample_configurations,
    offsets_from_configs,
    sensory_variations,
)

PINV_RCOND = 1e-12
COND_WARN = 1e12


class Strategy(str, enum.Enum):
    INFINITESIMAL = "infinitesimal"
    FINITE = "finite"


@dataclass(frozen=True)
class BootstrapParams:
    iterations: int = 10
    clamp: float = 10.0
    significance_threshold: float = 1.0
    strategy: Strategy = Strategy.INFINITESIMAL
    infinitesimal_amplitude: float = 1e-6
    target_amplitude: float = 1e-6

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("BootstrapParams.iterations must be >= 1")
        if self.clamp < 1:
            raise ValueError("BootstrapParams.clamp must be >= 1")
        if not self.significance_threshold > 0:
            raise ValueError("BootstrapParams.significance_threshold must be > 0")
        if not self.infinitesimal_amplitude > 0 or not self.target_amplitude > 0:
            raise ValueError("BootstrapParams amplitudes must be > 0")
        object.__setattr__(self, "strategy", Strategy(self.strategy))


@dataclass
class StepRecord:
    spectrum: np.ndarray
    gamma: np.ndarray
    cmax: float
    n_significant: int
    spread: float
    n_silent: int
    ill_conditioned: bool = False


@dataclass
class BootstrapTrace:
    records: list[StepRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def spreads(self) -> np.ndarray:
        return np.array([r.spread for r in self.records])

    def to_csv(self, path: str | Path) -> None:
        k = max((r.n_significant for r in self.records), default=0)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iteration", *[f"sigma_{j + 1}" for j in range(k)], "spread", "cmax"])
            for b, r in enumerate(self.records, start=1):
                sig = [repr(float(s)) for s in r.spectrum[:k]]
                w.writerow([b, *sig, repr(r.spread), repr(r.cmax)])


def gamma_coefficients(spectrum, clamp: float = 10.0) -> np.ndarray:
    """Reshaping gains min(ln(s_1 / s_j) + 1, clamp); a zero s_j gets the clamp."""
    s = np.asarray(spectrum, dtype=float)
    with np.errstate(divide="ignore"):
        g = np.log(s[0]) - np.log(s) + 1.0  # log difference avoids overflow in s_1 / s_j
    g = np.where(s > 0, np.minimum(g, clamp), clamp)
    g[0] = 1.0
    return g


def spread_metric(spectrum) -> tuple[float, int]:
    """Ratio of the largest to the smallest significant singular value, and their count."""
    s = np.asarray(spectrum, dtype=float)
    k = linear_argmax(s)
    return float(s[0] / s[k - 1]), k


def bootstrap_step(system: System, mode: ExplorationMode | str, C: np.ndarray,
                   params: BootstrapParams = BootstrapParams()) -> tuple[np.ndarray, StepRecord]:
    """One unstretching iteration on the (dof, N) matrix of command offsets from C0."""
    C = np.asarray(C, dtype=float)
    dof, N = C.shape
    if N <= dof:
        raise ValueError(f"insufficient exploration: N={N} must exceed dof={dof}")

    # No re-centring here: centring S without C would make the mean command look silent.
    S = sensory_variations(system, configs_from_offsets(system, mode, C))
    cmax = float(np.max(np.abs(C)))
    Cn = C / cmax
    smax = np.max(np.abs(S))
    Sn = S / smax if smax > 0 else S

    _, sigma, Vt = np.linalg.svd(Sn, full_matrices=True)
    r = min(Sn.shape)
    Vp = Cn @ Vt[:r].T  # command combinations behind each sensory direction
    V2p = Cn @ Vt[r:].T  # combinations with no sensory effect

    if V2p.shape[1]:
        U2, s2, _ = np.linalg.svd(V2p, full_matrices=False)
        silent = U2[:, s2 > params.significance_threshold]
    else:
        silent = np.zeros((dof, 0))
    if silent.shape[1]:
        Vp = Vp - silent @ np.linalg.pinv(silent, rcond=PINV_RCOND) @ Vp

    sv = np.linalg.svd(Vp, compute_uv=False)
    rank_sv = sv[: min(Vp.shape)]
    ill = bool(rank_sv[-1] == 0 or rank_sv[0] / rank_sv[-1] > COND_WARN)

    Cp = np.linalg.pinv(Vp, rcond=PINV_RCOND) @ Cn
    gamma = gamma_coefficients(sigma, params.clamp)
    C_new = Vp @ (gamma[:, None] * Cp)
    C_new *= cmax / np.max(np.abs(C_new))

    spread, k = spread_metric(sigma)
    rec = StepRecord(spectrum=sigma, gamma=gamma, cmax=cmax, n_significant=k, spread=spread,
                     n_silent=int(silent.shape[1]), ill_conditioned=ill)
    return C_new, rec


@dataclass(eq=False)
class BootstrapResult:
    offsets: np.ndarray  # (dof, N), scaled to the target amplitude
    configs: np.ndarray  # (N, n_dof)
    trace: BootstrapTrace
    variations: VariationMatrix


def initial_offsets(system: System, mode, amplitude: float, n: int, seed: int) -> np.ndarray:
    """Uniform command offsets rescaled so their largest magnitude is exactly ``amplitude``."""
    C = offsets_from_configs(system, mode, sample_configurations(system, mode, amplitude, n, seed))
    return C * (amplitude / np.max(np.abs(C)))


def run_bootstrap(system: System, mode: ExplorationMode | str, params: BootstrapParams,
                  n: int = 1000, seed: int = 0) -> BootstrapResult:
    """Bootstrap the exploration, then explore once more with the final commands.

    The infinitesimal strategy iterates at ``infinitesimal_amplitude`` and
    amplifies the last command set to ``target_amplitude``; the finite one
    iterates directly at the target amplitude.
    """
    mode = ExplorationMode.parse(mode)
    if params.strategy is Strategy.INFINITESIMAL:
        amp = params.infinitesimal_amplitude
    else:
        amp = params.target_amplitude
    C = initial_offsets(system, mode, amp, n, seed)
    trace = BootstrapTrace()
    for _ in range(params.iterations):
        C, rec = bootstrap_step(system, mode, C, params)
        trace.records.append(rec)
    C = C * (params.target_amplitude / np.max(np.abs(C)))
    configs = configs_from_offsets(system, mode, C)
    return BootstrapResult(C, configs, trace, explore(system, configs, mode, params.target_amplitude))
