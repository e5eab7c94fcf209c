"""Curvilinear Component Analysis and the cost-ratio dimension estimator.

CCA (Demartines & Herault, 1997) maps N points to p dimensions by
stochastic descent on

    J = 1/2 * sum_{i != j} (X_ij - Y_ij)^2 * F(Y_ij, lambda)

where X and Y are input and output pairwise distances and F is a step
neighbourhood (1 if Y_ij <= lambda else 0). Each epoch visits every point
once as a pivot, in random order, and moves all other points relative to
it; learning rate and lambda decay geometrically between their initial and
final values.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numba
import numpy as np
from scipy.spatial.distance import pdist, squareform

from sensodim.estimators import DimensionEstimate, Method
from sensodim.sim import rng_stream


@dataclass(frozen=True)
class CcaParams:
    iterations: int = 100
    lr_initial: float = 0.5
    lr_final: float = 5e-4
    neighborhood_initial: float = 4.0
    neighborhood_final: float = 0.2
    seed: int = 0
    input_radius: float | None = 0.2  # RMS radius the inputs are rescaled to; None keeps raw units

    def __post_init__(self):
        if self.input_radius is not None and not self.input_radius > 0:
            raise ValueError("CcaParams.input_radius must be positive or None")
        if self.iterations < 1:
            raise ValueError("CcaParams.iterations must be >= 1")
        if not self.lr_initial >= self.lr_final > 0:
            raise ValueError("CcaParams learning rates must satisfy lr_initial >= lr_final > 0")
        if not self.neighborhood_initial >= self.neighborhood_final > 0:
            raise ValueError("CcaParams neighbourhoods must satisfy initial >= final > 0")

    def schedule(self, epoch: int) -> tuple[float, float]:
        """Learning rate and neighbourhood radius for ``epoch`` in [0, iterations)."""
        frac = epoch / self.iterations
        lr = self.lr_initial * (self.lr_final / self.lr_initial) ** frac
        lam = self.neighborhood_initial * (self.neighborhood_final / self.neighborhood_initial) ** frac
        return lr, lam


@dataclass(eq=False)
class Projection:
    points: np.ndarray  # (p, N)
    cost: float
    p: int
    scale: float = 1.0  # factor applied to the inputs before projecting


@dataclass(eq=False)
class CostProfile:
    costs: dict[int, float]
    p_max: int

    def as_array(self) -> np.ndarray:
        return np.array([self.costs[p] for p in range(1, self.p_max + 1)])

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["p", "J"])
            for p in sorted(self.costs):
                w.writerow([p, repr(float(self.costs[p]))])


def cca_cost(input_dists, output_dists, lam: float) -> float:
    """CCA cost from matching pairwise distances with a step neighbourhood.

    Accepts condensed (pdist-style) or square distance arrays; square
    matrices are summed over ordered pairs i != j, condensed arrays count
    each unordered pair twice, so both give the same value.
    """
    X = np.asarray(input_dists, dtype=float)
    Y = np.asarray(output_dists, dtype=float)
    if X.shape != Y.shape:
        raise ValueError(f"distance arrays differ in shape: {X.shape} vs {Y.shape}")
    w = Y <= lam
    if X.ndim == 2:
        np.fill_diagonal(w := w.copy(), False)
        return float(0.5 * np.sum(((X - Y) ** 2)[w]))
    return float(np.sum(((X - Y) ** 2)[w]))


@numba.njit(cache=True, fastmath=True)
def _cca_epoch(X, Yt, order, lr, lam):
    # Yt is (p, N) so the distance and update loops vectorise over points.
    p, n = Yt.shape
    lam2 = lam * lam
    g = np.empty(n)
    yi = np.empty(p)
    for i in order:
        for k in range(p):
            yi[k] = Yt[k, i]
        g[:] = 0.0
        for k in range(p):
            row = Yt[k]
            c = yi[k]
            for j in range(n):
                diff = row[j] - c
                g[j] += diff * diff
        xi = X[i]
        for j in range(n):
            d2 = g[j]
            if d2 > lam2 or d2 == 0.0:
                g[j] = 0.0
            else:
                dy = np.sqrt(d2)
                g[j] = lr * (xi[j] - dy) / dy
        for k in range(p):
            row = Yt[k]
            c = yi[k]
            for j in range(n):
                row[j] += g[j] * (row[j] - c)


@numba.njit(cache=True, fastmath=True)
def _exact_cost(X, Yt, lam):
    p, n = Yt.shape
    total = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            d2 = 0.0
            for k in range(p):
                diff = Yt[k, i] - Yt[k, j]
                d2 += diff * diff
            dy = np.sqrt(d2)
            if dy <= lam:
                r = X[i, j] - dy
                total += r * r
    # each unordered pair counted once equals 1/2 of the ordered-pair sum
    return total


def _as_points(S) -> np.ndarray:
    data = getattr(S, "data", S)
    return np.asarray(data, dtype=float)


def rms_radius(data: np.ndarray) -> float:
    """Root-mean-square distance of the columns of ``data`` to their centroid."""
    centred = data - data.mean(axis=1, keepdims=True)
    return float(np.sqrt(np.mean(np.sum(centred**2, axis=0))))


def _input_scale(data: np.ndarray, params: CcaParams) -> float:
    if params.input_radius is None:
        return 1.0
    r = rms_radius(data)
    return params.input_radius / r if r > 0 else 1.0


def cca_project(S, p: int, params: CcaParams = CcaParams(), init: np.ndarray | None = None,
                input_dists: np.ndarray | None = None) -> Projection:
    """Project the columns of the n x N matrix ``S`` to ``p`` dimensions.

    Unless ``params.input_radius`` is None, the inputs are first rescaled to
    that RMS radius, so the neighbourhood radii are relative to the cloud size;
    the returned points and cost are in those rescaled units. Output points
    start uniform in [-1, 1]^p with the same RMS radius as the inputs, unless
    ``init`` (p x N, in input units) is given. The cost is recomputed exactly
    over all pairs with the final neighbourhood radius.
    """
    data = _as_points(S)
    n, N = data.shape
    if not 1 <= p <= n:
        raise ValueError(f"target dimension p={p} must lie in [1, {n}]")
    if N < 2:
        raise ValueError("CCA needs at least two points")
    scale = _input_scale(data, params)
    X = squareform(pdist(data.T)) * scale if input_dists is None else input_dists
    rng = rng_stream(params.seed, "cca", p)
    if init is None:
        rms = rms_radius(data) * scale
        Yt = rng.uniform(-1.0, 1.0, size=(p, N)) * rms / np.sqrt(p / 3.0)
    else:
        Yt = np.array(init, dtype=float) * scale
        if Yt.shape != (p, N):
            raise ValueError(f"init must have shape ({p}, {N})")
    for epoch in range(params.iterations):
        lr, lam = params.schedule(epoch)
        _cca_epoch(X, Yt, rng.permutation(N), lr, lam)
    cost = _exact_cost(X, Yt, params.neighborhood_final)
    return Projection(points=Yt, cost=float(cost), p=p, scale=scale)


def ratio_argmax(costs: np.ndarray) -> int:
    """Dimension from a cost profile J(1..p_max): argmax_p J(p-1)/J(p), p >= 2.

    A zero cost is decisive (infinite ratio); ties go to the smallest p.
    """
    costs = np.asarray(costs, dtype=float)
    if np.all(costs == 0):
        raise ValueError("degenerate profile: all costs are zero")
    for p in range(2, len(costs) + 1):
        if costs[p - 1] == 0 and costs[p - 2] > 0:
            return p
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = costs[:-1] / costs[1:]
    ratios = np.where(np.isnan(ratios), -np.inf, ratios)
    return int(np.argmax(ratios)) + 2


def cost_profile(S, p_max: int = 15, params: CcaParams = CcaParams()) -> CostProfile:
    data = _as_points(S)
    if not 2 <= p_max <= data.shape[0]:
        raise ValueError(f"p_max={p_max} must lie in [2, {data.shape[0]}]")
    X = squareform(pdist(data.T)) * _input_scale(data, params)
    costs = {p: cca_project(data, p, params, input_dists=X).cost for p in range(1, p_max + 1)}
    return CostProfile(costs, p_max)


def estimate_dim_cca(S, p_max: int = 15, params: CcaParams = CcaParams(),
                     method: Method = Method.CCA) -> DimensionEstimate:
    """Intrinsic dimension from the ratios of successive CCA projection costs."""
    profile = cost_profile(S, p_max, params)
    return DimensionEstimate(ratio_argmax(profile.as_array()), Method(method), profile)
