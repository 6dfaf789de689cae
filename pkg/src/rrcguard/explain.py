"""Model-agnostic attributions of a scalar score function.

``f`` is always vectorized: it maps an ``(n, m)`` array of rows to ``n``
scores. Missing features are filled from a background sample
(interventional semantics).
"""
from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DegenerateSamplingError, RejectedInputError
from .rng import RngStream

ScoreFn = Callable[[np.ndarray], np.ndarray]
MAX_EXACT_FEATURES = 12


class Method(enum.Enum):
    SHAP_EXACT = "ShapExact"
    SHAP_KERNEL = "ShapKernel"
    LIME = "Lime"
    PERMUTATION = "Permutation"


@dataclass(frozen=True)
class Explanation:
    attributions: np.ndarray
    base_value: float
    method: Method
    target_score: float


@dataclass
class BackgroundSet:
    rows: np.ndarray

    def __post_init__(self):
        self.rows = np.atleast_2d(np.asarray(self.rows, dtype=np.float64))
        if self.rows.shape[0] == 0:
            raise RejectedInputError("background set is empty")

    @classmethod
    def sample(cls, rows, max_size: int = 100, seed: int = 0) -> "BackgroundSet":
        rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))
        if len(rows) > max_size:
            idx = np.sort(RngStream(seed).permutation(len(rows))[:max_size])
            rows = rows[idx]
        return cls(rows)

    @property
    def mean(self) -> np.ndarray:
        return self.rows.mean(axis=0)


def _coalition_values(f: ScoreFn, x: np.ndarray, bg: np.ndarray, masks: np.ndarray) -> np.ndarray:
    """v(S) = mean over background rows of f(x on S, background elsewhere)."""
    n_bg = bg.shape[0]
    comp = np.where(masks[:, None, :], x[None, None, :], bg[None, :, :])
    scores = np.asarray(f(comp.reshape(-1, x.size)), dtype=np.float64)
    return scores.reshape(len(masks), n_bg).mean(axis=1)


def _all_masks(m: int) -> np.ndarray:
    # row k is the binary expansion of k (feature j <-> bit j)
    k = np.arange(2**m)[:, None]
    return ((k >> np.arange(m)[None, :]) & 1).astype(bool)


def shap_exact(f: ScoreFn, x, bg: BackgroundSet) -> Explanation:
    """Exact interventional Shapley values by enumerating all 2^m coalitions."""
    x = np.asarray(x, dtype=np.float64)
    m = x.size
    if m > MAX_EXACT_FEATURES:
        raise RejectedInputError(f"{m} features is too many for enumeration; use shap_kernel")
    masks = _all_masks(m)
    v = _coalition_values(f, x, bg.rows, masks)
    sizes = masks.sum(axis=1)
    weight = np.array([math.factorial(s) * math.factorial(m - s - 1) / math.factorial(m) for s in range(m)])
    phi = np.zeros(m)
    for j in range(m):
        bit = 1 << j
        without = np.flatnonzero(~masks[:, j])
        phi[j] = np.sum(weight[sizes[without]] * (v[without | bit] - v[without]))
    return Explanation(phi, float(v[0]), Method.SHAP_EXACT, float(v[-1]))


def shapley_kernel_weight(m: int, s: int) -> float:
    return (m - 1) / (math.comb(m, s) * s * (m - s))


def _solve_constrained(Z: np.ndarray, y: np.ndarray, w: np.ndarray, total: float) -> np.ndarray:
    """Weighted least squares for ``y ~ Z phi`` subject to ``sum(phi) = total``.

    The last coefficient is eliminated through the constraint.
    """
    A = Z[:, :-1] - Z[:, -1:]
    b = y - Z[:, -1] * total
    AtW = A.T * w
    lhs = AtW @ A
    if np.linalg.matrix_rank(lhs) < lhs.shape[0]:
        raise np.linalg.LinAlgError("singular coalition design")
    head = np.linalg.solve(lhs, AtW @ b)
    return np.append(head, total - head.sum())


def shap_kernel(
    f: ScoreFn, x, bg: BackgroundSet, n_samples: int = 64, seed: int = 0, enumerate_all: bool = False
) -> Explanation:
    """Kernel SHAP: Shapley-kernel-weighted regression over coalitions.

    With ``enumerate_all`` (or when ``n_samples`` covers every proper
    coalition) all ``2^m - 2`` proper coalitions are used with their exact
    kernel weights, which reproduces exact Shapley values. Otherwise
    coalitions are drawn with probability proportional to the kernel and
    weighted equally. The empty and full coalitions enter as the exact
    efficiency constraint.
    """
    x = np.asarray(x, dtype=np.float64)
    m = x.size
    if n_samples < 2 * m + 2:
        raise RejectedInputError(f"n_samples must be at least {2 * m + 2}")
    ends = _coalition_values(f, x, bg.rows, np.array([np.zeros(m, bool), np.ones(m, bool)]))
    base, target = float(ends[0]), float(ends[1])
    if enumerate_all or n_samples >= 2**m - 2:
        Z = _all_masks(m)[1:-1]
        w = np.array([shapley_kernel_weight(m, int(s)) for s in Z.sum(axis=1)])
        y = _coalition_values(f, x, bg.rows, Z) - base
        try:
            phi = _solve_constrained(Z.astype(float), y, w, target - base)
        except np.linalg.LinAlgError as exc:
            raise DegenerateSamplingError("full coalition enumeration is singular") from exc
        return Explanation(phi, base, Method.SHAP_KERNEL, target)

    sizes = np.arange(1, m)
    size_mass = np.array([shapley_kernel_weight(m, s) * math.comb(m, s) for s in sizes])
    size_p = size_mass / size_mass.sum()
    rng = RngStream(seed)
    for _attempt in range(2):
        picks = sizes[np.searchsorted(np.cumsum(size_p), rng.uniform(n_samples), side="right").clip(0, m - 2)]
        Z = np.zeros((n_samples, m), dtype=bool)
        for i, s in enumerate(picks):
            Z[i, rng.permutation(m)[:s]] = True
        y = _coalition_values(f, x, bg.rows, Z) - base
        try:
            phi = _solve_constrained(Z.astype(float), y, np.ones(n_samples), target - base)
        except np.linalg.LinAlgError:
            continue
        return Explanation(phi, base, Method.SHAP_KERNEL, target)
    raise DegenerateSamplingError("sampled coalition design stayed singular after a retry")


def lime_local(
    f: ScoreFn,
    x,
    bg: BackgroundSet,
    sigma_perturb: float = 0.05,
    n_samples: int = 500,
    ridge_gamma: float = 1e-6,
    seed: int = 0,
    clip_lo: float = 0.0,
    clip_hi: float = 1.0,
) -> Explanation:
    """Local weighted-ridge surrogate around ``x``.

    Samples ``x + N(0, sigma^2)`` clipped to the box, weights them by
    ``exp(-|delta|^2 / (2 sigma^2))`` and regresses the score on the
    offsets. The attribution of feature j is its slope times
    ``x_j - mean_bg_j``.
    """
    x = np.asarray(x, dtype=np.float64)
    if n_samples < 20:
        raise RejectedInputError("lime_local needs n_samples >= 20")
    if not sigma_perturb > 0:
        raise RejectedInputError("sigma_perturb must be positive")
    m = x.size
    rng = RngStream(seed)
    sigma = sigma_perturb
    for _attempt in range(2):
        P = np.clip(x + sigma * rng.normal((n_samples, m)), clip_lo, clip_hi)
        delta = P - x
        w = np.exp(-np.sum(delta * delta, axis=1) / (2.0 * sigma * sigma))
        y = np.asarray(f(P), dtype=np.float64)
        A = np.hstack([np.ones((n_samples, 1)), delta])
        AtW = A.T * w
        lhs = AtW @ A
        lhs[1:, 1:] += ridge_gamma * np.eye(m)
        if np.linalg.matrix_rank(lhs) == m + 1:
            coef = np.linalg.solve(lhs, AtW @ y)[1:]
            break
        sigma *= 2.0
    else:
        raise DegenerateSamplingError("LIME design matrix is degenerate even after widening sigma")
    base = float(np.mean(f(bg.rows)))
    target = float(f(x[None, :])[0])
    return Explanation(coef * (x - bg.mean), base, Method.LIME, target)


def permutation_importance(f: ScoreFn, x, bg: BackgroundSet, n_draws: int = 50, seed: int = 0) -> Explanation:
    """Mean change in score when feature j alone is swapped for a background value."""
    x = np.asarray(x, dtype=np.float64)
    if n_draws < 10:
        raise RejectedInputError("permutation_importance needs n_draws >= 10")
    m = x.size
    rng = RngStream(seed)
    idx = rng.integers(0, bg.rows.shape[0], size=(m, n_draws))
    batch = np.repeat(x[None, :], m * n_draws, axis=0).reshape(m, n_draws, m)
    for j in range(m):
        batch[j, :, j] = bg.rows[idx[j], j]
    target = float(f(x[None, :])[0])
    scores = np.asarray(f(batch.reshape(-1, m)), dtype=np.float64).reshape(m, n_draws)
    base = float(np.mean(f(bg.rows)))
    return Explanation(scores.mean(axis=1) - target, base, Method.PERMUTATION, target)


@dataclass(frozen=True)
class Explainer:
    """A method bound to its background and settings, so fits and checks match."""

    method: Method
    background: BackgroundSet = field(repr=False)
    seed: int = 0
    kernel_samples: int = 64
    kernel_enumerate: bool = True
    lime_sigma: float = 0.05
    lime_samples: int = 500
    lime_gamma: float = 1e-6
    permutation_draws: int = 50

    def explain(self, f: ScoreFn, x) -> Explanation:
        m = self.method
        if m is Method.SHAP_EXACT:
            return shap_exact(f, x, self.background)
        if m is Method.SHAP_KERNEL:
            return shap_kernel(f, x, self.background, self.kernel_samples, self.seed, self.kernel_enumerate)
        if m is Method.LIME:
            return lime_local(
                f, x, self.background, self.lime_sigma, self.lime_samples, self.lime_gamma, self.seed
            )
        return permutation_importance(f, x, self.background, self.permutation_draws, self.seed)

    def explain_many(self, f: ScoreFn, X) -> list[Explanation]:
        return [self.explain(f, x) for x in np.atleast_2d(X)]


def write_explanations_csv(explanations, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        m = len(explanations[0].attributions) if explanations else 5
        w.writerow(["method", "target_score", "base_value"] + [f"S_{j + 1}" for j in range(m)])
        for e in explanations:
            w.writerow([e.method.value, repr(e.target_score), repr(e.base_value)] + [repr(float(a)) for a in e.attributions])
