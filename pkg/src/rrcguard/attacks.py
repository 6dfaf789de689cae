"""White-box evasion attacks that push storm windows under the IDS threshold.

Every method works in the scaled feature box and lowers the anomaly
distance: gradient methods step along ``-sign(grad d)``. Budgets are L-inf.
Batch functions take ``(rows, 5)`` arrays; single vectors are accepted too.
"""
from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import RejectedInputError
from .ids import IdsModel
from .rng import RngStream
from .sim import N_FEATURES, Label, WindowFeatures


class AttackKind(enum.Enum):
    NO_ATTACK = "NoAttack"
    FGSM = "FGSM"
    BIM = "BIM"
    PGD = "PGD"
    GAUSSIAN = "Gaussian"


GRADIENT_KINDS = (AttackKind.FGSM, AttackKind.BIM, AttackKind.PGD)
LINF_SLACK = 1e-9


@dataclass(frozen=True)
class AttackConfig:
    kind: AttackKind = AttackKind.NO_ATTACK
    epsilon: float = 0.0
    step_alpha: float | None = None  # None -> epsilon / 10
    steps: int = 20
    seed: int = 0
    clip_lo: tuple[float, ...] = (0.0,) * N_FEATURES
    clip_hi: tuple[float, ...] = (1.0,) * N_FEATURES

    def __post_init__(self):
        object.__setattr__(self, "kind", AttackKind(self.kind))
        if not self.epsilon >= 0:
            raise RejectedInputError("epsilon must be nonnegative")
        if self.kind in (AttackKind.BIM, AttackKind.PGD):
            if self.steps < 1:
                raise RejectedInputError("iterative attacks need steps >= 1")
            if self.epsilon > 0 and not 0 < self.alpha <= self.epsilon:
                raise RejectedInputError("step_alpha must lie in (0, epsilon]")
        if np.any(np.asarray(self.clip_lo) > np.asarray(self.clip_hi)):
            raise RejectedInputError("clip_lo must not exceed clip_hi")

    @property
    def alpha(self) -> float:
        return self.epsilon / 10.0 if self.step_alpha is None else self.step_alpha


def _batch(x) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    return np.atleast_2d(x).copy(), x.ndim == 1


def _out(X, single):
    return X[0] if single else X


def _domain(lo, hi):
    return np.asarray(lo, dtype=np.float64), np.asarray(hi, dtype=np.float64)


def fgsm(ids: IdsModel, x_scaled, eps: float, clip_lo=(0.0,) * 5, clip_hi=(1.0,) * 5):
    """Single step ``clip(x - eps * sign(grad d))``; sign(0) = 0."""
    if not eps >= 0:
        raise RejectedInputError("eps must be nonnegative")
    X, single = _batch(x_scaled)
    if eps == 0:
        return _out(X, single)
    lo, hi = _domain(clip_lo, clip_hi)
    _, g = ids.score_and_grad(X)
    X = X - eps * np.sign(g)
    return _out(np.clip(X, lo, hi), single)


def _iterate(ids, X0, start, eps, alpha, steps, lo, hi):
    ball_lo, ball_hi = X0 - eps, X0 + eps
    X = start
    for _ in range(steps):
        _, g = ids.score_and_grad(X)
        X = X - alpha * np.sign(g)
        X = np.clip(np.clip(X, ball_lo, ball_hi), lo, hi)
    return X


def bim(ids: IdsModel, x_scaled, eps: float, alpha: float, steps: int, clip_lo=(0.0,) * 5, clip_hi=(1.0,) * 5):
    """Iterated sign steps from ``x``, projected onto the eps-ball and the box."""
    X, single = _batch(x_scaled)
    if eps == 0:
        return _out(X, single)
    lo, hi = _domain(clip_lo, clip_hi)
    return _out(_iterate(ids, X, X, eps, alpha, steps, lo, hi), single)


def pgd(
    ids: IdsModel, x_scaled, eps: float, alpha: float, steps: int, seed: int = 0,
    clip_lo=(0.0,) * 5, clip_hi=(1.0,) * 5,
):
    """BIM started from a seeded uniform point in the eps-ball."""
    X, single = _batch(x_scaled)
    if eps == 0:
        return _out(X, single)
    lo, hi = _domain(clip_lo, clip_hi)
    start = np.clip(X + RngStream(seed).uniform(X.shape, -eps, eps), lo, hi)
    return _out(_iterate(ids, X, start, eps, alpha, steps, lo, hi), single)


def gaussian(x_scaled, eps: float, seed: int = 0, clip_lo=(0.0,) * 5, clip_hi=(1.0,) * 5):
    """Add N(0, eps^2) noise per coordinate, then clip to the box.

    Not L-inf bounded; ``eps`` is the noise standard deviation.
    """
    if not eps >= 0:
        raise RejectedInputError("eps must be nonnegative")
    X, single = _batch(x_scaled)
    if eps == 0:
        return _out(X, single)
    lo, hi = _domain(clip_lo, clip_hi)
    return _out(np.clip(X + eps * RngStream(seed).normal(X.shape), lo, hi), single)


def perturb(ids: IdsModel, X_scaled, config: AttackConfig) -> np.ndarray:
    """Apply ``config`` to a batch of scaled rows."""
    X = np.atleast_2d(np.asarray(X_scaled, dtype=np.float64))
    c = config
    if c.kind is AttackKind.NO_ATTACK:
        return X.copy()
    if c.kind is AttackKind.FGSM:
        return fgsm(ids, X, c.epsilon, c.clip_lo, c.clip_hi)
    if c.kind is AttackKind.BIM:
        return bim(ids, X, c.epsilon, c.alpha, c.steps, c.clip_lo, c.clip_hi)
    if c.kind is AttackKind.PGD:
        return pgd(ids, X, c.epsilon, c.alpha, c.steps, c.seed, c.clip_lo, c.clip_hi)
    return gaussian(X, c.epsilon, c.seed, c.clip_lo, c.clip_hi)


@dataclass
class AdversarialBatch:
    originals: list[WindowFeatures]
    perturbed: np.ndarray
    config: AttackConfig
    scaled_originals: np.ndarray = field(repr=False)

    def linf(self) -> np.ndarray:
        return np.max(np.abs(self.perturbed - self.scaled_originals), axis=1)

    def write_csv(self, path) -> None:
        """Both column groups are in scaled feature space."""
        names = ["f1", "f2", "f3", "f4", "f5"]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"orig_{n}" for n in names] + [f"pert_{n}" for n in names] + ["method", "epsilon"])
            for o, p in zip(self.scaled_originals, self.perturbed):
                w.writerow(
                    [repr(v) for v in o.tolist()]
                    + [repr(v) for v in p.tolist()]
                    + [self.config.kind.value, repr(self.config.epsilon)]
                )


def attack_batch(ids: IdsModel, rows: Sequence[WindowFeatures], config: AttackConfig) -> AdversarialBatch:
    """Disguise attack-labeled windows; other labels are rejected."""
    if not rows:
        raise RejectedInputError("no rows to attack")
    wrong = [r.label for r in rows if r.label is not Label.ATTACK]
    if wrong:
        raise RejectedInputError(f"only Attack rows are perturbed; got {len(wrong)} other rows")
    Xs = ids.scale(np.array([r.vector() for r in rows]))
    return AdversarialBatch(list(rows), perturb(ids, Xs, config), config, Xs)
