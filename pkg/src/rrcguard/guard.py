"""Attribution-distribution guard against evasion, and label-flip mitigation.

Attributions of the anomaly score are collected on Normal training rows and
summarized per feature. At run time an input whose attribution for any
feature leaves the band ``mu_j +/- lambda * sigma_j`` (bounds inclusive) is
flagged as manipulated. A density mode based on per-feature Gaussian KDEs
is available as an alternative decision surface.
"""
from __future__ import annotations

import csv
import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import InsufficientDataError, RejectedInputError
from .explain import BackgroundSet, Explainer, Explanation, Method
from .ids import IdsModel, IdsVerdict, Verdict

MIN_PROFILE_ROWS = 30
PROFILE_FORMAT_VERSION = 1


class GuardMode(enum.Enum):
    GAUSSIAN_RANGE = "GaussianRange"
    KDE_DENSITY = "KdeDensity"


@dataclass(frozen=True)
class GuardConfig:
    lam: float = 2.0
    sigma_floor: float = 1e-6
    mode: GuardMode = GuardMode.GAUSSIAN_RANGE
    kde_density_quantile: float = 0.05

    def __post_init__(self):
        object.__setattr__(self, "mode", GuardMode(self.mode))
        if not self.lam > 0:
            raise RejectedInputError("lambda must be positive")
        if not self.sigma_floor > 0:
            raise RejectedInputError("sigma_floor must be positive")
        if not 0 < self.kde_density_quantile < 1:
            raise RejectedInputError("kde_density_quantile must lie in (0, 1)")


@dataclass
class FeatureKde:
    samples: np.ndarray  # (n_fit, m) training attributions
    bandwidth: np.ndarray  # (m,)
    density_threshold: np.ndarray  # (m,) quantile of training densities

    def density(self, j: int, value: float) -> float:
        h = self.bandwidth[j]
        u = (value - self.samples[:, j]) / h
        return float(np.mean(np.exp(-0.5 * u * u)) / (h * math.sqrt(2.0 * math.pi)))


@dataclass
class ShapProfile:
    mu: np.ndarray
    sigma: np.ndarray
    n_fit: int
    explainer_method: Method
    kde: FeatureKde | None = None
    # explainer settings captured at fit time so checks reuse them
    background: np.ndarray | None = field(default=None, repr=False)
    explainer_seed: int | None = None

    def explainer(self) -> Explainer:
        if self.background is None:
            raise RejectedInputError("profile does not carry its explainer background")
        return Explainer(self.explainer_method, BackgroundSet(self.background), seed=self.explainer_seed or 0)

    def to_dict(self) -> dict:
        doc = {
            "format_version": PROFILE_FORMAT_VERSION,
            "mu": self.mu.tolist(),
            "sigma": self.sigma.tolist(),
            "n_fit": self.n_fit,
            "method": self.explainer_method.value,
            "kde": None,
            "background": None if self.background is None else self.background.tolist(),
            "explainer_seed": self.explainer_seed,
        }
        if self.kde is not None:
            doc["kde"] = {
                "samples": self.kde.samples.tolist(),
                "bandwidth": self.kde.bandwidth.tolist(),
                "density_threshold": self.kde.density_threshold.tolist(),
            }
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "ShapProfile":
        if doc.get("format_version") != PROFILE_FORMAT_VERSION:
            raise RejectedInputError("unsupported profile format_version")
        kde = None
        if doc.get("kde"):
            k = doc["kde"]
            kde = FeatureKde(np.array(k["samples"]), np.array(k["bandwidth"]), np.array(k["density_threshold"]))
        bg = doc.get("background")
        return cls(
            np.array(doc["mu"]), np.array(doc["sigma"]), int(doc["n_fit"]), Method(doc["method"]), kde,
            None if bg is None else np.array(bg), doc.get("explainer_seed"),
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path) -> "ShapProfile":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class GuardVerdict:
    decision: Verdict
    violating_features: frozenset[int]
    margins: np.ndarray


def silverman_bandwidth(values, floor: float = 1e-6) -> float:
    """``0.9 * min(sd, IQR/1.34) * n^(-1/5)``, floored.

    When one of the two spread measures is zero (for instance a sample
    dominated by identical values has IQR 0) the other is used.
    """
    values = np.asarray(values, dtype=np.float64)
    sd = float(np.std(values))
    q75, q25 = np.percentile(values, [75, 25])
    iqr = float(q75 - q25) / 1.34
    spread = min(sd, iqr) if sd > 0 and iqr > 0 else max(sd, iqr)
    return max(0.9 * spread * len(values) ** -0.2, floor)


def _fit_kde(A: np.ndarray, cfg: GuardConfig) -> FeatureKde:
    m = A.shape[1]
    bw = np.array([silverman_bandwidth(A[:, j], cfg.sigma_floor) for j in range(m)])
    kde = FeatureKde(A, bw, np.zeros(m))
    thresholds = []
    for j in range(m):
        dens = [kde.density(j, a) for a in A[:, j]]
        thresholds.append(np.quantile(dens, cfg.kde_density_quantile))
    kde.density_threshold = np.array(thresholds)
    return kde


def fit_profile(
    training_rows, ids: IdsModel, explainer: Explainer, cfg: GuardConfig | None = None
) -> ShapProfile:
    """Explain every scaled Normal row and record per-feature mean and sd.

    The sd is the population value, floored at ``cfg.sigma_floor``. A KDE
    is fitted too when the configured mode needs it.
    """
    cfg = cfg or GuardConfig()
    X = np.atleast_2d(np.asarray(training_rows, dtype=np.float64))
    if X.shape[0] < MIN_PROFILE_ROWS:
        raise InsufficientDataError(f"need at least {MIN_PROFILE_ROWS} rows, got {X.shape[0]}")
    A = np.array([e.attributions for e in explainer.explain_many(ids.score_scaled, X)])
    profile = profile_from_attributions(A, explainer.method, cfg)
    profile.background = explainer.background.rows.copy()
    profile.explainer_seed = explainer.seed
    return profile


def profile_from_attributions(A, method: Method, cfg: GuardConfig | None = None) -> ShapProfile:
    cfg = cfg or GuardConfig()
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    if A.shape[0] < MIN_PROFILE_ROWS:
        raise InsufficientDataError(f"need at least {MIN_PROFILE_ROWS} rows, got {A.shape[0]}")
    sigma = np.maximum(A.std(axis=0), cfg.sigma_floor)
    kde = _fit_kde(A, cfg) if cfg.mode is GuardMode.KDE_DENSITY else None
    return ShapProfile(A.mean(axis=0), sigma, A.shape[0], method, kde)


def check(profile: ShapProfile, explanation: Explanation, cfg: GuardConfig | None = None) -> GuardVerdict:
    cfg = cfg or GuardConfig()
    if explanation.method is not profile.explainer_method:
        raise RejectedInputError(
            f"profile was fitted with {profile.explainer_method.value}, "
            f"explanation uses {explanation.method.value}"
        )
    S = np.asarray(explanation.attributions, dtype=np.float64)
    sigma = np.maximum(profile.sigma, cfg.sigma_floor)
    margins = np.abs(S - profile.mu) / sigma
    if cfg.mode is GuardMode.GAUSSIAN_RANGE:
        lo = profile.mu - cfg.lam * sigma
        hi = profile.mu + cfg.lam * sigma
        bad = (S < lo) | (S > hi)
    else:
        if profile.kde is None:
            raise RejectedInputError("profile has no KDE; refit with mode KdeDensity")
        bad = np.array(
            [kde_density(profile, j, S[j]) < profile.kde.density_threshold[j] for j in range(S.size)]
        )
    violating = frozenset(int(j) for j in np.flatnonzero(bad))
    return GuardVerdict(Verdict.ATTACK if violating else Verdict.NORMAL, violating, margins)


def kde_density(profile: ShapProfile, j: int, value: float) -> float:
    if profile.kde is None:
        raise RejectedInputError("profile has no KDE")
    return profile.kde.density(j, value)


def mitigate(ids_verdict: IdsVerdict | Verdict, guard_verdict: GuardVerdict | Verdict) -> Verdict:
    """Final label: a guard flag forces Attack; otherwise the IDS label stands."""
    ids_label = ids_verdict.predicted if isinstance(ids_verdict, IdsVerdict) else Verdict(ids_verdict)
    guard_label = guard_verdict.decision if isinstance(guard_verdict, GuardVerdict) else Verdict(guard_verdict)
    if guard_label is Verdict.ATTACK:
        return Verdict.ATTACK
    return ids_label


def write_verdicts_csv(verdicts: Sequence[GuardVerdict], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        m = len(verdicts[0].margins) if verdicts else 5
        w.writerow(["decision", "violating_features"] + [f"margin_{j + 1}" for j in range(m)])
        for v in verdicts:
            feats = ";".join(str(j + 1) for j in sorted(v.violating_features))
            w.writerow([v.decision.value, feats] + [repr(float(x)) for x in v.margins])
