"""Autoencoder intrusion detector scored by Euclidean reconstruction distance."""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import nn
from .errors import InsufficientDataError, RejectedInputError
from .sim import Label, Scaler, WindowFeatures

MIN_TRAINING_ROWS = 50
DEFAULT_Z = 2.0
IDS_FORMAT_VERSION = 1


class Verdict(enum.Enum):
    NORMAL = "Normal"
    ATTACK = "Attack"


@dataclass(frozen=True)
class IdsVerdict:
    score_d: float
    predicted: Verdict


@dataclass
class IdsModel:
    autoencoder: nn.MlpModel
    scaler: Scaler
    threshold_tau: float
    score_mean_mu_d: float
    score_sd_sigma_d: float
    zscore_z: float = DEFAULT_Z

    def __post_init__(self):
        if not np.isclose(
            self.threshold_tau, self.score_mean_mu_d + self.zscore_z * self.score_sd_sigma_d, rtol=0, atol=1e-12
        ):
            raise RejectedInputError("threshold_tau must equal mu_d + z * sigma_d")

    @classmethod
    def from_scores(cls, autoencoder, scaler, scores, z: float = DEFAULT_Z) -> "IdsModel":
        scores = np.asarray(scores, dtype=np.float64)
        mu, sd = float(scores.mean()), float(scores.std())
        return cls(autoencoder, scaler, mu + z * sd, mu, sd, z)

    def with_z(self, z: float) -> "IdsModel":
        if not z > 0:
            raise RejectedInputError("z must be positive")
        mu, sd = self.score_mean_mu_d, self.score_sd_sigma_d
        return IdsModel(self.autoencoder, self.scaler, mu + z * sd, mu, sd, z)

    # scoring in scaled space ---------------------------------------------

    def scale(self, X_raw) -> np.ndarray:
        return self.scaler.transform(np.atleast_2d(np.asarray(X_raw, dtype=np.float64)))

    def score_scaled(self, X_scaled) -> np.ndarray:
        """Anomaly distances for a batch of already-scaled rows."""
        return nn.distance_batch(self.autoencoder, X_scaled)

    def score_and_grad(self, X_scaled) -> tuple[np.ndarray, np.ndarray]:
        return nn.distance_and_grad(self.autoencoder, X_scaled)

    def predict_scaled(self, X_scaled) -> list[Verdict]:
        return [Verdict.ATTACK if d > self.threshold_tau else Verdict.NORMAL for d in self.score_scaled(X_scaled)]

    # persistence -----------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "format_version": IDS_FORMAT_VERSION,
            "autoencoder": self.autoencoder.to_dict(),
            "scaler": self.scaler.to_dict(),
            "threshold": {
                "tau": self.threshold_tau,
                "mu_d": self.score_mean_mu_d,
                "sigma_d": self.score_sd_sigma_d,
                "z": self.zscore_z,
            },
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "IdsModel":
        if doc.get("format_version") != IDS_FORMAT_VERSION:
            raise RejectedInputError(f"unsupported IDS format_version {doc.get('format_version')!r}")
        t = doc["threshold"]
        return cls(
            nn.MlpModel.from_dict(doc["autoencoder"]),
            Scaler.from_dict(doc["scaler"]),
            t["tau"],
            t["mu_d"],
            t["sigma_d"],
            t["z"],
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path) -> "IdsModel":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _raw_matrix(rows) -> np.ndarray:
    if rows and isinstance(rows[0], WindowFeatures):
        return np.array([r.vector() for r in rows])
    return np.atleast_2d(np.asarray(rows, dtype=np.float64))


def train_ids(
    normal_rows: Sequence[WindowFeatures],
    net_config: nn.TrainConfig | None = None,
    z: float = DEFAULT_Z,
    dims: Sequence[int] = (5, 4, 2, 4, 5),
) -> IdsModel:
    """Fit scaler and autoencoder on Normal windows and calibrate the threshold.

    ``tau = mu_d + z * sigma_d`` over the training rows' own scores
    (population standard deviation).
    """
    net_config = net_config or nn.TrainConfig()
    if not z > 0:
        raise RejectedInputError("z must be positive")
    bad = [r for r in normal_rows if r.label is not Label.NORMAL]
    if bad:
        raise RejectedInputError(f"{len(bad)} training rows are not labeled Normal")
    if len(normal_rows) < MIN_TRAINING_ROWS:
        raise InsufficientDataError(
            f"need at least {MIN_TRAINING_ROWS} Normal rows, got {len(normal_rows)}"
        )
    X = _raw_matrix(normal_rows)
    scaler = Scaler.fit(X)
    Xs = scaler.transform(X)
    ae, _ = nn.fit_autoencoder(Xs, net_config, dims)
    return IdsModel.from_scores(ae, scaler, nn.distance_batch(ae, Xs), z)


def anomaly_score(model: IdsModel, x_raw) -> float:
    """Euclidean distance between the scaled vector and its reconstruction."""
    x = np.asarray(x_raw, dtype=np.float64)
    if not np.isfinite(x).all():
        raise RejectedInputError("input contains non-finite values")
    return float(model.score_scaled(model.scale(x))[0])


def classify(model: IdsModel, x_raw) -> IdsVerdict:
    d = anomaly_score(model, x_raw)
    # strict exceedance: a score equal to tau is Normal
    return IdsVerdict(d, Verdict.ATTACK if d > model.threshold_tau else Verdict.NORMAL)
