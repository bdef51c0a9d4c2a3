"""Composite training loss.

The total loss is a sum of up to four terms over a minibatch of M
in-distribution samples (targets y, predictions y_hat, emitted checksum
c_hat) and optionally M' synthetic out-of-distribution samples
(predictions y_hat', emitted checksum c_hat'):

* prediction   mean over samples of the per-sample mean squared error
* checksum     mean over samples of (C(y) - c_hat)^2 / k
* id penalty   lambda_id * mean over samples of (C(y_hat) - c_hat)^2
* ood reward   lambda_ood / (mean over OOD samples of (C(y_hat') - c_hat')^2 + eps)

The id penalty pushes the emitted checksum to agree with the checksum
recomputed from the network's own predictions on in-distribution data;
the ood reward pushes that same agreement apart on shell samples, which
is what makes the gap a detection signal.
"""

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .checksum import ChecksumSpec, checksum_batch
from .errors import ConfigError, ShapeError

VARIANTS = ("base", "base+id", "base+ood", "base+id+ood")

DEFAULT_LAMBDA_ID = 0.01
DEFAULT_LAMBDA_OOD = 0.01
DEFAULT_EPSILON = 1e-8


@dataclass(frozen=True)
class LossConfig:
    """Which terms are active and their weights."""

    use_id_term: bool = False
    use_ood_term: bool = False
    lambda_id: float = DEFAULT_LAMBDA_ID
    lambda_ood: float = DEFAULT_LAMBDA_OOD
    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self):
        for name in ("lambda_id", "lambda_ood"):
            v = float(getattr(self, name))
            if not np.isfinite(v) or v < 0.0:
                raise ConfigError(f"{name} must be finite and non-negative, got {v!r}")
            object.__setattr__(self, name, v)
        eps = float(self.epsilon)
        if not np.isfinite(eps) or eps <= 0.0:
            raise ConfigError(f"epsilon must be finite and positive, got {self.epsilon!r}")
        object.__setattr__(self, "epsilon", eps)

    @classmethod
    def from_variant(cls, name: str, **kwargs) -> "LossConfig":
        """Build a config from a variant name like ``base+id+ood``."""
        if name not in VARIANTS:
            raise ConfigError(f"unknown loss variant {name!r}; expected one of {VARIANTS}")
        parts = name.split("+")
        return cls(use_id_term="id" in parts, use_ood_term="ood" in parts, **kwargs)

    @property
    def variant_name(self) -> str:
        name = "base"
        if self.use_id_term:
            name += "+id"
        if self.use_ood_term:
            name += "+ood"
        return name


class LossTerms(NamedTuple):
    """Individual loss term values; disabled terms are reported as 0.0."""

    prediction: float
    checksum: float
    id_penalty: float
    ood_reward: float


def _check_batch(y, y_hat, c_hat):
    y = np.asarray(y, dtype=np.float64)
    y_hat = np.asarray(y_hat, dtype=np.float64)
    c_hat = np.asarray(c_hat, dtype=np.float64)
    if y.ndim != 2 or y_hat.ndim != 2:
        raise ShapeError(f"targets and predictions must be 2-D, got {y.shape} and {y_hat.shape}")
    if y.shape != y_hat.shape:
        raise ShapeError(f"target shape {y.shape} does not match prediction shape {y_hat.shape}")
    if y.shape[0] == 0 or y.shape[1] == 0:
        raise ShapeError(f"empty batch: shape {y.shape}")
    if c_hat.shape != (y.shape[0],):
        raise ShapeError(f"c_hat shape {c_hat.shape} does not match batch size {y.shape[0]}")
    return y, y_hat, c_hat


def loss_prediction(y, y_hat) -> float:
    """Mean over samples of the per-sample mean squared prediction error."""
    y = np.asarray(y, dtype=np.float64)
    y_hat = np.asarray(y_hat, dtype=np.float64)
    if y.shape != y_hat.shape or y.ndim != 2:
        raise ShapeError(f"need matching 2-D arrays, got {y.shape} and {y_hat.shape}")
    if y.size == 0:
        raise ShapeError("empty batch")
    return float(np.mean(np.mean((y - y_hat) ** 2, axis=1)))


def loss_checksum(y, c_hat, spec: ChecksumSpec) -> float:
    """Mean over samples of (C(y) - c_hat)^2, scaled by 1/k."""
    y = np.asarray(y, dtype=np.float64)
    c_hat = np.asarray(c_hat, dtype=np.float64)
    if y.ndim != 2 or y.size == 0:
        raise ShapeError(f"targets must be a non-empty 2-D array, got shape {y.shape}")
    if c_hat.shape != (y.shape[0],):
        raise ShapeError(f"c_hat shape {c_hat.shape} does not match batch size {y.shape[0]}")
    k = y.shape[1]
    c = checksum_batch(spec, y)
    return float(np.mean((c - c_hat) ** 2) / k)


def loss_id(y_hat, c_hat, spec: ChecksumSpec, lam: float) -> float:
    """lambda * mean over samples of (C(y_hat) - c_hat)^2."""
    y_hat = np.asarray(y_hat, dtype=np.float64)
    c_hat = np.asarray(c_hat, dtype=np.float64)
    if y_hat.ndim != 2 or y_hat.size == 0:
        raise ShapeError(f"predictions must be a non-empty 2-D array, got shape {y_hat.shape}")
    if c_hat.shape != (y_hat.shape[0],):
        raise ShapeError(f"c_hat shape {c_hat.shape} does not match batch size {y_hat.shape[0]}")
    c = checksum_batch(spec, y_hat)
    return float(lam * np.mean((c - c_hat) ** 2))


def loss_ood(y_hat_prime, c_hat_prime, spec: ChecksumSpec, lam: float, eps: float) -> float:
    """lambda / (mean over OOD samples of (C(y_hat') - c_hat')^2 + eps)."""
    if eps <= 0.0:
        raise ConfigError(f"epsilon must be positive, got {eps!r}")
    y_hat_prime = np.asarray(y_hat_prime, dtype=np.float64)
    c_hat_prime = np.asarray(c_hat_prime, dtype=np.float64)
    if y_hat_prime.ndim != 2 or y_hat_prime.size == 0:
        raise ShapeError(f"OOD predictions must be a non-empty 2-D array, got {y_hat_prime.shape}")
    if c_hat_prime.shape != (y_hat_prime.shape[0],):
        raise ShapeError(
            f"c_hat' shape {c_hat_prime.shape} does not match batch size {y_hat_prime.shape[0]}"
        )
    u = checksum_batch(spec, y_hat_prime) - c_hat_prime
    return float(lam / (np.mean(u**2) + eps))


def total_loss(
    y,
    y_hat,
    c_hat,
    spec: ChecksumSpec,
    cfg: LossConfig,
    y_hat_prime=None,
    c_hat_prime=None,
) -> tuple[float, LossTerms]:
    """Evaluate the composite loss; returns (total, per-term breakdown).

    OOD predictions are required exactly when the OOD term is enabled.
    """
    y, y_hat, c_hat = _check_batch(y, y_hat, c_hat)
    l_pred = loss_prediction(y, y_hat)
    l_cs = loss_checksum(y, c_hat, spec)
    l_id = 0.0
    l_ood = 0.0
    total = l_pred + l_cs
    if cfg.use_id_term:
        l_id = loss_id(y_hat, c_hat, spec, cfg.lambda_id)
        total += l_id
    if cfg.use_ood_term:
        if y_hat_prime is None or c_hat_prime is None:
            raise ConfigError("OOD term enabled but no OOD predictions were supplied")
        l_ood = loss_ood(y_hat_prime, c_hat_prime, spec, cfg.lambda_ood, cfg.epsilon)
        total += l_ood
    return total, LossTerms(l_pred, l_cs, l_id, l_ood)
