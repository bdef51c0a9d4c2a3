"""Checksum functions over target vectors.

A checksum maps a target vector y to a single scalar C(y). The network
learns to emit this scalar alongside its predictions; at inference time
the squared gap between the recomputed and emitted checksum is the
detection signal.

Two families are supported:

* ``linear``    C(y) = sum(y)
* ``sinusoid``  C(y) = sin(w * |sum(y)|)  with frequency w > 0
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NumericError, ShapeError

LINEAR = "linear"
SINUSOID = "sinusoid"
KINDS = (LINEAR, SINUSOID)

DEFAULT_W = 1e-4


@dataclass(frozen=True)
class ChecksumSpec:
    """Which checksum to compute and its frequency parameter.

    ``w`` only matters for the sinusoid kind; it is carried (and
    serialized) regardless so specs round-trip unchanged.
    """

    kind: str = LINEAR
    w: float = DEFAULT_W

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown checksum kind {self.kind!r}; expected one of {KINDS}")
        w = float(self.w)
        if not np.isfinite(w) or w <= 0.0:
            raise ConfigError(f"checksum frequency w must be finite and positive, got {self.w!r}")
        object.__setattr__(self, "w", w)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "w": self.w}

    @classmethod
    def from_dict(cls, d: dict) -> "ChecksumSpec":
        if not isinstance(d, dict):
            raise ConfigError(f"checksum spec must be a mapping, got {type(d).__name__}")
        extra = set(d) - {"kind", "w"}
        if extra:
            raise ConfigError(f"unknown checksum spec keys: {sorted(extra)}")
        return cls(kind=d.get("kind", LINEAR), w=d.get("w", DEFAULT_W))


def _as_vector(y) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 1:
        raise ShapeError(f"expected a 1-D target vector, got shape {y.shape}")
    if y.size == 0:
        raise ShapeError("target vector is empty")
    if not np.all(np.isfinite(y)):
        raise NumericError("target vector contains non-finite values")
    return y


def _as_matrix(Y) -> np.ndarray:
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim != 2:
        raise ShapeError(f"expected a 2-D target matrix, got shape {Y.shape}")
    if Y.shape[0] == 0 or Y.shape[1] == 0:
        raise ShapeError(f"target matrix has a zero dimension: shape {Y.shape}")
    if not np.all(np.isfinite(Y)):
        raise NumericError("target matrix contains non-finite values")
    return Y


def checksum(spec: ChecksumSpec, y) -> float:
    """Compute C(y) for a single target vector."""
    y = _as_vector(y)
    s = float(np.sum(y))
    if spec.kind == LINEAR:
        return s
    return float(np.sin(spec.w * abs(s)))


def checksum_batch(spec: ChecksumSpec, Y) -> np.ndarray:
    """Compute C(y) row-wise for an (M, k) matrix; returns shape (M,)."""
    Y = _as_matrix(Y)
    s = np.sum(Y, axis=1)
    if spec.kind == LINEAR:
        return s
    return np.sin(spec.w * np.abs(s))


def checksum_grad(spec: ChecksumSpec, y) -> np.ndarray:
    """Gradient dC/dy for a single vector; returns shape (k,).

    For the sinusoid the derivative of |s| at s = 0 is taken to be 0,
    matching ``np.sign``.
    """
    y = _as_vector(y)
    if spec.kind == LINEAR:
        return np.ones_like(y)
    s = float(np.sum(y))
    g = spec.w * np.cos(spec.w * abs(s)) * np.sign(s)
    return np.full_like(y, g)


def checksum_grad_batch(spec: ChecksumSpec, Y) -> np.ndarray:
    """Row-wise dC/dy for an (M, k) matrix; returns shape (M, k)."""
    Y = _as_matrix(Y)
    if spec.kind == LINEAR:
        return np.ones_like(Y)
    s = np.sum(Y, axis=1)
    g = spec.w * np.cos(spec.w * np.abs(s)) * np.sign(s)
    return np.broadcast_to(g[:, None], Y.shape).copy()


def checksum_error(c_hat, y_hat, spec: ChecksumSpec):
    """Squared gap between the recomputed and emitted checksum.

    Accepts a single (c_hat, y_hat) pair or batched arrays; the result
    matches the input arity (float or shape (M,)).
    """
    y_arr = np.asarray(y_hat, dtype=np.float64)
    if y_arr.ndim == 1:
        c = checksum(spec, y_arr)
        return float((c - float(c_hat)) ** 2)
    c = checksum_batch(spec, y_arr)
    c_hat = np.asarray(c_hat, dtype=np.float64)
    if c_hat.shape != c.shape:
        raise ShapeError(f"c_hat shape {c_hat.shape} does not match batch size {c.shape}")
    return (c - c_hat) ** 2
