"""Dense feed-forward network with an appended check node.

The final layer emits k + 1 values: k target predictions plus one
checksum estimate. Forward and backward passes run in 64-bit floats.

Forward-path matrix products use ``np.einsum`` with ``optimize=False``
because its accumulation order per output row is independent of the
batch size; BLAS matmul does not guarantee that, and batch-vs-row
bit-equality of the forward pass is part of the contract. Backward
cross-sample reductions have no such invariant and use ``@``.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .checksum import ChecksumSpec, checksum_batch, checksum_grad_batch
from .errors import ConfigError, DataError, NumericError, ParseError, ShapeError
from .losses import LossConfig, LossTerms, total_loss
from .seeding import make_rng

ACTIVATIONS = ("tanh", "relu")

MODEL_FORMAT = "softcheck-model"
MODEL_VERSION = 1


def _mm(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # batch-size-independent accumulation order per row
    return np.einsum("ij,jk->ik", a, b, optimize=False)


def _act(name: str, z: np.ndarray) -> np.ndarray:
    if name == "tanh":
        return np.tanh(z)
    return np.maximum(z, 0.0)


def _act_deriv(name: str, z: np.ndarray, a: np.ndarray) -> np.ndarray:
    if name == "tanh":
        return 1.0 - a * a
    return (z > 0.0).astype(np.float64)


def _norm_pair(pair, size: int, label: str):
    mean = np.asarray(pair[0], dtype=np.float64)
    scale = np.asarray(pair[1], dtype=np.float64)
    if mean.shape != (size,) or scale.shape != (size,):
        raise ConfigError(f"{label} normalization must hold {size} (mean, scale) pairs")
    if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(scale))):
        raise ConfigError(f"{label} normalization contains non-finite values")
    if np.any(scale <= 0.0):
        raise ConfigError(f"{label} normalization scales must be positive")
    return mean, scale


@dataclass
class ModelParams:
    """Weights, biases, and normalization statistics of one network.

    ``layer_dims`` runs input to output: first entry is the feature
    count d, last is k + 1 where column k of the output is the check
    node. ``weights[i]`` has shape (layer_dims[i+1], layer_dims[i]).
    """

    layer_dims: tuple
    weights: list
    biases: list
    activation: str = "tanh"
    input_norm: tuple = None
    output_norm: tuple = None
    version: int = 1

    def __post_init__(self):
        dims = tuple(int(v) for v in self.layer_dims)
        if len(dims) < 2:
            raise ConfigError(f"layer_dims needs at least input and output, got {dims}")
        if any(v < 1 for v in dims):
            raise ConfigError(f"layer_dims entries must be >= 1, got {dims}")
        if dims[-1] < 2:
            raise ConfigError(
                f"output layer needs k predictions plus the check node, got {dims[-1]} units"
            )
        self.layer_dims = dims
        if self.activation not in ACTIVATIONS:
            raise ConfigError(
                f"unknown activation {self.activation!r}; expected one of {ACTIVATIONS}"
            )
        n = len(dims) - 1
        if len(self.weights) != n or len(self.biases) != n:
            raise ConfigError(f"expected {n} weight/bias layers, got "
                              f"{len(self.weights)}/{len(self.biases)}")
        ws, bs = [], []
        for i in range(n):
            w = np.asarray(self.weights[i], dtype=np.float64)
            b = np.asarray(self.biases[i], dtype=np.float64)
            if w.shape != (dims[i + 1], dims[i]):
                raise ConfigError(
                    f"weight {i} has shape {w.shape}, expected {(dims[i + 1], dims[i])}"
                )
            if b.shape != (dims[i + 1],):
                raise ConfigError(f"bias {i} has shape {b.shape}, expected {(dims[i + 1],)}")
            ws.append(w)
            bs.append(b)
        self.weights = ws
        self.biases = bs
        if self.input_norm is None:
            self.input_norm = (np.zeros(self.d), np.ones(self.d))
        if self.output_norm is None:
            self.output_norm = (np.zeros(self.k), np.ones(self.k))
        self.input_norm = _norm_pair(self.input_norm, self.d, "input")
        self.output_norm = _norm_pair(self.output_norm, self.k, "output")
        self.version = int(self.version)

    @property
    def d(self) -> int:
        return self.layer_dims[0]

    @property
    def k(self) -> int:
        return self.layer_dims[-1] - 1

    @property
    def n_layers(self) -> int:
        return len(self.layer_dims) - 1


@dataclass
class Gradients:
    """Same layout as ModelParams weights/biases, one entry per array."""

    weights: list = field(default_factory=list)
    biases: list = field(default_factory=list)


def zero_gradients(params: ModelParams) -> Gradients:
    return Gradients(
        weights=[np.zeros_like(w) for w in params.weights],
        biases=[np.zeros_like(b) for b in params.biases],
    )


def init_params(layer_dims, activation: str = "tanh", seed: int = 0) -> ModelParams:
    """Seeded Xavier-uniform weights (bound sqrt(6/(fan_in+fan_out))), zero biases.

    Normalization starts as identity; fit it from training data before use.
    """
    try:
        dims = tuple(int(v) for v in layer_dims)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"layer_dims must be integers, got {layer_dims!r}") from e
    if len(dims) < 2 or any(v < 1 for v in dims) or dims[-1] < 2:
        raise ConfigError(f"invalid layer_dims {dims}: need >= 2 entries, all >= 1, last >= 2")
    rng = make_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return ModelParams(layer_dims=dims, weights=weights, biases=biases, activation=activation)


def normalize_targets(params: ModelParams, y_raw) -> np.ndarray:
    """Map raw targets into the space the network predicts in."""
    y_raw = np.asarray(y_raw, dtype=np.float64)
    mean, scale = params.output_norm
    return (y_raw - mean) / scale


def denormalize_predictions(params: ModelParams, y_hat) -> np.ndarray:
    """Map normalized predictions back to raw target units."""
    y_hat = np.asarray(y_hat, dtype=np.float64)
    mean, scale = params.output_norm
    return y_hat * scale + mean


def _check_inputs(params: ModelParams, x_batch) -> np.ndarray:
    x = np.asarray(x_batch, dtype=np.float64)
    if x.ndim != 2:
        raise ShapeError(f"input batch must be 2-D, got shape {x.shape}")
    if x.shape[1] != params.d:
        raise ShapeError(f"input has {x.shape[1]} features, model expects {params.d}")
    if x.shape[0] == 0:
        raise ShapeError("input batch is empty")
    if not np.all(np.isfinite(x)):
        raise DataError("input batch contains non-finite values")
    return x


def _forward_cache(params: ModelParams, x: np.ndarray):
    """Run the network, keeping per-layer activations for backprop.

    Returns (activations, hidden_preacts, output) where activations[i]
    is the input to layer i and output is the final linear map, shape
    (M, k+1).
    """
    mean, scale = params.input_norm
    a = (x - mean) / scale
    activations = [a]
    hidden_preacts = []
    n = params.n_layers
    for i in range(n - 1):
        z = _mm(a, params.weights[i].T) + params.biases[i]
        a = _act(params.activation, z)
        hidden_preacts.append(z)
        activations.append(a)
    out = _mm(a, params.weights[n - 1].T) + params.biases[n - 1]
    return activations, hidden_preacts, out


def forward(params: ModelParams, x_batch):
    """Predict (y_hat, c_hat) in normalized target space.

    Returns an (M, k) prediction matrix and an (M,) checksum vector.
    """
    x = _check_inputs(params, x_batch)
    _, _, out = _forward_cache(params, x)
    return out[:, : params.k].copy(), out[:, params.k].copy()


def _backprop(params: ModelParams, activations, hidden_preacts, d_out, grads: Gradients):
    """Accumulate parameter gradients given d(loss)/d(output)."""
    g = d_out
    for i in reversed(range(params.n_layers)):
        grads.weights[i] += g.T @ activations[i]
        grads.biases[i] += g.sum(axis=0)
        if i > 0:
            g = (g @ params.weights[i]) * _act_deriv(
                params.activation, hidden_preacts[i - 1], activations[i]
            )


def backward(
    params: ModelParams,
    id_batch,
    ood_batch,
    checksum_spec: ChecksumSpec,
    loss_cfg: LossConfig,
) -> tuple[float, LossTerms, Gradients]:
    """Composite loss and its exact analytic parameter gradients.

    ``id_batch`` is an (x, y) pair in raw units; targets are normalized
    internally. ``ood_batch`` is an input matrix, consumed only when the
    OOD term is enabled.
    """
    x_raw, y_raw = id_batch
    x = _check_inputs(params, x_raw)
    y_raw = np.asarray(y_raw, dtype=np.float64)
    if y_raw.ndim != 2 or y_raw.shape != (x.shape[0], params.k):
        raise ShapeError(
            f"targets must have shape {(x.shape[0], params.k)}, got {y_raw.shape}"
        )
    if not np.all(np.isfinite(y_raw)):
        raise DataError("target batch contains non-finite values")
    y = normalize_targets(params, y_raw)

    acts, preacts, out = _forward_cache(params, x)
    k = params.k
    y_hat = out[:, :k]
    c_hat = out[:, k]

    y_hat_p = c_hat_p = None
    acts_p = preacts_p = None
    if loss_cfg.use_ood_term:
        if ood_batch is None or np.asarray(ood_batch).size == 0:
            raise ConfigError("OOD loss term enabled but ood_batch is empty")
        x_p = _check_inputs(params, ood_batch)
        acts_p, preacts_p, out_p = _forward_cache(params, x_p)
        y_hat_p = out_p[:, :k]
        c_hat_p = out_p[:, k]

    total, terms = total_loss(y, y_hat, c_hat, checksum_spec, loss_cfg, y_hat_p, c_hat_p)
    for name, value in zip(LossTerms._fields, terms):
        if not np.isfinite(value):
            raise NumericError(f"loss term {name!r} is non-finite")

    m = float(x.shape[0])
    d_y = (2.0 / (m * k)) * (y_hat - y)
    d_c = (2.0 / (m * k)) * (c_hat - checksum_batch(checksum_spec, y))
    if loss_cfg.use_id_term:
        r = checksum_batch(checksum_spec, y_hat) - c_hat
        scale = loss_cfg.lambda_id * 2.0 / m
        d_y = d_y + (scale * r)[:, None] * checksum_grad_batch(checksum_spec, y_hat)
        d_c = d_c - scale * r

    grads = zero_gradients(params)
    d_out = np.concatenate([d_y, d_c[:, None]], axis=1)
    _backprop(params, acts, preacts, d_out, grads)

    if loss_cfg.use_ood_term:
        mp = float(y_hat_p.shape[0])
        u = checksum_batch(checksum_spec, y_hat_p) - c_hat_p
        denom = np.mean(u * u) + loss_cfg.epsilon
        d_u = (-2.0 * loss_cfg.lambda_ood / (mp * denom * denom)) * u
        d_y_p = d_u[:, None] * checksum_grad_batch(checksum_spec, y_hat_p)
        d_out_p = np.concatenate([d_y_p, -d_u[:, None]], axis=1)
        _backprop(params, acts_p, preacts_p, d_out_p, grads)

    for arrs in (grads.weights, grads.biases):
        for g in arrs:
            if not np.all(np.isfinite(g)):
                raise NumericError("gradient contains non-finite values")
    return total, terms, grads


def save_model(path, params: ModelParams, checksum_spec: ChecksumSpec) -> None:
    """Write a versioned JSON model file; floats round-trip bit-exact."""
    doc = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "layer_dims": list(params.layer_dims),
        "activation": params.activation,
        "weights": [w.tolist() for w in params.weights],
        "biases": [b.tolist() for b in params.biases],
        "input_norm": {
            "mean": params.input_norm[0].tolist(),
            "scale": params.input_norm[1].tolist(),
        },
        "output_norm": {
            "mean": params.output_norm[0].tolist(),
            "scale": params.output_norm[1].tolist(),
        },
        "checksum": checksum_spec.to_dict(),
    }
    try:
        text = json.dumps(doc, indent=2, allow_nan=False)
    except ValueError as e:
        raise NumericError(f"model contains values JSON cannot represent: {e}") from e
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
        fh.write("\n")


def load_model(path) -> tuple[ModelParams, ChecksumSpec]:
    """Read a model file written by save_model."""
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as e:
        raise ParseError(f"model file {path} is not valid JSON: {e}") from e
    if not isinstance(doc, dict) or doc.get("format") != MODEL_FORMAT:
        raise ParseError(f"model file {path} has unexpected format tag")
    if doc.get("version") != MODEL_VERSION:
        raise ParseError(f"model file {path} has unsupported version {doc.get('version')!r}")
    required = {"layer_dims", "activation", "weights", "biases",
                "input_norm", "output_norm", "checksum"}
    missing = required - set(doc)
    if missing:
        raise ParseError(f"model file {path} is missing keys: {sorted(missing)}")
    try:
        params = ModelParams(
            layer_dims=tuple(doc["layer_dims"]),
            weights=[np.asarray(w, dtype=np.float64) for w in doc["weights"]],
            biases=[np.asarray(b, dtype=np.float64) for b in doc["biases"]],
            activation=doc["activation"],
            input_norm=(doc["input_norm"]["mean"], doc["input_norm"]["scale"]),
            output_norm=(doc["output_norm"]["mean"], doc["output_norm"]["scale"]),
        )
        spec = ChecksumSpec.from_dict(doc["checksum"])
    except (KeyError, TypeError) as e:
        raise ParseError(f"model file {path} has malformed fields: {e}") from e
    return params, spec
