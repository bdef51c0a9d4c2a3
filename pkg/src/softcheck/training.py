"""Minibatch training loop for checked regression networks.

Each run is fully deterministic for a fixed config: weight init, the
shuffle stream, and the OOD pool each get their own seed derived from
the config seed. When the OOD loss term is enabled, a shell-point pool
is generated once from the training inputs' bounding box and every ID
minibatch is paired with a slice of a fresh per-epoch pool shuffle.
"""

from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .checksum import ChecksumSpec
from .data import LabeledDataset
from .errors import ConfigError, DataError, NumericError
from .losses import LossConfig, loss_checksum, loss_prediction
from .network import (
    ModelParams,
    backward,
    forward,
    init_params,
    normalize_targets,
)
from .ood import ShellSpec, bounding_hypercube, sample_shell
from .seeding import derive_seed, make_rng

OPTIMIZERS = ("adam", "sgd")

DIVERGENCE_LIMIT = 1e12

HISTORY_COLUMNS = ("epoch", "l_pred", "l_cs", "l_id", "l_ood", "val_l_pred", "val_l_cs")


@dataclass(frozen=True)
class TrainConfig:
    """Everything train() needs besides the data."""

    loss: LossConfig = field(default_factory=LossConfig)
    checksum: ChecksumSpec = field(default_factory=ChecksumSpec)
    epochs: int = 500
    batch_size: int = 128
    optimizer: str = "adam"
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0
    hidden_dims: tuple = (128, 128, 128)
    activation: str = "tanh"
    ood_pool_size: Optional[int] = None
    ood_batch_size: Optional[int] = None
    ood_lo_frac: float = 0.20
    ood_hi_frac: float = 0.25
    ood_seed: Optional[int] = None

    def __post_init__(self):
        if int(self.epochs) < 0:
            raise ConfigError(f"epochs must be >= 0, got {self.epochs!r}")
        object.__setattr__(self, "epochs", int(self.epochs))
        if int(self.batch_size) < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size!r}")
        object.__setattr__(self, "batch_size", int(self.batch_size))
        if self.optimizer not in OPTIMIZERS:
            raise ConfigError(f"unknown optimizer {self.optimizer!r}; expected {OPTIMIZERS}")
        lr = float(self.learning_rate)
        if not np.isfinite(lr) or lr <= 0.0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate!r}")
        object.__setattr__(self, "learning_rate", lr)
        for name in ("beta1", "beta2"):
            v = float(getattr(self, name))
            if not 0.0 <= v < 1.0:
                raise ConfigError(f"{name} must be in [0, 1), got {v!r}")
            object.__setattr__(self, name, v)
        eps = float(self.adam_eps)
        if not np.isfinite(eps) or eps <= 0.0:
            raise ConfigError(f"adam_eps must be positive, got {self.adam_eps!r}")
        object.__setattr__(self, "adam_eps", eps)
        object.__setattr__(self, "seed", int(self.seed))
        hidden = tuple(int(h) for h in self.hidden_dims)
        if any(h < 1 for h in hidden):
            raise ConfigError(f"hidden_dims entries must be >= 1, got {hidden}")
        object.__setattr__(self, "hidden_dims", hidden)
        for name in ("ood_pool_size", "ood_batch_size"):
            v = getattr(self, name)
            if v is not None:
                if int(v) < 1:
                    raise ConfigError(f"{name} must be >= 1, got {v!r}")
                object.__setattr__(self, name, int(v))
        if not 0.0 < float(self.ood_lo_frac) < float(self.ood_hi_frac):
            raise ConfigError(
                f"need 0 < ood_lo_frac < ood_hi_frac, got "
                f"{self.ood_lo_frac!r}, {self.ood_hi_frac!r}"
            )
        if self.ood_seed is not None:
            object.__setattr__(self, "ood_seed", int(self.ood_seed))


class EpochRecord(NamedTuple):
    """Mean per-step training losses plus end-of-epoch validation losses."""

    epoch: int
    l_pred: float
    l_cs: float
    l_id: float
    l_ood: float
    val_l_pred: float
    val_l_cs: float


def split_id(dataset: LabeledDataset, val_frac: float, seed: int):
    """Seeded disjoint train/validation split; returns (train, validation).

    The validation side gets round(val_frac * N) rows; both sides must
    end up non-empty.
    """
    val_frac = float(val_frac)
    if not 0.0 < val_frac < 1.0:
        raise ConfigError(f"val_frac must be in (0, 1), got {val_frac!r}")
    n = dataset.n
    if n < 2:
        raise DataError(f"need at least 2 rows to split, got {n}")
    n_val = int(round(val_frac * n))
    if n_val < 1 or n_val > n - 1:
        raise DataError(
            f"val_frac {val_frac} of {n} rows gives validation size {n_val}; "
            "both sides must be non-empty"
        )
    perm = make_rng(seed).permutation(n)
    validation = dataset.subset(perm[:n_val]).with_partition("validation")
    train = dataset.subset(perm[n_val:]).with_partition("train")
    return train, validation


def fit_normalization(train: LabeledDataset):
    """Per-column (mean, scale) over training rows; zero variance gets scale 1."""

    def stats(arr):
        mean = arr.mean(axis=0)
        scale = arr.std(axis=0)
        scale = np.where(scale == 0.0, 1.0, scale)
        return mean, scale

    return stats(train.inputs), stats(train.targets)


class _Adam:
    def __init__(self, params: ModelParams, lr, beta1, beta2, eps):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(a) for a in params.weights + params.biases]
        self.v = [np.zeros_like(a) for a in params.weights + params.biases]

    def step(self, params: ModelParams, grads):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        bias1 = 1.0 - b1**self.t
        bias2 = 1.0 - b2**self.t
        targets = params.weights + params.biases
        gs = grads.weights + grads.biases
        for i, (theta, g) in enumerate(zip(targets, gs)):
            m = self.m[i]
            v = self.v[i]
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            theta -= self.lr * (m / bias1) / (np.sqrt(v / bias2) + self.eps)


class _SGD:
    def __init__(self, lr):
        self.lr = lr

    def step(self, params: ModelParams, grads):
        for theta, g in zip(params.weights + params.biases, grads.weights + grads.biases):
            theta -= self.lr * g


def _validation_losses(params, validation, y_val_norm, spec):
    y_hat, c_hat = forward(params, validation.inputs)
    return (
        loss_prediction(y_val_norm, y_hat),
        loss_checksum(y_val_norm, c_hat, spec),
    )


def train(
    config: TrainConfig,
    train_data: LabeledDataset,
    validation: LabeledDataset,
) -> tuple[ModelParams, list[EpochRecord]]:
    """Optimize a fresh network on train_data under the configured loss.

    Returns the final parameters and one history record per epoch.
    """
    if validation.d != train_data.d or validation.k != train_data.k:
        raise DataError(
            f"validation dims ({validation.d}, {validation.k}) do not match "
            f"training dims ({train_data.d}, {train_data.k})"
        )
    n = train_data.n
    if config.batch_size > n:
        raise ConfigError(f"batch_size {config.batch_size} exceeds training size {n}")

    dims = (train_data.d, *config.hidden_dims, train_data.k + 1)
    params = init_params(dims, config.activation, seed=derive_seed(config.seed, "init"))
    params.input_norm, params.output_norm = fit_normalization(train_data)

    pool = None
    ood_batch_size = 0
    if config.loss.use_ood_term:
        pool_size = config.ood_pool_size if config.ood_pool_size is not None else n
        ood_batch_size = (
            config.ood_batch_size if config.ood_batch_size is not None else config.batch_size
        )
        if pool_size < config.batch_size or pool_size < ood_batch_size:
            raise ConfigError(
                f"ood_pool_size {pool_size} is smaller than the batch sizes "
                f"({config.batch_size} ID, {ood_batch_size} OOD)"
            )
        pool_seed = (
            config.ood_seed if config.ood_seed is not None else derive_seed(config.seed, "ood-pool")
        )
        pool = sample_shell(
            bounding_hypercube(train_data.inputs),
            ShellSpec(
                count=pool_size,
                seed=pool_seed,
                lo_frac=config.ood_lo_frac,
                hi_frac=config.ood_hi_frac,
            ),
        )

    if config.optimizer == "adam":
        optimizer = _Adam(params, config.learning_rate, config.beta1, config.beta2,
                          config.adam_eps)
    else:
        optimizer = _SGD(config.learning_rate)

    shuffle_rng = make_rng(derive_seed(config.seed, "shuffle"))
    # separate stream so enabling the OOD term leaves ID batch order intact
    pool_rng = make_rng(derive_seed(config.seed, "shuffle-ood"))
    y_val_norm = normalize_targets(params, validation.targets)
    x_train = train_data.inputs
    y_train = train_data.targets
    n_steps = (n + config.batch_size - 1) // config.batch_size

    history: list[EpochRecord] = []
    for epoch in range(1, config.epochs + 1):
        perm = shuffle_rng.permutation(n)
        pool_perm = pool_rng.permutation(pool.shape[0]) if pool is not None else None
        sums = np.zeros(4)
        for step in range(n_steps):
            lo = step * config.batch_size
            idx = perm[lo : lo + config.batch_size]
            ood_batch = None
            if pool is not None:
                pos = np.arange(step * ood_batch_size, (step + 1) * ood_batch_size)
                ood_batch = pool[pool_perm[pos % pool.shape[0]]]
            try:
                loss, terms, grads = backward(
                    params,
                    (x_train[idx], y_train[idx]),
                    ood_batch,
                    config.checksum,
                    config.loss,
                )
            except NumericError as e:
                raise NumericError(f"epoch {epoch} step {step}: {e}") from e
            if loss > DIVERGENCE_LIMIT:
                raise NumericError(
                    f"epoch {epoch} step {step}: loss {loss:.3e} exceeds "
                    f"divergence limit {DIVERGENCE_LIMIT:.0e}"
                )
            optimizer.step(params, grads)
            sums += terms
        means = sums / n_steps
        val_l_pred, val_l_cs = _validation_losses(params, validation, y_val_norm,
                                                  config.checksum)
        history.append(
            EpochRecord(epoch, means[0], means[1], means[2], means[3],
                        val_l_pred, val_l_cs)
        )
    return params, history


def save_history(history: list[EpochRecord], path) -> None:
    """Write per-epoch loss curves as CSV."""
    lines = [",".join(HISTORY_COLUMNS)]
    for rec in history:
        cells = [str(rec.epoch)]
        cells.extend(repr(float(v)) for v in rec[1:])
        lines.append(",".join(cells))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines))
        fh.write("\n")
