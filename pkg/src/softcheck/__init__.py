"""Checksum-based out-of-distribution detection for regression networks.

Train a multi-output regression MLP with one extra output, the check
node, taught to emit a known function of the targets. On data like the
training distribution the recomputed and emitted checksums agree; on
out-of-distribution inputs they drift apart, and a threshold calibrated
for a 99% true negative rate turns that gap into a trust flag.
"""

from .checksum import ChecksumSpec, checksum, checksum_error, checksum_grad
from .data import LabeledDataset, SynthSpec, load_csv, save_csv, synth_generate
from .errors import (
    ConfigError,
    DataError,
    NumericError,
    ParseError,
    SamplingError,
    ShapeError,
    SoftcheckError,
)
from .losses import LossConfig, LossTerms, total_loss
from .metrics import (
    EvalReport,
    calibrate_threshold,
    evaluate,
    flag,
    fnr99,
    pearson,
    per_sample_errors,
)
from .network import (
    Gradients,
    ModelParams,
    backward,
    forward,
    init_params,
    load_model,
    save_model,
)
from .ood import Hypercube, ShellSpec, bounding_hypercube, exceedance, sample_shell
from .seeding import derive_seed, make_rng
from .training import EpochRecord, TrainConfig, fit_normalization, split_id, train

__version__ = "0.1.0"

__all__ = [
    "ChecksumSpec",
    "ConfigError",
    "DataError",
    "EpochRecord",
    "EvalReport",
    "Gradients",
    "Hypercube",
    "LabeledDataset",
    "LossConfig",
    "LossTerms",
    "ModelParams",
    "NumericError",
    "ParseError",
    "SamplingError",
    "ShapeError",
    "ShellSpec",
    "SoftcheckError",
    "SynthSpec",
    "TrainConfig",
    "backward",
    "bounding_hypercube",
    "calibrate_threshold",
    "checksum",
    "checksum_error",
    "checksum_grad",
    "derive_seed",
    "evaluate",
    "exceedance",
    "fit_normalization",
    "flag",
    "fnr99",
    "forward",
    "init_params",
    "load_csv",
    "load_model",
    "make_rng",
    "pearson",
    "per_sample_errors",
    "sample_shell",
    "save_csv",
    "save_model",
    "split_id",
    "synth_generate",
    "total_loss",
    "train",
]
