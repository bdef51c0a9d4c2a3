"""Labeled datasets, synthetic benchmark generation, and CSV I/O.

The synthetic benchmark draws a random smooth target map

    y_i = sum_m alpha_im * sin(beta_m . x + phi_m) + gamma_i * |x|^2

once per function seed, then samples inputs uniformly from a fixed base
box split by a hyperplane a.x = b: the ID side feeds training, the far
side becomes labeled OOD rows. Both sides share the same target map, so
the OOD rows are valid data the model simply never trains on.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigError, DataError, ParseError
from .seeding import derive_seed, make_rng

PARTITION_TAGS = ("train", "validation", "ood", "unsplit")

BASE_LO = -1.0
BASE_HI = 1.0

# target-map coefficient ranges: amplitudes alpha ~ U(+-ALPHA_RANGE),
# frequencies beta ~ U(+-BETA_RANGE), curvatures gamma ~ U(+-QUAD_RANGE)
N_MIX_TERMS = 3
ALPHA_RANGE = 1.0
BETA_RANGE = 3.0
QUAD_RANGE = 0.5

# rejection budget per requested sample when filling a half-space
MAX_ATTEMPT_FACTOR = 10_000

_CHUNK = 4096


def _dot_rows(x: np.ndarray, a: np.ndarray) -> np.ndarray:
    # accumulation order per row independent of batch size
    return np.einsum("ij,j->i", x, a, optimize=False)


@dataclass
class LabeledDataset:
    """Input/target matrices with a per-row partition tag."""

    inputs: np.ndarray
    targets: np.ndarray
    partition: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.inputs, dtype=np.float64)
        y = np.asarray(self.targets, dtype=np.float64)
        p = np.asarray(self.partition)
        if x.ndim != 2 or y.ndim != 2:
            raise DataError(f"inputs and targets must be 2-D, got {x.shape} and {y.shape}")
        if x.shape[0] != y.shape[0] or p.shape != (x.shape[0],):
            raise DataError(
                f"row counts disagree: inputs {x.shape[0]}, targets {y.shape[0]}, "
                f"tags {p.shape}"
            )
        if x.shape[0] == 0:
            raise DataError("dataset has no rows")
        if x.shape[1] < 1 or y.shape[1] < 1:
            raise DataError(f"need d, k >= 1, got d={x.shape[1]}, k={y.shape[1]}")
        if not np.all(np.isfinite(x)):
            raise DataError("inputs contain non-finite values")
        if not np.all(np.isfinite(y)):
            raise DataError("targets contain non-finite values")
        bad = [t for t in np.unique(p) if t not in PARTITION_TAGS]
        if bad:
            raise DataError(f"unknown partition tags {bad}; expected {PARTITION_TAGS}")
        self.inputs = x
        self.targets = y
        self.partition = p.astype("U16")

    @property
    def n(self) -> int:
        return self.inputs.shape[0]

    @property
    def d(self) -> int:
        return self.inputs.shape[1]

    @property
    def k(self) -> int:
        return self.targets.shape[1]

    def count(self, tag: str) -> int:
        return int(np.sum(self.partition == tag))

    def subset(self, idx) -> "LabeledDataset":
        return LabeledDataset(self.inputs[idx], self.targets[idx], self.partition[idx])

    def with_partition(self, tag: str) -> "LabeledDataset":
        if tag not in PARTITION_TAGS:
            raise DataError(f"unknown partition tag {tag!r}")
        return LabeledDataset(
            self.inputs, self.targets, np.full(self.n, tag, dtype="U16")
        )

    def select(self, tag: str) -> "LabeledDataset":
        if tag not in PARTITION_TAGS:
            raise DataError(f"unknown partition tag {tag!r}")
        mask = self.partition == tag
        if not np.any(mask):
            raise DataError(f"no rows tagged {tag!r}")
        return self.subset(mask)


@dataclass(frozen=True)
class SynthSpec:
    """Parameters of the synthetic benchmark generator.

    The default plane thresholds the first input coordinate near the
    low edge of the base box, so the ID side is a thin slab and the
    OOD side stretches far beyond it. Detection needs that reach: a
    smooth map extrapolates too well just past the boundary for any
    detector to fire, so a benchmark with a shallow OOD side measures
    only noise.
    """

    d: int = 6
    k: int = 8
    n_id: int = 4000
    n_ood: int = 2000
    function_seed: int = 0
    noise_sd: float = 0.01
    plane_normal: Optional[np.ndarray] = None
    plane_offset: float = -0.85

    def __post_init__(self):
        for name in ("d", "k", "n_id", "n_ood"):
            v = int(getattr(self, name))
            if v < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)!r}")
            object.__setattr__(self, name, v)
        object.__setattr__(self, "function_seed", int(self.function_seed))
        sd = float(self.noise_sd)
        if not np.isfinite(sd) or sd < 0.0:
            raise ConfigError(f"noise_sd must be finite and >= 0, got {self.noise_sd!r}")
        object.__setattr__(self, "noise_sd", sd)
        normal = self.plane_normal
        if normal is None:
            normal = np.zeros(self.d)
            normal[0] = 1.0
        normal = np.asarray(normal, dtype=np.float64)
        if normal.shape != (self.d,) or not np.all(np.isfinite(normal)):
            raise ConfigError(f"plane normal must be a finite vector of length {self.d}")
        if np.all(normal == 0.0):
            raise ConfigError("plane normal is zero; the split is undefined")
        object.__setattr__(self, "plane_normal", normal)
        b = float(self.plane_offset)
        if not np.isfinite(b):
            raise ConfigError(f"plane offset must be finite, got {self.plane_offset!r}")
        object.__setattr__(self, "plane_offset", b)


def _map_coefficients(spec: SynthSpec):
    rng = make_rng(derive_seed(spec.function_seed, "target-map"))
    alpha = rng.uniform(-ALPHA_RANGE, ALPHA_RANGE, size=(spec.k, N_MIX_TERMS))
    betas = rng.uniform(-BETA_RANGE, BETA_RANGE, size=(N_MIX_TERMS, spec.d))
    phases = rng.uniform(0.0, 2.0 * math.pi, size=N_MIX_TERMS)
    quad = rng.uniform(-QUAD_RANGE, QUAD_RANGE, size=spec.k)
    return alpha, betas, phases, quad


def noiseless_targets(spec: SynthSpec, x) -> np.ndarray:
    """Evaluate the seeded target map g(x) without observation noise."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != spec.d:
        raise DataError(f"inputs must have shape (N, {spec.d}), got {x.shape}")
    alpha, betas, phases, quad = _map_coefficients(spec)
    s = np.einsum("ij,jk->ik", x, betas.T, optimize=False) + phases
    y = np.einsum("ij,jk->ik", np.sin(s), alpha.T, optimize=False)
    return y + np.sum(x * x, axis=1)[:, None] * quad


def _sample_halfspace(rng, spec: SynthSpec, count: int, ood_side: bool) -> np.ndarray:
    a = spec.plane_normal
    b = spec.plane_offset
    out = np.empty((count, spec.d))
    kept = 0
    attempts = 0
    budget = MAX_ATTEMPT_FACTOR * count
    side = "a.x > b" if ood_side else "a.x <= b"
    while kept < count:
        if attempts >= budget:
            raise ConfigError(
                f"half-space {side} kept {kept}/{attempts} draws from the base box; "
                "the plane leaves that side (nearly) empty"
            )
        chunk = rng.uniform(BASE_LO, BASE_HI, size=(_CHUNK, spec.d))
        attempts += _CHUNK
        proj = _dot_rows(chunk, a)
        good = chunk[proj > b] if ood_side else chunk[proj <= b]
        take = min(good.shape[0], count - kept)
        out[kept : kept + take] = good[:take]
        kept += take
    return out


def synth_generate(spec: SynthSpec) -> LabeledDataset:
    """Generate the benchmark dataset; pure function of the spec.

    ID rows are tagged ``unsplit`` (a later train/validation split
    assigns their final tags); far-side rows are tagged ``ood``.
    """
    rng_id = make_rng(derive_seed(spec.function_seed, "inputs-id"))
    rng_ood = make_rng(derive_seed(spec.function_seed, "inputs-ood"))
    x_id = _sample_halfspace(rng_id, spec, spec.n_id, ood_side=False)
    x_ood = _sample_halfspace(rng_ood, spec, spec.n_ood, ood_side=True)
    x = np.vstack([x_id, x_ood])
    y = noiseless_targets(spec, x)
    noise_rng = make_rng(derive_seed(spec.function_seed, "noise"))
    y = y + spec.noise_sd * noise_rng.standard_normal(size=(x.shape[0], spec.k))
    tags = np.array(["unsplit"] * spec.n_id + ["ood"] * spec.n_ood, dtype="U16")
    return LabeledDataset(inputs=x, targets=y, partition=tags)


def _header(d: int, k: int) -> str:
    cols = ["partition"] + [f"x_{i}" for i in range(d)] + [f"y_{i}" for i in range(k)]
    return ",".join(cols)


def save_csv(dataset: LabeledDataset, path) -> None:
    """Write the dataset with full round-trip float precision."""
    lines = [_header(dataset.d, dataset.k)]
    for i in range(dataset.n):
        cells = [str(dataset.partition[i])]
        cells.extend(repr(float(v)) for v in dataset.inputs[i])
        cells.extend(repr(float(v)) for v in dataset.targets[i])
        lines.append(",".join(cells))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines))
        fh.write("\n")


def _parse_header(line: str, path) -> tuple[int, int]:
    cols = line.strip().split(",")
    if not cols or cols[0] != "partition":
        raise ParseError(f"{path} line 1: header must start with 'partition'")
    d = 0
    while 1 + d < len(cols) and cols[1 + d] == f"x_{d}":
        d += 1
    k = 0
    while 1 + d + k < len(cols) and cols[1 + d + k] == f"y_{k}":
        k += 1
    if d < 1 or k < 1 or 1 + d + k != len(cols):
        raise ParseError(
            f"{path} line 1: header must be partition,x_0..x_{{d-1}},y_0..y_{{k-1}}"
        )
    return d, k


def load_csv(path) -> LabeledDataset:
    """Read a dataset written by save_csv."""
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ParseError(f"{path}: file is empty")
    d, k = _parse_header(lines[0], path)
    rows_x, rows_y, tags = [], [], []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cells = line.split(",")
        if len(cells) != 1 + d + k:
            raise ParseError(
                f"{path} line {lineno}: expected {1 + d + k} columns, got {len(cells)}"
            )
        tag = cells[0]
        if tag not in PARTITION_TAGS:
            raise ParseError(f"{path} line {lineno}: unknown partition tag {tag!r}")
        try:
            values = [float(c) for c in cells[1:]]
        except ValueError as e:
            raise ParseError(f"{path} line {lineno}: non-numeric cell ({e})") from e
        rows_x.append(values[:d])
        rows_y.append(values[d:])
        tags.append(tag)
    if not tags:
        raise DataError(f"{path}: no data rows")
    return LabeledDataset(
        inputs=np.array(rows_x, dtype=np.float64),
        targets=np.array(rows_y, dtype=np.float64),
        partition=np.array(tags, dtype="U16"),
    )
