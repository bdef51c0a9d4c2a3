"""Out-of-distribution input sampling.

OOD inputs are drawn from a thin shell just outside the axis-aligned
bounding box of the training inputs. The shell is defined through a
normalized exceedance measure: for a box with per-dimension ranges r_i,

    exceed(x) = max_i max(mins_i - x_i, x_i - maxs_i, 0) / r_i

A point with exceed(x) = 0 is inside or on the box; the sampler keeps
points with lo_frac <= exceed(x) <= hi_frac, so every sample sits
strictly outside the box but no farther than hi_frac of a range away.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError, SamplingError
from .seeding import make_rng

DEFAULT_LO_FRAC = 0.20
DEFAULT_HI_FRAC = 0.25

# rejection sampling attempt budget, per requested sample
MAX_ATTEMPT_FACTOR = 10_000

# draws per rejection round; fixed so results do not depend on how many
# rounds were needed
_CHUNK = 1024


@dataclass(frozen=True)
class Hypercube:
    """Axis-aligned box given by per-dimension mins and maxs."""

    mins: np.ndarray
    maxs: np.ndarray

    def __post_init__(self):
        mins = np.asarray(self.mins, dtype=np.float64)
        maxs = np.asarray(self.maxs, dtype=np.float64)
        if mins.ndim != 1 or mins.shape != maxs.shape:
            raise ConfigError(
                f"mins and maxs must be matching vectors, got {mins.shape} and {maxs.shape}"
            )
        if mins.size == 0:
            raise ConfigError("hypercube needs at least one dimension")
        if not (np.all(np.isfinite(mins)) and np.all(np.isfinite(maxs))):
            raise ConfigError("hypercube bounds must be finite")
        if np.any(mins > maxs):
            raise ConfigError("hypercube has mins > maxs")
        object.__setattr__(self, "mins", mins)
        object.__setattr__(self, "maxs", maxs)

    @property
    def d(self) -> int:
        return self.mins.size

    @property
    def ranges(self) -> np.ndarray:
        return self.maxs - self.mins


@dataclass(frozen=True)
class ShellSpec:
    """How many shell points to draw and how thick the shell is."""

    count: int
    seed: int
    lo_frac: float = DEFAULT_LO_FRAC
    hi_frac: float = DEFAULT_HI_FRAC

    def __post_init__(self):
        count = int(self.count)
        if count < 1:
            raise ConfigError(f"shell sample count must be positive, got {self.count!r}")
        object.__setattr__(self, "count", count)
        object.__setattr__(self, "seed", int(self.seed))
        lo = float(self.lo_frac)
        hi = float(self.hi_frac)
        if not (np.isfinite(lo) and np.isfinite(hi) and 0.0 < lo < hi):
            raise ConfigError(f"need 0 < lo_frac < hi_frac, got {self.lo_frac!r}, {self.hi_frac!r}")
        object.__setattr__(self, "lo_frac", lo)
        object.__setattr__(self, "hi_frac", hi)


def bounding_hypercube(inputs) -> Hypercube:
    """Smallest axis-aligned box containing every input row."""
    x = np.asarray(inputs, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] == 0 or x.shape[1] == 0:
        raise DataError(f"need a non-empty 2-D input matrix, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise DataError("inputs contain non-finite values")
    return Hypercube(mins=x.min(axis=0), maxs=x.max(axis=0))


def exceedance(box: Hypercube, x) -> np.ndarray:
    """Normalized distance outside the box, per row; 0 means inside.

    Degenerate dimensions (zero range) are excluded from the max. A box
    that is degenerate in every dimension has no usable shell geometry.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != box.d:
        raise DataError(f"points must have {box.d} columns, got shape {x.shape}")
    r = box.ranges
    live = r > 0.0
    if not np.any(live):
        raise ConfigError("every box dimension is degenerate; shell is undefined")
    below = box.mins[live] - x[:, live]
    above = x[:, live] - box.maxs[live]
    out = np.maximum(np.maximum(below, above), 0.0) / r[live]
    return out.max(axis=1)


def sample_shell(box: Hypercube, spec: ShellSpec) -> np.ndarray:
    """Draw spec.count points with exceedance in [lo_frac, hi_frac].

    Points are sampled uniformly in the box expanded by hi_frac of each
    range, then rejected unless their exceedance reaches lo_frac; the
    upper bound holds by construction. Degenerate dimensions are pinned
    to their constant value. Deterministic for a fixed spec.
    """
    r = box.ranges
    live = r > 0.0
    if not np.any(live):
        raise ConfigError("every box dimension is degenerate; shell is undefined")
    lo = box.mins - spec.hi_frac * r
    hi = box.maxs + spec.hi_frac * r

    rng = make_rng(spec.seed)
    out = np.empty((spec.count, box.d))
    kept = 0
    attempts = 0
    budget = MAX_ATTEMPT_FACTOR * spec.count
    while kept < spec.count:
        if attempts >= budget:
            rate = kept / attempts
            raise SamplingError(
                f"shell sampling accepted {kept}/{attempts} points "
                f"(acceptance rate {rate:.2e}); widen the shell or raise the budget"
            )
        chunk = rng.uniform(lo, hi, size=(_CHUNK, box.d))
        chunk[:, ~live] = box.mins[~live]
        attempts += _CHUNK
        good = chunk[exceedance(box, chunk) >= spec.lo_frac]
        take = min(good.shape[0], spec.count - kept)
        out[kept : kept + take] = good[:take]
        kept += take
    return out
