"""Stahel-Donoho outlyingness in an arbitrary kernel-induced feature space.

For samples z_1..z_k with kernel matrix O, the direction through the feature
images of samples i and j projects every sample l to

    v[l] = (O[i, l] - O[j, l]) / sqrt(O[i, i] - 2 O[i, j] + O[j, j]),

and the outlyingness of sample l is the maximum over directions of

    |v[l] - median(v)| / mad(v).

Only the kernel matrix is touched; feature vectors stay implicit.  Directions
come from unordered index pairs: all k(k-1)/2 of them for small data sets, a
seeded random subset otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateDirection,
    EmptyInput,
    InvalidPair,
    NoValidDirections,
    TooFewSamples,
)
from .kernels import KernelMatrix
from .rng import Stream, derive_key

# Squared feature-space norms at or below this are treated as coincident
# points (double-precision noise floor for O(1)-scale kernels).
DEGENERACY_TOL = 1e-12

# Policy defaults: enumerate everything up to this many samples, then fall
# back to a fixed-size random subset.
EXHAUSTIVE_LIMIT = 100
DEFAULT_SAMPLED_COUNT = 2000

_PAIR_CHUNK = 1024


@dataclass(frozen=True)
class DirectionPolicy:
    """How projection directions are chosen."""

    mode: str = "exhaustive"
    count: int = DEFAULT_SAMPLED_COUNT
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("exhaustive", "sampled"):
            raise ValueError(f"mode must be 'exhaustive' or 'sampled', got {self.mode!r}")
        if self.mode == "sampled" and self.count < 1:
            raise ValueError(f"sampled mode needs count >= 1, got {self.count}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")

    def describe(self) -> str:
        if self.mode == "exhaustive":
            return "exhaustive"
        return f"sampled count={self.count} seed={self.seed}"


def default_policy(k: int, seed: int = 0) -> DirectionPolicy:
    """Exhaustive for k <= 100, otherwise 2000 sampled pairs."""
    if k <= EXHAUSTIVE_LIMIT:
        return DirectionPolicy(mode="exhaustive", seed=seed)
    return DirectionPolicy(mode="sampled", count=DEFAULT_SAMPLED_COUNT, seed=seed)


@dataclass(frozen=True)
class OutlyingnessReport:
    """Per-sample outlyingness plus the direction policy that produced it."""

    r: np.ndarray
    policy: DirectionPolicy
    degenerate_pairs: int = 0

    def __post_init__(self):
        arr = np.asarray(self.r, dtype=np.float64)
        if arr.ndim != 1:
            raise ValueError("r must be a 1-D array")
        finite = arr[np.isfinite(arr)]
        if finite.size and finite.min() < 0:
            raise ValueError("outlyingness values must be nonnegative")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "r", arr)

    @property
    def k(self) -> int:
        return self.r.shape[0]


@dataclass(frozen=True)
class ProjectionVector:
    """Projections of all samples onto the direction through one pair."""

    values: np.ndarray
    pair: tuple

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "pair", (int(self.pair[0]), int(self.pair[1])))


def robust_location(v) -> float:
    """Median; for even length the mean of the two middle order statistics."""
    arr = np.asarray(v, dtype=np.float64).ravel()
    if arr.size == 0:
        raise EmptyInput("robust_location of empty vector")
    return float(np.median(arr))


def robust_scale(v) -> float:
    """Median absolute deviation from the median, without consistency factor."""
    arr = np.asarray(v, dtype=np.float64).ravel()
    if arr.size == 0:
        raise EmptyInput("robust_scale of empty vector")
    return float(np.median(np.abs(arr - np.median(arr))))


def _squared_norms(entries, i_idx, j_idx):
    # (d_i + d_j) first: addition commutes exactly, so the value does not
    # depend on pair orientation.
    diag = np.diag(entries)
    return (diag[i_idx] + diag[j_idx]) - 2.0 * entries[i_idx, j_idx]


def projection_vector(omega: KernelMatrix, i: int, j: int) -> ProjectionVector:
    """Unit-direction projections for the pair (i, j) of sample indices."""
    if i == j:
        raise InvalidPair(f"projection direction needs two distinct samples, got ({i}, {j})")
    entries = omega.entries
    sq = (entries[i, i] + entries[j, j]) - 2.0 * entries[i, j]
    if sq <= DEGENERACY_TOL:
        raise DegenerateDirection(
            f"samples {i} and {j} coincide in feature space (squared norm {sq:.3e})"
        )
    values = (entries[i] - entries[j]) / math.sqrt(sq)
    return ProjectionVector(values=values, pair=(i, j))


def enumerate_directions(k: int, policy: DirectionPolicy | None, omega: KernelMatrix):
    """Materialize the unordered index pairs the outlyingness will scan.

    Exhaustive mode returns every pair (degenerate ones included; the caller
    skips and counts them).  Sampled mode rejects degenerate and repeated
    draws, giving up after 100 * count rejections.
    """
    if k < 2:
        raise ValueError(f"need at least 2 samples to form a direction, got {k}")
    if policy is None:
        policy = default_policy(k)
    entries = omega.entries
    if policy.mode == "exhaustive":
        i_idx, j_idx = np.triu_indices(k, 1)
        if not np.any(_squared_norms(entries, i_idx, j_idx) > DEGENERACY_TOL):
            raise NoValidDirections("all samples coincide in feature space")
        return list(zip(i_idx.tolist(), j_idx.tolist()))
    stream = Stream(derive_key(policy.seed, "directions"))
    pairs = []
    seen = set()
    rejections = 0
    limit = 100 * policy.count
    while len(pairs) < policy.count and rejections <= limit:
        i, j = (int(v) for v in stream.integers(2, k))
        if i == j:
            rejections += 1
            continue
        if i > j:
            i, j = j, i
        if (i, j) in seen:
            rejections += 1
            continue
        if (entries[i, i] + entries[j, j]) - 2.0 * entries[i, j] <= DEGENERACY_TOL:
            rejections += 1
            continue
        seen.add((i, j))
        pairs.append((i, j))
    if not pairs:
        raise NoValidDirections("no non-degenerate direction found while sampling")
    return pairs


def outlyingness(omega: KernelMatrix, policy: DirectionPolicy | None = None) -> OutlyingnessReport:
    """Stahel-Donoho outlyingness of every sample from the kernel matrix.

    Directions with mad(v) == 0 contribute 0 to samples sitting exactly at
    the median and +inf to the rest; degenerate pairs are skipped and counted.
    """
    k = omega.k
    if k < 3:
        raise TooFewSamples(f"outlyingness needs at least 3 samples, got {k}")
    if policy is None:
        policy = default_policy(k)
    pairs = enumerate_directions(k, policy, omega)
    entries = omega.entries
    i_all = np.fromiter((p[0] for p in pairs), dtype=np.intp, count=len(pairs))
    j_all = np.fromiter((p[1] for p in pairs), dtype=np.intp, count=len(pairs))
    r = np.zeros(k)
    degenerate = 0
    for start in range(0, len(pairs), _PAIR_CHUNK):
        i_idx = i_all[start : start + _PAIR_CHUNK]
        j_idx = j_all[start : start + _PAIR_CHUNK]
        sq = _squared_norms(entries, i_idx, j_idx)
        ok = sq > DEGENERACY_TOL
        degenerate += int(np.count_nonzero(~ok))
        if not np.any(ok):
            continue
        v = (entries[i_idx[ok]] - entries[j_idx[ok]]) / np.sqrt(sq[ok])[:, None]
        med = np.median(v, axis=1, keepdims=True)
        dev = np.abs(v - med)
        mad = np.median(dev, axis=1, keepdims=True)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            ratio = dev / mad
        ratio = np.where(mad > 0.0, ratio, np.where(dev == 0.0, 0.0, np.inf))
        r = np.maximum(r, ratio.max(axis=0))
    if degenerate == len(pairs):
        raise NoValidDirections("every enumerated direction was degenerate")
    return OutlyingnessReport(r=r, policy=policy, degenerate_pairs=degenerate)
