"""Unit-sphere vector arithmetic and deterministic, named random streams."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateVectorError, DimensionMismatchError

UNIT_NORM_TOL = 1e-9
DEGENERATE_NORM = 1e-12

_MASK64 = (1 << 64) - 1


def derive_stream_id(*parts: int | str) -> int:
    """Stable 64-bit hash of a label path (ints and strings).

    Unlike builtin ``hash``, the result does not depend on interpreter
    salting, so derived streams are identical across runs and machines.
    """
    h = hashlib.blake2b(digest_size=8)
    for part in parts:
        if isinstance(part, (bool, float)):
            raise TypeError(f"stream labels must be int or str, got {part!r}")
        if isinstance(part, (int, np.integer)):
            h.update(b"i" + int(part).to_bytes(16, "little", signed=True))
        elif isinstance(part, str):
            raw = part.encode("utf-8")
            h.update(b"s" + len(raw).to_bytes(4, "little") + raw)
        else:
            raise TypeError(f"stream labels must be int or str, got {part!r}")
    return int.from_bytes(h.digest(), "little")


@dataclass(frozen=True)
class RngStream:
    """A named, reproducible source of randomness.

    The same (seed, stream_id) pair yields the same draw sequence on every
    run and under any scheduling; concurrent tasks each derive their own
    child stream instead of sharing a live generator.
    """

    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        """Fresh generator positioned at the start of this stream."""
        seq = np.random.SeedSequence(
            entropy=self.seed & _MASK64, spawn_key=(self.stream_id & _MASK64,)
        )
        return np.random.default_rng(seq)

    def child(self, *labels: int | str) -> "RngStream":
        """Derive a sub-stream; e.g. ``rng.child("trial", 3)``."""
        return RngStream(self.seed, derive_stream_id(self.stream_id, *labels))


def as_generator(rng: RngStream | np.random.Generator) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    return rng


def check_unit(v: np.ndarray, tol: float = UNIT_NORM_TOL) -> np.ndarray:
    """Validate a single unit vector, returning it as a float64 array."""
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1 or arr.shape[0] < 1:
        raise DimensionMismatchError(f"expected a 1-d vector of length >= 1, got shape {arr.shape}")
    norm = float(np.linalg.norm(arr))
    if abs(norm - 1.0) > tol:
        raise DegenerateVectorError(f"vector norm {norm} is not 1 within {tol}")
    return arr


def normalize(v) -> np.ndarray:
    """Scale ``v`` to unit Euclidean norm.

    Raises DegenerateVectorError when the norm is below 1e-12; callers that
    treat this as a soft failure (the learner) catch it there.
    """
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1 or arr.shape[0] < 1:
        raise DimensionMismatchError(f"expected a 1-d vector of length >= 1, got shape {arr.shape}")
    norm = float(np.linalg.norm(arr))
    if norm < DEGENERATE_NORM:
        raise DegenerateVectorError(f"cannot normalize vector with norm {norm}")
    return arr / norm


def inner(a: np.ndarray, b: np.ndarray) -> float:
    """Inner product of two unit vectors, clamped to [-1, 1].

    The clamp keeps downstream arccos/sign logic away from 1 + epsilon.
    """
    av = np.asarray(a, dtype=np.float64)
    bv = np.asarray(b, dtype=np.float64)
    if av.shape != bv.shape or av.ndim != 1:
        raise DimensionMismatchError(f"shape mismatch: {av.shape} vs {bv.shape}")
    return float(np.clip(av @ bv, -1.0, 1.0))


def angle_between(a: np.ndarray, b: np.ndarray) -> float:
    """Angle in [0, pi] between two unit vectors."""
    return float(np.arccos(inner(a, b)))


def sample_uniform_sphere(
    d: int, rng: RngStream | np.random.Generator, size: int | None = None
) -> np.ndarray:
    """Uniform point(s) on the unit sphere in R^d.

    Gaussian-normalize construction: exactly rotation invariant in any
    dimension. With ``size=None`` returns a single (d,) vector, otherwise a
    (size, d) array.
    """
    if d < 1:
        raise DimensionMismatchError(f"dimension must be >= 1, got {d}")
    gen = as_generator(rng)
    n = 1 if size is None else int(size)
    out = _sphere_block(gen, n, d)
    if size is None:
        return out[0]
    return out


def _sphere_block(gen: np.random.Generator, n: int, d: int) -> np.ndarray:
    pts = gen.standard_normal((n, d))
    norms = np.linalg.norm(pts, axis=1)
    # A zero draw from d standard normals has probability 0; redraw defensively.
    while np.any(norms < DEGENERATE_NORM):
        bad = norms < DEGENERATE_NORM
        pts[bad] = gen.standard_normal((int(bad.sum()), d))
        norms = np.linalg.norm(pts, axis=1)
    return pts / norms[:, None]
