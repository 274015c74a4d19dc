"""Halfspace concepts over the unit sphere and their realizable distributions.

A partial halfspace labels points outside a margin band by the sign of the
inner product with its defining direction and abstains (``STAR``) inside the
band.  Each direction also induces a realizable distribution: uniform over
the band's complement, labeled by the concept itself.  Losses against such a
distribution are computed exactly in dimension 2 (arc lengths) and by Monte
Carlo otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import betainc

from .errors import DimensionMismatchError, SamplerStallError, UnsupportedDimensionError
from .geometry import RngStream, as_generator, check_unit, _sphere_block

#: Label value for "undefined here"; regular labels are +1 / -1.
STAR = 0

#: Two-sided confidence level used for every Hoeffding half-width we report.
HOEFFDING_CONF = 0.05

DEFAULT_PROPOSAL_BUDGET = 1000


def hoeffding_half_width(n: int, conf: float = HOEFFDING_CONF) -> float:
    """95% two-sided Hoeffding half-width for a mean of n indicator draws."""
    return math.sqrt(math.log(2.0 / conf) / (2.0 * n))


def _read_only(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class PartialHalfspace:
    """Margin-band halfspace: sign outside the band, STAR inside."""

    direction: np.ndarray
    margin: float

    def __post_init__(self):
        object.__setattr__(self, "direction", _read_only(check_unit(self.direction)))
        if not 0.0 < self.margin < 1.0:
            raise ValueError(f"margin must be in (0, 1), got {self.margin}")

    @property
    def dim(self) -> int:
        return self.direction.shape[0]

    def classify(self, x: np.ndarray) -> int:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != self.direction.shape:
            raise DimensionMismatchError(f"point shape {x.shape} vs direction {self.direction.shape}")
        ip = float(self.direction @ x)
        if ip >= self.margin:
            return 1
        if ip <= -self.margin:
            return -1
        return STAR

    def classify_many(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=np.float64)
        if points.ndim != 2 or points.shape[1] != self.dim:
            raise DimensionMismatchError(f"points shape {points.shape} vs dim {self.dim}")
        ips = points @ self.direction
        out = np.zeros(len(points), dtype=np.int8)
        out[ips >= self.margin] = 1
        out[ips <= -self.margin] = -1
        return out

    def flip(self) -> "PartialHalfspace":
        return PartialHalfspace(-self.direction, self.margin)


@dataclass(frozen=True)
class TotalHalfspace:
    """Closed halfspace classifier; inner product zero maps to +1.

    ``net_index`` tags hypotheses produced by net rounding: it is the exact
    identity used when counting distinct learner outputs, and the direction
    is bitwise equal to the net point at that index.
    """

    direction: np.ndarray
    net_index: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "direction", _read_only(check_unit(self.direction)))

    @property
    def dim(self) -> int:
        return self.direction.shape[0]

    def classify(self, x: np.ndarray) -> int:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != self.direction.shape:
            raise DimensionMismatchError(f"point shape {x.shape} vs direction {self.direction.shape}")
        return 1 if float(self.direction @ x) >= 0.0 else -1

    def classify_many(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=np.float64)
        if points.ndim != 2 or points.shape[1] != self.dim:
            raise DimensionMismatchError(f"points shape {points.shape} vs dim {self.dim}")
        ips = points @ self.direction
        return np.where(ips >= 0.0, 1, -1).astype(np.int8)


@dataclass(frozen=True)
class LabeledSample:
    """Finite sequence of (unit point, +-1 label) pairs."""

    points: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        labs = np.asarray(self.labels)
        if pts.ndim != 2 or pts.shape[0] != labs.shape[0]:
            raise DimensionMismatchError(
                f"points shape {pts.shape} inconsistent with labels shape {labs.shape}"
            )
        norms = np.linalg.norm(pts, axis=1)
        if len(pts) and np.max(np.abs(norms - 1.0)) > 1e-9:
            raise ValueError("all sample points must be unit vectors")
        if not np.all(np.isin(labs, (-1, 1))):
            raise ValueError("labels must be +1 or -1")
        object.__setattr__(self, "points", _read_only(pts))
        object.__setattr__(self, "labels", _read_only(labs.astype(np.int8)))

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True)
class MarginDistribution:
    """Uniform distribution over a halfspace's band complement, labeled by it.

    Support is the set of sphere points with |<direction, x>| >= margin, and
    every emitted label equals the partial concept's value there (never STAR).
    """

    direction: np.ndarray
    margin: float

    def __post_init__(self):
        object.__setattr__(self, "direction", _read_only(check_unit(self.direction)))
        if not 0.0 < self.margin < 1.0:
            raise ValueError(f"margin must be in (0, 1), got {self.margin}")

    @property
    def dim(self) -> int:
        return self.direction.shape[0]

    @property
    def concept(self) -> PartialHalfspace:
        return PartialHalfspace(self.direction, self.margin)

    @property
    def acceptance_probability(self) -> float:
        """Mass of the band complement under the uniform sphere measure.

        The first coordinate t of a uniform sphere point satisfies
        t^2 ~ Beta(1/2, (d-1)/2), so P(|t| < margin) is a regularized
        incomplete beta value.  In dimension 1 the band never covers +-1.
        """
        if self.dim == 1:
            return 1.0
        return 1.0 - float(betainc(0.5, (self.dim - 1) / 2.0, self.margin**2))

    def sample(
        self,
        n: int,
        rng: RngStream | np.random.Generator,
        proposal_budget: int = DEFAULT_PROPOSAL_BUDGET,
    ) -> LabeledSample:
        """n i.i.d. draws by rejection from the uniform sphere.

        Raises SamplerStallError once ``proposal_budget * n`` proposals have
        been consumed with fewer than n acceptances, reporting the observed
        acceptance rate; a stall signals margin/dimension combinations with
        a too-thin support rather than a transient failure.
        """
        if n < 1:
            raise ValueError(f"sample size must be >= 1, got {n}")
        gen = as_generator(rng)
        d = self.dim
        # Deterministic chunk schedule: a function of (n, d, margin) only.
        est = max(self.acceptance_probability, 1.0 / proposal_budget)
        chunk = min(max(int(1.3 * n / est) + 16, 32), 1_000_000)
        budget = proposal_budget * n
        accepted = np.empty((n, d), dtype=np.float64)
        got = 0
        used = 0
        while got < n:
            if used >= budget:
                rate = got / used if used else 0.0
                raise SamplerStallError(
                    f"rejection sampler stalled after {used} proposals "
                    f"({got}/{n} accepted, acceptance rate {rate:.2e}, "
                    f"margin={self.margin}, d={d})",
                    acceptance_rate=rate,
                )
            take = min(chunk, budget - used)
            props = _sphere_block(gen, take, d)
            used += take
            keep = props[np.abs(props @ self.direction) >= self.margin]
            room = min(len(keep), n - got)
            if room:
                accepted[got : got + room] = keep[:room]
            got += room
        labels = np.where(accepted @ self.direction >= self.margin, 1, -1)
        return LabeledSample(accepted, labels)


def loss_montecarlo(
    h: TotalHalfspace,
    dist: MarginDistribution,
    n_mc: int,
    rng: RngStream | np.random.Generator,
    proposal_budget: int = DEFAULT_PROPOSAL_BUDGET,
) -> tuple[float, float]:
    """Empirical disagreement rate on fresh draws plus its 95% half-width."""
    if n_mc < 1:
        raise ValueError(f"n_mc must be >= 1, got {n_mc}")
    sample = dist.sample(n_mc, rng, proposal_budget=proposal_budget)
    predicted = h.classify_many(sample.points)
    estimate = float(np.mean(predicted != sample.labels))
    return estimate, hoeffding_half_width(n_mc)


def loss_exact_2d(h: TotalHalfspace, dist: MarginDistribution) -> float:
    """Exact population loss on the circle.

    With a = arccos(margin) and theta the angle between the hypothesis and
    the distribution's direction, the support is two arcs of length 2a and
    the disagreement region intersects each in the same length, so the loss
    reduces to one interval-overlap computation.
    """
    if h.dim != 2 or dist.dim != 2:
        raise UnsupportedDimensionError("closed-form loss is only available in dimension 2")
    a = math.acos(dist.margin)
    theta = math.acos(float(np.clip(h.direction @ dist.direction, -1.0, 1.0)))
    # Overlap of the positive support arc [-a, a] (centered on the
    # distribution direction) with the hypothesis' agreeing halfcircle
    # [theta - pi/2, theta + pi/2]; no wrap-around since a < pi/2.
    agree = max(0.0, min(a, theta + math.pi / 2.0) - max(-a, theta - math.pi / 2.0))
    return 1.0 - agree / (2.0 * a)
