"""Empirical list-replicability measurement and the stability booster.

``estimate_list`` runs the learner many times against one distribution and
tabulates the distinct outputs by exact net index: the resulting report is
the empirical counterpart of a hypothesis list (how many distinct outputs,
how often each, how accurate each).  ``cover_multiplicity_probe`` scans a
grid of target directions and counts, for each, how many hypotheses are
simultaneously frequent and accurate there; directions near rounding-cell
boundaries witness multiplicity >= 2, the mechanism behind the dimension
lower bound on list size.

``stability_boost`` turns any base learner that outputs some fixed accurate
hypothesis with probability rho into a list-replicable one on a finite
domain: estimate output frequencies over t base runs, then return a
hypothesis that is both frequent (>= rho - alpha/2) and accurate on a
held-out validation sample (loss <= 2 epsilon / 3), or an explicit failure
value when none qualifies.  All frequency arithmetic is exact integer
counting; hypothesis identity is never floating-point fuzzy.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .concepts import (
    MarginDistribution,
    TotalHalfspace,
    loss_exact_2d,
    loss_montecarlo,
)
from .errors import ConfigError
from .geometry import RngStream
from .learner import LearnerConfig, run_learner_many


@dataclass(frozen=True)
class OutputStats:
    """Occurrence count and (optional) loss estimate for one distinct output."""

    count: int
    loss_estimate: float | None = None
    loss_half_width: float | None = None


@dataclass(frozen=True)
class ReplicabilityReport:
    """Distinct learner outputs over repeated trials against one distribution."""

    distribution_id: str
    trials: int
    outputs: dict[int, OutputStats]
    failure_count: int
    distinct_outputs: int

    def __post_init__(self):
        if sum(s.count for s in self.outputs.values()) + self.failure_count != self.trials:
            raise ValueError("output counts plus failures must equal trials")
        if self.distinct_outputs != len(self.outputs):
            raise ValueError("distinct_outputs must equal the number of distinct outputs")

    @property
    def failure_rate(self) -> float:
        return self.failure_count / self.trials if self.trials else 0.0

    def max_count(self) -> int:
        return max((s.count for s in self.outputs.values()), default=0)


def report_to_dict(report: ReplicabilityReport) -> dict:
    """JSON-ready dict; keys are emitted in sorted order when serialized."""
    return {
        "distribution_id": report.distribution_id,
        "trials": report.trials,
        "failure_count": report.failure_count,
        "distinct_outputs": report.distinct_outputs,
        "outputs": {
            str(idx): {
                "count": stats.count,
                "loss_estimate": stats.loss_estimate,
                "loss_half_width": stats.loss_half_width,
            }
            for idx, stats in sorted(report.outputs.items())
        },
    }


def report_from_dict(data: dict) -> ReplicabilityReport:
    outputs = {
        int(idx): OutputStats(
            count=entry["count"],
            loss_estimate=entry["loss_estimate"],
            loss_half_width=entry["loss_half_width"],
        )
        for idx, entry in data["outputs"].items()
    }
    return ReplicabilityReport(
        distribution_id=data["distribution_id"],
        trials=data["trials"],
        outputs=outputs,
        failure_count=data["failure_count"],
        distinct_outputs=data["distinct_outputs"],
    )


def estimate_list(
    cfg: LearnerConfig,
    dist: MarginDistribution,
    trials: int,
    loss_mc: int,
    rng: RngStream,
    distribution_id: str = "D",
) -> ReplicabilityReport:
    """Run the learner ``trials`` times and group outputs by net index.

    Monte-Carlo losses are attached to every output seen at least
    max(1, trials/100) times; rarer outputs fall under the failure budget
    and are reported with null losses.  Learner failures are counted, never
    raised.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    results = run_learner_many(cfg, dist, trials, rng.child("learn"))
    counts: Counter[int] = Counter()
    failures = 0
    for out in results:
        if out.failed:
            failures += 1
        else:
            counts[out.hypothesis.net_index] += 1
    threshold = max(1.0, trials / 100.0)
    outputs: dict[int, OutputStats] = {}
    for idx in sorted(counts):
        count = counts[idx]
        if count >= threshold:
            hyp = TotalHalfspace(direction=cfg.net.points[idx], net_index=idx)
            est, hw = loss_montecarlo(hyp, dist, loss_mc, rng.child("loss", idx))
            outputs[idx] = OutputStats(count=count, loss_estimate=est, loss_half_width=hw)
        else:
            outputs[idx] = OutputStats(count=count)
    return ReplicabilityReport(
        distribution_id=distribution_id,
        trials=trials,
        outputs=outputs,
        failure_count=failures,
        distinct_outputs=len(outputs),
    )


def estimate_global_stability(report: ReplicabilityReport) -> float:
    """Largest single-output frequency in a report (0 when no output)."""
    if report.trials < 1:
        raise ValueError("report must cover at least one trial")
    return report.max_count() / report.trials


@dataclass(frozen=True)
class CoverProbeRow:
    direction: np.ndarray
    multiplicity: int
    qualifying: dict[int, tuple[float, float]]  # net index -> (frequency, loss)


@dataclass(frozen=True)
class CoverProbeOutcome:
    max_multiplicity: int
    witness: np.ndarray | None
    rows: list[CoverProbeRow] = field(repr=False)


def cover_multiplicity_probe(
    cfg: LearnerConfig,
    directions,
    trials_per_direction: int,
    eps_prime: float,
    alpha_slack: float,
    rng: RngStream,
    list_bound: int | None = None,
    loss_mc: int = 2000,
) -> CoverProbeOutcome:
    """Count, per target direction, the hypotheses both frequent and accurate.

    A hypothesis h qualifies at direction w when its empirical output
    frequency on that direction's distribution exceeds 1 / (L + alpha_slack)
    and its loss there is below eps_prime (exact arc loss in dimension 2,
    Monte Carlo otherwise).  L defaults to the dimension, the declared list
    bound of this learner.  Returns the maximum count over the grid with a
    witness direction.
    """
    if not 0.0 < eps_prime < 0.5:
        raise ConfigError("eps_prime must be in (0, 1/2)")
    if alpha_slack <= 0.0:
        raise ConfigError("alpha_slack must be positive")
    bound = cfg.dim if list_bound is None else list_bound
    freq_threshold = 1.0 / (bound + alpha_slack)
    rows: list[CoverProbeRow] = []
    best = (0, None)
    for j, w in enumerate(np.atleast_2d(np.asarray(directions, dtype=np.float64))):
        dist = MarginDistribution(w, cfg.margin)
        sub = rng.child("grid", j)
        if trials_per_direction < 1:
            rows.append(CoverProbeRow(direction=w, multiplicity=0, qualifying={}))
            continue
        results = run_learner_many(cfg, dist, trials_per_direction, sub.child("learn"))
        counts: Counter[int] = Counter(
            out.hypothesis.net_index for out in results if not out.failed
        )
        qualifying: dict[int, tuple[float, float]] = {}
        for idx, count in sorted(counts.items()):
            freq = count / trials_per_direction
            if freq <= freq_threshold:
                continue
            hyp = TotalHalfspace(direction=cfg.net.points[idx], net_index=idx)
            if cfg.dim == 2:
                loss = loss_exact_2d(hyp, dist)
            else:
                loss, _ = loss_montecarlo(hyp, dist, loss_mc, sub.child("loss", idx))
            if loss < eps_prime:
                qualifying[idx] = (freq, loss)
        rows.append(CoverProbeRow(direction=w, multiplicity=len(qualifying), qualifying=qualifying))
        if len(qualifying) > best[0]:
            best = (len(qualifying), w)
    return CoverProbeOutcome(max_multiplicity=best[0], witness=best[1], rows=rows)


# ---------------------------------------------------------------------------
# Finite-domain stability boosting


@dataclass(frozen=True)
class FiniteHypothesis:
    """Total hypothesis over a fixed finite domain; compares exactly."""

    labels: tuple[int, ...]

    def __post_init__(self):
        if not all(v in (-1, 1) for v in self.labels):
            raise ValueError("labels must be +1 or -1")

    def __len__(self) -> int:
        return len(self.labels)

    def loss_on(self, indices: np.ndarray, labels: np.ndarray) -> float:
        predicted = np.asarray(self.labels, dtype=np.int64)[indices]
        return float(np.mean(predicted != labels))


@dataclass(frozen=True)
class FiniteSample:
    """Sample from a finite domain: point indices plus +-1 labels."""

    indices: np.ndarray
    labels: np.ndarray


@dataclass(frozen=True)
class FiniteDomainDistribution:
    """Distribution over a finite domain, labeled by a ground-truth hypothesis."""

    truth: FiniteHypothesis
    weights: np.ndarray | None = None  # uniform when omitted

    @property
    def domain_size(self) -> int:
        return len(self.truth)

    def sample(self, n: int, rng: RngStream | np.random.Generator) -> FiniteSample:
        from .geometry import as_generator

        gen = as_generator(rng)
        m = self.domain_size
        p = None
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=np.float64)
            p = w / w.sum()
        idx = gen.choice(m, size=n, p=p)
        labels = np.asarray(self.truth.labels, dtype=np.int64)[idx]
        return FiniteSample(indices=idx, labels=labels)


@dataclass(frozen=True)
class BoostConfig:
    """Parameters for boosting a globally stable learner to a short list.

    With stability rho, the list bound is L = floor(1/rho) and the
    frequency slack is alpha = rho - 1/(L+1) > 0: an output must reach
    empirical frequency rho - alpha/2 over t base runs and validation loss
    at most 2 epsilon / 3 on n1 held-out points.
    """

    rho: float
    epsilon: float
    delta: float
    t: int
    n1: int
    n0: int

    def __post_init__(self):
        if not 0.0 < self.rho <= 1.0:
            raise ConfigError(f"rho must be in (0, 1], got {self.rho}")
        if self.epsilon <= 0.0 or self.delta <= 0.0:
            raise ConfigError("epsilon and delta must be positive")
        if min(self.t, self.n1, self.n0) < 1:
            raise ConfigError("t, n1 and n0 must be >= 1")
        if self.alpha <= 0.0:
            raise ConfigError(f"rho={self.rho} leaves no frequency slack (alpha must be > 0)")

    @property
    def list_bound(self) -> int:
        return math.floor(1.0 / self.rho)

    @property
    def alpha(self) -> float:
        return self.rho - 1.0 / (self.list_bound + 1)


BaseLearner = Callable[[FiniteSample, RngStream], FiniteHypothesis]


@dataclass(frozen=True)
class BoostTrace:
    """Boost run with its evidence: base-run counts and the output's stats."""

    output: FiniteHypothesis | None
    counts: dict[FiniteHypothesis, int]
    output_frequency: float | None
    output_validation_loss: float | None


def stability_boost_trace(
    base: BaseLearner,
    cfg: BoostConfig,
    dist: FiniteDomainDistribution,
    rng: RngStream,
) -> BoostTrace:
    """Run the base learner t times, then pick a frequent accurate output.

    Scans candidates in order of first appearance and returns the first one
    with frequency >= rho - alpha/2 and validation loss <= 2 epsilon / 3.
    The output is None (the explicit failure value) when no candidate
    qualifies; an arbitrary fallback would pollute list statistics.
    """
    counts: Counter[FiniteHypothesis] = Counter()
    first_seen: list[FiniteHypothesis] = []
    for i in range(cfg.t):
        h = base(dist.sample(cfg.n0, rng.child("base-sample", i)), rng.child("base-learn", i))
        if h not in counts:
            first_seen.append(h)
        counts[h] += 1
    validation = dist.sample(cfg.n1, rng.child("validation"))
    freq_floor = cfg.rho - cfg.alpha / 2.0
    loss_ceiling = 2.0 * cfg.epsilon / 3.0
    for h in first_seen:
        freq = counts[h] / cfg.t
        if freq < freq_floor:
            continue
        loss = h.loss_on(validation.indices, validation.labels)
        if loss <= loss_ceiling:
            return BoostTrace(
                output=h,
                counts=dict(counts),
                output_frequency=freq,
                output_validation_loss=loss,
            )
    return BoostTrace(
        output=None, counts=dict(counts), output_frequency=None, output_validation_loss=None
    )


def stability_boost(
    base: BaseLearner,
    cfg: BoostConfig,
    dist: FiniteDomainDistribution,
    rng: RngStream,
) -> FiniteHypothesis | None:
    """Boosted output alone; None is the explicit failure value."""
    return stability_boost_trace(base, cfg, dist, rng).output
