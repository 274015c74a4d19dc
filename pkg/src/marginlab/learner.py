"""The list-replicable learning rule for large-margin halfspaces.

One run draws ``batch_count`` fresh batches of ``batch_size`` labeled
points, solves the hard-SVM on each, averages the resulting unit
directions, normalizes the average, and rounds it to the configured
(margin/2)-net.  The output hypothesis is always a net point, identified
exactly by its net index, which is what makes "same output" a discrete,
countable event for the replicability harness.

Failure is a value, not an exception: an infeasible batch or a degenerate
average marks the run failed so the harness can count failures against its
confidence budget.  Parameter helpers give the theory-flavored defaults for
the batch count (from the averaged-vector concentration bound) and batch
size; both are documented tunables, and the experiment harness typically
uses much smaller tuned values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .concepts import LabeledSample, TotalHalfspace
from .errors import ConfigError
from .geometry import RngStream
from .rounding import SphereNet, round_many
from .svm import hard_svm_batch

NET_ALPHA_TOL = 1e-12
DEGENERATE_AVERAGE = 1e-12
MAX_BATCH_SIZE = 10**7


@dataclass(frozen=True)
class LearnerConfig:
    """Parameters of one learner instantiation.

    The net must be built for this dimension with alpha = margin / 2; the
    rounding step then moves the normalized average by strictly less than
    margin / 2.
    """

    dim: int
    margin: float
    epsilon: float
    delta: float
    batch_count: int
    batch_size: int
    net: SphereNet
    svm_tol: float = 1e-6

    def __post_init__(self):
        if self.dim < 1:
            raise ConfigError(f"dim must be >= 1, got {self.dim}")
        if not 0.0 < self.margin < 1.0:
            raise ConfigError(f"margin must be in (0, 1), got {self.margin}")
        if not 0.0 < self.epsilon < 0.5:
            raise ConfigError(f"epsilon must be in (0, 1/2), got {self.epsilon}")
        if not 0.0 < self.delta < 1.0:
            raise ConfigError(f"delta must be in (0, 1), got {self.delta}")
        if self.batch_count < 1 or self.batch_size < 1:
            raise ConfigError("batch_count and batch_size must be >= 1")
        if self.svm_tol <= 0.0:
            raise ConfigError("svm_tol must be positive")
        if self.net.dimension != self.dim:
            raise ConfigError(
                f"net dimension {self.net.dimension} does not match learner dim {self.dim}"
            )
        if abs(self.net.alpha - self.margin / 2.0) > NET_ALPHA_TOL:
            raise ConfigError(
                f"net alpha {self.net.alpha!r} must equal margin/2 = {self.margin / 2.0!r}"
            )


@dataclass(frozen=True)
class LearnerOutput:
    """Result of one learner run.

    On success the hypothesis is a net point (net_index set), the averaged
    direction's norm is recorded, and batches_used equals the batch count.
    On failure the hypothesis is None; batches_used counts the batches whose
    SVM solve succeeded.
    """

    hypothesis: TotalHalfspace | None
    raw_average_norm: float
    batches_used: int
    failed: bool


def run_learner(cfg: LearnerConfig, source, rng: RngStream) -> LearnerOutput:
    """One full run: sample, solve, average, normalize, round.

    ``source`` is anything with ``sample(n, rng) -> LabeledSample`` (a
    MarginDistribution, or an injected sample source in tests).  Sampler
    stalls propagate; infeasible batches produce a failed output.
    """
    return _run_trials(cfg, source, [rng])[0]


def run_learner_many(cfg: LearnerConfig, source, trials: int, rng: RngStream) -> list[LearnerOutput]:
    """Independent trials with per-trial derived streams.

    Trial t uses ``rng.child("trial", t)``, so results are identical to
    calling run_learner once per trial with those streams; all SVM solves
    are stacked into one batched call.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    return _run_trials(cfg, source, [rng.child("trial", t) for t in range(trials)])


def _run_trials(cfg: LearnerConfig, source, streams: list[RngStream]) -> list[LearnerOutput]:
    trials = len(streams)
    k, n, d = cfg.batch_count, cfg.batch_size, cfg.dim
    points = np.empty((trials * k, n, d))
    labels = np.empty((trials * k, n), dtype=np.int8)
    for t, stream in enumerate(streams):
        for b in range(k):
            batch = source.sample(n, stream.child("batch", b))
            if batch.dim != d or len(batch) != n:
                raise ConfigError(
                    f"sample source produced shape ({len(batch)}, {batch.dim}), "
                    f"expected ({n}, {d})"
                )
            points[t * k + b] = batch.points
            labels[t * k + b] = batch.labels
    solved = hard_svm_batch(points, labels, tol=cfg.svm_tol)

    outputs: list[LearnerOutput] = []
    average = np.empty((trials, d))
    norms = np.empty(trials)
    good = np.empty(trials, dtype=bool)
    for t in range(trials):
        feas = solved.feasible[t * k : (t + 1) * k]
        avg = solved.directions[t * k : (t + 1) * k].mean(axis=0)
        average[t] = avg
        norms[t] = np.linalg.norm(avg)
        good[t] = bool(feas.all()) and norms[t] >= DEGENERATE_AVERAGE

    indices = np.full(trials, -1, dtype=np.int64)
    if good.any():
        normalized = average[good] / norms[good][:, None]
        indices[good] = round_many(cfg.net, normalized)

    for t in range(trials):
        used = int(solved.feasible[t * k : (t + 1) * k].sum())
        if good[t]:
            idx = int(indices[t])
            hyp = TotalHalfspace(direction=cfg.net.points[idx], net_index=idx)
            outputs.append(
                LearnerOutput(
                    hypothesis=hyp,
                    raw_average_norm=float(norms[t]),
                    batches_used=used,
                    failed=False,
                )
            )
        else:
            outputs.append(
                LearnerOutput(
                    hypothesis=None,
                    raw_average_norm=float(norms[t]),
                    batches_used=used,
                    failed=True,
                )
            )
    return outputs


def select_batch_count(
    dim: int, delta: float, target_deviation: float, component_bound: float = 2.0
) -> int:
    """Smallest batch count making the averaged-vector tail bound <= delta/4.

    Inverts 2 d exp(-k t^2 / (2 d^2 C^2)) <= delta / 4 at t =
    ``target_deviation``:  k = ceil(2 d^2 C^2 ln(8 d / delta) / t^2).  The
    default C = 2 bounds each component deviation of a unit vector from its
    mean.  A theory-driven k; experiment harnesses usually tune far smaller
    values.
    """
    if target_deviation <= 0.0:
        raise ValueError("target_deviation must be positive")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must be in (0, 1)")
    if dim < 1:
        raise ValueError("dim must be >= 1")
    c2 = component_bound * component_bound
    return math.ceil(2.0 * dim * dim * c2 * math.log(8.0 * dim / delta) / target_deviation**2)


def select_batch_size(margin: float, epsilon: float, delta: float, batch_count: int) -> int:
    """Heuristic default batch size; a documented tunable, not a theorem constant.

    n0 = ceil((8/eps) * ((4/margin^2) ln(8/margin) + ln(8 k / delta))),
    nonincreasing in epsilon and margin, nondecreasing in batch count.
    Callers cap the result at 10^7.
    """
    if not 0.0 < margin < 1.0:
        raise ValueError("margin must be in (0, 1)")
    if epsilon <= 0.0 or delta <= 0.0:
        raise ValueError("epsilon and delta must be positive")
    if batch_count < 1:
        raise ValueError("batch_count must be >= 1")
    value = (8.0 / epsilon) * (
        (4.0 / margin**2) * math.log(8.0 / margin) + math.log(8.0 * batch_count / delta)
    )
    return min(math.ceil(value), MAX_BATCH_SIZE)


@dataclass(frozen=True)
class ConcentrationRow:
    t: float
    empirical_tail: float
    lemma_bound: float


def mean_concentration_probe(
    dim: int,
    batch_count: int,
    n_trials: int,
    t_grid,
    rng: RngStream | np.random.Generator,
    component_bound: float = 1.0,
) -> list[ConcentrationRow]:
    """Empirical l1 deviation tail of an averaged vector vs. its union bound.

    Averages ``batch_count`` uniform sphere vectors (known mean zero,
    components in [-1, 1], so C = 1) per trial and reports, for each grid
    t, the empirical Pr[||Z||_1 >= t] next to the bound
    min(1, 2 d exp(-k t^2 / (2 d^2 C^2))).
    """
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    from .geometry import as_generator, sample_uniform_sphere

    gen = as_generator(rng)
    deviations = np.empty(n_trials)
    chunk = max(1, int(2e6 / max(batch_count * dim, 1)))
    done = 0
    while done < n_trials:
        take = min(chunk, n_trials - done)
        draws = sample_uniform_sphere(dim, gen, size=take * batch_count)
        z = draws.reshape(take, batch_count, dim).mean(axis=1)
        deviations[done : done + take] = np.abs(z).sum(axis=1)
        done += take
    rows = []
    c2 = component_bound * component_bound
    for t in np.asarray(t_grid, dtype=np.float64):
        tail = float(np.mean(deviations >= t))
        bound = min(1.0, 2.0 * dim * math.exp(-batch_count * t * t / (2.0 * dim * dim * c2)))
        rows.append(ConcentrationRow(t=float(t), empirical_tail=tail, lemma_bound=bound))
    return rows
