"""Batch experiment driver.

Subcommands wire every module: net construction, replicability harness
runs, dimension engines, Gap-Hamming matrices, solver cross-checks, the
cover-multiplicity probe, stability boosting, and the concentration probe.
Each command validates its numeric arguments before any computation,
derives all randomness from a single --seed through named streams, writes
a machine-readable report (JSON or CSV) that embeds the resolved
configuration and seed, renders a companion PNG figure next to the report,
and prints one human summary line.  Exit status is 0 iff every requested
check passed.  Reruns with identical arguments produce byte-identical
files.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import plots
from .concepts import LabeledSample, MarginDistribution, hoeffding_half_width
from .errors import ConfigError, MarginLabError
from .geometry import RngStream, sample_uniform_sphere
from .learner import LearnerConfig, mean_concentration_probe
from .replicability import (
    BoostConfig,
    FiniteDomainDistribution,
    FiniteHypothesis,
    cover_multiplicity_probe,
    estimate_list,
    report_to_dict,
    stability_boost_trace,
)
from .rounding import build_net, check_general_position, load_net, save_net, verify_covering
from .svm import hard_svm, svm_by_enumeration
from . import dims as dims_mod

_FORMATS = ("json", "csv")


# ---------------------------------------------------------------------------
# Emission helpers


def _pyify(obj):
    if isinstance(obj, dict):
        return {str(k): _pyify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_pyify(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_pyify(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def _format_cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_json(payload: dict, path: Path) -> None:
    path.write_text(json.dumps(_pyify(payload), sort_keys=True, indent=2) + "\n")


def _write_csv(config: dict, header: list[str], rows: list[list], path: Path) -> None:
    lines = [f"# {key}={_format_cell(value)}" for key, value in sorted(_pyify(config).items())]
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_format_cell(v) for v in _pyify(row)))
    path.write_text("\n".join(lines) + "\n")


def _emit(payload: dict, header: list[str], rows: list[list], out: Path, fmt: str) -> None:
    if fmt == "json":
        _write_json(payload, out)
    else:
        _write_csv(payload.get("config", {}), header, rows, out)


def _figure_path(out: Path) -> Path:
    return out.with_suffix(".png") if out.suffix else Path(str(out) + ".png")


# ---------------------------------------------------------------------------
# Validation helpers


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ConfigError(message)


def _validate_common(args) -> None:
    if hasattr(args, "gamma"):
        _require(0.0 < args.gamma < 1.0, f"--gamma must be in (0, 1), got {args.gamma}")
    if hasattr(args, "epsilon"):
        _require(0.0 < args.epsilon < 0.5, f"--epsilon must be in (0, 1/2), got {args.epsilon}")
    if hasattr(args, "delta"):
        _require(0.0 < args.delta < 1.0, f"--delta must be in (0, 1), got {args.delta}")
    if hasattr(args, "d"):
        _require(args.d >= 1, f"--d must be >= 1, got {args.d}")
    if hasattr(args, "k"):
        _require(args.k >= 1, f"--k must be >= 1, got {args.k}")
    if hasattr(args, "n0"):
        _require(1 <= args.n0 <= 10**7, f"--n0 must be in [1, 1e7], got {args.n0}")
    if hasattr(args, "trials"):
        _require(args.trials >= 1, f"--trials must be >= 1, got {args.trials}")


def _load_learner_config(args) -> LearnerConfig:
    net = load_net(args.net)
    if net.dimension != args.d:
        raise ConfigError(f"net dimension {net.dimension} does not match --d {args.d}")
    if abs(net.alpha - args.gamma / 2.0) > 1e-12:
        raise ConfigError(
            f"net alpha {net.alpha!r} does not match gamma/2 = {args.gamma / 2.0!r}"
        )
    return LearnerConfig(
        dim=args.d,
        margin=args.gamma,
        epsilon=args.epsilon,
        delta=args.delta,
        batch_count=args.k,
        batch_size=args.n0,
        net=net,
        svm_tol=args.svm_tol,
    )


def _net_meta(net) -> dict:
    return {"dimension": net.dimension, "alpha": net.alpha, "seed": net.seed, "size": net.size}


# ---------------------------------------------------------------------------
# Commands


def cmd_net_build(args) -> int:
    _require(0.0 < args.alpha <= 1.0, f"--alpha must be in (0, 1], got {args.alpha}")
    _require(args.d >= 1, f"--d must be >= 1, got {args.d}")
    _require(args.probes >= 1, f"--probes must be >= 1, got {args.probes}")
    net = build_net(args.d, args.alpha, args.seed)
    out = Path(args.out)
    save_net(net, out)
    rng = RngStream(args.seed).child("net-build-cli")
    ok, worst = verify_covering(net, args.probes, rng.child("covering"))
    gp = check_general_position(net, args.probes, rng.child("general-position"))
    config = {
        "command": "net-build",
        "d": args.d,
        "alpha": args.alpha,
        "seed": args.seed,
        "probes": args.probes,
        "out": str(out),
    }
    payload = {
        "config": config,
        "net": _net_meta(net),
        "covering_ok": ok,
        "worst_probe_distance": worst,
        "general_position_ok": gp,
        "passed": bool(ok and gp),
    }
    report = Path(str(out) + ".report." + args.format)
    _emit(
        payload,
        ["size", "covering_ok", "worst_probe_distance", "general_position_ok"],
        [[net.size, ok, worst, gp]],
        report,
        args.format,
    )
    if args.figures:
        from .rounding import nearest_distances

        probes = sample_uniform_sphere(args.d, rng.child("figure"), size=min(args.probes, 10_000))
        plots.save_net_probe_figure(
            nearest_distances(net.points, probes), net.alpha, _figure_path(out)
        )
    print(
        f"net-build: {net.size} points (d={args.d}, alpha={args.alpha}), "
        f"covering {'ok' if ok else 'FAILED'} (worst {worst:.6g}), "
        f"general position {'ok' if gp else 'FAILED'}"
    )
    return 0 if payload["passed"] else 1


def cmd_replicability(args) -> int:
    _validate_common(args)
    _require(args.dists >= 1, f"--dists must be >= 1, got {args.dists}")
    _require(args.loss_mc >= 1, f"--loss-mc must be >= 1, got {args.loss_mc}")
    cfg = _load_learner_config(args)
    rng = RngStream(args.seed).child("replicability-cli")
    reports = []
    directions = []
    for j in range(args.dists):
        w = sample_uniform_sphere(args.d, rng.child("direction", j))
        directions.append(w)
        dist = MarginDistribution(w, args.gamma)
        reports.append(
            estimate_list(
                cfg, dist, args.trials, args.loss_mc, rng.child("estimate", j), f"D{j:03d}"
            )
        )
    small = sum(1 for r in reports if r.distinct_outputs <= args.d)
    fraction = small / len(reports)
    attached = [
        (s.loss_estimate, s.loss_half_width)
        for r in reports
        for s in r.outputs.values()
        if s.loss_estimate is not None and s.count >= 0.05 * r.trials
    ]
    max_loss = max((loss for loss, _ in attached), default=0.0)
    losses_ok = all(loss <= args.epsilon + hw for loss, hw in attached)
    fraction_ok = fraction >= args.min_fraction
    passed = fraction_ok and losses_ok
    config = {
        "command": "replicability",
        "d": args.d,
        "gamma": args.gamma,
        "epsilon": args.epsilon,
        "delta": args.delta,
        "k": args.k,
        "n0": args.n0,
        "trials": args.trials,
        "loss_mc": args.loss_mc,
        "dists": args.dists,
        "seed": args.seed,
        "net": str(args.net),
        "svm_tol": args.svm_tol,
        "min_fraction": args.min_fraction,
    }
    report_dicts = [report_to_dict(r) for r in reports]
    for rd, w in zip(report_dicts, directions):
        rd["direction"] = list(w)
    summary = {
        "fraction_list_at_most_d": fraction,
        "distributions_list_at_most_d": small,
        "max_attached_loss": max_loss,
        "losses_within_epsilon": losses_ok,
        "passed": passed,
    }
    payload = {"config": config, "net": _net_meta(cfg.net), "reports": report_dicts, "summary": summary}
    rows = [
        [
            r["distribution_id"],
            r["trials"],
            r["failure_count"],
            r["distinct_outputs"],
            idx,
            stats["count"],
            stats["count"] / r["trials"],
            stats["loss_estimate"] if stats["loss_estimate"] is not None else "",
            stats["loss_half_width"] if stats["loss_half_width"] is not None else "",
        ]
        for r in report_dicts
        for idx, stats in sorted(r["outputs"].items(), key=lambda kv: int(kv[0]))
    ]
    rows.append(["SUMMARY", "", "", "", "", "", fraction, max_loss, passed])
    out = Path(args.out)
    _emit(
        payload,
        ["distribution", "trials", "failures", "distinct", "net_index", "count", "frequency", "loss", "half_width"],
        rows,
        out,
        args.format,
    )
    if args.figures:
        plots.save_replicability_figure(report_dicts, args.d, _figure_path(out))
    print(
        f"replicability: list <= d on {small}/{len(reports)} distributions "
        f"({100 * fraction:.1f}%), max attached loss {max_loss:.4f} -> "
        f"{'PASS' if passed else 'FAIL'}"
    )
    return 0 if passed else 1


def cmd_dims(args) -> int:
    matrix = dims_mod.read_matrix_csv(args.csv)
    vc, witness = dims_mod.vc_dim(matrix)
    ldim, cert = dims_mod.littlestone_dim(matrix)
    cert_ok = dims_mod.validate_certificate(matrix, cert)
    config = {"command": "dims", "csv": str(args.csv), "seed": args.seed}
    payload = {
        "config": config,
        "rows": matrix.shape[0],
        "cols": matrix.shape[1],
        "vc_dim": vc,
        "vc_witness_columns": [matrix.col_labels[c] for c in witness],
        "littlestone_dim": ldim,
        "certificate_valid": cert_ok,
    }
    if args.min_disambiguation:
        stars = len(matrix.star_cells())
        _require(
            stars <= dims_mod.DISAMBIGUATION_MAX_STARS,
            f"matrix has {stars} star cells; exhaustive filling is limited to "
            f"{dims_mod.DISAMBIGUATION_MAX_STARS}",
        )
        best, filling = dims_mod.min_disambiguation_ldim(matrix)
        payload["min_disambiguation_ldim"] = best
        payload["optimal_filling"] = {f"{r},{c}": v for (r, c), v in sorted(filling.items())}
    out = Path(args.out)
    _emit(
        payload,
        ["vc_dim", "littlestone_dim", "certificate_valid"],
        [[vc, ldim, cert_ok]],
        out,
        args.format,
    )
    if args.figures:
        plots.save_matrix_figure(matrix.entries, _figure_path(out))
    extra = (
        f", min disambiguation ldim {payload['min_disambiguation_ldim']}"
        if args.min_disambiguation
        else ""
    )
    print(f"dims: vc={vc} ldim={ldim} (certificate {'ok' if cert_ok else 'BAD'}){extra}")
    return 0 if cert_ok else 1


def cmd_ghd(args) -> int:
    _require(1 <= args.n <= dims_mod.GHD_MAX_BITS, f"--n must be in [1, {dims_mod.GHD_MAX_BITS}]")
    _require(0.0 < args.gamma <= 1.0, f"--gamma must be in (0, 1], got {args.gamma}")
    matrix = dims_mod.build_ghd(args.n, args.gamma)
    out = Path(args.out)
    matrix_path = Path(str(out) + ".matrix.csv")
    dims_mod.write_matrix_csv(matrix, matrix_path)
    stars = int(np.sum(matrix.entries == 0))
    config = {"command": "ghd", "n": args.n, "gamma": args.gamma, "seed": args.seed}
    payload = {
        "config": config,
        "size": matrix.shape[0],
        "star_cells": stars,
        "defined_cells": matrix.shape[0] * matrix.shape[1] - stars,
        "matrix_file": str(matrix_path),
    }
    if args.ldim:
        ldim, cert = dims_mod.littlestone_dim(matrix)
        payload["littlestone_dim"] = ldim
        payload["certificate_valid"] = dims_mod.validate_certificate(matrix, cert)
    _emit(
        payload,
        ["size", "star_cells", "defined_cells"],
        [[matrix.shape[0], stars, payload["defined_cells"]]],
        out,
        args.format,
    )
    if args.figures:
        plots.save_matrix_figure(matrix.entries, _figure_path(out))
    print(
        f"ghd: {matrix.shape[0]}x{matrix.shape[1]} matrix, {stars} star cells"
        + (f", ldim {payload['littlestone_dim']}" if args.ldim else "")
    )
    return 0


def _random_separable_instance(gen: np.random.Generator, min_margin: float = 0.05):
    d = int(gen.integers(2, 7))
    n = int(gen.integers(2, 9))
    teacher = sample_uniform_sphere(d, gen)
    points = np.empty((n, d))
    got = 0
    while got < n:
        cand = sample_uniform_sphere(d, gen, size=4 * n)
        keep = cand[np.abs(cand @ teacher) >= min_margin]
        take = min(len(keep), n - got)
        points[got : got + take] = keep[:take]
        got += take
    labels = np.where(points @ teacher >= 0.0, 1, -1)
    return LabeledSample(points, labels)


def cmd_svm_check(args) -> int:
    _require(args.instances >= 1, "--instances must be >= 1")
    _require(args.feasibility_samples >= 0, "--feasibility-samples must be >= 0")
    rng = RngStream(args.seed).child("svm-check-cli")
    gen = rng.child("instances").generator()
    oracle_margins = []
    solver_margins = []
    worst_gap = 0.0
    for _ in range(args.instances):
        sample = _random_separable_instance(gen)
        reference = svm_by_enumeration(sample)
        solved = hard_svm(sample, tol=args.svm_tol)
        oracle_margins.append(reference.margin)
        solver_margins.append(solved.margin)
        worst_gap = max(worst_gap, abs(reference.margin - solved.margin))
    margins_ok = worst_gap <= args.tolerance
    feas_gen = rng.child("feasibility").generator()
    feas_worst = math.inf
    for _ in range(args.feasibility_samples):
        d = int(feas_gen.integers(2, 7))
        w = sample_uniform_sphere(d, feas_gen)
        sample = MarginDistribution(w, args.feasibility_gamma).sample(30, feas_gen)
        feas_worst = min(feas_worst, hard_svm(sample, tol=args.svm_tol).margin)
    feas_ok = (
        args.feasibility_samples == 0
        or feas_worst >= args.feasibility_gamma - args.tolerance
    )
    passed = margins_ok and feas_ok
    config = {
        "command": "svm-check",
        "instances": args.instances,
        "tolerance": args.tolerance,
        "svm_tol": args.svm_tol,
        "feasibility_samples": args.feasibility_samples,
        "feasibility_gamma": args.feasibility_gamma,
        "seed": args.seed,
    }
    payload = {
        "config": config,
        "worst_margin_gap": worst_gap,
        "margins_match": margins_ok,
        "feasibility_worst_margin": None if args.feasibility_samples == 0 else feas_worst,
        "feasibility_ok": feas_ok,
        "passed": passed,
    }
    out = Path(args.out)
    _emit(
        payload,
        ["worst_margin_gap", "margins_match", "feasibility_worst_margin", "feasibility_ok"],
        [[worst_gap, margins_ok, feas_worst if args.feasibility_samples else "", feas_ok]],
        out,
        args.format,
    )
    if args.figures:
        plots.save_svm_check_figure(oracle_margins, solver_margins, _figure_path(out))
    print(
        f"svm-check: worst oracle gap {worst_gap:.2e} over {args.instances} instances, "
        f"feasibility margin {'n/a' if args.feasibility_samples == 0 else f'{feas_worst:.4f}'} "
        f"-> {'PASS' if passed else 'FAIL'}"
    )
    return 0 if passed else 1


def cmd_cover_probe(args) -> int:
    _validate_common(args)
    _require(args.grid_size >= 1, "--grid-size must be >= 1")
    _require(args.trials_per_w >= 0, "--trials-per-w must be >= 0")
    _require(0.0 < args.eps_prime < 0.5, "--eps-prime must be in (0, 1/2)")
    _require(args.alpha_slack > 0.0, "--alpha-slack must be positive")
    cfg = _load_learner_config(args)
    rng = RngStream(args.seed).child("cover-probe-cli")
    if args.d == 2:
        angles = 2.0 * math.pi * np.arange(args.grid_size) / args.grid_size
        grid = np.column_stack([np.cos(angles), np.sin(angles)])
    else:
        grid = sample_uniform_sphere(args.d, rng.child("grid"), size=args.grid_size)
    outcome = cover_multiplicity_probe(
        cfg,
        grid,
        args.trials_per_w,
        args.eps_prime,
        args.alpha_slack,
        rng.child("probe"),
        loss_mc=args.loss_mc,
    )
    config = {
        "command": "cover-probe",
        "d": args.d,
        "gamma": args.gamma,
        "epsilon": args.epsilon,
        "delta": args.delta,
        "k": args.k,
        "n0": args.n0,
        "grid_size": args.grid_size,
        "trials_per_w": args.trials_per_w,
        "eps_prime": args.eps_prime,
        "alpha_slack": args.alpha_slack,
        "loss_mc": args.loss_mc,
        "seed": args.seed,
        "net": str(args.net),
        "svm_tol": args.svm_tol,
    }
    required = args.require_multiplicity
    passed = required is None or outcome.max_multiplicity >= required
    payload = {
        "config": config,
        "max_multiplicity": outcome.max_multiplicity,
        "witness": None if outcome.witness is None else list(outcome.witness),
        "rows": [
            {
                "direction": list(row.direction),
                "multiplicity": row.multiplicity,
                "qualifying": {
                    str(idx): {"frequency": freq, "loss": loss}
                    for idx, (freq, loss) in sorted(row.qualifying.items())
                },
            }
            for row in outcome.rows
        ],
        "passed": passed,
    }
    out = Path(args.out)
    _emit(
        payload,
        ["grid_index", "multiplicity"],
        [[j, row.multiplicity] for j, row in enumerate(outcome.rows)],
        out,
        args.format,
    )
    if args.figures:
        plots.save_cover_probe_figure(outcome.rows, _figure_path(out))
    print(
        f"cover-probe: max multiplicity {outcome.max_multiplicity} over "
        f"{args.grid_size} grid directions -> {'PASS' if passed else 'FAIL'}"
    )
    return 0 if passed else 1


def cmd_boost_demo(args) -> int:
    _require(0.0 < args.rho <= 1.0, "--rho must be in (0, 1]")
    _require(args.meta_runs >= 1, "--meta-runs must be >= 1")
    _require(args.domain_size >= 1, "--domain-size must be >= 1")
    _require(0.0 <= args.p_star <= 1.0, "--p-star must be in [0, 1]")
    cfg = BoostConfig(
        rho=args.rho, epsilon=args.epsilon, delta=args.delta, t=args.t, n1=args.n1, n0=args.n0
    )
    rng = RngStream(args.seed).child("boost-demo-cli")
    truth_gen = rng.child("truth").generator()
    truth = FiniteHypothesis(tuple(int(v) for v in truth_gen.choice((-1, 1), size=args.domain_size)))
    dist = FiniteDomainDistribution(truth=truth)

    def base(sample, sub_rng):
        gen = sub_rng.generator()
        if gen.random() < args.p_star:
            return truth
        return FiniteHypothesis(tuple(int(v) for v in gen.choice((-1, 1), size=args.domain_size)))

    counts = {"target": 0, "other": 0, "failure": 0}
    violations = 0
    for i in range(args.meta_runs):
        trace = stability_boost_trace(base, cfg, dist, rng.child("meta", i))
        if trace.output is None:
            counts["failure"] += 1
            continue
        counts["target" if trace.output == truth else "other"] += 1
        if not (
            trace.output_frequency >= cfg.rho - cfg.alpha / 2.0
            and trace.output_validation_loss <= 2.0 * cfg.epsilon / 3.0
        ):
            violations += 1
    success_rate = counts["target"] / args.meta_runs
    passed = violations == 0 and (
        args.min_success_rate is None or success_rate >= args.min_success_rate
    )
    config = {
        "command": "boost-demo",
        "rho": args.rho,
        "epsilon": args.epsilon,
        "delta": args.delta,
        "t": args.t,
        "n1": args.n1,
        "n0": args.n0,
        "domain_size": args.domain_size,
        "p_star": args.p_star,
        "meta_runs": args.meta_runs,
        "seed": args.seed,
    }
    payload = {
        "config": config,
        "list_bound": cfg.list_bound,
        "alpha": cfg.alpha,
        "outcomes": counts,
        "target_rate": success_rate,
        "condition_violations": violations,
        "passed": passed,
    }
    out = Path(args.out)
    _emit(
        payload,
        ["target", "other", "failure", "target_rate", "condition_violations"],
        [[counts["target"], counts["other"], counts["failure"], success_rate, violations]],
        out,
        args.format,
    )
    if args.figures:
        plots.save_boost_figure(counts, _figure_path(out))
    print(
        f"boost-demo: target hypothesis returned in {counts['target']}/{args.meta_runs} "
        f"meta-runs ({100 * success_rate:.1f}%), {violations} condition violations -> "
        f"{'PASS' if passed else 'FAIL'}"
    )
    return 0 if passed else 1


def cmd_concentration(args) -> int:
    _require(args.d >= 1, "--d must be >= 1")
    _require(args.k >= 1, "--k must be >= 1")
    _require(args.trials >= 1, "--trials must be >= 1")
    _require(args.t_steps >= 2, "--t-steps must be >= 2")
    rng = RngStream(args.seed).child("concentration-cli")
    grid = np.linspace(0.0, args.t_max, args.t_steps)
    rows = mean_concentration_probe(args.d, args.k, args.trials, grid, rng.child("probe"))
    slack = 3.0 * hoeffding_half_width(args.trials)
    ok = all(r.empirical_tail <= r.lemma_bound + slack for r in rows)
    config = {
        "command": "concentration",
        "d": args.d,
        "k": args.k,
        "trials": args.trials,
        "t_max": args.t_max,
        "t_steps": args.t_steps,
        "seed": args.seed,
    }
    payload = {
        "config": config,
        "monte_carlo_slack": slack,
        "rows": [
            {"t": r.t, "empirical_tail": r.empirical_tail, "lemma_bound": r.lemma_bound}
            for r in rows
        ],
        "passed": ok,
    }
    out = Path(args.out)
    _emit(
        payload,
        ["t", "empirical_tail", "lemma_bound"],
        [[r.t, r.empirical_tail, r.lemma_bound] for r in rows],
        out,
        args.format,
    )
    if args.figures:
        plots.save_concentration_figure(rows, _figure_path(out))
    print(
        f"concentration: empirical tail within bound+{slack:.4f} at all "
        f"{len(rows)} grid points -> {'PASS' if ok else 'FAIL'}"
    )
    return 0 if ok else 1


# ---------------------------------------------------------------------------
# Parser


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=0, help="top-level seed for all streams")
    parser.add_argument("--out", type=Path, required=True, help="report output path")
    parser.add_argument("--format", choices=_FORMATS, default="json")
    parser.add_argument("--figures", action=argparse.BooleanOptionalAction, default=True)


def _add_learner_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--d", type=int, required=True)
    parser.add_argument("--gamma", type=float, required=True)
    parser.add_argument("--epsilon", type=float, default=0.1)
    parser.add_argument("--delta", type=float, default=0.1)
    parser.add_argument("--k", type=int, required=True, help="SVM batches per learner run")
    parser.add_argument("--n0", type=int, required=True, help="points per SVM batch")
    parser.add_argument("--net", type=Path, required=True, help="net file (alpha must be gamma/2)")
    parser.add_argument("--svm-tol", type=float, default=1e-6)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="marginlab",
        description="Experiment driver for replicable large-margin halfspace learning.",
    )
    parser.add_argument(
        "--config",
        type=Path,
        default=None,
        help="JSON file of default argument values; explicit flags win",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("net-build", help="build, verify and persist a sphere net")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--probes", type=int, default=10_000)
    _add_common(p)
    p.set_defaults(func=cmd_net_build)

    p = sub.add_parser("replicability", help="estimate output lists over random distributions")
    _add_learner_args(p)
    p.add_argument("--trials", type=int, default=400)
    p.add_argument("--dists", type=int, default=20)
    p.add_argument("--loss-mc", type=int, default=2000)
    p.add_argument("--min-fraction", type=float, default=0.9)
    _add_common(p)
    p.set_defaults(func=cmd_replicability)

    p = sub.add_parser("dims", help="dimension engines on a CSV concept matrix")
    p.add_argument("--csv", type=Path, required=True)
    p.add_argument("--min-disambiguation", action="store_true")
    _add_common(p)
    p.set_defaults(func=cmd_dims)

    p = sub.add_parser("ghd", help="build a Gap Hamming Distance partial matrix")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--ldim", action="store_true", help="also compute the online dimension")
    _add_common(p)
    p.set_defaults(func=cmd_ghd)

    p = sub.add_parser("svm-check", help="cross-check the solver against the enumeration oracle")
    p.add_argument("--instances", type=int, default=200)
    p.add_argument("--tolerance", type=float, default=1e-6)
    p.add_argument("--svm-tol", type=float, default=1e-8)
    p.add_argument("--feasibility-samples", type=int, default=100)
    p.add_argument("--feasibility-gamma", type=float, default=0.3)
    _add_common(p)
    p.set_defaults(func=cmd_svm_check)

    p = sub.add_parser("cover-probe", help="cover multiplicity probe over a direction grid")
    _add_learner_args(p)
    p.add_argument("--grid-size", type=int, default=360)
    p.add_argument("--trials-per-w", type=int, default=100)
    p.add_argument("--eps-prime", type=float, default=0.45)
    p.add_argument("--alpha-slack", type=float, default=0.02)
    p.add_argument("--loss-mc", type=int, default=2000)
    p.add_argument("--require-multiplicity", type=int, default=None)
    _add_common(p)
    p.set_defaults(func=cmd_cover_probe)

    p = sub.add_parser("boost-demo", help="stability-to-list boosting on a finite domain")
    p.add_argument("--rho", type=float, default=0.55)
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--t", type=int, default=200)
    p.add_argument("--n1", type=int, default=200)
    p.add_argument("--n0", type=int, default=10)
    p.add_argument("--domain-size", type=int, default=20)
    p.add_argument("--p-star", type=float, default=0.6)
    p.add_argument("--meta-runs", type=int, default=200)
    p.add_argument("--min-success-rate", type=float, default=None)
    _add_common(p)
    p.set_defaults(func=cmd_boost_demo)

    p = sub.add_parser("concentration", help="averaged-vector concentration vs. its bound")
    p.add_argument("--d", type=int, default=3)
    p.add_argument("--k", type=int, default=100)
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--t-max", type=float, default=1.2)
    p.add_argument("--t-steps", type=int, default=13)
    _add_common(p)
    p.set_defaults(func=cmd_concentration)

    return parser


def _apply_config_file(parser: argparse.ArgumentParser, argv: list[str]) -> list[str]:
    """Fold --config file values in as parser defaults; explicit flags win."""
    if "--config" not in argv:
        return argv
    at = argv.index("--config")
    if at + 1 >= len(argv):
        raise ConfigError("--config requires a path")
    path = Path(argv[at + 1])
    try:
        values = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    if not isinstance(values, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    remaining = argv[:at] + argv[at + 2 :]
    if not remaining:
        raise ConfigError("a subcommand is required")
    command = remaining[0]
    sub_actions = next(
        a for a in parser._actions if isinstance(a, argparse._SubParsersAction)
    )
    if command not in sub_actions.choices:
        return remaining  # let argparse produce the usage error
    sub = sub_actions.choices[command]
    known = {
        action.dest for action in sub._actions if action.dest != argparse.SUPPRESS
    }
    defaults = {}
    for key, value in values.items():
        dest = key.replace("-", "_")
        if dest not in known:
            raise ConfigError(f"config file {path}: unknown key {key!r} for {command}")
        if dest in ("out", "net", "csv"):
            value = Path(value)
        defaults[dest] = value
    sub.set_defaults(**defaults)
    for action in sub._actions:
        if action.dest in defaults:
            action.required = False
    return remaining


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _apply_config_file(parser, argv)
        args = parser.parse_args(argv)
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except MarginLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
