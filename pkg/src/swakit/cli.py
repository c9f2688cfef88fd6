"""Command-line front end.

Every subcommand reads plain files, writes its artifacts into ``--out``,
and drops a ``<command>_manifest.json`` beside them recording the exact
configuration, seed, artifact paths, tool version, and wall time.  All
randomness flows from ``--seed``: two runs with the same inputs and seed
produce byte-identical artifacts (the manifest differs only in wall time).

Exit codes: 0 success, 1 usage error, 2 configuration/input error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .distributions import (
    dist_to_dict,
    fit_hyper_erlang_em,
    load_dist,
    save_dist,
)
from .engine import (
    BoundedQueueSpec,
    PipelineConfig,
    Strategy,
    read_emissions,
    run_pipeline,
    write_emissions,
)
from .errors import (
    ConfigError,
    InstabilityError,
    NoSolutionError,
    NumericalError,
    StateSpaceError,
    SwakitError,
)
from .metrics import evaluate
from .params import estimate_capacity, estimate_timeout
from .queueing import des_simulate, load_model, predict
from .trace import (
    TraceConfig,
    build_catalog,
    default_arrival_dist,
    default_degree_dist,
    default_span_dist,
    generate_trace,
    read_trace,
    truth_index,
    write_trace,
)

log = logging.getLogger("swakit")


class _Parser(argparse.ArgumentParser):
    """argparse that exits 1 (not 2) on usage problems, per our exit-code map."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _write_json(path: Path, doc) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _manifest(args, command: str, outputs: dict, t0: float, extra_config=None) -> None:
    out_dir = Path(args.out)
    cfg = {
        k: (str(v) if isinstance(v, Path) else v)
        for k, v in vars(args).items()
        if k not in ("func", "out") and not k.startswith("_")
    }
    if extra_config:
        cfg.update(extra_config)
    doc = {
        "tool": "swakit",
        "tool_version": __version__,
        "command": command,
        "config": cfg,
        "seed": getattr(args, "seed", None),
        "outputs": {k: str(v) for k, v in outputs.items()},
        "wall_time_s": round(time.monotonic() - t0, 6),
    }
    _write_json(out_dir / f"{command.replace('-', '_')}_manifest.json", doc)


def _floats_csv(text: str):
    try:
        return [float(v) for v in text.split(",") if v != ""]
    except ValueError as exc:
        raise ConfigError(f"bad numeric list {text!r}: {exc}") from None


def _ints_csv(text: str):
    try:
        return [int(v) for v in text.split(",") if v != ""]
    except ValueError as exc:
        raise ConfigError(f"bad integer list {text!r}: {exc}") from None


def _load_dist_opt(path, fallback):
    return load_dist(path) if path else fallback()


def _members_path(emitted: Path) -> Path:
    return emitted.with_name(emitted.stem + "_members" + emitted.suffix)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_gen_trace(args) -> int:
    t0 = time.monotonic()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    degree = _load_dist_opt(args.degree_dist, default_degree_dist)
    span = _load_dist_opt(args.span_dist, default_span_dist)
    arrival = _load_dist_opt(args.arrival_dist, default_arrival_dist)
    cat_seed, trace_seed = np.random.SeedSequence(args.seed).spawn(2)
    catalog = build_catalog(
        args.services,
        degree,
        seed=cat_seed,
        n_partitions=args.partitions,
        shared_atomics=args.shared_atomics,
    )
    cfg = TraceConfig(
        instance_count=args.instances,
        arrival_dist=arrival,
        span_dist=span,
        user_pool=args.user_pool,
        repeat_factor=args.repeat_factor,
        seed=trace_seed,
    )
    trace = generate_trace(catalog, cfg)
    trace_path = out / "trace.csv"
    write_trace(trace, trace_path)
    print(f"wrote {trace.n_tuples} tuples ({args.instances} instances) to {trace_path}")
    _manifest(args, "gen-trace", {"trace": trace_path}, t0)
    return 0


def _samples_from_args(args) -> np.ndarray:
    if args.values and args.trace:
        raise ConfigError("give either --values or --trace, not both")
    if args.values:
        try:
            data = np.loadtxt(args.values, dtype=float, ndmin=1)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read samples from {args.values}: {exc}") from None
        return data
    if not args.trace:
        raise ConfigError("fit-dist needs --values or --trace")
    trace = read_trace(args.trace)
    truth = truth_index(trace)
    if args.field == "degree":
        return np.array([t.degree for t in truth.values()], dtype=float)
    if args.field == "span_s":
        vals = np.array([t.span_ms / 1000.0 for t in truth.values()], dtype=float)
        return vals[vals > 0]
    if args.field == "gap_ms":
        arr = np.sort(np.array([t.primary_arrival for t in truth.values()], dtype=float))
        gaps = np.diff(arr)
        return gaps[gaps > 0]
    raise ConfigError(f"unknown field {args.field!r}")


def cmd_fit_dist(args) -> int:
    t0 = time.monotonic()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    samples = _samples_from_args(args)
    result = fit_hyper_erlang_em(
        samples,
        branches=args.branches,
        max_phases=args.max_phases,
        tol=args.tol,
        max_iter=args.max_iter,
    )
    dist_path = out / "dist.json"
    save_dist(result.dist, dist_path)
    report = {
        "samples": int(samples.size),
        "log_likelihood": result.log_likelihood,
        "iterations": result.iterations,
        "converged": result.converged,
        "degenerate": result.degenerate,
        "distribution": dist_to_dict(result.dist),
    }
    report_path = out / "fit_report.json"
    _write_json(report_path, report)
    outputs = {"dist": dist_path, "report": report_path}
    if args.emit_curves:
        hi = float(np.quantile(samples, 0.999)) * 1.2
        xs = np.linspace(0.0, hi, 256)
        curves_path = out / "curves.csv"
        with open(curves_path, "w", encoding="utf-8", newline="") as fh:
            fh.write("x,pdf,cdf\n")
            for x in xs:
                fh.write(
                    f"{x:.8g},{float(result.dist.pdf(x)):.8g},{float(result.dist.cdf(x)):.8g}\n"
                )
        outputs["curves"] = curves_path
    print(
        f"fit {type(result.dist).__name__} to {samples.size} samples, "
        f"log-likelihood {result.log_likelihood:.4f}"
        + (" (degenerate)" if result.degenerate else "")
    )
    _manifest(args, "fit-dist", outputs, t0)
    return 0


def cmd_estimate_params(args) -> int:
    t0 = time.monotonic()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    degree = _load_dist_opt(args.degree_dist, default_degree_dist)
    span = _load_dist_opt(args.span_dist, default_span_dist)
    doc = {
        "capacity": estimate_capacity(degree, args.alpha),
        "timeout_s": estimate_timeout(span, args.beta),
    }
    params_path = out / "params.json"
    _write_json(params_path, doc)
    print(json.dumps(doc, sort_keys=True))
    _manifest(args, "estimate-params", {"params": params_path}, t0)
    return 0


def cmd_run_pipeline(args) -> int:
    t0 = time.monotonic()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.config:
        cfg = PipelineConfig.from_json(args.config)
    else:
        cfg = PipelineConfig()
    if args.strategy:
        cfg.strategy = Strategy.parse(args.strategy)
    if args.queue_capacity is not None:
        cfg.queue = BoundedQueueSpec(
            pages=cfg.queue.pages,
            page_size=cfg.queue.page_size,
            tuple_size=cfg.queue.tuple_size,
            capacity_override=args.queue_capacity,
        )
    trace = read_trace(args.trace)
    result = run_pipeline(trace, cfg, keep_members=not args.no_members)
    emitted_path = out / "emitted.csv"
    members_path = None if args.no_members else _members_path(emitted_path)
    write_emissions(result.emissions, emitted_path, members_path)
    stats_path = out / "operator_stats.json"
    _write_json(
        stats_path,
        {
            "union": result.union_stats.to_dict(),
            "aggregate": result.aggregate_stats.to_dict(),
            "config": cfg.to_dict(),
        },
    )
    outputs = {"emitted": emitted_path, "stats": stats_path}
    if members_path:
        outputs["members"] = members_path
    print(
        f"{len(result.emissions)} emissions from {result.union_stats.tuples_in} tuples "
        f"({result.union_stats.tuples_dropped} dropped)"
    )
    _manifest(args, "run-pipeline", outputs, t0, extra_config={"pipeline": cfg.to_dict()})
    return 0


def cmd_evaluate(args) -> int:
    t0 = time.monotonic()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    emitted = Path(args.emitted)
    members = Path(args.members) if args.members else _members_path(emitted)
    if not members.exists():
        raise ConfigError(
            f"member sidecar {members} not found; rerun run-pipeline without --no-members"
        )
    emissions = read_emissions(emitted, members)
    trace = read_trace(args.trace)
    gammas = _floats_csv(args.gamma)
    report = evaluate(emissions, trace, gammas)
    report_path = out / "evaluation.json"
    _write_json(report_path, report.to_dict())
    print(json.dumps(report.to_dict(), sort_keys=True))
    _manifest(args, "evaluate", {"report": report_path}, t0)
    return 0


def cmd_predict(args) -> int:
    t0 = time.monotonic()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    model = load_model(args.model)
    perf = predict(model)
    doc = perf.to_dict()
    pred_path = out / "predict.json"
    _write_json(pred_path, doc)
    print(json.dumps(doc, sort_keys=True))
    _manifest(args, "predict", {"indicators": pred_path}, t0)
    return 0


def cmd_simulate_queue(args) -> int:
    t0 = time.monotonic()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    model = load_model(args.model)
    perf = des_simulate(
        model,
        arrivals=args.arrivals,
        seed=args.seed,
        warmup_frac=args.warmup,
        n_batches=args.batches,
    )
    doc = perf.to_dict()
    sim_path = out / "simulate.json"
    _write_json(sim_path, doc)
    print(json.dumps({k: doc[k] for k in ("L", "Lq", "W", "Wq")}, sort_keys=True))
    _manifest(args, "simulate-queue", {"indicators": sim_path}, t0)
    return 0


def cmd_compare(args) -> int:
    t0 = time.monotonic()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    trace = read_trace(args.trace)
    gammas = _floats_csv(args.gamma)
    strategy = Strategy.parse(args.strategy)
    tuple_size = args.tuple_size

    def one_run(cfg, label):
        result = run_pipeline(trace, cfg, keep_members=True)
        rep = evaluate(result.emissions, trace, gammas)
        stats = result.aggregate_stats
        return {
            "label": label,
            "config": cfg.to_dict()["aggregate"],
            "completeness": {f"gamma_{g:g}": rep.completeness[g] for g in gammas},
            "capture_rate": rep.capture_rate,
            "recall": rep.recall,
            "correct_rate": rep.correct_rate,
            "emissions": rep.emissions,
            "occupancy_avg": stats.occupancy_avg,
            "occupancy_max": stats.occupancy_max,
            "storage_avg_mb": stats.storage_avg / 2**20,
            "storage_max_mb": stats.storage_max / 2**20,
            "residence_avg_s": stats.residence_avg_ms / 1000.0,
        }

    queue = BoundedQueueSpec(tuple_size=tuple_size)
    rows = [
        one_run(
            PipelineConfig(
                queue=queue,
                kind="swa",
                capacity=args.capacity,
                timeout_s=args.timeout,
                strategy=strategy,
            ),
            f"swa_{args.capacity}_{args.timeout}",
        )
    ]
    for w in _ints_csv(args.sliding):
        rows.append(
            one_run(
                PipelineConfig(queue=queue, kind="sliding", window=w, step=w, strategy=strategy),
                f"sliding_{w}",
            )
        )
    doc = {"strategy": strategy.value, "runs": rows}
    cmp_path = out / "compare.json"
    _write_json(cmp_path, doc)
    for r in rows:
        print(
            f"{r['label']:>16}: complete(1)={r['completeness']['gamma_1']:.4f} "
            f"capture={r['capture_rate']:.4f} occ_avg={r['occupancy_avg']:.1f} "
            f"storage_avg={r['storage_avg_mb']:.3f}MB"
        )
    _manifest(args, "compare", {"report": cmp_path}, t0)
    return 0


# ---------------------------------------------------------------------------
# parser wiring
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="swakit", description=__doc__)
    p.add_argument("--version", action="version", version=f"swakit {__version__}")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add(name, fn, help_text):
        sp = sub.add_parser(name, help=help_text)
        sp.set_defaults(func=fn)
        sp.add_argument("--out", default=".", help="output directory (default: .)")
        return sp

    sp = add("gen-trace", cmd_gen_trace, "synthesize an invocation trace")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--instances", type=int, default=13997)
    sp.add_argument("--services", type=int, default=10000)
    sp.add_argument("--repeat-factor", type=float, default=1.3997)
    sp.add_argument("--user-pool", type=int, default=5000)
    sp.add_argument("--partitions", type=int, default=2)
    sp.add_argument("--shared-atomics", action="store_true",
                    help="draw subordinate ids from a shared pool (ambiguous referrers)")
    sp.add_argument("--degree-dist", help="JSON distribution for composition degree")
    sp.add_argument("--span-dist", help="JSON distribution for instance span (seconds)")
    sp.add_argument("--arrival-dist", help="JSON distribution for arrival gaps (ms)")

    sp = add("fit-dist", cmd_fit_dist, "fit a hyper-Erlang law to samples")
    sp.add_argument("--values", help="file with one sample per line")
    sp.add_argument("--trace", help="trace CSV to draw samples from")
    sp.add_argument("--field", choices=("degree", "span_s", "gap_ms"), default="span_s")
    sp.add_argument("--branches", type=int, default=2)
    sp.add_argument("--max-phases", type=int, default=10)
    sp.add_argument("--tol", type=float, default=1e-7)
    sp.add_argument("--max-iter", type=int, default=2000)
    sp.add_argument("--emit-curves", action="store_true",
                    help="also write an (x, pdf, cdf) grid")

    sp = add("estimate-params", cmd_estimate_params, "derive window capacity and timeout")
    sp.add_argument("--alpha", type=float, default=0.90,
                    help="degree coverage level for capacity")
    sp.add_argument("--beta", type=float, default=0.05,
                    help="tolerated fraction of instances outliving the timeout")
    sp.add_argument("--degree-dist", help="JSON degree distribution (default: built-in)")
    sp.add_argument("--span-dist", help="JSON span distribution in seconds (default: built-in)")

    sp = add("run-pipeline", cmd_run_pipeline, "replay a trace through union + aggregate")
    sp.add_argument("--trace", required=True)
    sp.add_argument("--config", help="pipeline config JSON")
    sp.add_argument("--strategy", help="override the config's association strategy")
    sp.add_argument("--queue-capacity", type=int,
                    help="override the derived union queue capacity")
    sp.add_argument("--no-members", action="store_true",
                    help="skip the member sidecar (disables later evaluation)")

    sp = add("evaluate", cmd_evaluate, "score emissions against trace ground truth")
    sp.add_argument("--emitted", required=True)
    sp.add_argument("--trace", required=True)
    sp.add_argument("--members", help="member sidecar (default: <emitted>_members.csv)")
    sp.add_argument("--gamma", default="1,0.85,0.75")

    sp = add("predict", cmd_predict, "analytic indicators for a queue model")
    sp.add_argument("--model", required=True)

    sp = add("simulate-queue", cmd_simulate_queue, "simulate a queue model")
    sp.add_argument("--model", required=True)
    sp.add_argument("--arrivals", type=int, default=1_000_000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--warmup", type=float, default=0.05)
    sp.add_argument("--batches", type=int, default=25)

    sp = add("compare", cmd_compare, "window mechanism shoot-out on one trace")
    sp.add_argument("--trace", required=True)
    sp.add_argument("--capacity", type=int, default=13)
    sp.add_argument("--timeout", type=int, default=22)
    sp.add_argument("--sliding", default="8000,16000,32000",
                    help="comma list of tumbling batch sizes")
    sp.add_argument("--strategy", default="head_ts_ip")
    sp.add_argument("--gamma", default="1,0.85,0.75")
    sp.add_argument("--tuple-size", type=int, default=135)

    return p


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (NumericalError, StateSpaceError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, NoSolutionError, InstabilityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SwakitError as exc:  # any other deliberate error counts as config
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
