"""Command-line entry point: ``qsatsim <command> ...``.

Exit status 0 on success, 2 for an invalid configuration, 3 when a size
guard refuses the request.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .errors import (DimacsParseError, IntegrationError, InvalidParameters, ResourceGuard,
                     UnsupportedInstance)
from .sat import (EnsembleParams, count_solutions, generate_instance, instance_seed,
                  read_instance, write_instance)

EXIT_OK, EXIT_CONFIG, EXIT_GUARD = 0, 2, 3

log = logging.getLogger("qsatsim")


# ------------------------------------------------------------------ helpers


def _emit(text: str, out: str | None, name: str | None = None) -> None:
    """Write to --out (a file, or a directory when ``name`` is given) or stdout."""
    if out is None:
        sys.stdout.write(text)
        return
    path = Path(out)
    if name is not None:
        path.mkdir(parents=True, exist_ok=True)
        path = path / name
    path.write_text(text)


def _form_from(args):
    from .schedules import PAPER_FORM, LinearForm
    if getattr(args, "coefficients", None):
        return LinearForm(*args.coefficients)
    return PAPER_FORM


def _sample(args):
    """Instances from files, or a fresh sample from (n, count)."""
    from .harness import SampleItem, sample_instances
    if args.instances:
        items = []
        for p in args.instances:
            inst = read_instance(p)
            items.append(SampleItem(inst, count_solutions(inst)))
        return items
    if args.n is None:
        raise InvalidParameters("give instance files or --n")
    return sample_instances(args.n, args.count, k=args.k, mu=args.mu, seed=args.seed,
                            soluble_only=not args.allow_insoluble)


def _seed_of(inst) -> int:
    return int(inst.seed) if inst.seed is not None else -1


def _add_sample_args(p):
    p.add_argument("instances", nargs="*", help="DIMACS files (default: generate)")
    p.add_argument("--n", type=int)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--mu", type=float, default=4.25)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--allow-insoluble", action="store_true")


def _run_method(args, method: str, **extra) -> int:
    from .harness import ExperimentConfig, evaluate_instance, records_csv
    items = _sample(args)
    cfg = ExperimentConfig(method=method, ns=(items[0].instance.n,), samples=len(items),
                           seed=args.seed, **extra)
    recs = [evaluate_instance(it, cfg, i) for i, it in enumerate(items)]
    _emit(records_csv(recs), args.out)
    return EXIT_OK


# ----------------------------------------------------------------- commands


def cmd_gen(args) -> int:
    from .harness import clause_counts
    if args.count < 1:
        raise InvalidParameters("--count must be at least 1")
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    lo, hi = clause_counts(args.n, args.mu)
    made = a = 0
    while made < args.count:
        m = hi if made % 2 else lo
        seed = instance_seed(args.seed, args.n, a)
        a += 1
        inst = generate_instance(EnsembleParams(args.n, args.k, m), seed)
        S = count_solutions(inst) if args.n <= 26 else None
        if args.soluble_only and not S:
            if S is None:
                raise ResourceGuard("--soluble-only needs n <= 26")
            continue
        write_instance(inst, out / f"n{args.n}_{made:04d}.cnf", S)
        made += 1
    print(f"wrote {made} instances to {out}")
    return EXIT_OK


def cmd_quantum(args) -> int:
    from .harness import (ExperimentConfig, ScheduleSpec, evaluate_instance, records_csv,
                          write_histograms)
    from .schedules import PhaseSchedule
    from .sim import run_trial
    items = _sample(args)
    fixed = PhaseSchedule.load(args.schedule) if args.schedule else None
    steps = args.steps if args.steps in ("n", "sublinear") else int(args.steps)
    spec = ScheduleSpec(form=_form_from(args), steps=steps)
    method = "quantum-gsat-informed" if args.gsat_informed is not None else "quantum"
    cfg = ExperimentConfig(method=method, ns=(items[0].instance.n,), samples=len(items),
                           seed=args.seed, schedule=spec,
                           informed_steps=args.gsat_informed or 0)
    if method != "quantum" and (fixed is not None or args.histograms is not None
                                or args.shots):
        raise InvalidParameters(
            "--gsat-informed does not combine with --schedule, --histograms or --shots")
    if args.shots < 0:
        raise InvalidParameters("--shots must be >= 0")
    recs = []
    for i, it in enumerate(items):
        if fixed is None and args.histograms is None and not args.shots:
            recs.append(evaluate_instance(it, cfg, i))
            continue
        from .harness import Record
        sched = fixed or spec.build(it.instance.n)
        psi, res = run_trial(it.instance, sched, record_histograms=args.histograms is not None,
                             record_stats=args.histograms is not None)
        if args.shots:
            from .sim import measure
            seen = measure(psi, args.shots, instance_seed(args.seed, it.instance.n, i, 3))
            hits = int(np.count_nonzero(it.instance.cost_table()[seen] == 0))
            print(f"instance {i}: {hits}/{args.shots} measurements were solutions",
                  file=sys.stderr)
        if args.histograms is not None:
            Path(args.histograms).mkdir(parents=True, exist_ok=True)
            write_histograms(res, Path(args.histograms) / f"hist_{i:04d}.csv")
        cost = sched.j / res.psoln if res.psoln > 0 else float("inf")
        recs.append(Record(it.instance.n, it.instance.m, _seed_of(it.instance), it.S,
                           "quantum", sched.j, res.psoln, cost))
    _emit(records_csv(recs), args.out)
    return EXIT_OK


def cmd_aa(args) -> int:
    if args.sampled:
        from .harness import records_csv, Record
        from .schedules import run_boyer_loop
        recs = []
        for i, it in enumerate(_sample(args)):
            run = run_boyer_loop(it.instance, instance_seed(args.seed, it.instance.n, i, 2))
            recs.append(Record(it.instance.n, it.instance.m, _seed_of(it.instance), it.S,
                               "aa-boyer", run.trials, float(run.solved),
                               float(run.steps) if run.solved else float("inf")))
        _emit(records_csv(recs), args.out)
        return EXIT_OK
    return _run_method(args, "aa-boyer" if args.boyer else "aa-known-s")


def cmd_gsat(args) -> int:
    from .gsat import GsatConfig
    g = GsatConfig(max_steps_per_try=args.max_steps, max_restarts=args.max_restarts,
                   step_budget=args.budget, strict=args.strict)
    return _run_method(args, "gsat", gsat=g)


def cmd_meanfield(args) -> int:
    from . import meanfield as mf
    from .harness import trajectory_csv
    if args.model == "search-r1":
        res = mf.boundary_search_r1(args.k, args.mu, family=args.family, budget=args.budget,
                                    seed=args.seed)
        text = json.dumps({"family": args.family, "coefficients": res.coefficients.tolist(),
                           "r1": res.r1, "converged": res.converged,
                           "linear_decay": res.linear_decay,
                           "evaluations": res.evaluations}, indent=2) + "\n"
        _emit(text, args.out)
        return EXIT_OK
    form = _form_from(args)
    z = s = None
    if args.model == "z":
        z = mf.integrate_Z(form, args.k, args.mu, steps=args.steps)
        final = f"|Z|={abs(z.final):.6g} argZ={np.angle(z.final):.6g}"
    else:
        s = mf.integrate_S(form, args.k, args.mu, steps=args.steps, variant=args.variant)
        Y, r, th = s.final
        final = f"r={r:.6g} theta={th:.6g} Y={Y:.6g} rate={mf.predicted_rate(r, args.k, args.mu):.6g}"
    _emit(trajectory_csv(z=z, s=s), args.out)
    print(final, file=sys.stderr)
    return EXIT_OK


def cmd_optimize(args) -> int:
    from .harness import run_optimization
    cfg = json.loads(Path(args.config).read_text())
    summary = run_optimization(cfg, seed=args.seed, threads=args.threads,
                               trace_path=args.trace)
    _emit(json.dumps(summary, indent=2) + "\n", args.out)
    return EXIT_OK


def cmd_experiment(args) -> int:
    from .harness import ExperimentConfig, records_csv, run_experiment
    cfg = ExperimentConfig.load(args.config)
    if args.seed is not None and args.seed_given:
        cfg = replace(cfg, seed=args.seed)
    recs = run_experiment(cfg, threads=args.threads)
    out = args.out or cfg.records
    _emit(records_csv(recs), out)
    return EXIT_OK


def cmd_fit(args) -> int:
    from .harness import exp_fit, read_records, summarize
    recs = []
    for p in args.records:
        recs.extend(read_records(p))
    lines = ["method,n,count,median,lo,hi"]
    fits = []
    for method, rows in summarize(recs).items():
        for n, cnt, med, lo, hi in rows:
            lines.append(f"{method},{n},{cnt},{med:.6g},{lo:.6g},{hi:.6g}")
        if len(rows) >= 3:
            f = exp_fit([r[0] for r in rows], [r[2] for r in rows])
            fits.append(f"# {method}: rate={f.rate:.4f} prefactor={f.prefactor:.4g}")
    _emit("\n".join(lines + fits) + "\n", args.out)
    return EXIT_OK


# ------------------------------------------------------------------- parser


def _global_args(p, default):
    # accepted before or after the subcommand
    p.add_argument("--seed", type=int, default=0 if default else argparse.SUPPRESS)
    p.add_argument("--threads", type=int, default=1 if default else argparse.SUPPRESS)
    p.add_argument("--out", help="output file or directory (default stdout)",
                   default=None if default else argparse.SUPPRESS)
    p.add_argument("-v", "--verbose", action="store_true",
                   default=False if default else argparse.SUPPRESS)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qsatsim", description=__doc__.splitlines()[0])
    _global_args(p, True)
    common = argparse.ArgumentParser(add_help=False)
    _global_args(common, False)
    sub = p.add_subparsers(dest="command", required=True)
    _add = sub.add_parser
    sub.add_parser = lambda *a, **kw: _add(*a, parents=[common], **kw)

    g = sub.add_parser("gen", help="write random instances as DIMACS plus sidecar")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--k", type=int, default=3)
    g.add_argument("--mu", type=float, default=4.25)
    g.add_argument("--count", type=int, default=1)
    g.add_argument("--soluble-only", action="store_true")
    g.set_defaults(func=cmd_gen)

    q = sub.add_parser("quantum", help="simulate the phase/mixing heuristic")
    _add_sample_args(q)
    q.add_argument("--schedule", help="schedule JSON file")
    q.add_argument("--coefficients", type=float, nargs=4, metavar=("R0", "R1", "T0", "T1"))
    q.add_argument("--steps", default="n", help="n, sublinear or a multiple of n")
    q.add_argument("--histograms", metavar="DIR", help="write per-step cost histograms")
    q.add_argument("--gsat-informed", type=int, metavar="T",
                   help="phase by the cost after T deterministic GSAT steps")
    q.add_argument("--shots", type=int, default=0,
                   help="also sample this many seeded measurements per instance")
    q.set_defaults(func=cmd_quantum)

    a = sub.add_parser("aa", help="amplitude amplification costs")
    _add_sample_args(a)
    mode = a.add_mutually_exclusive_group(required=True)
    mode.add_argument("--known-s", action="store_true")
    mode.add_argument("--boyer", action="store_true")
    a.add_argument("--sampled", action="store_true",
                   help="with --boyer: sample the loop instead of its expected cost")
    a.set_defaults(func=cmd_aa)

    gs = sub.add_parser("gsat", help="GSAT with restarts")
    _add_sample_args(gs)
    gs.add_argument("--max-steps", type=int, help="moves per try (default 2n)")
    gs.add_argument("--max-restarts", type=int)
    gs.add_argument("--budget", type=int, default=10_000_000)
    gs.add_argument("--strict", action="store_true", help="no sideways moves")
    gs.set_defaults(func=cmd_gsat)

    mfp = sub.add_parser("meanfield", help="integrate the mean-field models")
    mfp.add_argument("model", choices=("z", "s", "search-r1"))
    mfp.add_argument("--preset", choices=("paper",), default="paper")
    mfp.add_argument("--coefficients", type=float, nargs=4, metavar=("R0", "R1", "T0", "T1"))
    mfp.add_argument("--k", type=int, default=3)
    mfp.add_argument("--mu", type=float, default=4.25)
    mfp.add_argument("--steps", type=int, default=2000)
    mfp.add_argument("--variant", choices=("consistent", "literal"), default="consistent")
    mfp.add_argument("--family", choices=("linear", "spike"), default="spike")
    mfp.add_argument("--budget", type=int, default=400)
    mfp.set_defaults(func=cmd_meanfield)

    o = sub.add_parser("optimize", help="tune schedule parameters")
    o.add_argument("--config", required=True)
    o.add_argument("--trace", help="write the evaluation trace CSV here")
    o.set_defaults(func=cmd_optimize)

    e = sub.add_parser("experiment", help="run an experiment config to a records CSV")
    e.add_argument("--config", required=True)
    e.set_defaults(func=cmd_experiment)

    f = sub.add_parser("fit", help="medians, intervals and exponential rates")
    f.add_argument("records", nargs="+")
    f.set_defaults(func=cmd_fit)
    return p


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    parser = build_parser()
    args = parser.parse_args(argv)
    args.seed_given = any(a == "--seed" or a.startswith("--seed=") for a in argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except IntegrationError as exc:
        print(f"qsatsim: integration failed: {exc}", file=sys.stderr)
        return 1
    except ResourceGuard as exc:
        print(f"qsatsim: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except (InvalidParameters, UnsupportedInstance, DimacsParseError, FileNotFoundError,
            json.JSONDecodeError) as exc:
        print(f"qsatsim: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
