"""Command-line interface for benchmark generation, distance computation,
structure recovery, noise sweeps, confounder demonstrations, and scoring."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .experiments import (
    ExperimentConfig,
    generate_graph,
    resolve_graph,
    run_sweep,
    score_external,
    auto_tolerances,
)
from .ggm import (
    NoiseSpec,
    empirical_distances,
    information_distances,
    noisy_covariance,
    sample,
    synthesize_precision,
)
from .graphs import ast_to_json, graph_to_json
from .identifiability import demo_report
from .pipeline import PipelineError, Tolerances, run_nomad


def _emit(text: str, out: str | None) -> None:
    if out is None:
        print(text)
    else:
        Path(out).write_text(text + "\n")
        print(f"wrote {out}")


def _matrix_json(labels, entries: np.ndarray, key: str) -> str:
    payload = {"labels": list(labels), key: np.asarray(entries).tolist()}
    return json.dumps(payload, indent=2, sort_keys=True)


def _tolerances(args: argparse.Namespace) -> Tolerances | None:
    xi = getattr(args, "xi", None)
    eps_d = getattr(args, "eps_d", None)
    if xi is None and eps_d is None:
        return None
    if xi is None:
        raise SystemExit("--eps-d requires --xi")
    if eps_d is None:
        eps_d = xi / 14.0
    return Tolerances(xi=xi, eps_d=eps_d, sep_tol=eps_d / 6.0)


def _trial_seed(seed: int, index: int = 0) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def _observed_model(args: argparse.Namespace):
    """Synthesize the trial-0 model for a one-shot command: graph, precision,
    noise, and the noisy covariance the tools actually see."""
    g = resolve_graph(args.graph, args.seed)
    seed = _trial_seed(args.seed)
    k = synthesize_precision(g, seed=seed)
    p = k.p
    if args.noise_max > 0:
        rng = np.random.default_rng(np.random.SeedSequence([seed, 1]))
        noise = NoiseSpec.of(rng.uniform(0.0, args.noise_max, size=p))
    else:
        noise = NoiseSpec.zero(p)
    observed = noisy_covariance(k.covariance(), noise)
    return g, k, noise, observed, seed


def _cmd_generate(args: argparse.Namespace) -> int:
    g = generate_graph(args.graph, args.seed)
    _emit(graph_to_json(g), args.out)
    return 0


def _cmd_distances(args: argparse.Namespace) -> int:
    g, k, noise, observed, seed = _observed_model(args)
    if args.emit == "covariance":
        _emit(_matrix_json(g.sorted_vertices(), observed, "sigma"), args.out)
        return 0
    if args.emit == "data" or args.samples:
        if not args.samples:
            raise SystemExit("--emit data requires --samples")
        data = sample(observed, args.samples, seed=_trial_seed(seed, 2))
        if args.emit == "data":
            rows = [[str(v) for v in g.sorted_vertices()]]
            rows += [[repr(x) for x in row] for row in data]
            text = "\n".join(",".join(row) for row in rows)
            _emit(text, args.out)
            return 0
        dist = empirical_distances(data, labels=g.sorted_vertices())
    else:
        dist = information_distances(observed, labels=g.sorted_vertices())
    _emit(_matrix_json(dist.labels, dist.entries, "entries"), args.out)
    return 0


def _cmd_nomad(args: argparse.Namespace) -> int:
    g, k, noise, observed, seed = _observed_model(args)
    tol = _tolerances(args)
    if args.samples:
        data = sample(observed, args.samples, seed=_trial_seed(seed, 2))
        dist = empirical_distances(data, labels=g.sorted_vertices())
        mode = "finite"
        if tol is None:
            tol = auto_tolerances(g, k, noise)
    else:
        dist = information_distances(observed, labels=g.sorted_vertices())
        mode = "population"
    ast, diagnostics = run_nomad(dist, mode=mode, tol=tol, return_diagnostics=True)
    _emit(ast_to_json(ast), args.out)
    summary = {
        key: diagnostics[key]
        for key in (
            "n_triples",
            "n_triple_pairs",
            "n_tia_passes",
            "collection_sizes",
            "ambiguous_hidden_modes",
            "stage_ms",
        )
        if key in diagnostics
    }
    print(json.dumps(summary, sort_keys=True))
    parts = sorted(sorted(part) for part in ast.parts)
    print(f"parts: {parts}")
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    cfg = ExperimentConfig(
        graph_source=args.graph,
        noise_max=args.noise_max,
        n_samples=args.samples or 0,
        trials=args.trials,
        seed=args.seed,
        tolerances=_tolerances(args),
        output_dir=args.out,
    )
    records = run_sweep(cfg)
    rate = sum(r.equivalence_pass for r in records) / len(records)
    print(f"trials: {len(records)}  pass_rate: {rate:.3f}")
    if args.out is not None:
        print(f"wrote {Path(args.out) / 'trials.csv'}")
    return 0


def _cmd_identifiability_demo(args: argparse.Namespace) -> int:
    report = demo_report(seed=args.seed, trials=args.trials, noise_max=args.noise_max)
    _emit(json.dumps(report, indent=2, sort_keys=True), args.out)
    triangle = report["triangle_locality"]
    cycle = report["cycle_block"]
    print(
        "triangle block: decomposition_error="
        f"{triangle['decomposition_error']:.3e} outside_deviation="
        f"{triangle['outside_block_deviation']:.3e} in_class="
        f"{triangle['in_equivalence_class']}"
    )
    print(
        f"cycle block: {cycle['h_differs']}/{cycle['trials']} trials produced a"
        f" different graph, {cycle['in_class']}/{cycle['trials']} stayed in class"
    )
    return 0


def _cmd_score(args: argparse.Namespace) -> int:
    truth = resolve_graph(args.graph, args.seed)
    record = score_external(args.candidate, truth)
    payload = {
        "equivalence_pass": record.equivalence_pass,
        "families_recovered": record.families_recovered,
        "noncut_recovered": record.noncut_recovered,
        "k_recovered": record.k_recovered,
    }
    if args.out is not None:
        Path(args.out).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    print("PASS" if record.equivalence_pass else "FAIL", json.dumps(payload, sort_keys=True))
    return 0 if record.equivalence_pass else 1


def _add_model_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--graph", required=True, help="generator id or graph JSON path")
    sub.add_argument("--noise-max", type=float, default=1.0, dest="noise_max")
    mode = sub.add_mutually_exclusive_group()
    mode.add_argument("--samples", type=int, default=0, help="sample count (finite mode)")
    mode.add_argument(
        "--population",
        action="store_const",
        const=0,
        dest="samples",
        help="use exact population distances (default)",
    )
    sub.add_argument("--seed", type=int, default=0)


def _add_tolerance_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--xi", type=float, default=None, help="triple-test tolerance")
    sub.add_argument("--eps-d", type=float, default=None, dest="eps_d", help="mode-grouping tolerance")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nomad",
        description="Structure recovery for Gaussian graphical models under "
        "unknown diagonal measurement noise.",
    )
    parser.add_argument("--config", help="JSON file whose keys mirror the long flags")
    commands = parser.add_subparsers(dest="command", required=True)

    gen = commands.add_parser("generate", help="emit a benchmark graph as JSON")
    gen.add_argument("--graph", required=True, help="generator id, e.g. fig1a or chain(8)")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out")
    gen.set_defaults(func=_cmd_generate)

    dist = commands.add_parser("distances", help="synthesize a model and emit distances")
    _add_model_flags(dist)
    dist.add_argument(
        "--emit",
        choices=("distances", "covariance", "data"),
        default="distances",
        help="what to write: distance matrix, noisy covariance, or sample CSV",
    )
    dist.add_argument("--out")
    dist.set_defaults(func=_cmd_distances)

    rec = commands.add_parser("nomad", help="run the recovery pipeline once")
    _add_model_flags(rec)
    _add_tolerance_flags(rec)
    rec.add_argument("--out", help="write the recovered tree JSON here")
    rec.set_defaults(func=_cmd_nomad)

    sweep = commands.add_parser("sweep", help="run repeated scored trials")
    _add_model_flags(sweep)
    _add_tolerance_flags(sweep)
    sweep.add_argument("--trials", type=int, default=15)
    sweep.add_argument("--out", help="directory for trials.csv")
    sweep.set_defaults(func=_cmd_sweep)

    demo = commands.add_parser(
        "identifiability-demo",
        help="show that block-interior noise moves the model within its class",
    )
    demo.add_argument("--seed", type=int, default=0)
    demo.add_argument("--trials", type=int, default=20)
    demo.add_argument("--noise-max", type=float, default=1.0, dest="noise_max")
    demo.add_argument("--out")
    demo.set_defaults(func=_cmd_identifiability_demo)

    score = commands.add_parser("score", help="score an external adjacency JSON")
    score.add_argument("--graph", required=True, help="true graph: generator id or JSON path")
    score.add_argument("--seed", type=int, default=0)
    score.add_argument("candidate", help="path to the candidate graph JSON")
    score.add_argument("--out")
    score.set_defaults(func=_cmd_score)

    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> list[str]:
    """Load --config JSON (keys mirror long flags) as subcommand defaults."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if known.config is None:
        return argv
    raw = json.loads(Path(known.config).read_text())
    defaults = {str(k).replace("-", "_"): v for k, v in raw.items()}
    for action in parser._subparsers._group_actions:  # noqa: SLF001
        for sub in action.choices.values():
            valid = {a.dest for a in sub._actions}  # noqa: SLF001
            sub.set_defaults(**{k: v for k, v in defaults.items() if k in valid})
    return argv


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    argv = _apply_config(parser, argv)
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except PipelineError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
