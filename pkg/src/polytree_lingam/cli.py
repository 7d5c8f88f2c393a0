"""Command-line entry point.

Subcommands: ``generate`` (synthetic model + dataset), ``learn`` (polytree
from a CSV), ``eval`` (score a learned graph), ``experiment`` (sweep from a
config file), ``oracle`` (population diagnostics for a model file).

Exit codes: 0 success, 2 usage, 3 data error, 4 numerical degeneracy.
"""

from __future__ import annotations

import argparse
import csv
import json
import shlex
import sys
import time
from importlib import resources

from . import __version__
from .cumulants import Dataset
from .errors import DataError, DegeneracyError
from .metrics import structural_hamming
from .model import (
    PopulationCumulantProvider,
    genericity_check,
    load_model,
    population_covariance,
    save_model,
    valid_threshold_interval,
)
from .orient import load_learned_graph
from .pipeline import ALGORITHMS, learn_polytree, run_orientation
from .simulate import (
    ErrorSpec,
    RESULT_FIELDS,
    config_from_mapping,
    generate_case,
    parse_config_text,
    parse_threshold_grid,
    run_experiment,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_DEGENERATE = 4


def _header_lines(args) -> list:
    return [
        f"invocation: polytree-lingam {shlex.join(args.argv)}",
        f"version: {__version__}",
    ]


def cmd_generate(args) -> int:
    spec = ErrorSpec(
        family=args.error,
        gaussian_fraction=args.gauss_fraction,
        gaussian_variance=args.gaussian_variance,
        per_node_params=args.per_node_params,
    )
    model, _, data = generate_case(args.p, spec, args.n, args.seed, args.center_errors)
    header = _header_lines(args)
    save_model(model, args.out_model, header)
    data.to_csv(args.out_data, header)
    print(f"wrote model to {args.out_model} and {args.n} x {args.p} samples to {args.out_data}")
    return EXIT_OK


def cmd_learn(args) -> int:
    data = Dataset.from_csv(args.data)
    if data.n < args.K + 1:
        raise DataError(f"learning with K={args.K} needs at least {args.K + 1} samples, got {data.n}")
    if args.standardize:
        from .cumulants import standardize_dataset

        data = standardize_dataset(data)

    grid = None
    if args.threshold_grid is not None:
        if args.algorithm == "pairwise":
            raise DataError("--threshold-grid only applies to pto/tpo")
        if args.truth is None:
            raise DataError("--threshold-grid needs --truth to select the best threshold")
        grid = parse_threshold_grid(args.threshold_grid)

    result = learn_polytree(
        data, args.algorithm, args.K, args.threshold, workers=args.workers
    )
    if grid is not None:
        truth = load_model(args.truth)
        from .cumulants import SampleCumulantProvider

        provider = SampleCumulantProvider(data, result.corr)
        best = None
        t0 = time.perf_counter()
        for theta in grid:
            graph = run_orientation(
                args.algorithm, result.skeleton, provider, args.K, theta
            )
            shd = structural_hamming(truth, graph).normalized
            if best is None or (shd, theta) < best[:2]:
                best = (shd, theta, graph)
        result.timings["orientation"] = time.perf_counter() - t0
        _, theta, graph = best
        result = type(result)(graph, result.skeleton, result.corr, theta, result.timings)

    lines = _header_lines(args)
    if result.threshold is not None:
        lines.append(f"threshold: {result.threshold!r}")
    with open(args.out, "w", encoding="utf-8") as fh:
        for line in lines:
            fh.write(f"# {line}\n")
        for line in result.graph.to_text_lines():
            fh.write(line + "\n")
    if args.out_skeleton:
        with open(args.out_skeleton, "w", encoding="utf-8") as fh:
            for line in _header_lines(args):
                fh.write(f"# {line}\n")
            for line in result.skeleton.to_text_lines():
                fh.write(line + "\n")

    timings = result.timings
    total = sum(timings.values())
    print(f"learned {len(result.graph.edges)} edges -> {args.out}")
    print(
        "phase seconds: correlation {correlation:.3f}  kruskal {kruskal:.3f}  "
        "orientation {orientation:.3f}  total {total:.3f}".format(total=total, **timings)
    )
    for conflict in result.graph.conflicts:
        print(f"conflict: {conflict}", file=sys.stderr)

    if args.json:
        payload = result.graph.to_json_dict()
        payload["threshold"] = result.threshold
        payload["timings"] = timings
        payload["invocation"] = f"polytree-lingam {shlex.join(args.argv)}"
        payload["version"] = __version__
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
    return EXIT_OK


def cmd_eval(args) -> int:
    truth = load_model(args.truth)
    learned = load_learned_graph(args.learned, p=truth.p)
    report = structural_hamming(truth, learned)
    print(f"normalized SHD: {report.normalized:.6g}")
    print(
        f"included {report.included}  omitted {report.omitted}  "
        f"misoriented {report.misoriented}  shared {report.shared}"
    )
    if report.provenance_errors:
        parts = ", ".join(f"{k}={v}" for k, v in sorted(report.provenance_errors.items()))
        print(f"errors by provenance: {parts}")
    if args.json:
        payload = {
            "p": report.p,
            "normalized": report.normalized,
            "included": report.included,
            "omitted": report.omitted,
            "misoriented": report.misoriented,
            "shared": report.shared,
            "provenanceErrors": report.provenance_errors,
        }
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
    return EXIT_OK


def _resolve_config(name_or_path) -> str:
    import os

    if os.path.exists(name_or_path):
        with open(name_or_path, "r", encoding="utf-8") as fh:
            return fh.read()
    bundled = resources.files("polytree_lingam").joinpath(f"configs/{name_or_path}.cfg")
    if bundled.is_file():
        return bundled.read_text(encoding="utf-8")
    raise DataError(f"no config file or bundled config named {name_or_path!r}")


def cmd_experiment(args) -> int:
    mapping = parse_config_text(_resolve_config(args.config))
    if not mapping:
        print("empty experiment config: set at least 'p' and 'ratios'", file=sys.stderr)
        return EXIT_USAGE
    overrides = {
        "p": args.p,
        "ratios": args.ratios,
        "replicates": args.replicates,
        "seed": args.seed,
        "K": args.K,
        "algorithms": args.algorithms,
        "error": args.error,
        "gauss_fractions": args.gauss_fractions,
        "threshold_grid": args.threshold_grid,
        "threshold_mode": args.threshold_mode,
    }
    for key, value in overrides.items():
        if value is not None:
            mapping[key] = value
    config = config_from_mapping(mapping)

    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        for line in _header_lines(args):
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(RESULT_FIELDS)

        def stream(row):
            writer.writerow(row.csv_values())
            fh.flush()
            if row.error:
                print(f"cell failed (replicate {row.replicate}): {row.error}", file=sys.stderr)

        rows = run_experiment(config, workers=args.workers, row_callback=stream)
    print(f"wrote {len(rows)} result rows to {args.out}")
    return EXIT_OK


def cmd_oracle(args) -> int:
    model = load_model(args.model)
    K = args.K
    sigma = population_covariance(model)
    print(f"model: p={model.p}, k_max={model.k_max}, order K={K}")

    print("edge correlations:")
    for u, v in model.edges:
        rho = sigma[u, v] / (sigma[u, u] * sigma[v, v]) ** 0.5
        print(f"  {u} -> {v}: rho = {rho:+.6f}")
    if model.p <= 12:
        print("population correlation matrix:")
        for i in range(model.p):
            row = " ".join(
                f"{sigma[i, j] / (sigma[i, i] * sigma[j, j]) ** 0.5:+.4f}"
                for j in range(model.p)
            )
            print(f"  {row}")

    try:
        lo, hi = valid_threshold_interval(model)
        print(f"valid correlation-threshold interval: ({lo:.6g}, {hi:.6g})")
    except DegeneracyError as exc:
        print(f"threshold interval: {exc}")

    try:
        report = genericity_check(model, K)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    bad = [e for e, ok in report.items() if not ok]
    if not bad:
        print(f"all {len(report)} edges generic at order {K}")
    else:
        for edge in bad:
            print(f"edge {edge[0]} -> {edge[1]}: NOT generic at order {K}")

    provider = PopulationCumulantProvider(model)
    skeleton = model.skeleton()
    truth_edges = set(model.edges)
    all_ok = True
    for algorithm in ALGORITHMS:
        try:
            graph = run_orientation(algorithm, skeleton, provider, K, mode="population")
            ok = set(graph.directed_edges()) == truth_edges
        except DegeneracyError as exc:
            print(f"{algorithm}: degenerate ({exc})")
            all_ok = False
            continue
        print(f"{algorithm}: {'recovers the true polytree' if ok else 'FAILS to recover'}")
        all_ok = all_ok and ok
    if all_ok and not bad:
        print("all edges generic; all three algorithms recover the true polytree")
    return EXIT_OK


def _fraction(value: str) -> float:
    x = float(value)
    if not 0.0 <= x <= 1.0:
        raise argparse.ArgumentTypeError(f"{value} not in [0, 1]")
    return x


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polytree-lingam",
        description="Learn linear non-Gaussian polytree models from observational data.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="draw a random model and a synthetic dataset")
    g.add_argument("--p", type=int, required=True, help="number of variables (>= 2)")
    g.add_argument("--n", type=int, required=True, help="number of samples")
    g.add_argument("--error", choices=("gamma", "uniform", "gaussian"), default="gamma")
    g.add_argument("--gauss-fraction", type=_fraction, default=0.0,
                   help="share of nodes forced to Gaussian errors")
    g.add_argument("--gaussian-variance", type=float, default=1.0)
    g.add_argument("--per-node-params", action="store_true",
                   help="draw error parameters independently per node instead of once per model")
    g.add_argument("--center-errors", action="store_true",
                   help="subtract exact error means (debugging aid; statistics are translation invariant)")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out-model", default="model.txt")
    g.add_argument("--out-data", default="data.csv")
    g.set_defaults(func=cmd_generate)

    l = sub.add_parser("learn", help="learn a polytree from a CSV dataset")
    l.add_argument("data", help="CSV file, rows = samples")
    l.add_argument("--algorithm", choices=ALGORITHMS, default="pairwise")
    l.add_argument("--K", type=int, choices=(3, 4), default=3,
                   help="highest cumulant order used by the rank tests")
    l.add_argument("--threshold", type=float, default=None,
                   help="independence threshold for pto/tpo (default: derived from the skeleton)")
    l.add_argument("--threshold-grid", default=None, metavar="LO:HI:STEP",
                   help="score a grid of thresholds against --truth and keep the best")
    l.add_argument("--truth", default=None, help="model file for grid selection")
    l.add_argument("--standardize", action="store_true",
                   help="rescale columns to unit variance before orientation statistics")
    l.add_argument("--workers", type=int, default=1)
    l.add_argument("--out", default="learned.txt")
    l.add_argument("--out-skeleton", default=None,
                   help="also write the undirected skeleton with edge weights")
    l.add_argument("--json", default=None, help="also write a JSON report with per-edge norms")
    l.set_defaults(func=cmd_learn)

    e = sub.add_parser("eval", help="score a learned graph against a true model")
    e.add_argument("--truth", required=True, help="model file")
    e.add_argument("--learned", required=True, help="learned-graph file")
    e.add_argument("--json", default=None)
    e.set_defaults(func=cmd_eval)

    x = sub.add_parser("experiment", help="run a sweep from a config file")
    x.add_argument("--config", required=True,
                   help="config path or bundled name (low-dim-gamma, gauss-sweep)")
    x.add_argument("--out", default="results.csv")
    x.add_argument("--workers", type=int, default=1)
    x.add_argument("--p", default=None, help="override: comma list of vertex counts")
    x.add_argument("--ratios", default=None, help="override: comma list of n/p ratios")
    x.add_argument("--replicates", default=None)
    x.add_argument("--seed", default=None)
    x.add_argument("--K", default=None)
    x.add_argument("--algorithms", default=None)
    x.add_argument("--error", default=None)
    x.add_argument("--gauss-fractions", dest="gauss_fractions", default=None)
    x.add_argument("--threshold-grid", dest="threshold_grid", default=None)
    x.add_argument("--threshold-mode", dest="threshold_mode", default=None)
    x.set_defaults(func=cmd_experiment)

    o = sub.add_parser("oracle", help="population diagnostics for a model file")
    o.add_argument("model", help="model file")
    o.add_argument("--K", type=int, choices=(3, 4), default=3)
    o.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "p", None) is not None and args.command == "generate" and args.p < 2:
        parser.error("--p must be at least 2")
    args.argv = argv
    try:
        return args.func(args)
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except DegeneracyError as exc:
        print(f"degeneracy: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE


def console_main() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console_main()
