"""Command-line interface: ``msimap <subcommand> [options]``.

Exit codes: 0 success, 1 theory check failed, 2 unreadable input,
3 numerical failure, 4 invalid parameter.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from contextlib import contextmanager

import numpy as np

from .errors import DegenerateInputError, OracleSizeError, ParameterError, ParseError, SpectralDomainError
from .evaluation import (
    adjusted_mutual_information,
    adjusted_rand_index,
    generate_dense_sparse,
    generate_two_moons,
    kmeans,
)
from .graph import build_knn_graph, load_point_csv
from .interpret import laplacian_score, rank_features
from .pipeline import RunConfig, build_tensor, read_config_file, run_embedding
from .pw_verify import (
    STACKED,
    SUMMED,
    find_lambda_set,
    graph_family,
    lambda_psi,
    poincare_sweep,
    random_operator,
    uniqueness_rank_check,
    verify_poincare_laplacian,
    verify_poincare_sgw,
)
from .sampling import sample_edges_ebc

EXIT_THEORY = 1
EXIT_PARSE = 2
EXIT_NUMERIC = 3
EXIT_PARAMETER = 4

FLOAT_FMT = "%.17g"


@contextmanager
def _open_out(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w") as fh:
            yield fh


def _write_table(path, header_lines, rows, fmt=FLOAT_FMT):
    with _open_out(path) as fh:
        for line in header_lines:
            fh.write(line + "\n")
        np.savetxt(fh, rows, delimiter=",", fmt=fmt)


def resolve_config(args) -> RunConfig:
    """Defaults, then the ``--config`` file, then command-line flags."""
    cfg = RunConfig()
    if getattr(args, "config", None):
        cfg = RunConfig.from_mapping(read_config_file(args.config), cfg)
    return cfg.replace(
        seed=args.seed, method=args.method, k_neighbors=args.k, n_bands=args.bands, epochs=args.epochs,
        sampler_kind=args.sampler, cheb_order=getattr(args, "order", None),
        deterministic=True if args.deterministic else None,
    )


def _load_points(args):
    if not args.input:
        raise ParameterError("--input is required")
    return load_point_csv(args.input, header=args.header, label_column=args.label_column)


def cmd_generate(args):
    if args.dataset == "two_moons":
        ds = generate_two_moons(args.n, args.noise, seed=args.seed)
    else:
        ds = generate_dense_sparse(seed=args.seed)
    head = f"# dataset={args.dataset}, seed={args.seed}, n={len(ds.labels)}"
    if args.dataset == "two_moons":
        head += f", noise={args.noise!r}"
    rows = np.column_stack([ds.points, ds.labels])
    fmt = [FLOAT_FMT] * ds.points.shape[1] + ["%d"]
    _write_table(args.output, [head], rows, fmt)
    return 0


def cmd_embed(args):
    cfg = resolve_config(args)
    x, _, names = _load_points(args)
    res = run_embedding(x, cfg, names)
    _write_table(args.output, [cfg.to_header()], res.embedding.points)
    return 0


def _read_labels(path):
    labels, _, _ = load_point_csv(path)
    if labels.shape[1] != 1:
        raise ParseError(f"{path}: expected a single label column")
    labels = labels.ravel()
    if not np.all(labels == np.round(labels)):
        raise ParseError(f"{path}: labels must be integers")
    return labels.astype(np.int64)


def cmd_evaluate(args):
    """With ``--labels`` the input is an embedding; otherwise the input is
    embedded first and the labels come from ``--label-column``."""
    if args.labels:
        y, _, _ = load_point_csv(args.input)
        labels = _read_labels(args.labels)
        seed = args.seed or 0
    else:
        if args.label_column is None:
            raise ParameterError("give --labels (embedding input) or --label-column (point input)")
        cfg = resolve_config(args)
        x, labels, names = _load_points(args)
        y = run_embedding(x, cfg, names).embedding.points
        seed = cfg.seed
    if len(labels) != y.shape[0]:
        raise ParameterError(f"{len(labels)} labels for {y.shape[0]} rows")
    pred = kmeans(y, len(np.unique(labels)), seed=seed)
    print(f"ari={adjusted_rand_index(labels, pred):.6f} ami={adjusted_mutual_information(labels, pred):.6f}")
    return 0


def cmd_importance(args):
    cfg = resolve_config(args)
    x, _, names = _load_points(args)
    res = run_embedding(x, cfg, names)
    graph = res.graph if args.score_graph == "input" else None
    report = rank_features(laplacian_score(res.embedding, graph, k=cfg.k_neighbors))
    with _open_out(args.output) as fh:
        fh.write(cfg.to_header() + "\n")
        fh.write("rank,feature_id,name,score,degenerate_flag\n")
        for r in report:
            fh.write(f"{r.rank},{r.feature_id},{r.name},{r.score!r},{int(r.degenerate)}\n")
    return 0


def cmd_sgw(args):
    cfg = resolve_config(args)
    x, _, names = _load_points(args)
    graph, lap, spectrum, bank, tensor = build_tensor(x, cfg)
    k, d, n = tensor.shape
    _write_table(args.output, [cfg.to_header()], tensor.coeffs.reshape(k * d, n))
    meta = {
        "n_bands": k, "n_features": d, "n_nodes": n,
        "row_order": "row = band * n_features + feature",
        "band_0": "scaling kernel", "scales": [float(s) for s in bank.scales],
        "lambda_max": float(bank.lambda_max), "lambda_max_method": spectrum.method,
        "cheb_order": cfg.cheb_order, "laplacian_kind": cfg.laplacian_kind,
        "feature_names": list(names) if names else None,
    }
    sidecar = args.sidecar or (args.output + ".json" if args.output not in (None, "-") else None)
    if sidecar:
        with open(sidecar, "w") as fh:
            json.dump(meta, fh, indent=1)
    else:
        print(json.dumps(meta), file=sys.stderr)
    return 0


def cmd_sample(args):
    cfg = resolve_config(args)
    x, _, _ = _load_points(args)
    graph = build_knn_graph(x, k=cfg.k_neighbors)
    n_e = graph.n_edges if args.n_samples is None else args.n_samples
    plan = sample_edges_ebc(graph, n_e, seed=cfg.seed)
    head = [cfg.to_header(), f"# n_samples={n_e}, uniform_fallback={str(plan.uniform_fallback).lower()}", "i,j,count"]
    _write_table(args.output, head, plan.counts(), "%d")
    return 0


def cmd_verify_theory(args):
    seed = args.seed or 0
    norm = args.norm
    failed = False
    if args.size is None:
        fams = (args.family,) if args.family else ("path", "star", "random")
        res = poincare_sweep(args.trials, max_nodes=args.max_nodes, families=fams, seed=seed, norm=norm,
                             counterexample_dir=args.counterexample_dir)
        print(f"{'check':<22}{'configs':>9}{'trials':>9}{'violations':>12}  result")
        rows = [
            ("poincare-laplacian", res.configurations, res.trials, res.laplacian_violations),
            (f"poincare-sgw-{norm}", res.configurations, res.trials, res.sgw_violations),
            ("uniqueness-rank", res.uniqueness_checked, res.uniqueness_checked, res.uniqueness_failures),
        ]
        for name, c, t, v in rows:
            print(f"{name:<22}{c:>9}{t:>9}{v:>12}  {'PASS' if v == 0 else 'FAIL'}")
        for path in res.counterexamples:
            print(f"counterexample: {path}")
        failed = not res.passed
    else:
        rng = np.random.default_rng(seed)
        g = graph_family(args.family or "random", args.size, seed=seed)
        ls = find_lambda_set(g)
        print(f"graph={args.family or 'random'} n={g.n_nodes} edges={g.n_edges} S={list(ls.S)} "
              f"d(G)={ls.lam:g} cond1={ls.cond1} cond2={ls.cond2}")
        if not ls.valid:
            print("no valid Lambda-set; nothing to check")
            return EXIT_THEORY
        print(f"{'check':<22}{'bound':>10}{'max ratio':>12}{'exact':>10}{'violations':>12}  result")
        rep = verify_poincare_laplacian(g, ls.S, args.trials, seed=seed)
        print(f"{'poincare-laplacian':<22}{rep.bound:>10.4g}{rep.max_ratio:>12.4g}{rep.exact_ratio:>10.4g}"
              f"{rep.violations:>12}  {'PASS' if rep.passed else 'FAIL'}")
        failed |= not rep.passed
        for t in range(args.operators):
            op = random_operator(rng)
            rep = verify_poincare_sgw(g, ls.S, op, args.trials, seed=seed + t, norm=norm)
            omega = (1.0 / lambda_psi(op, ls.lam)) * (1 - 1e-9)
            unique = uniqueness_rank_check(g, omega, ls.U)
            name = f"sgw[{t}] deg={op.degree}"
            print(f"{name:<22}{rep.bound:>10.4g}{rep.max_ratio:>12.4g}{rep.exact_ratio:>10.4g}"
                  f"{rep.violations:>12}  {'PASS' if rep.passed else 'FAIL'} unique={unique}")
            failed |= not rep.passed or (rep.passed and not unique)
    return EXIT_THEORY if failed else 0


def _add_common(p, pipeline=True):
    p.add_argument("--input", help="input CSV")
    p.add_argument("--output", help="output path (default: standard output)")
    p.add_argument("--seed", type=int)
    p.add_argument("--header", action="store_true", help="input has a header row of feature names")
    p.add_argument("--label-column", type=int, help="zero-based label column of the input (excluded from features)")
    if pipeline:
        p.add_argument("--config", help="flat key=value config file")
        p.add_argument("--method", type=int, choices=(1, 2))
        p.add_argument("--k", type=int, help="nearest neighbours")
        p.add_argument("--bands", type=int, help="number of SGW bands (scaling band included)")
        p.add_argument("--epochs", type=int)
        p.add_argument("--sampler", choices=("weight", "ebc"))
        p.add_argument("--deterministic", action="store_true", help="single-threaded, bit-reproducible optimization")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="msimap", description="Multi-scale SGW graph embeddings")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic labelled dataset")
    p.add_argument("--dataset", choices=("two_moons", "dense_sparse"), default="two_moons")
    p.add_argument("--n", type=int, default=600)
    p.add_argument("--noise", type=float, default=0.12)
    p.add_argument("--output")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("embed", help="compute an embedding")
    _add_common(p)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("evaluate", help="k-means on an embedding, print ARI and AMI")
    _add_common(p)
    p.add_argument("--labels", help="label CSV; makes --input an embedding")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("importance", help="Laplacian-score feature ranking")
    _add_common(p)
    p.add_argument("--score-graph", choices=("embedding", "input"), default="embedding")
    p.set_defaults(func=cmd_importance)

    p = sub.add_parser("sgw", help="dump the SGW tensor")
    _add_common(p)
    p.add_argument("--order", type=int, help="Chebyshev order")
    p.add_argument("--sidecar", help="metadata JSON path (default: OUTPUT.json)")
    p.set_defaults(func=cmd_sgw)

    p = sub.add_parser("sample", help="EBC edge sample plan as i,j,count")
    _add_common(p)
    p.add_argument("--n-samples", type=int, help="number of draws (default: number of edges)")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("verify-theory", help="Poincare and uniqueness checks on small graphs")
    p.add_argument("--family", choices=("path", "star", "random"))
    p.add_argument("--size", type=int, help="single graph of this size instead of a sweep")
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--max-nodes", type=int, default=30)
    p.add_argument("--operators", type=int, default=5, help="random operators per graph (--size mode)")
    p.add_argument("--norm", choices=(STACKED, SUMMED), default=STACKED)
    p.add_argument("--counterexample-dir")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_verify_theory)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "seed", None) is None and args.command in ("generate",):
        args.seed = 0
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (ParameterError, OracleSizeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARAMETER
    except (SpectralDomainError, DegenerateInputError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except BrokenPipeError:
        # reader closed early (e.g. piped into head)
        sys.stderr.close()
        return 0


if __name__ == "__main__":
    sys.exit(main())
