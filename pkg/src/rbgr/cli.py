"""Command-line interface: simulate | fit | summarize | diagnose."""

from __future__ import annotations

import argparse
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, io, metrics, summary
from .gibbs import run_node
from .model import validate_dataset
from .simulate import gen_dataset


def _threads_default():
    env = os.environ.get("RBGR_THREADS")
    return int(env) if env else 1


def make_parser():
    ap = argparse.ArgumentParser(prog="rbgr",
                                 description="Robust Bayesian graphical regression")
    sub = ap.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="generate synthetic data with ground truth")
    sim.add_argument("--out", required=True, type=Path)
    sim.add_argument("--n", type=int, default=250)
    sim.add_argument("--p", type=int, default=50)
    sim.add_argument("--q", type=int, default=3)
    sim.add_argument("--pi", type=float, default=0.5,
                     help="contamination weight of the random scales")
    sim.add_argument("--seed", type=int, default=1)
    sim.add_argument("--sparsity", type=float, default=0.02)
    sim.add_argument("--t0", type=float, default=0.15)
    sim.add_argument("--coef-lo", type=float, default=0.35)
    sim.add_argument("--coef-hi", type=float, default=0.5)
    sim.add_argument("--a-d", type=float, default=3.0)
    sim.add_argument("--b-d", type=float, default=2.0)

    fit = sub.add_parser("fit", help="run the per-node MCMC on y.csv / x.csv")
    fit.add_argument("--y", required=True, type=Path)
    fit.add_argument("--x", required=True, type=Path)
    fit.add_argument("--out", required=True, type=Path)
    fit.add_argument("--config", type=Path, help="JSON with hyper/chain/options")
    fit.add_argument("--iters", type=int)
    fit.add_argument("--burnin", type=int)
    fit.add_argument("--thin", type=int)
    fit.add_argument("--seed", type=int)
    fit.add_argument("--threads", type=int, default=None)
    fit.add_argument("--draws-format", choices=("npy", "csv"), default="npy")
    fit.add_argument("--center-y", action="store_true")
    fit.add_argument("--no-scales", action="store_true",
                     help="pin all random scales to 1")

    sm = sub.add_parser("summarize", help="symmetrized population and "
                                          "individual-level networks")
    sm.add_argument("--draws", required=True, type=Path)
    sm.add_argument("--x", required=True, type=Path)
    sm.add_argument("--out", required=True, type=Path)
    sm.add_argument("--c0", type=float, default=0.5)
    sm.add_argument("--c1", type=float, default=0.5)
    sm.add_argument("--alpha-rule", choices=("min", "max"), default="min")
    sm.add_argument("--edge-rule", choices=("max", "min"), default="max")
    sm.add_argument("--fdr", type=float, default=None,
                    help="derive c0/c1 from this FDR level instead")
    sm.add_argument("--percentiles", default="5,25,50,75,95")

    dg = sub.add_parser("diagnose", help="Geweke checks, H-scores, "
                                         "likelihood traces")
    dg.add_argument("--draws", required=True, type=Path)
    dg.add_argument("--y", required=True, type=Path)
    dg.add_argument("--out", required=True, type=Path)
    dg.add_argument("--batches", type=int, default=20)
    return ap


def cmd_simulate(args):
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(args.seed)
    truth = gen_dataset(args.n, args.p, args.q, args.pi,
                        sparsity=args.sparsity, t0=args.t0,
                        coef_lo=args.coef_lo, coef_hi=args.coef_hi,
                        a_d=args.a_d, b_d=args.b_d, rng=rng)
    io.write_matrix_csv(out / "y.csv", truth.y, "y")
    io.write_matrix_csv(out / "x.csv", truth.x, "x")
    io.write_json(out / "truth.json", {
        "n": args.n, "p": args.p, "q": args.q, "pi": args.pi, "t0": args.t0,
        "support": truth.spec.support.astype(int).tolist(),
        "coeff": truth.spec.coeff.tolist(),
        "covariate_support": truth.covariate_support.astype(int).tolist(),
        "edge_indicator": truth.edge_indicator.astype(int).tolist(),
        "edge_sign": truth.edge_sign.tolist(),
        "scales": truth.scales.tolist(),
    })
    io.write_json(out / "manifest.json", {
        "command": "simulate",
        "package_version": __version__,
        "params": {
            "n": args.n, "p": args.p, "q": args.q, "pi": args.pi,
            "seed": args.seed, "sparsity": args.sparsity, "t0": args.t0,
            "coef_lo": args.coef_lo, "coef_hi": args.coef_hi,
            "a_d": args.a_d, "b_d": args.b_d,
        },
        "files": ["y.csv", "x.csv", "truth.json"],
    })
    return 0


def cmd_fit(args):
    hyper, chain, options = io.build_run_config(
        args.config,
        chain_over={"iters": args.iters, "burnin": args.burnin,
                    "thin": args.thin, "seed": args.seed},
        options_over={"update_scales": False if args.no_scales else None},
    )
    threads = args.threads if args.threads is not None else _threads_default()
    y = io.read_matrix_csv(args.y)
    x = io.read_matrix_csv(args.x)
    data = validate_dataset(y, x, center=args.center_y)
    out = args.out
    draws_dir = out / "draws"
    draws_dir.mkdir(parents=True, exist_ok=True)
    t0 = time.time()
    node_meta = []
    if threads <= 1:
        results = []
        for j in range(data.p):
            tj = time.time()
            results.append(run_node(data, hyper, chain, j, options))
            node_meta.append({"node": j, "seconds": time.time() - tj,
                              "status": "ok"})
    else:
        from .gibbs import run_all
        tj = time.time()
        results = run_all(data, hyper, chain, options, threads=threads)
        per = (time.time() - tj) / data.p
        node_meta = [{"node": j, "seconds": per, "status": "ok"}
                     for j in range(data.p)]
    files = []
    for dr in results:
        path = io.save_draws(draws_dir, dr, args.draws_format)
        files.append(path.name)
        node_meta[dr.node]["file"] = path.name
    io.write_json(out / "manifest.json", {
        "command": "fit",
        "package_version": __version__,
        "numpy_version": np.__version__,
        "inputs": {
            "y": str(args.y), "y_sha256": io.sha256_file(args.y),
            "x": str(args.x), "x_sha256": io.sha256_file(args.x),
            "center_y": bool(args.center_y),
        },
        "config": io.config_echo(hyper, chain, options),
        "threads": threads,
        "draws_format": args.draws_format,
        "retained": chain.retained,
        "nodes": node_meta,
        "total_seconds": time.time() - t0,
    })
    return 0


def cmd_summarize(args):
    draws = io.load_all_draws(args.draws)
    p = len(draws)
    X = io.read_matrix_csv(args.x)
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    pop = summary.summarize_population(draws, p, args.alpha_rule)
    c0, c1 = args.c0, args.c1
    if args.fdr is not None:
        iu = np.triu_indices(p, k=1)
        c0 = metrics.fdr_cutoff(
            np.concatenate([pop.sym_pip[:, :, h][iu] for h in range(X.shape[1])]),
            args.fdr)
    records, degrees = summary.population_network(pop, c0)
    io.write_table_csv(out / "population_edges.csv",
                       ["node_a", "node_b", "covariate", "alpha_hat", "pip"],
                       [(r.node_a, r.node_b, int(r.key), r.value, r.prob)
                        for r in records])
    io.write_table_csv(out / "population_degrees.csv",
                       ["covariate", "node", "degree"],
                       [(h, v, int(degrees[h, v]))
                        for h in range(degrees.shape[0])
                        for v in range(p)])

    percentiles = [float(s) for s in str(args.percentiles).split(",") if s]
    nets = {}
    for h in range(X.shape[1]):
        nets[h] = summary.percentile_networks(
            draws, p, X, h, percentiles=percentiles, c1=-1.0 if args.fdr is not None
            else c1, alpha_rule=args.alpha_rule, edge_rule=args.edge_rule,
            take_row=pop.take_row)
    if args.fdr is not None:
        all_epp = np.array([r.prob for h in nets for pct in nets[h]
                            for r in nets[h][pct]])
        c1 = metrics.fdr_cutoff(all_epp, args.fdr)
    rows = []
    for h in sorted(nets):
        for pct in percentiles:
            for r in nets[h][pct]:
                if r.prob > c1:
                    rows.append((r.key, r.node_a, r.node_b, r.prob, r.sign, h))
    io.write_table_csv(out / "individual_edges.csv",
                       ["percentile", "node_a", "node_b", "epp", "sign",
                        "covariate"], rows)
    io.write_json(out / "manifest.json", {
        "command": "summarize",
        "package_version": __version__,
        "draws_dir": str(args.draws),
        "c0": c0, "c1": c1, "fdr": args.fdr,
        "alpha_rule": args.alpha_rule, "edge_rule": args.edge_rule,
        "percentiles": percentiles,
        "n_population_edges": len(records),
        "n_individual_edges": len(rows),
    })
    return 0


def cmd_diagnose(args):
    draws = io.load_all_draws(args.draws)
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    y = io.read_matrix_csv(args.y)
    p = len(draws)

    chains = {dr.node: dr.alpha for dr in draws}
    rows, all_pass = metrics.geweke_suite(chains, batches=args.batches)
    from .model import other_nodes
    table = []
    for node, k, h, z, pv, ok in rows:
        table.append((node, int(other_nodes(p, node)[k]), h, z, pv, ok))
    io.write_table_csv(out / "geweke.csv",
                       ["j", "k", "h", "z", "p", "adjusted_pass"], table)

    io.write_table_csv(out / "hscore.csv", ["column", "h_score"],
                       [(c, metrics.h_score(y[:, c])) for c in range(y.shape[1])])

    for dr in draws:
        io.write_table_csv(out / f"trace_node_{dr.node:04d}.csv",
                           ["iteration", "loglik"],
                           list(zip(dr.iterations.tolist(), dr.loglik)))
    io.write_json(out / "manifest.json", {
        "command": "diagnose",
        "package_version": __version__,
        "draws_dir": str(args.draws),
        "geweke_all_pass": bool(all_pass),
        "n_tests": len(rows),
    })
    return 0


def main(argv=None):
    args = make_parser().parse_args(argv)
    handlers = {"simulate": cmd_simulate, "fit": cmd_fit,
                "summarize": cmd_summarize, "diagnose": cmd_diagnose}
    try:
        return handlers[args.command](args)
    except (io.FileFormatError, ValueError, RuntimeError, OSError) as exc:
        print(f"rbgr {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
