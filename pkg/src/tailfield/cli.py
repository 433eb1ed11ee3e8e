"""Command-line interface: ``tailfield {simulate,estimate,test,mc,theory}``.

Options can also be set through environment variables named
``TAILFIELD_<OPTION>`` (for example ``TAILFIELD_SEED``); command-line flags
take precedence over the environment, which takes precedence over defaults.

Exit codes: 0 success, 1 usage or validation error, 2 degenerate data,
3 input/output failure.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path


from . import core, io, sim, stattest, theory
from .errors import DegenerateDataError, ValidationError

EXIT_OK, EXIT_USAGE, EXIT_DEGENERATE, EXIT_IO = 0, 1, 2, 3
ENV_PREFIX = "TAILFIELD_"

log = logging.getLogger("tailfield")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _env(dest, default):
    return os.environ.get(ENV_PREFIX + dest.upper(), default)


def _opt(p, *flags, dest, default=None, **kw):
    p.add_argument(*flags, dest=dest, default=_env(dest, default), **kw)


def _float_list(text):
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _query(text):
    """``"0,3:1,1"`` -> ((0, 3), (1.0, 1.0))"""
    try:
        idx, xs = text.split(":")
        return tuple(int(i) for i in idx.split(",")), tuple(float(x) for x in xs.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"query must look like '0,3:1,1', got {text!r}")


def _common(p):
    _opt(p, "--format", dest="format", default="csv", choices=["csv", "json"],
         help="table format (default csv)")
    _opt(p, "--seed", dest="seed", default=0, type=int, help="RNG seed")


def build_parser():
    parser = _Parser(prog="tailfield", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="simulate a sample to CSV")
    _opt(p, "--model", dest="model", default="smith", choices=["smith", "pareto"])
    _opt(p, "--n", dest="n", default=500, type=int)
    _opt(p, "--grid-n", dest="grid_n", default=20, type=int, help="number of grid intervals N")
    _opt(p, "--theta", dest="theta", default=0.0, type=float, help="grid distortion in [0, 1]")
    _opt(p, "--window", dest="window", default=sim.DEFAULT_WINDOW, type=float,
         help="Smith window half-width")
    _opt(p, "--out", dest="out", default="sample.csv")
    _common(p)

    p = sub.add_parser("estimate", help="rank-based tail copula estimates")
    _opt(p, "--input", dest="input", required=_env("input", None) is None)
    _opt(p, "--k", dest="k", default=None, type=float)
    _opt(p, "--eta", dest="eta", default=None, type=float)
    p.add_argument("--query", dest="query", action="append", type=_query, default=[],
                   help="locations and arguments, e.g. 0,3:1,1 (repeatable)")
    _opt(p, "--out-dir", dest="out_dir", default=".")
    _opt(p, "--prefix", dest="prefix", default="estimates")
    _common(p)

    p = sub.add_parser("test", help="tail copula stationarity test")
    _opt(p, "--input", dest="input", required=_env("input", None) is None)
    _opt(p, "--k", dest="k", default=None, type=float)
    _opt(p, "--delta", dest="delta", default=2, type=int)
    _opt(p, "--eta", dest="eta", default=None, type=float)
    _opt(p, "--mvn-tol", dest="mvn_tol", default=stattest.DEFAULT_TEST_TOL, type=float)
    p.add_argument("--nominal-grid", action="store_true",
                   help="analyse columns as observed at r/N regardless of the header")
    _opt(p, "--out", dest="out", default="report.json")
    _common(p)

    p = sub.add_parser("mc", help="Monte Carlo size/power experiment")
    _opt(p, "--model", dest="model", default="smith", choices=["smith", "pareto"])
    _opt(p, "--thetas", dest="thetas", default="0,0.5,1", type=_float_list)
    _opt(p, "--alphas", dest="alphas", default="0.01,0.05,0.1", type=_float_list)
    _opt(p, "--n", dest="n", default=500, type=int)
    _opt(p, "--k", dest="k", default=50, type=float)
    _opt(p, "--grid-n", dest="grid_n", default=20, type=int)
    _opt(p, "--delta", dest="delta", default=2, type=int)
    _opt(p, "--eta", dest="eta", default=None, type=float)
    _opt(p, "--mvn-tol", dest="mvn_tol", default=stattest.DEFAULT_TEST_TOL, type=float)
    _opt(p, "--pdf-tol", dest="pdf_tol", default=1e-4, type=float)
    _opt(p, "--reps", dest="reps", default=100, type=int)
    _opt(p, "--jobs", dest="jobs", default=1, type=int)
    _opt(p, "--out-dir", dest="out_dir", default="mc_out")
    p.add_argument("--no-plots", action="store_true", help="skip PNG figures")
    _common(p)

    p = sub.add_parser("theory", help="closed-form tail copulas and limit covariance")
    _opt(p, "--model", dest="model", default="smith", choices=["smith", "pareto"])
    _opt(p, "--grid-n", dest="grid_n", default=20, type=int)
    _opt(p, "--delta", dest="delta", default=2, type=int)
    _opt(p, "--out-dir", dest="out_dir", default=".")
    _opt(p, "--prefix", dest="prefix", default="theory")
    _common(p)
    return parser


def _config_echo(args):
    return {k: v for k, v in vars(args).items() if k not in ("verbose",)}


def cmd_simulate(args):
    grid = sim.distort_grid(sim.Grid.uniform(args.grid_n), args.theta)
    kwargs = {"window_halfwidth": args.window} if args.model == "smith" else {}
    sample = sim.simulate(args.model, args.n, grid, seed=args.seed, **kwargs)
    io.write_sample(args.out, sample, {"theta": args.theta, "grid_n": args.grid_n})
    log.info("wrote %d x %d sample to %s", sample.n, len(grid), args.out)
    return EXIT_OK


def _default_k(n):
    return float(max(1, round(n / 10)))


def cmd_estimate(args):
    sample = io.read_sample(args.input)
    ranks = core.compute_ranks(sample)
    k = args.k if args.k is not None else _default_k(sample.n)
    eta = args.eta if args.eta is not None else core.default_bandwidth(k)
    pairwise = core.pairwise_tdc_matrix(ranks, k)
    fd = core.partial_derivative_matrix(ranks, k, eta)
    queries = []
    for t_idx, x in args.query:
        q = core.TailCopulaQuery(t_idx, x, k)
        queries.append({"t_indices": list(t_idx), "x": list(x),
                        "R_hat": core.empirical_tail_copula(ranks, q),
                        "l_hat": core.empirical_stdf(ranks, q),
                        "l_hat_inclusion_exclusion": core.stdf_by_inclusion_exclusion(ranks, q)})
    m = ranks.n_locations
    derivs = [(s, t, j, fd[s, t] if j == 1 else fd[t, s])
              for s in range(m) for t in range(m) if s != t for j in (1, 2)]
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    loc = sample.grid.locations
    if args.format == "json":
        io.write_json(out / f"{args.prefix}.json", {
            "config": _config_echo(args) | {"k": k, "eta": eta},
            "locations": loc, "pairwise": pairwise, "queries": queries,
            "derivatives": [dict(zip(("s_index", "t_index", "j", "estimate"), d))
                            for d in derivs],
            "ties": ranks.ties})
    else:
        io.write_csv(out / f"{args.prefix}_pairwise.csv", ["location"] + [io.fmt(v) for v in loc],
                     [[loc[i], *pairwise[i]] for i in range(m)])
        io.write_csv(out / f"{args.prefix}_queries.csv",
                     ["t_indices", "x", "R_hat", "l_hat", "l_hat_inclusion_exclusion"],
                     [[" ".join(map(str, q["t_indices"])), " ".join(io.fmt(v) for v in q["x"]),
                       q["R_hat"], q["l_hat"], q["l_hat_inclusion_exclusion"]] for q in queries])
        io.write_csv(out / f"{args.prefix}_derivatives.csv",
                     ["s_index", "t_index", "j", "estimate"], derivs)
    return EXIT_OK


def cmd_test(args):
    sample = io.read_sample(args.input)
    if args.nominal_grid:
        sample = sample.with_grid(sim.Grid.uniform(len(sample.grid) - 1))
    k = args.k if args.k is not None else _default_k(sample.n)
    config = stattest.TestConfig(k=k, Delta=args.delta, eta=args.eta, mvn_tol=args.mvn_tol,
                                 mvn_seed=args.seed)
    try:
        res = stattest.stationarity_test(sample, config)
    except DegenerateDataError as exc:
        report = {"config": _config_echo(args) | config.as_dict(), "error": str(exc),
                  "diagnostics": exc.diagnostics}
        io.write_json(args.out, report)
        print(f"degenerate data: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    report = {"config": _config_echo(args) | config.as_dict(), "n": sample.n,
              "N": sample.grid.N, **res.as_dict()}
    io.write_json(args.out, report)
    print(f"D = {res.D:.6g}  (2*Delta*sqrt(k)*D = {res.scaled_statistic})")
    print(f"p-value = {res.p_value:.4f}")
    print("I_hat = " + " ".join(f"{v:.4f}" for v in res.I_hat))
    return EXIT_OK


def cmd_mc(args):
    from . import report

    config = stattest.TestConfig(k=args.k, Delta=args.delta, eta=args.eta, mvn_tol=args.mvn_tol)
    result = stattest.monte_carlo_experiment(args.model, args.thetas, args.n, args.k,
                                             args.grid_n, args.delta, args.reps, args.seed,
                                             alphas=tuple(args.alphas), config=config,
                                             jobs=args.jobs)
    written = report.write_experiment(result, args.out_dir, plots=not args.no_plots,
                                      pdf_tol=args.pdf_tol)
    for theta, alpha, rate, se in result.summary_rows():
        print(f"theta={theta:g} alpha={alpha:g} reject_rate={rate:.3f} se={se:.3f}")
    for name, path in written.items():
        log.info("%s: %s", name, path)
    return EXIT_OK


def cmd_theory(args):
    model = theory.Model.parse(args.model)
    grid = sim.Grid.uniform(args.grid_n)
    loc = grid.locations
    rows = []
    for s in range(len(loc)):
        for t in range(s + 1, len(loc)):
            rows.append((loc[s], loc[t], theory.bivariate_R(model, loc[s], loc[t], 1, 1),
                         theory.husler_reiss_partial(model, loc[s], loc[t], 1, 1, 1),
                         theory.husler_reiss_partial(model, loc[s], loc[t], 2, 1, 1)))
    Sigma = stattest.theoretical_VN_covariance(model, args.grid_n, args.delta)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if args.format == "json":
        io.write_json(out / f"{args.prefix}.json", {
            "config": _config_echo(args),
            "pairs": [dict(zip(("s", "t", "R", "Rdot1", "Rdot2"), r)) for r in rows],
            "Sigma": Sigma})
    else:
        io.write_csv(out / f"{args.prefix}_pairs.csv", ["s", "t", "R", "Rdot1", "Rdot2"], rows)
        io.write_csv(out / f"{args.prefix}_sigma.csv", None, Sigma)
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "estimate": cmd_estimate, "test": cmd_test,
            "mc": cmd_mc, "theory": cmd_theory}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DegenerateDataError as exc:
        print(f"degenerate data: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
