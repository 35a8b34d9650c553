"""Command-line entry point: gamp-gap {fit,gap,loocv,replica,sweep}."""
import argparse
import json
import sys

import numpy as np

from .cd_solver import kkt_residual, objective
from .datagen import read_dataset
from .exact_cv import brute_loocv, fit, ridge_hat
from .gamp import GampOptions, gamp_run, stability_margin
from .gap_estimators import gap_from_estimate, gap_gamp, training_error
from .harness import SweepConfig, columns, fmt, run_sweep, to_csv, RAW_COLUMNS
from .likelihoods import LikelihoodFamily
from .penalties import Penalty
from .replica import at_unstable, rs_errors, rs_solve

FAMILIES = [f.value for f in LikelihoodFamily]
GAP_COLUMNS = ["err_train", "gdf", "sure", "fv", "waic", "cfv", "fchi", "delta_loocv_hat",
               "err_loocv_hat", "stability_margin", "radius_ok"]
REPLICA_OUT = ["alpha", "lambda1", "lambda2", "Q", "m", "chi", "rho_hat", "err_extra", "gdf", "fv",
               "at_lhs", "at_unstable"]


def _floats(text):
    return [float(t) for t in text.split(",") if t.strip()]


def _model_args(p, data=True):
    p.add_argument("--family", choices=FAMILIES, default="gaussian")
    p.add_argument("--lambda1", type=float, default=0.0)
    p.add_argument("--lambda2", type=float, default=0.0)
    if data:
        p.add_argument("--data", required=True, help="CSV with header; column 0 is y, the rest is F")
        p.add_argument("--solver", choices=["gamp", "cd"], default="gamp")


def _gamp_opts(args):
    return GampOptions(max_iter=args.max_iter, tol=args.tol, damping=args.damping)


def cmd_fit(args, out):
    data = read_dataset(args.data)
    pen = Penalty(args.lambda1, args.lambda2)
    diag = {}
    if args.solver == "gamp":
        st = gamp_run(data, args.family, pen, _gamp_opts(args))
        x = st.x_hat
        diag.update(converged=st.converged, iterations=st.iter,
                    stability_margin=stability_margin(st, data.alpha))
    else:
        x = fit(data, args.family, pen, "cd")
        diag.update(converged=True)
    diag.update(objective=objective(x, data, args.family, pen), kkt_residual=kkt_residual(x, data, args.family, pen),
                nonzeros=int(np.count_nonzero(x)))
    json.dump({"x_hat": [float(fmt(v)) for v in x], "diagnostics": diag}, out, indent=1)
    out.write("\n")


def cmd_gap(args, out):
    data = read_dataset(args.data)
    pen = Penalty(args.lambda1, args.lambda2)
    if args.route == "gamp":
        if args.solver != "gamp":
            raise SystemExit("route 'gamp' needs --solver gamp")
        st = gamp_run(data, args.family, pen, _gamp_opts(args))
        if not st.converged:
            print(f"warning: GAMP stopped after {st.iter} iterations without converging", file=sys.stderr)
        rep = gap_gamp(st, data, args.family, pen, sigma2=args.sigma2)
    else:
        x = fit(data, args.family, pen, args.solver, gamp_opts=_gamp_opts(args))
        rep = gap_from_estimate(x, data, args.family, pen, use_cavity_variance=args.route == "cavity",
                                sigma2=args.sigma2)
    out.write(to_csv([rep.as_dict()], GAP_COLUMNS))


def cmd_loocv(args, out):
    data = read_dataset(args.data)
    pen = Penalty(args.lambda1, args.lambda2)
    if args.mode == "press":
        if args.family != "gaussian" or args.lambda1 != 0.0:
            raise SystemExit("PRESS applies to gaussian ridge only (lambda1 = 0)")
        hat = ridge_hat(data, args.lambda2)
        err_train = training_error(hat.y_hat, data.y, "gaussian")
        row = {"mode": "press", "err_loocv": hat.press, "err_train": err_train,
               "gap": hat.press - err_train, "df": hat.df}
    else:
        x = fit(data, args.family, pen, args.solver)
        err, _ = brute_loocv(data, args.family, pen, solver=args.solver, x_full=x)
        err_train = training_error(data.F @ x / np.sqrt(data.N), data.y, args.family)
        row = {"mode": "brute", "err_loocv": err, "err_train": err_train, "gap": err - err_train, "df": np.nan}
    out.write(to_csv([row], ["mode", "err_loocv", "err_train", "gap", "df"]))


def cmd_replica(args, out):
    rows = []
    for lam1 in _floats(args.lambda1):
        pen = Penalty(lam1, args.lambda2)
        for alpha in _floats(args.alpha_grid):
            order = rs_solve(args.family, pen, alpha, args.rho, args.sigma_x, args.sigma)
            e = rs_errors(order, args.family)
            unstable, lhs = at_unstable(order, args.family, pen, alpha)
            if not order.converged:
                print(f"warning: replica iteration did not converge at alpha={alpha}", file=sys.stderr)
            rows.append({"alpha": alpha, "lambda1": lam1, "lambda2": args.lambda2, "Q": order.Q, "m": order.m,
                         "chi": order.chi, "rho_hat": order.rho_hat, "err_extra": e["err_extra"],
                         "gdf": e["gdf"], "fv": e["fv"], "at_lhs": lhs, "at_unstable": bool(unstable)})
    out.write(to_csv(rows, REPLICA_OUT))


def cmd_sweep(args, out):
    cfg = SweepConfig.from_file(args.config)
    raw = [] if args.raw else None
    text = to_csv(run_sweep(cfg, raw), columns(cfg.replica))
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        out.write(text)
    if args.raw:
        with open(args.raw, "w") as fh:
            fh.write(to_csv(raw, RAW_COLUMNS))


def build_parser():
    p = argparse.ArgumentParser(prog="gamp-gap", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    f = sub.add_parser("fit", help="fit a penalized GLM and print x_hat with diagnostics")
    _model_args(f)
    g = sub.add_parser("gap", help="generalization-gap report as one CSV row")
    _model_args(g)
    g.add_argument("--route", choices=["gamp", "hessian", "cavity"], default="gamp")
    g.add_argument("--sigma2", type=float, default=1.0, help="noise variance used by SURE")
    for q in (f, g):
        q.add_argument("--max-iter", type=int, default=1000)
        q.add_argument("--tol", type=float, default=1e-8)
        q.add_argument("--damping", type=float, default=0.7)

    lo = sub.add_parser("loocv", help="exact leave-one-out error")
    _model_args(lo)
    lo.add_argument("--mode", choices=["press", "brute"], default="press")

    r = sub.add_parser("replica", help="replica-symmetric theory over an alpha grid")
    r.add_argument("--family", choices=["gaussian", "logistic"], default="gaussian")
    r.add_argument("--alpha-grid", required=True, help="comma-separated alpha values")
    r.add_argument("--lambda1", default="0", help="comma-separated lambda1 values")
    r.add_argument("--lambda2", type=float, default=0.0)
    r.add_argument("--rho", type=float, default=1.0)
    r.add_argument("--sigma", type=float, default=1.0)
    r.add_argument("--sigma-x", type=float, default=1.0)

    s = sub.add_parser("sweep", help="run a sweep described by a JSON config")
    s.add_argument("--config", required=True)
    s.add_argument("--out", help="aggregated CSV path (default stdout)")
    s.add_argument("--raw", help="optional per-seed CSV path")
    return p


COMMANDS = {"fit": cmd_fit, "gap": cmd_gap, "loocv": cmd_loocv, "replica": cmd_replica, "sweep": cmd_sweep}


def main(argv=None, out=None):
    args = build_parser().parse_args(argv)
    try:
        COMMANDS[args.command](args, out or sys.stdout)
    except (ValueError, RuntimeError, OSError, np.linalg.LinAlgError) as exc:
        print(f"gamp-gap {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
