"""Experiment driver: grids x seeds -> per-seed rows -> aggregated CSV.

Every (grid point, seed) pair is an independent task. Tasks run on a
thread pool whose size is capped by $GAMP_GAP_THREADS, and results are
merged in sorted key order so the output does not depend on scheduling.
"""
import csv
import io
import itertools
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields
from typing import List, Optional

import numpy as np

from .datagen import empirical_extra_error, gen_predictors, gen_truth_and_data
from .errors import ConvergenceError, DivergenceError, DomainError, RefitError, SingularCavityError
from .exact_cv import brute_loocv, fit, ridge_hat
from .gamp import Dataset, GampOptions, gamp_run
from .gap_estimators import gap_from_estimate, gap_gamp, training_error
from .likelihoods import LikelihoodFamily, a_prime, as_family
from .parallel import max_workers
from .penalties import Penalty
from .replica import at_unstable, rs_errors, rs_solve

MEAN_COLUMNS = [
    "alpha_tilde", "lambda1", "err_train", "gdf", "sure", "fv", "waic", "cfv", "fchi",
    "delta_loocv_hat", "delta_loocv_exact", "err_extra_empirical", "stability_margin", "radius_ok",
]
LEAD_COLUMNS = ["seed_count", "M", "N", "alpha", "alpha_tilde", "lambda1", "lambda2"]
REPLICA_COLUMNS = ["rs_err_extra", "rs_gdf", "rs_fv", "rs_rho_hat", "rs_at_lhs"]


def columns(with_replica: bool = False) -> List[str]:
    body = LEAD_COLUMNS + [c for c in MEAN_COLUMNS if c not in LEAD_COLUMNS]
    out = body + [f"{c}_se" for c in MEAN_COLUMNS]
    if with_replica:
        out += REPLICA_COLUMNS
    return out + ["failures"]


RAW_COLUMNS = ["M", "N", "seed", "alpha", "alpha_tilde", "lambda1", "lambda2"] + [
    c for c in MEAN_COLUMNS if c not in ("alpha_tilde", "lambda1")
] + ["error"]


@dataclass
class SweepConfig:
    family: str = "gaussian"
    M: int = 200
    N_grid: List[int] = field(default_factory=lambda: [100])
    lambda1_grid: List[float] = field(default_factory=lambda: [0.0])
    alpha_tilde_grid: List[float] = field(default_factory=list)
    lambda2: float = 1.0
    rho: float = 1.0
    sigma_x: float = 1.0
    sigma: float = 1.0
    design: str = "iid"
    sigma_d: float = 0.5
    rho_F: float = 1.0
    n_seeds: int = 20
    base_seed: int = 0
    route: str = "gamp"
    solver: str = "gamp"
    exact: str = "auto"
    replica: bool = False
    threads: Optional[int] = None

    @classmethod
    def from_dict(cls, d: dict) -> "SweepConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown sweep config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_file(cls, path) -> "SweepConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def points(self):
        if self.alpha_tilde_grid:
            return [(N, "alpha_tilde", a) for N in self.N_grid for a in self.alpha_tilde_grid]
        return [(N, "lambda1", l1) for N in self.N_grid for l1 in self.lambda1_grid]


@dataclass
class PinResult:
    lambda1: float
    count: int
    achieved: bool


def _count(x):
    return int(np.count_nonzero(x))


def pin_alpha_tilde(data: Dataset, family, lambda2: float, target: float, solver: str = "cd",
                    max_bisect: int = 60) -> PinResult:
    """Bisect lambda1 until ||x_hat||_0 is within one of M / target."""
    fam = as_family(family)
    want = data.M / target
    grad0 = data.F.T @ (data.y - np.asarray(a_prime(fam, np.zeros(data.M)))) / np.sqrt(data.N)
    lo, hi = 0.0, float(np.max(np.abs(grad0))) * (1.0 + 1e-9)
    if want > min(data.M, data.N) + 1 or want < 1:
        return PinResult(hi, 0, False)
    best = PinResult(hi, 0, False)
    x_warm = None
    for _ in range(max_bisect):
        mid = 0.5 * (lo + hi)
        try:
            x = fit(data, fam, Penalty(mid, lambda2), solver, x0=x_warm)
        except (ConvergenceError, DivergenceError, ValueError):
            lo = mid
            continue
        x_warm = x
        k = _count(x)
        if abs(k - want) < abs(best.count - want):
            best = PinResult(mid, k, False)
        if abs(k - want) <= 1:
            return PinResult(mid, k, True)
        if k > want:
            lo = mid
        else:
            hi = mid
    return best


def _exact_gap(cfg, data, fam, pen, x_hat):
    mode = cfg.exact
    if mode == "none":
        return np.nan
    if mode == "auto":
        mode = "press" if (fam is LikelihoodFamily.GAUSSIAN and pen.lambda1 == 0.0) else "none"
        if mode == "none":
            return np.nan
    if mode == "press":
        hat = ridge_hat(data, pen.lambda2)
        return hat.press - training_error(hat.y_hat, data.y, fam)
    solver = "cd" if cfg.solver == "direct" else cfg.solver
    err, _ = brute_loocv(data, fam, pen, solver=solver, x_full=x_hat, n_jobs=1)
    theta = data.F @ x_hat / np.sqrt(data.N)
    return err - training_error(theta, data.y, fam)


def run_one(cfg: SweepConfig, N: int, mode: str, value: float, seed: int) -> dict:
    """Fit, estimate and evaluate a single (grid point, seed) task."""
    fam = as_family(cfg.family)
    M = cfg.M
    row = {"M": M, "N": N, "seed": seed, "alpha": M / N, "lambda2": cfg.lambda2, "error": ""}
    F = gen_predictors(cfg.design, M, N, seed, sigma_d=cfg.sigma_d, rho_F=cfg.rho_F)
    data, truth = gen_truth_and_data(F, fam, cfg.rho, cfg.sigma_x, cfg.sigma, seed)
    try:
        if mode == "alpha_tilde":
            pin_solver = "cd" if cfg.solver in ("cd", "direct") else cfg.solver
            pin = pin_alpha_tilde(data, fam, cfg.lambda2, value, pin_solver)
            if not pin.achieved:
                row["error"] = f"alpha_tilde target {value} missed (count {pin.count})"
            lam1 = pin.lambda1
        else:
            lam1 = value
        pen = Penalty(lam1, cfg.lambda2)
        sigma2 = cfg.sigma**2 if cfg.sigma > 0 else 1.0
        if cfg.route == "gamp":
            state = gamp_run(data, fam, pen, GampOptions())
            if not state.converged:
                raise ConvergenceError(f"GAMP did not converge in {state.iter} iterations")
            x_hat = state.x_hat
            rep = gap_gamp(state, data, fam, pen, sigma2=sigma2)
        else:
            x_hat = fit(data, fam, pen, cfg.solver)
            rep = gap_from_estimate(x_hat, data, fam, pen, use_cavity_variance=cfg.route == "cavity",
                                    sigma2=sigma2)
        k = _count(x_hat)
        row.update(
            lambda1=lam1, alpha_tilde=(M / k if k else np.inf) if lam1 > 0 else M / N,
            err_train=rep.err_train, gdf=rep.gdf, sure=rep.sure, fv=rep.fv, waic=rep.waic,
            cfv=rep.cfv, fchi=rep.fchi, delta_loocv_hat=rep.delta_loocv_hat,
            stability_margin=rep.stability_margin,
            radius_ok=np.nan if rep.radius_ok is None else float(rep.radius_ok),
        )
        row["delta_loocv_exact"] = _exact_gap(cfg, data, fam, pen, x_hat)
        if fam in (LikelihoodFamily.GAUSSIAN, LikelihoodFamily.LOGISTIC):
            row["err_extra_empirical"] = empirical_extra_error(x_hat, truth, fam, N)
        else:
            row["err_extra_empirical"] = np.nan
    except (ConvergenceError, DivergenceError, DomainError, RefitError, SingularCavityError,
            np.linalg.LinAlgError, ValueError, ArithmeticError) as exc:
        row["error"] = f"{type(exc).__name__}: {exc}"
        row.setdefault("lambda1", value if mode == "lambda1" else np.nan)
    for c in RAW_COLUMNS:
        row.setdefault(c, np.nan)
    return row


def _mean_se(vals):
    v = np.asarray([x for x in vals if np.isfinite(x)], dtype=float)
    if v.size == 0:
        return np.nan, np.nan
    se = float(np.std(v, ddof=1) / np.sqrt(v.size)) if v.size > 1 else np.nan
    return float(np.mean(v)), se


def aggregate(rows: List[dict], cfg: SweepConfig) -> List[dict]:
    out = []
    keyfn = lambda r: (r["N"], r["_point"])
    for (N, _), grp in itertools.groupby(sorted(rows, key=keyfn), key=keyfn):
        grp = list(grp)
        ok = [r for r in grp if np.isfinite(r.get("err_train", np.nan))]
        agg = {"seed_count": len(ok), "M": cfg.M, "N": N, "alpha": cfg.M / N, "lambda2": cfg.lambda2}
        for c in MEAN_COLUMNS:
            mean, se = _mean_se([r[c] for r in ok])
            agg[c] = mean
            agg[f"{c}_se"] = se
        fails = [f"seed {r['seed']}: {r['error']}" for r in grp if r["error"]]
        agg["failures"] = "; ".join(fails)
        if cfg.replica:
            agg.update(_replica_columns(cfg, N, agg["lambda1"]))
        out.append(agg)
    return out


def _replica_columns(cfg, N, lam1):
    res = {c: np.nan for c in REPLICA_COLUMNS}
    if not np.isfinite(lam1):
        return res
    fam = as_family(cfg.family)
    pen = Penalty(lam1, cfg.lambda2)
    alpha = cfg.M / N
    try:
        order = rs_solve(fam, pen, alpha, cfg.rho, cfg.sigma_x, cfg.sigma)
        e = rs_errors(order, fam)
        res.update(rs_err_extra=e["err_extra"], rs_gdf=e["gdf"], rs_fv=e["fv"], rs_rho_hat=order.rho_hat,
                   rs_at_lhs=at_unstable(order, fam, pen, alpha)[1])
    except ValueError:
        pass
    return res


def run_sweep(cfg: SweepConfig, raw: Optional[list] = None) -> List[dict]:
    """Run every (grid point, seed) task and return aggregated rows.

    When ``raw`` is a list, the per-seed rows are appended to it.
    """
    tasks = []
    for pidx, (N, mode, value) in enumerate(cfg.points()):
        for i in range(cfg.n_seeds):
            tasks.append((pidx, N, mode, value, cfg.base_seed + i))

    def work(t):
        pidx, N, mode, value, seed = t
        r = run_one(cfg, N, mode, value, seed)
        r["_point"] = pidx
        return r

    workers = max_workers(cfg.threads)
    if workers > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(work, tasks))
    else:
        rows = [work(t) for t in tasks]
    rows.sort(key=lambda r: (r["_point"], r["seed"]))
    if raw is not None:
        raw.extend({k: v for k, v in r.items() if k != "_point"} for r in rows)
    return aggregate(rows, cfg)


def fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if v is None:
        return ""
    return f"{float(v):.12g}"


def to_csv(rows: List[dict], cols: List[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([fmt(r.get(c, np.nan)) for c in cols])
    return buf.getvalue()


def sweep_csv(cfg: SweepConfig, raw: Optional[list] = None) -> str:
    return to_csv(run_sweep(cfg, raw), columns(cfg.replica))
