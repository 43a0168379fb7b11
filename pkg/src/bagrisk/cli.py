"""Command-line front end.

Four subcommands:

* ``theory``    — asymptotic bias/variance/risk rows over a phi_s grid;
* ``simulate``  — Monte Carlo replications of subsample ensembles;
* ``cv``        — subsample-size selection runs;
* ``optimize``  — risk-minimizing subsample aspect ratio per phi.

Output is CSV preceded by ``# key=value`` metadata comment lines.  Numbers
carry 10 significant digits and a fixed configuration + seed reproduces the
output byte for byte (no timestamps, deterministic ordering).  A config file
of ``key=value`` lines can pre-set any flag; explicit flags win.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import __version__
from .cv import CvConfig, default_test_size, run_cv
from .risk_theory import (SPLAG as THEORY_SPLAG, SUBAG as THEORY_SUBAG,
                          optimal_ridge_risk_isotropic, optimize_phis,
                          theory_risk)
from .simulate import (MODEL_AR1, MODEL_EXTERNAL, MODEL_ISO, MODEL_NONLINEAR,
                       SPLAG, SUBAG_WOR, SUBAG_WR, Dataset, EnsembleSpec,
                       bias_variance_components, exact_conditional_risk,
                       fit_ensemble, gen_ar1, gen_iso, gen_nonlinear,
                       load_external, testset_risk)
from .spectrum import (load_signal, load_spectrum, make_ar1, make_isotropic,
                       make_isotropic_signal)

_SIM_STRATEGIES = (SUBAG_WR, SUBAG_WOR, SPLAG)
_LINEAR_SYNTHETIC = (MODEL_ISO, MODEL_AR1)


# ---------------------------------------------------------------------------
# small parsing helpers
# ---------------------------------------------------------------------------

def _parse_bags(token: str):
    token = token.strip()
    if token == "inf":
        return math.inf
    value = int(token)
    if value < 1:
        raise ValueError(f"bag count must be positive, got {token!r}")
    return value


def _parse_multi(raw, conv, default=None):
    """Flatten repeatable comma-separated flag values."""
    if raw is None:
        return default
    chunks = [raw] if isinstance(raw, str) else list(raw)
    out = []
    for chunk in chunks:
        for token in str(chunk).split(","):
            token = token.strip()
            if token:
                out.append(conv(token))
    return out if out else default


def _parse_grid_spec(text: str):
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError(f"grid spec {text!r} must look like lo:hi:points")
    lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    if not 0 < lo <= hi or n < 1:
        raise ValueError(f"bad grid spec {text!r}")
    return lo, hi, n


def _fmt(x) -> str:
    if x is None or x == "":
        return ""
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    xf = float(x)
    if math.isnan(xf):
        return "nan"
    if math.isinf(xf):
        return "inf" if xf > 0 else "-inf"
    return format(xf, ".10g")


def _seed_for(root_seed: int, *key) -> int:
    ss = np.random.SeedSequence(int(root_seed), spawn_key=tuple(int(k) for k in key))
    return int.from_bytes(ss.generate_state(2).tobytes(), "little")


def _emit(out_path, meta_lines, header, rows, trailing=()):
    def write(fh):
        for line in meta_lines:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
        for line in trailing:
            fh.write(f"# {line}\n")

    if out_path:
        with open(out_path, "w", newline="") as fh:
            write(fh)
    else:
        write(sys.stdout)


# ---------------------------------------------------------------------------
# model resolution
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _Spectra:
    H: object
    G: object
    rho_sq: float
    sigma_sq: float
    describe: str


def _resolve_spectra(args) -> _Spectra:
    """Build (H, G, rho_sq, sigma_sq) for theory-side commands."""
    model = args.model
    sigma_sq = args.sigma_sq if args.sigma_sq is not None else 1.0
    if model == MODEL_ISO:
        rho_sq = args.rho_sq if args.rho_sq is not None else 1.0
        H = make_isotropic(1.0)
        G = make_isotropic_signal(1.0, rho_sq=rho_sq, sigma_sq=sigma_sq)
        describe = f"model=iso rho_sq={_fmt(rho_sq)} sigma_sq={_fmt(sigma_sq)}"
    elif model in (MODEL_AR1, MODEL_NONLINEAR):
        if args.p is None:
            raise ValueError("--p is required to build the ar1 spectrum")
        rho_ar = args.rho_ar if args.rho_ar is not None else 0.25
        H, G = make_ar1(rho_ar, int(args.p), sigma_sq=sigma_sq)
        rho_sq = G.rho_sq
        if args.rho_sq is not None and abs(args.rho_sq - rho_sq) > 1e-12:
            raise ValueError(
                "the ar1 signal is the scaled top-eigenvector average, so "
                f"rho_sq is fixed at {rho_sq}; drop --rho-sq")
        describe = (f"model={model} rho_ar={_fmt(rho_ar)} p={int(args.p)} "
                    f"rho_sq={_fmt(rho_sq)} sigma_sq={_fmt(sigma_sq)}")
    elif model == MODEL_EXTERNAL:
        if not args.spectrum_csv or not args.signal_csv:
            raise ValueError(
                "external model needs --spectrum-csv and --signal-csv for theory")
        H = load_spectrum(args.spectrum_csv)
        G = load_signal(args.signal_csv)
        rho_sq = args.rho_sq if args.rho_sq is not None else G.rho_sq
        if args.sigma_sq is None:
            sigma_sq = G.sigma_sq
        describe = (f"model=external spectrum={args.spectrum_csv} "
                    f"signal={args.signal_csv} rho_sq={_fmt(rho_sq)} "
                    f"sigma_sq={_fmt(sigma_sq)}")
    else:
        raise ValueError(f"unknown model {model!r}")
    snr = rho_sq * G.mean / sigma_sq if sigma_sq > 0 else math.inf
    return _Spectra(H=H, G=G, rho_sq=rho_sq, sigma_sq=sigma_sq,
                    describe=f"{describe} snr={_fmt(snr)}")


def _theory_strategies(flag: str):
    table = {"both": (THEORY_SUBAG, THEORY_SPLAG),
             "subag": (THEORY_SUBAG,), "splag": (THEORY_SPLAG,),
             SUBAG_WR: (THEORY_SUBAG,), SUBAG_WOR: (THEORY_SUBAG,)}
    if flag not in table:
        raise ValueError(f"unknown theory strategy {flag!r}")
    return table[flag]


# ---------------------------------------------------------------------------
# theory
# ---------------------------------------------------------------------------

def cmd_theory(args) -> int:
    spectra = _resolve_spectra(args)
    phis = _parse_multi(args.phi_list, float)
    if not phis or len(phis) != 1:
        raise ValueError("theory needs exactly one --phi")
    phi = phis[0]
    lam_list = _parse_multi(args.lam_list, float, [0.0])
    m_list = _parse_multi(args.m_list, _parse_bags, [math.inf])
    strategies = _theory_strategies(args.strategy)

    if args.phi_s_grid:
        lo, hi, n = _parse_grid_spec(args.phi_s_grid)
    else:
        lo, hi, n = max(phi, 0.1), 10.0 * max(1.0, phi), 25
    grid = [float(x) for x in np.geomspace(lo, hi, n)
            if x >= phi * (1.0 - 1e-12)]
    grid.append(math.inf)

    rows = []
    for strategy in strategies:
        for lam in lam_list:
            for M in m_list:
                for phi_s in grid:
                    comps = theory_risk(strategy, lam, M, phi, phi_s,
                                        spectra.G, spectra.H,
                                        spectra.rho_sq, spectra.sigma_sq)
                    rows.append([strategy, _fmt(lam), _fmt(M), _fmt(phi),
                                 _fmt(phi_s), _fmt(comps.bias),
                                 _fmt(comps.variance), _fmt(comps.total)])
    meta = [
        "command=theory",
        f"version={__version__}",
        f"seed={args.seed}",
        spectra.describe,
        (f"phi={_fmt(phi)} lambda={','.join(_fmt(l) for l in lam_list)} "
         f"M={','.join(_fmt(m) for m in m_list)} strategy={args.strategy} "
         f"phi_s_grid={args.phi_s_grid or f'{_fmt(lo)}:{_fmt(hi)}:{n}'}"),
    ]
    _emit(args.out, meta,
          ["strategy", "lambda", "M", "phi", "phi_s", "bias", "variance", "risk"],
          rows)
    return 0


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _SimCfg:
    model: str
    n: int
    p: int
    rho_ar: float
    rho_sq: float
    sigma_sq: float
    data_path: str | None
    strategy: str
    lams: tuple
    ks: tuple
    Ms: tuple
    n_test: int
    m_big: int
    seed: int


def _make_dataset(model, n, p, rho_ar, rho_sq, sigma_sq, data_path, seed) -> Dataset:
    if model == MODEL_ISO:
        return gen_iso(n, p, rho_sq, sigma_sq, seed)
    if model == MODEL_AR1:
        return gen_ar1(n, p, rho_ar, sigma_sq, seed)
    if model == MODEL_NONLINEAR:
        return gen_nonlinear(n, p, rho_ar, sigma_sq, seed)
    if model == MODEL_EXTERNAL:
        return load_external(data_path)
    raise ValueError(f"unknown model {model!r}")


def _simulate_rep(cfg: _SimCfg, rep: int):
    data = _make_dataset(cfg.model, cfg.n, cfg.p, cfg.rho_ar, cfg.rho_sq,
                         cfg.sigma_sq, cfg.data_path,
                         _seed_for(cfg.seed, rep, 0))
    if cfg.model == MODEL_EXTERNAL:
        n = data.n
        rng = np.random.default_rng(
            np.random.SeedSequence(cfg.seed, spawn_key=(rep, 1)))
        test_idx = np.sort(rng.choice(n, size=cfg.n_test, replace=False))
        train_idx = np.setdiff1d(np.arange(n), test_idx)
        X_test, y_test = data.X[test_idx], data.y[test_idx]
        train = Dataset(X=data.X[train_idx], y=data.y[train_idx],
                        model=data.model)
    else:
        test = _make_dataset(cfg.model, cfg.n_test, cfg.p, cfg.rho_ar,
                             cfg.rho_sq, cfg.sigma_sq, None,
                             _seed_for(cfg.seed, rep, 1))
        X_test, y_test = test.X, test.y
        train = data

    exact_ok = train.model in _LINEAR_SYNTHETIC
    rows = []
    cell = 0
    for lam in cfg.lams:
        for k in cfg.ks:
            for M in cfg.Ms:
                spec = EnsembleSpec(strategy=cfg.strategy, k=int(k), M=int(M),
                                    seed=_seed_for(cfg.seed, rep, 2, cell))
                ens = fit_ensemble(train, spec, lam)
                risk_exact = (exact_conditional_risk(train, ens.beta_tilde)
                              if exact_ok else None)
                risk_test = testset_risk(ens.beta_tilde, X_test, y_test)
                if cfg.m_big > 0 and exact_ok:
                    bias_est, var_est = bias_variance_components(
                        train, spec, lam, M_big=cfg.m_big)
                else:
                    bias_est = var_est = None
                rows.append({"strategy": cfg.strategy, "lambda": lam,
                             "k": int(k), "phi_s": train.p / k, "M": int(M),
                             "rep": rep, "risk_exact": risk_exact,
                             "risk_test": risk_test, "bias_est": bias_est,
                             "var_est": var_est})
                cell += 1
    return rows


_SIM_HEADER = ["strategy", "lambda", "k", "phi_s", "M", "rep",
               "risk_exact", "risk_test", "bias_est", "var_est"]


def cmd_simulate(args) -> int:
    if args.model not in (MODEL_ISO, MODEL_AR1, MODEL_NONLINEAR, MODEL_EXTERNAL):
        raise ValueError(f"unknown model {args.model!r}")
    if args.strategy not in _SIM_STRATEGIES:
        raise ValueError(f"unknown simulation strategy {args.strategy!r}")
    ks = _parse_multi(args.k_grid, int)
    if not ks:
        raise ValueError("--k-grid is required for simulate")
    m_list = _parse_multi(args.m_list, _parse_bags, [1])
    if any(m == math.inf for m in m_list):
        raise ValueError("simulate needs finite M")
    lam_list = _parse_multi(args.lam_list, float, [0.0])

    if args.model == MODEL_EXTERNAL:
        if not args.data:
            raise ValueError("external model needs --data")
        n_rows = load_external(args.data).n
    else:
        if args.n is None or args.p is None:
            raise ValueError("synthetic models need --n and --p")
        n_rows = int(args.n)
    n_test = int(args.n_test) if args.n_test is not None else default_test_size(n_rows)

    cfg = _SimCfg(model=args.model,
                  n=int(args.n or 0), p=int(args.p or 0),
                  rho_ar=args.rho_ar if args.rho_ar is not None else 0.25,
                  rho_sq=args.rho_sq if args.rho_sq is not None else 1.0,
                  sigma_sq=args.sigma_sq if args.sigma_sq is not None else 1.0,
                  data_path=args.data, strategy=args.strategy,
                  lams=tuple(lam_list), ks=tuple(ks), Ms=tuple(m_list),
                  n_test=n_test, m_big=int(args.m_big), seed=int(args.seed))

    per_rep = _map_reps(_simulate_rep, cfg, int(args.reps), args.threads)

    rows = []
    for rep_rows in per_rep:
        for r in rep_rows:
            rows.append([_fmt(r[c]) for c in _SIM_HEADER])
    # mean-aggregate block: one row per cell, rep column = "mean"
    for lam in cfg.lams:
        for k in cfg.ks:
            for M in cfg.Ms:
                match = [r for rep_rows in per_rep for r in rep_rows
                         if (r["lambda"], r["k"], r["M"]) == (lam, int(k), int(M))]
                agg = dict(match[0])
                agg["rep"] = "mean"
                for col in ("risk_exact", "risk_test", "bias_est", "var_est"):
                    vals = [r[col] for r in match if r[col] is not None]
                    agg[col] = float(np.mean(vals)) if vals else None
                rows.append([_fmt(agg[c]) for c in _SIM_HEADER])

    meta = [
        "command=simulate",
        f"version={__version__}",
        f"seed={cfg.seed}",
        (f"model={cfg.model} n={n_rows} p={cfg.p or ''} rho_ar={_fmt(cfg.rho_ar)} "
         f"rho_sq={_fmt(cfg.rho_sq)} sigma_sq={_fmt(cfg.sigma_sq)} "
         f"data={cfg.data_path or ''}"),
        (f"strategy={cfg.strategy} lambda={','.join(_fmt(l) for l in cfg.lams)} "
         f"k={','.join(str(k) for k in cfg.ks)} "
         f"M={','.join(_fmt(m) for m in cfg.Ms)} reps={args.reps} "
         f"n_test={n_test} m_big={cfg.m_big}"),
    ]
    _emit(args.out, meta, _SIM_HEADER, rows)
    return 0


# ---------------------------------------------------------------------------
# cv
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _CvCfg:
    model: str
    n: int
    p: int
    rho_ar: float
    rho_sq: float
    sigma_sq: float
    data_path: str | None
    strategy: str
    lam: float
    M: int
    n_test: int | None
    nu: float
    centering: str
    eta: float
    seed: int


def _cv_rep(cfg: _CvCfg, rep: int):
    data = _make_dataset(cfg.model, cfg.n, cfg.p, cfg.rho_ar, cfg.rho_sq,
                         cfg.sigma_sq, cfg.data_path,
                         _seed_for(cfg.seed, rep, 0))
    config = CvConfig(M=cfg.M, strategy=cfg.strategy, lam=cfg.lam, nu=cfg.nu,
                      n_test=cfg.n_test, centering=cfg.centering, eta=cfg.eta,
                      seed=_seed_for(cfg.seed, rep, 1))
    res = run_cv(data, config)
    rows = []
    for cand in res.candidates:
        phi_s = data.p / cand.k if cand.k > 0 else math.inf
        rows.append({"rep": rep, "k": cand.k, "phi_s": phi_s,
                     "M_eff": cand.m_eff, "risk_est": cand.risk_est})
    summary = (f"summary rep={rep} k_hat={res.k_hat} "
               f"risk_hat={_fmt(res.risk_hat)} "
               f"final_test_risk={_fmt(res.final_test_risk)}")
    return rows, summary


def cmd_cv(args) -> int:
    if args.model not in (MODEL_ISO, MODEL_AR1, MODEL_NONLINEAR, MODEL_EXTERNAL):
        raise ValueError(f"unknown model {args.model!r}")
    if args.strategy not in _SIM_STRATEGIES:
        raise ValueError(f"unknown simulation strategy {args.strategy!r}")
    m_list = _parse_multi(args.m_list, _parse_bags, None)
    if not m_list or len(m_list) != 1 or m_list[0] == math.inf:
        raise ValueError("cv needs exactly one finite --M")
    lam_list = _parse_multi(args.lam_list, float, [0.0])
    if len(lam_list) != 1:
        raise ValueError("cv needs exactly one --lambda")
    if args.model == MODEL_EXTERNAL:
        if not args.data:
            raise ValueError("external model needs --data")
    elif args.n is None or args.p is None:
        raise ValueError("synthetic models need --n and --p")

    cfg = _CvCfg(model=args.model, n=int(args.n or 0), p=int(args.p or 0),
                 rho_ar=args.rho_ar if args.rho_ar is not None else 0.25,
                 rho_sq=args.rho_sq if args.rho_sq is not None else 1.0,
                 sigma_sq=args.sigma_sq if args.sigma_sq is not None else 1.0,
                 data_path=args.data, strategy=args.strategy,
                 lam=lam_list[0], M=int(m_list[0]),
                 n_test=int(args.n_test) if args.n_test is not None else None,
                 nu=args.nu, centering=args.centering, eta=args.eta,
                 seed=int(args.seed))

    results = _map_reps(_cv_rep, cfg, int(args.reps), args.threads)

    header = ["rep", "k", "phi_s", "M_eff", "risk_est"]
    rows = [[_fmt(r[c]) for c in header]
            for rep_rows, _ in results for r in rep_rows]
    summaries = [s for _, s in results]
    meta = [
        "command=cv",
        f"version={__version__}",
        f"seed={cfg.seed}",
        (f"model={cfg.model} n={cfg.n or ''} p={cfg.p or ''} "
         f"rho_ar={_fmt(cfg.rho_ar)} rho_sq={_fmt(cfg.rho_sq)} "
         f"sigma_sq={_fmt(cfg.sigma_sq)} data={cfg.data_path or ''}"),
        (f"strategy={cfg.strategy} lambda={_fmt(cfg.lam)} M={cfg.M} "
         f"reps={args.reps} n_test={cfg.n_test if cfg.n_test is not None else 'auto'} "
         f"nu={_fmt(cfg.nu)} centering={cfg.centering} eta={_fmt(cfg.eta)}"),
    ]
    _emit(args.out, meta, header, rows, trailing=summaries)
    return 0


# ---------------------------------------------------------------------------
# optimize
# ---------------------------------------------------------------------------

def cmd_optimize(args) -> int:
    spectra = _resolve_spectra(args)
    phis = _parse_multi(args.phi_list, float)
    if not phis:
        raise ValueError("optimize needs at least one --phi")
    lam_list = _parse_multi(args.lam_list, float, [0.0])
    if len(lam_list) != 1:
        raise ValueError("optimize needs exactly one --lambda")
    lam = lam_list[0]
    strategies = _theory_strategies(args.strategy)
    grid_spec = _parse_grid_spec(args.phi_s_grid) if args.phi_s_grid else None

    iso = args.model == MODEL_ISO
    header = ["phi", "strategy", "phi_s_star", "risk_star"]
    if iso:
        header.append("ridge_risk_star")
    rows = []
    for phi in phis:
        ridge_star = None
        if iso and spectra.rho_sq > 0:
            ridge_star = optimal_ridge_risk_isotropic(phi, spectra.rho_sq,
                                                      spectra.sigma_sq)
        for strategy in strategies:
            phi_s_star, comps = optimize_phis(lam, strategy, phi, spectra.G,
                                              spectra.H, spectra.rho_sq,
                                              spectra.sigma_sq,
                                              grid_spec=grid_spec)
            row = [_fmt(phi), strategy, _fmt(phi_s_star), _fmt(comps.total)]
            if iso:
                row.append(_fmt(ridge_star))
            rows.append(row)
    meta = [
        "command=optimize",
        f"version={__version__}",
        f"seed={args.seed}",
        spectra.describe,
        (f"lambda={_fmt(lam)} strategy={args.strategy} "
         f"phi={','.join(_fmt(x) for x in phis)} "
         f"phi_s_grid={args.phi_s_grid or 'auto'}"),
    ]
    _emit(args.out, meta, header, rows)
    return 0


# ---------------------------------------------------------------------------
# replication pool
# ---------------------------------------------------------------------------

def _map_reps(fn, cfg, reps: int, threads):
    if reps < 1:
        raise ValueError("reps must be positive")
    workers = int(threads) if threads else 1
    if workers > 1 and reps > 1:
        with ProcessPoolExecutor(max_workers=min(workers, reps)) as pool:
            futures = [pool.submit(fn, cfg, rep) for rep in range(reps)]
            return [f.result() for f in futures]
    return [fn(cfg, rep) for rep in range(reps)]


# ---------------------------------------------------------------------------
# parser / config plumbing
# ---------------------------------------------------------------------------

def _add_model_flags(sub):
    sub.add_argument("--model", default=MODEL_ISO,
                     help="iso | ar1 | nonlinear | external")
    sub.add_argument("--rho-ar", dest="rho_ar", type=float, default=None,
                     help="ar1 correlation (default 0.25)")
    sub.add_argument("--rho-sq", dest="rho_sq", type=float, default=None,
                     help="squared signal norm (iso default 1; fixed 0.2 for ar1)")
    sub.add_argument("--sigma-sq", dest="sigma_sq", type=float, default=None,
                     help="noise variance (default 1)")
    sub.add_argument("--spectrum-csv", dest="spectrum_csv", default=None,
                     help="covariance spectrum CSV for --model external")
    sub.add_argument("--signal-csv", dest="signal_csv", default=None,
                     help="signal spectrum CSV for --model external")


def _add_common_flags(sub):
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--out", default=None, help="output CSV path (default stdout)")
    sub.add_argument("--config", default=None,
                     help="key=value file pre-setting any flag of this command")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="bagrisk",
        description="Risk curves and experiments for bagged ridge regression")
    parser.add_argument("--version", action="version", version=__version__)
    subs = parser.add_subparsers(dest="command")
    table = {}

    th = subs.add_parser("theory", help="asymptotic risk over a phi_s grid")
    _add_model_flags(th)
    _add_common_flags(th)
    th.add_argument("--phi", dest="phi_list", action="append",
                    help="data aspect ratio p/n (exactly one)")
    th.add_argument("--phi-s-grid", dest="phi_s_grid", default=None,
                    help="lo:hi:points, log-spaced subsample ratios (inf row always added)")
    th.add_argument("--lambda", dest="lam_list", action="append",
                    help="ridge penalty, repeatable/comma-separated (default 0)")
    th.add_argument("--M", dest="m_list", action="append",
                    help="bag count, repeatable; 'inf' allowed (default inf)")
    th.add_argument("--strategy", default="both", help="subag | splag | both")
    th.add_argument("--p", type=int, default=None,
                    help="dimension for the ar1 spectrum")
    th.set_defaults(func=cmd_theory)
    table["theory"] = th

    sim = subs.add_parser("simulate", help="Monte Carlo ensemble replications")
    _add_model_flags(sim)
    _add_common_flags(sim)
    sim.add_argument("--n", type=int, default=None)
    sim.add_argument("--p", type=int, default=None)
    sim.add_argument("--data", default=None, help="external dataset CSV")
    sim.add_argument("--k-grid", dest="k_grid", action="append",
                     help="subsample sizes, comma-separated/repeatable")
    sim.add_argument("--M", dest="m_list", action="append",
                     help="bag counts (finite; default 1)")
    sim.add_argument("--lambda", dest="lam_list", action="append",
                     help="ridge penalties (default 0)")
    sim.add_argument("--strategy", default=SUBAG_WR,
                     help="subag-wr | subag-wor | splag")
    sim.add_argument("--reps", type=int, default=10)
    sim.add_argument("--n-test", dest="n_test", type=int, default=None,
                     help="test rows (default ceil(0.063 n))")
    sim.add_argument("--m-big", dest="m_big", type=int, default=0,
                     help="bags for the infinite-ensemble proxy; 0 skips bias/var columns")
    sim.add_argument("--threads", type=int, default=os.cpu_count(),
                     help="worker processes across replications")
    sim.set_defaults(func=cmd_simulate)
    table["simulate"] = sim

    cv = subs.add_parser("cv", help="subsample-size selection")
    _add_model_flags(cv)
    _add_common_flags(cv)
    cv.add_argument("--n", type=int, default=None)
    cv.add_argument("--p", type=int, default=None)
    cv.add_argument("--data", default=None)
    cv.add_argument("--M", dest="m_list", action="append",
                    help="bag count (one finite value)")
    cv.add_argument("--lambda", dest="lam_list", action="append")
    cv.add_argument("--strategy", default=SUBAG_WR)
    cv.add_argument("--reps", type=int, default=1)
    cv.add_argument("--n-test", dest="n_test", type=int, default=None)
    cv.add_argument("--nu", type=float, default=0.5,
                    help="grid exponent: k0 = floor(n_train**nu)")
    cv.add_argument("--centering", default="avg", help="avg | mom")
    cv.add_argument("--eta", type=float, default=0.5,
                    help="MOM failure level; folds = ceil(8 ln(1/eta))")
    cv.add_argument("--threads", type=int, default=os.cpu_count())
    cv.set_defaults(func=cmd_cv)
    table["cv"] = cv

    opt = subs.add_parser("optimize", help="risk-minimizing subsample ratio")
    _add_model_flags(opt)
    _add_common_flags(opt)
    opt.add_argument("--phi", dest="phi_list", action="append",
                     help="data aspect ratios, repeatable")
    opt.add_argument("--lambda", dest="lam_list", action="append")
    opt.add_argument("--strategy", default="both", help="subag | splag | both")
    opt.add_argument("--phi-s-grid", dest="phi_s_grid", default=None,
                     help="lo:hi:points override of the search grid")
    opt.add_argument("--p", type=int, default=None)
    opt.set_defaults(func=cmd_optimize)
    table["optimize"] = opt

    return parser, table


_CONFIG_KEY_ALIASES = {"lambda": "lam_list", "m": "m_list", "phi": "phi_list",
                       "k_grid": "k_grid"}
_FLOAT_DESTS = ("rho_ar", "rho_sq", "sigma_sq", "nu", "eta")
_INT_DESTS = ("n", "p", "reps", "seed", "n_test", "m_big", "threads")


def _load_config(path) -> dict:
    values = {}
    with open(path) as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}: bad config line {raw.strip()!r}")
            key, _, value = line.partition("=")
            key = key.strip().replace("-", "_")
            key = _CONFIG_KEY_ALIASES.get(key, _CONFIG_KEY_ALIASES.get(key.lower(), key))
            values[key] = value.strip()
    return values


def _coerce_config_values(args):
    # config values arrive as strings; flags already carry proper types
    for dest in _FLOAT_DESTS:
        val = getattr(args, dest, None)
        if isinstance(val, str):
            setattr(args, dest, float(val))
    for dest in _INT_DESTS:
        val = getattr(args, dest, None)
        if isinstance(val, str):
            setattr(args, dest, int(val))


def main(argv=None) -> int:
    parser, table = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help()
        return 2
    try:
        if args.config:
            defaults = _load_config(args.config)
            parser, table = build_parser()
            sub = table[args.command]
            valid = {a.dest for a in sub._actions}
            unknown = set(defaults) - valid
            if unknown:
                raise ValueError(f"unknown config keys: {sorted(unknown)}")
            sub.set_defaults(**defaults)
            args = parser.parse_args(argv if argv is not None else sys.argv[1:])
        _coerce_config_values(args)
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
