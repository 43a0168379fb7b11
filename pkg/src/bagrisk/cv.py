"""Data-driven choice of the subsample size by sample splitting.

One random train/test split; for every candidate subsample size k on an
arithmetic grid, fit an M-bag ensemble on the training part, estimate its
risk on the test part (plain average or median-of-means), and keep the
candidate with the smallest estimate.  A null (all-zero) predictor always
joins the candidate list, so the selected risk never exceeds the response
second moment even when every grid fit is hopeless.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .simulate import Dataset, EnsembleSpec, SPLAG, SUBAG_WOR, SUBAG_WR, \
    fit_ensemble, testset_risk

AVG = "avg"
MOM = "mom"

_STRATEGIES = (SUBAG_WR, SUBAG_WOR, SPLAG)


@dataclass(frozen=True)
class CvConfig:
    """Ensemble shape and estimation settings for one selection run."""

    M: int
    strategy: str = SUBAG_WR
    lam: float = 0.0
    nu: float = 0.5
    n_test: int | None = None       # None -> ceil(0.063 * n)
    centering: str = AVG
    eta: float = 0.5                # MOM failure level; folds = ceil(8*ln(1/eta))
    seed: int = 0


@dataclass
class CvCandidate:
    """One grid entry: k = 0 encodes the null predictor."""

    k: int
    m_eff: int
    risk_est: float
    beta: np.ndarray


@dataclass
class CvResult:
    k_hat: int
    risk_hat: float
    candidates: list
    final_beta: np.ndarray
    final_test_risk: float


def default_test_size(n: int) -> int:
    return math.ceil(0.063 * n)


def build_grid(n_train: int, nu: float) -> list:
    """Arithmetic candidate grid {k0, 2*k0, ...} with k0 = floor(n_train**nu)."""
    if n_train < 2:
        raise ValueError("need at least two training points")
    if not 0.0 < nu < 1.0:
        raise ValueError("nu must lie in (0, 1)")
    k0 = int(math.floor(n_train ** nu + 1e-12))
    count = n_train // k0
    return [k0 * j for j in range(1, count + 1)]


def mom_fold_count(eta: float) -> int:
    """Number of median-of-means folds: ceil(8 * ln(1/eta))."""
    if not 0.0 < eta < 1.0:
        raise ValueError("eta must lie in (0, 1)")
    return math.ceil(8.0 * math.log(1.0 / eta))


def estimate_risk(predictions, y_test, centering: str = AVG,
                  eta: float | None = None, seed: int | None = None) -> float:
    """Test-set risk estimate: mean squared error or median-of-means.

    MOM splits the test indices into ``mom_fold_count(eta)`` random
    equal-size folds (derived from ``seed``; pass the same seed across
    candidates so one run shares one partition) and takes the median of the
    fold-wise mean squared errors.
    """
    predictions = np.asarray(predictions, dtype=float).ravel()
    y_test = np.asarray(y_test, dtype=float).ravel()
    if y_test.size == 0:
        raise ValueError("empty test set")
    if predictions.shape != y_test.shape:
        raise ValueError("predictions and y_test lengths differ")
    sq_err = (y_test - predictions) ** 2
    if centering == AVG:
        return float(sq_err.mean())
    if centering == MOM:
        if eta is None:
            raise ValueError("centering='mom' needs eta")
        n_folds = mom_fold_count(eta)
        if n_folds > y_test.size:
            raise ValueError(
                f"{n_folds} MOM folds exceed the test size {y_test.size}")
        if seed is None:
            raise ValueError("centering='mom' needs a seed for the fold partition")
        rng = np.random.default_rng(np.random.SeedSequence(int(seed)))
        perm = rng.permutation(y_test.size)
        folds = np.array_split(perm, n_folds)
        return float(np.median([sq_err[f].mean() for f in folds]))
    raise ValueError(f"unknown centering {centering!r}")


def _seed_int(ss: np.random.SeedSequence) -> int:
    return int.from_bytes(ss.generate_state(2).tobytes(), "little")


def run_cv(data: Dataset, config: CvConfig) -> CvResult:
    """Select the subsample size for one dataset.

    Randomness (split, per-candidate ensembles, MOM partition) derives from
    ``config.seed`` alone; candidates are fit independently, so the result
    does not depend on evaluation order.  Ties in the risk estimate resolve
    to the smallest k, with the null predictor counting as k = 0.
    """
    if config.strategy not in _STRATEGIES:
        raise ValueError(f"unknown strategy {config.strategy!r}")
    if config.M == math.inf or int(config.M) != config.M or config.M < 1:
        raise ValueError("M must be a finite positive integer")
    if config.centering not in (AVG, MOM):
        raise ValueError(f"unknown centering {config.centering!r}")
    n = data.n
    n_test = default_test_size(n) if config.n_test is None else int(config.n_test)
    if not 1 <= n_test <= n - 2:
        raise ValueError(f"n_test={n_test} leaves no usable training split of {n}")

    split_ss, fit_ss, mom_ss = np.random.SeedSequence(int(config.seed)).spawn(3)
    rng = np.random.default_rng(split_ss)
    test_idx = np.sort(rng.choice(n, size=n_test, replace=False))
    train_idx = np.setdiff1d(np.arange(n), test_idx)
    X_test, y_test = data.X[test_idx], data.y[test_idx]
    train_data = replace(data, X=data.X[train_idx], y=data.y[train_idx])

    grid = build_grid(train_idx.size, config.nu)
    mom_seed = _seed_int(mom_ss)

    candidates = [CvCandidate(k=0, m_eff=0,
                              risk_est=estimate_risk(np.zeros_like(y_test), y_test,
                                                     config.centering, config.eta,
                                                     mom_seed),
                              beta=np.zeros(data.p))]
    for k, child in zip(grid, fit_ss.spawn(len(grid))):
        spec = EnsembleSpec(strategy=config.strategy, k=int(k), M=int(config.M),
                            seed=_seed_int(child))
        ens = fit_ensemble(train_data, spec, config.lam)
        preds = X_test @ ens.beta_tilde
        risk = estimate_risk(preds, y_test, config.centering, config.eta, mom_seed)
        candidates.append(CvCandidate(k=int(k), m_eff=ens.n_bags,
                                      risk_est=risk, beta=ens.beta_tilde))

    best = candidates[0]
    for cand in candidates[1:]:          # ascending k; strict < keeps ties small
        if cand.risk_est < best.risk_est:
            best = cand
    return CvResult(k_hat=best.k, risk_hat=best.risk_est, candidates=candidates,
                    final_beta=best.beta,
                    final_test_risk=testset_risk(best.beta, X_test, y_test))
