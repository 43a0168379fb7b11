"""Asymptotic prediction risk of bagged ridge/ridgeless ensembles.

Risk decomposes as ``sigma_sq + bias + variance``.  For an ensemble of M
predictors fit on random size-k subsamples (data aspect ratio
``phi = p/n``, subsample aspect ratio ``phi_s = p/k >= phi``):

* disjoint-block bagging ("splag") averages M predictors fit on
  non-overlapping blocks, so M is capped at ``floor(phi_s/phi)``;
* uniform-subsample bagging ("subag") allows overlap, and its limiting bias
  and variance are each an affine combination of a same-subsample term
  (vartheta = phi_s) and an overlap term (vartheta = phi) with weights
  ``1/M`` and ``1 - 1/M``.

All theory-side strategies use the literals ``"subag"`` and ``"splag"``.
M = math.inf is accepted everywhere here and means the infinite-bag limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fixed_point import solve_v, tc_of, tv_of
from .spectrum import make_isotropic, make_isotropic_signal

SUBAG = "subag"
SPLAG = "splag"

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
_GRID_POINTS = 400
_REFINE_TOL = 1e-8


@dataclass(frozen=True)
class RiskComponents:
    """Additive risk pieces; ``total`` = sigma_sq + bias + variance."""

    sigma_sq: float
    bias: float
    variance: float

    @property
    def total(self) -> float:
        # components are nonnegative, so inf propagates without inf-inf
        return self.sigma_sq + self.bias + self.variance


@dataclass(frozen=True)
class RiskPoint:
    """One evaluated point of a theory risk curve (CLI output row)."""

    strategy: str
    lam: float
    M: float
    phi: float
    phi_s: float
    components: RiskComponents


def _check_lam(lam: float) -> float:
    lam = float(lam)
    if not lam >= 0.0 or math.isinf(lam):
        raise ValueError("lam must be finite and nonnegative")
    return lam


def _check_bags(M) -> float:
    """Validate a bag count; returns math.inf or a positive int."""
    if M == math.inf:
        return math.inf
    m = int(M)
    if m != M or m < 1:
        raise ValueError(f"M must be a positive integer or inf, got {M!r}")
    return m


def _check_ratios(phi: float, phi_s: float):
    if not phi > 0.0 or math.isinf(phi):
        raise ValueError("phi must be finite and positive")
    if not phi_s > 0.0:
        raise ValueError("phi_s must be positive")
    if phi_s < phi * (1.0 - 1e-12):
        raise ValueError(f"phi_s={phi_s} must be at least phi={phi}")
    return phi, max(phi_s, phi)


def _wmul(weight: float, value: float) -> float:
    # 0 * inf must read as "term absent", not NaN
    return 0.0 if weight == 0.0 else weight * value


def B_lam(lam, vartheta, theta, G, H, rho_sq, *, v=None) -> float:
    """Bias component rho_sq * (1 + tv(lam; vartheta, theta)) * tc(lam; theta).

    Zero when rho_sq = 0 or in the ridgeless interpolation regime
    (lam = 0, theta <= 1); equals rho_sq * ∫ r dG at theta = inf.
    """
    lam = _check_lam(lam)
    if rho_sq < 0.0:
        raise ValueError("rho_sq must be nonnegative")
    if rho_sq == 0.0:
        return 0.0
    if lam == 0.0 and theta <= 1.0:
        return 0.0
    if v is None:
        v = solve_v(lam, theta, H)
    tv = tv_of(lam, vartheta, theta, H, v=v)
    tc = tc_of(lam, theta, G, H, v=v)
    return rho_sq * (1.0 + tv) * tc


def V_lam(lam, vartheta, theta, H, sigma_sq, *, v=None) -> float:
    """Variance component sigma_sq * tv(lam; vartheta, theta).

    +inf exactly at (lam = 0, theta = 1) with positive noise; defined as 0
    whenever sigma_sq = 0 (noiseless limit), including at the pole.
    """
    lam = _check_lam(lam)
    if sigma_sq < 0.0:
        raise ValueError("sigma_sq must be nonnegative")
    if sigma_sq == 0.0:
        return 0.0
    return sigma_sq * tv_of(lam, vartheta, theta, H, v=v)


def C_lam(lam, theta, G, H, rho_sq, *, v=None) -> float:
    """Cross-bias term rho_sq * tc(lam; theta) for disjoint-block ensembles."""
    lam = _check_lam(lam)
    if rho_sq < 0.0:
        raise ValueError("rho_sq must be nonnegative")
    if rho_sq == 0.0:
        return 0.0
    return rho_sq * tc_of(lam, theta, G, H, v=v)


def combine_M(a1: float, a2: float, M) -> float:
    """Extend a risk component from M=1 and M=2 values to arbitrary M.

    The component is affine in 1/M: a(M) = (2*a2 - a1) + 2*(a1 - a2)/M.
    """
    M = _check_bags(M)
    if M == math.inf:
        return 2.0 * a2 - a1
    return (2.0 * a2 - a1) + 2.0 * (a1 - a2) / M


def wor_correction(N, M) -> float:
    """Shrinkage factor (N - M)_+ / (N - 1) for sampling M of N without replacement."""
    N = int(N)
    M = int(M)
    if N < 2:
        raise ValueError("N must be at least 2")
    if M < 0:
        raise ValueError("M must be nonnegative")
    return max(N - M, 0) / (N - 1)


def risk_subag(lam, M, phi, phi_s, G, H, rho_sq, sigma_sq) -> RiskComponents:
    """Limiting risk of an M-bag uniform-subsample (overlapping) ensemble.

    bias and variance are ``(1/M) * term(phi_s, phi_s) +
    (1 - 1/M) * term(phi, phi_s)``; at M = inf only the overlap term remains.
    With lam = 0 and phi_s = 1 the variance is +inf (interpolation threshold).
    """
    lam = _check_lam(lam)
    M = _check_bags(M)
    phi, phi_s = _check_ratios(phi, phi_s)
    w1 = 0.0 if M == math.inf else 1.0 / M
    v = solve_v(lam, phi_s, H)
    bias = (_wmul(w1, B_lam(lam, phi_s, phi_s, G, H, rho_sq, v=v))
            + _wmul(1.0 - w1, B_lam(lam, phi, phi_s, G, H, rho_sq, v=v)))
    variance = (_wmul(w1, V_lam(lam, phi_s, phi_s, H, sigma_sq, v=v))
                + _wmul(1.0 - w1, V_lam(lam, phi, phi_s, H, sigma_sq, v=v)))
    return RiskComponents(sigma_sq=float(sigma_sq), bias=bias, variance=variance)


def _splag_cap(phi: float, phi_s: float) -> float:
    if math.isinf(phi_s):
        return math.inf
    # absorb float quotient error: 0.6/0.2 = 2.999...96 must cap at 3
    return math.floor(phi_s / phi + 1e-9)


def risk_splag(lam, M, phi, phi_s, G, H, rho_sq, sigma_sq) -> RiskComponents:
    """Limiting risk of an M disjoint-block ensemble.

    M is clamped to ``floor(phi_s/phi)`` (the number of disjoint size-k
    blocks that fit); beyond the clamp the curve is constant in M.  Apart
    from the clamp the risk does not depend on phi.
    """
    lam = _check_lam(lam)
    M = _check_bags(M)
    phi, phi_s = _check_ratios(phi, phi_s)
    M_eff = min(M, _splag_cap(phi, phi_s))
    w1 = 0.0 if M_eff == math.inf else 1.0 / M_eff
    v = solve_v(lam, phi_s, H)
    bias = (_wmul(w1, B_lam(lam, phi_s, phi_s, G, H, rho_sq, v=v))
            + _wmul(1.0 - w1, C_lam(lam, phi_s, G, H, rho_sq, v=v)))
    variance = _wmul(w1, V_lam(lam, phi_s, phi_s, H, sigma_sq, v=v))
    return RiskComponents(sigma_sq=float(sigma_sq), bias=bias, variance=variance)


def theory_risk(strategy, lam, M, phi, phi_s, G, H, rho_sq, sigma_sq) -> RiskComponents:
    """Dispatch on the theory strategy literal ("subag" or "splag")."""
    if strategy == SUBAG:
        return risk_subag(lam, M, phi, phi_s, G, H, rho_sq, sigma_sq)
    if strategy == SPLAG:
        return risk_splag(lam, M, phi, phi_s, G, H, rho_sq, sigma_sq)
    raise ValueError(f"unknown theory strategy {strategy!r}")


def _golden_min(fn, a: float, b: float, tol: float = _REFINE_TOL):
    """Golden-section minimum of a unimodal-ish fn on [a, b]; ties go left."""
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc = fn(c)
    fd = fn(d)
    best_x, best_f = (c, fc) if fc <= fd else (d, fd)
    for _ in range(200):
        if b - a <= tol:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = fn(c)
            if fc < best_f:
                best_x, best_f = c, fc
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = fn(d)
            if fd < best_f:
                best_x, best_f = d, fd
    return best_x, best_f


def optimize_phis(lam, strategy, phi, G, H, rho_sq, sigma_sq,
                  grid_spec=None):
    """Minimize the infinite-bag risk over the subsample aspect ratio.

    The subag objective is the M = inf risk; the splag objective uses the
    clamped bag count ``floor(phi_s/phi)`` pointwise.  Candidates are a
    log-spaced grid (default 400 points spanning [max(phi, 1.0001 if
    ridgeless), 1000*max(1, phi)]), the endpoints {phi, inf}, and a
    golden-section refinement of the best grid bracket.  Ties resolve to the
    smallest phi_s.

    Parameters
    ----------
    grid_spec : (lo, hi, n) or None
        Override for the log-spaced portion of the candidate grid.

    Returns
    -------
    (phi_s_star, RiskComponents)
    """
    lam = _check_lam(lam)
    if strategy not in (SUBAG, SPLAG):
        raise ValueError(f"unknown theory strategy {strategy!r}")
    if not phi > 0.0 or math.isinf(phi):
        raise ValueError("phi must be finite and positive")

    def objective(x: float) -> float:
        return theory_risk(strategy, lam, math.inf, phi, x, G, H,
                           rho_sq, sigma_sq).total

    if grid_spec is None:
        lo = max(phi, 1.0001) if lam == 0.0 else phi
        hi = 1e3 * max(1.0, phi)
        n = _GRID_POINTS
    else:
        lo, hi, n = grid_spec
        lo = max(float(lo), phi)
        hi = float(hi)
        n = int(n)
    grid = np.geomspace(lo, hi, n) if hi > lo else np.array([lo])
    grid_vals = [objective(float(x)) for x in grid]

    candidates = [(phi, objective(phi))]
    candidates += [(float(x), fx) for x, fx in zip(grid, grid_vals)]
    candidates.append((math.inf, objective(math.inf)))

    # refine around the best grid point (its neighbors bracket the optimum
    # when the objective is locally unimodal there)
    i_best = int(np.argmin(grid_vals))
    if math.isfinite(grid_vals[i_best]):
        a = float(grid[max(i_best - 1, 0)])
        b = float(grid[min(i_best + 1, len(grid) - 1)])
        if b > a:
            x_ref, f_ref = _golden_min(objective, a, b)
            candidates.append((x_ref, f_ref))

    candidates.sort(key=lambda t: t[0])
    best_x, best_f = candidates[0]
    for x, fx in candidates[1:]:
        if fx < best_f:
            best_x, best_f = x, fx
    comps = theory_risk(strategy, lam, math.inf, phi, best_x, G, H,
                        rho_sq, sigma_sq)
    return best_x, comps


def optimal_ridge_risk_isotropic(phi, rho_sq, sigma_sq) -> float:
    """Risk of optimally-tuned full-sample ridge under identity covariance.

    The optimal penalty has the closed form ``phi * sigma_sq / rho_sq``; the
    returned value is the risk at that penalty (components via the same
    fixed-point machinery as everything else).
    """
    if not phi > 0.0 or math.isinf(phi):
        raise ValueError("phi must be finite and positive")
    if not rho_sq > 0.0:
        raise ValueError("rho_sq must be positive")
    if sigma_sq < 0.0:
        raise ValueError("sigma_sq must be nonnegative")
    H = make_isotropic(1.0)
    G = make_isotropic_signal(1.0, rho_sq=rho_sq, sigma_sq=sigma_sq)
    lam_star = phi * sigma_sq / rho_sq
    return risk_subag(lam_star, 1, phi, phi, G, H, rho_sq, sigma_sq).total
