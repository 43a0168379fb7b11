"""Scalar fixed-point quantities behind the asymptotic risk formulas.

Everything reduces to one equation: for penalty ``lam >= 0`` and subsample
aspect ratio ``theta`` (features per subsample observation), the companion
parameter ``v`` is the unique positive root of

    1/v = lam + theta * ∫ r / (1 + v r) dH(r).

The left side is strictly decreasing in ``v`` and the right side increasing,
so bisection on a sign-changing bracket always converges.  Conventions for
the degenerate corners:

* ``theta = inf``            -> v = 0
* ``lam = 0`` and theta <= 1 -> v = +inf (interpolation regime)

The derived functionals ``tv``, ``tc``, ``tv_b``, ``tv_v`` are the
ratio/integral combinations the bias and variance expressions consume; each
carries its own branch table for the corners above.  Infinities are returned
as IEEE inf and never arithmetic operands here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .spectrum import integrate

_MAX_BISECT = 200
_MAX_DOUBLINGS = 400
# stop once the bracket is this tight relative to the root
_WIDTH_TOL = 1e-13
# hand-rolled loops beat numpy dispatch overhead for small atom counts
_SMALL_SUPPORT = 32


def _resolvent_moment(H):
    """Return s1(v) = ∫ r/(1+vr) dH as a fast callable."""
    r = H.eigenvalues
    w = H.weights
    if r.size <= _SMALL_SUPPORT:
        atoms = list(zip(r.tolist(), w.tolist()))

        def s1(v):
            return sum(wi * ri / (1.0 + v * ri) for ri, wi in atoms)
    else:
        def s1(v):
            return float(w @ (r / (1.0 + v * r)))
    return s1


def solve_v(lam: float, theta: float, H) -> float:
    """Positive root of 1/v = lam + theta * ∫ r/(1+vr) dH.

    Parameters are the ridge penalty ``lam >= 0``, the subsample aspect ratio
    ``theta > 0`` (``math.inf`` allowed), and the covariance spectrum ``H``.
    Returns ``+inf`` in the ridgeless interpolation regime (lam=0, theta<=1)
    and ``0.0`` at theta=inf.
    """
    if not (lam >= 0.0) or math.isinf(lam):
        raise ValueError("lam must be finite and nonnegative")
    if not theta > 0.0:
        raise ValueError("theta must be positive")
    if math.isinf(theta):
        return 0.0
    if lam == 0.0 and theta <= 1.0:
        return math.inf

    s1 = _resolvent_moment(H)
    r_max = H.support_max

    def f(x):
        return 1.0 / x - lam - theta * s1(x)

    if lam > 0.0:
        lo = 1.0 / (lam + theta * r_max)   # f(lo) > 0
        hi = 1.0 / lam                     # f(hi) < 0
    else:
        lo = 1.0 / (theta * r_max)
        hi = 2.0 * lo
        for _ in range(_MAX_DOUBLINGS):
            if f(hi) < 0.0:
                break
            lo = hi
            hi *= 2.0
        else:
            raise RuntimeError("failed to bracket the fixed point")

    for _ in range(_MAX_BISECT):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        fm = f(mid)
        if fm > 0.0:
            lo = mid
        elif fm < 0.0:
            hi = mid
        else:
            return mid
        if hi - lo <= _WIDTH_TOL * mid:
            break
    return 0.5 * (lo + hi)


def closed_form_v_isotropic(lam: float, theta: float, scale: float = 1.0) -> float:
    """Root of the fixed-point equation for a single-atom spectrum at ``scale``.

    With H = δ_a the equation is a quadratic in v; used as an independent
    cross-check of :func:`solve_v`.
    """
    if not (lam >= 0.0) or math.isinf(lam):
        raise ValueError("lam must be finite and nonnegative")
    if not theta > 0.0:
        raise ValueError("theta must be positive")
    if not scale > 0.0:
        raise ValueError("scale must be positive")
    if math.isinf(theta):
        return 0.0
    a = scale
    if lam == 0.0:
        if theta <= 1.0:
            return math.inf
        return 1.0 / (a * (theta - 1.0))
    # lam*a*v^2 + (lam + a*theta - a)*v - 1 = 0, positive root
    b = lam + a * theta - a
    return (-b + math.sqrt(b * b + 4.0 * lam * a)) / (2.0 * lam * a)


def _second_moment(H, v: float) -> float:
    """∫ r^2/(1+vr)^2 dH at a finite v."""
    return integrate(H, lambda r: (r / (1.0 + v * r)) ** 2)


def _tv_denominator(theta: float, H, v: float) -> float:
    # v^{-2} - theta * ∫ r^2/(1+vr)^2 dH; strictly positive in theory
    return 1.0 / (v * v) - theta * _second_moment(H, v)


def _check_vartheta(vartheta: float, theta: float) -> None:
    if not vartheta >= 0.0:
        raise ValueError("vartheta must be nonnegative")
    # allow representation noise on vartheta == theta
    if vartheta > theta * (1.0 + 1e-12):
        raise ValueError(f"vartheta={vartheta} exceeds theta={theta}")


def tv_of(lam: float, vartheta: float, theta: float, H, *, v: float | None = None) -> float:
    """Variance-side functional tv(lam; vartheta, theta).

    Defined as ``vartheta*I2 / (v^{-2} - vartheta*I2)`` with
    ``I2 = ∫ r^2/(1+vr)^2 dH`` and ``v = solve_v(lam, theta, H)``.  Requires
    ``vartheta <= theta``.  Branch table: 0 at theta=inf; for lam=0,
    ``vartheta/(1-vartheta)`` when theta<1 and +inf when theta=1.
    """
    _check_vartheta(vartheta, theta)
    if math.isinf(theta):
        return 0.0
    if vartheta == 0.0:
        return 0.0
    if lam == 0.0 and theta <= 1.0:
        if theta == 1.0:
            return math.inf
        return vartheta / (1.0 - vartheta)
    if v is None:
        v = solve_v(lam, theta, H)
    weighted = vartheta * _second_moment(H, v)
    denom = 1.0 / (v * v) - weighted
    if denom <= 0.0:
        raise RuntimeError(
            f"nonpositive tv denominator at lam={lam}, vartheta={vartheta}, "
            f"theta={theta}; fixed-point solve lost accuracy")
    return weighted / denom


def tc_of(lam: float, theta: float, G, H, *, v: float | None = None) -> float:
    """Bias-side integral ∫ r/(1+vr)^2 dG at v = solve_v(lam, theta, H).

    Returns ∫ r dG at theta=inf (v=0) and 0 in the interpolation regime
    (lam=0, theta<=1, where v=inf kills the integrand).
    """
    if not theta > 0.0:
        raise ValueError("theta must be positive")
    if math.isinf(theta):
        return G.mean
    if lam == 0.0 and theta <= 1.0:
        return 0.0
    if v is None:
        v = solve_v(lam, theta, H)
    return integrate(G, lambda r: r / (1.0 + v * r) ** 2)


def tv_b_of(lam: float, theta: float, H, *, v: float | None = None) -> float:
    """Bias-side companion tv evaluated on the diagonal vartheta = theta."""
    return tv_of(lam, theta, theta, H, v=v)


def tv_v_of(lam: float, theta: float, H, *, v: float | None = None) -> float:
    """Reciprocal of the tv denominator: 1 / (v^{-2} - theta*I2).

    +inf in the interpolation regime (lam=0, theta<=1), 0 at theta=inf.
    """
    if not theta > 0.0:
        raise ValueError("theta must be positive")
    if math.isinf(theta):
        return 0.0
    if lam == 0.0 and theta <= 1.0:
        return math.inf
    if v is None:
        v = solve_v(lam, theta, H)
    denom = _tv_denominator(theta, H, v)
    if denom <= 0.0:
        raise RuntimeError(
            f"nonpositive tv_v denominator at lam={lam}, theta={theta}")
    return 1.0 / denom


@dataclass(frozen=True)
class FixedPointBundle:
    """All fixed-point quantities at one (lam, vartheta, theta) triple."""

    lam: float
    vartheta: float
    theta: float
    v: float
    tv: float
    tc: float
    tv_b: float
    tv_v: float


def evaluate_bundle(lam: float, vartheta: float, theta: float, H, G) -> FixedPointBundle:
    """Solve once and evaluate every derived functional at the same root."""
    v = solve_v(lam, theta, H)
    return FixedPointBundle(
        lam=lam,
        vartheta=vartheta,
        theta=theta,
        v=v,
        tv=tv_of(lam, vartheta, theta, H, v=v),
        tc=tc_of(lam, theta, G, H, v=v),
        tv_b=tv_b_of(lam, theta, H, v=v),
        tv_v=tv_v_of(lam, theta, H, v=v),
    )
