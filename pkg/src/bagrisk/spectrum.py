"""Discrete spectral measures used by the asymptotic risk formulas.

The limiting risk of (sub)sampled ridge depends on the data-generating
process only through two finitely supported measures on the positive axis:

* ``H`` — the eigenvalue distribution of the feature covariance, and
* ``G`` — the eigenvalue distribution reweighted by the squared projections
  of the true coefficient vector onto the eigenvectors (normalized so the
  weights sum to one).

Both are stored as plain atom lists ``(eigenvalue, weight)``.  Everything
downstream consumes them through :func:`integrate`.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg as sla

ISOTROPIC = "isotropic"
AR1 = "ar1"
EMPIRICAL = "empirical"

# weight-sum drift: below _WEIGHT_WARN silently renormalized, above
# _WEIGHT_FAIL treated as a construction bug rather than floating error
_WEIGHT_WARN = 1e-9
_WEIGHT_FAIL = 1e-6


def _clean_atoms(eigenvalues, weights):
    r = np.atleast_1d(np.asarray(eigenvalues, dtype=float)).ravel()
    w = np.atleast_1d(np.asarray(weights, dtype=float)).ravel()
    if r.size == 0:
        raise ValueError("a spectral distribution needs at least one atom")
    if r.shape != w.shape:
        raise ValueError(f"{r.size} eigenvalues but {w.size} weights")
    if not np.all(np.isfinite(r)) or np.any(r <= 0.0):
        raise ValueError("eigenvalues must be finite and strictly positive")
    if not np.all(np.isfinite(w)) or np.any(w < 0.0):
        raise ValueError("weights must be finite and nonnegative")
    total = float(w.sum())
    drift = abs(total - 1.0)
    if drift > _WEIGHT_FAIL:
        raise ValueError(f"weights sum to {total!r}; expected 1 within {_WEIGHT_FAIL}")
    if drift > _WEIGHT_WARN:
        warnings.warn(f"renormalizing spectral weights (sum drifted to {total!r})")
    w = w / total
    r = r.copy()
    r.setflags(write=False)
    w.setflags(write=False)
    return r, w


@dataclass(frozen=True)
class SpectralDistribution:
    """Finitely supported distribution of covariance eigenvalues.

    Parameters
    ----------
    eigenvalues : array_like
        Atom locations; finite and strictly positive.
    weights : array_like
        Atom masses; nonnegative, summing to one (small floating drift is
        absorbed by renormalization).
    label : str
        One of ``"isotropic"``, ``"ar1"``, ``"empirical"``; informational.
    """

    eigenvalues: np.ndarray
    weights: np.ndarray
    label: str = EMPIRICAL

    def __post_init__(self):
        r, w = _clean_atoms(self.eigenvalues, self.weights)
        object.__setattr__(self, "eigenvalues", r)
        object.__setattr__(self, "weights", w)

    @property
    def support_max(self) -> float:
        return float(self.eigenvalues.max())

    @property
    def support_min(self) -> float:
        return float(self.eigenvalues.min())

    @property
    def mean(self) -> float:
        """First moment ∫ r d(self)."""
        return float(self.weights @ self.eigenvalues)


@dataclass(frozen=True)
class SignalDistribution:
    """Signal-projection eigenvalue distribution plus scalar model parameters.

    Carries the squared signal norm ``rho_sq`` and the noise variance
    ``sigma_sq`` alongside the atoms, so one object describes the full
    second-order data model.  The risk functions take ``rho_sq``/``sigma_sq``
    explicitly; the copies here are the model's bookkeeping defaults.
    """

    eigenvalues: np.ndarray
    weights: np.ndarray
    rho_sq: float
    sigma_sq: float = 1.0
    label: str = EMPIRICAL

    def __post_init__(self):
        r, w = _clean_atoms(self.eigenvalues, self.weights)
        object.__setattr__(self, "eigenvalues", r)
        object.__setattr__(self, "weights", w)
        if not np.isfinite(self.rho_sq) or self.rho_sq < 0.0:
            raise ValueError("rho_sq must be finite and nonnegative")
        if not np.isfinite(self.sigma_sq) or self.sigma_sq < 0.0:
            raise ValueError("sigma_sq must be finite and nonnegative")

    @property
    def support_max(self) -> float:
        return float(self.eigenvalues.max())

    @property
    def mean(self) -> float:
        return float(self.weights @ self.eigenvalues)

    @property
    def snr(self) -> float:
        """Signal strength over noise: rho_sq * ∫ r dG / sigma_sq."""
        if self.sigma_sq == 0.0:
            return float("inf") if self.rho_sq > 0.0 else 0.0
        return self.rho_sq * self.mean / self.sigma_sq


def integrate(dist, f) -> float:
    """Integrate ``f`` against a discrete spectral measure.

    ``f`` must act elementwise on an eigenvalue array.  Raises if any
    evaluated value is non-finite, so poles are caught at the call site
    instead of propagating NaN through the risk formulas.
    """
    vals = np.asarray(f(dist.eigenvalues), dtype=float)
    vals = np.broadcast_to(vals, dist.eigenvalues.shape)
    if not np.all(np.isfinite(vals)):
        raise ValueError("integrand produced non-finite values on the support")
    return float(dist.weights @ vals)


def make_isotropic(scale: float = 1.0) -> SpectralDistribution:
    """Point mass at ``scale``: the identity-covariance (isotropic) spectrum."""
    if not np.isfinite(scale) or scale <= 0:
        raise ValueError("scale must be finite and positive")
    return SpectralDistribution(np.array([scale]), np.array([1.0]), label=ISOTROPIC)


def make_isotropic_signal(scale: float = 1.0, rho_sq: float = 1.0,
                          sigma_sq: float = 1.0) -> SignalDistribution:
    """Isotropic signal law: under rotation-invariant coefficients, G = H = δ_scale."""
    if not np.isfinite(scale) or scale <= 0:
        raise ValueError("scale must be finite and positive")
    return SignalDistribution(np.array([scale]), np.array([1.0]),
                              rho_sq=rho_sq, sigma_sq=sigma_sq, label=ISOTROPIC)


def ar1_covariance(rho_ar: float, p: int) -> np.ndarray:
    """Toeplitz covariance Sigma[i, j] = rho_ar**|i-j| (read-only, cached)."""
    return _ar1_covariance_cached(float(rho_ar), int(p))


@lru_cache(maxsize=8)
def _ar1_covariance_cached(rho_ar: float, p: int) -> np.ndarray:
    if not 0.0 < rho_ar < 1.0:
        raise ValueError("rho_ar must lie in (0, 1)")
    if p < 5:
        raise ValueError("p must be at least 5")
    sigma = sla.toeplitz(rho_ar ** np.arange(p))
    sigma.setflags(write=False)
    return sigma


@lru_cache(maxsize=8)
def _ar1_eigenvalues(rho_ar: float, p: int) -> np.ndarray:
    # ascending; O(p^3) once per (rho_ar, p)
    vals = sla.eigvalsh(np.array(_ar1_covariance_cached(rho_ar, p)))
    vals.setflags(write=False)
    return vals


def make_ar1(rho_ar: float, p: int, sigma_sq: float = 1.0):
    """Spectral pair (H, G) for the banded-correlation model at dimension p.

    H puts mass 1/p on every eigenvalue of the Toeplitz covariance
    ``rho_ar**|i-j|``; the coefficient vector is the average of the top five
    eigenvectors scaled by 1/5, so G puts mass 1/5 on each of the five
    largest eigenvalues and ``rho_sq = 1/5``.

    Returns
    -------
    (SpectralDistribution, SignalDistribution)
    """
    vals = _ar1_eigenvalues(float(rho_ar), int(p))
    p = int(p)
    spectrum = SpectralDistribution(vals, np.full(p, 1.0 / p), label=AR1)
    signal = SignalDistribution(vals[-5:], np.full(5, 0.2),
                                rho_sq=0.2, sigma_sq=sigma_sq, label=AR1)
    return spectrum, signal


def make_empirical(Sigma, beta0, sigma_sq: float = 1.0):
    """Spectral pair (H, G) from an explicit covariance and coefficient vector.

    Parameters
    ----------
    Sigma : (p, p) array_like
        Symmetric positive-definite covariance.
    beta0 : (p,) array_like
        True coefficient vector; ``rho_sq`` is set to ``||beta0||^2`` and the
        G weights are the normalized squared eigenvector projections.
    sigma_sq : float
        Noise variance stored on the signal object.

    Notes
    -----
    ``rho_sq * ∫ r dG`` equals ``beta0' Sigma beta0`` by construction (exact
    up to the eigensolve), which is the predictive signal strength.
    """
    Sigma = np.asarray(Sigma, dtype=float)
    beta0 = np.asarray(beta0, dtype=float).ravel()
    if Sigma.ndim != 2 or Sigma.shape[0] != Sigma.shape[1]:
        raise ValueError("Sigma must be square")
    p = Sigma.shape[0]
    if beta0.shape != (p,):
        raise ValueError(f"beta0 has length {beta0.size}, expected {p}")
    scale = max(1.0, float(np.abs(Sigma).max()))
    if not np.allclose(Sigma, Sigma.T, atol=1e-10 * scale, rtol=0.0):
        raise ValueError("Sigma is not symmetric")
    vals, vecs = sla.eigh(Sigma)
    if vals.min() <= 0.0:
        raise ValueError("Sigma is not positive definite")
    spectrum = SpectralDistribution(vals, np.full(p, 1.0 / p), label=EMPIRICAL)
    proj_sq = (vecs.T @ beta0) ** 2
    rho_sq = float(proj_sq.sum())  # == ||beta0||^2, eigenvector basis is orthonormal
    if rho_sq > 0.0:
        g_weights = proj_sq / rho_sq
    else:
        g_weights = np.full(p, 1.0 / p)  # zero signal: G is irrelevant, keep it proper
    signal = SignalDistribution(vals, g_weights, rho_sq=rho_sq,
                                sigma_sq=sigma_sq, label=EMPIRICAL)
    return spectrum, signal


# ---------------------------------------------------------------------------
# CSV persistence: `# key=value` metadata lines, then eigenvalue,weight rows.
# ---------------------------------------------------------------------------

def save_spectrum(dist, path) -> None:
    """Write atoms (and rho_sq/sigma_sq for signal objects) to a CSV file."""
    with open(path, "w", newline="") as fh:
        fh.write(f"# label={dist.label}\n")
        if isinstance(dist, SignalDistribution):
            fh.write(f"# rho_sq={dist.rho_sq!r}\n")
            fh.write(f"# sigma_sq={dist.sigma_sq!r}\n")
        writer = csv.writer(fh)
        writer.writerow(["eigenvalue", "weight"])
        for r, w in zip(dist.eigenvalues, dist.weights):
            writer.writerow([repr(float(r)), repr(float(w))])


def _read_atom_csv(path):
    meta = {}
    rows = []
    with open(path, newline="") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line.lstrip("#").strip()
                if "=" in body:
                    key, _, value = body.partition("=")
                    meta[key.strip()] = value.strip()
                continue
            rows.append(line)
    reader = csv.reader(rows)
    header = next(reader, None)
    if header is None or [h.strip() for h in header[:2]] != ["eigenvalue", "weight"]:
        raise ValueError(f"{path}: expected 'eigenvalue,weight' header")
    eigs, weights = [], []
    for row in reader:
        if not row:
            continue
        eigs.append(float(row[0]))
        weights.append(float(row[1]))
    return meta, np.array(eigs), np.array(weights)


def load_spectrum(path) -> SpectralDistribution:
    """Read a covariance spectrum written by :func:`save_spectrum`."""
    meta, eigs, weights = _read_atom_csv(path)
    return SpectralDistribution(eigs, weights, label=meta.get("label", EMPIRICAL))


def load_signal(path) -> SignalDistribution:
    """Read a signal spectrum; requires rho_sq and sigma_sq metadata lines."""
    meta, eigs, weights = _read_atom_csv(path)
    if "rho_sq" not in meta or "sigma_sq" not in meta:
        raise ValueError(f"{path}: signal CSV needs '# rho_sq=' and '# sigma_sq=' lines")
    return SignalDistribution(eigs, weights, rho_sq=float(meta["rho_sq"]),
                              sigma_sq=float(meta["sigma_sq"]),
                              label=meta.get("label", EMPIRICAL))
