"""Dense symmetric eigendecomposition and spectral matrix functions.

Every matrix function in the package routes through the single
eigendecomposition path in this module so that all consumers share
identical numerics. Inputs are symmetrized as (A + A^T)/2 before
decomposition.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

# Relative rank tolerance factor: dim * 2^-52. Eigenvalues <= factor * lambda_max
# are treated as zero by pinv_psd / sqrt_psd; configurable per call.
_EPS = 2.0 ** -52


class SpectralDecomposition(NamedTuple):
    """Eigenvalues in ascending order and orthonormal eigenvectors (columns)."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def symmetrize(a) -> np.ndarray:
    """Return (A + A^T)/2 after validating a finite square 2-d array."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if a.shape[0] < 1:
        raise ValueError("matrix dimension must be >= 1")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix contains non-finite entries")
    return (a + a.T) / 2.0


def eig_sym(a) -> SpectralDecomposition:
    """Eigendecomposition of a symmetric matrix.

    Eigenvalues come back ascending. Eigenvector signs are fixed so the
    first component of non-negligible magnitude is positive, which makes
    decompositions reproducible across runs on the same build.
    """
    s = symmetrize(a)
    w, v = np.linalg.eigh(s)
    # sign convention: first nonzero component of each eigenvector positive
    mags = np.abs(v)
    thresholds = 1e-12 * mags.max(axis=0)
    first_nz = (mags > thresholds[None, :]).argmax(axis=0)
    signs = v[first_nz, np.arange(v.shape[1])]
    v = v * np.where(signs < 0.0, -1.0, 1.0)[None, :]
    return SpectralDecomposition(w, v)


def _recompose(w: np.ndarray, v: np.ndarray) -> np.ndarray:
    out = (v * w[None, :]) @ v.T
    return (out + out.T) / 2.0


def _rank_threshold(w: np.ndarray, tol: float | None) -> float:
    scale = max(float(w[-1]), 0.0)
    factor = len(w) * _EPS if tol is None else float(tol)
    return factor * scale


def pinv_psd(a, tol: float | None = None) -> np.ndarray:
    """Spectral pseudoinverse of a PSD matrix.

    Eigenvalues at or below the rank threshold map to 0, the rest to
    their reciprocals. Eigenvalues below -threshold are rejected: the
    input is not PSD within tolerance.
    """
    w, v = eig_sym(a)
    thr = _rank_threshold(w, tol)
    if w[0] < -thr:
        raise ValueError(f"matrix is not PSD within tolerance: min eigenvalue {w[0]:.3e}")
    inv = np.where(w > thr, 1.0, 0.0) / np.where(w > thr, w, 1.0)
    return _recompose(inv, v)


def sqrt_psd(a, tol: float | None = None) -> np.ndarray:
    """Unique PSD square root, with eigenvalues clipped at 0 first."""
    w, v = eig_sym(a)
    thr = _rank_threshold(w, tol)
    if w[0] < -thr:
        raise ValueError(f"matrix is not PSD within tolerance: min eigenvalue {w[0]:.3e}")
    return _recompose(np.sqrt(np.clip(w, 0.0, None)), v)


def exp_sym(a) -> np.ndarray:
    """Spectral matrix exponential of a symmetric matrix."""
    w, v = eig_sym(a)
    return _recompose(np.exp(w), v)


def log_spd(a) -> np.ndarray:
    """Spectral matrix logarithm; input must be strictly positive definite."""
    w, v = eig_sym(a)
    if w[0] <= 0.0:
        raise ValueError(f"matrix logarithm needs a strictly PD input: min eigenvalue {w[0]:.3e}")
    return _recompose(np.log(w), v)


def quad_form(a, u) -> float:
    """The scalar u^T A u with A symmetrized first."""
    s = symmetrize(a)
    u = np.asarray(u, dtype=float)
    if u.shape != (s.shape[0],):
        raise ValueError(f"vector shape {u.shape} does not match matrix dim {s.shape[0]}")
    return float(u @ s @ u)
