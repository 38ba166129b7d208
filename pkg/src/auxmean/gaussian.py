"""Gaussian moment pairs and the closed-form Wasserstein-2 distance between them."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

SYMMETRY_RTOL = 1e-10
PSD_RTOL = 1e-10


class AsymmetricMatrixError(ValueError):
    pass


class NotPSDError(ValueError):
    pass


class SpectralDecomposition(NamedTuple):
    """Eigenvalues in nonincreasing order and the matching orthonormal eigenvectors (columns)."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.T


def _check_symmetric(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    scale = np.max(np.abs(m)) if m.size else 0.0
    deviation = np.max(np.abs(m - m.T)) if m.size else 0.0
    if deviation > SYMMETRY_RTOL * scale:
        raise AsymmetricMatrixError(f"asymmetric matrix: max |m - m.T| = {deviation:.3e}")
    return 0.5 * (m + m.T)


def spectral_decompose(m) -> SpectralDecomposition:
    m = _check_symmetric(m)
    eigenvalues, eigenvectors = np.linalg.eigh(m)
    return SpectralDecomposition(eigenvalues[::-1].copy(), eigenvectors[:, ::-1].copy())


def _clamp(dec: SpectralDecomposition) -> SpectralDecomposition:
    lam = dec.eigenvalues
    top = lam[0] if lam.size else 0.0
    floor = -PSD_RTOL * max(top, 0.0)
    if lam.size and lam[-1] < floor:
        raise NotPSDError(f"not PSD: smallest eigenvalue {lam[-1]:.3e} (largest {top:.3e})")
    return SpectralDecomposition(np.clip(lam, 0.0, None), dec.eigenvectors)


def psd_sqrt(m) -> np.ndarray:
    """Symmetric PSD square root through the eigendecomposition.

    Eigenvalues in ``[-1e-10 * lambda_max, 0)`` are treated as zero; anything
    more negative raises :class:`NotPSDError`.  Eigenvalues at or below
    ``d * machine_eps * lambda_max`` are below what ``eigh`` resolves and are
    also zeroed, so singular inputs keep exactly singular roots.
    """
    dec = _clamp(spectral_decompose(m))
    lam = dec.eigenvalues
    if lam.size:
        lam = np.where(lam > lam.size * np.finfo(float).eps * lam[0], lam, 0.0)
    root = SpectralDecomposition(np.sqrt(lam), dec.eigenvectors).reconstruct()
    return 0.5 * (root + root.T)


@dataclass(frozen=True, eq=False)
class GaussianMoments:
    """Mean vector and covariance matrix of a (possibly degenerate) Gaussian.

    The covariance is symmetrized on construction, and small negative
    eigenvalues within the clamping band are set to zero.
    """

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.atleast_1d(np.array(self.mean, dtype=float, copy=True))
        if mean.ndim != 1:
            raise ValueError(f"mean must be a vector, got shape {mean.shape}")
        cov = np.asarray(self.cov, dtype=float)
        if cov.ndim == 0 and mean.shape == (1,):
            cov = cov.reshape(1, 1)
        cov = _check_symmetric(cov)
        if cov.shape[0] != mean.shape[0]:
            raise ValueError(
                f"dimension mismatch: mean has length {mean.shape[0]}, cov is {cov.shape}"
            )
        raw = spectral_decompose(cov)
        dec = _clamp(raw)
        if raw.eigenvalues.size and raw.eigenvalues[-1] < 0.0:
            cov = dec.reconstruct()
            cov = 0.5 * (cov + cov.T)
        mean.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    @classmethod
    def isotropic(cls, mean, variance: float) -> GaussianMoments:
        mean = np.atleast_1d(np.asarray(mean, dtype=float))
        return cls(mean, variance * np.eye(mean.shape[0]))

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "cov": self.cov.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> GaussianMoments:
        try:
            return cls(data["mean"], data["cov"])
        except KeyError as exc:
            raise ValueError(f"moment record is missing key {exc}") from None

    def allclose(self, other: GaussianMoments, atol: float = 1e-9) -> bool:
        return (
            self.dim == other.dim
            and np.allclose(self.mean, other.mean, rtol=0.0, atol=atol)
            and np.allclose(self.cov, other.cov, rtol=0.0, atol=atol)
        )


def gelbrich_w2_squared(p: GaussianMoments, q: GaussianMoments) -> float:
    """Squared W2 distance between N(p.mean, p.cov) and N(q.mean, q.cov).

    ``|mu_p - mu_q|^2 + Tr(S_p + S_q - 2 (S_p^1/2 S_q S_p^1/2)^1/2)``, clamped at zero.
    """
    if p.dim != q.dim:
        raise ValueError(f"dimension mismatch: {p.dim} vs {q.dim}")
    shift = p.mean - q.mean
    if np.array_equal(p.cov, q.cov):
        return float(shift @ shift)
    # The covariance term equals min over orthogonal U of |S_p^1/2 - S_q^1/2 U|_F^2, attained at
    # the polar factor of S_q^1/2 S_p^1/2.  Summing squares of the residual avoids the
    # cancellation in Tr(S_p) + Tr(S_q) - 2 Tr(...) when the covariances nearly agree.
    root_p = psd_sqrt(p.cov)
    root_q = psd_sqrt(q.cov)
    w, _, vt = np.linalg.svd(root_q @ root_p)
    resid = root_p - root_q @ (w @ vt)
    value = float(shift @ shift) + float(np.sum(resid * resid))
    return max(value, 0.0)


def gelbrich_w2(p: GaussianMoments, q: GaussianMoments) -> float:
    return float(np.sqrt(gelbrich_w2_squared(p, q)))
