"""Worst-case-optimal linear mean estimation from target plus auxiliary samples.

The estimator is ``A @ mean(X) + B @ mean(Z)`` where ``X`` holds ``n`` samples
from the target distribution and ``Z`` holds ``N`` samples from an auxiliary
distribution within W2 distance ``eps`` of it.  The MSE is normalized by a
norm of the target covariance that is bounded below by ``delta_sq``; the three
supported norms differ only through a dimension constant.
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass
from typing import Union

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array

from .gaussian import GaussianMoments


class NormMode(str, enum.Enum):
    FROBENIUS = "frobenius"
    TRACE = "trace"
    OPERATOR = "operator"

    def constant(self, d: int) -> float:
        """Dimension constant ``c`` multiplying the variance terms of the scalar objective."""
        if self is NormMode.FROBENIUS:
            return math.sqrt(d)
        if self is NormMode.TRACE:
            return 1.0
        return float(d)

    def cov_norm(self, cov) -> float:
        """Norm of the target covariance used to normalize the MSE."""
        cov = np.asarray(cov, dtype=float)
        if self is NormMode.FROBENIUS:
            return float(np.linalg.norm(cov, "fro"))
        if self is NormMode.TRACE:
            return float(np.trace(cov))
        return float(np.linalg.norm(cov, 2))

    def variance_norm(self, m) -> float:
        """Norm applied to ``A'A/n + (I-A)'(I-A)/N`` in the matrix objective.

        Normalizing by the trace leaves the operator norm here and vice versa.
        """
        m = np.asarray(m, dtype=float)
        if self is NormMode.FROBENIUS:
            return float(np.linalg.norm(m, "fro"))
        if self is NormMode.TRACE:
            return float(np.linalg.norm(m, 2))
        return float(np.trace(m))

    @classmethod
    def parse(cls, value: Union[str, NormMode]) -> NormMode:
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            choices = ", ".join(m.value for m in cls)
            raise ValueError(f"unknown norm mode {value!r}; expected one of {choices}") from None


@dataclass(frozen=True)
class ProblemSpec:
    n: int
    N: int
    d: int
    eps: float
    delta_sq: float
    mode: NormMode = NormMode.FROBENIUS

    def __post_init__(self):
        object.__setattr__(self, "mode", NormMode.parse(self.mode))
        for name in ("n", "N", "d"):
            value = getattr(self, name)
            if isinstance(value, bool) or int(value) != value or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")
            object.__setattr__(self, name, int(value))
        for name in ("eps", "delta_sq"):
            value = float(getattr(self, name))
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be positive and finite, got {value!r}")
            object.__setattr__(self, name, value)

    @property
    def c(self) -> float:
        return self.mode.constant(self.d)

    @property
    def ratio(self) -> float:
        """``eps**2 / delta_sq``: shift budget relative to the covariance floor."""
        return self.eps**2 / self.delta_sq

    def replace(self, **changes) -> ProblemSpec:
        fields = asdict(self)
        fields.update(changes)
        return ProblemSpec(**fields)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["mode"] = self.mode.value
        return out

    @classmethod
    def from_dict(cls, data: dict) -> ProblemSpec:
        known = {"n", "N", "d", "eps", "delta_sq", "mode"}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown problem fields: {sorted(unknown)}")
        return cls(**data)


@dataclass(frozen=True)
class ScalarEstimator:
    """``A = s I`` and ``B = (1 - s) I``."""

    s: float

    def __post_init__(self):
        if not math.isfinite(self.s):
            raise ValueError(f"weight must be finite, got {self.s!r}")

    def matrices(self, d: int) -> tuple[np.ndarray, np.ndarray]:
        eye = np.eye(d)
        return self.s * eye, (1.0 - self.s) * eye


@dataclass(frozen=True, eq=False)
class MatrixEstimator:
    """General pair ``(A, B)``; only the verification oracles need this form."""

    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        B = np.atleast_2d(np.asarray(self.B, dtype=float))
        if A.shape != B.shape or A.shape[0] != A.shape[1]:
            raise ValueError(f"A and B must be square of equal size, got {A.shape} and {B.shape}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    def matrices(self, d: int) -> tuple[np.ndarray, np.ndarray]:
        if self.A.shape[0] != d:
            raise ValueError(f"dimension mismatch: estimator is {self.A.shape[0]}-dimensional, data {d}")
        return self.A, self.B


LinearEstimator = Union[ScalarEstimator, MatrixEstimator]


@dataclass(frozen=True)
class RiskReport:
    s_star: float
    risk_star: float
    mode: NormMode
    spec: ProblemSpec

    def to_dict(self) -> dict:
        return {
            "s_star": self.s_star,
            "risk_star": self.risk_star,
            "mode": self.mode.value,
            "spec": self.spec.to_dict(),
        }


def optimal_weight(spec: ProblemSpec) -> float:
    """Weight ``s`` on the target sample mean minimizing the worst-case normalized MSE."""
    c = spec.c
    a = spec.ratio
    s = (a + c / spec.N) / (a + c / spec.n + c / spec.N)
    return min(max(s, 0.0), 1.0)


def minmax_risk(spec: ProblemSpec) -> RiskReport:
    """Optimal worst-case normalized MSE, ``c (b c + N) / (b c (n + N) + n N)`` with ``b = delta_sq / eps**2``."""
    c = spec.c
    b = spec.delta_sq / spec.eps**2
    n, N = spec.n, spec.N
    risk = c * (b * c + N) / (b * c * (n + N) + n * N)
    return RiskReport(optimal_weight(spec), risk, spec.mode, spec)


def scalar_objective(spec: ProblemSpec, s: float) -> float:
    """Worst-case normalized MSE of the scalar estimator with weight ``s``."""
    return (s - 1.0) ** 2 * spec.ratio + spec.c * (s**2 / spec.n + (1.0 - s) ** 2 / spec.N)


def _check_pair(p: GaussianMoments, q: GaussianMoments) -> int:
    if p.dim != q.dim:
        raise ValueError(f"dimension mismatch: target is {p.dim}-dimensional, auxiliary {q.dim}")
    return p.dim


def risk_from_moments(
    est: LinearEstimator, p: GaussianMoments, q: GaussianMoments, n: int, N: int
) -> float:
    """Exact (unnormalized) MSE of ``est`` when the target has moments ``p`` and the auxiliary ``q``.

    ``Tr(A'A S_p)/n + Tr(B'B S_q)/N + |A mu_p + B mu_q - mu_p|^2``
    """
    d = _check_pair(p, q)
    if isinstance(est, ScalarEstimator):
        s = est.s
        gap = q.mean - p.mean
        bias = (1.0 - s) ** 2 * float(gap @ gap)
        return s**2 * float(np.trace(p.cov)) / n + (1.0 - s) ** 2 * float(np.trace(q.cov)) / N + bias
    A, B = est.matrices(d)
    resid = A @ p.mean + B @ q.mean - p.mean
    var_true = float(np.sum((A.T @ A) * p.cov)) / n
    var_aux = float(np.sum((B.T @ B) * q.cov)) / N
    return var_true + var_aux + float(resid @ resid)


def matrix_objective(spec: ProblemSpec, A) -> float:
    """Worst-case normalized MSE of the estimator ``(A, I - A)`` in the large-``N`` regime."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.shape != (spec.d, spec.d):
        raise ValueError(f"A must be {spec.d}x{spec.d}, got {A.shape}")
    eye = np.eye(spec.d)
    R = eye - A
    shift = float(np.linalg.norm(R, 2)) ** 2 * spec.ratio
    M = A.T @ A / spec.n + R.T @ R / spec.N
    return shift + spec.mode.variance_norm(M)


def apply_estimator(est: LinearEstimator, true_samples, aux_samples) -> np.ndarray:
    X = np.atleast_2d(np.asarray(true_samples, dtype=float))
    Z = np.atleast_2d(np.asarray(aux_samples, dtype=float))
    if X.size == 0 or Z.size == 0:
        raise ValueError("both sample sets must be nonempty")
    if X.shape[1] != Z.shape[1]:
        raise ValueError(f"dimension mismatch: {X.shape[1]} vs {Z.shape[1]}")
    mean_x = X.mean(axis=0)
    mean_z = Z.mean(axis=0)
    if isinstance(est, ScalarEstimator):
        return est.s * mean_x + (1.0 - est.s) * mean_z
    A, B = est.matrices(X.shape[1])
    return A @ mean_x + B @ mean_z


class AuxiliaryMeanEstimator(BaseEstimator):
    """Robust mean of the target distribution, using auxiliary samples as well.

    Parameters
    ----------
    eps : float, default=1.0
        Upper bound on the W2 distance between target and auxiliary distributions.
    delta_sq : float, default=1.0
        Lower bound on the chosen norm of the target covariance.
    mode : {"frobenius", "trace", "operator"}, default="frobenius"
        Covariance norm used to normalize the worst-case MSE.

    Attributes
    ----------
    weight_ : float
        Weight on the target sample mean; ``1 - weight_`` goes to the auxiliary mean.
    location_ : ndarray of shape (n_features,)
        Estimated target mean.
    worst_case_risk_ : float
        Min-max normalized MSE for the fitted sample sizes.
    spec_ : ProblemSpec
    n_features_in_ : int

    Examples
    --------
    >>> import numpy as np
    >>> rng = np.random.default_rng(0)
    >>> X = rng.normal(size=(20, 3))
    >>> Z = rng.normal(loc=0.1, size=(500, 3))
    >>> est = AuxiliaryMeanEstimator(eps=0.1).fit(X, Z)
    >>> 0.0 < est.weight_ < 1.0
    True
    """

    def __init__(self, eps=1.0, delta_sq=1.0, mode="frobenius"):
        self.eps = eps
        self.delta_sq = delta_sq
        self.mode = mode

    def fit(self, X, Z):
        """Fit from target samples ``X`` (n, d) and auxiliary samples ``Z`` (N, d)."""
        X = check_array(X)
        Z = check_array(Z)
        if X.shape[1] != Z.shape[1]:
            raise ValueError(
                f"X has {X.shape[1]} features but Z has {Z.shape[1]}; both must match"
            )
        self.spec_ = ProblemSpec(
            n=X.shape[0], N=Z.shape[0], d=X.shape[1],
            eps=self.eps, delta_sq=self.delta_sq, mode=self.mode,
        )
        report = minmax_risk(self.spec_)
        self.weight_ = report.s_star
        self.worst_case_risk_ = report.risk_star
        self.location_ = apply_estimator(ScalarEstimator(self.weight_), X, Z)
        self.n_features_in_ = X.shape[1]
        return self

