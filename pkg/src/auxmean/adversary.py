"""Worst-case target/auxiliary moment pairs for scalar-weight estimators."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .estimator import NormMode, ProblemSpec
from .gaussian import GaussianMoments


class BudgetExhaustedError(ValueError):
    """The finite-N stationary covariance alone would exceed the W2 budget."""


@dataclass(frozen=True, eq=False)
class AdversaryPair:
    p: GaussianMoments
    q: GaussianMoments
    mean_shift_sq: float
    cov_budget_sq: float

    def to_dict(self) -> dict:
        return {
            "p": self.p.to_dict(),
            "q": self.q.to_dict(),
            "mean_shift_sq": self.mean_shift_sq,
            "cov_budget_sq": self.cov_budget_sq,
        }

    @classmethod
    def from_dict(cls, data: dict) -> AdversaryPair:
        return cls(
            GaussianMoments.from_dict(data["p"]),
            GaussianMoments.from_dict(data["q"]),
            float(data.get("mean_shift_sq", math.nan)),
            float(data.get("cov_budget_sq", math.nan)),
        )


def _unit_direction(direction, d: int) -> np.ndarray:
    if direction is None:
        u = np.zeros(d)
        u[0] = 1.0
        return u
    u = np.asarray(direction, dtype=float)
    if u.shape != (d,):
        raise ValueError(f"direction must have shape ({d},), got {u.shape}")
    norm = float(np.linalg.norm(u))
    if abs(norm - 1.0) > 1e-10:
        raise ValueError(f"non-unit direction: norm {norm!r}")
    return u


def _base_mean(base_mean, d: int) -> np.ndarray:
    if base_mean is None:
        return np.zeros(d)
    m = np.asarray(base_mean, dtype=float)
    if m.shape != (d,):
        raise ValueError(f"base_mean must have shape ({d},), got {m.shape}")
    return m


def worst_case_target_cov(spec: ProblemSpec, direction=None) -> np.ndarray:
    """Target covariance at the worst case, scaled so its mode norm equals ``delta_sq``.

    For the trace normalization the worst case is rank one along ``direction``.
    """
    d = spec.d
    if spec.mode is NormMode.FROBENIUS:
        return spec.delta_sq / math.sqrt(d) * np.eye(d)
    if spec.mode is NormMode.OPERATOR:
        return spec.delta_sq * np.eye(d)
    u = _unit_direction(direction, d)
    return spec.delta_sq * np.outer(u, u)


def _check_weight(s: float) -> None:
    if not math.isfinite(s):
        raise ValueError(f"weight must be finite, got {s!r}")


def worst_case_large_n(spec: ProblemSpec, s: float, direction=None, base_mean=None) -> AdversaryPair:
    """Adversary in the large-N limit: equal covariances, whole budget spent on the means.

    For ``A = s I`` every direction is a principal direction of ``A - I``, so
    the mean-shift direction is a free parameter (default: first basis vector).
    """
    _check_weight(s)
    u = _unit_direction(direction, spec.d)
    mu = _base_mean(base_mean, spec.d)
    cov = worst_case_target_cov(spec, u)
    p = GaussianMoments(mu, cov)
    q = GaussianMoments(mu + spec.eps * u, cov)
    return AdversaryPair(p, q, spec.eps**2, 0.0)


def worst_case_kkt(spec: ProblemSpec, s: float, direction=None, base_mean=None) -> AdversaryPair:
    """Finite-N stationary adversary with auxiliary covariance ``(N/(N-1))**2`` times the target's.

    The covariance mismatch costs ``Tr(S_x)/(N-1)**2`` of the squared budget;
    the remainder goes to the mean shift.
    """
    _check_weight(s)
    if spec.N < 2:
        raise BudgetExhaustedError(f"budget exhausted: the KKT construction needs N >= 2, got N={spec.N}")
    u = _unit_direction(direction, spec.d)
    mu = _base_mean(base_mean, spec.d)
    cov = worst_case_target_cov(spec, u)
    cov_budget = float(np.trace(cov)) / (spec.N - 1) ** 2
    residual = spec.eps**2 - cov_budget
    if residual < 0.0:
        raise BudgetExhaustedError(
            f"budget exhausted: covariance mismatch needs {cov_budget!r} of eps^2={spec.eps**2!r}; "
            "use worst_case_large_n instead"
        )
    scale = (spec.N / (spec.N - 1)) ** 2
    p = GaussianMoments(mu, cov)
    q = GaussianMoments(mu + math.sqrt(residual) * u, scale * cov)
    return AdversaryPair(p, q, residual, cov_budget)
