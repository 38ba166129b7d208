"""Brute-force oracles that check the closed forms without calling them on the path under test.

Every randomized check draws trial ``i`` from ``default_rng([seed, i])`` so a
report depends only on its arguments, never on evaluation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .adversary import worst_case_large_n
from .estimator import (
    MatrixEstimator,
    NormMode,
    ProblemSpec,
    ScalarEstimator,
    matrix_objective,
    minmax_risk,
    optimal_weight,
    risk_from_moments,
    scalar_objective,
)
from .gaussian import GaussianMoments, gelbrich_w2, gelbrich_w2_squared

INVPHI = (math.sqrt(5.0) - 1.0) / 2.0

WEIGHT_TOL = 1e-7
RISK_RTOL = 1e-9
MATRIX_TOL = 1e-9
ADVERSARY_TOL = 1e-6


@dataclass(frozen=True)
class OracleReport:
    quantity: str
    closed_form: float
    oracle_value: float
    abs_gap: float
    passed: bool
    tolerance: float
    details: dict = field(default_factory=dict, compare=False)

    @classmethod
    def from_gap(cls, quantity, closed_form, oracle_value, abs_gap, tolerance, **details) -> OracleReport:
        abs_gap = float(abs_gap)
        return cls(
            quantity, float(closed_form), float(oracle_value), abs_gap,
            bool(abs_gap <= tolerance), float(tolerance), details,
        )

    def to_dict(self) -> dict:
        out = {
            "quantity": self.quantity,
            "closed_form": self.closed_form,
            "oracle_value": self.oracle_value,
            "abs_gap": self.abs_gap,
            "passed": self.passed,
            "tolerance": self.tolerance,
        }
        if self.details:
            out["details"] = self.details
        return out


def golden_section_min(
    f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-10
) -> tuple[float, float]:
    """Minimize a unimodal ``f`` on ``[lo, hi]`` down to an interval of width ``tol``."""
    if not lo < hi:
        raise ValueError(f"golden section needs lo < hi, got [{lo}, {hi}]")
    a, b = float(lo), float(hi)
    x1 = b - INVPHI * (b - a)
    x2 = a + INVPHI * (b - a)
    f1, f2 = f(x1), f(x2)
    while b - a > tol:
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - INVPHI * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + INVPHI * (b - a)
            f2 = f(x2)
    x = 0.5 * (a + b)
    return x, f(x)


def _loguniform(rng: np.random.Generator, lo: float, hi: float) -> float:
    return float(math.exp(rng.uniform(math.log(lo), math.log(hi))))


def random_spec(rng: np.random.Generator, mode: NormMode, max_count: int = 10_000, max_d: int = 500) -> ProblemSpec:
    """Spec with log-uniform sample sizes and ``eps**2/delta_sq`` in ``[1e-4, 1e4]``."""
    n = int(round(_loguniform(rng, 1, max_count)))
    N = int(round(_loguniform(rng, 1, max_count)))
    d = int(rng.integers(1, max_d + 1))
    ratio = _loguniform(rng, 1e-4, 1e4)
    delta_sq = _loguniform(rng, 1e-2, 1e2)
    return ProblemSpec(n, N, d, math.sqrt(ratio * delta_sq), delta_sq, mode)


def check_scalar_optimum(spec: ProblemSpec) -> tuple[OracleReport, OracleReport]:
    """Golden-section minimization of the scalar objective against the closed-form weight and risk.

    Returns one report for the weight (absolute tolerance) and one for the
    risk (tolerance relative to the closed-form risk).
    """
    s_oracle, g_oracle = golden_section_min(lambda s: scalar_objective(spec, s), 0.0, 1.0, tol=1e-10)
    s_star = optimal_weight(spec)
    risk = minmax_risk(spec).risk_star
    info = spec.to_dict()
    weight_report = OracleReport.from_gap(
        "optimal_weight", s_star, s_oracle, abs(s_star - s_oracle), WEIGHT_TOL, spec=info
    )
    risk_report = OracleReport.from_gap(
        "minmax_risk", risk, g_oracle, abs(risk - g_oracle), RISK_RTOL * abs(risk), spec=info
    )
    return weight_report, risk_report


def _perturbation(rng: np.random.Generator, d: int, family: int) -> np.ndarray:
    if family == 0:
        return rng.standard_normal((d, d))
    if family == 1:
        E = rng.standard_normal((d, d))
        return 0.5 * (E + E.T)
    if family == 2:
        return np.diag(rng.standard_normal(d))
    # one singular value moved alone, as in the case analysis over s_1 >= ... >= s_d
    E = np.zeros((d, d))
    k = int(rng.integers(d))
    E[k, k] = rng.standard_normal()
    return E


def check_matrix_optimum(
    spec: ProblemSpec, trials: int = 1000, perturb_scale: float = 0.1, seed: int = 0
) -> OracleReport:
    """Evaluate the matrix objective around ``s* I``; no perturbation may beat the closed-form risk.

    Perturbations cycle through dense, symmetric, diagonal and single-entry
    diagonal families, each with a log-uniform magnitude in
    ``[1e-3, 1] * perturb_scale``.
    """
    s_star = optimal_weight(spec)
    risk = minmax_risk(spec).risk_star
    center_A = s_star * np.eye(spec.d)
    center = matrix_objective(spec, center_A)
    best = center
    worst_trial = -1
    for i in range(trials):
        rng = np.random.default_rng([seed, i])
        magnitude = perturb_scale * 10.0 ** rng.uniform(-3.0, 0.0)
        value = matrix_objective(spec, center_A + magnitude * _perturbation(rng, spec.d, i % 4))
        if value < best:
            best, worst_trial = value, i
    return OracleReport.from_gap(
        "matrix_optimum", risk, best, max(0.0, risk - best), MATRIX_TOL,
        spec=spec.to_dict(), trials=trials, seed=seed, center_value=center, best_trial=worst_trial,
    )


def check_unbounded_without_sum_constraint(
    A, B, scale_sequence: Iterable[float], cov=None, n: int = 1, N: int = 1
) -> list[float]:
    """MSE of ``(A, B)`` with both means at ``t v`` for each ``t``; ``v`` is the top singular direction of ``A + B - I``.

    Both distributions share mean and covariance, so they are feasible for
    any shift budget, yet the bias grows like ``t**2 sigma_max(A + B - I)**2``.
    """
    est = MatrixEstimator(A, B)
    d = est.A.shape[0]
    deviation = est.A + est.B - np.eye(d)
    if np.linalg.norm(deviation, 2) <= 1e-6:
        raise ValueError("constraint satisfied; nothing to demonstrate (A + B = I)")
    v = np.linalg.svd(deviation)[2][0]
    cov = np.eye(d) if cov is None else np.asarray(cov, dtype=float)
    risks = []
    for t in scale_sequence:
        m = GaussianMoments(t * v, cov)
        risks.append(risk_from_moments(est, m, m, n, N))
    return risks


def _feasible_challenger(
    rng: np.random.Generator, spec: ProblemSpec, cov_x: np.ndarray, base_mean: np.ndarray
) -> GaussianMoments:
    """Random auxiliary moments on the W2 sphere of radius ``eps`` around the target.

    The auxiliary covariance is either a rescaling ``alpha**2 S_x`` or an
    isotropic ``tau I``; whatever budget the covariance leaves goes into a
    mean shift along a random direction.
    """
    eps_sq = spec.eps**2
    d = spec.d
    root_lam = np.sqrt(np.clip(np.linalg.eigvalsh(cov_x), 0.0, None))
    # isotropic tau*I costs sum (sqrt(lam) - x)^2 with x = sqrt(tau): feasible x solve a quadratic
    total = float(root_lam.sum())
    disc = total**2 - d * (float(np.sum(root_lam**2)) - eps_sq)
    if rng.random() < 0.5 or disc < 0.0:
        # rescaling costs Tr(S_x) (alpha - 1)^2
        half_width = math.sqrt(eps_sq / float(np.trace(cov_x)))
        alpha = rng.uniform(max(0.0, 1.0 - half_width), 1.0 + half_width)
        cov_z = alpha**2 * cov_x
    else:
        lo = max(0.0, (total - math.sqrt(disc)) / d)
        hi = (total + math.sqrt(disc)) / d
        cov_z = rng.uniform(lo, hi) ** 2 * np.eye(d)
    p = GaussianMoments(base_mean, cov_x)
    spent = gelbrich_w2_squared(p, GaussianMoments(base_mean, cov_z))
    if spent > eps_sq:
        cov_z = cov_x
        spent = 0.0
    u = rng.standard_normal(d)
    u /= np.linalg.norm(u)
    return GaussianMoments(base_mean + math.sqrt(eps_sq - spent) * u, cov_z)


def check_adversary_optimality(
    spec: ProblemSpec, s: float | None = None, trials: int = 500, seed: int = 0
) -> OracleReport:
    """Random feasible auxiliary distributions must not beat the large-N adversary.

    The allowed excess is ``1e-6 + 5 Tr(S_x)/(N-1)**2``, covering the finite-N
    gain from inflating the auxiliary covariance.  Trial 0 is the adversary itself.
    """
    s = optimal_weight(spec) if s is None else float(s)
    est = ScalarEstimator(s)
    pair = worst_case_large_n(spec, s)
    reference = risk_from_moments(est, pair.p, pair.q, spec.n, spec.N)
    trace_x = float(np.trace(pair.p.cov))
    slack = ADVERSARY_TOL + (5.0 * trace_x / (spec.N - 1) ** 2 if spec.N > 1 else math.inf)
    best = reference
    for i in range(1, trials):
        rng = np.random.default_rng([seed, i])
        q = _feasible_challenger(rng, spec, pair.p.cov, pair.p.mean)
        best = max(best, risk_from_moments(est, pair.p, q, spec.n, spec.N))
    return OracleReport.from_gap(
        "adversary_optimality", reference, best, max(0.0, best - reference), slack,
        spec=spec.to_dict(), s=s, trials=trials, seed=seed, slack=slack,
    )


def random_moments(rng: np.random.Generator, d: int, rank: int | None = None) -> GaussianMoments:
    rank = d if rank is None else rank
    R = rng.standard_normal((d, rank))
    return GaussianMoments(rng.standard_normal(d), R @ R.T / max(rank, 1))


def check_gelbrich_metric(trials: int = 100, seed: int = 0, max_d: int = 10) -> list[OracleReport]:
    """Metric axioms and closed-form special cases of the Gaussian W2 distance."""
    sym_gap = ident_gap = tri_excess = diag_gap = shift_gap = 0.0
    for i in range(trials):
        rng = np.random.default_rng([seed, i])
        d = int(rng.integers(1, max_d + 1))
        p, q, r = (random_moments(rng, d) for _ in range(3))
        sym_gap = max(sym_gap, abs(gelbrich_w2_squared(p, q) - gelbrich_w2_squared(q, p)))
        ident_gap = max(ident_gap, gelbrich_w2_squared(p, p))
        tri_excess = max(tri_excess, gelbrich_w2(p, r) - gelbrich_w2(p, q) - gelbrich_w2(q, r))

        a, b = rng.uniform(0.0, 3.0, d), rng.uniform(0.0, 3.0, d)
        mu = rng.standard_normal(d)
        by_hand = float(np.sum((np.sqrt(a) - np.sqrt(b)) ** 2))
        value = gelbrich_w2_squared(GaussianMoments(mu, np.diag(a)), GaussianMoments(mu, np.diag(b)))
        diag_gap = max(diag_gap, abs(value - by_hand))

        v = rng.standard_normal(d)
        base = gelbrich_w2_squared(GaussianMoments(p.mean, p.cov), GaussianMoments(p.mean, q.cov))
        shifted = gelbrich_w2_squared(GaussianMoments(p.mean, p.cov), GaussianMoments(p.mean + v, q.cov))
        shift_gap = max(shift_gap, abs(shifted - base - float(v @ v)))
    common = {"trials": trials, "seed": seed, "max_d": max_d}
    return [
        OracleReport.from_gap("w2_symmetry", 0.0, sym_gap, sym_gap, 1e-9, **common),
        OracleReport.from_gap("w2_identity", 0.0, ident_gap, ident_gap, 1e-9, **common),
        OracleReport.from_gap("w2_triangle", 0.0, tri_excess, max(0.0, tri_excess), 1e-7, **common),
        OracleReport.from_gap("w2_commuting_diagonal", 0.0, diag_gap, diag_gap, 1e-9, **common),
        OracleReport.from_gap("w2_mean_shift_additive", 0.0, shift_gap, shift_gap, 1e-9, **common),
    ]


def check_adversary_budget(spec: ProblemSpec, pair) -> OracleReport:
    """W2 budget of a constructed pair must be exactly ``eps**2`` (relative 1e-8)."""
    eps_sq = spec.eps**2
    spent = gelbrich_w2_squared(pair.p, pair.q)
    return OracleReport.from_gap(
        "adversary_budget", eps_sq, spent, abs(spent - eps_sq), 1e-8 * eps_sq, spec=spec.to_dict()
    )


SUITES = ("scalar", "matrix", "unbounded", "adversary", "gelbrich")


def _scalar_suite(seed: int, specs_per_mode: int = 200) -> list[OracleReport]:
    reports = []
    for m, mode in enumerate(NormMode):
        for i in range(specs_per_mode):
            spec = random_spec(np.random.default_rng([seed, m, i]), mode)
            reports.extend(check_scalar_optimum(spec))
    return reports


def _matrix_suite(seed: int) -> list[OracleReport]:
    reports = []
    for mode in NormMode:
        for d in (2, 3, 5):
            spec = ProblemSpec(20, 1000, d, 1.0, 1.0, mode)
            reports.append(check_matrix_optimum(spec, trials=1000, perturb_scale=0.1, seed=seed))
    return reports


def _unbounded_suite(seed: int, cases: int = 20, threshold: float = 1e6) -> list[OracleReport]:
    reports = []
    for i in range(cases):
        rng = np.random.default_rng([seed, i])
        d = int(rng.integers(1, 6))
        A = rng.standard_normal((d, d))
        D = rng.standard_normal((d, d))
        D *= rng.uniform(0.1, 1.0) / np.linalg.norm(D, 2)
        B = np.eye(d) - A + D
        risk = check_unbounded_without_sum_constraint(A, B, [1e4])[-1]
        reports.append(OracleReport.from_gap(
            "unbounded_without_sum_constraint", threshold, risk, max(0.0, threshold - risk), 0.0,
            d=d, deviation_norm=float(np.linalg.norm(D, 2)), t=1e4,
        ))
    return reports


def _adversary_suite(seed: int) -> list[OracleReport]:
    from .adversary import worst_case_kkt

    reports = []
    for mode in NormMode:
        for d in (1, 3, 5):
            spec = ProblemSpec(20, 10_000, d, 1.0, 1.0, mode)
            s = optimal_weight(spec)
            reports.append(check_adversary_budget(spec, worst_case_large_n(spec, s)))
            reports.append(check_adversary_budget(spec, worst_case_kkt(spec, s)))
            reports.append(check_adversary_optimality(spec, s, trials=500, seed=seed))
    return reports


def run_suite(suite: str = "all", seed: int = 0) -> list[OracleReport]:
    """Run one named oracle suite (or ``"all"``) deterministically from ``seed``."""
    runners = {
        "scalar": _scalar_suite,
        "matrix": _matrix_suite,
        "unbounded": _unbounded_suite,
        "adversary": _adversary_suite,
        "gelbrich": lambda seed: check_gelbrich_metric(100, seed),
    }
    names: Sequence[str] = SUITES if suite == "all" else (suite,)
    reports = []
    for name in names:
        if name not in runners:
            raise ValueError(f"unknown suite {name!r}; expected 'all' or one of {', '.join(SUITES)}")
        reports.extend(runners[name](seed))
    return reports
