"""Seeded Monte Carlo comparison of mean estimators in the Gaussian location model.

Randomness
----------
Each trial draws its target and auxiliary samples from separate streams.
The stream seed is a 64-bit integer derived by
``numpy.random.SeedSequence(base_seed, spawn_key=(trial, role))``; samples are
then drawn with ``numpy.random.default_rng(stream_seed)`` (PCG64 bit
generator, ziggurat standard normals) and mapped through the PSD square root
of the covariance.  Results are bit-reproducible for a given numpy version;
other implementations can only be expected to agree in distribution.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .adversary import worst_case_large_n
from .estimator import ProblemSpec, ScalarEstimator, apply_estimator, optimal_weight, risk_from_moments
from .gaussian import GaussianMoments, psd_sqrt

ESTIMATORS = ("true_mean", "pooled_mean", "optimal")
CSV_HEADER = ("epsilon", "estimator", "empirical_mse", "std_error", "analytic_mse", "trials", "seed")

TRUE_STREAM = 0
AUX_STREAM = 1

REFERENCE_SPEC = ProblemSpec(n=20, N=1000, d=200, eps=1.0, delta_sq=1.0, mode="frobenius")


def derive_seed(base_seed: int, trial: int, role: int) -> int:
    """64-bit stream seed mixed from the base seed, trial index and stream role."""
    words = np.random.SeedSequence(base_seed, spawn_key=(trial, role)).generate_state(2, np.uint32)
    return int(words[0]) | (int(words[1]) << 32)


def sample_gaussian(moments: GaussianMoments, count: int, stream_seed: int, root=None) -> np.ndarray:
    """``count`` draws of ``mean + S^1/2 w`` with ``w`` standard normal, as rows.

    ``root`` may pass a precomputed ``psd_sqrt(moments.cov)``.
    """
    if count < 1:
        raise ValueError(f"count must be at least 1, got {count}")
    root = psd_sqrt(moments.cov) if root is None else root
    w = np.random.default_rng(stream_seed).standard_normal((count, moments.dim))
    return moments.mean + w @ root


@dataclass(frozen=True)
class ExperimentConfig:
    spec: ProblemSpec = REFERENCE_SPEC
    trials: int = 2000
    base_seed: int = 0
    sweep: Optional[tuple] = None
    estimators: tuple = ESTIMATORS

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError(f"trials must be at least 1, got {self.trials}")
        if not 0 <= self.base_seed < 2**64:
            raise ValueError(f"base_seed must be a 64-bit unsigned integer, got {self.base_seed}")
        if self.sweep is not None:
            sweep = tuple(float(e) for e in self.sweep)
            if not sweep or any(not (e > 0 and math.isfinite(e)) for e in sweep):
                raise ValueError(f"sweep values must be positive, got {self.sweep}")
            object.__setattr__(self, "sweep", sweep)
        estimators = tuple(self.estimators)
        unknown = set(estimators) - set(ESTIMATORS)
        if unknown or not estimators:
            raise ValueError(f"estimators must be a nonempty subset of {ESTIMATORS}, got {estimators}")
        object.__setattr__(self, "estimators", estimators)

    def to_dict(self) -> dict:
        return {
            "spec": self.spec.to_dict(),
            "trials": self.trials,
            "base_seed": self.base_seed,
            "sweep": None if self.sweep is None else list(self.sweep),
            "estimators": list(self.estimators),
        }

    @classmethod
    def from_dict(cls, data: dict) -> ExperimentConfig:
        data = dict(data)
        unknown = set(data) - {"spec", "trials", "base_seed", "sweep", "estimators"}
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        spec = REFERENCE_SPEC.replace(**data.pop("spec", {}))
        return cls(spec=spec, **data)

    @classmethod
    def from_json(cls, path) -> ExperimentConfig:
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


@dataclass(frozen=True)
class EstimatorStats:
    empirical_mse: float
    std_error: float
    trials: int
    analytic_mse: Optional[float] = None


@dataclass(frozen=True, eq=False)
class ExperimentResult:
    epsilon: float
    seed: int
    stats: dict
    weights: dict
    squared_errors: dict = field(repr=False, default_factory=dict)

    def rows(self) -> list[tuple]:
        return [
            (self.epsilon, name, st.empirical_mse, st.std_error, st.analytic_mse, st.trials, self.seed)
            for name, st in self.stats.items()
        ]

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "seed": self.seed,
            "weights": dict(self.weights),
            "estimators": {
                name: {
                    "empirical_mse": st.empirical_mse,
                    "std_error": st.std_error,
                    "analytic_mse": st.analytic_mse,
                    "trials": st.trials,
                }
                for name, st in self.stats.items()
            },
        }


def estimator_weights(spec: ProblemSpec, names: Sequence[str] = ESTIMATORS) -> dict:
    table = {
        "true_mean": 1.0,
        "pooled_mean": spec.n / (spec.n + spec.N),
        "optimal": optimal_weight(spec),
    }
    return {name: table[name] for name in names}


def _summarize(errors: np.ndarray) -> tuple[float, float]:
    count = errors.shape[0]
    mean = math.fsum(errors) / count
    if count < 2:
        return mean, 0.0
    var = math.fsum((errors - mean) ** 2) / (count - 1)
    return mean, math.sqrt(var / count)


def run_experiment(config: ExperimentConfig, n_jobs: int = 1) -> ExperimentResult:
    """Squared errors of each estimator over ``config.trials`` seeded trials at ``config.spec.eps``.

    Target and auxiliary moments are the large-N worst case for the spec's
    norm (isotropic covariances for the Frobenius norm); their means differ by
    ``eps`` along the first axis.  Trials are independent, so ``n_jobs``
    threads can share them without changing the output.
    """
    spec = config.spec
    weights = estimator_weights(spec, config.estimators)
    pair = worst_case_large_n(spec, weights.get("optimal", 1.0))
    p, q = pair.p, pair.q
    root_p, root_q = psd_sqrt(p.cov), psd_sqrt(q.cov)

    def one_trial(t: int) -> np.ndarray:
        X = sample_gaussian(p, spec.n, derive_seed(config.base_seed, t, TRUE_STREAM), root_p)
        Z = sample_gaussian(q, spec.N, derive_seed(config.base_seed, t, AUX_STREAM), root_q)
        out = np.empty(len(weights))
        for k, s in enumerate(weights.values()):
            diff = apply_estimator(ScalarEstimator(s), X, Z) - p.mean
            out[k] = diff @ diff
        return out

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            per_trial = list(pool.map(one_trial, range(config.trials)))
    else:
        per_trial = [one_trial(t) for t in range(config.trials)]
    errors = np.array(per_trial).reshape(config.trials, len(weights))

    stats, squared = {}, {}
    for k, (name, s) in enumerate(weights.items()):
        mse, se = _summarize(errors[:, k])
        analytic = risk_from_moments(ScalarEstimator(s), p, q, spec.n, spec.N)
        stats[name] = EstimatorStats(mse, se, config.trials, analytic)
        squared[name] = errors[:, k].copy()
    return ExperimentResult(spec.eps, config.base_seed, stats, weights, squared)


def sweep(config: ExperimentConfig, n_jobs: int = 1) -> list[ExperimentResult]:
    """One result per ``eps`` in ``config.sweep`` (ascending), all driven by the same base seed."""
    if not config.sweep:
        raise ValueError("sweep needs a nonempty list of eps values")
    return [
        run_experiment(replace(config, spec=config.spec.replace(eps=eps), sweep=None), n_jobs)
        for eps in sorted(config.sweep)
    ]


def _fmt(value) -> str:
    return "" if value is None else repr(value)


def results_to_csv(results: Sequence[ExperimentResult]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for result in results:
        for row in result.rows():
            writer.writerow([_fmt(v) if isinstance(v, float) or v is None else v for v in row])
    return buf.getvalue()


def results_from_csv(text: str) -> list[dict]:
    rows = []
    for rec in csv.DictReader(io.StringIO(text)):
        rows.append({
            "epsilon": float(rec["epsilon"]),
            "estimator": rec["estimator"],
            "empirical_mse": float(rec["empirical_mse"]),
            "std_error": float(rec["std_error"]),
            "analytic_mse": float(rec["analytic_mse"]) if rec["analytic_mse"] else None,
            "trials": int(rec["trials"]),
            "seed": int(rec["seed"]),
        })
    return rows
