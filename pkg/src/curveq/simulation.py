"""Monte Carlo studies of coverage, size and power.

Each replication draws from its own Philox stream keyed by
``SeedSequence(seed, spawn_key=(index,))``, so the outcome of replication
``i`` does not depend on how replications are split across workers.
Normal errors are produced by inverting uniforms.

Replications whose fit fails (non-convergence, singular information
matrix, unattainable MED) are left out of the proportion's denominator and
reported by reason in the summary.
"""

from __future__ import annotations

import math
import os
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from curveq._stats import standard_normals
from curveq.errors import DomainError, NotAttainableError, RankDeficiencyError, UnsupportedModelError
from curveq.fitting import GroupDataset, fit
from curveq.scenarios import ScenarioSpec
from curveq.similarity import band
from curveq.target_dose import critical_constant, estimate_med, med_ci, tau_hat

__all__ = [
    "KINDS",
    "SimSummary",
    "Replications",
    "generate_data",
    "replication_rng",
    "run_replications",
    "run_coverage_study",
    "run_size_power_study",
    "default_workers",
]

KINDS = ("curve_max_diff", "med_diff")
DEFAULT_REPS = 2000
FULL_SCALE_REPS = 10_000


def default_workers() -> int:
    """Worker count: ``CURVEQ_THREADS`` if set, otherwise the CPU count."""
    cpus = os.cpu_count() or 1
    env = os.environ.get("CURVEQ_THREADS")
    if env:
        try:
            cap = int(env)
        except ValueError:
            raise DomainError(f"CURVEQ_THREADS must be an integer, got {env!r}") from None
        return max(1, min(cap, cpus))
    return cpus


def replication_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(index,))))


def generate_data(s: ScenarioSpec, rng: np.random.Generator) -> tuple[GroupDataset, GroupDataset]:
    """Draw one dataset per group: true mean plus N(0, sigma2) errors.

    Group 1 is drawn before group 2, dose levels in order.
    """
    sd = math.sqrt(s.sigma2)
    out = []
    for label, model, theta, doses, reps in (
        ("group1", s.model1, s.theta1, s.doses1, s.reps1),
        ("group2", s.model2, s.theta2, s.doses2, s.reps2),
    ):
        responses = []
        for d, r in zip(doses, reps):
            mean = model.evaluate(theta, d)
            responses.append(mean + sd * standard_normals(rng, r))
        out.append(GroupDataset(np.asarray(doses, dtype=float), tuple(responses), label))
    return out[0], out[1]


@dataclass(frozen=True)
class SimSummary:
    """Outcome of one Monte Carlo study.

    ``estimate`` is the coverage or rejection proportion over the
    ``valid`` replications; ``failed`` of the requested ``replications``
    were excluded, broken down in ``failures``.
    """

    kind: str
    measure: str
    estimate: float
    mc_se: float
    replications: int
    valid: int
    failed: int
    failures: dict
    seed: int
    alpha: float
    margin: float | None = None
    truth: float | None = None
    config: dict = field(default_factory=dict)

    @property
    def coverage(self) -> float:
        if self.measure != "coverage":
            raise AttributeError("summary holds a rejection rate")
        return self.estimate

    @property
    def rejection_rate(self) -> float:
        if self.measure != "rejection_rate":
            raise AttributeError("summary holds a coverage probability")
        return self.estimate

    def as_dict(self) -> dict:
        return {
            "kind": self.kind,
            "measure": self.measure,
            "estimate": self.estimate,
            "mc_se": self.mc_se,
            "replications": self.replications,
            "valid": self.valid,
            "failed": self.failed,
            "failures": dict(sorted(self.failures.items())),
            "seed": self.seed,
            "alpha": self.alpha,
            "margin": self.margin,
            "truth": self.truth,
            "config": self.config,
        }


def _analyse(s, kind, alphas, quantile, placebo_adjusted, index, seed):
    """Run one replication; returns (index, failure reason or None, stats)."""
    rng = replication_rng(seed, index)
    ds1, ds2 = generate_data(s, rng)
    try:
        f1 = fit(ds1, s.model1)
        f2 = fit(ds2, s.model2)
        if not (f1.converged and f2.converged):
            return index, "nonconvergence", None
        if kind == "curve_max_diff":
            stats = []
            for a in alphas:
                b = band(f1, f2, s.dose_range, a, placebo_adjusted, quantile=quantile)
                stats.append((b.max_upper.value, b.min_lower.value))
            return index, None, stats
        m1 = estimate_med(f1, s.delta_clinical)
        m2 = estimate_med(f2, s.delta_clinical)
        if not (m1.attainable and m2.attainable):
            return index, "med_unattainable", None
        return index, None, (m1.med - m2.med, tau_hat(f1, f2, s.delta_clinical))
    except RankDeficiencyError:
        return index, "rank_deficient", None
    except UnsupportedModelError:
        return index, "non_monotone", None
    except NotAttainableError:
        return index, "med_unattainable", None


def _analyse_chunk(args):
    s, kind, alphas, quantile, placebo_adjusted, seed, indices = args
    return [_analyse(s, kind, alphas, quantile, placebo_adjusted, i, seed) for i in indices]


@dataclass(frozen=True, eq=False)
class Replications:
    """Per-replication statistics from which coverage and rejection rates
    at any margin are computed without refitting.

    For ``curve_max_diff`` ``values`` has shape ``(valid, len(alphas), 2)``
    holding ``(max U, min L)``; for ``med_diff`` it has shape ``(valid, 2)``
    holding ``(med1 - med2, tau_hat)``.
    """

    scenario: ScenarioSpec
    kind: str
    seed: int
    replications: int
    alphas: tuple
    values: np.ndarray
    failures: dict
    quantile: str = "normal"
    placebo_adjusted: bool = False

    @property
    def valid(self) -> int:
        return int(self.values.shape[0])

    @property
    def failed(self) -> int:
        return self.replications - self.valid

    def truth(self) -> float:
        if self.kind == "curve_max_diff":
            return self.scenario.true_max_diff
        t = self.scenario.true_med_diff
        if t is None:
            raise DomainError("scenario has no clinical effect, so no true MED difference")
        return t

    def _alpha_index(self, alpha: float) -> int:
        for i, a in enumerate(self.alphas):
            if math.isclose(a, alpha):
                return i
        raise DomainError(f"alpha={alpha} was not simulated; available {self.alphas}")

    def _summary(self, measure, hits, alpha, margin, truth) -> SimSummary:
        v = self.valid
        p = float(np.mean(hits)) if v else math.nan
        se = math.sqrt(p * (1.0 - p) / v) if v else math.nan
        return SimSummary(
            kind=self.kind,
            measure=measure,
            estimate=p,
            mc_se=se,
            replications=self.replications,
            valid=v,
            failed=self.failed,
            failures=dict(self.failures),
            seed=self.seed,
            alpha=alpha,
            margin=margin,
            truth=truth,
            config={
                **self.scenario.describe(),
                "quantile": self.quantile,
                "placebo_adjusted": self.placebo_adjusted,
            },
        )

    def coverage(self, alpha: float) -> SimSummary:
        truth = self.truth()
        if self.kind == "curve_max_diff":
            j = self._alpha_index(alpha)
            ci = np.maximum(self.values[:, j, 0], -self.values[:, j, 1])
            hits = truth <= ci
        else:
            diff, tau = self.values[:, 0], self.values[:, 1]
            lo, hi = med_ci(diff, tau, alpha)
            hits = (lo <= truth) & (truth <= hi)
        return self._summary("coverage", hits, alpha, None, truth)

    def rejection_rate(self, alpha: float, margin: float) -> SimSummary:
        truth = self.truth()
        if self.kind == "curve_max_diff":
            if not margin > 0:
                raise DomainError("curve margin delta must be positive")
            j = self._alpha_index(alpha)
            hits = (-margin < self.values[:, j, 1]) & (self.values[:, j, 0] < margin)
        else:
            if margin < 0:
                raise DomainError("MED margin eta must be nonnegative")
            diff, tau = self.values[:, 0], self.values[:, 1]
            c = np.array([critical_constant(margin, t, alpha) for t in tau])
            hits = np.abs(diff) < c
        return self._summary("rejection_rate", hits, alpha, margin, truth)


def run_replications(
    s: ScenarioSpec,
    reps: int = DEFAULT_REPS,
    kind: str = "curve_max_diff",
    *,
    alphas=(0.05, 0.1),
    seed: int = 0,
    quantile: str = "normal",
    placebo_adjusted: bool = False,
    workers: int | None = None,
) -> Replications:
    """Simulate ``reps`` datasets from ``s`` and analyse each one."""
    if kind not in KINDS:
        raise DomainError(f"kind must be one of {KINDS}, got {kind!r}")
    if reps < 1:
        raise DomainError("reps must be positive")
    if kind == "med_diff" and s.delta_clinical is None:
        raise DomainError(f"{s.name} has no clinical effect; MED studies need delta_clinical")
    if not s.sigma2 > 0:
        raise DomainError("simulation needs sigma2 > 0")
    alphas = tuple(float(a) for a in np.atleast_1d(alphas))
    workers = default_workers() if workers is None else max(1, int(workers))
    indices = np.arange(reps)
    if workers == 1:
        results = _analyse_chunk((s, kind, alphas, quantile, placebo_adjusted, seed, indices))
    else:
        chunks = [c for c in np.array_split(indices, workers * 4) if c.size]
        tasks = [(s, kind, alphas, quantile, placebo_adjusted, seed, c) for c in chunks]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = [r for part in pool.map(_analyse_chunk, tasks) for r in part]
    results.sort(key=lambda r: r[0])
    failures = Counter(reason for _, reason, _ in results if reason is not None)
    good = [stats for _, reason, stats in results if reason is None]
    if kind == "curve_max_diff":
        values = np.array(good, dtype=float).reshape(len(good), len(alphas), 2)
    else:
        values = np.array(good, dtype=float).reshape(len(good), 2)
    return Replications(
        scenario=s,
        kind=kind,
        seed=seed,
        replications=reps,
        alphas=alphas,
        values=values,
        failures=dict(sorted(failures.items())),
        quantile=quantile,
        placebo_adjusted=placebo_adjusted,
    )


def run_coverage_study(
    s: ScenarioSpec, reps: int = DEFAULT_REPS, alpha: float = 0.05, kind: str = "curve_max_diff", **kw
) -> SimSummary:
    """Fraction of replications whose confidence interval covers the truth."""
    return run_replications(s, reps, kind, alphas=(alpha,), **kw).coverage(alpha)


def run_size_power_study(
    s: ScenarioSpec,
    reps: int = DEFAULT_REPS,
    alpha: float = 0.05,
    margin: float = 1.0,
    kind: str = "curve_max_diff",
    **kw,
) -> SimSummary:
    """Fraction of replications in which the equivalence test rejects."""
    return run_replications(s, reps, kind, alphas=(alpha,), **kw).rejection_rate(alpha, margin)

