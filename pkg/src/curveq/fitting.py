"""Nonlinear least-squares fitting of one group's dose-response data.

Replicated responses are collapsed to dose-level means weighted by their
counts; the within-dose sum of squares is added back so ``rss`` is the full
residual sum of squares over every observation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from curveq.errors import DomainError, RankDeficiencyError
from curveq.models import _IMPL, Family, ModelSpec

__all__ = ["GroupDataset", "FitResult", "fit", "covariance_of_estimate"]

MAX_ITER = 200
RSS_RTOL = 1e-10
GRAD_TOL = 1e-8
# Condition number beyond which the information matrix counts as singular.
COND_LIMIT = 1e13


@dataclass(frozen=True, eq=False)
class GroupDataset:
    """Responses of one subgroup, grouped by dose level.

    ``responses[i]`` holds the replicated observations at ``dose_levels[i]``.
    Dose levels are sorted on construction.
    """

    dose_levels: np.ndarray
    responses: tuple
    label: str = ""

    def __post_init__(self):
        doses = np.asarray(self.dose_levels, dtype=float).ravel()
        reps = tuple(np.asarray(r, dtype=float).ravel() for r in self.responses)
        if len(doses) != len(reps):
            raise DomainError(f"{len(doses)} dose levels but {len(reps)} response groups")
        if len(np.unique(doses)) != len(doses):
            raise DomainError("dose levels must be distinct")
        if any(r.size == 0 for r in reps):
            raise DomainError("every dose level needs at least one response")
        if not (np.all(np.isfinite(doses)) and all(np.all(np.isfinite(r)) for r in reps)):
            raise DomainError("doses and responses must be finite")
        order = np.argsort(doses, kind="stable")
        object.__setattr__(self, "dose_levels", doses[order])
        object.__setattr__(self, "responses", tuple(reps[i] for i in order))

    @classmethod
    def from_long(cls, doses, responses, label: str = "") -> "GroupDataset":
        """Build from parallel arrays with one entry per observation."""
        d = np.asarray(doses, dtype=float).ravel()
        y = np.asarray(responses, dtype=float).ravel()
        if d.shape != y.shape:
            raise DomainError("doses and responses must have equal length")
        levels = np.unique(d)
        return cls(levels, tuple(y[d == lv] for lv in levels), label)

    @property
    def n_per_dose(self) -> np.ndarray:
        return np.array([r.size for r in self.responses])

    @property
    def n_total(self) -> int:
        return int(sum(r.size for r in self.responses))

    @property
    def k(self) -> int:
        return len(self.dose_levels)

    def means(self) -> np.ndarray:
        return np.array([r.mean() for r in self.responses])

    def within_ss(self) -> float:
        return float(sum(np.sum((r - r.mean()) ** 2) for r in self.responses))

    def long(self) -> tuple[np.ndarray, np.ndarray]:
        """Observation-level ``(doses, responses)`` in dose order."""
        d = np.repeat(self.dose_levels, self.n_per_dose)
        y = np.concatenate(self.responses)
        return d, y

    def shifted(self, c: float) -> "GroupDataset":
        return GroupDataset(self.dose_levels, tuple(r + c for r in self.responses), self.label)


@dataclass(frozen=True, eq=False)
class FitResult:
    """Least-squares fit of one group.

    ``info_matrix`` is the normalised information
    ``sum_i (n_i / n) g_i g_i^T`` with ``g_i`` the parameter gradient at the
    estimate and dose level ``i``.
    """

    model: ModelSpec
    theta_hat: np.ndarray
    sigma2_hat: float
    info_matrix: np.ndarray
    n_total: int
    converged: bool = True
    rss: float = 0.0
    iterations: int = 0
    grad_norm: float = 0.0
    message: str = ""
    dose_levels: np.ndarray = field(default_factory=lambda: np.empty(0))
    n_per_dose: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=int))
    label: str = ""

    def __post_init__(self):
        if not isinstance(self.model, ModelSpec):
            object.__setattr__(self, "model", ModelSpec(self.model))
        object.__setattr__(self, "theta_hat", np.asarray(self.theta_hat, dtype=float))
        object.__setattr__(self, "info_matrix", np.asarray(self.info_matrix, dtype=float))

    @property
    def dof(self) -> int:
        return self.n_total - self.model.param_count

    def predict(self, d):
        return self.model.evaluate(self.theta_hat, d)

    def covariance(self) -> np.ndarray:
        return covariance_of_estimate(self)


def _check_info(info: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(info)):
        raise RankDeficiencyError(f"{what}: information matrix is not finite")
    cond = np.linalg.cond(info)
    if not math.isfinite(cond) or cond > COND_LIMIT:
        raise RankDeficiencyError(f"{what}: information matrix is singular (condition number {cond:.3g})")


def covariance_of_estimate(fit: FitResult) -> np.ndarray:
    """Asymptotic covariance ``(sigma2_hat / n) * info_matrix^{-1}``."""
    _check_info(fit.info_matrix, _describe(fit))
    cov = fit.sigma2_hat / fit.n_total * np.linalg.inv(fit.info_matrix)
    return 0.5 * (cov + cov.T)


def _describe(fit: FitResult) -> str:
    doses = ", ".join(f"{d:g}" for d in fit.dose_levels)
    name = f"group {fit.label!r} " if fit.label else ""
    return f"{name}{fit.model} fit on doses [{doses}]"


# ---------------------------------------------------------------------------
# Starting values
# ---------------------------------------------------------------------------

def _profile(basis: np.ndarray, ybar: np.ndarray, w: np.ndarray):
    """Weighted least squares of ``ybar`` on ``[1, basis]``; returns (coef, wrss)."""
    X = np.column_stack([np.ones_like(basis), basis])
    sw = np.sqrt(w)
    coef, *_ = np.linalg.lstsq(X * sw[:, None], ybar * sw, rcond=None)
    r = ybar - X @ coef
    return coef, float(np.sum(w * r * r))


def _grid_starts(fam: Family, d: np.ndarray, ybar: np.ndarray, w: np.ndarray) -> list[np.ndarray]:
    span = float(d.max() - d.min()) or 1.0
    cands = []
    if fam is Family.EMAX:
        for ed50 in (0.1 * span, 0.5 * span, span, 2.0 * span):
            coef, s = _profile(d / (ed50 + d), ybar, w)
            cands.append((s, np.array([coef[0], coef[1], ed50])))
    elif fam is Family.LOGISTIC:
        lo = float(d.min())
        for q in (0.25, 0.5, 0.75):
            for sc in (0.05, 0.1, 0.25):
                ed50, scale = lo + q * span, sc * span
                coef, s = _profile(1.0 / (1.0 + np.exp((ed50 - d) / scale)), ybar, w)
                cands.append((s, np.array([coef[0], coef[1], ed50, scale])))
    elif fam is Family.EXPONENTIAL:
        for rs in (0.25, 0.5, 1.0, 2.0, -0.5, -1.0, -2.0):
            coef, s = _profile(np.expm1(d / (rs * span)), ybar, w)
            cands.append((s, np.array([coef[0], coef[1], rs * span])))
    else:  # pragma: no cover - linear families never reach here
        raise AssertionError(fam)
    cands.sort(key=lambda c: (c[0], tuple(c[1])))
    return [c[1] for c in cands]


def _feasible(fam: Family, t: np.ndarray, d: np.ndarray) -> bool:
    if not np.all(np.isfinite(t)):
        return False
    if fam is Family.EMAX:
        return t[2] > 0.0
    if fam is Family.LOGISTIC:
        return t[3] > 0.0
    if fam is Family.EXPONENTIAL:
        return t[2] != 0.0 and float(np.max(np.abs(d))) / abs(t[2]) < 500.0
    return True


# ---------------------------------------------------------------------------
# Levenberg-Marquardt on the weighted dose-level means
# ---------------------------------------------------------------------------

def _levenberg_marquardt(fam, t0, d, ybar, w, within, max_iter):
    impl = _IMPL[fam]
    sw = np.sqrt(w)
    t = np.array(t0, dtype=float)
    r = sw * (ybar - impl(t, d, "value"))
    S = float(r @ r)
    lam, nu = 1e-3, 2.0
    gnorm = math.inf
    converged, message = False, "maximum iterations reached"
    it = 0
    for it in range(1, max_iter + 1):
        J = sw[:, None] * impl(t, d, "grad")
        g = J.T @ r
        gnorm = 2.0 * float(np.linalg.norm(g))
        if gnorm < GRAD_TOL:
            converged, message = True, "gradient norm below tolerance"
            it -= 1
            break
        A = J.T @ J
        diag = np.maximum(np.diag(A), 1e-12 * max(1.0, float(np.max(np.diag(A)))))
        accepted = False
        while lam < 1e20:
            try:
                h = np.linalg.solve(A + lam * np.diag(diag), g)
            except np.linalg.LinAlgError:
                lam *= nu
                nu *= 2.0
                continue
            t_new = t + h
            if _feasible(fam, t_new, d):
                with np.errstate(all="ignore"):
                    r_new = sw * (ybar - impl(t_new, d, "value"))
                S_new = float(r_new @ r_new)
            else:
                S_new = math.inf
            if math.isfinite(S_new) and S_new < S:
                lin = r - J @ h
                pred = S - float(lin @ lin)
                rho = (S - S_new) / pred if pred > 0 else 0.0
                step_lam = lam
                lam *= max(1.0 / 3.0, 1.0 - (2.0 * rho - 1.0) ** 3)
                nu = 2.0
                accepted = True
                break
            lam *= nu
            nu *= 2.0
        if not accepted:
            message = "damping diverged without reducing the residual"
            break
        change = S - S_new
        t, r, S = t_new, r_new, S_new
        if change <= RSS_RTOL * (S + within) and step_lam <= 1e-2:
            converged, message = True, "relative RSS change below tolerance"
            break
    J = sw[:, None] * impl(t, d, "grad")
    gnorm = 2.0 * float(np.linalg.norm(J.T @ r))
    return t, S, it, converged, gnorm, message


def fit(
    data: GroupDataset,
    spec,
    start=None,
    *,
    variance_divisor: str = "n-p",
    max_iter: int = MAX_ITER,
) -> FitResult:
    """Least-squares fit of ``spec`` to ``data``.

    Linear and quadratic models are solved in closed form.  The others run
    Levenberg-Marquardt with analytic Jacobians from the best point of a
    small profiled grid (or from ``start``); if that run does not converge
    the remaining grid points are tried in order of their profiled RSS.
    A fit that never converges is returned with ``converged=False``.

    Parameters
    ----------
    variance_divisor : {"n-p", "n"}
        Denominator of the residual variance estimate.
    """
    model = spec if isinstance(spec, ModelSpec) else ModelSpec(spec)
    p = model.param_count
    if variance_divisor not in ("n-p", "n"):
        raise ValueError("variance_divisor must be 'n-p' or 'n'")
    d = data.dose_levels
    where = f"group {data.label!r}" if data.label else "dataset"
    if data.k < p:
        raise RankDeficiencyError(
            f"{where}: {data.k} dose levels cannot identify the {p} parameters of a {model} model"
        )
    n = data.n_total
    divisor = n - p if variance_divisor == "n-p" else n
    if divisor <= 0:
        raise RankDeficiencyError(f"{where}: {n} observations leave no residual degrees of freedom for {p} parameters")
    w = data.n_per_dose.astype(float)
    ybar = data.means()
    within = data.within_ss()
    fam = model.family

    if model.linear_in_parameters:
        X = _IMPL[fam](np.zeros(p), d, "grad")
        sw = np.sqrt(w)
        theta, *_ = np.linalg.lstsq(X * sw[:, None], ybar * sw, rcond=None)
        r = sw * (ybar - X @ theta)
        S = float(r @ r)
        gnorm = 2.0 * float(np.linalg.norm((X * sw[:, None]).T @ r))
        best = (theta, S, 0, True, gnorm, "closed-form least squares")
    else:
        if start is not None:
            t0 = np.asarray(start, dtype=float)
            if t0.shape != (p,) or not _feasible(fam, t0, d):
                raise DomainError(f"start {list(np.ravel(t0))} is not a valid {model} parameter vector")
            starts = [t0]
        else:
            starts = _grid_starts(fam, d, ybar, w)
        runs = []
        for t0 in starts:
            run = _levenberg_marquardt(fam, t0, d, ybar, w, within, max_iter)
            runs.append(run)
            if run[3]:
                break
        ok = [r for r in runs if r[3]] or runs
        best = min(ok, key=lambda r: (r[1], tuple(r[0])))

    theta, S, iterations, converged, gnorm, message = best
    rss = S + within
    G = _IMPL[fam](theta, d, "grad")
    info = (G * (w / n)[:, None]).T @ G
    return FitResult(
        model=model,
        theta_hat=theta,
        sigma2_hat=rss / divisor,
        info_matrix=0.5 * (info + info.T),
        n_total=n,
        converged=converged,
        rss=rss,
        iterations=iterations,
        grad_norm=gnorm,
        message=message,
        dose_levels=d.copy(),
        n_per_dose=data.n_per_dose,
        label=data.label,
    )
