"""Parametric dose-response families.

Every family is evaluated pointwise on real doses.  Parameter vectors are
plain sequences of floats; the dose grid used for maximisation lives in
:class:`DoseRange`, not in the model.

Families and their parameterisations::

    linear       t1 + t2*d
    quadratic    t1 + t2*d + t3*d**2
    emax         t1 + t2*d/(t3 + d)
    logistic     t1 + t2/(1 + exp((t3 - d)/t4))
    exponential  t1 + t2*(exp(d/t3) - 1)
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import expit

from curveq.errors import DomainError, NotAttainableError, UnsupportedModelError

__all__ = [
    "Family",
    "ModelSpec",
    "DoseRange",
    "evaluate",
    "gradient",
    "dose_derivative",
    "inverse",
    "inverse_gradient",
]


class Family(str, Enum):
    LINEAR = "linear"
    QUADRATIC = "quadratic"
    EMAX = "emax"
    LOGISTIC = "logistic"
    EXPONENTIAL = "exponential"


_PARAM_COUNT = {
    Family.LINEAR: 2,
    Family.QUADRATIC: 3,
    Family.EMAX: 3,
    Family.LOGISTIC: 4,
    Family.EXPONENTIAL: 3,
}

_PARAM_NAMES = {
    Family.LINEAR: ("e0", "slope"),
    Family.QUADRATIC: ("b0", "b1", "b2"),
    Family.EMAX: ("e0", "emax", "ed50"),
    Family.LOGISTIC: ("e0", "emax", "ed50", "scale"),
    Family.EXPONENTIAL: ("e0", "e1", "rate_scale"),
}

# Families whose response is linear in all parameters; fitted by OLS.
LINEAR_IN_PARAMETERS = frozenset({Family.LINEAR, Family.QUADRATIC})


def _theta(theta, p: int) -> np.ndarray:
    t = np.asarray(theta, dtype=float)
    if t.shape != (p,):
        raise DomainError(f"expected {p} parameters, got shape {t.shape}")
    if not np.all(np.isfinite(t)):
        raise DomainError(f"parameters must be finite, got {t.tolist()}")
    return t


def _dose(d) -> np.ndarray:
    x = np.asarray(d, dtype=float)
    if not np.all(np.isfinite(x)):
        raise DomainError("doses must be finite")
    return x


# ---------------------------------------------------------------------------
# Per-family closed forms.  Each takes a validated theta and a dose array and
# returns (value, gradient-with-parameters-last, derivative in dose).
# ---------------------------------------------------------------------------

def _linear(t, d, want):
    if want == "value":
        return t[0] + t[1] * d
    if want == "grad":
        return np.stack([np.ones_like(d), d], axis=-1)
    return np.full_like(d, t[1])


def _quadratic(t, d, want):
    if want == "value":
        return t[0] + t[1] * d + t[2] * d * d
    if want == "grad":
        return np.stack([np.ones_like(d), d, d * d], axis=-1)
    return t[1] + 2.0 * t[2] * d


def _emax(t, d, want):
    denom = t[2] + d
    if np.any(denom == 0.0):
        raise DomainError(f"emax model undefined where ed50 + d = 0 (ed50={t[2]})")
    if want == "value":
        return t[0] + t[1] * d / denom
    if want == "grad":
        return np.stack([np.ones_like(d), d / denom, -t[1] * d / denom**2], axis=-1)
    return t[1] * t[2] / denom**2


def _logistic(t, d, want):
    if t[3] == 0.0:
        raise DomainError("logistic scale parameter must be nonzero")
    z = (t[2] - d) / t[3]
    s = expit(-z)  # 1 / (1 + exp(z))
    if want == "value":
        return t[0] + t[1] * s
    ds = s * (1.0 - s)
    if want == "grad":
        return np.stack(
            [np.ones_like(d), s, -t[1] * ds / t[3], t[1] * ds * z / t[3]], axis=-1
        )
    return t[1] * ds / t[3]


def _exponential(t, d, want):
    if t[2] == 0.0:
        raise DomainError("exponential rate_scale parameter must be nonzero")
    u = d / t[2]
    if want == "value":
        return t[0] + t[1] * np.expm1(u)
    if want == "grad":
        return np.stack([np.ones_like(d), np.expm1(u), -t[1] * np.exp(u) * u / t[2]], axis=-1)
    return t[1] * np.exp(u) / t[2]


_IMPL = {
    Family.LINEAR: _linear,
    Family.QUADRATIC: _quadratic,
    Family.EMAX: _emax,
    Family.LOGISTIC: _logistic,
    Family.EXPONENTIAL: _exponential,
}


@dataclass(frozen=True)
class ModelSpec:
    """A parametric dose-response family.

    Instances are immutable and cheap; ``ModelSpec("emax")`` and
    ``ModelSpec(Family.EMAX)`` are equivalent.
    """

    family: Family

    def __post_init__(self):
        try:
            fam = Family(self.family)
        except ValueError:
            names = ", ".join(f.value for f in Family)
            raise UnsupportedModelError(f"unknown model family {self.family!r}; choose from {names}") from None
        object.__setattr__(self, "family", fam)

    @property
    def param_count(self) -> int:
        return _PARAM_COUNT[self.family]

    @property
    def param_names(self) -> tuple[str, ...]:
        return _PARAM_NAMES[self.family]

    @property
    def linear_in_parameters(self) -> bool:
        return self.family in LINEAR_IN_PARAMETERS

    def __str__(self) -> str:
        return self.family.value

    def _call(self, theta, d, want):
        t = _theta(theta, self.param_count)
        x = _dose(d)
        out = _IMPL[self.family](t, x, want)
        if x.ndim == 0 and want != "grad":
            return float(out)
        return out

    def evaluate(self, theta, d):
        """Mean response ``m(theta, d)``; scalar in, scalar out."""
        return self._call(theta, d, "value")

    def gradient(self, theta, d) -> np.ndarray:
        """Partial derivatives with respect to theta.

        Shape ``(p,)`` for a scalar dose and ``(len(d), p)`` for an array.
        """
        return self._call(theta, d, "grad")

    def dose_derivative(self, theta, d):
        return self._call(theta, d, "deriv")

    def is_monotone(self, theta, upper: float = math.inf) -> bool:
        """Whether ``m(theta, .)`` is strictly monotone on ``[0, upper]``."""
        t = _theta(theta, self.param_count)
        fam = self.family
        if fam is Family.LINEAR:
            return t[1] != 0.0
        if fam is Family.QUADRATIC:
            # slope is linear in d; compare its sign at both ends
            lo = t[1]
            if math.isfinite(upper):
                hi = t[1] + 2.0 * t[2] * upper
            else:
                hi = t[2] if t[2] != 0 else t[1]
            same_sign = (lo >= 0 and hi >= 0) or (lo <= 0 and hi <= 0)
            return same_sign and (lo != 0 or hi != 0)
        if fam is Family.EMAX:
            return t[1] != 0.0 and t[2] > 0.0
        if fam is Family.LOGISTIC:
            return t[1] != 0.0 and t[3] != 0.0
        return t[1] != 0.0 and t[2] != 0.0

    def inverse(self, theta, y: float, upper: float | None = None) -> float:
        """Unique dose ``d >= 0`` with ``m(theta, d) = y``.

        Closed form for linear and emax models; bisection otherwise, on
        ``[0, upper]`` when given or on a bracket grown geometrically from
        ``[0, 1]``.  Targets the model cannot reach raise
        :class:`NotAttainableError`.
        """
        t = _theta(theta, self.param_count)
        y = float(y)
        if not math.isfinite(y):
            raise NotAttainableError("target response must be finite")
        lim = math.inf if upper is None else float(upper)
        if not self.is_monotone(t, lim):
            raise UnsupportedModelError(
                f"{self.family.value} model with theta={t.tolist()} is not strictly monotone on [0, {lim}]"
            )
        fam = self.family
        if fam is Family.LINEAR:
            d = (y - t[0]) / t[1]
            if d < 0:
                raise NotAttainableError(f"response {y} is below the placebo response {t[0]}")
            if d > lim:
                raise NotAttainableError(f"response {y} not reached on [0, {lim}]")
            return float(d)
        if fam is Family.EMAX:
            frac = (y - t[0]) / t[1]
            if frac < 0:
                raise NotAttainableError(f"response {y} is on the wrong side of the placebo response {t[0]}")
            if frac >= 1:
                raise NotAttainableError(
                    f"response {y} is at or beyond the emax asymptote {t[0] + t[1]}"
                )
            d = t[2] * (y - t[0]) / (t[0] + t[1] - y)
            if d > lim:
                raise NotAttainableError(f"response {y} not reached on [0, {lim}]")
            return float(d)
        return self._bisect(t, y, upper)

    def _bisect(self, t, y, upper):
        impl = _IMPL[self.family]

        def f(d):
            return float(impl(t, np.asarray(d, dtype=float), "value")) - y

        sign = 1.0 if float(impl(t, np.asarray(0.0), "deriv")) > 0 else -1.0
        if sign * f(0.0) > 0:
            raise NotAttainableError(f"response {y} is on the wrong side of the placebo response")
        if sign * f(0.0) == 0:
            return 0.0
        if upper is not None:
            hi = float(upper)
            if sign * f(hi) < 0:
                raise NotAttainableError(f"response {y} not reached on [0, {hi}]")
        else:
            hi = 1.0
            while sign * f(hi) < 0:
                hi *= 2.0
                if hi > 1e15 or not math.isfinite(f(hi)):
                    raise NotAttainableError(f"response {y} is not attainable by the model")
        lo = 0.0
        for _ in range(400):
            mid = 0.5 * (lo + hi)
            if mid <= lo or mid >= hi:
                break
            if sign * f(mid) < 0:
                lo = mid
            else:
                hi = mid
        return lo if abs(f(lo)) <= abs(f(hi)) else hi

    def inverse_gradient(self, theta, y: float) -> np.ndarray:
        """Gradient in theta of ``inverse(theta, y)`` with ``y`` held fixed.

        Implicit differentiation of ``m(theta, d) = y``:
        ``-grad_theta m(theta, d) / m'(theta, d)``.
        """
        d = self.inverse(theta, y)
        return -self.gradient(theta, d) / self.dose_derivative(theta, d)


@dataclass(frozen=True)
class DoseRange:
    """Closed dose interval with an equally spaced evaluation grid."""

    lower: float
    upper: float
    grid_points: int = 1001

    def __post_init__(self):
        if not (math.isfinite(self.lower) and math.isfinite(self.upper)):
            raise DomainError("dose range bounds must be finite")
        if not self.lower < self.upper:
            raise DomainError(f"dose range needs lower < upper, got [{self.lower}, {self.upper}]")
        if int(self.grid_points) != self.grid_points or self.grid_points < 2:
            raise DomainError("grid_points must be an integer >= 2")

    def grid(self) -> np.ndarray:
        return np.linspace(self.lower, self.upper, int(self.grid_points))

    def refined(self, factor: int = 2) -> "DoseRange":
        return DoseRange(self.lower, self.upper, (self.grid_points - 1) * factor + 1)


def _spec(spec) -> ModelSpec:
    return spec if isinstance(spec, ModelSpec) else ModelSpec(spec)


def evaluate(spec, theta, d):
    return _spec(spec).evaluate(theta, d)


def gradient(spec, theta, d):
    return _spec(spec).gradient(theta, d)


def dose_derivative(spec, theta, d):
    return _spec(spec).dose_derivative(theta, d)


def inverse(spec, theta, y, upper=None):
    return _spec(spec).inverse(theta, y, upper)


def inverse_gradient(spec, theta, y):
    return _spec(spec).inverse_gradient(theta, y)
