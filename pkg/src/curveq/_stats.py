"""Normal and Student-t helpers used for quantiles and variate generation."""

from __future__ import annotations

import numpy as np
from scipy import special


def norm_cdf(x):
    return special.ndtr(x)


def norm_pdf(x):
    return np.exp(-0.5 * np.square(x)) / np.sqrt(2.0 * np.pi)


def norm_ppf(p):
    return special.ndtri(p)


def upper_quantile(alpha: float, source: str = "normal", df: float | None = None) -> float:
    """Return the ``1 - alpha`` quantile of the normal or Student-t law."""
    if source == "normal":
        return float(special.ndtri(1.0 - alpha))
    if source == "t":
        if df is None or df <= 0:
            raise ValueError("Student-t quantile needs positive degrees of freedom")
        return float(special.stdtrit(df, 1.0 - alpha))
    raise ValueError(f"unknown quantile source {source!r}")


def standard_normals(rng: np.random.Generator, size) -> np.ndarray:
    """Standard normal variates by inversion of uniforms on (0, 1).

    ``Generator.random`` returns values in [0, 1); the rare exact zero is
    mapped to the smallest positive double so the inverse stays finite.
    """
    u = rng.random(size)
    u = np.where(u == 0.0, np.finfo(float).tiny, u)
    return special.ndtri(u)
