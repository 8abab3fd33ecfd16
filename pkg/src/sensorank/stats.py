"""Correlation, regression, and robustness statistics.

p-values come from an in-house Student-t tail computed with a regularized
incomplete beta (continued-fraction evaluation): the package deliberately
carries no statistical-library dependency, so the reference distribution is
pinned here and verified against published t-table values in the tests.
"""

from __future__ import annotations

import csv
import dataclasses
import math
from pathlib import Path

import numpy as np

from .errors import DegenerateVariance, SingularDesign

# --------------------------------------------------------------------------
# Student-t reference distribution
# --------------------------------------------------------------------------

_BETACF_MAX_ITER = 300
_BETACF_EPS = 1e-15
_TINY = 1e-300


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta, modified Lentz scheme."""
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, _BETACF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _BETACF_EPS:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge for a={a}, b={b}, x={x}")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b), accurate to ~1e-14 over the t-statistic range we use."""
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must lie in [0, 1], got {x}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    front = math.exp(
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b) + a * math.log(x) + b * math.log1p(-x)
    )
    # The continued fraction converges fast only below the distribution
    # bulk; use the symmetry I_x(a,b) = 1 - I_{1-x}(b,a) above it.
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def t_two_sided_p(t: float, df: int) -> float:
    """Two-sided tail 2 P(T_df > |t|) = I_{df/(df+t^2)}(df/2, 1/2).

    Floored at the smallest normal float so callers can keep the p > 0
    invariant even for numerically perfect correlations.
    """
    if df < 1:
        raise ValueError("df must be at least 1")
    if not math.isfinite(t):
        return float(np.finfo(float).tiny)
    p = regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t))
    return max(min(p, 1.0), float(np.finfo(float).tiny))


def t_quantile(q: float, df: int) -> float:
    """Inverse CDF of Student-t by bisection on the tail formula; only the
    upper half (q >= 0.5) is needed for confidence intervals."""
    if not 0.5 <= q < 1.0:
        raise ValueError("q must lie in [0.5, 1)")
    if q == 0.5:
        return 0.0
    target = 2.0 * (1.0 - q)  # two-sided tail mass at the quantile
    lo, hi = 0.0, 1.0
    while t_two_sided_p(hi, df) > target:
        hi *= 2.0
        if hi > 1e12:
            raise ArithmeticError("t quantile bisection failed to bracket")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if t_two_sided_p(mid, df) > target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# --------------------------------------------------------------------------
# correlation and regression
# --------------------------------------------------------------------------


@dataclasses.dataclass(frozen=True)
class CorrelationResult:
    r: float
    p: float
    n: int


def _as_vector(v, name: str) -> np.ndarray:
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be a vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def pearson(x, y) -> CorrelationResult:
    """Sample Pearson r with a two-sided p against t(n-2)."""
    x, y = _as_vector(x, "x"), _as_vector(y, "y")
    if x.size != y.size:
        raise ValueError(f"length mismatch: {x.size} vs {y.size}")
    n = x.size
    if n < 3:
        raise ValueError("need at least 3 points")
    dx, dy = x - x.mean(), y - y.mean()
    sx, sy = float(dx @ dx), float(dy @ dy)
    if sx == 0.0 or sy == 0.0:
        raise DegenerateVariance("constant input to pearson")
    r = float(np.clip((dx @ dy) / math.sqrt(sx * sy), -1.0, 1.0))
    if abs(r) == 1.0:
        return CorrelationResult(r=r, p=float(np.finfo(float).tiny), n=n)
    t = r * math.sqrt((n - 2) / (1.0 - r * r))
    return CorrelationResult(r=r, p=t_two_sided_p(t, n - 2), n=n)


def _design_with_intercept(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    return np.column_stack([np.ones(X.shape[0]), X])


def _lstsq_full_rank(A: np.ndarray, y: np.ndarray, context: str) -> np.ndarray:
    coef, _, rank, _ = np.linalg.lstsq(A, y, rcond=None)
    if rank < A.shape[1]:
        raise SingularDesign(f"rank-deficient design ({rank} < {A.shape[1]}) in {context}")
    return coef


@dataclasses.dataclass(frozen=True)
class OlsResult:
    coefficients: np.ndarray  # intercept first
    r_squared: float


def ols_r2(X, y) -> OlsResult:
    """Least squares with intercept; R^2 = 1 - SS_res / SS_tot."""
    y = _as_vector(y, "y")
    A = _design_with_intercept(X)
    if y.size != A.shape[0]:
        raise ValueError("X and y row counts differ")
    if y.size <= A.shape[1] + 1:
        raise ValueError(f"need n > columns + 1, got n={y.size}, columns={A.shape[1] - 1}")
    coef = _lstsq_full_rank(A, y, "ols_r2")
    resid = y - A @ coef
    ss_tot = float(((y - y.mean()) ** 2).sum())
    if ss_tot == 0.0:
        raise DegenerateVariance("constant response in ols_r2")
    return OlsResult(coefficients=coef, r_squared=1.0 - float(resid @ resid) / ss_tot)


def loo_cv_r2(X, y) -> float:
    """Leave-one-out predictive R^2 = 1 - Sum (y_i - yhat_{-i})^2 / Sum (y_i - ybar)^2.

    The denominator uses the full-sample mean, so a model that predicts no
    better than the global mean scores about 0 and can go negative.
    """
    y = _as_vector(y, "y")
    A = _design_with_intercept(X)
    n = y.size
    if n != A.shape[0]:
        raise ValueError("X and y row counts differ")
    if n <= A.shape[1] + 2:
        raise ValueError(f"need n > columns + 2, got n={n}, columns={A.shape[1] - 1}")
    press = 0.0
    for i in range(n):
        keep = np.arange(n) != i
        try:
            coef = _lstsq_full_rank(A[keep], y[keep], f"loo fold {i}")
        except SingularDesign as exc:
            raise SingularDesign(f"fold {i}: {exc}") from exc
        press += float((y[i] - A[i] @ coef) ** 2)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    if ss_tot == 0.0:
        raise DegenerateVariance("constant response in loo_cv_r2")
    return 1.0 - press / ss_tot


def partial_correlation(x, y, z) -> CorrelationResult:
    """Pearson correlation of x and y after removing an affine fit on z.

    The p-value uses n-3 degrees of freedom to account for the covariate.
    """
    x, y, z = _as_vector(x, "x"), _as_vector(y, "y"), _as_vector(z, "z")
    n = x.size
    if not (n == y.size == z.size):
        raise ValueError("length mismatch among x, y, z")
    if n < 4:
        raise ValueError("need at least 4 points")
    if np.all(z == z[0]):
        raise DegenerateVariance("constant covariate z")
    A = _design_with_intercept(z)
    rx = x - A @ _lstsq_full_rank(A, x, "partial_correlation x on z")
    ry = y - A @ _lstsq_full_rank(A, y, "partial_correlation y on z")
    if float(rx @ rx) == 0.0 or float(ry @ ry) == 0.0:
        raise DegenerateVariance("residual variance is zero (variable collinear with z)")
    r = float(np.clip((rx @ ry) / math.sqrt(float(rx @ rx) * float(ry @ ry)), -1.0, 1.0))
    if abs(r) == 1.0:
        return CorrelationResult(r=r, p=float(np.finfo(float).tiny), n=n)
    df = n - 3
    t = r * math.sqrt(df / (1.0 - r * r))
    return CorrelationResult(r=r, p=t_two_sided_p(t, df), n=n)


def jackknife_significance(x, y, alpha: float = 0.05, control=None) -> tuple[int, list[CorrelationResult]]:
    """Leave-one-out influence analysis: how many folds keep p < alpha.

    With `control` set, each fold runs the dimensionality-controlled partial
    correlation instead of plain Pearson; that is the variant the robustness
    protocol reports.
    """
    x, y = _as_vector(x, "x"), _as_vector(y, "y")
    n = x.size
    if n < 4:
        raise ValueError("need at least 4 points")
    if control is not None:
        control = _as_vector(control, "control")
        if control.size != n:
            raise ValueError("control length mismatch")
    per_fold: list[CorrelationResult] = []
    for i in range(n):
        keep = np.arange(n) != i
        if control is None:
            per_fold.append(pearson(x[keep], y[keep]))
        else:
            per_fold.append(partial_correlation(x[keep], y[keep], control[keep]))
    retained = sum(1 for fold in per_fold if fold.p < alpha)
    return retained, per_fold


@dataclasses.dataclass(frozen=True)
class SeedStability:
    mean: float
    std: float
    cv: float
    ci95: float  # half-width


def seed_stability(values_per_seed) -> SeedStability:
    """Mean, sample std, coefficient of variation, and t-based 95% CI
    half-width across per-seed summary values."""
    values = _as_vector(values_per_seed, "values_per_seed")
    n = values.size
    if n < 2:
        raise ValueError("need at least 2 seeds")
    mean = float(values.mean())
    std = float(values.std(ddof=1))
    cv = math.inf if mean == 0.0 else std / abs(mean)
    ci95 = t_quantile(0.975, n - 1) * std / math.sqrt(n)
    return SeedStability(mean=mean, std=std, cv=cv, ci95=ci95)


# --------------------------------------------------------------------------
# model records
# --------------------------------------------------------------------------

METRIC_COLUMNS = ("g_pr", "g_iso", "l_iso", "jer", "disc", "binding")


@dataclasses.dataclass
class ModelRecord:
    name: str
    arch: str
    objective: str
    metrics: dict[str, float]
    covariates: dict[str, float] = dataclasses.field(default_factory=dict)

    def value(self, key: str) -> float:
        if key in self.metrics:
            return self.metrics[key]
        if key in self.covariates:
            return self.covariates[key]
        raise KeyError(f"{self.name} ({self.arch}) has no field {key!r}")


def load_records(path: Path | str, dims_path: Path | str | None = None) -> list[ModelRecord]:
    """Read a leaderboard CSV (model,arch,objective + metric columns) and
    optionally merge per-model embedding dims keyed on (model, arch)."""
    records: list[ModelRecord] = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            metrics = {k: float(row[k]) for k in METRIC_COLUMNS if k in row and row[k] != ""}
            records.append(ModelRecord(row["model"], row["arch"], row["objective"], metrics))
    if dims_path is not None:
        with open(dims_path, newline="") as fh:
            dims = {(row["model"], row["arch"]): float(row["embed_dim"]) for row in csv.DictReader(fh)}
        for rec in records:
            key = (rec.name, rec.arch)
            if key in dims:
                rec.covariates["embed_dim"] = dims[key]
    return records


def column(records: list[ModelRecord], key: str) -> np.ndarray:
    return np.asarray([rec.value(key) for rec in records], dtype=np.float64)
