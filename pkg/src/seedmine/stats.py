"""Pearson independence test for seed-vs-correctness contingency tables.

The survival function is evaluated through the regularized incomplete gamma
function, computed here directly (series expansion below s+1, continued
fraction above) so the package carries no statistics dependency. Relative
accuracy is driven to ~1e-12, comfortably inside the 1e-10 contract.
"""

from __future__ import annotations

import math

from .errors import MetricsError

_EPS = 1e-14
_MAX_ITER = 500
_TINY = 1e-300


def _lower_series(s: float, x: float) -> float:
    """P(s, x) by series: x^s e^-x / Gamma(s) * sum x^n / (s)(s+1)..(s+n)."""
    term = 1.0 / s
    total = term
    denom = s
    for _ in range(_MAX_ITER):
        denom += 1.0
        term *= x / denom
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    else:
        raise MetricsError(f"series for P({s}, {x}) did not converge")
    return total * math.exp(-x + s * math.log(x) - math.lgamma(s))


def _upper_continued_fraction(s: float, x: float) -> float:
    """Q(s, x) by Lentz's continued fraction, stable for x >= s + 1."""
    b = x + 1.0 - s
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER + 1):
        an = -i * (i - s)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    else:
        raise MetricsError(f"continued fraction for Q({s}, {x}) did not converge")
    return h * math.exp(-x + s * math.log(x) - math.lgamma(s))


def regularized_upper_gamma(s: float, x: float) -> float:
    """Q(s, x) = Gamma(s, x) / Gamma(s) for s > 0, x >= 0."""
    if s <= 0:
        raise MetricsError(f"shape parameter must be positive, got {s}")
    if x < 0:
        raise MetricsError(f"argument must be non-negative, got {x}")
    if x == 0:
        return 1.0
    if x < s + 1.0:
        return 1.0 - _lower_series(s, x)
    return _upper_continued_fraction(s, x)


def chi_squared_sf(stat: float, dof: int) -> float:
    if dof < 1:
        raise MetricsError(f"degrees of freedom must be >= 1, got {dof}")
    if stat < 0:
        raise MetricsError(f"statistic must be non-negative, got {stat}")
    return regularized_upper_gamma(dof / 2.0, stat / 2.0)


def chi_squared_independence(table) -> tuple[float, int, float]:
    """Pearson test on an n x 2 contingency table of non-negative counts.

    Returns (statistic, dof, p). dof is n - 1 for two columns. A zero row or
    column total makes an expected cell zero; that table is degenerate.
    """
    rows = [list(row) for row in table]
    if len(rows) < 2:
        raise MetricsError("need at least two rows to test independence")
    if any(len(row) != 2 for row in rows):
        raise MetricsError("table must have exactly two columns")
    for row in rows:
        for cell in row:
            if cell < 0:
                raise MetricsError(f"negative count {cell}")
    row_totals = [sum(row) for row in rows]
    col_totals = [sum(col) for col in zip(*rows)]
    total = sum(row_totals)
    if any(t == 0 for t in row_totals) or any(t == 0 for t in col_totals):
        raise MetricsError("degenerate table: a row or column total is zero")
    stat = 0.0
    for i, row in enumerate(rows):
        for j, observed in enumerate(row):
            expected = row_totals[i] * col_totals[j] / total
            stat += (observed - expected) ** 2 / expected
    dof = len(rows) - 1
    return stat, dof, chi_squared_sf(stat, dof)
