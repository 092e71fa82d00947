"""Power-law fits of loss against training-set size.

loss ~ 1/N^nu is fitted by ordinary least squares on (ln N, ln loss);
nu is the negated slope. Points outside an explicit [N_min, N_max]
window are excluded and reported, never silently dropped: breakdown and
crossover regions are a judgment call that belongs to the caller.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .core import ContractError

FIT_COLUMNS = ("strategy", "nu", "stderr", "r2", "n_used")


@dataclass(frozen=True)
class PowerLawFit:
    nu: float  # positive = loss decays with N
    ln_prefactor: float
    stderr_nu: float
    r_squared: float
    n_used: int
    excluded: tuple[tuple[int, str], ...] = ()


def fit_power_law(
    points: list[tuple[int, float]],
    window: tuple[float, float] | None = None,
) -> PowerLawFit:
    """OLS in log-log space over the in-window points.

    stderr_nu is the standard OLS slope error
    sqrt((SSR / (n - 2)) / sum((ln N - mean)^2)).
    """
    if len({int(n) for n, _ in points}) != len(points):
        raise ContractError("duplicate N values in power-law fit input")
    for n, loss in points:
        if not loss > 0:
            raise ContractError(f"loss must be > 0 to fit in log space, got {loss} at N={n}")
        if n < 1:
            raise ContractError(f"N must be >= 1, got {n}")

    excluded: list[tuple[int, str]] = []
    used: list[tuple[int, float]] = []
    for n, loss in points:
        if window is not None and n < window[0]:
            excluded.append((int(n), "below window"))
        elif window is not None and n > window[1]:
            excluded.append((int(n), "above window"))
        else:
            used.append((n, loss))
    if len(used) < 3:
        raise ContractError(
            f"power-law fit needs >= 3 usable points, got {len(used)}"
        )

    x = np.log([float(n) for n, _ in used])
    y = np.log([loss for _, loss in used])
    n_used = len(used)
    x_mean, y_mean = x.mean(), y.mean()
    sxx = float(np.sum((x - x_mean) ** 2))
    slope = float(np.sum((x - x_mean) * (y - y_mean)) / sxx)
    intercept = float(y_mean - slope * x_mean)
    residuals = y - (intercept + slope * x)
    ssr = float(np.sum(residuals**2))
    sst = float(np.sum((y - y_mean) ** 2))
    r_squared = 1.0 if sst == 0.0 else max(0.0, min(1.0, 1.0 - ssr / sst))
    stderr = float(np.sqrt(ssr / (n_used - 2) / sxx))
    return PowerLawFit(
        nu=-slope,
        ln_prefactor=intercept,
        stderr_nu=stderr,
        r_squared=r_squared,
        n_used=n_used,
        excluded=tuple(excluded),
    )


def fit_from_curve(curve, window=None) -> PowerLawFit:
    """Fit the mean losses of a learning curve (no per-point weighting)."""
    return fit_power_law([(p.n, p.mean_loss) for p in curve.points], window)


@dataclass(frozen=True)
class RankedFits:
    """Strategies ordered by nu descending, with +-2 stderr overlap flags."""

    rows: tuple[tuple[str, PowerLawFit], ...]
    overlapping: tuple[tuple[str, str], ...]


def compare_fits(fits: dict[str, PowerLawFit]) -> RankedFits:
    if not fits:
        raise ContractError("compare_fits needs at least one fit")
    rows = tuple(sorted(fits.items(), key=lambda kv: -kv[1].nu))
    overlapping = []
    for a in range(len(rows)):
        for b in range(a + 1, len(rows)):
            name_a, fit_a = rows[a]
            name_b, fit_b = rows[b]
            lo_a, hi_a = fit_a.nu - 2 * fit_a.stderr_nu, fit_a.nu + 2 * fit_a.stderr_nu
            lo_b, hi_b = fit_b.nu - 2 * fit_b.stderr_nu, fit_b.nu + 2 * fit_b.stderr_nu
            if lo_a <= hi_b and lo_b <= hi_a:
                overlapping.append((name_a, name_b))
    return RankedFits(rows=rows, overlapping=tuple(overlapping))


def format_fit_table(ranked: RankedFits) -> str:
    """Text table of exponents (3 decimals), largest nu first."""
    overlap_names = {n for pair in ranked.overlapping for n in pair}
    lines = [f"{'strategy':<20} {'nu':>7} {'stderr':>8} {'R^2':>7} {'n':>4}  interval-overlap"]
    for name, fit in ranked.rows:
        flag = "yes" if name in overlap_names else "no"
        lines.append(
            f"{name:<20} {fit.nu:>7.3f} {fit.stderr_nu:>8.4f} "
            f"{fit.r_squared:>7.4f} {fit.n_used:>4d}  {flag}"
        )
    return "\n".join(lines)


def write_fit_summary(ranked: RankedFits, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(FIT_COLUMNS)
        for name, fit in ranked.rows:
            writer.writerow(
                [name, repr(fit.nu), repr(fit.stderr_nu), repr(fit.r_squared), fit.n_used]
            )


def read_fit_summary(path) -> list[tuple[str, float, float, float, int]]:
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or tuple(header) != FIT_COLUMNS:
            raise ContractError(f"{path}: expected fit header {','.join(FIT_COLUMNS)}")
        return [
            (row[0], float(row[1]), float(row[2]), float(row[3]), int(row[4]))
            for row in reader
        ]
