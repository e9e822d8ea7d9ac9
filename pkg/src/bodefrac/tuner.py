"""Parameter sweeps over fractional PID gains and orders on a fixed plant.

Each grid point is certified for closed-loop stability first; only stable
points get the (more expensive) Bode integral.  When the degree condition
m > alpha + n + 1 holds, the integral is fixed by the plant's unstable poles,
so changing the controller can only move I through the outer-arc term that
appears once the condition is relaxed.
"""

import csv
import io
import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .bodeint import bode_integral
from .contour import gamma_R_residual
from .errors import BodeFracError, ConfigurationError
from .funcmodel import FractionalPID, RationalFractal
from .rootfind import certify_stability

GRID_KEYS = ("k1", "k0", "km1", "alpha", "beta")
SWEEP_COLUMNS = [
    "k1",
    "k0",
    "km1",
    "alpha",
    "beta",
    "stable",
    "I_numeric",
    "I_theoretical",
    "residual_re",
    "residual_im",
    "reconciliation",
]

COMPARISON_HEADER = (
    "With m > alpha + n + 1 the Bode integral equals 4*pi*sum d Re(p) for every stabilising "
    "controller; differences between rows can only come from the outer-arc residual when the "
    "condition fails."
)


def degree_condition(plant, pid):
    return plant.m > pid.alpha + plant.n + 1


def default_grid():
    orders = [0.25 * k for k in range(1, 8)]
    gains = np.logspace(-2, 2, 5).tolist()
    return {"k1": gains, "k0": gains, "km1": gains, "alpha": orders, "beta": orders}


def worker_count():
    env = os.environ.get("BODEFRAC_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigurationError(f"BODEFRAC_THREADS must be an integer, got {env!r}") from None
    return min(8, os.cpu_count() or 1)


@dataclass
class SweepPoint:
    gains: tuple
    pid: FractionalPID | None
    certificate: object = None
    report: object = None
    degree_ok: bool = False
    residual: complex | None = None
    error: str | None = None

    @property
    def stable(self):
        return self.certificate is not None and self.certificate.verdict == "stable"

    def row(self):
        k1, k0, km1, a, b = self.gains
        rep = self.report
        res = self.residual if self.residual is not None else (rep.residual_gamma_R if rep else None)
        return [
            k1,
            k0,
            km1,
            a,
            b,
            int(self.stable),
            "" if rep is None else repr(rep.numeric_value),
            "" if rep is None else repr(rep.theoretical_value),
            "" if res is None else repr(res.real),
            "" if res is None else repr(res.imag),
            "" if rep is None else repr(rep.reconciliation),
        ]


def _normalise_grid(grid):
    unknown = set(grid) - set(GRID_KEYS)
    if unknown:
        raise ConfigurationError(f"unknown grid keys {sorted(unknown)}; expected {GRID_KEYS}")
    axes = []
    for key in GRID_KEYS:
        if key not in grid:
            raise ConfigurationError(f"grid is missing {key!r}")
        vals = grid[key]
        vals = [vals] if np.isscalar(vals) else list(vals)
        if not vals:
            raise ConfigurationError(f"grid dimension {key!r} is empty")
        try:
            axes.append(sorted(float(v) for v in vals))
        except (TypeError, ValueError):
            raise ConfigurationError(f"grid dimension {key!r} must be numeric") from None
    return axes


def evaluate_point(plant, gains, rel_tol=1e-6, residual=False):
    """Certify one controller and, if stable, integrate."""
    try:
        pid = FractionalPID(*gains)
    except (BodeFracError, ValueError) as exc:
        return SweepPoint(gains, None, error=str(exc))
    pt = SweepPoint(gains, pid, degree_ok=degree_condition(plant, pid))
    model = RationalFractal(plant, pid)
    try:
        pt.certificate = certify_stability(model)
        if not pt.stable:
            return pt
        pt.report = bode_integral(model, rel_tol=rel_tol)
        if residual or not pt.degree_ok:
            est = gamma_R_residual(model)
            pt.residual = est.value
            pt.report.reconcile(est.value)
            if not est.converged:
                pt.report.converged = False
                pt.report.notes.append(f"arc extrapolation not converged ({est.note or f'error {est.error:.3g}'})")
    except (BodeFracError, ArithmeticError, ValueError) as exc:
        pt.error = f"{type(exc).__name__}: {exc}"
    return pt


def sweep(plant, grid, rel_tol=1e-6, residual=False, workers=None):
    """Evaluate every grid point; order is lexicographic in (k1, k0, km1, alpha, beta)."""
    points = list(itertools.product(*_normalise_grid(grid)))
    workers = worker_count() if workers is None else max(1, int(workers))
    job = lambda g: evaluate_point(plant, g, rel_tol, residual)  # noqa: E731
    if workers == 1 or len(points) == 1:
        return [job(g) for g in points]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(job, points))


def invariance_spread(points):
    """(max - min) of numeric I over stable points meeting the degree condition, relative to theory."""
    vals = [p.report.numeric_value for p in points if p.stable and p.degree_ok and p.report is not None]
    if not vals:
        return math.nan
    theo = next(p.report.theoretical_value for p in points if p.report is not None)
    denom = abs(theo) if theo != 0 else 1.0
    return (max(vals) - min(vals)) / denom


def sweep_csv(points):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for p in points:
        w.writerow([repr(v) if isinstance(v, float) else v for v in p.row()])
    return buf.getvalue()


@dataclass
class ComparisonRow:
    alpha: float
    beta: float
    stable: bool
    degree_ok: bool
    I_numeric: float | None
    I_theoretical: float | None
    residual: complex | None
    below_baseline: bool
    converged: bool = True
    error: str | None = None


@dataclass
class ComparisonReport:
    header: str
    gains: tuple
    baseline: ComparisonRow
    rows: list
    baseline_flag: str | None = None

    def table(self):
        lines = [self.header, "alpha  beta  stable  deg_ok  I_numeric         I_theory          residual            lower"]
        for r in self.rows:
            num = "-" if r.I_numeric is None else f"{r.I_numeric:.10g}" + ("" if r.converged else "?")
            th = "-" if r.I_theoretical is None else f"{r.I_theoretical:.10g}"
            res = "-" if r.residual is None else f"{r.residual.real:.3g}{r.residual.imag:+.3g}i"
            lines.append(
                f"{r.alpha:<6g} {r.beta:<5g} {str(r.stable):<7} {str(r.degree_ok):<7} {num:<17} {th:<17} {res:<19} "
                f"{'*' if r.below_baseline else ''}"
            )
        if any(not r.converged for r in self.rows):
            lines.append("?: integral or arc limit does not converge for this row")
        if self.baseline_flag:
            lines.append(f"note: {self.baseline_flag}")
        return "\n".join(lines)


def compare_integer_vs_fractional(plant, gains, alpha_beta_list, rel_tol=1e-6):
    """Tabulate I over (alpha, beta) for fixed gains against the integer (1, 1) controller."""
    pairs = [(float(a), float(b)) for a, b in alpha_beta_list]
    if not pairs:
        raise ConfigurationError("alpha_beta_list is empty")
    if (1.0, 1.0) not in pairs:
        raise ConfigurationError("alpha_beta_list must include the integer baseline (1, 1)")
    k1, k0, km1 = (float(g) for g in gains)
    pts = [evaluate_point(plant, (k1, k0, km1, a, b), rel_tol, residual=True) for a, b in pairs]
    rows = []
    for (a, b), p in zip(pairs, pts):
        rep = p.report
        rows.append(
            ComparisonRow(a, b, p.stable, p.degree_ok, rep.numeric_value if rep else None,
                          rep.theoretical_value if rep else None, p.residual, False,
                          bool(rep.converged) if rep else True, p.error)
        )
    base = rows[pairs.index((1.0, 1.0))]
    flag = None
    if base.I_numeric is None:
        flag = "integer baseline is not certified stable; comparison has no reference"
    else:
        tol = max(1e-6, 10 * rel_tol) * max(1.0, abs(base.I_numeric))
        for r in rows:
            r.below_baseline = r.converged and r.I_numeric is not None and r.I_numeric < base.I_numeric - tol
    return ComparisonReport(COMPARISON_HEADER, (k1, k0, km1), base, rows, flag)
