"""Frequency-domain Bode integral I(S) = int ln|S(i w)|^2 dw.

The finite part [-W, W] is integrated adaptively; the two tails |w| > W are
added in closed form from the model's asymptotic expansion of log S.
"""

import csv
import io
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ModelError, TailDivergenceError
from .funcmodel import RationalFractal
from .quadrature import adaptive_gk

OMEGA_CAP = 1e9


@dataclass
class IntegralReport:
    numeric_value: float
    theoretical_value: float
    tail_correction: float
    cutoff_omega: float
    estimated_abs_error: float
    residual_gamma_R: complex | None = None
    reconciliation: float = float("nan")
    converged: bool = True
    notes: list = field(default_factory=list)
    panels: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.reconcile()

    def reconcile(self, residual=None):
        """numeric - (theoretical + Re(2i * residual)); residual may be None."""
        if residual is not None:
            self.residual_gamma_R = complex(residual)
        extra = (2j * self.residual_gamma_R).real if self.residual_gamma_R is not None else 0.0
        self.reconciliation = self.numeric_value - (self.theoretical_value + extra)
        return self.reconciliation

    def to_dict(self):
        d = asdict(self)
        d.pop("panels")
        r = d["residual_gamma_R"]
        d["residual_gamma_R"] = None if r is None else [r.real, r.imag]
        return d


def theoretical_value(poles):
    """4 pi sum d_j Re(p_j)."""
    return 4.0 * math.pi * math.fsum(p.order * p.location.real for p in poles)


def bode_integrand(model, omega):
    """ln|S(i w)|^2; -inf where S underflows."""
    scalar = np.ndim(omega) == 0
    w = np.atleast_1d(np.asarray(omega, dtype=float))
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        out = model.ln_abs_sq(1j * w)
    out = np.where(out < 2.0 * math.log(1e-300), -np.inf, out)
    return float(out[0]) if scalar else out


def _leading_loop_term(model):
    """(c, q) with L(s) ~ c s^-q from the top-degree controller term."""
    plant, pid = model.plant, model.pid
    if plant.num.is_zero:
        raise TailDivergenceError("loop gain is identically zero")
    a_n, b_m = plant.num.leading, plant.den.leading
    # highest controller power with a nonzero gain
    for k, e in ((pid.k1, pid.alpha), (pid.k0, 0.0), (pid.km1, -pid.beta)):
        if k != 0:
            return a_n * k / b_m, plant.m - plant.n - e
    raise TailDivergenceError("controller is identically zero")


def tail_estimate(model, omega0):
    """Leading-term tail of the Bode integrand beyond |w| = omega0.

    Uses ln|S(iw)|^2 ~ -2 Re[c (iw)^-q], c = a_n k1 / b_m, q = m - n - alpha.
    Returns (correction, bound) where bound = 2|c| omega0^(1-q) / (q-1).
    """
    if not isinstance(model, RationalFractal):
        raise TypeError("tail_estimate needs a RationalFractal model")
    c, q = _leading_loop_term(model)
    if q <= 1:
        raise TailDivergenceError(f"q = m - n - alpha = {q:g} <= 1: the degree condition m > alpha + n + 1 fails")
    correction = -_two_sided_tail(c, q, omega0)
    bound = 2.0 * abs(c) * omega0 ** (1.0 - q) / (q - 1.0)
    return correction, bound


def _two_sided_tail(c, q, omega0):
    """int_{|w| > omega0} 2 Re[c (i w)^-q] dw on the principal branch."""
    if abs(q - 1.0) < 1e-9:
        return 0.0  # odd in w: the symmetric tails cancel exactly
    return 4.0 * math.cos(0.5 * math.pi * q) * complex(c).real * omega0 ** (1.0 - q) / (q - 1.0)


def series_tail(series, omega0):
    """Closed-form tail from a log S series; returns (correction, bound).

    The bound is the magnitude of the highest-order band kept, a proxy for the
    truncated remainder.
    """
    if not series:
        return 0.0, 0.0
    for q, c in series:
        if q < 1.0 - 1e-9 and abs(math.cos(0.5 * math.pi * q) * complex(c).real) > 0:
            raise TailDivergenceError(f"log S decays like s^-{q:g}; the Bode integral diverges")
    parts = [(q, _two_sided_tail(c, q, omega0)) for q, c in series if q >= 1.0 - 1e-9]
    total = math.fsum(v for _, v in parts)
    q_top = series[-1][0]
    bound = sum(4.0 * abs(c) * omega0 ** (1.0 - q) / max(q - 1.0, 1.0) for q, c in series if q > q_top - 1.0)
    return total, bound


def _breakpoints(model, omega_max):
    feats = np.asarray(model.features(), dtype=np.complex128)
    lim = [complex(z) for z in model.limit_points]
    scale = max(1.0, float(np.max(np.abs(feats))) if feats.size else 1.0)
    pos = {0.0}
    for z in list(feats) + lim:
        for v in (abs(z), abs(z.imag)):
            if 0 < v < omega_max:
                pos.add(float(v))
    # geometric grading from the smallest feature out to the cutoff
    w = scale * 1e-3
    while w < omega_max:
        pos.add(w)
        w *= 2.0
    pos.add(omega_max)
    pos = np.array(sorted(pos))
    return np.concatenate((-pos[:0:-1], pos)), scale


def _series(model, q_max):
    try:
        return model.asymptotic_log_series(q_max)
    except ModelError as exc:
        raise TailDivergenceError(str(exc)) from None


def bode_integral(model, rel_tol=1e-6, abs_tol=1e-9, omega_max=None, q_max=14.0, max_panels=200_000):
    """Adaptive quadrature of ln|S(iw)|^2 over the real line."""
    notes = []
    poles = model.rhp_zeros()
    theo = theoretical_value(poles)
    feats = np.asarray(model.features())
    scale = max(1.0, float(np.max(np.abs(feats))) if feats.size else 1.0)
    omega0 = float(omega_max) if omega_max is not None else 1e3 * scale
    converged = True
    try:
        series = _series(model, q_max)
        tail, bound = series_tail(series, omega0)
    except TailDivergenceError as exc:
        notes.append(f"tail not integrable: {exc}")
        series, tail, bound, converged = None, 0.0, math.inf, False
    edges, _ = _breakpoints(model, omega0)
    f = lambda w: bode_integrand(model, w)  # noqa: E731
    res = adaptive_gk(f, edges, abs_tol=abs_tol, rel_tol=0.25 * rel_tol, max_panels=max_panels)
    if series is not None:
        # push the cutoff out until the truncated remainder is negligible
        target = max(abs_tol, rel_tol * abs(res.value))
        while bound > 0.1 * target and omega0 < OMEGA_CAP:
            new0 = min(omega0 * 10.0, OMEGA_CAP)
            ext = adaptive_gk(f, [omega0, new0], abs_tol=abs_tol, rel_tol=0.25 * rel_tol)
            ext_neg = adaptive_gk(f, [-new0, -omega0], abs_tol=abs_tol, rel_tol=0.25 * rel_tol)
            res = _merge(res, ext, ext_neg)
            omega0 = new0
            tail, bound = series_tail(series, omega0)
        if bound > 0.1 * target:
            notes.append(f"tail bound {bound:.3g} above target at the cap {OMEGA_CAP:g}")
            converged = False
    if not res.converged:
        notes.append("quadrature hit the panel limit")
        converged = False
    value = float(np.real(res.value)) + tail
    err = res.abs_error + (bound if math.isfinite(bound) else 0.0)
    return IntegralReport(
        numeric_value=value,
        theoretical_value=theo,
        tail_correction=tail,
        cutoff_omega=omega0,
        estimated_abs_error=err,
        converged=converged,
        notes=notes,
        panels=res,
    )


def _merge(*results):
    from .quadrature import QuadResult

    edges_a = np.concatenate([r.edges[:-1] for r in results])
    edges_b = np.concatenate([r.edges[1:] for r in results])
    vals = np.concatenate([r.panel_values for r in results])
    errs = np.concatenate([r.panel_errors for r in results])
    order = np.argsort(edges_a)
    return QuadResult(
        value=sum(r.value for r in results),
        abs_error=float(sum(r.abs_error for r in results)),
        edges=np.concatenate((edges_a[order], edges_b[order][-1:])),
        panel_values=vals[order],
        panel_errors=errs[order],
        converged=all(r.converged for r in results),
        n_evals=sum(r.n_evals for r in results),
    )


def integrand_samples(model, report, per_panel=3):
    """(omega, ln|S|^2, panel_id) rows sampled inside every quadrature panel."""
    res = report.panels
    a, b = res.edges[:-1], res.edges[1:]
    frac = (np.arange(per_panel) + 0.5) / per_panel
    w = (a[:, None] + (b - a)[:, None] * frac[None, :]).ravel()
    ids = np.repeat(np.arange(a.size), per_panel)
    return w, bode_integrand(model, w), ids


def integrand_csv(model, report, per_panel=3):
    """CSV text with header omega,ln_abs_S_sq,panel_id."""
    w, v, ids = integrand_samples(model, report, per_panel)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["omega", "ln_abs_S_sq", "panel_id"])
    for row in zip(w, v, ids):
        writer.writerow([repr(float(row[0])), repr(float(row[1])), int(row[2])])
    return buf.getvalue()
