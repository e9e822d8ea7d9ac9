"""Branch-cut contour for the Bode integral and the lemma verifiers.

Orientation used throughout: the imaginary axis is run upward from -iR to iR,
each right-half-plane zero p of S is reached by a corridor (lower lip inward,
counterclockwise eps-circle, upper lip outward), the origin is indented by a
right half eps-semicircle when S(0) = 0, and the path closes with the outer
arc theta: pi/2 -> -pi/2.  With this orientation a corridor pair contributes
-2 pi i d Re(p) and closure gives I = 4 pi sum d Re(p) + 2i * (arc limit).
"""

import csv
import io
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels
from .errors import BranchPointError, BranchTrackingError, ContourError, CorridorCollisionError, ModelError
from .funcmodel import PoleRecord, RationalFractal, wrap_phase
from .quadrature import adaptive_gk

# -- path segments ------------------------------------------------------------


@dataclass(frozen=True)
class AxisRun:
    im_start: float
    im_end: float

    kind = "axis"

    def point(self, t):
        return 1j * (self.im_start + np.asarray(t, dtype=float) * (self.im_end - self.im_start))

    def deriv(self, t):
        return np.full(np.shape(t), 1j * (self.im_end - self.im_start), dtype=np.complex128)

    def reversed(self):
        return AxisRun(self.im_end, self.im_start)


@dataclass(frozen=True)
class Arc:
    center: complex
    radius: float
    theta_start: float
    theta_end: float

    kind = "arc"

    def _theta(self, t):
        return self.theta_start + np.asarray(t, dtype=float) * (self.theta_end - self.theta_start)

    def point(self, t):
        return self.center + self.radius * np.exp(1j * self._theta(t))

    def deriv(self, t):
        return 1j * self.radius * np.exp(1j * self._theta(t)) * (self.theta_end - self.theta_start)

    def reversed(self):
        return Arc(self.center, self.radius, self.theta_end, self.theta_start)


@dataclass(frozen=True)
class Lip:
    """Points pole - tau * e^{i tilt} -/+ i w e^{i tilt}, tau from t_start to t_end."""

    pole: complex
    t_start: float
    t_end: float
    side: str
    width: float = 0.0
    tilt: float = 0.0

    kind = "lip"

    def __post_init__(self):
        if self.side not in ("lower", "upper"):
            raise ValueError(f"side must be 'lower' or 'upper', got {self.side!r}")

    @property
    def _u(self):
        return complex(math.cos(self.tilt), math.sin(self.tilt))

    def point(self, t):
        tau = self.t_start + np.asarray(t, dtype=float) * (self.t_end - self.t_start)
        sign = -1.0 if self.side == "lower" else 1.0
        return self.pole - tau * self._u + sign * 1j * self.width * self._u

    def deriv(self, t):
        return np.full(np.shape(t), -(self.t_end - self.t_start) * self._u, dtype=np.complex128)

    def reversed(self):
        return replace(self, t_start=self.t_end, t_end=self.t_start)


@dataclass(frozen=True)
class Circle:
    """Circle around ``center`` with an opening of half-angle ``gap`` at angle pi + tilt."""

    center: complex
    radius: float
    ccw: bool = True
    gap: float = 0.0
    tilt: float = 0.0

    kind = "circle"

    def _angles(self):
        lo = -math.pi + self.tilt + self.gap
        hi = math.pi + self.tilt - self.gap
        return (lo, hi) if self.ccw else (hi, lo)

    def point(self, t):
        a, b = self._angles()
        return self.center + self.radius * np.exp(1j * (a + np.asarray(t, dtype=float) * (b - a)))

    def deriv(self, t):
        a, b = self._angles()
        th = a + np.asarray(t, dtype=float) * (b - a)
        return 1j * self.radius * np.exp(1j * th) * (b - a)

    def reversed(self):
        return replace(self, ccw=not self.ccw)


@dataclass(frozen=True)
class ContourSpec:
    R: float
    eps: float
    corridor_width: float
    poles: tuple = ()
    origin_indent: bool = False
    origin_eps: float | None = None
    tilts: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "poles", tuple(self.poles))
        object.__setattr__(self, "tilts", tuple(self.tilts) if self.tilts else (0.0,) * len(self.poles))
        if len(self.tilts) != len(self.poles):
            raise ContourError("tilts must match poles one-to-one")


@dataclass
class LemmaReport:
    parameters: list
    magnitudes: list
    fitted: float
    expected: float
    passed: bool
    name: str = ""
    values: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    @property
    def fitted_slope(self):
        return self.fitted

    @property
    def expected_slope(self):
        return self.expected


@dataclass
class SegmentIntegral:
    segment: object
    value: complex
    abs_error: float
    start_phase: float
    end_phase: float
    samples_t: np.ndarray = field(repr=False)
    samples_log: np.ndarray = field(repr=False)


@dataclass
class ResidualEstimate:
    value: complex
    error: float
    radii: list
    arc_values: list
    converged: bool
    note: str = ""


# -- contour construction ---------------------------------------------------


def _seg_point_distance(a, b, z):
    d = b - a
    if d == 0:
        return abs(z - a)
    t = ((z - a) * d.conjugate()).real / abs(d) ** 2
    t = min(1.0, max(0.0, t))
    return abs(z - (a + t * d))


def _attach(p, u, offset, w_dir, origin_eps):
    """tau at which a lip line leaves the left boundary (axis or origin indent)."""
    q = p + offset
    # axis hit: Re(q - tau u) = 0
    tau = q.real / u.real
    s = q - tau * u
    if origin_eps and abs(s) < origin_eps:
        proj = (q * u.conjugate()).real
        disc = proj**2 - abs(q) ** 2 + origin_eps**2
        tau = proj - math.sqrt(max(disc, 0.0))
        s = q - tau * u
    return tau, s


def build_contour(spec):
    """Ordered list of path segments for ``spec`` (see module docstring)."""
    R, eps, w = float(spec.R), float(spec.eps), float(spec.corridor_width)
    poles = list(spec.poles)
    eps0 = float(spec.origin_eps if spec.origin_eps is not None else eps) if spec.origin_indent else 0.0
    if poles:
        pmax = max(abs(p.location) for p in poles)
        if not R > pmax + 1:
            raise ContourError(f"outer radius {R} must exceed max pole modulus + 1 = {pmax + 1}")
        locs = [p.location for p in poles]
        for i in range(len(locs)):
            for j in range(i + 1, len(locs)):
                if abs(locs[i] - locs[j]) <= 2 * eps:
                    raise ContourError(f"eps={eps} too large for poles {locs[i]} and {locs[j]}")
        if not 0 < w < eps:
            raise ContourError("corridor width must satisfy 0 < width < eps")
        if eps0 and not w < eps0:
            raise ContourError("corridor width must be below the origin indent radius")
        for p in poles:
            if abs(p.location) <= eps + eps0:
                raise ContourError(f"pole {p.location} too close to the origin indent")
    corridors = []
    for p, tilt in zip(poles, spec.tilts):
        u = complex(math.cos(tilt), math.sin(tilt))
        loc = p.location
        tau_lo, s_lo = _attach(loc, u, -1j * w * u, -1, eps0)
        tau_hi, s_hi = _attach(loc, u, 1j * w * u, 1, eps0)
        tau_end = math.sqrt(eps**2 - w**2)
        gap = math.asin(w / eps)
        segs = (
            Lip(loc, tau_lo, tau_end, "lower", w, tilt),
            Circle(loc, eps, True, gap, tilt),
            Lip(loc, tau_end, tau_hi, "upper", w, tilt),
        )
        corridors.append((s_lo.imag, s_hi.imag, segs, loc, u, tau_lo))
    corridors.sort(key=lambda c: c[0])
    for k in range(1, len(corridors)):
        if corridors[k][0] <= corridors[k - 1][1]:
            raise CorridorCollisionError(
                f"corridors of poles {corridors[k - 1][3]} and {corridors[k][3]} overlap on the axis"
            )
    for _, _, segs, loc, u, tau0 in corridors:
        a, b = loc - tau0 * u, loc - eps * u
        for other in poles:
            z = other.location
            if z != loc and _seg_point_distance(a, b, z) <= eps + 2 * w:
                raise CorridorCollisionError(f"corridor of pole {loc} passes within eps of pole {z}")
    out = []
    y = -R
    for y_lo, y_hi, segs, *_ in corridors:
        out += _boundary(y, y_lo, eps0)
        out += list(segs)
        y = y_hi
    out += _boundary(y, R, eps0)
    out.append(Arc(0j, R, math.pi / 2, -math.pi / 2))
    return out


def _boundary(ya, yb, eps0):
    """Left-boundary pieces between heights ya < yb, indenting around 0."""
    if yb <= ya:
        return []
    if not eps0 or yb <= -eps0 or ya >= eps0:
        return [AxisRun(ya, yb)]
    out = []
    if ya < -eps0:
        out.append(AxisRun(ya, -eps0))
    lo, hi = max(ya, -eps0), min(yb, eps0)
    out.append(Arc(0j, eps0, math.asin(lo / eps0), math.asin(hi / eps0)))
    if yb > eps0:
        out.append(AxisRun(eps0, yb))
    return out


def reverse_path(segments):
    return [s.reversed() for s in reversed(segments)]


# -- segment integration ----------------------------------------------------


def _raw_log(model, s):
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        v = model.log_sensitivity(s)
    bad = ~np.isfinite(v)
    if bad.any():
        pt = complex(np.atleast_1d(s)[np.argmax(bad)])
        raise BranchPointError(f"log S undefined at s={pt:.6g} on the integration path", point=pt)
    return v


def _phase_bound(model, pts, t):
    """Upper bound on |change of arg S| over each interval [t_k, t_k+1].

    Uses |d arg S| <= sum_j w_j |ds| / |s - z_j| over the model's known
    singular points, with the chord standing in for the path piece.
    """
    zs, ws = model.singular_points()
    if zs.size == 0:
        return np.zeros(t.size - 1)
    a, b = pts[:-1, None], pts[1:, None]
    d = b - a
    dd = np.where(np.abs(d) == 0, 1.0, np.abs(d) ** 2)
    u = np.clip(((zs[None, :] - a) * np.conj(d)).real / dd, 0.0, 1.0)
    dist = np.abs(zs[None, :] - (a + u * d))
    with np.errstate(divide="ignore"):
        return (np.abs(d[:, 0]) * (ws[None, :] / dist).sum(axis=1))


def _phase_anchors(model, seg, anchor, n0=65, max_points=200_000):
    t = np.linspace(0.0, 1.0, n0)
    logs = _raw_log(model, seg.point(t))
    while True:
        raw = wrap_phase(logs.imag)
        steps = np.diff(raw)
        steps = (steps + np.pi) % (2 * np.pi) - np.pi
        bad = (np.abs(steps) >= np.pi / 2) | (_phase_bound(model, seg.point(t), t) >= np.pi / 2)
        bad &= np.diff(t) > 1e-14
        if not bad.any():
            break
        if t.size > max_points:
            raise BranchTrackingError(f"phase of S jumps by >= pi/2 on {seg} after maximal refinement")
        idx = np.flatnonzero(bad)
        mids = 0.5 * (t[idx] + t[idx + 1])
        t = np.insert(t, idx + 1, mids)
        logs = np.insert(logs, idx + 1, _raw_log(model, seg.point(mids)))
    raw = np.ascontiguousarray(wrap_phase(logs.imag))
    start = raw[0] if anchor is None else float(_kernels.unwrap_to_reference(raw[:1], anchor)[0])
    phases = _kernels.unwrap_sequence(raw, start)
    return t, logs.real + 1j * phases


def integrate_segment_full(model, seg, tol=1e-10, anchor_phase=None, abs_tol=None):
    """Integral of log S along ``seg`` with the phase continued from ``anchor_phase``.

    The default absolute tolerance is 1e-14 times the segment length.
    """
    t_anch, log_anch = _phase_anchors(model, seg, anchor_phase)
    if abs_tol is None:
        pts = seg.point(t_anch)
        abs_tol = 1e-14 * max(float(np.sum(np.abs(np.diff(pts)))), 1e-300)
    phi_anch = log_anch.imag

    def f(t):
        logs = _raw_log(model, seg.point(t))
        ref = np.interp(t, t_anch, phi_anch)
        phi = _kernels.unwrap_to_reference(wrap_phase(logs.imag), ref)
        return (logs.real + 1j * phi) * seg.deriv(t)

    res = adaptive_gk(f, [0.0, 1.0], abs_tol=abs_tol, rel_tol=tol, max_panels=50_000)
    if not res.converged:
        raise BranchTrackingError(f"quadrature on {seg} did not converge (err {res.abs_error:.3g})")
    return SegmentIntegral(seg, complex(res.value), res.abs_error, phi_anch[0], phi_anch[-1], t_anch, log_anch)


def integrate_segment(model, seg, tol=1e-10, anchor_phase=None):
    """Integral of log S(s) ds along one segment (complex)."""
    return integrate_segment_full(model, seg, tol, anchor_phase).value


def integrate_path(model, segments, tol=1e-10, anchor_phase=None):
    """Integrate consecutive segments, threading the phase of log S between them."""
    out = []
    phase = anchor_phase
    for seg in segments:
        r = integrate_segment_full(model, seg, tol, phase)
        out.append(r)
        phase = r.end_phase
    return out


# -- contour defaults -------------------------------------------------------


def default_contour_spec(model, R=None, eps=None, width=None, poles=None):
    poles = list(model.rhp_zeros() if poles is None else poles)
    feats = np.asarray(model.features())
    scale = 1.0 + (float(np.max(np.abs(feats))) if feats.size else 0.0)
    if poles:
        scale = max(scale, 1.0 + max(abs(p.location) for p in poles))
    R = 1e3 * scale if R is None else R
    if eps is None:
        sep = [abs(a.location - b.location) for i, a in enumerate(poles) for b in poles[i + 1 :]]
        sep += [abs(a.location) for a in poles]
        eps = min([1e-4 * scale] + [0.25 * d for d in sep])
    width = 0.1 * eps if width is None else width
    return ContourSpec(R=R, eps=eps, corridor_width=width, poles=tuple(poles), origin_indent=model.origin_singular)


def closure_check(model, spec, tol=1e-10, axis_value=None, details=False):
    """Sum of all segment integrals; ~0 by Cauchy's theorem.

    ``axis_value`` replaces the integrated axis runs (phase is still tracked).
    """
    segments = build_contour(spec) if isinstance(spec, ContourSpec) else list(spec)
    results = integrate_path(model, segments, tol)
    total = 0j
    for r in results:
        if axis_value is not None and r.segment.kind == "axis":
            continue
        total += r.value
    if axis_value is not None:
        total += axis_value
    return (total, results) if details else total


def contour_samples_csv(results):
    """CSV text with header segment_id,s_re,s_im,logS_re,logS_im."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["segment_id", "s_re", "s_im", "logS_re", "logS_im"])
    for k, r in enumerate(results):
        pts = r.segment.point(r.samples_t)
        for s, v in zip(pts, r.samples_log):
            writer.writerow([k, repr(float(s.real)), repr(float(s.imag)), repr(float(v.real)), repr(float(v.imag))])
    return buf.getvalue()


# -- lemma verifiers --------------------------------------------------------


def _arc_integral(model, R, tol=1e-11):
    arc = Arc(0j, R, math.pi / 2, -math.pi / 2)
    return integrate_segment_full(model, arc, tol, None).value


def _model_series(model):
    try:
        return model.asymptotic_log_series(12.0)
    except (ModelError, NotImplementedError):
        return None


def arc_term(c, q, R):
    """Closed-form integral of c s^-q over the arc |s| = R, theta: pi/2 -> -pi/2."""
    if abs(q - 1.0) < 1e-12:
        return -1j * math.pi * c
    k = 1.0 - q
    return c * R**k * (-2j * math.sin(0.5 * math.pi * k)) / k


def gamma_R_residual(model, R_list=None, tol=1e-11):
    """Extrapolate the outer-arc integral of log S to R -> infinity.

    When the model has an expansion log S ~ sum c s^-q, the closed-form arc
    integrals of its decaying terms (q > 1) are subtracted first, leaving a
    remainder that is flat in R up to truncation and quadrature error.
    Otherwise a least-squares fit in powers 1/R, 1/R^2 is used.
    """
    if R_list is None:
        feats = np.asarray(model.features())
        scale = 1.0 + (float(np.max(np.abs(feats))) if feats.size else 0.0)
        R_list = [scale * 1e2, scale * 1e3, scale * 1e4]
    R = np.asarray(sorted(R_list), dtype=float)
    if R.size < 2:
        raise ValueError("need at least two radii")
    vals = np.array([_arc_integral(model, r, tol) for r in R])
    series = _model_series(model)
    floor = 1e-9 * max(1.0, float(np.max(np.abs(vals))))
    if series is not None:
        if any(q < 1 - 1e-9 for q, c in series if abs(c) > 0):
            return ResidualEstimate(complex(vals[-1]), math.inf, R.tolist(), vals.tolist(), False, "arc integral diverges")
        known = np.array([sum(arc_term(c, q, r) for q, c in series if q > 1 + 1e-12) for r in R])
        rem = vals - known
        err = float(np.max(np.abs(rem - rem[-1])))
        return ResidualEstimate(complex(rem[-1]), err, R.tolist(), vals.tolist(), bool(err <= max(floor, 1e-6 * abs(rem[-1]))))
    A = np.column_stack([np.ones(R.size)] + [R**-k for k in range(1, min(3, R.size))]).astype(np.complex128)
    coef, *_ = np.linalg.lstsq(A, vals, rcond=None)
    best = complex(coef[0])
    err = abs(best - complex(vals[-1]))
    return ResidualEstimate(best, float(err), R.tolist(), vals.tolist(), bool(err <= max(1e-3 * abs(best), floor)), "power fit")


def verify_lemma_arc(model, R_list=(1e2, 1e3, 1e4), slope_tol=0.1, tol=1e-11):
    """Fit the decay of |int_arc log S| against R; expected slope alpha + n - m + 1.

    alpha is the top controller order actually present (see
    ``RationalFractal.top_controller_order``).  A non-negative expected slope
    means the arc term does not vanish and the check fails by construction.
    """
    if len(R_list) < 3:
        raise ValueError("need at least three radii for a slope fit")
    if not isinstance(model, RationalFractal):
        raise TypeError("verify_lemma_arc needs a RationalFractal model")
    R = np.asarray(R_list, dtype=float)
    vals = [_arc_integral(model, r, tol) for r in R]
    mags = np.abs(vals)
    # with k1 = 0 the loop gain decays with the next controller term, not s^alpha
    order = model.top_controller_order
    expected = order + model.plant.n - model.plant.m + 1
    decaying = expected < 0
    with np.errstate(divide="ignore"):
        slope = float(np.polyfit(np.log(R), np.log(mags), 1)[0])
    passed = bool(decaying and abs(slope - expected) <= slope_tol)
    extra = {"effective_order": order}
    if not decaying:
        est = gamma_R_residual(model, list(R), tol)
        extra["limit_estimate"] = est.value
        extra["limit_error"] = est.error
    return LemmaReport(R.tolist(), mags.tolist(), slope, expected, passed, "arc", vals, extra)


def _eps_ln_fit(eps, mags):
    x = np.log(eps * np.log(1.0 / eps))
    return float(np.polyfit(x, np.log(mags), 1)[0])


def _small_circle_report(name, eps, vals, exponent_tol):
    mags = np.abs(vals)
    decreasing = bool(np.all(np.diff(mags) < 0))
    k = _eps_ln_fit(eps, mags)
    passed = decreasing and abs(k - 1.0) <= exponent_tol
    return LemmaReport(eps.tolist(), mags.tolist(), k, 1.0, passed, name, list(vals), {"decreasing": decreasing})


def verify_lemma_pole_circle(model, pole, eps_list=(1e-2, 1e-3, 1e-4), exponent_tol=0.2, tol=1e-11):
    """int log S over shrinking counterclockwise circles around a zero of S."""
    loc = pole.location if isinstance(pole, PoleRecord) else complex(pole)
    eps = np.asarray(sorted(eps_list, reverse=True), dtype=float)
    vals = [integrate_segment(model, Circle(loc, e, True), tol) for e in eps]
    return _small_circle_report("pole_circle", eps, vals, exponent_tol)


def verify_lemma_origin(model, eps_list=(1e-2, 1e-3, 1e-4), exponent_tol=0.2, tol=1e-11):
    """int log S over the right half eps-semicircle at the origin."""
    eps = np.asarray(sorted(eps_list, reverse=True), dtype=float)
    vals = [integrate_segment(model, Arc(0j, e, -math.pi / 2, math.pi / 2), tol) for e in eps]
    return _small_circle_report("origin", eps, vals, exponent_tol)


def verify_limit_semicircle(model, centre, eps_list=(1e-2, 1e-3, 1e-4), tol=1e-11):
    """Right half eps-semicircle around an on-axis point (a limit point of zeros)."""
    eps = np.asarray(sorted(eps_list, reverse=True), dtype=float)
    vals = [integrate_segment(model, Arc(complex(centre), e, -math.pi / 2, math.pi / 2), tol) for e in eps]
    mags = np.abs(vals)
    decreasing = bool(np.all(np.diff(mags) < 0))
    slope = float(np.polyfit(np.log(eps), np.log(mags), 1)[0])
    return LemmaReport(eps.tolist(), mags.tolist(), slope, 1.0, decreasing, "limit_semicircle", list(vals))


def corridor_pair(model, pole, width, eps, tol=1e-11, tilt=0.0):
    """Lower-lip + upper-lip integral at finite width, phase threaded round the eps-circle."""
    loc = pole.location if isinstance(pole, PoleRecord) else complex(pole)
    u = complex(math.cos(tilt), math.sin(tilt))
    tau_lo, _ = _attach(loc, u, -1j * width * u, -1, 0.0)
    tau_hi, _ = _attach(loc, u, 1j * width * u, 1, 0.0)
    tau_end = math.sqrt(eps**2 - width**2)
    segs = [
        Lip(loc, tau_lo, tau_end, "lower", width, tilt),
        Circle(loc, eps, True, math.asin(width / eps), tilt),
        Lip(loc, tau_end, tau_hi, "upper", width, tilt),
    ]
    lower, _, upper = integrate_path(model, segs, tol)
    return lower.value + upper.value


def _default_eps(model, loc):
    others = [abs(z - loc) for z in np.asarray(model.features()) if abs(z - loc) > 1e-12]
    others += [abs(p.location - loc) for p in model.rhp_zeros() if abs(p.location - loc) > 1e-12]
    return min([1e-4 * max(1.0, loc.real)] + [0.25 * d for d in others])


def verify_corridor_pair(model, pole, widths=None, eps=None, rel_tol=1e-3, tol=1e-11, tilt=0.0):
    """Extrapolate the corridor-pair integral to zero width.

    Expected limit: -2 pi i d Re(p) (magnitude 2 pi d Re(p)).
    """
    if not isinstance(pole, PoleRecord):
        pole = PoleRecord(pole, 1.0)
    loc = pole.location
    eps = _default_eps(model, loc) if eps is None else float(eps)
    widths = np.asarray(widths if widths is not None else [0.2 * eps, 0.1 * eps, 0.05 * eps], dtype=float)
    if np.any(widths >= eps) or np.any(widths <= 0):
        raise ContourError("corridor widths must lie in (0, eps)")
    vals = np.array([corridor_pair(model, pole, w, eps, tol, tilt) for w in widths])
    if widths.size >= 2:
        A = np.column_stack((np.ones(widths.size), widths)).astype(np.complex128)
        coef, *_ = np.linalg.lstsq(A, vals, rcond=None)
        limit = complex(coef[0])
    else:
        limit = complex(vals[0])
    expected = 2.0 * math.pi * pole.order * loc.real
    mag = abs(limit)
    passed = bool(abs(mag - expected) <= rel_tol * expected and limit.imag < 0)
    return LemmaReport(
        widths.tolist(), np.abs(vals).tolist(), mag, expected, passed, "corridor", list(vals), {"limit": limit, "eps": eps}
    )
