"""Synthetic sensitivities with many right-half-plane zeros.

A synthetic sensitivity is a truncated product of Blaschke factors
((s - p_j) / (s + conj p_j))^{d_j} times a rational outer function g(s) that
has no zeros or poles in the closed right half plane.  The Blaschke factors
are all-pass on the imaginary axis, so the Bode integral of the product is
that of g alone, while the zero set seen by contour arguments is {p_j}.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .bodeint import bode_integral, theoretical_value
from .contour import corridor_pair, gamma_R_residual, verify_limit_semicircle
from .errors import ConfigurationError, DomainError, ModelError
from .funcmodel import AXIS_TOL, LoopModel, PoleRecord


@dataclass(frozen=True)
class OuterSpec:
    """g(s) = gain * prod(s - z) / prod(s - q) with every z, q in Re < 0."""

    zeros: tuple = ()
    poles: tuple = ()
    gain: complex = 1.0

    def __post_init__(self):
        object.__setattr__(self, "zeros", tuple(complex(z) for z in self.zeros))
        object.__setattr__(self, "poles", tuple(complex(q) for q in self.poles))
        for z in self.zeros + self.poles:
            if not z.real < -AXIS_TOL:
                raise ModelError(f"outer zeros and poles must lie in Re < 0, got {z}")
        if len(self.zeros) > len(self.poles):
            raise ModelError("outer function must stay finite at infinity (more zeros than poles)")
        if self.gain == 0:
            raise ModelError("outer gain must be nonzero")

    @classmethod
    def trivial(cls):
        return cls()

    @classmethod
    def first_order(cls, a, b):
        """(s + a) / (s + b)."""
        return cls(zeros=(-a,), poles=(-b,))

    def log(self, s):
        s = np.asarray(s, dtype=np.complex128)
        out = np.full(s.shape, complex(np.log(complex(self.gain))))
        for z in self.zeros:
            out = out + np.log(s - z)
        for q in self.poles:
            out = out - np.log(s - q)
        return out

    def series(self, q_max):
        """log g(s) ~ sum c_k s^-k at infinity; requires equal zero and pole counts."""
        if len(self.zeros) != len(self.poles):
            raise ModelError("outer function vanishes at infinity; log g is unbounded")
        coeffs = {0: complex(np.log(complex(self.gain)))}
        for k in range(1, int(q_max) + 1):
            c = sum(q**k for q in self.poles) - sum(z**k for z in self.zeros)
            coeffs[k] = c / k
        return coeffs


@dataclass(frozen=True)
class PoleSequenceFamily:
    name: str
    kind: str
    rule: object = field(repr=False, compare=False)
    limit_point: complex | None = None
    real_sum_limit: float | None = None

    def point(self, j):
        return complex(self.rule(j))


FAMILIES = {
    "A": PoleSequenceFamily("A", "no_limit_point", lambda j: 1.0 / j**2 + 1j * j, None, math.pi**2 / 6),
    "B": PoleSequenceFamily("B", "axis_limit_point", lambda j: 1.0 / j**2 + 1j * (1.0 - 1.0 / j), 1j, math.pi**2 / 6),
    "C": PoleSequenceFamily("C", "offaxis_limit_point", lambda j: 0.5 + 1j / j, 0.5 + 0j, None),
}


def _family(family):
    if isinstance(family, PoleSequenceFamily):
        return family
    try:
        return FAMILIES[str(family).upper()]
    except KeyError:
        raise ModelError(f"unknown family {family!r}; expected one of {sorted(FAMILIES)}") from None


def generate_sequence(family, N):
    """p_1..p_N of a family, sorted by nondecreasing modulus (stable in j)."""
    if int(N) < 1:
        raise ModelError("N must be at least 1")
    fam = _family(family)
    pts = [fam.point(j) for j in range(1, int(N) + 1)]
    pts.sort(key=abs)
    return [PoleRecord(p, 1.0) for p in pts]


class SyntheticSensitivity(LoopModel):
    """S(s) = g(s) * prod_j B_j(s)^{d_j}.

    ``form="blaschke"`` uses B_j = (s - p_j)/(s + conj p_j); ``form="raw"``
    uses B_j = s - p_j and may only be evaluated inside ``domain_radius``.
    """

    def __init__(self, factors, outer=None, form="blaschke", domain_radius=None, limit_points=()):
        if form not in ("blaschke", "raw"):
            raise ConfigurationError(f"form must be 'blaschke' or 'raw', got {form!r}")
        if form == "raw" and domain_radius is None:
            raise ConfigurationError("the raw product is unbounded at infinity; give a finite domain_radius")
        self.factors = [f if isinstance(f, PoleRecord) else PoleRecord(complex(f), 1.0) for f in factors]
        self.outer = OuterSpec.trivial() if outer is None else outer
        self.form = form
        self.domain_radius = None if domain_radius is None else float(domain_radius)
        self._limit_points = tuple(complex(z) for z in limit_points)
        self._zeros = np.array([f.location for f in self.factors], dtype=np.complex128)
        self._orders = np.array([f.order for f in self.factors], dtype=np.float64)

    def __repr__(self):
        return f"SyntheticSensitivity(n_factors={len(self.factors)}, form={self.form!r}, outer={self.outer})"

    @property
    def limit_points(self):
        return self._limit_points

    def _check_domain(self, s):
        if self.domain_radius is not None and np.any(np.abs(s) > self.domain_radius):
            raise DomainError(f"raw product evaluated outside |s| <= {self.domain_radius}")

    def log_sensitivity(self, s):
        s = np.asarray(s, dtype=np.complex128)
        flat = np.ascontiguousarray(s.ravel())
        if self.form == "raw":
            self._check_domain(flat)
            with np.errstate(divide="ignore"):
                prod = (self._orders[None, :] * np.log(flat[:, None] - self._zeros[None, :])).sum(axis=1)
        elif self._zeros.size:
            with np.errstate(divide="ignore", invalid="ignore"):
                prod = _kernels.blaschke_log(flat, self._zeros, self._orders)
        else:
            prod = np.zeros(flat.shape, dtype=np.complex128)
        return (prod + self.outer.log(flat)).reshape(s.shape)

    def sensitivity(self, s):
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            return np.exp(self.log_sensitivity(s))

    def rhp_zeros(self):
        return list(self.factors)

    def features(self):
        return np.array([0j, *self._zeros, *self.outer.zeros, *self.outer.poles, *self._limit_points])

    def singular_points(self):
        outer = [*self.outer.zeros, *self.outer.poles]
        if self.form == "raw":
            pts = [*self._zeros, *outer]
            wts = [*self._orders, *([1.0] * len(outer))]
        else:
            pts = [*self._zeros, *(-np.conj(self._zeros)), *outer]
            wts = [*self._orders, *self._orders, *([1.0] * len(outer))]
        return np.array(pts, dtype=np.complex128), np.array(wts, dtype=float)

    def asymptotic_log_series(self, q_max=12.0):
        if self.form == "raw":
            raise ModelError("raw product has no expansion at infinity")
        coeffs = self.outer.series(q_max)
        for p, d in zip(self._zeros, self._orders):
            pc = np.conj(p)
            for k in range(1, int(q_max) + 1):
                coeffs[k] = coeffs.get(k, 0j) + d * ((-pc) ** k - p**k) / k
        return [(float(k), complex(c)) for k, c in sorted(coeffs.items()) if abs(c) > 0]


def build_synthetic(seq, outer=None, form="blaschke", domain_radius=None, limit_points=()):
    return SyntheticSensitivity(seq, outer, form, domain_radius, limit_points)


def matched_outer_for_theorem2(seq):
    """(s + a)/(s + 1) with a = 1 + 2 sum d Re p, so that I = 4 pi sum d Re p."""
    total = math.fsum(p.order * p.location.real for p in seq)
    return OuterSpec.first_order(1.0 + 2.0 * total, 1.0)


def partial_real_sum(seq):
    return math.fsum(p.order * p.location.real for p in seq)


# -- harnesses ------------------------------------------------------------


@dataclass
class TheoremRow:
    N: int
    numeric: float
    theoretical: float
    rel_error: float
    partial_sum: float
    truncation_residual: float | None
    estimated_abs_error: float


@dataclass
class TheoremReport:
    family: str
    rows: list
    max_rel_error: float
    sums_monotone: bool
    passed: bool
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        d = {
            "family": self.family,
            "rows": [r.__dict__ for r in self.rows],
            "max_rel_error": self.max_rel_error,
            "sums_monotone": self.sums_monotone,
            "passed": self.passed,
        }
        d["extra"] = json.loads(json.dumps(self.extra, default=_jsonable))
        return d


def _jsonable(x):
    if isinstance(x, complex | np.complexfloating):
        return [float(x.real), float(x.imag)]
    if isinstance(x, np.generic):
        return x.item()
    if hasattr(x, "__dict__"):
        return x.__dict__
    raise TypeError(type(x))


def _matched_rows(fam, N_list, rel_tol):
    rows = []
    for N in N_list:
        seq = generate_sequence(fam, N)
        model = build_synthetic(seq, matched_outer_for_theorem2(seq), limit_points=_lp(fam))
        rep = bode_integral(model, rel_tol=min(rel_tol, 1e-6))
        theo = theoretical_value(seq)
        s = partial_real_sum(seq)
        resid = None if fam.real_sum_limit is None else fam.real_sum_limit - s
        rows.append(
            TheoremRow(int(N), rep.numeric_value, theo, abs(rep.numeric_value - theo) / abs(theo), s, resid,
                       rep.estimated_abs_error)
        )
    return rows


def _lp(fam):
    return () if fam.limit_point is None else (fam.limit_point,)


def verify_theorem_no_limit(family="A", N_list=(10, 25, 50), tol=5e-3, corollary_check=True):
    """Numeric Bode integral of the matched composite against 4 pi sum d Re p."""
    fam = _family(family)
    if fam.kind != "no_limit_point":
        raise ModelError(f"family {fam.name} has a limit point")
    rows = _matched_rows(fam, N_list, tol)
    sums = [r.partial_sum for r in rows]
    monotone = all(b >= a for a, b in zip(sums, sums[1:]))
    bounded = fam.real_sum_limit is None or all(s <= fam.real_sum_limit for s in sums)
    max_err = max(r.rel_error for r in rows)
    extra = {"bounded_by_limit": bounded}
    ok = max_err < tol and monotone and bounded
    if corollary_check:
        cor = corollary_reconciliation(fam, max(N_list))
        extra["corollary"] = cor
        ok = ok and cor["passed"]
    return TheoremReport(fam.name, rows, max_err, monotone, bool(ok), extra)


def verify_theorem_limit(family="B", N_list=(10, 25, 50), tol=5e-3, eps_list=(1e-2, 1e-3, 1e-4)):
    """As the no-limit harness plus the eps-semicircle at the on-axis limit point."""
    fam = _family(family)
    if fam.kind != "axis_limit_point":
        raise ModelError(f"family {fam.name} has no limit point on the imaginary axis")
    rows = _matched_rows(fam, N_list, tol)
    sums = [r.partial_sum for r in rows]
    monotone = all(b >= a for a, b in zip(sums, sums[1:]))
    max_err = max(r.rel_error for r in rows)
    seq = generate_sequence(fam, max(N_list))
    model = build_synthetic(seq, matched_outer_for_theorem2(seq), limit_points=_lp(fam))
    semi = verify_limit_semicircle(model, fam.limit_point, eps_list)
    ok = max_err < tol and monotone and semi.passed
    extra = {"semicircle_eps": semi.parameters, "semicircle_magnitudes": semi.magnitudes}
    return TheoremReport(fam.name, rows, max_err, monotone, bool(ok), extra)


def corollary_reconciliation(family, N, rel_tol=1e-2, abs_tol=1e-2):
    """Pure Blaschke product: I ~ 0 and 4 pi sum + 2i * arc limit ~ 0."""
    fam = _family(family)
    seq = generate_sequence(fam, N)
    model = build_synthetic(seq, limit_points=_lp(fam))
    rep = bode_integral(model)
    est = gamma_R_residual(model)
    rep.reconcile(est.value)
    theo = rep.theoretical_value
    combo = theo + 2j * est.value
    ok = abs(rep.numeric_value) < abs_tol and abs(combo) < rel_tol * abs(theo)
    return {
        "N": int(N),
        "numeric": rep.numeric_value,
        "theoretical": theo,
        "residual": est.value,
        "residual_error": est.error,
        "combination": combo,
        "passed": bool(ok),
    }


@dataclass
class DivergenceReport:
    family: str
    N_list: list
    sums: list
    bounds: list
    ratios: list
    per_term: dict
    verdict: str
    passed: bool
    contrast: dict = field(default_factory=dict)

    def to_dict(self):
        return json.loads(json.dumps(self.__dict__, default=_jsonable))


def corridor_magnitudes(seq, model=None, eps=None, width_fracs=(0.2, 0.1, 0.05)):
    """Zero-width extrapolated |corridor pair| for each factor of ``seq``."""
    model = build_synthetic(seq) if model is None else model
    locs = np.array([p.location for p in seq])
    if eps is None:
        sep = np.abs(locs[:, None] - locs[None, :])
        sep[np.diag_indices_from(sep)] = np.inf
        eps = min(1e-4, 0.25 * float(sep.min()) if locs.size > 1 else 1e-4)
    widths = np.asarray(width_fracs) * eps
    A = np.column_stack((np.ones(widths.size), widths)).astype(np.complex128)
    out = []
    for p in seq:
        vals = np.array([corridor_pair(model, p, w, eps) for w in widths])
        coef, *_ = np.linalg.lstsq(A, vals, rcond=None)
        out.append(abs(complex(coef[0])))
    return np.array(out), eps


def demonstrate_divergence(family="C", N_list=(10, 20, 40), margin=0.1, ratio_tol=0.1, contrast_family="B"):
    """Corridor-pair sums grow linearly when the limit point is off the axis."""
    fam = _family(family)
    if fam.kind != "offaxis_limit_point":
        raise ModelError(f"family {fam.name} has no off-axis limit point")
    re_star = fam.limit_point.real
    N_list = sorted(int(n) for n in N_list)
    sums, bounds, per_term = [], [], {}
    for N in N_list:
        seq = generate_sequence(fam, N)
        mags, _ = corridor_magnitudes(seq)
        per_term[N] = mags.tolist()
        sums.append(float(mags.sum()))
        bounds.append(2.0 * math.pi * (re_star - margin) * N)
    ratios = [b / a for a, b in zip(sums, sums[1:])]
    ratio_ok = all(abs(r - n2 / n1) <= ratio_tol * (n2 / n1) for r, n1, n2 in zip(ratios, N_list, N_list[1:]))
    bound_ok = all(s > b for s, b in zip(sums, bounds))
    contrast = {}
    if contrast_family is not None:
        cfam = _family(contrast_family)
        c_sums = []
        for N in N_list:
            mags, _ = corridor_magnitudes(generate_sequence(cfam, N))
            c_sums.append(float(mags.sum()))
        contrast = {
            "family": cfam.name,
            "sums": c_sums,
            "limit": 2.0 * math.pi * cfam.real_sum_limit if cfam.real_sum_limit else None,
            "ratios": [b / a for a, b in zip(c_sums, c_sums[1:])],
        }
    passed = bound_ok and ratio_ok
    verdict = "divergent" if passed else "inconclusive"
    return DivergenceReport(fam.name, N_list, sums, bounds, ratios, per_term, verdict, bool(passed), contrast)


# -- JSON ---------------------------------------------------------------------


def synthetic_from_dict(doc):
    """Build a model from {"family": "A"|"B"|"C", "N": int, "outer": "matched"|{"a","b"}|"none"}."""
    if not isinstance(doc, dict):
        raise ModelError("family document must be a JSON object")
    for key in ("family", "N"):
        if key not in doc:
            raise ModelError(f"family document is missing {key!r}")
    fam = _family(doc["family"])
    N = doc["N"]
    if not isinstance(N, int) or isinstance(N, bool) or N < 1:
        raise ModelError(f"N must be a positive integer, got {N!r}")
    seq = generate_sequence(fam, N)
    outer = doc.get("outer", "matched")
    if outer == "matched":
        spec = matched_outer_for_theorem2(seq)
    elif outer in (None, "none"):
        spec = OuterSpec.trivial()
    elif isinstance(outer, dict):
        try:
            spec = OuterSpec.first_order(float(outer["a"]), float(outer["b"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise ModelError(f"outer must give numeric 'a' and 'b': {exc}") from None
    else:
        raise ModelError(f"outer must be 'matched', 'none' or {{'a':..,'b':..}}, got {outer!r}")
    form = doc.get("form", "blaschke")
    return build_synthetic(seq, spec, form=form, domain_radius=doc.get("domain_radius"), limit_points=_lp(fam)), fam

