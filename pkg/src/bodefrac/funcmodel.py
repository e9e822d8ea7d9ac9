"""Plants, fractional PID controllers and sensitivity evaluation.

All powers use the principal branch ``s**a = exp(a * (ln|s| + i Arg s))`` with
``Arg s`` in (-pi, pi]; the cut lies on the negative real axis, so every power
is continuous on the closed right half plane minus the origin.
"""

import json
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import _kernels
from .errors import BranchPointError, DomainError, ModelError, SingularityError

AXIS_TOL = 1e-9
SINGULAR_RTOL = 1e-12


def _c1d(s):
    return np.ascontiguousarray(np.atleast_1d(np.asarray(s, dtype=np.complex128)).ravel())


def _fix_signed_zero(s):
    # complex(-1, -0.0) has angle -pi; the principal branch wants +pi there
    return np.where(s.imag == 0, s.real + 0j, s)


def principal_log(s):
    s = _fix_signed_zero(np.asarray(s, dtype=np.complex128))
    return np.log(s)


def principal_power(s, a):
    """``s**a`` on the principal branch; vectorised over ``s``.

    ``0**a`` is 0 for ``a > 0`` and a :class:`DomainError` otherwise.
    """
    scalar = np.ndim(s) == 0
    s = _fix_signed_zero(np.asarray(s, dtype=np.complex128))
    a = float(a)
    zero = s == 0
    if zero.any():
        if a <= 0:
            raise DomainError(f"0 ** {a} is undefined (exponent must be positive)")
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.exp(a * np.log(np.where(zero, 1.0, s)))
    out = np.where(zero, 0.0, out)
    return complex(out) if scalar else out


def wrap_phase(phi):
    """Map phases into (-pi, pi]."""
    out = np.pi - np.mod(np.pi - np.asarray(phi, dtype=float), 2.0 * np.pi)
    return out


class Polynomial:
    """Complex polynomial, coefficients in ascending degree."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        c = np.atleast_1d(np.asarray(coeffs, dtype=np.complex128)).copy()
        if c.ndim != 1 or c.size == 0:
            raise ModelError("polynomial needs a non-empty 1-D coefficient list")
        if not np.all(np.isfinite(c)):
            raise ModelError("polynomial coefficients must be finite")
        nz = np.flatnonzero(c)
        c = c[: nz[-1] + 1] if nz.size else c[:1] * 0
        c.setflags(write=False)
        self.coeffs = c

    @classmethod
    def from_roots(cls, roots, lead=1.0):
        c = np.array([lead], dtype=np.complex128)
        for r in roots:
            c = np.concatenate(([0j], c)) - r * np.concatenate((c, [0j]))
        return cls(c)

    @property
    def is_zero(self):
        return self.coeffs.size == 1 and self.coeffs[0] == 0

    @property
    def degree(self):
        return -1 if self.is_zero else self.coeffs.size - 1

    @property
    def leading(self):
        return complex(self.coeffs[-1])

    def derivative(self):
        if self.coeffs.size == 1:
            return Polynomial([0.0])
        return Polynomial(self.coeffs[1:] * np.arange(1, self.coeffs.size))

    def __call__(self, s):
        scalar = np.ndim(s) == 0
        x = _c1d(s)
        out = _kernels.horner(self.coeffs, x)
        return complex(out[0]) if scalar else out.reshape(np.shape(s))

    def scale(self, s):
        """sum |a_l| |s|^l, the natural magnitude for relative tests."""
        r = np.abs(np.asarray(s, dtype=np.complex128))
        out = np.zeros(np.shape(r))
        for c in np.abs(self.coeffs)[::-1]:
            out = out * r + c
        return out

    def __eq__(self, other):
        return isinstance(other, Polynomial) and np.array_equal(self.coeffs, other.coeffs)

    def __hash__(self):
        return hash(self.coeffs.tobytes())

    def __repr__(self):
        return f"Polynomial({self.coeffs.tolist()})"

    def to_pairs(self):
        return [[float(c.real), float(c.imag)] for c in self.coeffs]

    @classmethod
    def from_pairs(cls, pairs):
        try:
            coeffs = [complex(float(p[0]), float(p[1])) if isinstance(p, (list, tuple)) else complex(p) for p in pairs]
        except (TypeError, ValueError, IndexError) as exc:
            raise ModelError(f"bad coefficient list {pairs!r}: {exc}") from None
        return cls(coeffs)


@dataclass(frozen=True)
class RationalPlant:
    num: Polynomial
    den: Polynomial

    def __post_init__(self):
        if self.den.is_zero:
            raise ModelError("plant denominator is identically zero")

    @property
    def n(self):
        return self.num.degree

    @property
    def m(self):
        return self.den.degree


@dataclass(frozen=True)
class FractionalPID:
    """K(s) = k1 s^alpha + k0 + km1 / s^beta."""

    k1: float
    k0: float
    km1: float
    alpha: float
    beta: float

    def __post_init__(self):
        for name in ("k1", "k0", "km1", "alpha", "beta"):
            v = getattr(self, name)
            if isinstance(v, complex) or not math.isfinite(float(v)):
                raise ModelError(f"{name} must be a finite real number, got {v!r}")
            object.__setattr__(self, name, float(v))
        if not 0.0 < self.alpha < 2.0:
            raise ModelError(f"derivative order alpha={self.alpha} violates 0 < alpha < 2")
        if not 0.0 < self.beta < 2.0:
            raise ModelError(f"integral order beta={self.beta} violates 0 < beta < 2")

    def __call__(self, s):
        return self.k1 * principal_power(s, self.alpha) + self.k0 + self.km1 * principal_power(s, -self.beta)


@dataclass(frozen=True)
class PoleRecord:
    """An open right-half-plane zero of S (open-loop RHP pole) with order d."""

    location: complex
    order: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "location", complex(self.location))
        object.__setattr__(self, "order", float(self.order))
        if not self.location.real > AXIS_TOL:
            raise ModelError(f"pole {self.location} is not in the open right half plane")
        if not self.order > 0:
            raise ModelError(f"pole order must be positive, got {self.order}")


class LoopModel:
    """Interface shared by every sensitivity source.

    Subclasses provide ``sensitivity`` (S), ``log_sensitivity`` (log S on some
    branch; callers fix the imaginary part), ``rhp_zeros`` (the p_j with their
    orders), ``features`` (points where S varies quickly), and
    ``asymptotic_log_series`` (log S ~ sum c s^-q at infinity).
    """

    origin_singular = False

    def sensitivity(self, s):
        raise NotImplementedError

    def log_sensitivity(self, s):
        return principal_log(self.sensitivity(s))

    def ln_abs_sq(self, s):
        return 2.0 * self.log_sensitivity(s).real

    def rhp_zeros(self):
        raise NotImplementedError

    def features(self):
        return np.array([0j])

    def asymptotic_log_series(self, q_max=12.0):
        raise NotImplementedError

    def singular_points(self):
        """Known zeros/poles/branch points of S with weights bounding |d arg S| ~ w/|s - z|."""
        return np.zeros(0, dtype=np.complex128), np.zeros(0)

    @property
    def limit_points(self):
        return ()


def _clog1p(z):
    """Principal log(1 + z), accurate for small |z|."""
    z = np.asarray(z, dtype=np.complex128)
    small = np.abs(z) < 0.5
    out = np.empty(z.shape, dtype=np.complex128)
    zs = z[small]
    out[small] = 0.5 * np.log1p(2.0 * zs.real + zs.real**2 + zs.imag**2) + 1j * np.arctan2(zs.imag, 1.0 + zs.real)
    with np.errstate(divide="ignore", invalid="ignore"):
        out[~small] = principal_log(1.0 + z[~small])
    return out


class RationalFractal(LoopModel):
    """Rational plant N/D in unity feedback with a fractional PID."""

    def __init__(self, plant, pid):
        self.plant = plant
        self.pid = pid

    def __repr__(self):
        return f"RationalFractal(num={self.plant.num.coeffs.tolist()}, den={self.plant.den.coeffs.tolist()}, pid={self.pid})"

    def __eq__(self, other):
        return isinstance(other, RationalFractal) and self.plant == other.plant and self.pid == other.pid

    __hash__ = None

    @property
    def degree_condition_holds(self):
        return self.plant.m > self.pid.alpha + self.plant.n + 1

    @property
    def top_controller_order(self):
        """Largest controller exponent with a nonzero gain (alpha unless k1 = 0)."""
        p = self.pid
        for k, e in ((p.k1, p.alpha), (p.k0, 0.0), (p.km1, -p.beta)):
            if k != 0:
                return e
        return -math.inf

    @property
    def integral_action(self):
        return self.pid.km1 != 0.0

    @cached_property
    def origin_singular(self):
        return self.integral_action or self.plant.den.coeffs[0] == 0

    # -- characteristic function -------------------------------------------
    # With integral action the canonical denominator is the full
    # chi = D s^b + N (k1 s^(a+b) + k0 s^b + km1).  Without it the common
    # factor s^b is divided out so chi stays nonzero at the origin.

    def _controller_terms(self, s):
        p = self.pid
        if self.integral_action:
            sb = principal_power(s, p.beta)
            sab = principal_power(s, p.alpha + p.beta)
            return sb, p.k1 * sab + p.k0 * sb + p.km1
        sa = principal_power(s, p.alpha)
        return np.ones_like(sa), p.k1 * sa + p.k0

    def characteristic(self, s):
        s = np.asarray(s, dtype=np.complex128)
        sb, ctrl = self._controller_terms(s)
        return self.plant.den(s) * sb + self.plant.num(s) * ctrl

    def characteristic_deriv(self, s):
        s = np.asarray(s, dtype=np.complex128)
        p = self.pid
        D, N = self.plant.den, self.plant.num
        dD, dN = D.derivative(), N.derivative()
        if self.integral_action:
            sb = principal_power(s, p.beta)
            sb1 = principal_power(s, p.beta - 1) if p.beta != 1 else np.ones_like(s)
            sab = principal_power(s, p.alpha + p.beta)
            sab1 = principal_power(s, p.alpha + p.beta - 1)
            return (
                dD(s) * sb
                + p.beta * D(s) * sb1
                + dN(s) * (p.k1 * sab + p.k0 * sb + p.km1)
                + N(s) * (p.k1 * (p.alpha + p.beta) * sab1 + p.k0 * p.beta * sb1)
            )
        sa = principal_power(s, p.alpha)
        sa1 = principal_power(s, p.alpha - 1) if p.alpha != 1 else np.ones_like(s)
        return dD(s) + dN(s) * (p.k1 * sa + p.k0) + N(s) * p.k1 * p.alpha * sa1

    def characteristic_scale(self, s):
        s = np.asarray(s, dtype=np.complex128)
        r = np.abs(s)
        p = self.pid
        D, N = self.plant.den, self.plant.num
        if self.integral_action:
            return D.scale(s) * r**p.beta + N.scale(s) * (
                abs(p.k1) * r ** (p.alpha + p.beta) + abs(p.k0) * r**p.beta + abs(p.km1)
            )
        return D.scale(s) + N.scale(s) * (abs(p.k1) * r**p.alpha + abs(p.k0))

    def characteristic_terms(self):
        """(coefficient, exponent) of each top-degree monomial of the characteristic."""
        p = self.pid
        shift = p.beta if self.integral_action else 0.0
        terms = [(self.plant.den.leading, self.plant.m + shift)]
        if not self.plant.num.is_zero:
            a_n, n = self.plant.num.leading, self.plant.n
            terms += [(a_n * p.k1, n + p.alpha + shift), (a_n * p.k0, n + shift)]
            if self.integral_action:
                terms.append((a_n * p.km1, float(n)))
        return [(c, e) for c, e in terms if c != 0]

    def characteristic_leading(self, s):
        """Sum of the highest-exponent monomials of the characteristic at s."""
        terms = self.characteristic_terms()
        top = max(e for _, e in terms)
        out = 0.0
        for c, e in terms:
            if abs(e - top) < 1e-12:
                out = out + c * principal_power(s, e)
        return out

    # -- sensitivity --------------------------------------------------------

    def loop_gain(self, s):
        s = np.asarray(s, dtype=np.complex128)
        sb, ctrl = self._controller_terms(s)
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.plant.num(s) * ctrl / (self.plant.den(s) * sb)

    def sensitivity(self, s):
        s = np.asarray(s, dtype=np.complex128)
        sb, ctrl = self._controller_terms(s)
        dsb = self.plant.den(s) * sb
        with np.errstate(divide="ignore", invalid="ignore"):
            return dsb / (dsb + self.plant.num(s) * ctrl)

    def log_sensitivity(self, s):
        s = np.asarray(s, dtype=np.complex128)
        L = self.loop_gain(s)
        finite = np.isfinite(L)
        out = np.empty(s.shape, dtype=np.complex128)
        out[finite] = -_clog1p(L[finite])
        if not finite.all():
            with np.errstate(divide="ignore", invalid="ignore"):
                out[~finite] = principal_log(self.sensitivity(s[~finite]))
        return out

    def ln_abs_sq(self, s):
        s = np.asarray(s, dtype=np.complex128)
        L = self.loop_gain(s)
        finite = np.isfinite(L)
        out = np.empty(s.shape, dtype=float)
        Lf = L[finite]
        with np.errstate(divide="ignore", invalid="ignore"):
            out[finite] = -np.log1p(2.0 * Lf.real + Lf.real**2 + Lf.imag**2)
            out[~finite] = 2.0 * np.log(np.abs(self.sensitivity(s[~finite])))
        return out

    @cached_property
    def _rhp(self):
        from .rootfind import rhp_open_loop_poles

        return rhp_open_loop_poles(self.plant)

    def rhp_zeros(self):
        return list(self._rhp)

    @cached_property
    def _singular(self):
        from .rootfind import polynomial_roots

        pts, wts = [], []
        if self.plant.den.degree >= 1:
            for r, k in polynomial_roots(self.plant.den):
                pts.append(r)
                wts.append(float(k))
        if self.integral_action:
            pts.append(0j)
            wts.append(self.pid.beta)
        elif self.top_controller_order % 1 != 0 and 0j not in pts:
            pts.append(0j)  # branch point of s^alpha in the loop gain
            wts.append(self.pid.alpha)
        return np.array(pts, dtype=np.complex128), np.array(wts, dtype=float)

    def singular_points(self):
        return self._singular

    @cached_property
    def _features(self):
        from .rootfind import polynomial_roots

        pts = [0j]
        for poly in (self.plant.den, self.plant.num):
            if poly.degree >= 1:
                pts += [r for r, _ in polynomial_roots(poly)]
        return np.array(pts, dtype=np.complex128)

    def features(self):
        return self._features

    def asymptotic_log_series(self, q_max=12.0):
        return rational_fractal_log_series(self.plant, self.pid, q_max)


def _series_mul(a, b, e_min):
    out = {}
    for ea, ca in a.items():
        for eb, cb in b.items():
            e = round(ea + eb, 9)
            if e >= e_min - 1e-9:
                out[e] = out.get(e, 0j) + ca * cb
    return out


def rational_fractal_log_series(plant, pid, q_max=12.0):
    """Asymptotic expansion log S(s) ~ sum_k c_k s^(-q_k) as |s| -> inf.

    Returns a list of ``(q, c)`` sorted by q, truncated at ``q <= q_max``.
    Raises :class:`ModelError` when the loop gain does not vanish at infinity.
    """
    N, D = plant.num, plant.den
    if N.is_zero:
        return []
    n, m = N.degree, D.degree
    a = N.coeffs[::-1]  # a_n, a_{n-1}, ...
    b = D.coeffs[::-1]
    e_min = -q_max
    # N/D = sum_j e_j s^(n-m-j)
    jmax = int(math.ceil(q_max + n - m + 2)) + 2
    e = np.zeros(max(jmax, 1), dtype=np.complex128)
    for j in range(e.size):
        acc = a[j] if j <= n else 0j
        for i in range(1, min(j, m) + 1):
            acc -= b[i] * e[j - i]
        e[j] = acc / b[0]
    L = {}
    for j, ej in enumerate(e):
        if ej == 0:
            continue
        base = n - m - j
        for coef, shift in ((pid.k1, pid.alpha), (pid.k0, 0.0), (pid.km1, -pid.beta)):
            if coef == 0:
                continue
            ex = round(base + shift, 9)
            if ex >= e_min - 1e-9:
                L[ex] = L.get(ex, 0j) + ej * coef
    L = {k: v for k, v in L.items() if v != 0}
    if not L:
        return []
    lead = max(L)
    if lead >= 0:
        raise ModelError(f"loop gain does not vanish at infinity (leading exponent {lead})")
    kmax = int(math.floor(q_max / -lead))
    logs = {}
    power = dict(L)
    for k in range(1, kmax + 1):
        sign = 1.0 if k % 2 else -1.0
        for ex, c in power.items():
            logs[ex] = logs.get(ex, 0j) + sign * c / k
        power = _series_mul(power, L, e_min)
        if not power:
            break
    return sorted(((-ex, -c) for ex, c in logs.items() if c != 0), key=lambda t: t[0])


def eval_characteristic(plant, pid, s):
    """chi(s) = D(s) s^b + N(s) (k1 s^(a+b) + k0 s^b + km1)."""
    sb = principal_power(s, pid.beta)
    sab = principal_power(s, pid.alpha + pid.beta)
    return plant.den(s) * sb + plant.num(s) * (pid.k1 * sab + pid.k0 * sb + pid.km1)


def _nearest_zero(model, s):
    try:
        zeros = model.rhp_zeros()
    except Exception:
        return None
    if not zeros:
        return None
    return min(zeros, key=lambda p: abs(p.location - s))


def eval_sensitivity(model, s):
    """S(s) for a loop model; raises at closed-loop poles."""
    scalar = np.ndim(s) == 0
    x = np.atleast_1d(np.asarray(s, dtype=np.complex128))
    if isinstance(model, RationalFractal):
        chi = model.characteristic(x)
        scale = model.characteristic_scale(x)
        bad = np.abs(chi) <= SINGULAR_RTOL * scale
        if bad.any():
            pt = complex(x[np.argmax(bad)])
            raise SingularityError(f"characteristic vanishes near s={pt:.6g} (closed-loop pole)", point=pt)
    out = model.sensitivity(x)
    if not np.all(np.isfinite(out)):
        pt = complex(x[np.argmax(~np.isfinite(out))])
        raise SingularityError(f"sensitivity is singular at s={pt:.6g}", point=pt)
    return complex(out[0]) if scalar else out.reshape(np.shape(s))


def eval_log_sensitivity(model, s, prev_phase=None):
    """ln|S(s)| + i phi, phi principal or unwrapped to within pi of prev_phase."""
    scalar = np.ndim(s) == 0
    x = np.atleast_1d(np.asarray(s, dtype=np.complex128))
    val = eval_sensitivity(model, x)
    tiny = np.abs(val) < 1e-300
    if tiny.any():
        pt = complex(x[np.argmax(tiny)])
        near = _nearest_zero(model, pt)
        where = f"; nearest zero of S is {near.location:.6g} (order {near.order:g})" if near else ""
        raise BranchPointError(f"S vanishes at s={pt:.6g}, log S undefined{where}", point=pt, nearest=near)
    logs = model.log_sensitivity(x)
    phase = wrap_phase(logs.imag)
    if prev_phase is not None:
        phase = _kernels.unwrap_to_reference(phase, np.asarray(prev_phase, dtype=float))
    out = logs.real + 1j * phase
    return complex(out[0]) if scalar else out.reshape(np.shape(s))


# -- JSON documents ---------------------------------------------------------


def model_from_dict(doc):
    """Build a RationalFractal from {"plant": {...}, "pid": {...}}."""
    try:
        plant_doc = doc["plant"]
        pid_doc = doc["pid"]
        plant = RationalPlant(Polynomial.from_pairs(plant_doc["num"]), Polynomial.from_pairs(plant_doc["den"]))
        pid = FractionalPID(
            k1=pid_doc.get("k1", 0.0),
            k0=pid_doc.get("k0", 0.0),
            km1=pid_doc.get("km1", 0.0),
            alpha=pid_doc["alpha"],
            beta=pid_doc["beta"],
        )
    except KeyError as exc:
        raise ModelError(f"model document is missing key {exc}") from None
    except TypeError as exc:
        raise ModelError(f"malformed model document: {exc}") from None
    return RationalFractal(plant, pid)


def model_to_dict(model):
    p = model.pid
    return {
        "plant": {"num": model.plant.num.to_pairs(), "den": model.plant.den.to_pairs()},
        "pid": {"k1": p.k1, "k0": p.k0, "km1": p.km1, "alpha": p.alpha, "beta": p.beta},
    }


def load_model(path):
    with open(path) as fh:
        return model_from_dict(json.load(fh))
