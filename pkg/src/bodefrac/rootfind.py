"""Polynomial roots, argument-principle zero counting and stability certificates."""

import json
import warnings
from dataclasses import asdict, dataclass

import numpy as np

from . import _kernels
from .errors import BoundaryZeroError, BranchTrackingError, ModelError, RefinementError, RootFindingError
from .funcmodel import AXIS_TOL, LoopModel, Polynomial, PoleRecord, RationalFractal

CLUSTER_RTOL = 1e-7
BOUNDARY_RTOL = 1e-10


class MarginalPoleWarning(UserWarning):
    pass


class PoleList(list):
    """List of PoleRecord with the marginal (near-axis) roots attached."""

    def __init__(self, items=(), marginal=()):
        super().__init__(items)
        self.marginal = list(marginal)


@dataclass(frozen=True)
class Rectangle:
    re_min: float
    re_max: float
    im_min: float
    im_max: float

    def __post_init__(self):
        if not (self.re_min < self.re_max and self.im_min < self.im_max):
            raise ValueError(f"degenerate rectangle {self}")

    def contains(self, z):
        return self.re_min < z.real < self.re_max and self.im_min < z.imag < self.im_max

    def corners(self):
        return (
            complex(self.re_min, self.im_min),
            complex(self.re_max, self.im_min),
            complex(self.re_max, self.im_max),
            complex(self.re_min, self.im_max),
        )


@dataclass(frozen=True)
class StabilityCertificate:
    region: Rectangle
    zero_count: int
    boundary_min_modulus: float
    verdict: str
    growth_ok: bool = True
    note: str = "bounded-rectangle argument-principle count plus outer-edge growth check"

    def to_dict(self):
        d = asdict(self)
        d["region"] = asdict(self.region)
        return d

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)


# -- polynomial roots -------------------------------------------------------


def _initial_guesses(coeffs):
    n = coeffs.size - 1
    lead = abs(coeffs[-1])
    # Fujiwara bound on root moduli
    bound = 2.0 * max(
        (abs(coeffs[n - k]) / lead) ** (1.0 / k) if k < n else (abs(coeffs[0]) / (2.0 * lead)) ** (1.0 / n)
        for k in range(1, n + 1)
    )
    radius = max(bound, 1e-3) * 0.5
    angles = 2.0 * np.pi * np.arange(n) / n + 0.4
    return radius * np.exp(1j * angles)


def _cluster(z, radius_rtol):
    z = list(z)
    groups = []
    used = [False] * len(z)
    for i, zi in enumerate(z):
        if used[i]:
            continue
        members = [zi]
        used[i] = True
        changed = True
        while changed:
            changed = False
            centre = np.mean(members)
            for j, zj in enumerate(z):
                if not used[j] and abs(zj - centre) <= radius_rtol * (1.0 + abs(centre)) * max(1, len(members)):
                    members.append(zj)
                    used[j] = True
                    changed = True
        groups.append((complex(np.mean(members)), len(members)))
    return groups


def _polish_cluster(poly, r, mult):
    # a root of multiplicity m is a simple root of the (m-1)-th derivative
    if mult == 1:
        return r, mult
    q = poly
    for _ in range(mult - 1):
        q = q.derivative()
    dq = q.derivative()
    z = r
    for _ in range(8):
        d = dq(z)
        if d == 0:
            break
        step = q(z) / d
        z = z - step
        if abs(step) <= 4e-16 * (1 + abs(z)):
            break
    if abs(z - r) > 1e3 * CLUSTER_RTOL * (1 + abs(r)):
        return r, mult
    return complex(z), mult


def polynomial_roots(p, tol=1e-10, max_iter=500, cluster_rtol=CLUSTER_RTOL):
    """All roots of ``p`` as (root, multiplicity), by Aberth-Ehrlich iteration.

    Roots within ``cluster_rtol * (1 + |r|)`` of each other are merged.
    """
    if not isinstance(p, Polynomial):
        p = Polynomial(p)
    if p.degree < 1:
        raise ModelError("polynomial_roots needs degree >= 1")
    c = p.coeffs
    nz = int(np.flatnonzero(c)[0])
    out = [(0j, nz)] if nz else []
    c = c[nz:]
    if c.size > 1:
        monic = np.ascontiguousarray(c / c[-1])
        z0 = np.ascontiguousarray(_initial_guesses(monic))
        z, _ = _kernels.aberth(monic, z0, max_iter, 4.0 * np.finfo(float).eps)
        poly = Polynomial(monic)
        resid = np.abs(poly(z))
        scale = poly.scale(z)
        if not np.all(np.isfinite(z)) or np.any(resid > tol * scale):
            raise RootFindingError(
                f"Aberth iteration did not converge (max scaled residual {np.max(resid / scale):.3g})", iterates=z
            )
        out += [_polish_cluster(poly, r, mult) for r, mult in _cluster(z, cluster_rtol)]
    out.sort(key=lambda t: (abs(t[0]), t[0].real, t[0].imag))
    return out


def rhp_open_loop_poles(plant, axis_tol=AXIS_TOL):
    """Roots of D in the open right half plane, sorted by modulus."""
    if plant.den.degree < 1:
        return PoleList()
    roots = polynomial_roots(plant.den)
    marginal = [r for r, _ in roots if abs(r.real) <= axis_tol]
    if marginal:
        warnings.warn(f"plant has poles on the imaginary axis: {marginal}", MarginalPoleWarning, stacklevel=2)
    recs = [PoleRecord(r, mult) for r, mult in roots if r.real > axis_tol]
    recs.sort(key=lambda p: (abs(p.location), p.location.imag))
    return PoleList(recs, marginal)


# -- argument principle -----------------------------------------------------


def _resolve(model):
    """Return (f, scale) callables for a model, polynomial or plain callable."""
    if isinstance(model, RationalFractal):
        return model.characteristic, model.characteristic_scale
    if isinstance(model, Polynomial):
        return model, model.scale
    if isinstance(model, LoopModel):
        # zeros of 1/S are the closed-loop poles
        return (lambda s: 1.0 / model.sensitivity(s)), None
    if callable(model):
        return model, None
    raise TypeError(f"cannot count zeros of {type(model).__name__}")


def winding_along(f, path, n0=64, max_points=400_000, scale=None, boundary_rtol=BOUNDARY_RTOL):
    """Winding number of f around 0 along a closed path ``path(t)``, t in [0, 1].

    Samples are refined until successive unwrapped phase steps are < pi/2.
    Returns (winding, min relative modulus on the path).
    """
    t = np.linspace(0.0, 1.0, n0 + 1)
    vals = np.asarray(f(path(t)), dtype=np.complex128)
    while True:
        if np.any(vals == 0):
            pt = complex(path(t[np.flatnonzero(vals == 0)[0]]))
            raise BoundaryZeroError(f"zero on the counting contour at s={pt:.6g}; perturb the region", point=pt)
        steps = np.angle(vals[1:] / vals[:-1])
        bad = ~(np.abs(steps) < np.pi / 2) | ~np.isfinite(steps)
        if not bad.any():
            break
        if t.size > max_points:
            raise BranchTrackingError("phase steps stayed >= pi/2 after maximal refinement")
        idx = np.flatnonzero(bad)
        mids = 0.5 * (t[idx] + t[idx + 1])
        new_vals = np.asarray(f(path(mids)), dtype=np.complex128)
        t = np.insert(t, idx + 1, mids)
        vals = np.insert(vals, idx + 1, new_vals)
    mags = np.abs(vals)
    if scale is not None:
        rel = mags / np.maximum(scale(path(t)), np.finfo(float).tiny)
    else:
        rel = mags / max(mags.max(), np.finfo(float).tiny)
    min_rel = float(rel.min())
    if min_rel <= boundary_rtol:
        pt = complex(path(t[np.argmin(rel)]))
        raise BoundaryZeroError(f"zero on or near the counting contour at s={pt:.6g}; perturb the region", point=pt)
    total = float(np.sum(np.angle(vals[1:] / vals[:-1])))
    w = total / (2.0 * np.pi)
    if abs(w - round(w)) > 0.05:
        raise BranchTrackingError(f"non-integer winding {w:.4f}")
    return int(round(w)), min_rel


def rectangle_path(rect):
    corners = rect.corners()
    pts = np.array(corners + (corners[0],))

    def path(t):
        t = np.asarray(t, dtype=float)
        u = np.clip(t, 0.0, 1.0) * 4.0
        k = np.minimum(u.astype(int), 3)
        frac = u - k
        return pts[k] + frac * (pts[k + 1] - pts[k])

    return path


def circle_path(centre, radius):
    def path(t):
        return centre + radius * np.exp(1j * (2.0 * np.pi * np.asarray(t, dtype=float) - np.pi))

    return path


def count_zeros_rect(model, rect, n0=256):
    """Number of zeros (with multiplicity) of the model's characteristic in ``rect``."""
    f, scale = _resolve(model)
    w, _ = winding_along(f, rectangle_path(rect), n0=n0, scale=scale)
    return w


def refine_zero(model, seed, tol=1e-12, max_iter=100):
    """Newton refinement of a characteristic zero; returns (root, order)."""
    if isinstance(model, RationalFractal):
        f, df, scale = model.characteristic, model.characteristic_deriv, model.characteristic_scale
    elif isinstance(model, Polynomial):
        f, df, scale = model, model.derivative(), model.scale
    else:
        raise TypeError("refine_zero needs a RationalFractal or Polynomial")
    z = complex(seed)
    fz = complex(f(z))
    for _ in range(max_iter):
        if abs(fz) <= tol * max(float(scale(z)), 1.0) or abs(fz) == 0:
            break
        d = complex(df(z))
        if d == 0 or not np.isfinite(d):
            raise RefinementError(f"zero derivative at {z}")
        z = z - fz / d
        if not (np.isfinite(z.real) and np.isfinite(z.imag)):
            raise RefinementError("Newton iteration diverged")
        if z.real <= 0:
            raise RefinementError(f"Newton iterate {z:.6g} left the right half plane")
        fz = complex(f(z))
    else:
        raise RefinementError(f"no convergence from seed {seed} after {max_iter} steps (|f|={abs(fz):.3g})")
    radius = min(0.05, 0.5 * abs(z))
    order, _ = winding_along(f, circle_path(z, radius), n0=64, scale=scale)
    if order < 1:
        raise RefinementError(f"no zero enclosed around {z}")
    if order > 1:
        # multiplicity-aware Newton recovers quadratic convergence
        for _ in range(20):
            d = complex(df(z))
            fz = complex(f(z))
            if d == 0 or fz == 0:
                break
            step = order * fz / d
            z = z - step
            if abs(step) <= 1e-15 * (1 + abs(z)):
                break
    return z, order


# -- stability certificate --------------------------------------------------


def _natural_scale(model):
    pts = model.features()
    return 1.0 + (float(np.max(np.abs(pts))) if pts.size else 0.0)


def certify_stability(model, re_max=None, im_max=None, axis_tol=AXIS_TOL, n0=512):
    """Argument-principle certificate that the characteristic has no RHP zero.

    The count covers [axis_tol, re_max] x [-im_max, im_max]; beyond it the
    verdict relies on the leading term dominating on the three outer edges.
    """
    if not isinstance(model, RationalFractal):
        raise TypeError("certify_stability needs a RationalFractal model")
    scale = 10.0 * _natural_scale(model)
    re_max = scale if re_max is None else float(re_max)
    im_max = scale if im_max is None else float(im_max)
    rect = Rectangle(axis_tol, re_max, -im_max, im_max)
    try:
        w, min_rel = winding_along(model.characteristic, rectangle_path(rect), n0=n0, scale=model.characteristic_scale)
    except BoundaryZeroError:
        return StabilityCertificate(rect, 0, 0.0, "inconclusive", False, "zero on the certificate boundary")
    # growth check on right, top and bottom edges
    t = np.linspace(0.0, 1.0, 2001)
    right = re_max + 1j * (-im_max + 2.0 * im_max * t)
    top = axis_tol + (re_max - axis_tol) * t + 1j * im_max
    bottom = np.conj(top)
    outer = np.concatenate((right, top, bottom))
    chi = np.abs(model.characteristic(outer))
    lead = np.abs(model.characteristic_leading(outer))
    growth_ok = bool(np.all(chi >= 0.5 * lead))
    if w > 0:
        verdict = "unstable"
    elif not growth_ok or min_rel <= BOUNDARY_RTOL:
        verdict = "inconclusive"
    else:
        verdict = "stable"
    return StabilityCertificate(rect, int(w), float(min_rel), verdict, growth_ok)
