"""Hot numeric kernels, numba-compiled when available.

Every kernel exists twice: a loop version compiled with ``numba.njit`` and a
pure-numpy version.  Set ``BODEFRAC_NUMBA=0`` to force the numpy path (the
benchmark in ``benchmarks/bench_kernels.py`` compares both).  The public names
at the bottom of the module point at whichever implementation is active.
"""

import math
import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

USE_NUMBA = numba is not None and os.environ.get("BODEFRAC_NUMBA", "1").lower() not in (
    "0",
    "false",
    "no",
    "off",
)


# --------------------------------------------------------------------------
# numpy implementations
# --------------------------------------------------------------------------


def horner_np(coeffs, s):
    """Evaluate sum(coeffs[l] * s**l) for an array of points."""
    out = np.zeros(s.shape, dtype=np.complex128)
    for c in coeffs[::-1]:
        out = out * s + c
    return out


def horner_deriv_np(coeffs, s):
    """Return (p(s), p'(s))."""
    p = np.zeros(s.shape, dtype=np.complex128)
    dp = np.zeros(s.shape, dtype=np.complex128)
    for c in coeffs[::-1]:
        dp = dp * s + p
        p = p * s + c
    return p, dp


def blaschke_log_np(s, zeros, orders):
    """sum_j d_j * Log((s - p_j) / (s + conj(p_j))) with principal Log per factor."""
    s = s[:, None]
    ratio = (s - zeros[None, :]) / (s + np.conj(zeros)[None, :])
    return (orders[None, :] * np.log(ratio)).sum(axis=1)


def aberth_np(coeffs, z, max_iter, step_tol):
    """Aberth-Ehrlich iteration.  ``coeffs`` is monic-normalised, ascending."""
    z = z.copy()
    n = z.size
    active = np.ones(n, dtype=bool)
    it = 0
    for it in range(1, max_iter + 1):
        p, dp = horner_deriv_np(coeffs, z)
        diff = z[:, None] - z[None, :]
        np.fill_diagonal(diff, 1.0)
        inv = 1.0 / diff
        np.fill_diagonal(inv, 0.0)
        sums = inv.sum(axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            w = p / dp
            corr = w / (1.0 - w * sums)
        corr = np.where(np.isfinite(corr) & active, corr, 0.0)
        corr = np.where(p == 0, 0.0, corr)
        z = z - corr
        small = np.abs(corr) <= step_tol * (1.0 + np.abs(z))
        active &= ~small
        if not active.any():
            break
    return z, it


def unwrap_to_reference_np(raw, ref):
    """Shift raw phases by multiples of 2*pi to lie within pi of ``ref``."""
    return raw + 2.0 * np.pi * np.round((ref - raw) / (2.0 * np.pi))


def unwrap_sequence_np(raw, anchor):
    """Sequentially unwrap ``raw`` starting next to ``anchor``; returns phases."""
    steps = np.diff(np.concatenate(([anchor], raw)))
    steps = (steps + np.pi) % (2.0 * np.pi) - np.pi
    return anchor + np.cumsum(steps)


# --------------------------------------------------------------------------
# numba implementations
# --------------------------------------------------------------------------

if numba is not None:

    @numba.njit(cache=True)
    def horner_nb(coeffs, s):
        out = np.empty(s.shape[0], dtype=np.complex128)
        nc = coeffs.shape[0]
        for i in range(s.shape[0]):
            acc = 0j
            x = s[i]
            for k in range(nc - 1, -1, -1):
                acc = acc * x + coeffs[k]
            out[i] = acc
        return out

    @numba.njit(cache=True)
    def horner_deriv_nb(coeffs, s):
        p_out = np.empty(s.shape[0], dtype=np.complex128)
        d_out = np.empty(s.shape[0], dtype=np.complex128)
        nc = coeffs.shape[0]
        for i in range(s.shape[0]):
            p = 0j
            dp = 0j
            x = s[i]
            for k in range(nc - 1, -1, -1):
                dp = dp * x + p
                p = p * x + coeffs[k]
            p_out[i] = p
            d_out[i] = dp
        return p_out, d_out

    @numba.njit(cache=True)
    def blaschke_log_nb(s, zeros, orders):
        out = np.empty(s.shape[0], dtype=np.complex128)
        nz = zeros.shape[0]
        for i in range(s.shape[0]):
            acc = 0j
            x = s[i]
            for j in range(nz):
                p = zeros[j]
                r = (x - p) / (x + p.conjugate())
                acc += orders[j] * (math.log(abs(r)) + 1j * math.atan2(r.imag, r.real))
            out[i] = acc
        return out

    @numba.njit(cache=True)
    def aberth_nb(coeffs, z0, max_iter, step_tol):
        z = z0.copy()
        n = z.shape[0]
        nc = coeffs.shape[0]
        active = np.ones(n, dtype=np.bool_)
        it = 0
        for it in range(1, max_iter + 1):
            any_active = False
            for k in range(n):
                if not active[k]:
                    continue
                x = z[k]
                p = 0j
                dp = 0j
                for c in range(nc - 1, -1, -1):
                    dp = dp * x + p
                    p = p * x + coeffs[c]
                if p == 0:
                    active[k] = False
                    continue
                acc = 0j
                for j in range(n):
                    if j != k:
                        d = x - z[j]
                        if d != 0:
                            acc += 1.0 / d
                if dp == 0:
                    continue
                w = p / dp
                den = 1.0 - w * acc
                if den == 0:
                    continue
                corr = w / den
                if not (math.isfinite(corr.real) and math.isfinite(corr.imag)):
                    continue
                z[k] = x - corr
                if abs(corr) <= step_tol * (1.0 + abs(z[k])):
                    active[k] = False
                else:
                    any_active = True
            if not any_active:
                break
        return z, it

    @numba.njit(cache=True)
    def unwrap_sequence_nb(raw, anchor):
        out = np.empty(raw.shape[0], dtype=np.float64)
        prev = anchor
        twopi = 2.0 * math.pi
        for i in range(raw.shape[0]):
            step = raw[i] - prev
            step = (step + math.pi) % twopi - math.pi
            prev = prev + step
            out[i] = prev
        return out


if USE_NUMBA:
    horner = horner_nb
    horner_deriv = horner_deriv_nb
    blaschke_log = blaschke_log_nb
    aberth = aberth_nb
    unwrap_sequence = unwrap_sequence_nb
else:
    horner = horner_np
    horner_deriv = horner_deriv_np
    blaschke_log = blaschke_log_np
    aberth = aberth_np
    unwrap_sequence = unwrap_sequence_np

unwrap_to_reference = unwrap_to_reference_np
