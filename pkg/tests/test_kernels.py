import os
import subprocess
import sys

import numpy as np
import pytest

from bodefrac import _kernels as K

pytestmark = pytest.mark.skipif(K.numba is None, reason="numba unavailable")


@pytest.fixture
def pts(rng):
    return rng.normal(size=500) + 1j * rng.normal(size=500)


def test_horner_numba_matches_numpy(pts, rng):
    c = rng.normal(size=7) + 1j * rng.normal(size=7)
    np.testing.assert_allclose(K.horner_nb(c, pts), K.horner_np(c, pts), rtol=1e-13)
    for a, b in zip(K.horner_deriv_nb(c, pts), K.horner_deriv_np(c, pts)):
        np.testing.assert_allclose(a, b, rtol=1e-13)


def test_horner_against_polyval(pts):
    c = np.array([1.0, -2.0, 0.5, 3.0], dtype=np.complex128)
    np.testing.assert_allclose(K.horner_np(c, pts), np.polyval(c[::-1], pts), rtol=1e-13)


def test_blaschke_log_numba_matches_numpy(pts):
    zeros = np.array([1 + 1j, 0.25 + 2j, 0.5 - 0.3j])
    orders = np.array([1.0, 2.0, 0.5])
    s = np.abs(pts.real) + 1j * pts.imag
    np.testing.assert_allclose(K.blaschke_log_nb(s, zeros, orders), K.blaschke_log_np(s, zeros, orders), rtol=1e-12)


def test_aberth_numba_matches_numpy():
    coeffs = np.array([-2.0, -1.0, 2.0, 1.0], dtype=np.complex128)  # (s-1)(s+1)(s+2)
    z0 = 1.5 * np.exp(2j * np.pi * (np.arange(3) + 0.25) / 3)
    a, _ = K.aberth_np(coeffs, z0, 200, 1e-15)
    b, _ = K.aberth_nb(coeffs, z0, 200, 1e-15)
    np.testing.assert_allclose(np.sort_complex(a), np.sort_complex(b), atol=1e-12)
    np.testing.assert_allclose(np.sort_complex(a), [-2, -1, 1], atol=1e-12)


def test_unwrap_sequence_continuity(rng):
    true = np.cumsum(rng.uniform(-1.2, 1.2, 1000))
    raw = np.angle(np.exp(1j * true))
    for fn in (K.unwrap_sequence_np, K.unwrap_sequence_nb):
        out = fn(raw, true[0])
        np.testing.assert_allclose(out, true, atol=1e-12)


def test_unwrap_to_reference():
    out = K.unwrap_to_reference(np.array([-np.pi + 0.1]), np.array([3.0]))
    assert out[0] == pytest.approx(np.pi + 0.1)


def test_env_flag_selects_numpy_path():
    env = dict(os.environ, BODEFRAC_NUMBA="0")
    code = "from bodefrac import _kernels as K; print(K.USE_NUMBA, K.horner is K.horner_np)"
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.split() == ["False", "True"]
