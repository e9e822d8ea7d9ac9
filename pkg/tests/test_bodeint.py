import math

import numpy as np
import pytest

from bodefrac.bodeint import (
    bode_integral,
    bode_integrand,
    integrand_csv,
    series_tail,
    tail_estimate,
    theoretical_value,
)
from bodefrac.errors import TailDivergenceError
from bodefrac.funcmodel import PoleRecord
from bodefrac.quadrature import adaptive_gk
from bodefrac.weier import OuterSpec, SyntheticSensitivity

from conftest import FOUR_PI, TWO_PI, make_model


def test_integrand_examples(classical):
    assert bode_integrand(classical, 0.0) == pytest.approx(math.log(0.25), abs=1e-15)
    assert bode_integrand(classical, 10.0) == pytest.approx(math.log(101 / 104), abs=1e-15)


def test_integrand_vectorised_and_even(fractional, rng):
    w = rng.uniform(-100, 100, 50)
    v = bode_integrand(fractional, w)
    assert v.shape == w.shape
    np.testing.assert_allclose(v, bode_integrand(fractional, -w), atol=1e-12)


def test_classical_value(classical):
    rep = bode_integral(classical)
    assert rep.theoretical_value == pytest.approx(FOUR_PI)
    assert rep.numeric_value == pytest.approx(-TWO_PI, rel=1e-6)


def test_stable_double_pole_gives_zero():
    model = make_model([1.0], [1.0, 2.0, 1.0], k0=1.0)  # L = 1/(s+1)^2
    rep = bode_integral(model)
    assert rep.theoretical_value == 0.0
    assert abs(rep.numeric_value) < 1e-8
    assert rep.converged


def test_fractional_matches_theory(fractional):
    rep = bode_integral(fractional)
    assert rep.theoretical_value == pytest.approx(FOUR_PI)
    assert rep.numeric_value == pytest.approx(FOUR_PI, rel=1e-6)
    assert abs(rep.reconciliation) < 1e-5


# -- theory ------------------------------------------------------------------


@pytest.mark.parametrize(
    "poles, expected",
    [
        ([], 0.0),
        ([PoleRecord(1.0, 1)], FOUR_PI),
        ([PoleRecord(1.0, 2), PoleRecord(2 + 3j, 1)], 16 * math.pi),
    ],
)
def test_theoretical_value(poles, expected):
    assert theoretical_value(poles) == pytest.approx(expected, rel=1e-15)


# -- tails -------------------------------------------------------------------


def test_tail_estimate_example():
    model = make_model([1.0], [2.0, 3.0, 1.0], k1=1.0, alpha=0.5)  # q = 1.5, c = 1
    corr, bound = tail_estimate(model, 100.0)
    assert bound == pytest.approx(0.4)
    assert corr == pytest.approx(-4 * math.cos(0.75 * math.pi) * 0.1 / 0.5)
    _, bound2 = tail_estimate(model, 200.0)
    assert bound2 / bound == pytest.approx(2**-0.5)


def test_tail_estimate_divergent():
    model = make_model([1.0], [1.0, 1.0], k1=1.0, alpha=0.5)  # q = 0.5
    with pytest.raises(TailDivergenceError):
        tail_estimate(model, 100.0)
    model = make_model([1.0], [2.0, 3.0, 1.0], k1=1.0, alpha=1.0)  # q = 1
    with pytest.raises(TailDivergenceError):
        tail_estimate(model, 100.0)


def test_divergent_model_report_not_converged():
    model = make_model([1.0], [1.0, 1.0], k1=1.0, k0=1.0, alpha=0.5)
    rep = bode_integral(model)
    assert not rep.converged
    assert any("tail" in n for n in rep.notes)


def test_series_tail_integer_term_cancels():
    corr, _ = series_tail([(1.0, 2.0 + 0j)], 10.0)
    assert corr == 0.0
    corr, _ = series_tail([(2.0, 3.0 + 0j)], 10.0)
    # int_{|w|>10} 2 Re[3 (iw)^-2] dw = -4 * 3 / 10
    assert corr == pytest.approx(-1.2)


# -- random quotients with known answer -----------------------------------------


def _random_quotient(rng):
    k = int(rng.integers(1, 4))
    zeros = [complex(rng.uniform(0.1, 3), rng.uniform(-5, 5)) for _ in range(k)]
    nz = int(rng.integers(1, 3))
    oz = [complex(-rng.uniform(0.2, 4), rng.uniform(-3, 3)) for _ in range(nz)]
    op = [complex(-rng.uniform(0.2, 4), rng.uniform(-3, 3)) for _ in range(nz)]
    outer = OuterSpec(oz, op)
    model = SyntheticSensitivity([PoleRecord(z, 1) for z in zeros], outer)
    # int ln |(iw - a)/(iw - b)|^2 dw = 2 pi (|Re a| - |Re b|)
    expected = TWO_PI * (sum(abs(z.real) for z in oz) - sum(abs(q.real) for q in op))
    return model, expected


def test_random_quotients(rng):
    for _ in range(20):
        model, expected = _random_quotient(rng)
        rep = bode_integral(model)
        assert rep.converged
        assert rep.numeric_value == pytest.approx(expected, rel=1e-6, abs=1e-6)


def test_frequency_scaling(rng):
    for _ in range(5):
        a, b = rng.uniform(0.2, 3, 2)
        lam = rng.uniform(0.5, 4)
        zeros = [PoleRecord(complex(rng.uniform(0.2, 2), rng.uniform(-3, 3)))]
        base = SyntheticSensitivity(zeros, OuterSpec.first_order(a, b))
        scaled = SyntheticSensitivity(
            [PoleRecord(lam * z.location) for z in zeros], OuterSpec.first_order(lam * a, lam * b)
        )
        # S(s / lam) has I scaled by lam
        assert bode_integral(scaled).numeric_value == pytest.approx(lam * bode_integral(base).numeric_value, rel=1e-6)


def test_half_axis_doubling(fractional):
    W = 1e4
    pos = adaptive_gk(lambda w: bode_integrand(fractional, w), [0, 1, 10, 100, 1e3, W], rel_tol=1e-10)
    neg = adaptive_gk(lambda w: bode_integrand(fractional, w), [-W, -1e3, -100, -10, -1, 0], rel_tol=1e-10)
    assert float(np.real(pos.value)) == pytest.approx(float(np.real(neg.value)), rel=1e-9)


def test_outer_first_order():
    for a, b in [(1.0, 2.0), (3.0, 0.5), (0.2, 0.2)]:
        model = SyntheticSensitivity([], OuterSpec.first_order(a, b))
        assert bode_integral(model).numeric_value == pytest.approx(TWO_PI * (a - b), abs=1e-6)


# -- output ------------------------------------------------------------------


def test_integrand_csv(classical):
    rep = bode_integral(classical)
    text = integrand_csv(classical, rep)
    lines = text.split("\n")
    assert lines[0] == "omega,ln_abs_S_sq,panel_id"
    assert "\r" not in text
    assert len(lines) - 2 == 3 * rep.panels.panel_values.size


def test_report_dict(classical):
    d = bode_integral(classical).to_dict()
    for key in ("numeric_value", "theoretical_value", "tail_correction", "cutoff_omega", "estimated_abs_error"):
        assert key in d
    assert "panels" not in d
