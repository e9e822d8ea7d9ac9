import cmath
import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bodefrac.errors import BranchPointError, DomainError, ModelError, SingularityError
from bodefrac.funcmodel import (
    FractionalPID,
    PoleRecord,
    Polynomial,
    RationalFractal,
    RationalPlant,
    eval_characteristic,
    eval_log_sensitivity,
    eval_sensitivity,
    load_model,
    model_from_dict,
    model_to_dict,
    principal_power,
    rational_fractal_log_series,
    wrap_phase,
)

from conftest import make_model

# -- principal branch --------------------------------------------------------


@pytest.mark.parametrize(
    "s, a, expected",
    [
        (1j, 0.5, (math.sqrt(2) / 2) * (1 + 1j)),
        (4.0, 0.5, 2.0),
        (-1.0, 0.5, 1j),
        (complex(-1.0, -0.0), 0.5, 1j),
    ],
)
def test_principal_power_examples(s, a, expected):
    assert principal_power(s, a) == pytest.approx(expected, abs=1e-15)


def test_principal_power_at_zero():
    assert principal_power(0.0, 0.7) == 0
    with pytest.raises(DomainError):
        principal_power(0.0, 0.0)
    with pytest.raises(DomainError):
        principal_power(np.array([1.0, 0.0]), -0.5)


rhp = st.builds(
    complex,
    st.floats(1e-3, 1e3),
    st.floats(-1e3, 1e3),
)


@given(rhp, st.floats(-1.9, 1.9), st.floats(-1.9, 1.9))
def test_power_product_rule_in_rhp(s, a, b):
    lhs = principal_power(s, a) * principal_power(s, b)
    rhs = principal_power(s, a + b)
    assert abs(lhs - rhs) <= 1e-12 * abs(rhs)


def test_wrap_phase_range():
    phi = np.linspace(-20, 20, 1001)
    w = wrap_phase(phi)
    assert np.all(w > -np.pi) and np.all(w <= np.pi)
    np.testing.assert_allclose(np.exp(1j * w), np.exp(1j * phi), atol=1e-12)
    assert wrap_phase(-np.pi) == pytest.approx(np.pi)


# -- types -------------------------------------------------------------------


def test_polynomial_trims_and_degree():
    p = Polynomial([1, 2, 0, 0])
    assert p.degree == 1 and p.leading == 2
    z = Polynomial([0, 0])
    assert z.is_zero and z.degree == -1
    assert Polynomial.from_roots([1, -1]) == Polynomial([-1, 0, 1])
    assert Polynomial([1, 3, 3, 1]).derivative() == Polynomial([3, 6, 3])


def test_polynomial_rejects_bad_input():
    with pytest.raises(ModelError):
        Polynomial([])
    with pytest.raises(ModelError):
        Polynomial([1.0, float("nan")])


def test_plant_degrees():
    plant = RationalPlant(Polynomial([1, 1]), Polynomial([1, 0, 0, 1]))
    assert (plant.n, plant.m) == (1, 3)
    with pytest.raises(ModelError):
        RationalPlant(Polynomial([1]), Polynomial([0]))


@pytest.mark.parametrize("alpha, beta", [(0.0, 1.0), (2.0, 1.0), (1.0, 0.0), (1.0, 2.5)])
def test_pid_order_constraints(alpha, beta):
    with pytest.raises(ModelError, match="< 2"):
        FractionalPID(1, 1, 1, alpha, beta)


def test_beta_message_names_constraint():
    with pytest.raises(ModelError, match=r"0 < beta < 2"):
        FractionalPID(1, 1, 1, 1.0, 2.5)


def test_pole_record_invariants():
    assert PoleRecord(2 + 3j, 0.5).order == 0.5
    with pytest.raises(ModelError):
        PoleRecord(-1.0)
    with pytest.raises(ModelError):
        PoleRecord(1e-12)
    with pytest.raises(ModelError):
        PoleRecord(1.0, 0.0)


@pytest.mark.parametrize("m, n, alpha, expected", [(3, 0, 0.5, True), (2, 0, 1.0, False), (3, 1, 0.99, True)])
def test_degree_condition(m, n, alpha, expected):
    model = make_model([1.0] * (n + 1), [1.0] * (m + 1), k1=1.0, alpha=alpha)
    assert model.degree_condition_holds is expected


# -- characteristic and sensitivity --------------------------------------------


@pytest.fixture
def textbook():
    return make_model([1.0], [2.0, 1.0], k1=1.0, k0=1.0, km1=1.0)


def test_characteristic_examples(textbook):
    assert eval_characteristic(textbook.plant, textbook.pid, 1.0) == pytest.approx(6.0)
    assert eval_characteristic(textbook.plant, textbook.pid, 0.0) == pytest.approx(1.0)
    pid = FractionalPID(0, 1, 0, 1.0, 0.37)
    plant = RationalPlant(Polynomial([3.0]), Polynomial([-1.0, 1.0]))
    s = 2j
    assert eval_characteristic(plant, pid, s) == pytest.approx((2 + 2j) * principal_power(s, 0.37), rel=1e-14)


def test_sensitivity_examples(textbook):
    assert eval_sensitivity(textbook, 1.0) == pytest.approx(0.5)
    assert eval_sensitivity(textbook, 0.0) == 0
    model = make_model([1.0], [1.0, 1.0], k0=1.0, km1=2.0, alpha=0.5, beta=0.3)
    assert eval_sensitivity(model, 0.0) == 0


def test_singularity_raised_at_closed_loop_pole():
    model = make_model([0.5], [-1.0, 1.0], k0=1.0)  # chi = s - 0.5
    with pytest.raises(SingularityError) as exc:
        eval_sensitivity(model, 0.5)
    assert exc.value.point == pytest.approx(0.5)


def test_log_sensitivity_examples(textbook, classical):
    assert eval_log_sensitivity(textbook, 1.0) == pytest.approx(math.log(0.5))
    # S(0) = -1/2 for S = (s-1)/(s+2)
    v = eval_log_sensitivity(classical, 0.0, prev_phase=3.0)
    assert v == pytest.approx(complex(math.log(0.5), math.pi))
    v = eval_log_sensitivity(classical, 0.0, prev_phase=-3.0)
    assert v.imag == pytest.approx(-math.pi)


def test_log_sensitivity_branch_point_names_pole(classical):
    with pytest.raises(BranchPointError) as exc:
        eval_log_sensitivity(classical, 1.0)
    assert exc.value.nearest.location == pytest.approx(1.0)


def test_winding_of_simple_zero(classical):
    theta = np.linspace(-np.pi, np.pi, 4001)
    s = 1.0 + 1e-2 * np.exp(1j * theta)
    phase = [0.0]
    prev = None
    for z in s:
        prev = eval_log_sensitivity(classical, z, prev_phase=prev).imag
        phase.append(prev)
    assert phase[-1] - phase[1] == pytest.approx(2 * math.pi, abs=1e-9)


def _random_model(rng):
    n = int(rng.integers(0, 3))
    m = n + int(rng.integers(1, 4))
    num = rng.normal(size=n + 1)
    den = rng.normal(size=m + 1)
    a, b = rng.uniform(0.1, 1.9, 2)
    k1, k0, km1 = rng.normal(size=3)
    return make_model(num, den, k1, k0, km1, a, b)


def test_conjugate_symmetry(rng):
    for _ in range(20):
        model = _random_model(rng)
        s = rng.uniform(0.1, 5) + 1j * rng.uniform(-5, 5, 8)
        s = np.asarray(s)
        a = model.sensitivity(np.conj(s))
        b = np.conj(model.sensitivity(s))
        np.testing.assert_allclose(a, b, rtol=1e-12)


def test_cleared_form_matches_naive(rng):
    for _ in range(20):
        model = _random_model(rng)
        p = model.pid
        s = rng.uniform(0.2, 5, 8) + 1j * rng.uniform(-5, 5, 8)
        N, D = model.plant.num(s), model.plant.den(s)
        K = p.k1 * principal_power(s, p.alpha) + p.k0 + p.km1 * principal_power(s, -p.beta)
        naive = 1.0 / (1.0 + N / D * K)
        S = model.sensitivity(s)
        assert np.all(np.abs(S - naive) < 1e-10 * np.abs(S))


def test_ln_abs_sq_matches_log(fractional):
    s = 1j * np.linspace(-50, 50, 100)  # avoids w = 0, where S vanishes
    np.testing.assert_allclose(fractional.ln_abs_sq(s), 2 * np.log(np.abs(fractional.sensitivity(s))), atol=1e-12)


def test_asymptotic_series_matches_direct(fractional):
    series = rational_fractal_log_series(fractional.plant, fractional.pid, q_max=14)
    for theta in (-1.2, 0.0, 0.9):
        s = 2e3 * cmath.exp(1j * theta)
        approx = sum(c * principal_power(s, -q) for q, c in series)
        exact = complex(fractional.log_sensitivity(np.array([s]))[0])
        assert abs(approx - exact) < 1e-12 * max(1.0, abs(exact)) + 1e-15


def test_series_rejects_nonvanishing_loop():
    model = make_model([1.0, 1.0], [1.0, 1.0], k0=1.0)
    with pytest.raises(ModelError):
        model.asymptotic_log_series()


def test_top_controller_order():
    assert make_model([1], [1, 1, 1], k1=1, k0=1, alpha=0.5).top_controller_order == 0.5
    assert make_model([1], [1, 1, 1], k0=1, alpha=0.5).top_controller_order == 0.0
    assert make_model([1], [1, 1, 1], km1=1, alpha=0.5, beta=0.3).top_controller_order == -0.3


# -- JSON ----------------------------------------------------------------------


def test_json_round_trip(tmp_path, fractional):
    doc = model_to_dict(fractional)
    path = tmp_path / "m.json"
    path.write_text(json.dumps(doc))
    assert load_model(path) == fractional
    assert model_from_dict(json.loads(json.dumps(doc))) == fractional


def test_json_errors():
    with pytest.raises(ModelError, match="missing"):
        model_from_dict({"plant": {"num": [[1, 0]]}, "pid": {"alpha": 1, "beta": 1}})
    with pytest.raises(ModelError):
        model_from_dict({"plant": {"num": [["x"]], "den": [[1, 0]]}, "pid": {"alpha": 1, "beta": 1}})
