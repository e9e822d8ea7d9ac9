import math

import pytest

from bodefrac.errors import ConfigurationError
from bodefrac.funcmodel import FractionalPID, Polynomial, RationalFractal, RationalPlant
from bodefrac.rootfind import certify_stability
from bodefrac.tuner import (
    SWEEP_COLUMNS,
    compare_integer_vs_fractional,
    degree_condition,
    evaluate_point,
    invariance_spread,
    sweep,
    sweep_csv,
    worker_count,
)

from conftest import FOUR_PI, TWO_PI


@pytest.fixture
def plant3():
    return RationalPlant(Polynomial([1.0]), Polynomial([-20.0, 8.0, 11.0, 1.0]))  # (s-1)(s+2)(s+10)


GRID = {"k1": [1, 5], "k0": [30, 40], "km1": [5, 10], "alpha": [0.5, 0.75], "beta": [0.5, 0.75]}


@pytest.mark.parametrize("m, n, alpha, expected", [(3, 0, 0.5, True), (2, 0, 1.0, False), (3, 1, 0.99, True)])
def test_degree_condition_examples(m, n, alpha, expected):
    plant = RationalPlant(Polynomial([1.0] * (n + 1)), Polynomial([1.0] * (m + 1)))
    assert degree_condition(plant, FractionalPID(1, 1, 1, alpha, 1.0)) is expected


def test_sweep_invariance(plant3):
    points = sweep(plant3, GRID, workers=4)
    assert len(points) == 32
    stable = [p for p in points if p.stable]
    assert len(stable) >= 16
    for p in stable:
        assert p.report.numeric_value == pytest.approx(FOUR_PI, rel=1e-2)
    assert invariance_spread(points) < 1e-2


def test_sweep_is_lexicographic_and_deterministic(plant3):
    a = sweep(plant3, GRID, workers=1)
    b = sweep(plant3, GRID, workers=4)
    assert [p.gains for p in a] == sorted(p.gains for p in a)
    assert sweep_csv(a) == sweep_csv(b)


def test_sweep_grid_errors(plant3):
    bad = dict(GRID, k1=[])
    with pytest.raises(ConfigurationError, match="empty"):
        sweep(plant3, bad)
    with pytest.raises(ConfigurationError, match="missing"):
        sweep(plant3, {k: v for k, v in GRID.items() if k != "beta"})
    with pytest.raises(ConfigurationError, match="unknown"):
        sweep(plant3, dict(GRID, gamma=[1]))


def test_unstable_point_is_skipped():
    plant = RationalPlant(Polynomial([1.0]), Polynomial([-1.0, 1.0]))  # D = s - 1
    pt = evaluate_point(plant, (0.0, 1e-3, 0.0, 1.0, 1.0))
    assert not pt.stable and pt.report is None
    assert pt.certificate.verdict == "unstable"
    row = pt.row()
    assert row[5] == 0 and row[6] == ""


def test_invalid_order_recorded_as_error(plant3):
    pt = evaluate_point(plant3, (1.0, 1.0, 1.0, 2.5, 0.5))
    assert pt.error and pt.pid is None


def test_certificates_match_direct_call(plant3):
    points = sweep(plant3, GRID, workers=2)
    for p in points[::7]:
        direct = certify_stability(RationalFractal(plant3, p.pid))
        assert direct.verdict == p.certificate.verdict


def test_sweep_csv_header(plant3):
    text = sweep_csv(sweep(plant3, {"k1": [1], "k0": [30], "km1": [5], "alpha": [0.5], "beta": [0.5]}))
    lines = text.split("\n")
    assert lines[0] == ",".join(SWEEP_COLUMNS)
    assert len(lines) == 3 and lines[-1] == ""


def test_compare_requires_baseline(plant3):
    with pytest.raises(ConfigurationError):
        compare_integer_vs_fractional(plant3, (1, 30, 5), [])
    with pytest.raises(ConfigurationError):
        compare_integer_vs_fractional(plant3, (1, 30, 5), [(0.5, 0.5)])


def test_compare_degree_condition_relaxed():
    # m = 2, n = 0: alpha = 1 violates m > alpha + n + 1 and the arc term appears
    plant = RationalPlant(Polynomial([1.0]), Polynomial([-2.0, 1.0, 1.0]))  # (s - 1)(s + 2)
    rep = compare_integer_vs_fractional(plant, (1.0, 10.0, 1.0), [(1, 1), (0.5, 0.5)])
    base = rep.baseline
    assert base.stable and not base.degree_ok
    assert base.I_numeric == pytest.approx(FOUR_PI - TWO_PI * 1.0, rel=1e-5)
    frac = rep.rows[1]
    assert frac.degree_ok and frac.I_numeric == pytest.approx(FOUR_PI, rel=1e-5)
    assert "alpha" in rep.table()


def test_worker_count_env(monkeypatch):
    monkeypatch.setenv("BODEFRAC_THREADS", "3")
    assert worker_count() == 3
    monkeypatch.setenv("BODEFRAC_THREADS", "x")
    with pytest.raises(ConfigurationError):
        worker_count()
