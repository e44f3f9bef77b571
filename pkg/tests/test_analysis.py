import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from reshapeqp.analysis import (
    AffineOffset,
    Identity,
    LinearSlope,
    Tabulated,
    compare_lipschitz,
    compose,
    lipschitz_report,
    load_tabulated_csv,
    self_gain_check,
    self_gain_interval,
    small_gain_check,
    small_gain_interval,
    write_report,
)
from reshapeqp.barrier import BarrierSpec
from reshapeqp.errors import ConfigError, DomainError
from reshapeqp.sim import SweepGrid

SIXB = BarrierSpec(0.6, 0.65, 0.75)
ZERO = LinearSlope(0.0)


def test_zero_gains_pass():
    rep = small_gain_check(ZERO, ZERO, ZERO, ZERO, (0.1, 2.0), 1000)
    assert rep.passed
    assert rep.worst_margin == pytest.approx(-0.1)


def test_linear_contraction_passes():
    half, eps = LinearSlope(0.5), LinearSlope(0.1)
    rep = small_gain_check(half, half, eps, eps, small_gain_interval(SIXB), 1000)
    assert rep.passed
    assert rep.worst_relative_margin == pytest.approx(0.3025 - 1.0, rel=1e-12)


def test_unit_gains_with_eps_fail_everywhere():
    one, eps = LinearSlope(1.0), LinearSlope(0.1)
    rep = small_gain_check(one, one, eps, eps, (0.5, 3.0), 1000)
    assert not rep.passed
    assert rep.worst_relative_margin == pytest.approx(0.21, rel=1e-12)
    s = np.linspace(0.5, 3.0, 1000)
    chain = compose(Identity() + eps, one, Identity() + eps, one)
    assert np.all(chain(s) - s > 0)
    np.testing.assert_allclose((chain(s) - s) / s, 0.21, rtol=1e-12)


def test_small_gain_sample_floor_and_interval():
    with pytest.raises(ValueError):
        small_gain_check(ZERO, ZERO, ZERO, ZERO, (0, 1), 999)
    with pytest.raises(ValueError):
        small_gain_check(ZERO, ZERO, ZERO, ZERO, (1, 0), 1000)


def test_self_gain_examples():
    assert self_gain_check(LinearSlope(0.9), (0.01, 1.0), 1000).passed
    rep = self_gain_check(LinearSlope(1.0), (0.01, 1.0), 1000)
    assert not rep.passed and rep.worst_margin == 0.0


def test_self_gain_interval_from_sixb():
    lo, hi = self_gain_interval(SIXB, 0.01)
    assert lo == 0.01
    assert hi == pytest.approx(0.75 * (1 / 0.6 - 1 / 0.65), rel=1e-12)
    assert hi == pytest.approx(0.09615, abs=1e-5)
    assert small_gain_interval(SIXB) == pytest.approx((1.5385, 1.6667), abs=1e-4)
    with pytest.raises(ValueError):
        self_gain_interval(SIXB, 0.2)


def test_tabulated_domain_error():
    tab = Tabulated([0.0, 1.0], [0.0, 0.5])
    with pytest.raises(DomainError):
        small_gain_check(LinearSlope(1.0), tab, ZERO, ZERO, (0.0, 2.0), 1000)
    # the composition can also leave the domain of an outer table
    with pytest.raises(DomainError):
        small_gain_check(tab, LinearSlope(3.0), ZERO, ZERO, (0.0, 1.0), 1000)


def test_tabulated_validation():
    with pytest.raises(ValueError):
        Tabulated([0.0, 0.0], [0.0, 1.0])
    with pytest.raises(ValueError):
        Tabulated([0.0, 1.0], [1.0, 0.0])
    with pytest.raises(ValueError):
        LinearSlope(-1.0)


def test_affine_offset():
    g = AffineOffset(0.5, 0.2)
    assert g(2.0) == pytest.approx(1.2)


def monotone_table(rng, lo=0.0, hi=10.0, n=20):
    s = np.sort(rng.uniform(lo, hi, n))
    s[0], s[-1] = lo, hi
    s = np.unique(s)
    v = np.cumsum(rng.uniform(0, 1, s.size))
    v = lo + (v - v[0]) / (v[-1] - v[0]) * (hi - lo) * rng.uniform(0.1, 1.0)
    return Tabulated(s, v)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_composition_associative_and_monotone(seed):
    rng = np.random.default_rng(seed)
    f, g, h = (monotone_table(rng) for _ in range(3))
    s = np.sort(rng.uniform(0, 10, 200))
    left = compose(compose(f, g), h)(s)
    right = compose(f, compose(g, h))(s)
    np.testing.assert_array_equal(left, right)
    np.testing.assert_array_equal(compose(f, g, h)(s), left)
    assert np.all(np.diff(left) >= 0)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1000, 3000))
def test_refinement_never_hides_failure(seed, n):
    rng = np.random.default_rng(seed)
    g = monotone_table(rng, 0.0, 5.0)
    coarse = self_gain_check(g, (0.1, 5.0), n)
    fine = self_gain_check(g, (0.1, 5.0), 2 * n - 1)  # contains every coarse point
    assert fine.worst_margin >= coarse.worst_margin
    if not coarse.passed:
        assert not fine.passed


def test_csv_import(tmp_path):
    p = tmp_path / "g.csv"
    p.write_text("# gain table\ns,value\n0,0\n1,0.4\n2,0.9\n")
    g = load_tabulated_csv(p)
    assert g.domain == (0.0, 2.0)
    assert g(1.5) == pytest.approx(0.65)
    (tmp_path / "bad.csv").write_text("s,value\n0,0\n0,1\n")
    with pytest.raises(ConfigError):
        load_tabulated_csv(tmp_path / "bad.csv")
    (tmp_path / "empty.csv").write_text("s,value\n")
    with pytest.raises(ConfigError):
        load_tabulated_csv(tmp_path / "empty.csv")


def grid(speed, braked=None):
    n = speed.shape[0]
    xs = ys = np.round(np.arange(n) * 0.1 - 0.1 * (n // 2), 12)
    braked = np.zeros(speed.shape, bool) if braked is None else braked
    return SweepGrid(xs, ys, speed, np.full(speed.shape, 100.0), braked, 0.1, "test")


def test_lipschitz_report_constant_region():
    rep = lipschitz_report(grid(np.full((5, 5), 2.0)))
    assert rep.max_ratio == 0.0 and rep.n_pairs == 40
    assert sum(rep.histogram_counts) == 40


def test_lipschitz_report_and_comparison(tmp_path):
    X, Y = np.meshgrid(np.arange(7) * 0.1, np.arange(7) * 0.1, indexing="ij")
    smooth = lipschitz_report(grid(X + 0.0))
    rough_speed = X.copy()
    rough_speed[3, 3] = 5.0
    rough = lipschitz_report(grid(rough_speed))
    assert smooth.max_ratio == pytest.approx(1.0)
    assert rough.max_ratio == pytest.approx((5.0 - 0.2) / 0.1)
    cmp = compare_lipschitz(rough, smooth)
    assert cmp["factor"] == pytest.approx(48.0)
    assert cmp["rough_location_radius"] < 0.1
    write_report(rough, tmp_path / "r.json")
    back = json.loads((tmp_path / "r.json").read_text())
    assert back["max_ratio"] == pytest.approx(rough.max_ratio)


def test_lipschitz_report_tracks_braking():
    speed = np.ones((5, 5))
    braked = np.zeros((5, 5), bool)
    speed[0, 0], braked[0, 0] = 0.0, True
    rep = lipschitz_report(grid(speed, braked))
    assert rep.max_ratio == 0.0
    assert rep.max_ratio_with_braking == pytest.approx(10.0)
    assert rep.n_braked_cells == 1
