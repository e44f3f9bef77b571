import numpy as np
import pytest

from reshapeqp.actuation import (
    LinearActuation,
    exact_step,
    first_order_model,
    ios_gain,
    load_model,
    quadrotor_model,
    random_sinusoid,
    save_model,
    step,
    tracking_error_from_zeta,
    verify_assumption1,
    zeta,
)
from reshapeqp.errors import ConfigError

QUAD = quadrotor_model()


def test_quadrotor_shapes_and_eigenvalues():
    assert QUAD.A.shape == (8, 8) and QUAD.B.shape == (8, 2) and QUAD.C.shape == (2, 8)
    eig = np.linalg.eigvals(QUAD.A)
    expected = []
    for a, b in [(1.58, 2.92), (2.68, 7.18), (2.56, 6.86), (2.14, 3.71)]:
        expected += [complex(-a, b), complex(-a, -b)]
    key = lambda z: (round(z.real, 9), round(z.imag, 9))  # noqa: E731
    np.testing.assert_allclose(sorted(eig, key=key), sorted(expected, key=key), atol=1e-12)
    assert QUAD.max_real_eig() == pytest.approx(-1.58, abs=1e-12)
    assert QUAD.is_hurwitz()


def test_quadrotor_dc_residual_reported():
    # the identified model meets unit DC gain only approximately
    assert QUAD.dc_residual() == pytest.approx(1.0620e-3, rel=1e-3)
    assert QUAD.check_dc_gain()


def test_dc_gain_warning():
    m = LinearActuation(-np.eye(2), 0.5 * np.eye(2), np.eye(2))
    with pytest.warns(UserWarning):
        assert not m.check_dc_gain()


def test_unstable_model_not_hurwitz():
    m = LinearActuation(np.eye(2), np.eye(2), np.eye(2))
    assert not m.is_hurwitz()
    with pytest.raises(ValueError):
        ios_gain(m)


def test_shape_validation():
    with pytest.raises(ValueError):
        LinearActuation(np.eye(3), np.eye(2), np.eye(2))


def test_step_equilibrium():
    z, v = step(QUAD, np.zeros(8), np.zeros(2), 1e-3)
    assert np.all(z == 0) and np.all(v == 0)
    with pytest.raises(ValueError):
        step(QUAD, np.zeros(8), np.zeros(2), 0.0)


def test_exact_model_tracks_constant_reference():
    m = first_order_model()
    assert m.dc_residual() == 0.0
    z = np.zeros(2)
    ref = np.array([0.7, -0.4])
    for _ in range(10_000):
        z, v = step(m, z, ref, 1e-3)
    np.testing.assert_allclose(v, ref, rtol=1e-2)


def test_rk4_matches_matrix_exponential():
    z_rk = z_ex = np.zeros(8)
    ref = np.array([1.0, -0.5])
    for _ in range(1000):
        z_rk, _ = step(QUAD, z_rk, ref, 1e-3)
        z_ex, _ = exact_step(QUAD, z_ex, ref, 1e-3)
    assert np.max(np.abs(z_rk - z_ex)) <= 1e-8


def test_rk4_fourth_order():
    ref = np.array([1.0, -0.5])
    z0 = np.linspace(-1, 1, 8)
    z_ref, _ = exact_step(QUAD, z0, ref, 0.4)
    errs = []
    for n in (4, 8, 16):
        z = z0
        for _ in range(n):
            z, _ = step(QUAD, z, ref, 0.4 / n)
        errs.append(np.linalg.norm(z - z_ref))
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(rates > 3.7), rates


def test_ios_gain_identity_p_formula():
    g = ios_gain(QUAD)
    Q = -(QUAD.A + QUAD.A.T)
    lam_q = np.linalg.eigvalsh(Q)[0]
    assert lam_q == pytest.approx(3.16, abs=1e-12)
    xi = 0.5 * lam_q
    lam_q_xi = np.linalg.eigvalsh(Q - xi * np.eye(8))[0]
    C_zeta = QUAD.C @ np.linalg.inv(QUAD.A)
    slope = 2 * np.linalg.norm(C_zeta, 2) * np.linalg.norm(QUAD.B, 2) / lam_q_xi
    assert g.slope == pytest.approx(slope, rel=1e-12)
    assert g.slope == pytest.approx(3.2214, rel=1e-4)
    assert g.lam == pytest.approx(0.79) and g.xi == pytest.approx(1.58)
    assert g.c_v >= 1.0 and g.slope > 0 and g.lam > 0


def test_ios_gain_scales_with_C():
    doubled = LinearActuation(QUAD.A, QUAD.B, 2 * QUAD.C)
    assert ios_gain(doubled).slope == pytest.approx(2 * ios_gain(QUAD).slope, rel=1e-12)


def test_ios_gain_needs_negative_definite_symmetric_part():
    m = LinearActuation([[-1.0, 10.0], [0.0, -1.0]], np.eye(2), np.eye(2))
    assert m.is_hurwitz()
    with pytest.raises(ValueError):
        ios_gain(m)
    with pytest.raises(ValueError):
        ios_gain(QUAD, xi_fraction=1.0)


def _rk4(f, x, t, dt):
    k1 = f(t, x)
    k2 = f(t + dt / 2, x + dt / 2 * k1)
    k3 = f(t + dt / 2, x + dt / 2 * k2)
    k4 = f(t + dt, x + dt * k3)
    return x + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def test_zeta_transform_equivalence():
    sig, dsig = random_sinusoid(np.random.default_rng(5), 2)
    dt, n = 1e-3, 3000
    z = np.random.default_rng(6).normal(size=8)
    ze = zeta(QUAD, z, sig(0.0))
    worst = 0.0
    for k in range(n):
        t = k * dt
        z = _rk4(lambda s, x: QUAD.A @ x + QUAD.B @ sig(s), z, t, dt)
        ze = _rk4(lambda s, x: QUAD.A @ x + QUAD.B @ dsig(s), ze, t, dt)
        err_z = QUAD.C @ z - sig(t + dt)
        err_ze = tracking_error_from_zeta(QUAD, ze) - (QUAD.C @ np.linalg.solve(QUAD.A, QUAD.B) + np.eye(2)) @ sig(t + dt)
        worst = max(worst, float(np.max(np.abs(err_z - err_ze))))
    assert worst <= 1e-8


def test_zero_input_zero_error():
    z = np.zeros(8)
    for _ in range(100):
        z, v = step(QUAD, z, np.zeros(2), 1e-3)
    assert np.all(v == 0)


def test_exact_model_error_decays():
    m = first_order_model(rate=1.0)
    lam_q = np.linalg.eigvalsh(-(m.A + m.A.T))[0]
    T = 10.0 / lam_q
    dt = 1e-3
    errs = []
    for ref in (np.array([0.06, 0.08]), np.array([1.0, 2.0])):
        z = np.zeros(2)
        for _ in range(int(round(T / dt))):
            z, v = step(m, z, ref, dt)
        # from rest the error is exp(-lam_q T / 2) |ref|
        err = np.linalg.norm(v - ref)
        assert err == pytest.approx(np.exp(-5.0) * np.linalg.norm(ref), rel=1e-9)
        errs.append(err)
    # below 1e-3 only while |ref| < exp(5) * 1e-3 ~ 0.148
    assert errs[0] < 1e-3 < errs[1]


def test_assumption1_bounds_hold_on_short_runs():
    rep = verify_assumption1(QUAD, ios_gain(QUAD), trials=10, seed=3, horizon=2.0)
    assert rep.passed
    assert rep.max_tracking_margin <= 0 and rep.max_state_margin <= 0
    with pytest.raises(ValueError):
        verify_assumption1(QUAD, ios_gain(QUAD), trials=5)


def test_model_json_round_trip(tmp_path):
    save_model(QUAD, tmp_path / "m.json")
    back = load_model(tmp_path / "m.json")
    for k in "ABC":
        np.testing.assert_array_equal(getattr(back, k), getattr(QUAD, k))
    assert back.name == "quadrotor"


def test_model_json_header_mismatch():
    d = QUAD.to_dict()
    d["m"] = 7
    with pytest.raises(ConfigError):
        LinearActuation.from_dict(d)
    with pytest.raises(ConfigError):
        LinearActuation.from_dict({"A": [[1.0]]})
