import math

import numpy as np
import pytest

import oracles
from lbm_tbc import dispersion as dp
from lbm_tbc.lattice_core import SchemeSpec

SPECS = [
    SchemeSpec.d1q2(1.7, 1.2, 1.0),
    SchemeSpec.d1q3_fourth(4.0, 1.0),
    SchemeSpec.shallow_water(1.5, 2.0, 1.0, 0.5, 1.0),
    SchemeSpec.shallow_water_vectorial(1.9, 3.0, 1.0, 1.5, 1.0),
    SchemeSpec.d2q5(1.5, 2.2, 1.0, 0.1, 0.25, 0.25),
]


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: s.kind)
def test_char_poly_is_determinant(spec):
    rng = np.random.default_rng(0)
    P = dp.char_poly(spec)
    for _ in range(20):
        xi, xy = rng.uniform(-3, 3, size=2)
        z = complex(*rng.normal(size=2))
        A = dp.amplification_matrix(spec, xi, xy if spec.dim == 2 else None)
        det = np.linalg.det(z * np.eye(spec.q) - A)
        val = P(z, np.exp(1j * xi), np.exp(1j * xy) if spec.dim == 2 else None)
        assert abs(val - det) <= 1e-10 * max(1.0, abs(det))


def test_amplification_matches_hand_oracles():
    for xi in np.linspace(-3, 3, 13):
        A = dp.amplification_matrix(SchemeSpec.d1q2(1.7, 1.0, 0.6), xi)
        assert np.allclose(A, oracles.d1q2_amplification(1.7, 0.6, xi), atol=1e-14)
        A = dp.amplification_matrix(SchemeSpec.d1q3_fourth(1.0, 0.3), xi)
        assert np.allclose(A, oracles.d1q3_fourth_amplification(0.3, xi), atol=1e-14)


def test_time_roots_at_zero_and_pi():
    s = SchemeSpec.d1q2(1.7, 1.0, 0.6)
    assert np.allclose(sorted(dp.time_roots(s, 0.0).real), [-0.7, 1.0])
    assert np.allclose(sorted(dp.time_roots(s, np.pi).real), [-1.0, 0.7])
    r = dp.time_roots(SchemeSpec.d1q3_fourth(1.0, 0.3), 0.0)
    assert np.allclose(sorted(r.real), [-1, -1, 1], atol=1e-7)


def test_time_roots_unit_circle_at_omega_two():
    s = SchemeSpec.d1q2(2.0, 1.0, 0.8)
    for xi in np.linspace(-np.pi, np.pi, 41):
        assert np.allclose(np.abs(dp.time_roots(s, xi)), 1.0, atol=1e-12)


def test_consistency_expansion():
    a, lam = 1.0, 2.0
    s = SchemeSpec.d1q2(1.5, lam, a)
    errs = []
    hs = np.array([1e-2, 5e-3, 2.5e-3])
    for h in hs:
        r = dp.time_roots(s, h)
        z = r[np.argmin(abs(r - 1))]
        errs.append(abs(z - (1 - 1j * a * h / lam)))
    slope = np.polyfit(np.log(hs), np.log(errs), 1)[0]
    assert slope == pytest.approx(2.0, abs=0.05)


def test_spatial_roots_examples():
    s = SchemeSpec.d1q2(1.7, 1.0, 0.6)
    r = dp.spatial_roots(s, 1.0)
    assert r.kappa_s == pytest.approx(1.0)
    assert r.kappa_u == pytest.approx(r.Pi)
    r = dp.spatial_roots(SchemeSpec.d1q2(1.0, 1.0, 0.5), 2.0)
    assert r.Pi == pytest.approx(3.0)
    s3 = SchemeSpec.d1q3_fourth(1.0, 0.25)
    for z, ku in ((1.0, -1.0), (-1.0, 1.0)):
        r = dp.spatial_roots(s3, z)
        assert r.kappa_s == pytest.approx(1.0, abs=1e-6)
        assert r.kappa_u == pytest.approx(ku, abs=1e-6)
    with pytest.raises(dp.DomainError):
        dp.spatial_roots(s, 0.5)


def test_spatial_roots_degenerate():
    C = 0.5
    r = dp.spatial_roots(SchemeSpec.d1q2(2 / (1 + C), 1.0, C), 1.5)
    assert r.degenerate and r.kappa_u is None


def test_spatial_roots_against_oracle():
    rng = np.random.default_rng(1)
    for _ in range(200):
        om, C = rng.uniform(0.1, 2.0), rng.uniform(-0.95, 0.95)
        z = rng.uniform(1.01, 10) * np.exp(1j * rng.uniform(-np.pi, np.pi))
        ks, ku = oracles.d1q2_roots(om, C, z)
        r = dp.spatial_roots(SchemeSpec.d1q2(om, 1.0, C), z)
        assert abs(r.kappa_s - ks) <= 1e-9 * max(1, abs(ks))
        assert abs(r.kappa_s - dp.d1q2_kappa_s_closed_form(om, C, z)) <= 1e-9


def test_branch_points_outside_unit_disk():
    for om in np.linspace(0.05, 1.99, 40):
        for C in np.linspace(-0.99, 0.99, 20):
            b = (C * C - 1) * om ** 2 + 2 * om - 2
            Z = np.roots([(om - 1) ** 2, b, 1.0]) if om != 1 else np.array([-1 / b])
            assert np.all(np.sqrt(np.abs(Z)) > 1 + 1e-10)
    # at z^2 = 1 the radicand equals (C omega)^2, so C = 0 puts a branch point on the circle
    assert np.allclose(np.abs(np.roots([0.25, -1.25, 1.0])).min(), 1.0)
    for C in np.linspace(-0.99, 0.99, 21):
        Z = np.roots([1.0, (C * C - 1) * 4 + 2, 1.0])
        assert np.allclose(np.sqrt(np.abs(Z)), 1.0, atol=1e-10)


def test_stability_examples():
    assert not dp.is_stable(SchemeSpec.d1q2(2.0, 1.0, 1.0), sweep=False).stable
    assert dp.is_stable(SchemeSpec.d1q2(1.5, 1.0, 1.0), sweep=False).stable
    v = dp.is_stable(SchemeSpec.d2q5(1.5, 1.0, 0.1, 0.1, 0.6, 0.6), sweep=False)
    assert not v.stable and "S_x + S_y" in v.rule
    assert not dp.is_stable(SchemeSpec.shallow_water(1.5, 3.0, 1.0, 1.5, 1.0), sweep=False).stable
    assert dp.is_stable(SchemeSpec.shallow_water_vectorial(1.9, 3.0, 1.0, 1.5, 1.0)).stable


def test_d2q5_sweep_reductions():
    assert dp.d2q5_stability_sweep(1.5, 0.0, 0.0, 0.4, 0.4)[0]
    for Sx, Sy in ((0.3, 0.5), (0.6, 0.6)):
        val = dp.d2q5_inequality(1.0, 1.0, 0.1, 0.1, Sx, Sy)
        assert val == pytest.approx((Sx + Sy) * (Sx + Sy - 1))
    for Cx, Sx in ((0.3, 0.5), (0.8, 0.5)):
        mu = np.linspace(-1, 1, 201)
        stable_1d = np.all(dp.d2q5_inequality(mu, 0.0, Cx, 0.0, Sx, 0.0) <= 1e-14)
        assert stable_1d == (Cx * Cx <= Sx <= 1)


def test_d2q5_closed_form_vs_symbol():
    assert oracles.d2q5_symbol_max_modulus(1.99, 1 / 2.2, 0.1 / 2.2, 0.25, 0.25, n=41) \
        <= 1 + 1e-9
    assert oracles.d2q5_symbol_max_modulus(1.5, 0.5, 0.3, 0.2, 0.2, n=41) > 1 + 1e-3
    assert not dp.is_stable(SchemeSpec.d2q5(1.5, 1.0, 0.5, 0.3, 0.2, 0.2), sweep=False).stable


def test_diffusion_matrix():
    D, pd, psd = dp.diffusion_matrix(0.0, 0.0, 0.3, 0.4)
    assert np.allclose(D, np.diag([0.3, 0.4])) and pd and psd
    Cx, Cy, Sx = 0.3, 0.4, 0.25
    Sy = Sx * Cy ** 2 / (Sx - Cx ** 2)
    D, pd, psd = dp.diffusion_matrix(Cx, Cy, Sx, Sy)
    assert psd and not pd
    assert not dp.diffusion_matrix(0.0, 0.0, -0.1, 0.4)[2]


def test_group_velocities():
    s = SchemeSpec.d1q2(1.7, 1.2, 1.0)
    assert dp.group_velocity(s, 0.0, 0.0) == pytest.approx(1.0)
    eta = -1j * np.log(complex(1 - s.omega))
    assert dp.group_velocity(s, eta, 0.0) == pytest.approx(-1.0)
    s3 = SchemeSpec.d1q3_fourth(4.0, 1.0)
    assert dp.group_velocity(s3, 0.0, np.pi) == pytest.approx(-3 / (2 * s3.C ** 2 + 1))
    with pytest.raises(dp.DegenerateGroupVelocityError):
        dp.group_velocity(s3, np.pi, 0.0)


def test_critical_omega():
    w, lim = dp.critical_omega_double_root(5 / 6)
    assert w == pytest.approx(72 / 25 * (1 - math.sqrt(11 / 36)))
    assert w == pytest.approx(1.28802, abs=1e-5) and not lim
    assert dp.critical_omega_double_root(1 - 1e-12)[0] == pytest.approx(2.0, abs=1e-5)
    assert dp.critical_omega_double_root(0.0) == (1.0, True)
    P = dp.char_poly(SchemeSpec.d1q2(w, 1.0, 5 / 6))
    z = 1j * math.sqrt(w - 1)
    for kappa in (1j, -1j):
        if P.residual(z, kappa) <= 1e-8:
            Pz, _ = P.derivatives(z, kappa)
            assert abs(Pz) <= 1e-8
            break
    else:
        pytest.fail("no double root at +-i sqrt(omega* - 1)")


def test_damping_regimes():
    r = dp.damping_regime(1.0, 5 / 6)
    assert r.name == "below-omega*" and set(r.physical_undamped) == {0.0, math.pi, -math.pi}
    assert dp.damping_regime(2.0, 5 / 6).name == "omega=2"
    r = dp.damping_regime(1.9, 5 / 6)
    assert r.name == "at-or-above-omega*" and r.physical_undamped == (0.0,)
    assert set(r.spurious_undamped) == {math.pi, -math.pi}


def test_damping_matches_roots():
    C = 5 / 6
    for om in (1.0, 1.9):
        s = SchemeSpec.d1q2(om, 1.0, C)
        reg = dp.damping_regime(om, C)
        xi = np.linspace(-np.pi, np.pi, 201)
        for x in xi:
            roots = dp.time_roots(s, x)
            undamped = np.abs(np.abs(roots) - 1) < 1e-9
            if undamped.any():
                assert np.isclose(abs(x), 0) or np.isclose(abs(x), np.pi)


def test_vectorial_factorization():
    rng = np.random.default_rng(9)
    spec = SchemeSpec.shallow_water_vectorial(1.9, 3.0, 1.0, 1.5, 1.0)
    P = dp.char_poly(spec)
    for _ in range(100):
        z, k = complex(*rng.normal(size=2)), complex(*rng.normal(size=2))
        prod = 1.0
        for Ck in spec.courants:
            prod = prod * dp.char_poly(SchemeSpec.d1q2(spec.omega, 1.0, Ck))(z, k)
        assert abs(P(z, k) - prod) <= 1e-10 * max(1.0, abs(prod))
