import numpy as np
import pytest

from lbm_tbc import boundary as bd
from lbm_tbc.lattice_core import (
    DimensionError,
    Field,
    Grid1D,
    Grid2D,
    SchemeSpec,
    distributions_to_moments,
    initialize_at_equilibrium,
    moments_to_distributions,
    run,
    step,
)

SPECS = [
    SchemeSpec.d1q2(1.7, 1.2, 1.0),
    SchemeSpec.d1q3_fourth(4.0, 1.0),
    SchemeSpec.d2q5(1.5, 2.2, 1.0, 0.1, 0.25, 0.25),
    SchemeSpec.shallow_water(1.5, 2.0, 1.0, 0.5, 1.0),
    SchemeSpec.shallow_water_vectorial(1.9, 3.0, 1.0, 1.5, 1.0),
]


def test_grid1d_spacing():
    g = Grid1D(-3.0, 3.0, 1000, 1.2)
    assert g.dx == pytest.approx(6 / 1001)
    assert g.dt * 1.2 == pytest.approx(g.dx, rel=1e-15)
    assert g.x[0] == -3.0 and g.x[-1] == pytest.approx(3.0)
    assert g.shape == (1002,)


@pytest.mark.parametrize("args", [(1.0, 0.0, 10, 1.0), (0.0, 1.0, 1, 1.0), (0.0, 1.0, 10, 0.0)])
def test_grid1d_rejects(args):
    with pytest.raises(ValueError):
        Grid1D(*args)


def test_grid2d_integer_K():
    g = Grid2D(-3.0, 3.0, -2.0, 2.0, 300, 2.2)
    assert g.K == 200 and g.shape == (302, 202)
    with pytest.raises(ValueError):
        Grid2D(-3.0, 3.0, -2.0, 2.0, 301, 2.2)


def test_d1q2_distribution_examples():
    s = SPECS[0]
    assert np.allclose(moments_to_distributions(s, [1.0, 1.0]), [1.0, 0.0])
    assert np.allclose(moments_to_distributions(s, [2.0, 0.0]), [1.0, 1.0])
    assert np.allclose(distributions_to_moments(s, [1.0, 0.0]), [1.0, 1.0])


def test_shallow_water_moments_from_distributions():
    s = SchemeSpec.shallow_water(1.0, 2.0, 1.0, 0.5, 1.0)
    m = distributions_to_moments(s, [0.0, 1.0, 0.0])
    assert m[1] == 2.0 and m[2] == 4.0


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: s.kind)
def test_round_trip(spec):
    rng = np.random.default_rng(1)
    m = rng.normal(size=(spec.q, 7))
    back = distributions_to_moments(spec, moments_to_distributions(spec, m))
    assert np.abs(back - m).max() <= 1e-14


def test_wrong_component_count():
    with pytest.raises(DimensionError):
        moments_to_distributions(SPECS[0], np.zeros(3))


def test_initialize_equilibrium_values():
    g = Grid1D(0.0, 1.0, 10, 1.0)
    f = initialize_at_equilibrium(SchemeSpec.d1q2(1.5, 1.0, 5 / 6), g, np.ones(12))
    assert np.allclose(f.data[1], 5 / 6)
    f = initialize_at_equilibrium(SchemeSpec.d1q2(1.5, 1.0, 5 / 6), g, np.zeros(12))
    assert not f.data.any()
    C = 0.3
    f = initialize_at_equilibrium(SchemeSpec.d1q3_fourth(1.0, C), g, np.ones(12))
    assert np.allclose(f.data[2], (1 + 2 * C * C) / 3)


def test_initialize_shape_mismatch():
    g = Grid1D(0.0, 1.0, 10, 1.0)
    with pytest.raises(DimensionError):
        initialize_at_equilibrium(SPECS[0], g, np.ones(5))


def test_field_rejects_nonfinite():
    with pytest.raises(FloatingPointError):
        Field(np.array([[np.nan, 0.0]]))


@pytest.mark.parametrize("spec", [SPECS[0], SPECS[1], SPECS[3], SPECS[4]], ids=lambda s: s.kind)
def test_periodic_constant_and_mass(spec):
    g = Grid1D(0.0, 1.0, 64, spec.lam)
    n_cons = len(spec.conserved)
    const = initialize_at_equilibrium(spec, g, np.ones((n_cons,) + g.shape))
    out = run(spec, const, bd.Periodic(), 20)
    assert np.abs(out.data[:, 1:-1] - const.data[:, 1:-1]).max() <= 1e-14
    rng = np.random.default_rng(0)
    f = initialize_at_equilibrium(spec, g, rng.normal(size=(n_cons,) + g.shape))
    m0 = f.data[:n_cons, 1:-1].sum(axis=-1)
    f = bd.Periodic().start(spec, f)
    for _ in range(1000):
        f = step(spec, f, bd.Periodic())
    drift = np.abs(f.data[:n_cons, 1:-1].sum(axis=-1) - m0)
    assert drift.max() <= 1e-12 * max(1.0, np.abs(m0).max())


def test_d1q2_impulse_hand_computation():
    # omega = 1, C = 1/2: v* = u/2, f+ = 3u/4, f- = u/4
    spec = SchemeSpec.d1q2(1.0, 1.0, 0.5)
    data = np.zeros((2, 5))
    data[0, 2] = 1.0
    out = step(spec, Field(data), bd.Periodic())
    assert np.allclose(out.data[0, 1:4], [0.25, 0.0, 0.75])
    assert np.allclose(out.data[1, 1:4], [-0.25, 0.0, 0.75])


def test_step_deterministic():
    spec = SPECS[0]
    g = Grid1D(-1.0, 1.0, 50, spec.lam)
    f0 = initialize_at_equilibrium(spec, g, np.cos(g.x))
    a = run(spec, f0, bd.Boundary1D(bd.Transparent(), bd.Transparent()), 30)
    b = run(spec, f0, bd.Boundary1D(bd.Transparent(), bd.Transparent()), 30)
    assert np.array_equal(a.data, b.data)


def test_history_underflow():
    from lbm_tbc.lattice_core import HistoryUnderflowError

    h = bd.BoundaryHistory((1,))
    h.append(np.zeros(1))
    with pytest.raises(HistoryUnderflowError):
        bd.convolve_history(np.ones(4), h, 5, 3)
