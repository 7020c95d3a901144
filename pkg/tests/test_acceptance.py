"""Acceptance criteria 1 to 13, one test per criterion.

Each test prints (and records for the terminal summary) a single line
``C<k> PASS|FAIL: <measured values>`` before asserting.
"""

import time

import numpy as np

import oracles
from conftest import ACCEPTANCE_LINES
from lbm_tbc import boundary as bd
from lbm_tbc import dispersion as dp
from lbm_tbc import tbc_coeffs as tc
from lbm_tbc.harness_cli import InstabilityAbort, beam_slope, run_scenario, scenario_config
from lbm_tbc.lattice_core import Grid1D, SchemeSpec, initialize_at_equilibrium, run

OMEGAS = (1.0, 1.5, 1.9, 2.0)


def verdict(k, ok, detail):
    line = f"C{k} {'PASS' if ok else 'FAIL'}: {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


def scenario(name, **overrides):
    cfg = scenario_config(name)
    cfg.update(overrides)
    return run_scenario(cfg, name)


def timed(name, **overrides):
    t = time.perf_counter()
    r = scenario(name, **overrides)
    return r, time.perf_counter() - t


def first_above(series, threshold):
    idx = np.nonzero(series > threshold)[0]
    return int(idx[0]) if len(idx) else np.inf


# ---------------------------------------------------------------- 1D D1Q2


def test_c01_d1q2_transparency():
    worst_scalar, worst_sys, worst_time = 0.0, 0.0, 0.0
    for om in OMEGAS:
        r, dt = timed(f"d1q2_bump_w{om}")
        worst_scalar, worst_time = max(worst_scalar, r.reflection()), max(worst_time, dt)
        for obs in (0, 1):
            r, dt = timed(f"d1q2_bump_w{om}_systemic", observe=obs)
            worst_sys, worst_time = max(worst_sys, r.reflection()), max(worst_time, dt)
    ok = worst_scalar <= 1e-10 and worst_sys <= 1e-12 and worst_time <= 60
    verdict(1, ok, f"scalar max {worst_scalar:.2e} (<=1e-10), systemic u/v max {worst_sys:.2e} "
                   f"(<=1e-12), slowest run {worst_time:.1f} s (<=60)")


def test_c02_frequency_independence():
    refl = {om: scenario(f"d1q2_multipacket_w{om}").reflection() for om in (1.5, 2.0)}
    ok = max(refl.values()) <= 1e-9
    verdict(2, ok, ", ".join(f"omega={k}: {v:.2e}" for k, v in refl.items()) + " (<=1e-9)")


def test_c03_kinetic_contrast():
    pairs = [(f"d1q2_bump_w{om}", f"d1q2_bump_w{om}_kinetic") for om in OMEGAS]
    pairs += [(f"d1q2_multipacket_w{om}", f"d1q2_multipacket_w{om}_kinetic") for om in (1.5, 2.0)]
    kin_min, ratio_min = np.inf, np.inf
    for tr, kin in pairs:
        rt, rk = scenario(tr).reflection(), scenario(kin).reflection()
        kin_min = min(kin_min, rk)
        ratio_min = min(ratio_min, rk / max(rt, 1e-300))
    ok = kin_min >= 1e-4 and ratio_min >= 1e5
    verdict(3, ok, f"min kinetic {kin_min:.2e} (>=1e-4), min kinetic/transparent "
                   f"{ratio_min:.2e} (>=1e5)")


def test_c04_truncation():
    details, ok = [], True
    for om in (1.5, 1.9):
        tr = scenario(f"d1q2_bump_w{om}_truncated")
        kin = scenario(f"d1q2_bump_w{om}_kinetic")
        n_tr, n_kin = first_above(tr.deviation, 1e-12), first_above(kin.deviation, 1e-12)
        ok &= tr.reflection() <= 1e-6 and n_tr > n_kin
        details.append(f"omega={om}: {tr.reflection():.2e}, first step >1e-12 "
                       f"{n_tr} vs kinetic {n_kin}")
    verdict(4, ok, "; ".join(details) + " (<=1e-6, later than kinetic)")


# ---------------------------------------------------------------- coefficients


def test_c05_coefficient_oracles():
    t0 = time.perf_counter()
    rel = []
    for C in (0.5, -0.3, 0.9, 5 / 6):
        rec = tc.s_recurrence(1.0, C, 200).values
        rel.append(np.abs(tc.s_closed_form_lax_friedrichs(C, 200).values - rec).max()
                   / np.abs(rec).max())
    for C in (0.3, 0.5, 5 / 6):
        rec = tc.s_recurrence(2 / (1 + C), C, 200).values
        rel.append(np.abs(tc.s_geometric_special(C, 200).values - rec).max() / np.abs(rec).max())
    for om in (1.2, 1.7, 1.9, 2.0):
        rec = tc.s_recurrence(om, 5 / 6, 200).values
        _, leg = tc.legendre_B_path(om, 5 / 6, 200)
        rel.append(np.abs(leg.values - rec).max() / np.abs(rec).max())
    res, sys_gap = [], []
    for om, C in ((1.7, 5 / 6), (0.6, -0.4), (2.0, 0.5)):
        res.append(np.abs(oracles.residual_d1q2(list(tc.s_recurrence(om, C, 40).values),
                                                om, C)).max())
    for om, C in ((1.7, 5 / 6), (1.3, 0.5), (2.0, 0.4)):
        sg, sb = tc.systemic_weights(om, C, 25)
        ref_g, ref_b = oracles.d1q2_sigma_fft(om, C, 25)
        sys_gap += [np.abs(sg.values - ref_g).max(), np.abs(sb.values - ref_b).max()]
    for C in (0.1, 0.25, 0.4):
        res.append(np.abs(oracles.residual_d1q3(list(tc.beta_d1q3_fourth(C, 60).values),
                                                C)).max())
        res.append(np.abs(oracles.residual_d1q3(list(tc.upsilon_d1q3_fourth(C, 60).values),
                                                C, left=True)).max())
    sw = SchemeSpec.shallow_water(1.5, 2.0, 1.0, 0.5, 1.0)
    d = tc.shallow_water_d(sw)
    beta, ups = tc.shallow_water_coeffs(sw, 60)
    res.append(np.abs(oracles.residual_shallow_water(list(beta.values), d)).max())
    res.append(np.abs(oracles.residual_shallow_water(list(ups.values), d, left=True)).max())
    args = (1.99, 1 / 2.2, 0.25, 0.1 / 2.2, 0.25)
    b0, b1, b2 = (list(t.values) for t in tc.beta_2d_orders(*args, 60))
    res += [np.abs(r).max() for r in oracles.residual_d2q5(b0, b1, b2, *args)]
    elapsed = time.perf_counter() - t0
    ok = max(rel) <= 1e-11 and max(res) <= 1e-10 and max(sys_gap) <= 1e-9 and elapsed <= 10
    verdict(5, ok, f"cross-oracle max rel {max(rel):.2e} (<=1e-11), residual max "
                   f"{max(res):.2e} (<=1e-10), systemic vs eigenvector oracle "
                   f"{max(sys_gap):.2e} (<=1e-9), {elapsed:.1f} s (<=10)")


def test_c06_asymptotics():
    ratios = []
    lf = tc.s_closed_form_lax_friedrichs(0.5, 400).values
    for n in (200, 400):
        ratios.append(lf[n] / tc.asymptotic_estimate("d1q2_s", {"omega": 1.0, "C": 0.5}, n).value)
    s = tc.s_recurrence(1.2, 5 / 6, 400).values
    for n in (200, 400):
        est = tc.asymptotic_estimate("d1q2_s", {"omega": 1.2, "C": 5 / 6}, n)
        ratios.append(s[n] / est.value)
    damped_dev = max(abs(r - 1) for r in ratios)

    osc_dev, phase_ok = [], True
    om, C = 1.9, 5 / 6
    s = tc.s_recurrence(om, C, 400).values
    ns = np.arange(200, 401)
    est = [tc.asymptotic_estimate("d1q2_s", {"omega": om, "C": C}, int(n)) for n in ns]
    val, env = np.array([e.value for e in est]), np.array([e.envelope for e in est])
    osc_dev.append(np.abs(s[ns] - val).max() / env.max())
    zs = np.nonzero(np.diff(np.sign(s[ns])))[0]
    ze = np.nonzero(np.diff(np.sign(val)))[0]
    phase_ok &= bool(len(zs) == len(ze) and np.abs(zs - ze).max(initial=0) <= 1)
    for C in (0.1, 0.25, 0.4):
        b = tc.beta_d1q3_fourth(C, 560).values
        ns = np.arange(500, 561)
        val = np.array([tc.asymptotic_estimate("d1q3_beta", {"C": C}, int(n)).value for n in ns])
        osc_dev.append(abs(b[500] / val[0] - 1))
        big = np.abs(val) >= 0.2 * np.abs(val).max()
        phase_ok &= bool(np.all(np.sign(b[ns][big]) == np.sign(val[big])))
    Cx, Cy = 1 / 2.2, 0.1 / 2.2
    b2 = tc.beta_2d_orders(2.0, Cx, 0.25, Cy, 0.25, 801)[2].values
    e = tc.asymptotic_estimate("d2q5_beta2", {"Cx": Cx, "Cy": Cy}, 801)
    osc_dev.append(abs(b2[801] - e.value) / e.envelope)
    phase_ok &= bool(np.sign(b2[801]) == np.sign(e.value))
    ok = damped_dev <= 0.10 and max(osc_dev) <= 0.15 and phase_ok
    verdict(6, ok, f"damped max |ratio-1| {damped_dev:.3f} (<=0.10), oscillatory max rel dev "
                   f"{max(osc_dev):.3f} (<=0.15), phase aligned {phase_ok}")


# ---------------------------------------------------------------- D1Q3


def test_c07_d1q3_fourth():
    refl = scenario("d1q3_fourth_bump").reflection()
    kin = scenario("d1q3_fourth_bump_kinetic", heatmap_cadence=1)
    t = np.arange(kin.snapshots.shape[0]) * kin.dt
    x = np.linspace(-3.0, 3.0, 1002)[1:-1]
    keep = (t >= 3.5) & (t <= 5.0)
    slope = beam_slope(kin.snapshots[keep], x, t[keep], (-2.9, 2.9), mode="space")
    C = 1.0 / 4.0
    expected = -3.0 / (2 * C * C + 1)
    ok = refl <= 1e-9 and abs(slope / expected - 1) <= 0.05
    verdict(7, ok, f"transparent {refl:.2e} (<=1e-9), kinetic beam slope {slope:.4f} vs "
                   f"{expected:.4f} ({100 * abs(slope / expected - 1):.2f}% <=5%)")


# ---------------------------------------------------------------- stability


def _random_spec(kind, rng):
    if kind == "d1q2":
        om = 2.0 if rng.random() < 0.2 else rng.uniform(0.05, 2.0)
        return SchemeSpec.d1q2(om, 1.0, rng.uniform(-1.3, 1.3))
    if kind == "d1q3":
        return SchemeSpec.d1q3_fourth(1.0, rng.uniform(-0.8, 0.8))
    if kind == "sw":
        return SchemeSpec.shallow_water(rng.uniform(0.05, 2.0), rng.uniform(0.5, 3.0), 1.0,
                                        rng.uniform(-1.5, 1.5), 1.0)
    if kind == "vectorial":
        return SchemeSpec.shallow_water_vectorial(rng.uniform(0.05, 2.0), rng.uniform(1.0, 4.0),
                                                  1.0, rng.uniform(-2.5, 2.5), 1.0)
    om = 2.0 if rng.random() < 0.2 else rng.uniform(0.05, 1.999)
    return SchemeSpec.d2q5(om, 1.0, rng.uniform(-0.8, 0.8), rng.uniform(-0.8, 0.8),
                           rng.uniform(0.0, 1.1), rng.uniform(0.0, 1.1))


def _triangle_mismatch(Cx, Cy, with_psd, h=0.02):
    g = np.arange(0.0, 1.0 + h / 2, h)
    SX, SY = np.meshgrid(g, g, indexing="ij")

    def region(a, b):
        inside = (a >= Cx * Cx) & (b >= Cy * Cy) & (a + b <= 1)
        if with_psd:
            inside &= a * b - a * Cy * Cy - b * Cx * Cx >= 0
        return inside

    expected = region(SX, SY)
    near = np.zeros_like(expected)
    for dx in (-h, 0.0, h):
        for dy in (-h, 0.0, h):
            near |= region(SX + dx, SY + dy) != expected
    swept = np.array([[dp.d2q5_stability_sweep(1.5, Cx, Cy, a, b, n=101)[0] for b in g]
                      for a in g])
    return int(((swept != expected) & ~near).sum())


def test_c08_stability_predicates():
    rng = np.random.default_rng(2024)
    disagree = {}
    for kind in ("d1q2", "d1q3", "sw", "vectorial", "d2q5"):
        bad = 0
        for _ in range(400):
            v = dp.is_stable(_random_spec(kind, rng))
            bad += v.stable != v.numeric_stable
        disagree[kind] = bad
    tri_axis = _triangle_mismatch(0.3, 0.0, with_psd=False)
    tri_cut = _triangle_mismatch(0.3, 0.2, with_psd=True)
    ok = not any(disagree.values()) and tri_axis == 0 and tri_cut == 0
    verdict(8, ok, f"disagreements over 400 points {disagree}; triangle off-boundary "
                   f"mismatches (Cy=0) {tri_axis}, (triangle and PSD cut) {tri_cut}")


# ---------------------------------------------------------------- 2D


def test_c09_d2q5_ordering():
    energy, times = {}, {}
    for o in ("00", "11", "21"):
        r, times[o] = timed(f"d2q5_bump_o{o}")
        energy[o] = r.energy[-1]
    t0 = time.perf_counter()
    aborted, y_edge = False, False
    try:
        scenario("d2q5_bump_o22")
    except InstabilityAbort as e:
        aborted = True
        u = np.abs(e.report.final[0, 1:-1, 1:-1])
        _, k = np.unravel_index(int(np.argmax(u)), u.shape)
        y_edge = min(k, u.shape[1] - 1 - k) <= 5
    times["22"] = time.perf_counter() - t0
    ok = (energy["00"] > energy["11"] > energy["21"] and aborted and y_edge
          and sum(times.values()) <= 600)
    verdict(9, ok, f"energy <0,0> {energy['00']:.3e} > <1,1> {energy['11']:.3e} > <2,1> "
                   f"{energy['21']:.3e}; <2,2> aborted {aborted} at y-boundary {y_edge}; "
                   f"{sum(times.values()):.0f} s (<=600)")


# ---------------------------------------------------------------- shallow water


def _sw_slope(name):
    r = scenario(name, observe=0, heatmap_cadence=1)
    t = np.arange(r.snapshots.shape[0]) * r.dt
    x = np.linspace(-3.0, 3.0, 1002)[1:-1]
    keep = (t >= 3.3) & (t <= 7.4)
    return beam_slope(r.snapshots[keep], x, t[keep], (-2.9, 2.9), mode="spacetime")


def test_c10_shallow_water_linear():
    refl = max(scenario("sw_linear_transparent", observe=obs).reflection() for obs in (0, 1))
    lam, ub, cs = 2.0, 0.5, 1.0
    expected = 2 * lam * lam * ub / (lam * lam + ub * ub - cs * cs)
    kin, ext = _sw_slope("sw_linear_kinetic"), _sw_slope("sw_linear_extrapolation")
    ok = refl <= 1e-9 and abs(kin / expected - 1) <= 0.05 and abs(ext / expected - 1) <= 0.05
    verdict(10, ok, f"transparent {refl:.2e} (<=1e-9), checkerboard slope kinetic {kin:.4f}, "
                    f"extrapolation {ext:.4f} vs {expected:.4f} "
                    f"({100 * abs(kin / expected - 1):.2f}% <=5%)")


def test_c11_shallow_water_nonlinear():
    absolute = {}
    for eps in (1e-3, 5e-4):
        r = scenario("sw_nonlinear", datum_perturbation=eps)
        absolute[eps] = r.reflection() * eps * 0.5
    ratio = absolute[1e-3] / absolute[5e-4]
    ok = 1e-7 / 3 <= absolute[1e-3] <= 3e-7 and abs(ratio / 4 - 1) <= 0.25
    verdict(11, ok, f"reflection {absolute[1e-3]:.2e} (1e-7 within x3), halving ratio "
                    f"{ratio:.3f} (4 +- 25%)")


# ---------------------------------------------------------------- vectorial


def test_c12_vectorial():
    refl = max(scenario("vectorial_supersonic", observe=k).reflection() for k in range(4))
    spec = SchemeSpec.shallow_water_vectorial(1.95, 3.0, 1.0, 1.5, 1.0)
    grid = Grid1D(-3.0, 3.0, 300, spec.lam)
    rng = np.random.default_rng(12)
    u0 = rng.normal(size=(2,) + grid.shape)
    f = run(spec, initialize_at_equilibrium(spec, grid, u0), bd.Periodic(), 200)
    w0 = np.linalg.inv(spec.R) @ u0
    parts = []
    for k in range(2):
        s = SchemeSpec.d1q2(spec.omega, spec.lam, spec.eig_values[k])
        parts.append(run(s, initialize_at_equilibrium(s, grid, w0[k]), bd.Periodic(), 200).data)
    ws = np.stack(parts, axis=1)
    back = np.concatenate([spec.R @ ws[0], spec.R @ ws[1]])
    equiv = np.abs(f.data[:, 1:-1] - back[:, 1:-1]).max()
    ok = refl <= 1e-9 and equiv <= 1e-12
    verdict(12, ok, f"supersonic reflection {refl:.2e} (<=1e-9), diagonalization gap "
                    f"{equiv:.2e} (<=1e-12)")


# ---------------------------------------------------------------- convergence


def test_c13_convergence_orders():
    o_w2 = oracles.observed_order(SchemeSpec.d1q2(2.0, 2.0, 1.0))
    o_w15 = oracles.observed_order(SchemeSpec.d1q2(1.5, 2.0, 1.0))
    o_q3 = oracles.observed_order(SchemeSpec.d1q3_fourth(4.0, 1.0))
    ok = o_w2 >= 1.9 and 0.8 <= o_w15 <= 1.3 and 0.8 <= o_q3 <= 1.3
    verdict(13, ok, f"D1Q2 omega=2 {o_w2:.3f} (>=1.9), omega=1.5 {o_w15:.3f} ([0.8,1.3]), "
                    f"D1Q3 fourth {o_q3:.3f} ([0.8,1.3])")

