"""Scenarios, initial data, metrics, figure data and the ``lbm`` command.

Configuration files are flat ``key = value`` documents; ``#`` starts a
comment.  Numbers accept fractions such as ``6/5``.  See the README for the
list of keys.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import glob
import hashlib
import math
import os
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from . import boundary as bd
from . import dispersion as dp
from . import tbc_coeffs as tc
from .lattice_core import Grid1D, Grid2D, SchemeSpec, initialize_at_equilibrium, step


class ConfigError(ValueError):
    """Invalid or incomplete scenario configuration."""


class InstabilityAbort(RuntimeError):
    """The interior max-norm exceeded the abort threshold."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


ABORT_FACTOR = 1e6
LOG_FLOOR = -16.0


# ---------------------------------------------------------------- initial data


def _bump(y, width=1.0):
    return np.where(np.abs(y) < width, np.cos(np.pi * y / (2 * width)) ** 10, 0.0)


def initial_datum(name: str, params: Optional[dict], grid):
    """Samples of a named initial datum on the grid nodes.

    Known names: ``bump``, ``multipacket``, ``radial_bump``, ``sw_bump``,
    ``sw_gaussian`` and ``zero``.  Shallow-water data return the two
    conserved moments (h, h u).
    """
    p = dict(params or {})
    amp = float(p.get("amplitude", 1.0))
    if name == "zero":
        return np.zeros(grid.shape)
    if name == "bump":
        return amp * _bump(grid.x - float(p.get("center", 0.0)))
    if name == "multipacket":
        x = grid.x
        out = np.zeros_like(x)
        for k in range(4):
            y = x + 3 - 1.2 * (k + 1)
            out += _bump(y) * np.cos(5 * np.pi * 2 ** k * y)
        return amp * out
    if name == "radial_bump":
        X, Y = np.meshgrid(grid.x, grid.y, indexing="ij")
        r = np.sqrt(X * X + Y * Y)
        return amp * np.where(r < 1, np.cos(np.pi * r / 2) ** 10, 0.0)
    if name == "sw_bump":
        h = amp * np.where(np.abs(grid.x) < 0.5, np.cos(np.pi * grid.x) ** 10, 0.0)
        return np.stack([h, np.zeros_like(h)])
    if name == "sw_gaussian":
        hbar, ubar = float(p["hbar"]), float(p["ubar"])
        eps = float(p.get("perturbation", 1e-3))
        h = hbar + eps * np.exp(-100 * grid.x ** 2)
        return np.stack([h, h * ubar])
    raise ConfigError(f"unknown initial datum {name!r}")


# ---------------------------------------------------------------- configuration


def _value(text: str):
    t = text.strip()
    low = t.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    try:
        return int(t)
    except ValueError:
        pass
    try:
        return float(Fraction(t))
    except (ValueError, ZeroDivisionError):
        return t


def parse_config(text: str) -> dict:
    """Parse a flat ``key = value`` document."""
    cfg = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        k, v = line.split("=", 1)
        cfg[k.strip()] = _value(v)
    return cfg


def config_hash(cfg: dict) -> str:
    canon = "\n".join(f"{k}={cfg[k]!r}" for k in sorted(cfg))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def _get(cfg, key, default=None, required=False):
    if key in cfg:
        return cfg[key]
    if required:
        raise ConfigError(f"missing key {key!r}")
    return default


def build_spec(cfg: dict) -> SchemeSpec:
    s = _get(cfg, "scheme", required=True)
    lam = float(_get(cfg, "lam", required=True))
    try:
        if s == "d1q2":
            return SchemeSpec.d1q2(_get(cfg, "omega", required=True), lam, _get(cfg, "a", 1.0))
        if s == "d1q3_fourth":
            return SchemeSpec.d1q3_fourth(lam, _get(cfg, "a", 1.0))
        if s == "d2q5":
            return SchemeSpec.d2q5(_get(cfg, "omega", required=True), lam, _get(cfg, "ax", 1.0),
                                   _get(cfg, "ay", 0.0), _get(cfg, "Sx", required=True),
                                   _get(cfg, "Sy", required=True))
        if s == "shallow_water":
            return SchemeSpec.shallow_water(_get(cfg, "omega", required=True), lam,
                                            _get(cfg, "hbar", 1.0), _get(cfg, "ubar", 0.0),
                                            _get(cfg, "g", 1.0), _get(cfg, "nonlinear", False))
        if s == "vectorial_sw":
            return SchemeSpec.shallow_water_vectorial(_get(cfg, "omega", required=True), lam,
                                                      _get(cfg, "hbar", 1.0),
                                                      _get(cfg, "ubar", 0.0), _get(cfg, "g", 1.0))
    except ValueError as e:
        raise ConfigError(str(e)) from e
    raise ConfigError(f"unknown scheme {s!r}")


def build_grid(cfg: dict, spec: SchemeSpec):
    J = int(_get(cfg, "J", required=True))
    xl, xr = float(_get(cfg, "x_left", -3.0)), float(_get(cfg, "x_right", 3.0))
    try:
        if spec.dim == 2:
            return Grid2D(xl, xr, float(_get(cfg, "y_bottom", -2.0)),
                          float(_get(cfg, "y_top", 2.0)), J, spec.lam)
        return Grid1D(xl, xr, J, spec.lam)
    except ValueError as e:
        raise ConfigError(str(e)) from e


def _side(kind: str, spec: SchemeSpec, cfg: dict, grid, datum_fn):
    if kind == "transparent":
        return bd.Transparent()
    if kind == "systemic":
        return bd.Transparent("systemic")
    if kind == "truncated":
        return bd.truncate_policy(bd.Transparent(), spec, float(_get(cfg, "eps", 1e-12)))
    if kind == "kinetic":
        return bd.Kinetic()
    if kind == "extrapolation":
        return bd.Extrapolation()
    if kind == "abb":
        return bd.AntiBounceBack()
    if kind == "lifted":
        return bd.nonlinear_lifted(spec)
    if kind == "inflow":
        a = spec.a
        shift = float(_get(cfg, "inflow_origin", grid.x_right))

        def u_in(t):
            return float(datum_fn(np.array([shift - a * t]))[0])

        return bd.transparent_inflow(spec, grid, u_in, lift_v=bool(_get(cfg, "lift_v", False)))
    raise ConfigError(f"unknown boundary kind {kind!r}")


def build_boundary(cfg: dict, spec: SchemeSpec, grid):
    left = _get(cfg, "left", "transparent")
    right = _get(cfg, "right", "transparent")
    try:
        if left == "periodic" or right == "periodic":
            return bd.Periodic()
        if spec.dim == 2:
            if left == "kinetic":
                return bd.Kinetic2D()
            o = str(_get(cfg, "orders", "2,1")).replace(" ", "").split(",")
            return bd.Transparent2D((int(o[0]), int(o[1])))

        return bd.Boundary1D(_side(left, spec, cfg, grid, _bump),
                             _side(right, spec, cfg, grid, _bump))
    except (ValueError, tc.RegimeError) as e:
        raise ConfigError(str(e)) from e


def _datum(cfg, spec, grid):
    name = _get(cfg, "datum", "bump")
    params = {k[len("datum_"):]: v for k, v in cfg.items() if k.startswith("datum_")}
    if name == "sw_gaussian":
        params.setdefault("hbar", spec.hbar)
        params.setdefault("ubar", spec.ubar)
    return initial_datum(name, params, grid)


def _steps(cfg, grid):
    if "steps" in cfg:
        n = int(cfg["steps"])
    elif "t_final" in cfg:
        n = int(math.ceil(float(cfg["t_final"]) / grid.dt))
    else:
        raise ConfigError("one of steps or t_final is required")
    if n < 1:
        raise ConfigError("steps must be at least 1")
    return n


# ---------------------------------------------------------------- running


@dataclass
class RunReport:
    """Outcome of a scenario run.

    ``max_norms[n]`` is the interior max-norm of the observed moment at
    step n, ``deviation[n]`` the interior max deviation from the reference
    run on an enlarged domain (when requested), both relative to the
    initial max-norm.
    """

    name: str
    config_hash: str
    steps: int
    dt: float
    max_norms: np.ndarray
    deviation: Optional[np.ndarray] = None
    exit_step: Optional[int] = None
    energy: Optional[np.ndarray] = None
    final: Optional[np.ndarray] = None
    heatmap: Optional[np.ndarray] = None
    snapshots: Optional[np.ndarray] = None
    files: list = field(default_factory=list)
    aborted: bool = False
    abort_step: Optional[int] = None

    def reflection(self, exit_step: Optional[int] = None) -> float:
        return reflection_metric(self, self.exit_step if exit_step is None else exit_step)


def reflection_metric(report: RunReport, exit_step: Optional[int] = 0) -> float:
    """Largest interior reflection from ``exit_step`` on, relative to max |u^0|.

    When the run carried an enlarged-domain reference the reflection is
    the deviation from it; otherwise it is the raw interior max-norm.
    """
    start = 0 if exit_step is None else int(exit_step)
    series = report.deviation if report.deviation is not None else report.max_norms
    tail = series[start:]
    return float(tail.max()) if len(tail) else 0.0


def _reference_setup(cfg, spec, grid, steps):
    pad = steps + 2
    big = Grid1D(grid.x_left - pad * grid.dx, grid.x_right + pad * grid.dx,
                 grid.J + 2 * pad, spec.lam)
    return big, pad


def run_scenario(cfg: dict, name: str = "scenario", out_dir: Optional[str] = None,
                 callback: Optional[Callable] = None) -> RunReport:
    """Run a configuration and collect metrics (and files when ``out_dir`` is set).

    Keys ``observe`` (moment index, default 0), ``reference`` (bool),
    ``exit_time``, ``heatmap_cadence`` and ``abort`` (bool) control the
    metrics.  Raises :class:`InstabilityAbort` when the interior max-norm
    exceeds 1e6 times its initial value.
    """
    spec = build_spec(cfg)
    grid = build_grid(cfg, spec)
    steps = _steps(cfg, grid)
    bc = build_boundary(cfg, spec, grid)
    u0 = _datum(cfg, spec, grid)
    obs = int(_get(cfg, "observe", 0))
    subtract = float(_get(cfg, "observe_offset", 0.0))
    field = initialize_at_equilibrium(spec, grid, u0)
    want_ref = bool(_get(cfg, "reference", False)) and spec.dim == 1
    if want_ref:
        big, pad = _reference_setup(cfg, spec, grid, steps)
        ref_u0 = _datum(cfg, spec, big)
        ref = initialize_at_equilibrium(spec, big, ref_u0)
        ref_bc = bd.Periodic()
        ref_bc.start(spec, ref)
    interior = (slice(1, -1),) if spec.dim == 1 else (slice(1, -1), slice(1, -1))

    def observed(f):
        return f.data[(obs,) + interior] - subtract

    scale = float(np.abs(observed(field)).max()) or 1.0
    cadence = int(_get(cfg, "heatmap_cadence", 0))
    norms = np.zeros(steps + 1)
    energy = np.zeros(steps + 1)
    dev = np.zeros(steps + 1) if want_ref else None
    rows = []
    field = bc.start(spec, field)
    do_abort = bool(_get(cfg, "abort", True))

    def collect(n, f):
        o = observed(f)
        norms[n] = np.abs(o).max() / scale
        energy[n] = math.sqrt(float((o * o).sum()) * grid.dx ** spec.dim) / scale
        if want_ref:
            r = ref.data[(obs, slice(pad + 1, pad + grid.J + 1))] - subtract
            dev[n] = np.abs(o - r).max() / scale
        if cadence and n % cadence == 0:
            rows.append(o.copy())
        if callback is not None:
            callback(n, f)

    collect(0, field)
    report = RunReport(name, config_hash(cfg), steps, grid.dt, norms, dev,
                       energy=energy)
    for n in range(1, steps + 1):
        field = step(spec, field, bc)
        if want_ref:
            ref = step(spec, ref, ref_bc)
        collect(n, field)
        if do_abort and not norms[n] <= ABORT_FACTOR:
            report.aborted, report.abort_step = True, n
            report.max_norms, report.energy = norms[:n + 1], energy[:n + 1]
            if dev is not None:
                report.deviation = dev[:n + 1]
            report.final = field.data
            raise InstabilityAbort(f"interior max-norm exceeded {ABORT_FACTOR:g} x initial "
                                   f"at step {n}", report)
    if "exit_time" in cfg:
        report.exit_step = int(math.ceil(float(cfg["exit_time"]) / grid.dt))
    report.final = field.data
    if rows:
        report.snapshots = np.array(rows)
        report.heatmap = np.log10(np.maximum(np.abs(report.snapshots), 10.0 ** LOG_FLOOR))
    if out_dir is not None:
        report.files = write_outputs(report, out_dir)
    return report


# ---------------------------------------------------------------- outputs


def export_heatmap(report: RunReport, path_stem: str) -> list:
    """Write the log10 |u| space-time grid as CSV and as 8-bit PGM."""
    if report.heatmap is None:
        raise ValueError("the run recorded no heatmap (set heatmap_cadence)")
    H = report.heatmap
    csv_path, pgm_path = f"{path_stem}.csv", f"{path_stem}.pgm"
    try:
        with open(csv_path, "w", newline="") as fh:
            w = csv.writer(fh)
            for row in H.reshape(H.shape[0], -1):
                w.writerow([repr(float(v)) for v in row])
        img = H.reshape(H.shape[0], -1)
        scaled = np.clip((img - LOG_FLOOR) / (0.0 - LOG_FLOOR), 0.0, 1.0)
        data = (255 * scaled).round().astype(np.uint8)
        with open(pgm_path, "wb") as fh:
            fh.write(f"P5\n{data.shape[1]} {data.shape[0]}\n255\n".encode())
            fh.write(data.tobytes())
    except OSError as e:
        raise OSError(f"cannot write heatmap to {path_stem}: {e}") from e
    return [csv_path, pgm_path]


def write_outputs(report: RunReport, out_dir: str) -> list:
    os.makedirs(out_dir, exist_ok=True)
    stem = os.path.join(out_dir, report.name)
    files = []
    metrics = f"{stem}_metrics.csv"
    with open(metrics, "w", newline="") as fh:
        w = csv.writer(fh)
        head = ["n", "t", "max_norm", "energy"] + (["deviation"] if report.deviation is not None
                                                  else [])
        w.writerow(head)
        for n in range(len(report.max_norms)):
            row = [n, repr(n * report.dt), repr(float(report.max_norms[n])),
                   repr(float(report.energy[n]))]
            if report.deviation is not None:
                row.append(repr(float(report.deviation[n])))
            w.writerow(row)
    files.append(metrics)
    if report.heatmap is not None:
        files += export_heatmap(report, f"{stem}_heatmap")
    return files


def beam_slope(snapshots: np.ndarray, x: np.ndarray, times: np.ndarray,
               window: Optional[tuple] = None, mode: str = "space") -> float:
    """Speed of a checkerboard ridge: argmax per time slice then least squares.

    ``snapshots`` holds raw values (not logs), one row per time.  With
    ``mode="space"`` the space-checkerboard part is isolated by the second
    difference in space; with ``mode="spacetime"`` the rows must be
    consecutive steps and the second difference is further differenced in
    time, which keeps only modes oscillating in both variables.
    """
    H = np.asarray(snapshots, dtype=float)
    hp = (H[:, 2:] - 2 * H[:, 1:-1] + H[:, :-2]) / 4
    t = np.asarray(times, dtype=float)
    if mode == "spacetime":
        hp = (hp[1:] - hp[:-1]) / 2
        t = t[:-1]
    elif mode != "space":
        raise ValueError(f"unknown mode {mode!r}")
    hp = np.abs(hp)
    xs = np.asarray(x, dtype=float)[1:-1]
    if window is not None:
        keep = (xs >= window[0]) & (xs <= window[1])
        hp, xs = hp[:, keep], xs[keep]
    pos = xs[np.argmax(hp, axis=1)]
    A = np.vstack([t, np.ones_like(t)]).T
    slope, _ = np.linalg.lstsq(A, pos, rcond=None)[0]
    return float(slope)


# ---------------------------------------------------------------- built-in scenarios


def _d1q2(omega, left="transparent", right="transparent", datum="bump", **kw):
    cfg = dict(scheme="d1q2", omega=omega, lam=1.2, a=1.0, J=1000, x_left=-3.0, x_right=3.0,
               datum=datum, left=left, right=right, t_final=6.0, reference=True)
    cfg.update(kw)
    return cfg


SCENARIOS = {
    **{f"d1q2_bump_w{w}": _d1q2(w) for w in (1.0, 1.5, 1.9, 2.0)},
    **{f"d1q2_bump_w{w}_systemic": _d1q2(w, "systemic", "systemic") for w in (1.0, 1.5, 1.9, 2.0)},
    **{f"d1q2_bump_w{w}_kinetic": _d1q2(w, "kinetic", "kinetic") for w in (1.0, 1.5, 1.9, 2.0)},
    **{f"d1q2_bump_w{w}_truncated": _d1q2(w, "truncated", "truncated", eps=1e-8)
       for w in (1.5, 1.9)},
    **{f"d1q2_multipacket_w{w}": _d1q2(w, datum="multipacket", t_final=9.0)
       for w in (1.5, 2.0)},
    **{f"d1q2_multipacket_w{w}_kinetic": _d1q2(w, "kinetic", "kinetic", datum="multipacket",
                                                t_final=9.0) for w in (1.5, 2.0)},
    "d1q2_inflow": dict(scheme="d1q2", omega=1.5, lam=1.2, a=1.0, J=667, x_left=-1.0,
                        x_right=3.0, datum="zero", left="inflow", right="kinetic",
                        inflow_origin=3.0, t_final=10.0),
    "d1q3_fourth_bump": dict(scheme="d1q3_fourth", lam=4.0, a=1.0, J=1000, x_left=-3.0,
                             x_right=3.0, datum="bump", left="transparent",
                             right="transparent", t_final=8.0, reference=True),
    "d1q3_fourth_bump_kinetic": dict(scheme="d1q3_fourth", lam=4.0, a=1.0, J=1000,
                                     x_left=-3.0, x_right=3.0, datum="bump", left="kinetic",
                                     right="kinetic", t_final=8.0, reference=True),
    **{f"d2q5_bump_o{o[0]}{o[2]}": dict(scheme="d2q5", omega=1.99, lam=2.2, ax=1.0, ay=0.1,
                                         Sx=0.25, Sy=0.25, J=300, x_left=-3.0, x_right=3.0,
                                         y_bottom=-2.0, y_top=2.0, datum="radial_bump",
                                         orders=o, t_final=12.0)
       for o in ("0,0", "1,1", "2,1", "2,2")},
    "d2q5_bump_kinetic": dict(scheme="d2q5", omega=1.99, lam=2.2, ax=1.0, ay=0.1, Sx=0.25,
                              Sy=0.25, J=300, x_left=-3.0, x_right=3.0, y_bottom=-2.0,
                              y_top=2.0, datum="radial_bump", left="kinetic", t_final=12.0),
    **{f"sw_linear_{b}": dict(scheme="shallow_water", omega=2.0, lam=2.0, hbar=1.0, ubar=0.5,
                              g=1.0, J=1000, x_left=-3.0, x_right=3.0, datum="sw_bump",
                              left=b, right=b, t_final=8.0, observe=1, reference=True)
       for b in ("transparent", "kinetic", "extrapolation", "abb")},
    "sw_nonlinear": dict(scheme="shallow_water", omega=2.0, lam=2.0, hbar=1.0, ubar=0.5, g=1.0,
                         nonlinear=True, J=1000, x_left=-3.0, x_right=3.0, datum="sw_gaussian",
                         datum_perturbation=1e-3, left="lifted", right="lifted", t_final=8.0,
                         observe=1, observe_offset=0.5, reference=True, exit_time=7.0),
    "vectorial_supersonic": dict(scheme="vectorial_sw", omega=1.95, lam=3.0, hbar=1.0,
                                 ubar=1.5, g=1.0, J=300, x_left=-3.0, x_right=3.0,
                                 datum="sw_bump", left="transparent", right="transparent",
                                 t_final=6.0, reference=True),
}


def scenario_config(name: str) -> dict:
    if name not in SCENARIOS:
        raise ConfigError(f"unknown built-in scenario {name!r}")
    return dict(SCENARIOS[name])


def format_config(cfg: dict) -> str:
    return "".join(f"{k} = {v}\n" for k, v in cfg.items())


# ---------------------------------------------------------------- command line


def _spec_from_args(args) -> SchemeSpec:
    cfg = {"scheme": args.scheme, "lam": args.lam}
    for k in ("omega", "a", "ax", "ay", "Sx", "Sy", "hbar", "ubar", "g"):
        v = getattr(args, k, None)
        if v is not None:
            cfg[k] = v
    if args.courant is not None:
        cfg["a"] = args.courant * args.lam
    return build_spec(cfg)


def _add_spec_args(p):
    p.add_argument("--scheme", required=True,
                   choices=["d1q2", "d1q3_fourth", "d2q5", "shallow_water", "vectorial_sw"])
    p.add_argument("--omega", type=lambda s: float(Fraction(s)), default=None)
    p.add_argument("--lam", type=lambda s: float(Fraction(s)), default=1.0)
    p.add_argument("--courant", type=lambda s: float(Fraction(s)), default=None)
    for k in ("a", "ax", "ay", "Sx", "Sy", "hbar", "ubar", "g"):
        p.add_argument(f"--{k}", type=lambda s: float(Fraction(s)), default=None)


def _cmd_coeffs(args) -> int:
    spec = _spec_from_args(args)
    N = args.n
    side = args.side
    if spec.kind == "D1Q2":
        tab = tc.d1q2_kernels(spec.omega, spec.C, N)[0 if side == "right" else 1]
        fam, params = "d1q2_s", {"omega": spec.omega, "C": spec.C}
    elif spec.kind == "D1Q3Fourth":
        tab = (tc.beta_d1q3_fourth if side == "right" else tc.upsilon_d1q3_fourth)(spec.C, N)
        fam, params = "d1q3_beta", {"C": spec.C}
    elif spec.kind == "D1Q3ShallowWater":
        tab = tc.shallow_water_coeffs(spec, N)[0 if side == "right" else 1]
        fam, params = None, {}
    elif spec.kind == "D2Q5TrtMagic":
        tab = tc.beta_2d_orders(spec.omega, spec.Cx, spec.Sx, spec.Cy, spec.Sy, N)[args.order]
        fam = "d2q5_beta2" if args.order == 2 and spec.omega == 2 else None
        params = {"Cx": spec.Cx, "Cy": spec.Cy}
    else:
        raise ConfigError("coefficient export is per scalar family")
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(out)
        w.writerow(["n", "value", "estimate", "ratio"])
        for n, v in enumerate(np.asarray(tab.values, dtype=float)):
            est = float("nan")
            if fam is not None and n > 0 and not (side == "left" and fam == "d1q2_s"):
                try:
                    est = tc.asymptotic_estimate(fam, params, n).value
                except (ValueError, ArithmeticError):
                    est = float("nan")
            ratio = v / est if est not in (0.0,) and not math.isnan(est) else float("nan")
            w.writerow([n, repr(float(v)), repr(float(est)), repr(float(ratio))])
    finally:
        if args.out:
            out.close()
    return 0


def _cmd_stability(args) -> int:
    spec = _spec_from_args(args)
    v = dp.is_stable(spec, sweep=not args.no_sweep)
    print(f"stable={v.stable} rule={v.rule!r} numeric_stable={v.numeric_stable} "
          f"max_modulus={v.max_modulus} witness={v.witness}")
    return 0


def _load(path_or_name: str) -> tuple:
    if path_or_name in SCENARIOS:
        return path_or_name, scenario_config(path_or_name)
    try:
        text = Path(path_or_name).read_text()
    except OSError as e:
        raise ConfigError(f"cannot read {path_or_name}: {e}") from e
    return Path(path_or_name).stem, parse_config(text)


def _run_one(path_or_name: str, out_dir: str) -> tuple:
    name, cfg = _load(path_or_name)
    try:
        rep = run_scenario(cfg, name=name, out_dir=out_dir)
    except InstabilityAbort as e:
        return name, 2, str(e)
    return name, 0, (f"reflection={reflection_metric(rep, rep.exit_step):.3e} "
                     f"hash={rep.config_hash} files={len(rep.files)}")


def _cmd_run(args) -> int:
    name, code, msg = _run_one(args.config, args.out_dir)
    print(f"{name}: {msg}")
    return code


def _cmd_sweep(args) -> int:
    paths = sorted(glob.glob(args.pattern)) or ([args.pattern] if args.pattern in SCENARIOS
                                                 else [])
    if not paths:
        raise ConfigError(f"no configuration matches {args.pattern!r}")
    workers = int(os.environ.get("LBM_THREADS", os.cpu_count() or 1))
    code = 0
    with concurrent.futures.ProcessPoolExecutor(max_workers=max(1, workers)) as ex:
        for name, c, msg in ex.map(_run_one, paths, [args.out_dir] * len(paths)):
            print(f"{name}: {msg}")
            code = max(code, c)
    return code


def main(argv: Optional[list] = None) -> int:
    parser = argparse.ArgumentParser(prog="lbm", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="cmd", required=True)
    p = sub.add_parser("coeffs", help="export a boundary coefficient table as CSV")
    _add_spec_args(p)
    p.add_argument("-n", type=int, default=200)
    p.add_argument("--side", choices=["right", "left"], default="right")
    p.add_argument("--order", type=int, choices=[0, 1, 2], default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_coeffs)
    p = sub.add_parser("stability", help="stability verdict and witness")
    _add_spec_args(p)
    p.add_argument("--no-sweep", action="store_true")
    p.set_defaults(func=_cmd_stability)
    p = sub.add_parser("run", help="run a configuration file or a built-in scenario")
    p.add_argument("config")
    p.add_argument("--out-dir", default="out")
    p.set_defaults(func=_cmd_run)
    p = sub.add_parser("sweep", help="run every configuration matching a glob")
    p.add_argument("pattern")
    p.add_argument("--out-dir", default="out")
    p.set_defaults(func=_cmd_sweep)
    p = sub.add_parser("scenarios", help="list or print built-in scenarios")
    p.add_argument("name", nargs="?")
    p.set_defaults(func=_cmd_scenarios)
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 3


def _cmd_scenarios(args) -> int:
    if args.name:
        print(format_config(scenario_config(args.name)), end="")
    else:
        for k in SCENARIOS:
            print(f"{k}  {config_hash(SCENARIOS[k])}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
