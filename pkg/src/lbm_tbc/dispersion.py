"""Characteristic polynomials, roots, stability and group velocities.

The characteristic polynomial of a scheme is ``det(z I - A(kappa))`` where
``A`` is the amplification matrix of one relax-and-transport step acting
on a Fourier mode with shift symbol ``kappa = exp(i xi dx)``.  It is stored
as a dense array of coefficients in powers of ``kappa`` (one axis per space
dimension, offset by ``kmin``) and ascending powers of ``z`` (last axis).
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import optimize
from scipy.signal import convolve

from . import schemes
from .lattice_core import SchemeSpec, inverse_moment_matrix, moment_matrix, velocities


class DomainError(ValueError):
    """Spatial roots requested inside the closed unit disk."""


class NumericError(ArithmeticError):
    """A root finder returned roots with too large a residual."""


class DegenerateGroupVelocityError(ZeroDivisionError):
    """The dispersion relation is not locally solvable for the pulsation."""


# ---------------------------------------------------------------- polynomial


@dataclass(frozen=True)
class CharPoly:
    """Laurent polynomial in kappa (one or two variables) and polynomial in z.

    ``coef[i, ..., d]`` multiplies ``kappa^(i + kmin) ... z^d``.
    """

    coef: np.ndarray
    kmin: int
    dim: int = 1

    @property
    def z_degree(self) -> int:
        return self.coef.shape[-1] - 1

    def _kappa_weights(self, kappa, kappa_y=None):
        n = self.coef.shape[0]
        wx = np.asarray(kappa, dtype=complex) ** (np.arange(n) + self.kmin)
        if self.dim == 1:
            return wx
        ny = self.coef.shape[1]
        wy = np.asarray(kappa_y, dtype=complex) ** (np.arange(ny) + self.kmin)
        return np.multiply.outer(wx, wy)

    def z_coefficients(self, kappa, kappa_y=None) -> np.ndarray:
        """Ascending coefficients in z at fixed kappa (and kappa_y)."""
        w = self._kappa_weights(kappa, kappa_y)
        axes = tuple(range(self.dim))
        return np.tensordot(w, self.coef, axes=(axes, axes))

    def kappa_coefficients(self, z, kappa_y=None) -> np.ndarray:
        """Ascending coefficients of ``kappa^(-kmin) P`` in kappa at fixed z."""
        zp = np.asarray(z, dtype=complex) ** np.arange(self.coef.shape[-1])
        c = self.coef @ zp
        if self.dim == 2:
            wy = np.asarray(kappa_y, dtype=complex) ** (np.arange(c.shape[1]) + self.kmin)
            c = c @ wy
        return c

    def __call__(self, z, kappa, kappa_y=None):
        zc = self.z_coefficients(kappa, kappa_y)
        return np.polyval(zc[::-1], z)

    def scale(self, z, kappa, kappa_y=None) -> float:
        """Sum of absolute values of all terms; the reference for relative residuals."""
        w = np.abs(self._kappa_weights(kappa, kappa_y))
        zp = np.abs(np.asarray(z, dtype=complex)) ** np.arange(self.coef.shape[-1])
        axes = tuple(range(self.dim))
        return float(np.tensordot(w, np.abs(self.coef), axes=(axes, axes)) @ zp)

    def residual(self, z, kappa, kappa_y=None) -> float:
        return abs(self(z, kappa, kappa_y)) / max(self.scale(z, kappa, kappa_y), 1e-300)

    def derivatives(self, z, kappa):
        """(P_z, P_kappa) for one-dimensional polynomials."""
        n, m = self.coef.shape
        p = np.arange(n) + self.kmin
        d = np.arange(m)
        kp = kappa ** p
        zp = z ** d
        Pz = kp @ self.coef[:, 1:] @ (d[1:] * z ** (d[1:] - 1))
        Pk = (p * kappa ** (p - 1)) @ self.coef @ zp
        return Pz, Pk


def _d1q2_coef(omega, C):
    c = np.zeros((3, 3))
    c[0, 1] = 0.5 * ((1 - C) * omega - 2)
    c[1, 0], c[1, 2] = 1 - omega, 1.0
    c[2, 1] = 0.5 * ((1 + C) * omega - 2)
    return c


def char_poly(spec: SchemeSpec) -> CharPoly:
    """Closed-form characteristic polynomial of the scheme."""
    k, om = spec.kind, spec.omega
    if k == "D1Q2":
        return CharPoly(_d1q2_coef(om, spec.C), -1)
    if k == "D1Q3Fourth":
        C = spec.C
        m = (2 * C - 1) * (C + 2) / 3
        p = (2 * C + 1) * (C - 2) / 3
        r = (4 * C * C - 1) / 3
        c = np.zeros((3, 4))
        c[0, 2], c[0, 1] = -m, p
        c[1] = [-1.0, -r, r, 1.0]
        c[2, 2], c[2, 1] = -p, m
        return CharPoly(c, -1)
    if k == "D1Q3ShallowWater":
        from .tbc_coeffs import shallow_water_d

        d = shallow_water_d(dataclasses.replace(spec, nonlinear=False))
        c = np.zeros((3, 4))
        c[0, 2], c[0, 1] = d[(-1, 2)], d[(-1, 1)]
        c[1] = [d[(0, 0)], d[(0, 1)], d[(0, 2)], 1.0]
        c[2, 2], c[2, 1] = d[(1, 2)], d[(1, 1)]
        return CharPoly(c, -1)
    if k == "D1Q2Vectorial":
        c = np.ones((1, 1))
        for Ck in spec.courants:
            c = convolve(c, _d1q2_coef(om, Ck))
        return CharPoly(c, -spec.n_sys)
    # D2Q5: (z + 1 - omega)(z^2 - (1 - omega)^2) Psi_2
    Cx, Cy, Sx, Sy = spec.Cx, spec.Cy, spec.Sx, spec.Sy
    psi = np.zeros((3, 3, 3))
    psi[1, 1] = [1 - om, (om - 2) * (1 - Sx - Sy), 1.0]
    psi[0, 1, 1] = -om * Cx / 2 + (om - 2) * Sx / 2
    psi[2, 1, 1] = om * Cx / 2 + (om - 2) * Sx / 2
    psi[1, 0, 1] = -om * Cy / 2 + (om - 2) * Sy / 2
    psi[1, 2, 1] = om * Cy / 2 + (om - 2) * Sy / 2
    pre = np.polynomial.polynomial.polymul([1 - om, 1.0], [-(1 - om) ** 2, 0.0, 1.0])
    return CharPoly(convolve(psi, pre[None, None, :]), -1, dim=2)


# ---------------------------------------------------------------- amplification matrix


def relaxation_matrix(spec: SchemeSpec) -> np.ndarray:
    """Linear(ized) relaxation as a q x q matrix acting on moments."""
    lin = dataclasses.replace(spec, nonlinear=False) if spec.nonlinear else spec
    return schemes.relax(lin, np.eye(spec.q))


def amplification_matrix(spec: SchemeSpec, xi, xi_y=None) -> np.ndarray:
    """Matrix of one step on the Fourier mode(s) of frequency ``xi`` (= xi dx).

    ``xi`` may be an array, in which case a stack of matrices is returned.
    """
    xi = np.asarray(xi, dtype=float)
    c = velocities(spec)
    if spec.dim == 1:
        phase = np.exp(-1j * np.multiply.outer(xi, c))
    else:
        xi_y = np.asarray(xi_y, dtype=float)
        phase = np.exp(-1j * (np.multiply.outer(xi, c[:, 0]) + np.multiply.outer(xi_y, c[:, 1])))
    M, Minv, R = moment_matrix(spec), inverse_moment_matrix(spec), relaxation_matrix(spec)
    right = Minv @ R
    return np.einsum("ij,...j,jk->...ik", M, phase, right)


# ---------------------------------------------------------------- roots


def time_roots(spec: SchemeSpec, xi, xi_y=None, tol: float = 1e-10) -> np.ndarray:
    """All roots z of the characteristic polynomial at kappa = exp(i xi)."""
    P = char_poly(spec)
    kx = np.exp(1j * xi)
    ky = None if xi_y is None else np.exp(1j * xi_y)
    zc = P.z_coefficients(kx, ky)
    zc = np.trim_zeros(zc, "b")
    roots = np.roots(zc[::-1])
    for i, r in enumerate(roots):
        for _ in range(3):
            f = np.polyval(zc[::-1], r)
            df = np.polyval(np.polyder(zc[::-1]), r)
            if df == 0 or f == 0:
                break
            r_new = r - f / df
            if abs(np.polyval(zc[::-1], r_new)) < abs(f):
                r = r_new
            else:
                break
        roots[i] = r
        if P.residual(r, kx, ky) > tol:
            raise NumericError(f"time root residual too large at xi={xi}, xi_y={xi_y}")
    return roots


@dataclass(frozen=True)
class RootPair:
    """Stable and unstable spatial roots at one z.

    For the vectorial scheme ``kappa_s``, ``kappa_u`` and ``Pi`` are arrays
    (one entry per wave, unstable entries absent when degenerate are nan).
    """

    kappa_s: complex
    kappa_u: Optional[complex]
    Pi: complex
    degenerate: bool


def _kappa_roots(P: CharPoly, z, kappa_y=None):
    c = P.kappa_coefficients(z, kappa_y)
    scale = np.abs(c).max()
    lead = len(c) - 1
    while lead > 0 and abs(c[lead]) <= 1e-14 * scale:
        lead -= 1
    degenerate = lead < len(c) - 1
    roots = np.roots(c[:lead + 1][::-1]) if lead > 0 else np.array([], dtype=complex)
    return roots[np.argsort(np.abs(roots))], degenerate, c


def spatial_roots(spec: SchemeSpec, z, xi_y: Optional[float] = None) -> RootPair:
    """Roots in kappa at fixed z, split into stable and unstable.

    Defined for |z| > 1 and, by continuity, at z = +1 and z = -1.
    """
    z = complex(z)
    on_circle = abs(abs(z) - 1.0) <= 1e-14
    if abs(z) <= 1.0 and not (on_circle and abs(abs(z.real) - 1) < 1e-14):
        raise DomainError("spatial roots are defined for |z| > 1 (or z = +-1)")
    P = char_poly(spec)
    ky = None if xi_y is None else np.exp(1j * xi_y)
    if spec.dim == 2 and ky is None:
        ky = 1.0
    if spec.dim == 2:
        P = CharPoly(np.tensordot(P.coef, ky ** (np.arange(P.coef.shape[1]) + P.kmin),
                                  axes=(1, 0)), P.kmin)
    roots, degenerate, c = _kappa_roots(P, z)
    n_stable = -P.kmin
    if on_circle:
        ref, _, _ = _kappa_roots(P, z * (1 + 1e-8))
        stable_ref = ref[:n_stable]
        order = []
        for r in stable_ref:
            j = int(np.argmin([abs(r - x) if i not in order else np.inf
                               for i, x in enumerate(roots)]))
            order.append(j)
        rest = [i for i in range(len(roots)) if i not in order]
        roots = np.concatenate([roots[order], roots[rest]])
    ks, ku = roots[:n_stable], roots[n_stable:]
    if spec.kind == "D1Q2Vectorial":
        pis = []
        for Ck in spec.courants:
            den = (1 + Ck) * spec.omega - 2
            pis.append(np.inf if den == 0 else ((1 - Ck) * spec.omega - 2) / den)
        return RootPair(ks, ku if len(ku) else None, np.array(pis), degenerate)
    Pi = complex(c[0] / c[2]) if not degenerate else complex(np.inf)
    return RootPair(complex(ks[0]), complex(ku[0]) if len(ku) else None, Pi, degenerate)


def d1q2_kappa_s_closed_form(omega, C, z) -> complex:
    """Closed-form stable root of the D1Q2 equation, branch fixed by modulus."""
    D = (C + 1) * omega - 2
    z = complex(z)
    if D == 0:
        return 2 * C * z / ((C + 1) * z * z + C - 1)
    rad = np.sqrt(z * z + ((C * C - 1) * omega ** 2 + 2 * omega - 2) + (omega - 1) ** 2 / (z * z))
    cands = [((omega - 1) / z - z + sgn * rad) / D for sgn in (1, -1)]
    return complex(min(cands, key=abs))


# ---------------------------------------------------------------- stability


@dataclass(frozen=True)
class StabilityVerdict:
    """Outcome of a stability check.

    ``rule`` names the closed-form condition that decided, ``witness`` is
    a violating frequency (or sweep point) when unstable and
    ``numeric_stable`` the outcome of the confirming eigenvalue sweep.
    """

    stable: bool
    rule: str
    witness: Optional[tuple] = None
    numeric_stable: Optional[bool] = None
    max_modulus: Optional[float] = None


_L2_KINDS = ("D1Q2", "D1Q3Fourth", "D1Q2Vectorial")


def _max_modulus_1d(spec, xi):
    return np.abs(np.linalg.eigvals(amplification_matrix(spec, xi))).max(axis=-1)


def numeric_sweep(spec: SchemeSpec, n: Optional[int] = None, tol: Optional[float] = None):
    """Eigenvalue sweep over the frequency grid, refined near the worst point.

    Returns ``(stable, max_modulus, witness)``.  The default tolerance is
    1e-9 in 1D and 1e-6 in 2D, where coalescing unit-modulus eigenvalues at
    omega = 2 carry roundoff of order sqrt(machine epsilon).  For schemes whose closed
    form is an l2 criterion the sweep also checks power-boundedness of the
    amplification matrices at frequencies with unit-modulus eigenvalues.
    """
    if tol is None:
        tol = 1e-9 if spec.dim == 1 else 1e-6
    if spec.dim == 1:
        n = n or 257
        xi = np.linspace(-np.pi, np.pi, n)
        mods = _max_modulus_1d(spec, xi)
        i = int(np.argmax(mods))
        h = xi[1] - xi[0]
        res = optimize.minimize_scalar(lambda t: -_max_modulus_1d(spec, np.array([t]))[0],
                                       bounds=(xi[i] - h, xi[i] + h), method="bounded",
                                       options={"xatol": 1e-12})
        best, wit = mods[i], (float(xi[i]),)
        if -res.fun > best:
            best, wit = -res.fun, (float(res.x),)
        stable = best <= 1 + tol
        if stable and spec.kind in _L2_KINDS:
            stable, wit2 = _power_bounded(spec, xi[mods > 1 - 1e-6])
            if not stable:
                wit = wit2
        return bool(stable), float(best), wit
    n = n or 129
    t = np.linspace(-np.pi, np.pi, n)
    X, Y = np.meshgrid(t, t, indexing="ij")
    mods = np.abs(np.linalg.eigvals(amplification_matrix(spec, X, Y))).max(axis=-1)
    i, j = np.unravel_index(int(np.argmax(mods)), mods.shape)

    def f(p):
        return -np.abs(np.linalg.eigvals(amplification_matrix(spec, p[0], p[1]))).max()

    res = optimize.minimize(f, [t[i], t[j]], method="Nelder-Mead",
                            options={"xatol": 1e-12, "fatol": 1e-15})
    best, wit = mods[i, j], (float(t[i]), float(t[j]))
    if -res.fun > best:
        best, wit = -res.fun, tuple(float(v) for v in res.x)
    return bool(best <= 1 + tol), float(best), wit


def _power_bounded(spec, xi, power: int = 4096, bound: float = 1e3):
    """Detect linear growth of A(xi)^n caused by defective unit eigenvalues."""
    if len(xi) == 0:
        return True, None
    A = amplification_matrix(spec, xi)
    P = A.copy()
    norms_half = None
    k = 1
    while k < power:
        P = P @ P
        k *= 2
        if k == power // 2:
            norms_half = np.linalg.norm(P, ord=2, axis=(-2, -1))
    norms = np.linalg.norm(P, ord=2, axis=(-2, -1))
    grow = (norms > bound) & (norms > 1.5 * norms_half)
    if grow.any():
        return False, (float(xi[int(np.argmax(norms))]),)
    return True, None


def d2q5_inequality(mx, my, Cx, Cy, Sx, Sy):
    """Left-hand side of the D2Q5 von Neumann inequality (stable iff <= 0 everywhere)."""
    root = np.sqrt(np.clip((1 - mx * mx) * (1 - my * my), 0.0, None))
    return (-((Cx * Cx - Sx * Sx) * mx * mx - (Cx * Cx - Sx)) * mx * mx
            - ((Cy * Cy - Sy * Sy) * my * my - (Cy * Cy - Sy)) * my * my
            + 2 * (Sx * Sy * mx * my + Cx * Cy * root) * mx * my)


def d2q5_stability_sweep(omega, Cx, Cy, Sx, Sy, n: int = 401, tol: float = 1e-12):
    """Evaluate the bivariate D2Q5 inequality on a grid of (mu_x, mu_y).

    Returns ``(stable, worst)`` with ``worst`` the maximizing (mu_x, mu_y)
    after a local refinement.
    """
    if not (0 < omega < 2):
        raise ValueError("the inequality sweep applies to omega in (0, 2)")
    mu = np.linspace(-1.0, 1.0, n)
    MX, MY = np.meshgrid(mu, mu, indexing="ij")
    G = d2q5_inequality(MX, MY, Cx, Cy, Sx, Sy)
    i, j = np.unravel_index(int(np.argmax(G)), G.shape)
    best, worst = G[i, j], (float(mu[i]), float(mu[j]))
    res = optimize.minimize(lambda p: -d2q5_inequality(p[0], p[1], Cx, Cy, Sx, Sy),
                            [mu[i], mu[j]], bounds=[(-1, 1), (-1, 1)], method="L-BFGS-B",
                            options={"ftol": 1e-16, "gtol": 1e-14})
    if -res.fun > best:
        best, worst = -res.fun, tuple(float(v) for v in res.x)
    return bool(best <= tol), worst


def is_stable(spec: SchemeSpec, sweep: bool = True, n: Optional[int] = None) -> StabilityVerdict:
    """Closed-form stability verdict, optionally confirmed by an eigenvalue sweep."""
    k, om = spec.kind, spec.omega
    witness = None
    if k == "D1Q2":
        C = abs(spec.C)
        stable = C < 1 if om == 2 else C <= 1
        rule = "|C| < 1 at omega = 2" if om == 2 else "|C| <= 1"
    elif k == "D1Q3Fourth":
        stable, rule = abs(spec.C) < 0.5, "|C| < 1/2"
    elif k == "D1Q2Vectorial":
        rho = np.abs(spec.courants).max()
        stable = rho < 1 if om == 2 else rho <= 1
        rule = "spectral radius / lambda < 1 at omega = 2" if om == 2 \
            else "spectral radius / lambda <= 1"
    elif k == "D1Q3ShallowWater":
        cs, ub, lam = spec.cs, spec.ubar, spec.lam
        if abs(ub) > cs:
            stable, rule = False, "subsonic |u| <= c_s"
        else:
            stable, rule = lam >= max(abs(ub - cs), abs(ub + cs)), "lambda >= max |u +- c_s|"
    else:
        Cx, Cy, Sx, Sy = spec.Cx, spec.Cy, spec.Sx, spec.Sy
        if om == 2:
            stable, rule = abs(Cx) + abs(Cy) <= 1, "|C_x| + |C_y| <= 1 at omega = 2"
        elif not (Cx * Cx <= Sx <= 1 and Cy * Cy <= Sy <= 1):
            stable, rule = False, "C^2 <= S <= 1 per axis"
        elif Sx + Sy > 1:
            stable, rule = False, "S_x + S_y <= 1"
        else:
            stable, witness = d2q5_stability_sweep(om, Cx, Cy, Sx, Sy)
            rule = "bivariate inequality"
            witness = None if stable else witness
    num, mod, wit = (None, None, None)
    if sweep:
        num, mod, wit = numeric_sweep(spec, n)
    if not stable and witness is None:
        witness = wit
    return StabilityVerdict(bool(stable), rule, witness, num, mod)


def diffusion_matrix(Cx, Cy, Sx, Sy, tol: float = 1e-14):
    """Diffusion matrix of the D2Q5 modified equation with definiteness flags.

    Returns ``(D, positive_definite, positive_semidefinite)``.
    """
    D = np.array([[Sx - Cx * Cx, -Cx * Cy], [-Cx * Cy, Sy - Cy * Cy]])
    det = Sx * Sy - Sx * Cy * Cy - Sy * Cx * Cx
    pd = D[0, 0] > tol and det > tol
    psd = D[0, 0] >= -tol and D[1, 1] >= -tol and det >= -tol
    return D, bool(pd), bool(psd)


# ---------------------------------------------------------------- group velocity


def group_velocity(spec: SchemeSpec, eta_dt, xi_dx, tol: float = 1e-8) -> complex:
    """Group velocity -d eta / d xi on the dispersion relation.

    Complex pulsations ``eta_dt`` are allowed (damped modes).
    """
    if spec.dim != 1:
        raise ValueError("group velocity is implemented for one-dimensional schemes")
    P = char_poly(spec)
    z, kappa = np.exp(1j * complex(eta_dt)), np.exp(1j * complex(xi_dx))
    if P.residual(z, kappa) > tol:
        raise ValueError("(eta, xi) does not satisfy the dispersion relation")
    Pz, Pk = P.derivatives(z, kappa)
    den = z * Pz
    if abs(den) < 1e-12:
        raise DegenerateGroupVelocityError("glancing point: d P / d z vanishes")
    v = spec.lam * kappa * Pk / den
    return complex(v)


# ---------------------------------------------------------------- damping


def critical_omega_double_root(C):
    """Relaxation parameter where the two D1Q2 time roots at xi = pi/2 coincide.

    Returns ``(omega_star, at_limit)``; at C = 0 the limit 1 is returned
    with ``at_limit`` set.
    """
    if C == 0:
        return 1.0, True
    if not 0 < abs(C) < 1:
        raise ValueError("needs 0 < |C| < 1")
    w = 2 * (1 - math.sqrt(1 - C * C)) / (C * C)
    return w, False


@dataclass(frozen=True)
class DampingRegime:
    """Which harmonics of the D1Q2 scheme are not damped.

    Frequencies are given as ``xi dx`` values.
    """

    name: str
    physical_undamped: tuple
    spurious_undamped: tuple


def damping_regime(omega, C) -> DampingRegime:
    """Classify the undamped harmonics for |C| < 1."""
    if not abs(C) < 1:
        raise ValueError("needs |C| < 1")
    if omega == 2:
        return DampingRegime("omega=2", ("all",), ("all",))
    ws, _ = critical_omega_double_root(C)
    if omega < ws:
        return DampingRegime("below-omega*", (0.0, math.pi, -math.pi), ())
    return DampingRegime("at-or-above-omega*", (0.0,), (math.pi, -math.pi))
