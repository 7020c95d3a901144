"""Relaxation and transport for the five bulk schemes.

Every update works on whole arrays of moments laid out component-major, as
stored in :class:`lbm_tbc.lattice_core.Field`.  Relaxation is applied at
every stored node (in 2D the corners hold zeros, which relax to zeros) and
transport only writes the interior.
"""

from __future__ import annotations

import numpy as np

from .lattice_core import (
    DryStateError,
    SchemeSpec,
    inverse_moment_matrix,
    moment_matrix,
    velocities,
)


# ---------------------------------------------------------------- equilibria


def equilibrium_coefficients(spec: SchemeSpec) -> dict:
    """Coefficients of the (linear) equilibria of the non-conserved moments."""
    k = spec.kind
    if k == "D1Q2":
        return {"C": spec.C}
    if k == "D1Q3Fourth":
        return {"C": spec.C, "w": (1.0 + 2.0 * spec.C ** 2) / 3.0}
    if k == "D2Q5TrtMagic":
        return {"Cx": spec.Cx, "Sx": spec.Sx, "Cy": spec.Cy, "Sy": spec.Sy}
    if k == "D1Q3ShallowWater":
        return {"row": (spec.g * spec.hbar - spec.ubar ** 2, 2.0 * spec.ubar),
                "nonlinear": spec.nonlinear}
    return {"F_over_lambda": spec.F / spec.lam}


def shallow_water_flux(spec: SchemeSpec, u, v):
    """Second component of the shallow-water flux, or its linearization."""
    if spec.nonlinear:
        u = np.asarray(u, dtype=float)
        if np.any(u <= 0.0):
            raise DryStateError("non-positive water depth in the nonlinear flux")
        return v * v / u + 0.5 * spec.g * u * u
    return (spec.g * spec.hbar - spec.ubar ** 2) * u + 2.0 * spec.ubar * v


def equilibrium(spec: SchemeSpec, conserved: np.ndarray) -> np.ndarray:
    """Full moment array at equilibrium from the conserved moments."""
    k = spec.kind
    if k == "D1Q2":
        u = conserved[0]
        return np.stack([u, spec.C * u])
    if k == "D1Q3Fourth":
        u = conserved[0]
        return np.stack([u, spec.C * u, (1.0 + 2.0 * spec.C ** 2) / 3.0 * u])
    if k == "D2Q5TrtMagic":
        u = conserved[0]
        return np.stack([u, spec.Cx * u, spec.Sx * u, spec.Cy * u, spec.Sy * u])
    if k == "D1Q3ShallowWater":
        u, v = conserved[0], conserved[1]
        return np.stack([u, v, shallow_water_flux(spec, u, v)])
    u = conserved
    v = np.tensordot(spec.F / spec.lam, u, axes=(1, 0))
    return np.concatenate([u, v])


# ---------------------------------------------------------------- relaxation


def d1q2_relax(omega: float, C: float, m: np.ndarray) -> np.ndarray:
    """Relax (u, v): u is kept, v moves toward C u with rate omega."""
    u, v = m[0], m[1]
    return np.stack([u, (1.0 - omega) * v + omega * C * u])


def relax(spec: SchemeSpec, m: np.ndarray) -> np.ndarray:
    """Post-relaxation moments; conserved moments are returned bitwise."""
    k, om = spec.kind, spec.omega
    if k == "D1Q2":
        return d1q2_relax(om, spec.C, m)
    if k == "D1Q3Fourth":
        u = m[0]
        return np.stack([u, -m[1] + 2.0 * spec.C * u,
                         -m[2] + 2.0 * (1.0 + 2.0 * spec.C ** 2) / 3.0 * u])
    if k == "D2Q5TrtMagic":
        u = m[0]
        return np.stack([u,
                         (1.0 - om) * m[1] + om * spec.Cx * u,
                         (om - 1.0) * m[2] + (2.0 - om) * spec.Sx * u,
                         (1.0 - om) * m[3] + om * spec.Cy * u,
                         (om - 1.0) * m[4] + (2.0 - om) * spec.Sy * u])
    if k == "D1Q3ShallowWater":
        u, v = m[0], m[1]
        return np.stack([u, v, (1.0 - om) * m[2] + om * shallow_water_flux(spec, u, v)])
    N = spec.n_sys
    u, v = m[:N], m[N:]
    veq = np.tensordot(spec.F / spec.lam, u, axes=(1, 0))
    return np.concatenate([u, (1.0 - om) * v + om * veq])


def relax_to_distributions(spec: SchemeSpec, m: np.ndarray) -> np.ndarray:
    """Relax then map to distributions, at every stored node.

    In 2D the four corner nodes are left out of the relaxation.
    """
    if spec.dim == 2:
        m = m.copy()
        corners = (slice(None), [0, 0, -1, -1], [0, -1, 0, -1])
        m[corners] = 0.0
        out = np.tensordot(inverse_moment_matrix(spec), relax(spec, m), axes=(1, 0))
        out[corners] = 0.0
        return out
    return np.tensordot(inverse_moment_matrix(spec), relax(spec, m), axes=(1, 0))


# ---------------------------------------------------------------- transport


def transport_distributions(spec: SchemeSpec, fstar: np.ndarray) -> np.ndarray:
    """Shifted copies of the post-relaxation distributions on the interior.

    Returns distributions of shape ``(q, J)`` or ``(q, J, K)``.
    """
    c = velocities(spec)
    if spec.dim == 1:
        n = fstar.shape[1]
        out = np.empty((fstar.shape[0], n - 2))
        for i, ci in enumerate(c):
            out[i] = fstar[i, 1 - ci:n - 1 - ci]
        return out
    nx, ny = fstar.shape[1:]
    out = np.empty((fstar.shape[0], nx - 2, ny - 2))
    for i, (cx, cy) in enumerate(c):
        out[i] = fstar[i, 1 - cx:nx - 1 - cx, 1 - cy:ny - 1 - cy]
    return out


def d1q2_transport(fstar: np.ndarray) -> np.ndarray:
    """D1Q2 transport: f+ moves one node right, f- one node left (interior only)."""
    n = fstar.shape[1]
    return np.stack([fstar[0, 0:n - 2], fstar[1, 2:n]])


def transport_interior(spec: SchemeSpec, fstar: np.ndarray, out: np.ndarray) -> None:
    """Write the interior moments at the next time level into ``out``."""
    f = transport_distributions(spec, fstar)
    m = np.tensordot(moment_matrix(spec), f, axes=(1, 0))
    if spec.dim == 1:
        out[:, 1:-1] = m
    else:
        out[:, 1:-1, 1:-1] = m


# ---------------------------------------------------------------- per-scheme steps


def _interior_step(spec: SchemeSpec, m: np.ndarray) -> np.ndarray:
    fstar = relax_to_distributions(spec, m)
    out = np.zeros_like(m)
    transport_interior(spec, fstar, out)
    return out


def d1q2_step(omega: float, C: float, m: np.ndarray, lam: float = 1.0) -> np.ndarray:
    return _interior_step(SchemeSpec.d1q2(omega, lam, C * lam), m)


def d1q3_fourth_step(C: float, m: np.ndarray, lam: float = 1.0) -> np.ndarray:
    return _interior_step(SchemeSpec.d1q3_fourth(lam, C * lam), m)


def d2q5_step(omega, Cx, Sx, Cy, Sy, m: np.ndarray, lam: float = 1.0) -> np.ndarray:
    return _interior_step(SchemeSpec.d2q5(omega, lam, Cx * lam, Cy * lam, Sx, Sy), m)


def shallow_water_step(spec: SchemeSpec, m: np.ndarray) -> np.ndarray:
    if spec.kind != "D1Q3ShallowWater":
        raise ValueError("not a shallow-water spec")
    return _interior_step(spec, m)


def vectorial_step(spec: SchemeSpec, m: np.ndarray) -> np.ndarray:
    if spec.kind != "D1Q2Vectorial":
        raise ValueError("not a vectorial spec")
    return _interior_step(spec, m)


def rusanov_update(spec: SchemeSpec, m: np.ndarray) -> np.ndarray:
    """Finite-volume form of the linear shallow-water scheme at omega = 1.

    Returns the conserved moments at the next level on the interior, using
    the centred flux plus the matrix-valued diffusion.
    """
    lam = spec.lam
    u, v = m[0], m[1]
    F1 = v
    F2 = shallow_water_flux(spec, u, v)
    D = np.array([[(spec.cs ** 2 - spec.ubar ** 2) / lam, 2.0 * spec.ubar / lam],
                  [0.0, lam]])
    U = np.stack([u, v])
    F = np.stack([F1, F2])
    jump = U[:, 1:] - U[:, :-1]
    flux = 0.5 * (F[:, :-1] + F[:, 1:]) - 0.5 * np.tensordot(D, jump, axes=(1, 0))
    return U[:, 1:-1] - (flux[:, 1:] - flux[:, :-1]) / lam
