"""Grids, fields, moment/distribution maps and the step orchestrator.

Storage is component-major: a 1D field is an array of shape ``(q, J + 2)``
and a 2D field has shape ``(q, J + 2, K + 2)``.  Nodes ``0`` and ``J + 1``
(and the frame in 2D) are written only by boundary policies.  The four 2D
corners hold zeros and are never read nor written.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Callable, Optional

import numpy as np

KINDS = ("D1Q2", "D1Q3Fourth", "D2Q5TrtMagic", "D1Q3ShallowWater", "D1Q2Vectorial")


class DimensionError(ValueError):
    """Array does not carry the number of components the scheme expects."""


class HistoryUnderflowError(RuntimeError):
    """A boundary convolution needs more history than what is stored."""


class DryStateError(ArithmeticError):
    """Nonlinear shallow-water flux evaluated with non-positive depth."""


# ---------------------------------------------------------------- grids


@dataclass(frozen=True)
class Grid1D:
    x_left: float
    x_right: float
    J: int
    lattice_velocity: float

    def __post_init__(self):
        if not self.x_right > self.x_left:
            raise ValueError("x_right must exceed x_left")
        if self.J < 2:
            raise ValueError("J must be at least 2")
        if not self.lattice_velocity > 0:
            raise ValueError("lattice velocity must be positive")

    @property
    def dx(self) -> float:
        return (self.x_right - self.x_left) / (self.J + 1)

    @property
    def dt(self) -> float:
        return self.dx / self.lattice_velocity

    @property
    def shape(self) -> tuple:
        return (self.J + 2,)

    @property
    def x(self) -> np.ndarray:
        return self.x_left + self.dx * np.arange(self.J + 2)

    def time(self, n: int) -> float:
        return n * self.dt


@dataclass(frozen=True)
class Grid2D:
    x_left: float
    x_right: float
    y_bottom: float
    y_top: float
    J: int
    lattice_velocity: float

    def __post_init__(self):
        if not (self.x_right > self.x_left and self.y_top > self.y_bottom):
            raise ValueError("degenerate rectangle")
        if self.J < 2:
            raise ValueError("J must be at least 2")
        if not self.lattice_velocity > 0:
            raise ValueError("lattice velocity must be positive")
        k_real = self.J * (self.y_top - self.y_bottom) / (self.x_right - self.x_left)
        if abs(k_real - round(k_real)) > 1e-9 * max(1.0, abs(k_real)) or round(k_real) < 2:
            raise ValueError(f"K = {k_real} is not an integer >= 2")

    @property
    def K(self) -> int:
        return int(round(self.J * (self.y_top - self.y_bottom) / (self.x_right - self.x_left)))

    @property
    def dx(self) -> float:
        return (self.x_right - self.x_left) / (self.J + 1)

    @property
    def dt(self) -> float:
        return self.dx / self.lattice_velocity

    @property
    def shape(self) -> tuple:
        return (self.J + 2, self.K + 2)

    @property
    def x(self) -> np.ndarray:
        return self.x_left + self.dx * np.arange(self.J + 2)

    @property
    def y(self) -> np.ndarray:
        # same spacing on both axes, so the top node may not sit exactly on y_top
        return self.y_bottom + self.dx * np.arange(self.K + 2)

    def time(self, n: int) -> float:
        return n * self.dt


# ---------------------------------------------------------------- scheme spec


@dataclass(frozen=True)
class SchemeSpec:
    """Which bulk scheme is used, with its parameters.

    Use the ``d1q2``, ``d1q3_fourth``, ``d2q5``, ``shallow_water`` and
    ``vectorial`` constructors rather than the raw initializer.
    """

    kind: str
    omega: float
    lam: float
    a: float = 0.0
    ax: float = 0.0
    ay: float = 0.0
    Sx: float = 0.0
    Sy: float = 0.0
    hbar: float = 1.0
    ubar: float = 0.0
    g: float = 1.0
    nonlinear: bool = False
    jacobian: Optional[tuple] = None
    eig_vectors: Optional[tuple] = dc_field(default=None, compare=False)
    eig_values: Optional[tuple] = dc_field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown scheme kind {self.kind!r}")
        if not (0.0 < self.omega <= 2.0):
            raise ValueError("omega must lie in (0, 2]")
        if not self.lam > 0:
            raise ValueError("lattice velocity must be positive")
        if self.nonlinear and self.kind != "D1Q3ShallowWater":
            raise ValueError("only the shallow-water scheme has a nonlinear mode")
        if self.kind == "D1Q2Vectorial":
            if self.jacobian is None:
                raise ValueError("vectorial scheme needs a flux Jacobian")
            F = np.asarray(self.jacobian, dtype=float)
            R = np.asarray(self.eig_vectors, dtype=float)
            lam_k = np.asarray(self.eig_values, dtype=float)
            if abs(np.linalg.det(R)) < 1e-14 * max(1.0, np.abs(R).max() ** len(lam_k)):
                raise ValueError("eigenvector matrix is singular")
            rebuilt = R @ np.diag(lam_k) @ np.linalg.inv(R)
            if np.abs(rebuilt - F).max() > 1e-12 * max(1.0, np.abs(F).max()):
                raise ValueError("R diag(a_k) R^-1 does not reproduce the Jacobian")

    # constructors
    @classmethod
    def d1q2(cls, omega, lam, a):
        return cls("D1Q2", float(omega), float(lam), a=float(a))

    @classmethod
    def d1q3_fourth(cls, lam, a):
        return cls("D1Q3Fourth", 2.0, float(lam), a=float(a))

    @classmethod
    def d2q5(cls, omega, lam, ax, ay, Sx, Sy):
        return cls("D2Q5TrtMagic", float(omega), float(lam), ax=float(ax), ay=float(ay),
                   Sx=float(Sx), Sy=float(Sy))

    @classmethod
    def shallow_water(cls, omega, lam, hbar, ubar, g, nonlinear=False):
        return cls("D1Q3ShallowWater", float(omega), float(lam), hbar=float(hbar),
                   ubar=float(ubar), g=float(g), nonlinear=bool(nonlinear))

    @classmethod
    def vectorial(cls, omega, lam, jacobian):
        F = np.array(jacobian, dtype=float)
        vals, vecs = np.linalg.eig(F)
        if np.abs(vals.imag).max() > 1e-12 or np.abs(vecs.imag).max() > 1e-12:
            raise ValueError("flux Jacobian is not hyperbolic")
        order = np.argsort(vals.real)
        vals, vecs = vals.real[order], vecs.real[:, order]
        return cls("D1Q2Vectorial", float(omega), float(lam),
                   jacobian=tuple(map(tuple, F)),
                   eig_vectors=tuple(map(tuple, vecs)), eig_values=tuple(vals))

    @classmethod
    def shallow_water_vectorial(cls, omega, lam, hbar, ubar, g):
        F = shallow_water_jacobian(hbar, ubar, g)
        cs = np.sqrt(g * hbar)
        R = np.array([[1.0, 1.0], [ubar - cs, ubar + cs]])
        return cls("D1Q2Vectorial", float(omega), float(lam), hbar=float(hbar),
                   ubar=float(ubar), g=float(g), jacobian=tuple(map(tuple, F)),
                   eig_vectors=tuple(map(tuple, R)), eig_values=(ubar - cs, ubar + cs))

    # derived quantities
    @property
    def C(self) -> float:
        return self.a / self.lam

    @property
    def Cx(self) -> float:
        return self.ax / self.lam

    @property
    def Cy(self) -> float:
        return self.ay / self.lam

    @property
    def cs(self) -> float:
        return float(np.sqrt(self.g * self.hbar))

    @property
    def courants(self) -> np.ndarray:
        """C_k = a_k / lambda for the vectorial scheme."""
        return np.asarray(self.eig_values, dtype=float) / self.lam

    @property
    def R(self) -> np.ndarray:
        return np.asarray(self.eig_vectors, dtype=float)

    @property
    def F(self) -> np.ndarray:
        return np.asarray(self.jacobian, dtype=float)

    @property
    def n_sys(self) -> int:
        return len(self.eig_values) if self.kind == "D1Q2Vectorial" else 1

    @property
    def q(self) -> int:
        return {"D1Q2": 2, "D1Q3Fourth": 3, "D2Q5TrtMagic": 5, "D1Q3ShallowWater": 3,
                "D1Q2Vectorial": 2 * self.n_sys}[self.kind]

    @property
    def dim(self) -> int:
        return 2 if self.kind == "D2Q5TrtMagic" else 1

    @property
    def conserved(self) -> tuple:
        """Indices of conserved moments."""
        if self.kind == "D1Q3ShallowWater":
            return (0, 1)
        if self.kind == "D1Q2Vectorial":
            return tuple(range(self.n_sys))
        return (0,)


def shallow_water_jacobian(hbar, ubar, g) -> np.ndarray:
    return np.array([[0.0, 1.0], [-ubar ** 2 + g * hbar, 2.0 * ubar]])


# ---------------------------------------------------------------- fields


@dataclass(frozen=True)
class Field:
    data: np.ndarray
    n: int = 0

    def __post_init__(self):
        if not np.all(np.isfinite(self.data)):
            raise FloatingPointError(f"non-finite entries in field at n={self.n}")
        self.data.flags.writeable = False

    @property
    def q(self) -> int:
        return self.data.shape[0]

    def interior(self) -> np.ndarray:
        if self.data.ndim == 2:
            return self.data[:, 1:-1]
        return self.data[:, 1:-1, 1:-1]


def check_field(spec: SchemeSpec, grid, data: np.ndarray) -> None:
    expected = (spec.q,) + grid.shape
    if data.shape != expected:
        raise DimensionError(f"expected array of shape {expected}, got {data.shape}")


# ---------------------------------------------------------------- moment maps


def moment_matrix(spec: SchemeSpec) -> np.ndarray:
    """Matrix M with m = M f, distributions ordered by ``velocities(spec)``."""
    k = spec.kind
    if k == "D1Q2":
        return np.array([[1.0, 1.0], [1.0, -1.0]])
    if k == "D1Q3Fourth":
        return np.array([[1.0, 1.0, 1.0], [0.0, 1.0, -1.0], [0.0, 1.0, 1.0]])
    if k == "D1Q3ShallowWater":
        lam = spec.lam
        return np.array([[1.0, 1.0, 1.0], [0.0, lam, -lam], [0.0, lam ** 2, lam ** 2]])
    if k == "D2Q5TrtMagic":
        return np.array([[1.0, 1.0, 1.0, 1.0, 1.0],
                         [0.0, 1.0, -1.0, 0.0, 0.0],
                         [0.0, 1.0, 1.0, 0.0, 0.0],
                         [0.0, 0.0, 0.0, 1.0, -1.0],
                         [0.0, 0.0, 0.0, 1.0, 1.0]])
    N = spec.n_sys
    I = np.eye(N)
    return np.block([[I, I], [I, -I]])


def inverse_moment_matrix(spec: SchemeSpec) -> np.ndarray:
    """Closed-form inverse of ``moment_matrix``."""
    k = spec.kind
    if k == "D1Q2":
        return 0.5 * np.array([[1.0, 1.0], [1.0, -1.0]])
    if k == "D1Q3Fourth":
        return np.array([[1.0, 0.0, -1.0], [0.0, 0.5, 0.5], [0.0, -0.5, 0.5]])
    if k == "D1Q3ShallowWater":
        lam = spec.lam
        return np.array([[1.0, 0.0, -1.0 / lam ** 2],
                         [0.0, 0.5 / lam, 0.5 / lam ** 2],
                         [0.0, -0.5 / lam, 0.5 / lam ** 2]])
    if k == "D2Q5TrtMagic":
        return np.array([[1.0, 0.0, -1.0, 0.0, -1.0],
                         [0.0, 0.5, 0.5, 0.0, 0.0],
                         [0.0, -0.5, 0.5, 0.0, 0.0],
                         [0.0, 0.0, 0.0, 0.5, 0.5],
                         [0.0, 0.0, 0.0, -0.5, 0.5]])
    N = spec.n_sys
    I = 0.5 * np.eye(N)
    return np.block([[I, I], [I, -I]])


def velocities(spec: SchemeSpec) -> np.ndarray:
    """Integer lattice shifts of each distribution, shape (q,) or (q, 2)."""
    k = spec.kind
    if k == "D1Q2":
        return np.array([1, -1])
    if k in ("D1Q3Fourth", "D1Q3ShallowWater"):
        return np.array([0, 1, -1])
    if k == "D2Q5TrtMagic":
        return np.array([[0, 0], [1, 0], [-1, 0], [0, 1], [0, -1]])
    N = spec.n_sys
    return np.concatenate([np.ones(N, dtype=int), -np.ones(N, dtype=int)])


def _apply(matrix: np.ndarray, arr: np.ndarray, spec: SchemeSpec) -> np.ndarray:
    arr = np.asarray(arr, dtype=float)
    if arr.shape[0] != spec.q:
        raise DimensionError(f"{spec.kind} expects {spec.q} components, got {arr.shape[0]}")
    return np.tensordot(matrix, arr, axes=(1, 0))


def moments_to_distributions(spec: SchemeSpec, m) -> np.ndarray:
    return _apply(inverse_moment_matrix(spec), m, spec)


def distributions_to_moments(spec: SchemeSpec, f) -> np.ndarray:
    return _apply(moment_matrix(spec), f, spec)


# ---------------------------------------------------------------- initialization


def equilibrium_moments(spec: SchemeSpec, conserved: np.ndarray) -> np.ndarray:
    """Full moment vector at equilibrium given the conserved moments.

    ``conserved`` has shape ``(n_conserved,) + grid_shape``.
    """
    from . import schemes

    return schemes.equilibrium(spec, np.asarray(conserved, dtype=float))


def initialize_at_equilibrium(spec: SchemeSpec, grid, u0) -> Field:
    """Conserved moments are the point samples, the others their equilibria.

    ``u0`` is either an array of samples (leading axis = conserved
    components, omitted when there is only one) or a callable of the node
    coordinates.
    """
    if callable(u0):
        if spec.dim == 1:
            samples = u0(grid.x)
        else:
            X, Y = np.meshgrid(grid.x, grid.y, indexing="ij")
            samples = u0(X, Y)
    else:
        samples = u0
    samples = np.asarray(samples, dtype=float)
    n_cons = len(spec.conserved)
    if samples.shape == grid.shape:
        samples = samples[None]
    if samples.shape != (n_cons,) + grid.shape:
        raise DimensionError(f"initial datum shape {samples.shape} does not match grid")
    data = equilibrium_moments(spec, samples)
    if spec.dim == 2:
        data[:, 0, 0] = data[:, 0, -1] = data[:, -1, 0] = data[:, -1, -1] = 0.0
    return Field(data, 0)


# ---------------------------------------------------------------- stepping


def step(spec: SchemeSpec, field: Field, bc, grid=None) -> Field:
    """Advance one time step: relax, boundary hooks, transport, boundary fill.

    ``bc`` is a boundary object exposing ``pre_transport(spec, fstar, n)``
    and ``post_transport(spec, data, n)``, such as those built by
    :mod:`lbm_tbc.boundary`.
    """
    from . import schemes

    data = field.data
    fstar = schemes.relax_to_distributions(spec, data)
    bc.pre_transport(spec, fstar, field.n)
    # closures that only act on distributions leave the previous frame moments
    new = data.copy()
    schemes.transport_interior(spec, fstar, new)
    bc.post_transport(spec, new, field.n + 1, fstar)
    return Field(new, field.n + 1)


def run(spec: SchemeSpec, field: Field, bc, steps: int,
        callback: Optional[Callable[[Field], None]] = None) -> Field:
    """Apply ``step`` repeatedly; ``callback`` sees every field including the first."""
    if hasattr(bc, "start"):
        field = bc.start(spec, field)
    if callback is not None:
        callback(field)
    for _ in range(steps):
        field = step(spec, field, bc)
        if callback is not None:
            callback(field)
    return field
