"""Coefficients of the transparent boundary conditions.

Each boundary condition is a discrete convolution in time of interior
traces against a table of Laurent coefficients of a root of the
characteristic equation.  The tables are generated by recurrences which are
quadratic (Cauchy products) or, when available, linear three-term
recurrences of Legendre type.  Most generators accept ``exact=True`` to run
in rational arithmetic from :class:`fractions.Fraction` inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np


class RegimeError(ValueError):
    """Parameters outside the regime where a formula holds."""


class NoFiniteTruncationError(RegimeError):
    """The coefficients do not decay geometrically, so no finite cut exists."""


class OverflowGuardError(OverflowError):
    """Raw Legendre-path magnitudes would leave the floating-point range."""


class WeightSingularityError(ZeroDivisionError):
    """A weight of the three-term recurrence has a vanishing denominator."""


OVERFLOW_LIMIT = 1e300


@dataclass(frozen=True)
class CoefficientTable:
    """Laurent coefficients c_0..c_N of a boundary kernel.

    ``stride`` is 2 when entry ``n`` acts at time lag ``2 n + 1`` (the D1Q2
    family) and 1 when entry ``n`` acts at lag ``n`` (entry 0 is then unused
    and zero).  ``values`` may hold matrices along trailing axes.
    """

    family: str
    values: np.ndarray
    stride: int
    params: dict = field(default_factory=dict, compare=False)

    def __len__(self) -> int:
        return len(self.values)

    def lag(self, n: int) -> int:
        return 2 * n + 1 if self.stride == 2 else n

    @property
    def max_lag(self) -> int:
        return self.lag(len(self.values) - 1)

    def kernel(self, max_lag: Optional[int] = None) -> np.ndarray:
        """Array ``K`` with ``K[m]`` the weight of lag ``m``, for m = 0..max_lag."""
        vals = np.asarray(self.values, dtype=float)
        if max_lag is None:
            max_lag = self.max_lag
        K = np.zeros((max_lag + 1,) + vals.shape[1:])
        if self.stride == 2:
            n = min(len(vals), (max_lag - 1) // 2 + 1) if max_lag >= 1 else 0
            K[1:2 * n:2] = vals[:n]
        else:
            n = min(len(vals), max_lag + 1)
            K[1:n] = vals[1:n]
        return K

    def scaled(self, factor, family: Optional[str] = None) -> "CoefficientTable":
        return CoefficientTable(family or self.family, np.asarray(self.values) * factor,
                                self.stride, dict(self.params))


def _num(x, exact):
    return Fraction(x) if exact else float(x)


def _conv_last(a, n, lo, hi, exact):
    """sum_{k=lo}^{hi} a[k] a[n - k] (empty sums are zero)."""
    if hi < lo:
        return Fraction(0) if exact else 0.0
    if exact:
        return sum(a[k] * a[n - k] for k in range(lo, hi + 1))
    return float(np.dot(a[lo:hi + 1], a[n - hi:n - lo + 1][::-1]))


def _conv2(a, b, n, lo, hi, exact):
    """sum_{k=lo}^{hi} a[k] b[n - k]."""
    if hi < lo:
        return Fraction(0) if exact else 0.0
    if exact:
        return sum(a[k] * b[n - k] for k in range(lo, hi + 1))
    return float(np.dot(a[lo:hi + 1], b[n - hi:n - lo + 1][::-1]))


def _container(N, exact):
    return [Fraction(0)] * (N + 1) if exact else np.zeros(N + 1)


def _finish(family, vals, stride, exact, **params):
    arr = np.array(vals, dtype=object) if exact else np.asarray(vals, dtype=float)
    return CoefficientTable(family, arr, stride, params)


# ---------------------------------------------------------------- D1Q2


def d1q2_pi(omega, C):
    """Product of the two roots; ``inf`` when the stable root is degenerate."""
    den = (1 + C) * omega - 2
    if den == 0:
        return math.inf
    return ((1 - C) * omega - 2) / den


def s_recurrence(omega, C, N: int, exact: bool = False) -> CoefficientTable:
    """Coefficients s_n of the stable root by the quadratic recurrence.

    s_0 = 1 + (C - 1) omega / 2 and
    s_n = (omega - 1) s_{n-1} + (1 - (1 + C) omega / 2) sum_k s_k s_{n-1-k}.
    """
    om, c = _num(omega, exact), _num(C, exact)
    s = _container(N, exact)
    s[0] = 1 + (c - 1) * om / 2
    q = 1 - (1 + c) * om / 2
    for n in range(1, N + 1):
        s[n] = (om - 1) * s[n - 1] + q * _conv_last(s, n - 1, 0, n - 1, exact)
    return _finish("d1q2_s", s, 2, exact, omega=omega, C=C)


def s_closed_form_lax_friedrichs(C, N: int, exact: bool = False) -> CoefficientTable:
    """Coefficients at omega = 1: s_n = binom(1/2, n + 1) (C + 1)^(n+1) (C - 1)^n."""
    c = _num(C, exact)
    s = _container(N, exact)
    s[0] = (c + 1) / 2
    for n in range(1, N + 1):
        half = Fraction(1, 2) if exact else 0.5
        s[n] = (half - n) / (1 + n) * (c * c - 1) * s[n - 1]
    return _finish("d1q2_s_lax_friedrichs", s, 2, exact, omega=1, C=C)


def s_geometric_special(C, N: int, exact: bool = False) -> CoefficientTable:
    """Coefficients at omega = 2 / (1 + C), where the stable root is rational."""
    c = _num(C, exact)
    s = _container(N, exact)
    s[0] = 2 * c / (1 + c)
    r = (1 - c) / (1 + c)
    for n in range(1, N + 1):
        s[n] = s[n - 1] * r
    return _finish("d1q2_s_geometric", s, 2, exact, omega=2 / (1 + C), C=C)


def legendre_alpha(omega, C):
    """Argument of the Legendre polynomials in the linear recurrence."""
    return ((C * C - 1) * omega * omega + 2 * omega - 2) / (2 * (1 - omega))


def legendre_B(alpha, N: int, exact: bool = False, guard: bool = True):
    """Raw sequence B_0..B_N (combinations of Legendre polynomials at alpha).

    Raises :class:`OverflowGuardError` before a magnitude above 1e300 is
    stored.
    """
    a = Fraction(alpha) if exact else float(alpha)
    B = [-a, (1 - a * a) / 2]
    for n in range(2, N + 1):
        nxt = Fraction(2 * n - 1, n + 1) * a * B[n - 1] - Fraction(n - 2, n + 1) * B[n - 2] \
            if exact else (2 * n - 1) / (n + 1) * a * B[n - 1] - (n - 2) / (n + 1) * B[n - 2]
        if guard and not exact and not abs(nxt) <= OVERFLOW_LIMIT:
            raise OverflowGuardError(f"|B_{n}| exceeds {OVERFLOW_LIMIT:g} (alpha={a:g})")
        B.append(nxt)
    return B[:N + 1]


def legendre_B_path(omega, C, N: int, keep_raw: bool = False):
    """s_n through the three-term recurrence, for omega in (1, 2].

    Returns ``(B, table)``.  The raw sequence ``B`` is only formed when
    ``keep_raw`` is set and may then raise :class:`OverflowGuardError`; the
    table itself uses the rescaled recurrence, which never overflows.
    """
    if not (1 < omega <= 2):
        raise RegimeError("the Legendre path needs omega in (1, 2]")
    D = (C + 1) * omega - 2
    if D == 0:
        return None, s_geometric_special(C, N)
    B = legendre_B(legendre_alpha(omega, C), N) if keep_raw else None
    s = np.zeros(N + 1)
    s[0] = 1 + (C - 1) * omega / 2
    if N >= 1:
        s[1] = (omega - 1) ** 2 * (1 - legendre_alpha(omega, C) ** 2) / 2 / D
    p = 1 - omega + (1 - C * C) * omega * omega / 2
    q = (omega - 1) ** 2
    for n in range(2, N + 1):
        s[n] = (2 * n - 1) / (n + 1) * p * s[n - 1] - (n - 2) / (n + 1) * q * s[n - 2]
    return B, CoefficientTable("d1q2_s_legendre", s, 2, {"omega": omega, "C": C})


def d1q2_kernels(omega, C, N: int):
    """Right and left D1Q2 tables (s_n and s_n / Pi) valid for either sign of C.

    For C < 0 the tables of |C| are swapped, which is the mirror image of
    the problem and avoids the vanishing leading coefficient at
    omega = 2 / (1 - C).
    """
    c = abs(C)
    if (1 + c) * omega - 2 == 0:
        s = s_geometric_special(c, N)
        inv_pi = 0.0
    else:
        s = s_recurrence(omega, c, N)
        inv_pi = 1.0 / d1q2_pi(omega, c)
    near, far = s, s.scaled(inv_pi, "d1q2_s_over_pi")
    return (near, far) if C >= 0 else (far, near)


# ---------------------------------------------------------------- systemic weights


def _nu_weights(n, w, C, a):
    den = (2 * (a - 1) * n ** 2 - (C ** 2 * n ** 2 + C ** 2 * n) * w ** 2 - (a - 1) * n
           - (2 * (C * a - C) * n ** 2 - 3 * C * a - (C * a + 2 * C) * n) * w - 3 * a + 3)
    v1 = (w - 1) * ((4 * (a ** 2 - a) * n ** 2
                     - (2 * C ** 2 * a * n ** 2 - C ** 2 * a * n - 3 * C ** 2 * a) * w ** 2
                     + 3 * a ** 2) / den
                    + (-8 * (a ** 2 - a) * n
                       - (3 * C * a ** 2 + 4 * (C * a ** 2 - C * a) * n ** 2 + 6 * C * a
                          - 2 * (4 * C * a ** 2 - C * a) * n - 3 * C) * w - 3) / den)
    v2 = (w - 1) ** 2 * (-(2 * (a - 1) * n ** 2 - (C ** 2 * n ** 2 - 2 * C ** 2 * n
                                                    - 3 * C ** 2) * w ** 2 - 7 * (a - 1) * n) / den
                         - (-(2 * (C * a - C) * n ** 2 + 3 * C * a - (7 * C * a - 4 * C) * n
                              + 6 * C) * w + 3 * a - 3) / den)
    return v1, v2


def _nu_direct(n, w, C, a):
    """nu_n from the raw Legendre combination, in rational arithmetic."""
    w, C, a = Fraction(w), Fraction(C), Fraction(a)
    B = legendre_B(a, n, exact=True)
    g = C * w * w - (C + 1) * w + 1
    return -(w - 1) ** n * ((w - 1) * B[n] + g * B[n - 1])


def nu_sequence(omega, C, N: int, alpha=None, strict: bool = False) -> np.ndarray:
    """Sequence nu_0..nu_N feeding the systemic weights.

    ``alpha`` defaults to the Legendre argument of (omega, C); the barred
    sequence passes the argument of (omega, -C) with the sign of C flipped
    elsewhere.  A vanishing recurrence denominator is screened exactly and
    handled by the direct rational formula, or raised when ``strict``.
    """
    w, c = float(omega), float(C)
    a = legendre_alpha(w, c) if alpha is None else float(alpha)
    g = c * w * w - (c + 1) * w + 1
    B = legendre_B(a, min(N, 2) + 1)
    nu = np.zeros(N + 1)
    nu[0] = 0.5 * (c * c - 1) * w * w + 2 * (w - 1)
    if N >= 1:
        nu[1] = ((2 * c + 1) * w * w - c * w ** 3 - (c + 2) * w + 1
                 - (w - 1) * ((w - 1) * B[1] + g * B[0]))
    if N >= 2:
        nu[2] = -(w - 1) ** 2 * ((w - 1) * B[2] + g * B[1])
    fw, fc, fa = Fraction(w), Fraction(c), Fraction(a)
    for n in range(3, N + 1):
        if _den_zero(n, w, c, a):
            if strict:
                raise WeightSingularityError(f"vanishing weight denominator at n={n}, "
                                             f"omega={w}, C={c}")
            nu[n] = float(_nu_direct(n, fw, fc, fa))
            continue
        v1, v2 = _nu_weights(n, w, c, a)
        nu[n] = v1 * nu[n - 1] + v2 * nu[n - 2]
    return nu


def _den_zero(n, w, c, a) -> bool:
    """Exact test (on the binary values of the inputs) of a vanishing denominator."""
    W, Cc, A = Fraction(w), Fraction(c), Fraction(a)
    den = (2 * (A - 1) * n ** 2 - (Cc ** 2 * n ** 2 + Cc ** 2 * n) * W ** 2 - (A - 1) * n
           - (2 * (Cc * A - Cc) * n ** 2 - 3 * Cc * A - (Cc * A + 2 * Cc) * n) * W - 3 * A + 3)
    return den == 0


def systemic_weights(omega, C, N: int, strict: bool = False):
    """Tables (sigma, sigma_bar) closing the non-conserved moment directly.

    ``v_{J+1}^n = sum_k sigma_k u_J^{n-2k-1}`` on the right and
    ``v_0^n = (1 / Pi) sum_k sigma_bar_k u_1^{n-2k-1}`` on the left.  The
    returned left table already includes the factor ``1 / Pi``.
    """
    w, c = float(omega), float(C)
    if w == 1.0:
        s = s_recurrence(1.0, c, N)
        sig = s.scaled(c, "d1q2_sigma")
        return sig, s.scaled(c / d1q2_pi(1.0, c), "d1q2_sigma_bar_over_pi")
    if not (1.0 < w <= 2.0):
        raise RegimeError("systemic weights are available for omega in [1, 2]")
    D = (c + 1) * w - 2
    if D == 0:
        sig = s_geometric_special(c, N).scaled(1.0)
        vals = np.array(sig.values, dtype=float)
        vals[0] = 2 * c / (1 + c)
        r = (1 - c) / (1 + c)
        for n in range(1, N + 1):
            vals[n] = vals[n - 1] * r
        return (CoefficientTable("d1q2_sigma", vals, 2, {"omega": w, "C": c}),
                CoefficientTable("d1q2_sigma_bar_over_pi", np.zeros(N + 1), 2,
                                 {"omega": w, "C": c}))
    a = legendre_alpha(w, c)
    nu = nu_sequence(w, c, N, strict=strict)
    nub = nu_sequence(w, -c, N, alpha=a, strict=strict)
    q = (w - 1) ** 2
    sig = np.zeros(N + 1)
    sigb = np.zeros(N + 1)
    sig[0], sigb[0] = nu[0] / D, -nub[0] / D
    for n in range(1, N + 1):
        sig[n] = q * sig[n - 1] + nu[n] / D
        sigb[n] = q * sigb[n - 1] - nub[n] / D
    pi = d1q2_pi(w, c)
    params = {"omega": w, "C": c}
    return (CoefficientTable("d1q2_sigma", sig, 2, params),
            CoefficientTable("d1q2_sigma_bar_over_pi", sigb / pi, 2, params))


# ---------------------------------------------------------------- D1Q3 fourth order


def _d1q3_sequence(p, m, r, N, exact):
    """Shared recurrence of the D1Q3 fourth-order tables.

    ``p``, ``m`` are (2C+1)(C-2)/3 and (2C-1)(C+2)/3 for the right table
    and are swapped for the left one; ``r`` = (4C^2 - 1)/3.
    """
    b = _container(N, exact)
    if N >= 1:
        b[1] = m
    if N >= 2:
        b[2] = -r * b[1] - p
    if N >= 3:
        b[3] = p * b[1] ** 2 - r * b[2] + r * b[1]
    for n in range(4, N + 1):
        b[n] = (p * _conv_last(b, n - 1, 1, n - 2, exact)
                - m * _conv_last(b, n - 2, 1, n - 3, exact)
                - r * (b[n - 1] - b[n - 2]) + b[n - 3])
    return b


def beta_d1q3_fourth(C, N: int, exact: bool = False) -> CoefficientTable:
    """Right-boundary table beta_1..beta_N of the fourth-order D1Q3 scheme."""
    c = _num(C, exact)
    p = (2 * c + 1) * (c - 2) / 3
    m = (2 * c - 1) * (c + 2) / 3
    r = (4 * c * c - 1) / 3
    return _finish("d1q3_beta", _d1q3_sequence(p, m, r, N, exact), 1, exact, C=C)


def upsilon_d1q3_fourth(C, N: int, exact: bool = False) -> CoefficientTable:
    """Left-boundary table upsilon_1..upsilon_N of the fourth-order D1Q3 scheme."""
    c = _num(C, exact)
    p = (2 * c - 1) * (c + 2) / 3
    m = (2 * c + 1) * (c - 2) / 3
    r = (4 * c * c - 1) / 3
    return _finish("d1q3_upsilon", _d1q3_sequence(p, m, r, N, exact), 1, exact, C=C)


def d1q3_naive_inverse_ratio(C) -> float:
    """Growth ratio of the series of 1/Pi; above one it diverges on |z| = 1."""
    return abs((2 * C + 1) * (C - 2) / ((2 * C - 1) * (C + 2)))


# ---------------------------------------------------------------- shallow water


def shallow_water_d(spec_or_params, exact: bool = False) -> dict:
    """Constants d of the shallow-water characteristic equation.

    Accepts a :class:`SchemeSpec` or a dict with omega, lam, hbar, ubar, g.
    Keys are ``(p, j)`` for the coefficient of kappa^p z^j.
    """
    if isinstance(spec_or_params, dict):
        P = spec_or_params
        om, lam, h, u, g = (P[k] for k in ("omega", "lam", "hbar", "ubar", "g"))
    else:
        s = spec_or_params
        om, lam, h, u, g = s.omega, s.lam, s.hbar, s.ubar, s.g
    om, lam, h, u, g = (_num(x, exact) for x in (om, lam, h, u, g))
    gh = g * h / lam ** 2
    uu = u * u / lam ** 2
    ul = u / lam
    return {
        (-1, 2): -gh * om / 2 + om / 2 - om * ul + om * uu / 2 - 1,
        (-1, 1): -gh * om / 2 - om / 2 + om * ul + om * uu / 2 + 1,
        (0, 2): gh * om - om * uu - 1,
        (0, 1): gh * om - om - om * uu + 1,
        (0, 0): om - 1,
        (1, 2): -gh * om / 2 + om / 2 + om * ul + om * uu / 2 - 1,
        (1, 1): -gh * om / 2 - om / 2 - om * ul + om * uu / 2 + 1,
    }


def _sw_sequence(lo2, lo1, d02, d01, d00, hi2, hi1, N, exact):
    b = _container(N, exact)
    if N >= 1:
        b[1] = -lo2
    if N >= 2:
        b[2] = -lo1 - d02 * b[1]
    if N >= 3:
        b[3] = -d02 * b[2] - d01 * b[1] - hi2 * b[1] ** 2
    for n in range(4, N + 1):
        b[n] = (-d02 * b[n - 1] - d01 * b[n - 2] - d00 * b[n - 3]
                - hi2 * _conv_last(b, n - 1, 1, n - 2, exact)
                - hi1 * _conv_last(b, n - 2, 1, n - 3, exact))
    return b


def shallow_water_coeffs(spec, N: int, exact: bool = False):
    """Tables (beta, upsilon) for the right and left shallow-water boundaries."""
    d = shallow_water_d(spec, exact)
    core = (d[(0, 2)], d[(0, 1)], d[(0, 0)])
    beta = _sw_sequence(d[(-1, 2)], d[(-1, 1)], *core, d[(1, 2)], d[(1, 1)], N, exact)
    ups = _sw_sequence(d[(1, 2)], d[(1, 1)], *core, d[(-1, 2)], d[(-1, 1)], N, exact)
    return (_finish("sw_beta", beta, 1, exact), _finish("sw_upsilon", ups, 1, exact))


# ---------------------------------------------------------------- D2Q5


def beta_2d_orders(omega, C_n, S_n, C_t, S_t, N: int, exact: bool = False):
    """Tables beta^(0), beta^(1), beta^(2) for the D2Q5 boundary normal to one axis.

    ``C_n``, ``S_n`` belong to the normal axis and ``C_t``, ``S_t`` to the
    tangential one.  Order 1 multiplies the centred tangential difference
    and order 2 the tangential second difference.
    """
    om, cn, sn, ct, st = (_num(x, exact) for x in (omega, C_n, S_n, C_t, S_t))
    a = (2 - om) * (1 - sn)
    h = (-om * cn + (2 - om) * sn)
    b0, b1, b2 = (_container(N, exact) for _ in range(3))
    if N >= 1:
        b0[1] = (om * cn + (2 - om) * sn) / 2
    if N >= 2:
        b0[2] = a * b0[1]
        b1[2] = -om * ct * b0[1] / 2
        b2[2] = (2 - om) * st * b0[1] / 2
    for n in range(3, N + 1):
        b0[n] = (om - 1) * b0[n - 2] + a * b0[n - 1] + h / 2 * _conv_last(b0, n - 1, 1, n - 2, exact)
        b1[n] = ((om - 1) * b1[n - 2] + a * b1[n - 1]
                 + h * _conv2(b0, b1, n - 1, 1, n - 2, exact) - om * ct * b0[n - 1] / 2)
        b2[n] = ((om - 1) * b2[n - 2] + a * b2[n - 1]
                 + h * _conv2(b0, b2, n - 1, 1, n - 2, exact)
                 + 2 * h * _conv_last(b1, n - 1, 1, n - 2, exact)
                 - 2 * om * ct * b1[n - 1] + (2 - om) * st * b0[n - 1] / 2)
    params = {"omega": omega, "C_n": C_n, "S_n": S_n, "C_t": C_t, "S_t": S_t}
    return tuple(_finish(f"d2q5_beta{i}", b, 1, exact, **params)
                 for i, b in enumerate((b0, b1, b2)))


def d2q5_pi(omega, C_n, S_n) -> float:
    """Root product for the boundary normal to one axis; ``inf`` if degenerate."""
    den = (S_n + C_n) * omega - 2 * S_n
    if den == 0:
        return math.inf
    return ((S_n - C_n) * omega - 2 * S_n) / den


# ---------------------------------------------------------------- vectorial


def vectorial_coeff_matrices(spec, N: int):
    """Matrix tables for the right and left boundaries of the vectorial scheme.

    Entry n is R diag(s_n | C_i) R^-1 on the right and the same with each
    wave scaled by 1/Pi_i on the left.
    """
    R = spec.R
    Rinv = np.linalg.inv(R)
    right = np.zeros((N + 1, spec.n_sys, spec.n_sys))
    left = np.zeros_like(right)
    rd, ld = [], []
    for Ci in spec.courants:
        r, l = d1q2_kernels(spec.omega, Ci, N)
        rd.append(np.asarray(r.values, dtype=float))
        ld.append(np.asarray(l.values, dtype=float))
    rd, ld = np.array(rd).T, np.array(ld).T
    right = np.einsum("ij,nj,jk->nik", R, rd, Rinv)
    left = np.einsum("ij,nj,jk->nik", R, ld, Rinv)
    params = {"omega": spec.omega, "courants": tuple(spec.courants)}
    return (CoefficientTable("vectorial_right", right, 2, params),
            CoefficientTable("vectorial_left", left, 2, params))


# ---------------------------------------------------------------- truncation


def lambert_w0(x: float, tol: float = 1e-15, maxiter: int = 100) -> float:
    """Principal branch of the Lambert W function by Halley iteration, x >= -1/e."""
    if x < -1.0 / math.e:
        raise ValueError("W0 is real only for x >= -1/e")
    if x == 0.0:
        return 0.0
    if x < 1.0:
        p = math.sqrt(max(0.0, 2.0 * (math.e * x + 1.0)))
        w = -1.0 + p - p * p / 3.0 if x < -0.25 else x / (1.0 + x)
    else:
        L = math.log(x)
        w = L - math.log(L) if x > 3.0 else L
    for _ in range(maxiter):
        ew = math.exp(w)
        f = w * ew - x
        wp1 = w + 1.0
        if wp1 == 0.0:
            break
        step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1))
        w -= step
        if abs(step) <= tol * (1.0 + abs(w)):
            break
    return w


def truncation_constant(omega, C) -> float:
    """Envelope constant of s_n in the oscillating regime."""
    a = legendre_alpha(omega, C)
    return abs((omega - 1) / ((C + 1) * omega - 2)) * math.sqrt(2 / math.pi) \
        * (1 - a * a) ** 0.25


def n_stop(omega, C, eps: float) -> int:
    """Smallest index past which |s_n| stays below ``eps``, by the envelope bound.

    Defined for omega in (2 / (1 + C), 2).  At omega = 2 the coefficients
    only decay like n^(-3/2) and :class:`NoFiniteTruncationError` is raised.
    """
    if omega == 2:
        raise NoFiniteTruncationError("no geometric decay at omega = 2")
    if not (2 / (1 + C) < omega < 2):
        raise RegimeError("truncation bound needs omega in (2/(1+C), 2)")
    L = math.log(omega - 1)
    cc = truncation_constant(omega, C)
    arg = -(2.0 / 3.0) * L * (cc / eps) ** (2.0 / 3.0)
    return int(math.ceil(-3.0 / (2.0 * L) * lambert_w0(arg)))


# ---------------------------------------------------------------- asymptotics


@dataclass(frozen=True)
class AsymptoticEstimate:
    """Large-index model of a coefficient sequence.

    ``value`` is the predicted entry (nan for conjecture-grade families),
    ``rate`` the geometric factor, ``tame_exponent`` the power of n.
    """

    family: str
    n: int
    value: float
    rate: float
    tame_exponent: float
    grade: str = "theorem"
    envelope: float = float("nan")


def _d1q2_family(omega, C):
    if omega == 1:
        return "lax_friedrichs"
    if (C + 1) * omega - 2 == 0:
        return "geometric"
    if omega < 2 / (1 + C):
        return "monotone"
    return "oscillating"


def d1q3_angles(C):
    """Angles (theta_I, theta_II) of the branch points of the D1Q3 right root."""
    Pt = (4 * C * C - 1) * (C * C - 1)
    sq = math.sqrt(Pt)
    t1 = math.atan2(math.sqrt(4 * (1 - C * C) * sq - 8 * C ** 4 + 13 * C * C + 4),
                    2 * (1 - C * C) - sq)
    t2 = math.atan2(math.sqrt(-4 * (1 - C * C) * sq - 8 * C ** 4 + 13 * C * C + 4),
                    2 * (1 - C * C) + sq)
    return t1, t2


def asymptotic_estimate(family: str, params: dict, n: int) -> AsymptoticEstimate:
    """Asymptotic model of entry n of a coefficient family.

    Families: ``d1q2_s`` (params omega, C), ``d1q3_beta`` (C),
    ``d2q5_beta2`` at omega = 2 (Cx, Cy; odd n only, even entries vanish)
    and ``d2q5_beta0`` / ``d2q5_beta1`` for omega < 2, which are
    conjecture-grade and carry no value.
    """
    if family == "d1q2_s":
        w, C = params["omega"], params["C"]
        kind = _d1q2_family(w, C)
        if kind == "lax_friedrichs":
            val = (1 + C) / (2 * math.sqrt(math.pi)) * (1 - C * C) ** n * n ** -1.5
            return AsymptoticEstimate("d1q2_s/" + kind, n, val, 1 - C * C, -1.5)
        if kind == "geometric":
            r = (1 - C) / (1 + C)
            return AsymptoticEstimate("d1q2_s/" + kind, n, 2 * C / (1 + C) * r ** n, r, 0.0)
        a = legendre_alpha(w, C)
        D = (C + 1) * w - 2
        if kind == "monotone":
            sq = math.sqrt(a * a - 1)
            rate = (w - 1) * (a + sq)
            pre = (a * a - 1) ** -0.25 * (1 - a * a - a * sq) * (w - 1) \
                / (D * math.sqrt(a + sq)) / math.sqrt(2 * math.pi)
            return AsymptoticEstimate("d1q2_s/" + kind, n, pre * rate ** n * n ** -1.5,
                                      rate, -1.5)
        th = math.acos(a)
        env = abs((w - 1) / D) * math.sqrt(2 / math.pi) * (1 - a * a) ** 0.25 \
            * abs(w - 1) ** n * n ** -1.5
        val = (w - 1) ** (n + 1) / D * math.sqrt(2 / math.pi) * (1 - a * a) ** 0.25 \
            * math.sin((n + 0.5) * th - math.pi / 4) * n ** -1.5
        return AsymptoticEstimate("d1q2_s/" + kind, n, val, abs(w - 1), -1.5, envelope=env)
    if family == "d1q3_beta":
        C = params["C"]
        t1, t2 = d1q3_angles(C)
        m = (2 * C - 1) * (C + 2)
        p = (2 * C + 1) * (C - 2)

        def gamma(z):
            return 3 * (z + 1) / (2 * (m * z - p) * z)

        def term(ta, tb):
            z = np.exp(1j * ta)
            root = np.sqrt((z - np.exp(1j * tb)) * (z - np.exp(-1j * tb)))
            return math.sqrt(math.sin(ta)) * np.real(
                gamma(z) * root * np.exp(-1j * (n - 0.5) * ta - 1j * math.pi / 4))

        val = -math.sqrt(2 / math.pi) * (term(t1, t2) + term(t2, t1)) * n ** -1.5
        return AsymptoticEstimate("d1q3_beta", n, float(val), 1.0, -1.5)
    if family == "d2q5_beta2":
        Cx, Cy = params["Cx"], params["Cy"]
        if n % 2 == 0:
            return AsymptoticEstimate("d2q5_beta2", n, 0.0, 1.0, 0.5)
        k = (n - 1) // 2
        th = math.atan2(2 * Cx * math.sqrt(1 - Cx * Cx), 1 - 2 * Cx * Cx)
        pre = 2 / math.sqrt(math.pi) * Cy * Cy / (math.sqrt(Cx) * (1 - Cx * Cx) ** 0.75)
        val = pre * math.sin((k + 0.5) * th - math.pi / 4) * math.sqrt(k)
        return AsymptoticEstimate("d2q5_beta2", n, val, 1.0, 0.5,
                                  envelope=abs(pre) * math.sqrt(k))
    if family in ("d2q5_beta0", "d2q5_beta1"):
        w = params["omega"]
        h = 0 if family == "d2q5_beta0" else 1
        return AsymptoticEstimate(family, n, float("nan"), math.sqrt(abs(w - 1)),
                                  -1.5 + h, grade="conjecture")
    raise ValueError(f"unknown family {family!r}")
