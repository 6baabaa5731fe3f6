"""Unsteady lifting-line aerodynamics with a Wagner-function indicial lag.

Spanwise circulation is a truncated Fourier series Gamma(theta) =
sum_k a_k sin(k theta) over theta = arccos(s / l).  Each blade element
carries two deficiency states z_k realizing the Duhamel convolution of the
Wagner function against its effective wash y' = y1 + y_Gamma(a), where
y_Gamma is the trailing-vortex induced wash of the current circulation.
The lagged wash beta drives the circulation toward the flat-plate Kutta
value Gamma = pi c beta at the semichord-convection rate 2 U / c, so the
settled state solves the classical Prandtl monoplane system.

Everything is linear in (state, wash), so the march is a time-varying
linear system xi_dot = A_xi xi + B_xi y1 with xi = [a; z].
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .morphology import BladeElement, ElementKinematics, RejectedConfiguration, U_MIN

# Jones' two-exponential Wagner approximation, time in semichords traveled.
WAGNER_PSI = (0.165, 0.335)
WAGNER_EPS = (0.0455, 0.3)

COND_LIMIT = 1e12

# RK4 absolute-stability reach on the negative real axis (~2.785); rates
# faster than this per step cannot be marched accurately.
RK4_RATE_LIMIT = 2.5


class AeroBlowup(RuntimeError):
    """The marched aerodynamic state left the finite range."""


@dataclass(frozen=True)
class WagnerParams:
    """Wagner function Phi(tau) = 1 - psi1 e^(-eps1 tau) - psi2 e^(-eps2 tau)."""

    psi: tuple[float, float] = WAGNER_PSI
    eps: tuple[float, float] = WAGNER_EPS

    def __post_init__(self):
        if not (0.0 < self.eps[0] < self.eps[1]):
            raise ValueError("require 0 < eps1 < eps2")
        if min(self.psi) <= 0.0 or sum(self.psi) >= 1.0:
            raise ValueError("psi must be positive with psi1 + psi2 < 1")

    @property
    def phi0(self) -> float:
        return 1.0 - self.psi[0] - self.psi[1]


def wagner_phi(tau_bar, params: WagnerParams = WagnerParams()):
    """Wagner indicial response at tau_bar semichords traveled (tau_bar >= 0)."""
    tau_bar = np.asarray(tau_bar, dtype=float)
    out = 1.0 - (params.psi[0] * np.exp(-params.eps[0] * tau_bar)
                 + params.psi[1] * np.exp(-params.eps[1] * tau_bar))
    return out if out.ndim else float(out)


def fourier_matrix(thetas: np.ndarray) -> np.ndarray:
    """Rows A_i = [sin(theta_i), sin(2 theta_i), ..., sin(n theta_i)]."""
    thetas = np.asarray(thetas, dtype=float)
    n = thetas.shape[0]
    k = np.arange(1, n + 1)
    return np.sin(np.outer(thetas, k))


def circulation(a: np.ndarray, elements: list[BladeElement]) -> np.ndarray:
    """Bound circulation Gamma_i = sum_k a_k sin(k theta_i) at the elements."""
    a = np.asarray(a, dtype=float)
    if a.shape[0] != len(elements):
        raise ValueError(f"expected {len(elements)} Fourier coefficients, got {a.shape[0]}")
    thetas = np.array([el.theta for el in elements])
    return fourier_matrix(thetas) @ a


def downwash_matrix(thetas: np.ndarray, semispan: float, mode: str = "prandtl") -> np.ndarray:
    """Matrix P mapping Fourier coefficients a to induced wash y_Gamma = P a.

    prandtl: y_Gamma_i = -(1 / 4 l) sum_k k a_k sin(k theta_i) / sin(theta_i),
    the lifting-line downwash (Glauert integral) of the trailing vorticity.
    paper_literal: sum_k a_k sin(k theta_i) / sin(theta_i), kept for
    comparison only.  none: zero coupling (isolated 2D sections).
    """
    thetas = np.asarray(thetas, dtype=float)
    n = thetas.shape[0]
    if mode == "none":
        return np.zeros((n, n))
    sin_t = np.sin(thetas)
    if np.any(sin_t <= 0.0):
        raise RejectedConfiguration("theta on a wingtip: induced wash undefined")
    k = np.arange(1, n + 1)
    base = np.sin(np.outer(thetas, k)) / sin_t[:, None]
    if mode == "prandtl":
        return -base * k[None, :] / (4.0 * semispan)
    if mode == "paper_literal":
        return base
    raise ValueError(f"unknown downwash mode {mode!r}")


def induced_wash(a: np.ndarray, elements: list[BladeElement], geom,
                 mode: str = "prandtl") -> np.ndarray:
    """Circulation-induced wash y_Gamma at the elements (additive to y1)."""
    a = np.asarray(a, dtype=float)
    if a.shape[0] != len(elements):
        raise ValueError(f"expected {len(elements)} Fourier coefficients, got {a.shape[0]}")
    thetas = np.array([el.theta for el in elements])
    return downwash_matrix(thetas, geom.semispan, mode) @ a


@dataclass(frozen=True)
class AeroStatic:
    """Geometry-only precomputation shared by every assembly of one wing."""

    thetas: np.ndarray
    chords: np.ndarray
    widths: np.ndarray
    A: np.ndarray
    A_inv: np.ndarray
    P: np.ndarray
    cond_A: float


def aero_static(elements: list[BladeElement], semispan: float,
                downwash_mode: str = "prandtl") -> AeroStatic:
    """Precompute the Fourier and downwash matrices for a fixed wing."""
    thetas = np.array([el.theta for el in elements])
    if len(np.unique(thetas)) != thetas.shape[0]:
        raise RejectedConfiguration("theta stations must be distinct")
    A = fourier_matrix(thetas)
    cond = float(np.linalg.cond(A))
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise RejectedConfiguration(f"Fourier matrix ill-conditioned (cond={cond:.3e})")
    return AeroStatic(
        thetas=thetas,
        chords=np.array([el.chord for el in elements]),
        widths=np.array([el.width for el in elements]),
        A=A,
        A_inv=np.linalg.inv(A),
        P=downwash_matrix(thetas, semispan, downwash_mode),
        cond_A=cond,
    )


@dataclass(frozen=True)
class AeroState:
    """Circulation Fourier coefficients a (n,) and deficiency states Z (n, 2)."""

    a: np.ndarray
    Z: np.ndarray

    @classmethod
    def zero(cls, n: int) -> "AeroState":
        return cls(a=np.zeros(n), Z=np.zeros((n, 2)))

    def ravel(self) -> np.ndarray:
        return np.concatenate([self.a, self.Z.ravel()])

    @classmethod
    def from_ravel(cls, xi: np.ndarray, n: int) -> "AeroState":
        return cls(a=xi[:n].copy(), Z=xi[n:].reshape(n, 2).copy())


@dataclass(frozen=True)
class AeroSystem:
    """Assembled state-space for one instant's element speeds.

    A_xi / B_xi march xi = [a; z11, z21, z12, z22, ...]; C_xi = [0 | C] and
    D_xi = phi0 I produce the lagged wash beta from (xi, y').  lam holds the
    per-element deficiency rates 2 eps_k U_i / c_i and mu the circulation
    relaxation rates 2 U_i / c_i.
    """

    static: AeroStatic
    params: WagnerParams
    U: np.ndarray
    lam: np.ndarray      # (n, 2)
    mu: np.ndarray       # (n,)
    A_xi: np.ndarray     # (3n, 3n)
    B_xi: np.ndarray     # (3n, n)
    C_xi: np.ndarray     # (n, 3n)
    D_xi: np.ndarray     # (n, n)

    @property
    def n(self) -> int:
        return self.static.thetas.shape[0]

    @property
    def cond_A(self) -> float:
        return self.static.cond_A

    @property
    def max_rate(self) -> float:
        return float(max(self.mu.max(), self.lam.max()))


def assemble_aero(elements: list[BladeElement], U: np.ndarray,
                  params: WagnerParams = WagnerParams(), *,
                  semispan: float | None = None,
                  downwash_mode: str = "prandtl",
                  static: AeroStatic | None = None) -> AeroSystem:
    """Stack the per-element blocks into the full aerodynamic state-space.

    Per element: B_i = mu_i A_i, C_i = [psi1 lam1, psi2 lam2],
    D_i = diag(-lam1, -lam2), E_i = [1, 1]^T.  The downwash coupling
    y' = y1 + P a is folded into the assembled matrices so the system is
    linear in (xi, y1):

        A_xi = [[A^-1 mu (pi phi0 c P - A),  A^-1 mu pi c C],
                [E P,                        D]]
        B_xi = [[A^-1 mu pi phi0 c], [E]]
    """
    U = np.asarray(U, dtype=float)
    n = len(elements)
    if U.shape[0] != n:
        raise ValueError("one speed per element required")
    if np.any(U < U_MIN):
        bad = int(np.argmin(U))
        raise RejectedConfiguration(
            f"element {bad} relative speed {U[bad]:.4f} m/s below floor {U_MIN}")
    if static is None:
        from .morphology import semispan as _semispan
        span = semispan if semispan is not None else _semispan(elements)
        static = aero_static(elements, span, downwash_mode)

    c = static.chords
    mu = 2.0 * U / c
    lam = np.column_stack([2.0 * e * U / c for e in params.eps])
    phi0 = params.phi0

    # Block-structured C (n x 2n), D (2n x 2n), E (2n x n).
    C_blk = np.zeros((n, 2 * n))
    E_blk = np.zeros((2 * n, n))
    d_diag = np.empty(2 * n)
    for i in range(n):
        C_blk[i, 2 * i] = params.psi[0] * lam[i, 0]
        C_blk[i, 2 * i + 1] = params.psi[1] * lam[i, 1]
        E_blk[2 * i, i] = 1.0
        E_blk[2 * i + 1, i] = 1.0
        d_diag[2 * i] = -lam[i, 0]
        d_diag[2 * i + 1] = -lam[i, 1]
    D_blk = np.diag(d_diag)

    gain = math.pi * mu * c                       # mu_i pi c_i, per element
    top_in = gain[:, None] * (phi0 * static.P) - mu[:, None] * static.A
    top_z = gain[:, None] * C_blk
    top_b = np.diag(gain * phi0)
    # A is factored once per wing (aero_static); one product covers every
    # A^-1 block of the assembly.
    solved = static.A_inv @ np.hstack([top_in, top_z, top_b])

    A_xi = np.zeros((3 * n, 3 * n))
    A_xi[:n, :n] = solved[:, :n]
    A_xi[:n, n:] = solved[:, n:3 * n]
    A_xi[n:, :n] = E_blk @ static.P
    A_xi[n:, n:] = D_blk

    B_xi = np.zeros((3 * n, n))
    B_xi[:n, :] = solved[:, 3 * n:]
    B_xi[n:, :] = E_blk

    C_xi = np.hstack([np.zeros((n, n)), C_blk])
    D_xi = phi0 * np.eye(n)

    return AeroSystem(static=static, params=params, U=U, lam=lam, mu=mu,
                      A_xi=A_xi, B_xi=B_xi, C_xi=C_xi, D_xi=D_xi)


def step_aero(sys: AeroSystem, xi: AeroState, y1, dt: float) -> AeroState:
    """Advance the aerodynamic states one RK4 step.

    y1 may be an (n,) wash vector held over the step or a callable
    tau -> (n,) evaluated at the stage offsets {0, dt/2, dt}, which keeps
    the march fourth-order for smooth forcing.  The induced wash enters
    through A_xi inside every stage.
    """
    if dt <= 0.0:
        raise ValueError("dt must be > 0")
    if sys.max_rate * dt > RK4_RATE_LIMIT:
        raise RejectedConfiguration(
            f"dt={dt:.4g} too large for fastest aero rate {sys.max_rate:.4g} 1/s")
    if callable(y1):
        y_0 = np.asarray(y1(0.0), dtype=float)
        y_h = np.asarray(y1(0.5 * dt), dtype=float)
        y_1 = np.asarray(y1(dt), dtype=float)
    else:
        y_0 = y_h = y_1 = np.asarray(y1, dtype=float)

    x = xi.ravel()
    k1 = sys.A_xi @ x + sys.B_xi @ y_0
    k2 = sys.A_xi @ (x + 0.5 * dt * k1) + sys.B_xi @ y_h
    k3 = sys.A_xi @ (x + 0.5 * dt * k2) + sys.B_xi @ y_h
    k4 = sys.A_xi @ (x + dt * k3) + sys.B_xi @ y_1
    x_new = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    if not np.all(np.isfinite(x_new)):
        n = sys.n
        bad = int(np.flatnonzero(~np.isfinite(x_new))[0])
        if bad < n:
            what = f"Fourier coefficient a_{bad + 1}"
        else:
            what = f"deficiency state z_{(bad - n) % 2 + 1} of element {(bad - n) // 2}"
        raise AeroBlowup(f"aerodynamic state blew up: {what} is non-finite")
    return AeroState.from_ravel(x_new, sys.n)


def lagged_wash(sys: AeroSystem, xi: AeroState, y1: np.ndarray) -> np.ndarray:
    """beta_i = phi0 y'_i + C_i Z_i, the Wagner-lagged effective wash."""
    y_prime = np.asarray(y1, dtype=float) + sys.static.P @ xi.a
    return sys.params.phi0 * y_prime + sys.C_xi[:, sys.n:] @ xi.Z.ravel()


@dataclass(frozen=True)
class ForceOutput:
    """Kutta-Joukowski force output y2 and the lagged wash beta."""

    per_element: np.ndarray   # (n, 3) N
    total: np.ndarray         # (3,) N
    total_left: np.ndarray
    total_right: np.ndarray
    beta: np.ndarray          # (n,) m/s
    gamma: np.ndarray         # (n,) m^2/s


def force_output(sys: AeroSystem, xi: AeroState, y1: np.ndarray,
                 elements: list[BladeElement], kin: ElementKinematics,
                 freestream: np.ndarray, air_density: float) -> ForceOutput:
    """Per-element aerodynamic forces F_i = rho Gamma_i ds_i (that x v_rel).

    The force is normal to the local relative flow with magnitude
    rho U_i Gamma_i ds_i; positive wash yields force along +nhat on both
    wings (that is oriented with increasing s across the span).
    """
    beta = lagged_wash(sys, xi, np.asarray(y1, dtype=float))
    gamma = sys.static.A @ xi.a
    v_rel = np.asarray(freestream, dtype=float) - kin.v
    f = air_density * (gamma * sys.static.widths)[:, None] * np.cross(kin.that, v_rel)
    left = np.array([el.s < 0 for el in elements])
    return ForceOutput(
        per_element=f,
        total=f.sum(axis=0),
        total_left=f[left].sum(axis=0),
        total_right=f[~left].sum(axis=0),
        beta=beta,
        gamma=gamma,
    )
