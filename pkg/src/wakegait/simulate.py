"""End-to-end wake-structure generation: the Biot-Savart map.

One call marches gait -> element kinematics -> wash -> indicial aero ->
force -> shedding -> wake transport -> body update over n_cycles flapping
cycles in the world frame (still air, body translating), then extracts the
final post-warmup cycle's wake mesh.  The map is deterministic: identical
(candidate, config) pairs give byte-identical meshes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import aero, morphology as morph, wake
from .aero import AeroBlowup, AeroState, WagnerParams
from .config import SimConfig, apply_design_values
from .morphology import BodyState, RejectedConfiguration
from .wake import WakeLattice, WakeStructure

WIND = np.zeros(3)   # still air; the body supplies the relative flow


@dataclass(frozen=True)
class Infeasible:
    """Typed result for candidates the simulator refuses or cannot march."""

    reason: str


@dataclass(frozen=True)
class RunResult:
    """Everything a finished run exposes for export and analysis."""

    config: SimConfig
    mesh: WakeStructure          # final post-warmup cycle
    lattice: WakeLattice         # full shed history
    times: np.ndarray            # (steps + 1,)
    gamma_history: np.ndarray    # (steps + 1, n)
    force_history: np.ndarray    # (steps + 1, 3) total aero force
    body_history: np.ndarray     # (steps + 1, 3) body position
    stations: np.ndarray         # (n,) element stations s_i
    cond_A: float
    stalled_steps: int           # steps with any element below the U floor
    final_body: BodyState

    @property
    def final_cycle_start(self) -> float:
        return (self.config.n_cycles - 1) * self.config.gait.period


def run_simulation(config: SimConfig) -> RunResult:
    """March the full model; raises on rejected configs or blow-up."""
    geom = config.wing
    gait = config.gait
    elements = morph.build_wing(geom)
    static = aero.aero_static(elements, geom.semispan, config.downwash_mode)
    params = WagnerParams()

    dt = config.dt
    steps = config.total_steps
    period = gait.period
    keep_window = config.n_keep_cycles * period

    body = BodyState(v_b=np.array([config.forward_speed, 0.0, 0.0]))
    xi = AeroState.zero(len(elements))

    def kin_at(t: float, body_state: BodyState):
        shape = morph.eval_gait(gait, t)
        return morph.element_kinematics(elements, shape, body_state,
                                        pitch_gain=gait.pitch_gain)

    kin = kin_at(0.0, body)
    lattice = wake.seed_lattice(kin.te_nodes, 0.0, config.resolved_core_radius())

    n = len(elements)
    gamma_hist = np.zeros((steps + 1, n))
    force_hist = np.zeros((steps + 1, 3))
    body_hist = np.zeros((steps + 1, 3))
    times = np.arange(steps + 1) * dt
    stalled = 0

    y1_now, u_now = morph.motion_wash(kin, WIND)
    for k in range(steps):
        t = k * dt
        if np.any(u_now < morph.U_MIN):
            stalled += 1
        sys = aero.assemble_aero(elements, u_now, params, static=static)

        out = aero.force_output(sys, xi, y1_now, elements, kin, WIND,
                                config.air_density)
        gamma_hist[k] = out.gamma
        force_hist[k] = out.total
        body_hist[k] = body.p_b

        # Stage-exact wash: the body translates linearly within the step.
        def y1_of(tau, _t=t, _body=body):
            stage_body = BodyState(p_b=_body.p_b + _body.v_b * tau,
                                   q_E=_body.q_E, v_b=_body.v_b,
                                   omega_b=_body.omega_b)
            y1_stage, _ = morph.motion_wash(kin_at(_t + tau, stage_body), WIND)
            return y1_stage

        xi = aero.step_aero(sys, xi, y1_of, dt)
        body = morph.step_body(body, out.total, config.body_mass, dt,
                               config.body_mode)
        lattice = wake.advect(lattice, dt, WIND, config.wake_mode,
                              t_min=t - keep_window)

        kin = kin_at(t + dt, body)
        y1_now, u_now = morph.motion_wash(kin, WIND)
        gamma_new = aero.circulation(xi.a, elements)
        lattice = wake.shed(lattice, kin.te_nodes, gamma_new, t + dt)

    sys = aero.assemble_aero(elements, u_now, params, static=static)
    out = aero.force_output(sys, xi, y1_now, elements, kin, WIND,
                            config.air_density)
    gamma_hist[steps] = out.gamma
    force_hist[steps] = out.total
    body_hist[steps] = body.p_b

    mesh = wake.wake_mesh(lattice, period, last_rows=config.dt_per_cycle)
    return RunResult(
        config=config,
        mesh=mesh,
        lattice=lattice,
        times=times,
        gamma_history=gamma_hist,
        force_history=force_hist,
        body_history=body_hist,
        stations=np.array([el.s for el in elements]),
        cond_A=static.cond_A,
        stalled_steps=stalled,
        final_body=body,
    )


def biot_savart_map(candidate, config: SimConfig):
    """Wake structure of a morphology/gait candidate: W = B(x_z, xi, xi_dot).

    candidate is None (run the config as-is) or a dict of design-field
    values.  Rejected or blown-up candidates return an Infeasible record
    instead of raising.
    """
    try:
        cfg = config if candidate is None else apply_design_values(config, dict(candidate))
        return run_simulation(cfg).mesh
    except (RejectedConfiguration, AeroBlowup) as exc:
        return Infeasible(reason=str(exc))


def auto_grid(config: SimConfig, result: RunResult) -> wake.FieldGrid:
    """Resolve the config's grid spec against a finished run.

    Auto mode spans a 1.0 x 0.6 x 0.6 m box holding roughly one cycle of
    wake upstream of the body's final position.
    """
    spec = config.grid
    dims = spec.dims
    if spec.origin is not None and spec.spacing is not None:
        origin = np.array(spec.origin, dtype=float)
        spacing = np.array(spec.spacing, dtype=float)
    else:
        x_end = float(result.final_body.p_b[0])
        extent = np.array([1.0, 0.6, 0.6])
        origin = np.array([x_end - 0.9, -0.3, -0.3])
        if spec.origin is not None:
            origin = np.array(spec.origin, dtype=float)
        spacing = extent / (np.array(dims, dtype=float) - 1.0)
        if spec.spacing is not None:
            spacing = np.array(spec.spacing, dtype=float)
    return wake.FieldGrid(origin=origin, spacing=spacing, dims=tuple(dims),
                          iso_thresholds=spec.iso_thresholds)


def stroke_windows(config: SimConfig) -> dict[str, list[tuple[float, float]]]:
    """Shed-time windows of the final cycle split by stroke direction.

    Upstroke is where the flap angle increases (first and last quarter of a
    sine cycle), downstroke where it decreases.
    """
    period = config.gait.period
    t0 = (config.n_cycles - 1) * period
    q = period / 4.0
    return {
        "upstroke": [(t0, t0 + q), (t0 + 3 * q, t0 + 4 * q)],
        "downstroke": [(t0 + q, t0 + 3 * q)],
    }


def stroke_vorticity_metrics(result: RunResult, grid: wake.FieldGrid) -> dict:
    """Integrated +/- streamwise vorticity shed during each stroke phase.

    For each stroke window, the grid samples only the rings shed in that
    window; the metric integrates max(omega_x, 0) and min(omega_x, 0) over
    the interior cells.  This is the one-axis vs three-axes comparison
    number (large upstroke positive vorticity = strong upstroke vortices).
    """
    cell = float(np.prod(grid.spacing))
    metrics = {}
    for name, windows in stroke_windows(result.config).items():
        pos = 0.0
        neg = 0.0
        for (t_lo, t_hi) in windows:
            # Half-open window so adjacent windows never share a shed row.
            f = wake.vorticity_field(result.lattice, grid,
                                     t_min=t_lo + 1e-12, t_max=t_hi)
            interior = f.omega_x[1:-1, 1:-1, 1:-1]
            pos += float(np.maximum(interior, 0.0).sum() * cell)
            neg += float(np.minimum(interior, 0.0).sum() * cell)
        metrics[f"{name}_positive_omega_x"] = pos
        metrics[f"{name}_negative_omega_x"] = neg
    return metrics
