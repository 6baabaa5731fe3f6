"""Morphing two-segment wing: geometry, blade elements, gait waveforms, kinematics.

The wing is a left/right pair of two-segment (proximal + distal) panels.
Each side carries a flap hinge at the root (about the body longitudinal
axis) and a fold hinge at the proximal/distal boundary (about a streamwise
axis), with distal pitch slaved to the fold angle.  Blade elements are
spanwise strips indexed left tip to right tip with a signed station s and
the lifting-line angle theta = arccos(s / l), l being the semi-span.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# Relative-speed floor below which an element's unsteady time scaling is
# considered meaningless (the model divides by the local speed).
U_MIN = 0.05

GRAVITY = np.array([0.0, 0.0, -9.81])


class RejectedConfiguration(ValueError):
    """A geometry/flow configuration the model refuses to evaluate."""


def _rot_x(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def _rot_x_prime(a: float) -> np.ndarray:
    # d/da of _rot_x
    c, s = math.cos(a), math.sin(a)
    return np.array([[0.0, 0.0, 0.0], [0.0, -s, -c], [0.0, c, -s]])


def _rot_y(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def _rot_y_prime(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[-s, 0.0, c], [0.0, 0.0, 0.0], [-c, 0.0, -s]])


@dataclass(frozen=True)
class WingGeometry:
    """Planform of one two-segment wing pair.

    Spans are per side; the tip-to-tip span is 2 * (semispan_proximal +
    semispan_distal) and is held fixed across design candidates.  Chord
    varies linearly in |s| from chord_proximal at the root to chord_distal
    at the tip; the distal quarter-chord line sweeps back by sweep_distal.
    """

    semispan_proximal: float
    semispan_distal: float
    chord_proximal: float
    chord_distal: float
    sweep_distal: float = 0.0
    n_elements_per_side: int = 8

    def __post_init__(self):
        for name in ("semispan_proximal", "semispan_distal",
                     "chord_proximal", "chord_distal"):
            if not getattr(self, name) > 0.0:
                raise RejectedConfiguration(f"{name} must be > 0")
        if self.n_elements_per_side < 2:
            raise RejectedConfiguration("n_elements_per_side must be >= 2")
        if not abs(self.sweep_distal) < math.pi / 2:
            raise RejectedConfiguration("sweep_distal must satisfy |sweep| < pi/2")

    @property
    def semispan(self) -> float:
        return self.semispan_proximal + self.semispan_distal

    def chord_at(self, s: float) -> float:
        """Chord at signed station s, linear in |s| from root to tip."""
        frac = min(abs(s) / self.semispan, 1.0)
        return self.chord_proximal + (self.chord_distal - self.chord_proximal) * frac

    def sweep_offset_at(self, s: float) -> float:
        """Streamwise aft shift of the quarter-chord line at station s."""
        reach = abs(s) - self.semispan_proximal
        if reach <= 0.0:
            return 0.0
        return reach * math.tan(self.sweep_distal)


@dataclass(frozen=True)
class BladeElement:
    """One spanwise strip of the wing.

    Reference points are in the wing frame (x forward, y spanwise toward
    the right tip, z up) with the wing flat and unflapped.  s_inner/s_outer
    are the strip's edge stations; quarter_chord_ref and the trailing-edge
    references carry the planform (chord, sweep) already applied.
    """

    index: int
    s: float
    theta: float
    chord: float
    width: float
    quarter_chord_ref: np.ndarray
    sweep_offset: float
    s_inner: float
    s_outer: float
    hinge_s: float          # |station| of the fold hinge (segment boundary)
    te_inner_ref: np.ndarray
    te_outer_ref: np.ndarray

    @property
    def distal(self) -> bool:
        return abs(self.s) > self.hinge_s


def build_wing(geom: WingGeometry) -> list[BladeElement]:
    """Discretize the wing pair into 2 n blade elements, left tip to right tip.

    Stations are cosine clustered: s_i = -l cos(phi_i) with
    phi_i = (i + 1/2) pi / (2 n), so theta_i = pi - phi_i is a uniform grid
    on (0, pi).  Uniform theta spacing keeps the circulation Fourier matrix
    well conditioned.  Strip edges sit at s = -l cos(j pi / (2 n)) and tile
    [-l, l] exactly.
    """
    n_side = geom.n_elements_per_side
    n_total = 2 * n_side
    l = geom.semispan

    phi = (np.arange(n_total) + 0.5) * math.pi / n_total
    phi_edges = np.arange(n_total + 1) * math.pi / n_total
    stations = -l * np.cos(phi)
    edges = -l * np.cos(phi_edges)
    thetas = np.arccos(np.clip(stations / l, -1.0, 1.0))

    if len(np.unique(thetas)) != n_total:
        raise RejectedConfiguration("degenerate clustering: theta stations collide")

    elements = []
    for i in range(n_total):
        s = float(stations[i])
        c = geom.chord_at(s)
        off = geom.sweep_offset_at(s)
        qc = np.array([-off, s, 0.0])
        te_pts = []
        for se in (float(edges[i]), float(edges[i + 1])):
            ce = geom.chord_at(se)
            te_pts.append(np.array([-geom.sweep_offset_at(se) - 0.75 * ce, se, 0.0]))
        elements.append(BladeElement(
            index=i,
            s=s,
            theta=float(thetas[i]),
            chord=c,
            width=float(edges[i + 1] - edges[i]),
            quarter_chord_ref=qc,
            sweep_offset=off,
            s_inner=float(edges[i]),
            s_outer=float(edges[i + 1]),
            hinge_s=geom.semispan_proximal,
            te_inner_ref=te_pts[0],
            te_outer_ref=te_pts[1],
        ))
    return elements


def semispan(elements: list[BladeElement]) -> float:
    """Semi-span l recovered from the element edge stations."""
    return elements[-1].s_outer


@dataclass(frozen=True)
class GaitParams:
    """Joint-trajectory parameterization of the flapping gait.

    one_axis drives the flap hinge only.  three_axes adds distal folding
    through a half-rectified sine (active only while the wing strokes up)
    and a distal pitch slaved to the fold angle.
    """

    mode: str = "one_axis"
    frequency: float = 2.0
    flap_amplitude: float = 0.6
    flap_offset: float = 0.0
    fold_amplitude: float = 0.0
    fold_phase: float = math.pi / 2
    pitch_gain: float = 0.0

    def __post_init__(self):
        if self.mode not in ("one_axis", "three_axes"):
            raise RejectedConfiguration(f"unknown gait mode {self.mode!r}")
        if not self.frequency > 0.0:
            raise RejectedConfiguration("frequency must be > 0")
        if self.flap_amplitude < 0.0 or self.fold_amplitude < 0.0:
            raise RejectedConfiguration("amplitudes must be >= 0")

    @property
    def period(self) -> float:
        return 1.0 / self.frequency


@dataclass(frozen=True)
class ShapeState:
    """Joint angles q_a = [flap_L, fold_L, flap_R, fold_R] and their rates."""

    q_a: np.ndarray
    qdot_a: np.ndarray


@dataclass(frozen=True)
class BodyState:
    """Reduced body state: position, Euler angles, and their rates.

    Attitude is frozen (q_E = 0, omega_b = 0); the body either translates
    at constant velocity (prescribed mode) or as a point mass.
    """

    p_b: np.ndarray = field(default_factory=lambda: np.zeros(3))
    q_E: np.ndarray = field(default_factory=lambda: np.zeros(3))
    v_b: np.ndarray = field(default_factory=lambda: np.zeros(3))
    omega_b: np.ndarray = field(default_factory=lambda: np.zeros(3))


@dataclass(frozen=True)
class ElementKinematics:
    """World-frame kinematics of every blade element at one instant.

    Arrays are (n, 3) except te_nodes, which holds the n + 1 trailing-edge
    boundary nodes used for wake shedding.  that points toward increasing
    s on both sides so the bound vortex orientation is continuous across
    the span.
    """

    p: np.ndarray        # quarter-chord points
    p34: np.ndarray      # three-quarter-chord collocation points
    nhat: np.ndarray     # unit chord-normals
    that: np.ndarray     # unit spanwise tangents (increasing s)
    v: np.ndarray        # collocation-point velocities
    te_nodes: np.ndarray


def eval_gait(gait: GaitParams, t: float) -> ShapeState:
    """Evaluate joint angles and exact analytic joint rates at time t.

    flap(t) = offset + amplitude sin(2 pi f t).  In three_axes mode
    fold(t) = fold_amplitude max(0, sin(2 pi f t + fold_phase)), which with
    fold_phase = pi/2 confines folding to the upstroke.
    """
    w = 2.0 * math.pi * gait.frequency
    flap = gait.flap_offset + gait.flap_amplitude * math.sin(w * t)
    flapdot = gait.flap_amplitude * w * math.cos(w * t)
    if gait.mode == "three_axes":
        u = math.sin(w * t + gait.fold_phase)
        if u > 0.0:
            fold = gait.fold_amplitude * u
            folddot = gait.fold_amplitude * w * math.cos(w * t + gait.fold_phase)
        else:
            fold = 0.0
            folddot = 0.0
    else:
        fold = 0.0
        folddot = 0.0
    return ShapeState(
        q_a=np.array([flap, fold, flap, fold]),
        qdot_a=np.array([flapdot, folddot, flapdot, folddot]),
    )


def element_kinematics(elements: list[BladeElement], shape: ShapeState,
                       body: BodyState, pitch_gain: float = 0.0) -> ElementKinematics:
    """Forward kinematics of the two-segment chain, per side.

    Right side (s > 0) flaps by +flap about the body x-axis; the left side
    mirrors with -flap.  The distal segment pitches by pitch_gain * fold
    about the spanwise axis through the hinge point, then folds by
    +/- fold about the streamwise hinge axis.  Velocities are exact
    rigid-body values from the analytic rotation-matrix derivatives.
    """
    n = len(elements)
    flap_l, fold_l, flap_r, fold_r = (float(x) for x in shape.q_a)
    flapdot_l, folddot_l, flapdot_r, folddot_r = (float(x) for x in shape.qdot_a)
    hinge_s = elements[0].hinge_s

    p = np.empty((n, 3))
    p34 = np.empty((n, 3))
    nhat = np.empty((n, 3))
    that = np.empty((n, 3))
    v = np.empty((n, 3))
    te_nodes = np.empty((n + 1, 3))

    side_cache = {}

    def side_frames(sign: float, flap: float, flapdot: float,
                    fold: float, folddot: float):
        key = sign
        if key in side_cache:
            return side_cache[key]
        pitch = pitch_gain * fold
        pitchdot = pitch_gain * folddot
        r_f = _rot_x(sign * flap)
        r_f_dot = sign * flapdot * _rot_x_prime(sign * flap)
        r_d = _rot_x(sign * fold) @ _rot_y(pitch)
        r_d_dot = (sign * folddot * _rot_x_prime(sign * fold) @ _rot_y(pitch)
                   + pitchdot * _rot_x(sign * fold) @ _rot_y_prime(pitch))
        hinge = np.array([0.0, sign * hinge_s, 0.0])
        frames = (r_f, r_f_dot, r_d, r_d_dot, hinge)
        side_cache[key] = frames
        return frames

    def place(ref: np.ndarray, sign: float, distal: bool):
        if sign > 0:
            r_f, r_f_dot, r_d, r_d_dot, hinge = side_frames(
                1.0, flap_r, flapdot_r, fold_r, folddot_r)
        else:
            r_f, r_f_dot, r_d, r_d_dot, hinge = side_frames(
                -1.0, flap_l, flapdot_l, fold_l, folddot_l)
        if distal:
            local = hinge + r_d @ (ref - hinge)
            local_dot = r_d_dot @ (ref - hinge)
            pos = body.p_b + r_f @ local
            vel = body.v_b + r_f_dot @ local + r_f @ local_dot
        else:
            pos = body.p_b + r_f @ ref
            vel = body.v_b + r_f_dot @ ref
        return pos, vel, r_f, (r_d if distal else None)

    for i, el in enumerate(elements):
        sign = 1.0 if el.s > 0 else -1.0
        pos, _, r_f, r_d = place(el.quarter_chord_ref, sign, el.distal)
        ref34 = el.quarter_chord_ref + np.array([-0.5 * el.chord, 0.0, 0.0])
        pos34, vel34, _, _ = place(ref34, sign, el.distal)
        r_total = r_f if r_d is None else r_f @ r_d
        p[i] = pos
        p34[i] = pos34
        v[i] = vel34
        nhat[i] = r_total[:, 2]
        that[i] = r_total[:, 1]

    # Trailing-edge boundary nodes; the node on the hinge itself follows
    # the proximal segment so both sides of the junction agree.
    for j in range(n + 1):
        el = elements[min(j, n - 1)]
        ref = el.te_inner_ref if j < n else el.te_outer_ref
        se = el.s_inner if j < n else el.s_outer
        sign = 1.0 if se > 0 else (-1.0 if se < 0 else 1.0)
        distal = abs(se) > hinge_s + 1e-12
        te_nodes[j], _, _, _ = place(ref, sign, distal)

    return ElementKinematics(p=p, p34=p34, nhat=nhat, that=that, v=v,
                             te_nodes=te_nodes)


def motion_wash(kin: ElementKinematics, freestream: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Normal wash y1 and sectional relative speed U at the collocation points.

    v_rel = freestream - v is the air velocity seen by the element;
    y1 = v_rel . nhat and U is the magnitude of v_rel projected into the
    chord plane (spanwise flow removed).  Elements with U below U_MIN are
    in a regime the indicial time scaling cannot represent; callers should
    treat them as flagged.
    """
    v_rel = np.asarray(freestream, dtype=float) - kin.v
    y1 = np.einsum("ij,ij->i", v_rel, kin.nhat)
    span_comp = np.einsum("ij,ij->i", v_rel, kin.that)
    in_plane = v_rel - span_comp[:, None] * kin.that
    u = np.linalg.norm(in_plane, axis=1)
    return y1, u


def step_body(body: BodyState, total_force: np.ndarray, mass: float,
              dt: float, mode: str = "prescribed") -> BodyState:
    """Advance the reduced body one step.

    prescribed: integrate the (constant) velocity only.  point_mass:
    semi-implicit Euler under total_force plus gravity; attitude stays
    frozen in both modes.
    """
    if dt <= 0.0:
        raise ValueError("dt must be > 0")
    if mode == "prescribed":
        return BodyState(p_b=body.p_b + body.v_b * dt, q_E=body.q_E,
                         v_b=body.v_b, omega_b=body.omega_b)
    if mode == "point_mass":
        if not mass > 0.0:
            raise ValueError("mass must be > 0 in point_mass mode")
        v_new = body.v_b + (np.asarray(total_force, dtype=float) / mass + GRAVITY) * dt
        return BodyState(p_b=body.p_b + v_new * dt, q_E=body.q_E,
                         v_b=v_new, omega_b=body.omega_b)
    raise ValueError(f"unknown body mode {mode!r}")
