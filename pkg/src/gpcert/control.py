"""Feedback-linearizing tracking control with a GP model and its certified ultimate bound.

Plants have the structure (per degree of freedom j)

    d/dt pos_j = vel_j,     d/dt vel_j = f_j(x) + u_j,

with the state ordered ``[pos_1, vel_1, pos_2, vel_2, ...]``.  ``f`` is
unknown and replaced in the controller by the GP posterior mean.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .bounds import ErrorCertificate
from .errors import DivergenceError, DomainError

# -- types -----------------------------------------------------------------


@dataclass(frozen=True)
class ControllerGains:
    k_c: float
    lam: float

    def __post_init__(self):
        if not (self.k_c > 0 and self.lam > 0):
            raise ValueError(f"gains must be strictly positive, got k_c={self.k_c}, lambda={self.lam}")

    @property
    def radius_scale(self) -> float:
        """k_c * sqrt(lambda^2 + 1), the denominator of the ultimate bound."""
        return self.k_c * math.sqrt(self.lam**2 + 1.0)


@dataclass(frozen=True)
class ReferenceTrajectory:
    position: Callable[[float], np.ndarray]
    velocity: Callable[[float], np.ndarray]
    acceleration: Callable[[float], np.ndarray]

    def __call__(self, t):
        return (
            np.atleast_1d(self.position(t)),
            np.atleast_1d(self.velocity(t)),
            np.atleast_1d(self.acceleration(t)),
        )

    def max_derivative_mismatch(self, times, step=1e-5) -> float:
        """Largest central-difference mismatch of velocity and acceleration."""
        worst = 0.0
        for t in times:
            dp = (np.atleast_1d(self.position(t + step)) - np.atleast_1d(self.position(t - step))) / (2 * step)
            dv = (np.atleast_1d(self.velocity(t + step)) - np.atleast_1d(self.velocity(t - step))) / (2 * step)
            worst = max(
                worst,
                float(np.max(np.abs(dp - np.atleast_1d(self.velocity(t))))),
                float(np.max(np.abs(dv - np.atleast_1d(self.acceleration(t))))),
            )
        return worst


def sinusoid(amplitude, frequency=1.0, phase=0.0, offset=0.0) -> ReferenceTrajectory:
    """x_d(t) = offset + amplitude * sin(frequency * t + phase), per degree of freedom."""
    a = np.atleast_1d(np.asarray(amplitude, dtype=float))
    w = np.broadcast_to(np.asarray(frequency, dtype=float), a.shape).copy()
    p = np.broadcast_to(np.asarray(phase, dtype=float), a.shape).copy()
    c = np.broadcast_to(np.asarray(offset, dtype=float), a.shape).copy()
    return ReferenceTrajectory(
        position=lambda t: c + a * np.sin(w * t + p),
        velocity=lambda t: a * w * np.cos(w * t + p),
        acceleration=lambda t: -a * w**2 * np.sin(w * t + p),
    )


@dataclass(frozen=True)
class Plant:
    """Control-affine double-integrator chain with unknown drift ``unknown_part``."""

    name: str
    n_dof: int
    unknown_part: Callable[[np.ndarray], np.ndarray]
    dynamics_fn: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None

    @property
    def state_dimension(self) -> int:
        return 2 * self.n_dof

    def dynamics(self, x, u) -> np.ndarray:
        if self.dynamics_fn is not None:
            return self.dynamics_fn(x, u)
        dx = np.empty_like(x, dtype=float)
        dx[0::2] = x[1::2]
        dx[1::2] = np.atleast_1d(self.unknown_part(x)) + u
        return dx


def synthetic_drift(x) -> np.ndarray:
    """f(x) = 1 - sin(x_1) + 1 / (1 + exp(-x_2)); accepts a point or rows of points."""
    x = np.asarray(x, dtype=float)
    return 1.0 - np.sin(x[..., 0]) + 1.0 / (1.0 + np.exp(-x[..., 1]))


def synthetic_plant() -> Plant:
    return Plant("synthetic", 1, lambda x: np.array([synthetic_drift(x)]))


@dataclass(frozen=True)
class TwoLinkArm:
    """Planar two-link arm moving in the z1-z2 plane, gravity along -z2.

    Links have length ``l``, mass ``m``, centre of mass at ``r`` along the
    link and rotational inertia ``inertia`` about it.  Joint angles are
    relative (q2 measured from link 1).
    """

    gravity: float = 9.81
    l1: float = 1.0
    l2: float = 1.0
    m1: float = 1.0
    m2: float = 1.0
    r1: float = 0.5
    r2: float = 0.5
    inertia1: float = 1.0
    inertia2: float = 1.0

    @property
    def _abd(self):
        alpha = self.inertia1 + self.inertia2 + self.m1 * self.r1**2 + self.m2 * (self.l1**2 + self.r2**2)
        beta = self.m2 * self.l1 * self.r2
        delta = self.inertia2 + self.m2 * self.r2**2
        return alpha, beta, delta

    def mass_matrix(self, q) -> np.ndarray:
        alpha, beta, delta = self._abd
        c2 = math.cos(q[1])
        return np.array([[alpha + 2 * beta * c2, delta + beta * c2], [delta + beta * c2, delta]])

    def coriolis(self, q, qd) -> np.ndarray:
        _, beta, _ = self._abd
        s2 = math.sin(q[1])
        return np.array(
            [[-beta * s2 * qd[1], -beta * s2 * (qd[0] + qd[1])], [beta * s2 * qd[0], 0.0]]
        )

    def gravity_vector(self, q) -> np.ndarray:
        g = self.gravity
        c1, c12 = math.cos(q[0]), math.cos(q[0] + q[1])
        return np.array(
            [
                (self.m1 * self.r1 + self.m2 * self.l1) * g * c1 + self.m2 * self.r2 * g * c12,
                self.m2 * self.r2 * g * c12,
            ]
        )

    def potential(self, q) -> float:
        g = self.gravity
        return g * (
            self.m1 * self.r1 * math.sin(q[0])
            + self.m2 * (self.l1 * math.sin(q[0]) + self.r2 * math.sin(q[0] + q[1]))
        )

    def energy(self, x) -> float:
        q, qd = x[0::2], x[1::2]
        return 0.5 * qd @ self.mass_matrix(q) @ qd + self.potential(q)

    def drift(self, x) -> np.ndarray:
        """Joint acceleration without input: M(q)^-1 (-C(q, qd) qd - g(q))."""
        q, qd = x[0::2], x[1::2]
        return np.linalg.solve(self.mass_matrix(q), -self.coriolis(q, qd) @ qd - self.gravity_vector(q))

    def dynamics(self, x, u) -> np.ndarray:
        q, qd = x[0::2], x[1::2]
        M = self.mass_matrix(q)
        torque = M @ u
        qdd = np.linalg.solve(M, torque - self.coriolis(q, qd) @ qd - self.gravity_vector(q))
        dx = np.empty(4)
        dx[0::2] = qd
        dx[1::2] = qdd
        return dx

    def forward_kinematics(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        q1, q12 = q[..., 0], q[..., 0] + q[..., 1]
        return np.stack(
            [self.l1 * np.cos(q1) + self.l2 * np.cos(q12), self.l1 * np.sin(q1) + self.l2 * np.sin(q12)],
            axis=-1,
        )

    def task_space_radius(self, joint_radius) -> np.ndarray:
        """Bound on end-effector displacement when |dq_j| <= joint_radius[j].

        Link 1's tip moves at most l1 |dq1|, link 2 rotates by at most |dq1| + |dq2|.
        """
        rho = np.asarray(joint_radius, dtype=float)
        return self.l1 * rho[..., 0] + self.l2 * (rho[..., 0] + rho[..., 1])

    def plant(self) -> Plant:
        return Plant("two-link-arm", 2, self.drift, self.dynamics)


def manipulator_plant(gravity: float = 9.81) -> Plant:
    return TwoLinkArm(gravity=gravity).plant()


# -- control law -----------------------------------------------------------


def tracking_errors(x, ref_pos, ref_vel, gains: ControllerGains):
    """Position/velocity errors and the filtered state r = lambda e1 + e2 per degree of freedom."""
    x = np.asarray(x, dtype=float)
    e1 = x[..., 0::2] - ref_pos
    e2 = x[..., 1::2] - ref_vel
    return e1, e2, gains.lam * e1 + e2


def policy(x, mean_fn, reference_at_t, gains: ControllerGains) -> np.ndarray:
    """u = -model(x) + acc_d - k_c r - lambda e2."""
    pos, vel, acc = reference_at_t
    _, e2, r = tracking_errors(x, pos, vel, gains)
    return -np.atleast_1d(mean_fn(x)) + acc - gains.k_c * r - gains.lam * e2


@dataclass(frozen=True)
class GPModel:
    """Vector model x -> (mean_1(x), ..., mean_m(x)) from one posterior per output."""

    posteriors: tuple

    def __call__(self, x) -> np.ndarray:
        return np.array([p.mean_at(x) for p in self.posteriors])

    def mean(self, X) -> np.ndarray:
        return np.stack([p.mean(X) for p in self.posteriors], axis=-1)

    def std(self, X) -> np.ndarray:
        return np.stack([p.std(X) for p in self.posteriors], axis=-1)


def tracking_policy(mean_fn, reference: ReferenceTrajectory, gains: ControllerGains):
    """Closed-loop policy ``(t, x) -> u``."""
    return lambda t, x: policy(x, mean_fn, reference(t), gains)


def ultimate_bound_radius(certificate: ErrorCertificate, x, gains: ControllerGains) -> float:
    """Certified radius eta(x) / (k_c sqrt(lambda^2 + 1)) of the tracking-error ball at x."""
    x = np.asarray(x, dtype=float)
    if not certificate.domain.contains(x):
        raise DomainError(f"state {x.tolist()} lies outside the certified domain")
    return certificate.eta_at(x) / gains.radius_scale


def bound_radii(certificates: Sequence[ErrorCertificate], states, gains: ControllerGains) -> np.ndarray:
    """Per-output radius at each row of ``states``; ``inf`` where the state is uncertified."""
    states = np.atleast_2d(states)
    out = np.full((states.shape[0], len(certificates)), np.inf)
    inside = certificates[0].domain.contains(states)
    inside = np.atleast_1d(inside)
    if np.any(inside):
        for j, cert in enumerate(certificates):
            out[inside, j] = cert.eta(states[inside]) / gains.radius_scale
    return out


# -- simulation ------------------------------------------------------------


@dataclass
class SimulationTrace:
    times: np.ndarray
    states: np.ndarray
    controls: np.ndarray
    tracking_error: np.ndarray
    filtered_state: np.ndarray
    bound_radius: np.ndarray
    references: np.ndarray = field(repr=False, default=None)

    @property
    def n_dof(self) -> int:
        return self.filtered_state.shape[1]

    def error_norms(self) -> np.ndarray:
        """||(e1_j, e2_j)|| per degree of freedom, shape (T, n_dof)."""
        e = self.tracking_error
        return np.sqrt(e[:, 0::2] ** 2 + e[:, 1::2] ** 2)

    def total_error_norm(self) -> np.ndarray:
        return np.linalg.norm(self.tracking_error, axis=1)


def rk4_step(fun, t, x, dt):
    k1 = fun(t, x)
    k2 = fun(t + 0.5 * dt, x + 0.5 * dt * k1)
    k3 = fun(t + 0.5 * dt, x + 0.5 * dt * k2)
    k4 = fun(t + dt, x + dt * k3)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate(fun, t_span, dt, x0):
    """Classical fixed-step RK4.  Returns ``(times, states)``."""
    t0, t1 = map(float, t_span)
    if not (dt > 0 and math.isfinite(t1 - t0)) or t1 < t0:
        raise ValueError("need dt > 0 and a finite, ordered time span")
    n = int(round((t1 - t0) / dt))
    times = t0 + dt * np.arange(n + 1)
    states = np.empty((n + 1, np.size(x0)))
    x = np.asarray(x0, dtype=float).copy()
    states[0] = x
    for k in range(n):
        x = rk4_step(fun, times[k], x, dt)
        if not np.all(np.isfinite(x)):
            raise DivergenceError(f"state became non-finite at t={times[k + 1]:.6g}", float(times[k + 1]))
        states[k + 1] = x
    return times, states


def simulate(
    plant: Plant,
    control,
    reference: ReferenceTrajectory,
    t_span,
    dt,
    initial_state,
    gains: ControllerGains,
    certificates: Sequence[ErrorCertificate] | None = None,
) -> SimulationTrace:
    """Integrate the closed loop; the control is re-evaluated at every RK4 stage.

    ``control(t, x)`` returns the input.  With ``certificates`` (one per degree
    of freedom) the trace carries the certified radius at every sample.
    """
    x0 = np.asarray(initial_state, dtype=float)
    if x0.size != plant.state_dimension:
        raise ValueError(f"initial state must have {plant.state_dimension} entries")
    times, states = integrate(lambda t, x: plant.dynamics(x, control(t, x)), t_span, dt, x0)
    controls = np.array([control(t, x) for t, x in zip(times, states)]).reshape(len(times), plant.n_dof)
    refs = [reference(t) for t in times]
    pos = np.array([r[0] for r in refs]).reshape(len(times), plant.n_dof)
    vel = np.array([r[1] for r in refs]).reshape(len(times), plant.n_dof)
    e1, e2, r = tracking_errors(states, pos, vel, gains)
    err = np.empty_like(states)
    err[:, 0::2] = e1
    err[:, 1::2] = e2
    ref_states = np.empty_like(states)
    ref_states[:, 0::2] = pos
    ref_states[:, 1::2] = vel
    if certificates is not None:
        radius = bound_radii(certificates, states, gains)
    else:
        radius = np.full((len(times), plant.n_dof), np.nan)
    return SimulationTrace(times, states, controls, err, r, radius, ref_states)


@dataclass(frozen=True)
class Containment:
    entry_time: float | None
    entry_index: int | None
    violations_after_entry: int
    samples_after_entry: int

    @property
    def contained(self) -> bool:
        return self.entry_index is not None and self.violations_after_entry == 0


def containment(trace: SimulationTrace, dof: int | None = None, start_index: int | None = None) -> Containment:
    """Check that the error enters the certified ball and stays in it.

    With ``dof=None`` the full error vector is compared against the radius of
    the single degree of freedom (one-DoF plants).  The transient ends at the
    first sample inside the ball unless ``start_index`` is given.
    """
    if dof is None:
        if trace.n_dof != 1:
            raise ValueError("specify dof for multi-DoF traces")
        dof = 0
    err = trace.error_norms()[:, dof]
    rad = trace.bound_radius[:, dof]
    inside = np.isfinite(rad) & (err <= rad)
    if start_index is None:
        hits = np.flatnonzero(inside)
        if hits.size == 0:
            return Containment(None, None, 0, 0)
        start_index = int(hits[0])
    after = inside[start_index:]
    return Containment(
        float(trace.times[start_index]), start_index, int(np.count_nonzero(~after)), int(after.size)
    )


def lyapunov_check(trace: SimulationTrace, certificates, truth, mean_fn, gains: ControllerGains):
    """Evaluate dV/dt = r (f - model - k_c r) where |r| exceeds eta / k_c.

    Returns ``(n_checked, n_violations)`` over all samples and degrees of freedom.
    """
    f = np.atleast_2d(np.array([np.atleast_1d(truth(x)) for x in trace.states]))
    m = np.atleast_2d(np.array([np.atleast_1d(mean_fn(x)) for x in trace.states]))
    r = trace.filtered_state
    vdot = r * (f - m - gains.k_c * r)
    checked = violations = 0
    for j, cert in enumerate(certificates):
        inside = np.atleast_1d(cert.domain.contains(trace.states))
        eta = np.full(len(trace.times), np.inf)
        eta[inside] = cert.eta(trace.states[inside])
        outside_ball = np.abs(r[:, j]) > eta / gains.k_c
        checked += int(np.count_nonzero(outside_ball))
        violations += int(np.count_nonzero(outside_ball & (vdot[:, j] >= 0)))
    return checked, violations
