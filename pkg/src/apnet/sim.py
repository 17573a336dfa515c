"""Fixed-step RK4 integration of the network and per-sample analysis."""
from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import analysis
from .errors import ApnetError, DivergenceError, ScenarioError
from .graph import Graph, is_connected
from .network import (Gains, NetworkState, WeightConfig, derivative_agent_form,
                      derivative_compact_form, input_vector)
from .signals import InputSignal

log = logging.getLogger(__name__)

CHUNK_STEPS = 2000
BLOCK_STEPS = 256


@dataclass(frozen=True)
class Scenario:
    graph: Graph
    gains: Gains
    inputs: tuple[InputSignal, ...]
    weights: WeightConfig
    x0: Optional[np.ndarray] = None
    xi0: Optional[np.ndarray] = None
    duration: float = 10.0
    dt: float = 1e-3
    record_stride: int = 1
    name: str = ""

    def __post_init__(self):
        g = self.graph
        object.__setattr__(self, "inputs", tuple(self.inputs))
        if not is_connected(g):
            raise ScenarioError("graph", "communication graph is not connected")
        if not self.dt > 0:
            raise ScenarioError("sim.dt", "must be positive")
        if not self.duration >= self.dt:
            raise ScenarioError("sim.duration", "must be at least one step")
        if int(self.record_stride) != self.record_stride or self.record_stride < 1:
            raise ScenarioError("sim.record_stride", "must be a positive integer")
        if self.weights.n != g.n:
            raise ScenarioError("weights", f"configured for {self.weights.n} agents, graph has {g.n}")
        if len(self.inputs) != self.weights.m:
            raise ScenarioError("inputs", f"{len(self.inputs)} inputs but weights expect {self.weights.m}")
        if len(self.inputs) > g.n:
            raise ScenarioError("inputs", f"{len(self.inputs)} inputs exceed {g.n} agents")
        for name in ("x0", "xi0"):
            v = getattr(self, name)
            v = np.zeros(g.n) if v is None else np.array(v, dtype=float)
            if v.shape != (g.n,):
                raise ScenarioError(f"init.{name}", f"expected {g.n} values, got shape {v.shape}")
            v.flags.writeable = False
            object.__setattr__(self, name, v)

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def steps(self) -> int:
        return int(round(self.duration / self.dt))

    @property
    def is_time_invariant(self) -> bool:
        return self.weights.is_constant and all(s.is_constant for s in self.inputs)

    def replace(self, **changes) -> "Scenario":
        return dataclasses.replace(self, **changes)

    def input_vector(self, t) -> np.ndarray:
        return input_vector(self.inputs, self.n, t)


@dataclass
class Trajectory:
    times: np.ndarray
    x: np.ndarray
    xi: np.ndarray
    epsilon: np.ndarray
    epsilon_valid: np.ndarray
    delta_norm: np.ndarray
    lyapunov: np.ndarray
    bound: np.ndarray
    estimate: Optional[analysis.BoundEstimate] = None
    decomposition: Optional[analysis.Decomposition] = None
    bound_note: str = ""
    e: np.ndarray = field(default=None, repr=False)

    def __len__(self) -> int:
        return self.times.size

    def settling_time(self) -> Optional[float]:
        """Empirical time after which ``||delta||^2`` stays under the bound."""
        if self.estimate is None:
            return None
        return analysis.settling_time(self.times, self.delta_norm ** 2, self.estimate.bound,
                                      self.epsilon_valid)


# -- right-hand side ---------------------------------------------------------

def _system_matrix(scenario: Scenario) -> np.ndarray:
    """Linear part ``[[-aL, L], [-gL, -g s I]]`` of the stacked dynamics."""
    lap = scenario.graph.laplacian
    n = scenario.n
    a, g, s = scenario.gains.alpha, scenario.gains.gamma, scenario.gains.sigma
    return np.block([[-a * lap, lap], [-g * lap, -g * s * np.eye(n)]])


def _drive_terms(scenario: Scenario, t):
    """``K1`` diagonal and ``a K2 c`` at time(s) ``t``."""
    cfg = scenario.weights
    k1 = cfg.k1_diag(t)
    k2 = cfg.k2(t)
    c = scenario.input_vector(t)
    drive = scenario.gains.alpha * np.einsum("...ij,...j->...i", k2, c)
    return k1, drive


def _rk4_affine_map(scenario: Scenario, h: float):
    """RK4 step of a time-invariant scenario as ``z -> R z + d``."""
    n = scenario.n
    k1, drive = _drive_terms(scenario, 0.0)
    a = _system_matrix(scenario)
    a[:n, :n] -= scenario.gains.alpha * np.diag(k1)
    b = np.concatenate([drive, np.zeros(n)])
    eye = np.eye(2 * n)
    ha = h * a
    ha2 = ha @ ha
    ha3 = ha2 @ ha
    r = eye + ha + ha2 / 2 + ha3 / 6 + ha3 @ ha / 24
    s = h * (eye + ha / 2 + ha2 / 6 + ha3 / 24)
    return r, s @ b


def _record_indices(steps: int, stride: int) -> np.ndarray:
    idx = np.arange(0, steps + 1, stride)
    if idx[-1] != steps:
        idx = np.append(idx, steps)
    return idx


def _integrate_invariant(scenario: Scenario, z0: np.ndarray, steps: int, h: float,
                         rec: np.ndarray) -> np.ndarray:
    r, d = _rk4_affine_map(scenario, h)
    m = r.shape[0]
    # powers[j] = R^(j+1), offsets[j] = sum_{i<=j} R^i d
    powers = np.empty((BLOCK_STEPS, m, m))
    offsets = np.empty((BLOCK_STEPS, m))
    powers[0] = r
    offsets[0] = d
    with np.errstate(all="ignore"):
        for j in range(1, BLOCK_STEPS):
            powers[j] = r @ powers[j - 1]
            offsets[j] = r @ offsets[j - 1] + d
    out = np.empty((rec.size, m))
    want = np.zeros(steps + 1, dtype=bool)
    want[rec] = True
    slot = np.full(steps + 1, -1)
    slot[rec] = np.arange(rec.size)
    out[0] = z0
    z = z0
    k = 0
    with np.errstate(all="ignore"):
        while k < steps:
            b = min(BLOCK_STEPS, steps - k)
            block = powers[:b] @ z + offsets[:b]
            ks = np.arange(k + 1, k + b + 1)
            sel = want[ks]
            if sel.any():
                out[slot[ks[sel]]] = block[sel]
            z = block[-1]
            k += b
            if not np.all(np.isfinite(z)):
                bad = np.flatnonzero(~np.all(np.isfinite(block), axis=1))[0]
                raise DivergenceError((k - b + 1 + bad) * h)
    return out


def _integrate_general(scenario: Scenario, z0: np.ndarray, steps: int, h: float,
                       rec: np.ndarray) -> np.ndarray:
    n = scenario.n
    alpha = scenario.gains.alpha
    msys = _system_matrix(scenario)
    out = np.empty((rec.size, 2 * n))
    want = np.zeros(steps + 1, dtype=bool)
    want[rec] = True
    slot = np.full(steps + 1, -1)
    slot[rec] = np.arange(rec.size)
    out[0] = z0
    z = z0.copy()

    def f(zz, k1, drive):
        dz = msys @ zz
        dz[:n] += drive - alpha * k1 * zz[:n]
        return dz

    with np.errstate(all="ignore"):
        for start in range(0, steps, CHUNK_STEPS):
            stop = min(start + CHUNK_STEPS, steps)
            # half-step grid start*h, (start+1/2)*h, ..., stop*h
            tau = np.arange(2 * start, 2 * stop + 1) * (h / 2)
            k1s, drives = _drive_terms(scenario, tau)
            for k in range(start, stop):
                j = 2 * (k - start)
                d1 = f(z, k1s[j], drives[j])
                d2 = f(z + (h / 2) * d1, k1s[j + 1], drives[j + 1])
                d3 = f(z + (h / 2) * d2, k1s[j + 1], drives[j + 1])
                d4 = f(z + h * d3, k1s[j + 2], drives[j + 2])
                z = z + (h / 6) * (d1 + 2 * d2 + 2 * d3 + d4)
                if want[k + 1]:
                    out[slot[k + 1]] = z
            if not np.all(np.isfinite(z)):
                lo = np.searchsorted(rec, start + 1)
                bad = rec[lo:][~np.all(np.isfinite(out[lo:np.searchsorted(rec, stop, "right")]), axis=1)]
                raise DivergenceError((bad[0] if bad.size else stop) * h)
    return out


def _hold_last(values: np.ndarray, valid: np.ndarray) -> np.ndarray:
    """Forward-fill invalid entries; leading invalid entries take the first valid one."""
    if valid.all() or not valid.any():
        return values
    idx = np.where(valid, np.arange(values.size), 0)
    np.maximum.accumulate(idx, out=idx)
    first = np.flatnonzero(valid)[0]
    idx[:first] = first
    return values[idx]


def integrate(scenario: Scenario, compute_bound: bool = True,
              h_fd: Optional[float] = None) -> Trajectory:
    """Integrate ``scenario`` and sample all analysis quantities along it.

    Raises :class:`DivergenceError` as soon as the state stops being finite.
    """
    n = scenario.n
    h = scenario.dt
    steps = scenario.steps
    rec = _record_indices(steps, scenario.record_stride)
    z0 = np.concatenate([scenario.x0, scenario.xi0])
    if scenario.is_time_invariant:
        zs = _integrate_invariant(scenario, z0, steps, h, rec)
    else:
        zs = _integrate_general(scenario, z0, steps, h, rec)
    times = rec * h
    traj = _analyse(scenario, times, zs[:, :n], zs[:, n:])
    if compute_bound:
        _attach_bound(scenario, traj, h / 10 if h_fd is None else h_fd)
    return traj


def _analyse(scenario: Scenario, times, x, xi) -> Trajectory:
    g = scenario.graph
    alpha = scenario.gains.alpha
    cfg = scenario.weights
    if scenario.is_time_invariant:
        k2 = np.broadcast_to(cfg.k2(0.0), (times.size, scenario.n, scenario.n))
        c = np.broadcast_to(scenario.input_vector(0.0), (times.size, scenario.n))
    else:
        k2 = cfg.k2(times)
        c = scenario.input_vector(times)
    den = k2.sum(axis=(1, 2))
    valid = den >= analysis.DENOM_TOL
    eps = _hold_last(analysis._eps_stack(k2, c), valid)
    k2c = np.einsum("tij,tj->ti", k2, c)
    k1 = k2.sum(axis=2)
    kcc = k1 * eps[:, None] - k2c
    e = xi - alpha * kcc @ g.pinv
    dl = x - eps[:, None]
    delta_norm = np.linalg.norm(dl, axis=1)
    lyap = (dl * dl).sum(axis=1) / (2 * alpha) + (e * e).sum(axis=1) / (2 * alpha * scenario.gains.gamma)
    return Trajectory(times=times, x=x, xi=xi, epsilon=eps, epsilon_valid=valid,
                      delta_norm=delta_norm, lyapunov=lyap, bound=np.full(times.size, np.nan), e=e)


def dense_times(scenario: Scenario) -> np.ndarray:
    """Sampling grid for supremum estimates: every integrator step."""
    if scenario.is_time_invariant:
        return np.array([0.0, scenario.steps * scenario.dt])
    return np.arange(scenario.steps + 1) * scenario.dt


def estimate_bound(scenario: Scenario, h_fd: Optional[float] = None,
                   gains: Optional[Gains] = None) -> analysis.BoundEstimate:
    """Ultimate-bound estimate with suprema sampled over the scenario horizon.

    ``gains`` overrides the scenario gains; the sampled suprema do not
    depend on them.
    """
    ts = dense_times(scenario)
    h_fd = scenario.dt / 10 if h_fd is None else h_fd
    dec = analysis.decompose_k1(scenario.weights.k1_diag(ts))
    sup = analysis.signal_suprema(scenario.graph, scenario.weights, scenario.inputs, ts, h_fd)
    return analysis.ultimate_bound(scenario.graph, gains or scenario.gains, dec,
                                   sup.eps_dot_star, sup.p1_star, sup.p2_star)


def _attach_bound(scenario: Scenario, traj: Trajectory, h_fd: float) -> None:
    try:
        ts = dense_times(scenario)
        traj.decomposition = analysis.decompose_k1(scenario.weights.k1_diag(ts))
        traj.estimate = estimate_bound(scenario, h_fd)
    except ApnetError as exc:
        traj.bound_note = str(exc)
        log.info("bound not computable: %s", exc)
        return
    traj.bound[:] = traj.estimate.bound


# -- audits and checks -------------------------------------------------------

def convergence_check(traj: Trajectory, target: float, tol: float, window: float):
    """``(converged, first_time)``.

    ``converged`` is true iff every agent is within ``tol`` of ``target`` at
    every recorded time of the final ``window`` seconds. ``first_time`` is the
    earliest time after which that holds until the end, or ``None``.
    """
    err = np.max(np.abs(traj.x - target), axis=1)
    final = traj.times >= traj.times[-1] - window - 1e-12
    ok = bool(np.all(err[final] <= tol))
    bad = np.flatnonzero(err > tol)
    if bad.size == 0:
        first = float(traj.times[0])
    elif bad[-1] == err.size - 1:
        first = None
    else:
        first = float(traj.times[bad[-1] + 1])
    return ok, first


def halve_step_audit(scenario: Scenario) -> float:
    """Max state difference between runs at ``dt`` and ``dt/2`` on the ``dt`` grid."""
    coarse = integrate(scenario.replace(record_stride=1), compute_bound=False)
    fine = integrate(scenario.replace(dt=scenario.dt / 2, record_stride=2), compute_bound=False)
    m = min(len(coarse), len(fine))
    dx = np.abs(coarse.x[:m] - fine.x[:m]).max()
    dxi = np.abs(coarse.xi[:m] - fine.xi[:m]).max()
    return float(max(dx, dxi))


def rk4_step(scenario: Scenario, state: NetworkState, h: float, form: str = "compact") -> NetworkState:
    """One RK4 step using the agent-form or compact-form derivative."""
    g, gains, cfg, inputs = scenario.graph, scenario.gains, scenario.weights, scenario.inputs
    n = scenario.n

    def f(t, z):
        s = NetworkState(z[:n], z[n:], t)
        if form == "agent":
            dx, dxi = derivative_agent_form(g, gains, cfg, inputs, s)
        else:
            dx, dxi = derivative_compact_form(g, gains, cfg, scenario.input_vector(t), s)
        return np.concatenate([dx, dxi])

    t = state.t
    z = np.concatenate([state.x, state.xi])
    d1 = f(t, z)
    d2 = f(t + h / 2, z + h / 2 * d1)
    d3 = f(t + h / 2, z + h / 2 * d2)
    d4 = f(t + h, z + h * d3)
    z = z + h / 6 * (d1 + 2 * d2 + 2 * d3 + d4)
    return NetworkState(z[:n], z[n:], t + h)


def error_dynamics_residuals(scenario: Scenario, traj: Trajectory, sample_indices: Sequence[int],
                             h_fd: float = 1e-4):
    """Compare finite-difference error rates with the closed-loop forms.

    At each sampled trajectory point the state is advanced by ``+h_fd`` and
    ``-h_fd`` with single RK4 steps; central differences of ``delta`` and
    ``e`` are compared against ``-aF d - aK~ d + L e + s1`` and
    ``-gL d - gs e + s2``. Also compares the Lyapunov rate with its closed form.
    Returns max absolute residuals ``(delta, e, lyapunov_rate)``.
    """
    g, gains, cfg, inputs = scenario.graph, scenario.gains, scenario.weights, scenario.inputs
    horizon = (0.0, scenario.steps * scenario.dt)
    dec = traj.decomposition or analysis.decompose_k1(cfg.k1_diag(dense_times(scenario)))
    worst = np.zeros(3)
    for i in sample_indices:
        t = float(traj.times[i])
        s = NetworkState(traj.x[i], traj.xi[i], t)
        fwd = analysis.error_coordinates(g, gains, cfg, inputs, rk4_step(scenario, s, h_fd))
        bwd = analysis.error_coordinates(g, gains, cfg, inputs, rk4_step(scenario, s, -h_fd))
        here = analysis.error_coordinates(g, gains, cfg, inputs, s)
        d_fd = (fwd.delta - bwd.delta) / (2 * h_fd)
        e_fd = (fwd.e - bwd.e) / (2 * h_fd)
        v_fd = (analysis.lyapunov(fwd.delta, fwd.e, gains)
                - analysis.lyapunov(bwd.delta, bwd.e, gains)) / (2 * h_fd)
        s1, s2 = analysis.perturbations(g, gains, cfg, inputs, t, h_fd, horizon)
        k1 = cfg.k1_diag(t)
        d_rhs = analysis.delta_rate(g, gains, dec, k1, here.delta, here.e, s1)
        e_rhs = analysis.e_rate(g, gains, here.delta, here.e, s2)
        v_rhs = analysis.lyapunov_rate(g, gains, dec, k1, here.delta, here.e, s1, s2)
        worst = np.maximum(worst, [np.abs(d_fd - d_rhs).max(), np.abs(e_fd - e_rhs).max(),
                                   abs(v_fd - v_rhs)])
    return tuple(float(w) for w in worst)

