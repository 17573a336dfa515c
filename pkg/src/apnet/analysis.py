"""Error coordinates, perturbation terms and the ultimate-bound estimate.

Notation follows the code in :mod:`apnet.network`: ``k1`` is the diagonal
total-weight matrix (or its diagonal), ``k2`` the agent-by-input weight
matrix, ``c`` the zero-padded input vector.

All supremum norms are estimates obtained by dense sampling, not
certified bounds.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (BoundUndefinedError, ConstancyError, DecompositionError,
                     NoActiveSensingError)
from .graph import Graph, f_matrix_min_eig
from .network import Gains, NetworkState, WeightConfig, input_vector
from .signals import InputSignal

DENOM_TOL = 1e-12
ZERO_TOL = 1e-12


def weighted_average(k2, c) -> float:
    """``(1' K2 c) / (1' K2 1)``: the consensus target."""
    k2 = np.asarray(k2, dtype=float)
    den = k2.sum()
    if den < DENOM_TOL:
        raise NoActiveSensingError("no active sensing: total weight is zero")
    return float((k2 @ np.asarray(c, dtype=float)).sum() / den)


def delta(x, epsilon) -> np.ndarray:
    return np.asarray(x, dtype=float) - epsilon


def l_c(k1, k2) -> np.ndarray:
    """``K1 1 1' / (1' K2 1) - I``; its columns sum to zero."""
    k2 = np.asarray(k2, dtype=float)
    k1 = np.asarray(k1, dtype=float)
    k1d = np.diag(k1) if k1.ndim == 2 else k1
    den = k2.sum()
    if den < DENOM_TOL:
        raise NoActiveSensingError("no active sensing: total weight is zero")
    n = k2.shape[0]
    return np.outer(k1d, np.ones(n)) / den - np.eye(n)


def k_c(k1, k2) -> np.ndarray:
    return l_c(k1, k2) @ np.asarray(k2, dtype=float)


def integral_error(xi, alpha: float, l_pinv, k_c, c) -> np.ndarray:
    """Transformed integral-action error ``xi - alpha L+ K_c c``."""
    return np.asarray(xi, dtype=float) - alpha * (l_pinv @ (k_c @ np.asarray(c, dtype=float)))


def lyapunov(delta, e, gains: Gains) -> float:
    delta = np.asarray(delta, dtype=float)
    e = np.asarray(e, dtype=float)
    return float(delta @ delta / (2 * gains.alpha) + e @ e / (2 * gains.alpha * gains.gamma))


@dataclass(frozen=True)
class ErrorCoordinates:
    epsilon: float
    delta: np.ndarray
    e: np.ndarray


def error_coordinates(g: Graph, gains: Gains, cfg: WeightConfig,
                      inputs: Sequence[InputSignal], s: NetworkState) -> ErrorCoordinates:
    k2 = cfg.k2(s.t)
    c = input_vector(inputs, g.n, s.t)
    eps = weighted_average(k2, c)
    kc = k_c(cfg.k1_diag(s.t), k2)
    return ErrorCoordinates(eps, delta(s.x, eps), integral_error(s.xi, gains.alpha, g.pinv, kc, c))


# -- finite differences -----------------------------------------------------

def _fd_stencil(t, h: float, lo: float, hi: float):
    """Evaluation points and weights for a second-order derivative estimate.

    Central where ``[t-h, t+h]`` fits in ``[lo, hi]``, otherwise the
    three-point one-sided formula pointing into the horizon.
    """
    t = np.asarray(t, dtype=float)
    fwd = t - h < lo
    bwd = (t + h > hi) & ~fwd
    p0 = np.where(fwd | bwd, t, t - h)
    p1 = np.where(fwd, t + h, np.where(bwd, t - h, t + h))
    p2 = np.where(fwd, t + 2 * h, np.where(bwd, t - 2 * h, t))
    w0 = np.where(fwd, -3.0, np.where(bwd, 3.0, -1.0)) / (2 * h)
    w1 = np.where(fwd, 4.0, np.where(bwd, -4.0, 1.0)) / (2 * h)
    w2 = np.where(fwd, -1.0, np.where(bwd, 1.0, 0.0)) / (2 * h)
    return (p0, p1, p2), (w0, w1, w2)


def _fd(f, t, h: float, lo: float = -np.inf, hi: float = np.inf):
    pts, wts = _fd_stencil(t, h, lo, hi)
    out = 0.0
    for p, w in zip(pts, wts):
        val = np.asarray(f(p), dtype=float)
        w = np.asarray(w)
        out = out + w.reshape(w.shape + (1,) * (val.ndim - w.ndim)) * val
    return out


# -- perturbations ----------------------------------------------------------

def _kc_stack(k2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``K_c`` for a stack of ``K2`` matrices plus the denominators ``1'K2 1``."""
    k1 = k2.sum(axis=-1)
    colsum = k2.sum(axis=-2)
    den = colsum.sum(axis=-1)
    safe = np.where(den < DENOM_TOL, np.nan, den)
    kc = k1[..., :, None] * colsum[..., None, :] / safe[..., None, None] - k2
    return kc, den


def _eps_stack(k2: np.ndarray, c: np.ndarray) -> np.ndarray:
    den = k2.sum(axis=(-2, -1))
    num = np.einsum("...ij,...j->...", k2, c)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(den < DENOM_TOL, np.nan, num / np.where(den == 0, 1.0, den))


def perturbations(g: Graph, gains: Gains, cfg: WeightConfig, inputs: Sequence[InputSignal],
                  t: float, h: float, horizon: tuple[float, float] = (0.0, np.inf)):
    """Perturbation terms ``(s1, s2)`` of the closed-loop error dynamics at ``t``.

    ``s1 = -eps_dot 1`` and
    ``s2 = -a g s L+ K_c c - a L+ K_c_dot c - a L+ K_c c_dot``, with every
    time derivative taken by finite differences of step ``h``.
    """
    n = g.n
    lo, hi = horizon
    eps_fn = lambda tt: _eps_stack(cfg.k2(tt), input_vector(inputs, n, tt))
    kc_fn = lambda tt: _kc_stack(cfg.k2(tt))[0]
    c_fn = lambda tt: input_vector(inputs, n, tt)
    tt = np.asarray([t], dtype=float)
    eps_dot = _fd(eps_fn, tt, h, lo, hi)[0]
    kc = kc_fn(tt)[0]
    kc_dot = _fd(kc_fn, tt, h, lo, hi)[0]
    c = c_fn(tt)[0]
    c_dot = _fd(c_fn, tt, h, lo, hi)[0]
    if not np.isfinite(eps_dot) or not np.all(np.isfinite(kc)):
        raise NoActiveSensingError(f"no active sensing near t = {t}")
    a, gm, sg = gains.alpha, gains.gamma, gains.sigma
    pinv = g.pinv
    s1 = -eps_dot * np.ones(n)
    s2 = -a * gm * sg * (pinv @ (kc @ c)) - a * (pinv @ (kc_dot @ c)) - a * (pinv @ (kc @ c_dot))
    return s1, s2


# -- decomposition ----------------------------------------------------------

@dataclass(frozen=True)
class Decomposition:
    """``K1(t) = K0 + K_tilde(t)`` with ``K0 = phi`` on a single agent."""

    k0: np.ndarray
    phi: float
    index: int

    def k_tilde(self, k1_diag) -> np.ndarray:
        """Diagonal(s) of ``K1 - K0`` for one or a stack of ``K1`` diagonals."""
        return np.asarray(k1_diag, dtype=float) - np.diag(self.k0)


def decompose_k1(k1_samples) -> Decomposition:
    """Split sampled total weights into a constant single-agent part and a rest.

    ``k1_samples`` is ``(T, n)`` (diagonals) or ``(T, n, n)``. The agent with
    the largest positive infimum carries ``phi``; ties go to the lowest index.
    """
    k1 = np.asarray(k1_samples, dtype=float)
    if k1.ndim == 3:
        k1 = np.diagonal(k1, axis1=1, axis2=2)
    if k1.ndim == 1:
        k1 = k1[None, :]
    inf = k1.min(axis=0)
    if not np.any(inf > 0):
        raise DecompositionError("no agent keeps a positive total weight over the horizon")
    index = int(np.argmax(inf))
    phi = float(inf[index])
    k0 = np.zeros((k1.shape[1], k1.shape[1]))
    k0[index, index] = phi
    return Decomposition(k0, phi, index)


# -- bound ------------------------------------------------------------------

@dataclass(frozen=True)
class BoundEstimate:
    eps_dot_star: float
    p1_star: float
    p2_star: float
    lambda_min_f: float
    bound: float
    s1_star: float
    s2_star: float


def ultimate_bound(g: Graph, gains: Gains, decomposition: Decomposition,
                   eps_dot_star: float, p1_star: float, p2_star: float) -> BoundEstimate:
    """Ultimate bound on ``||delta||^2`` from the Lyapunov analysis.

    ``1/a^2 * n^2 eps_dot*^2 / lmin(F)^2
    + a^2/g * (p1*^2 + 2 p1* p2*/(g s) + p2*^2/(g s)^2)``.

    With ``sigma = 0`` the ``p1*`` contribution is absent (it enters the
    perturbation only through the leakage term), so the bound is the first
    bracket when ``p2* = 0`` and undefined otherwise.
    """
    a, gm, sg = gains.alpha, gains.gamma, gains.sigma
    n = g.n
    lam = f_matrix_min_eig(g.laplacian, decomposition.k0)
    if lam <= 0:
        raise BoundUndefinedError(f"lambda_min(L + K0) = {lam} is not positive")
    first = n ** 2 * eps_dot_star ** 2 / (a ** 2 * lam ** 2)
    if sg > 0:
        gs = gm * sg
        second = a ** 2 / gm * (p1_star ** 2 + 2 * p1_star * p2_star / gs + p2_star ** 2 / gs ** 2)
        s2_star = a * (gs * p1_star + p2_star)
    elif p2_star > ZERO_TOL:
        raise BoundUndefinedError("sigma = 0 with time-varying perturbations: the bound divides by sigma")
    else:
        second = 0.0
        s2_star = 0.0
    return BoundEstimate(
        eps_dot_star=float(eps_dot_star), p1_star=float(p1_star), p2_star=float(p2_star),
        lambda_min_f=lam, bound=float(first + second),
        s1_star=float(np.sqrt(n) * eps_dot_star), s2_star=float(s2_star))


@dataclass(frozen=True)
class SignalSuprema:
    """Sampled suprema of the signals entering the bound and its corollaries."""

    eps_dot_star: float
    p1_star: float
    p2_star: float
    c_star: float
    c_dot_star: float
    k2_star: float
    k2_dot_star: float
    flagged: int


def signal_suprema(g: Graph, cfg: WeightConfig, inputs: Sequence[InputSignal],
                   times, h: float, horizon: tuple[float, float] | None = None,
                   chunk: int = 2048) -> SignalSuprema:
    """Sample every bound ingredient on ``times`` and take maxima.

    Samples where the total weight vanishes are skipped and counted in
    ``flagged``.
    """
    times = np.asarray(times, dtype=float)
    if horizon is None:
        horizon = (float(times[0]), float(times[-1]))
    lo, hi = horizon
    n = g.n
    pinv = g.pinv
    k2_fn = cfg.k2
    c_fn = lambda tt: input_vector(inputs, n, tt)
    eps_fn = lambda tt: _eps_stack(k2_fn(tt), c_fn(tt))
    kc_fn = lambda tt: _kc_stack(k2_fn(tt))[0]

    acc = dict(eps_dot=0.0, p1=0.0, p2=0.0, c=0.0, c_dot=0.0, k2=0.0, k2_dot=0.0)
    flagged = 0
    for start in range(0, times.size, chunk):
        tt = times[start:start + chunk]
        k2 = k2_fn(tt)
        c = c_fn(tt)
        kc, den = _kc_stack(k2)
        with np.errstate(invalid="ignore"):
            eps_dot = _fd(eps_fn, tt, h, lo, hi)
            kc_dot = _fd(kc_fn, tt, h, lo, hi)
        c_dot = _fd(c_fn, tt, h, lo, hi)
        k2_dot = _fd(k2_fn, tt, h, lo, hi)
        ok = (den >= DENOM_TOL) & np.isfinite(eps_dot) & np.all(np.isfinite(kc_dot), axis=(1, 2))
        flagged += int((~ok).sum())
        acc["c"] = max(acc["c"], float(np.linalg.norm(c, axis=1).max()))
        acc["c_dot"] = max(acc["c_dot"], float(np.linalg.norm(c_dot, axis=1).max()))
        acc["k2"] = max(acc["k2"], float(np.linalg.norm(k2, axis=(1, 2)).max()))
        acc["k2_dot"] = max(acc["k2_dot"], float(np.linalg.norm(k2_dot, axis=(1, 2)).max()))
        if not ok.any():
            continue
        kc, kc_dot, c, c_dot = kc[ok], kc_dot[ok], c[ok], c_dot[ok]
        p1 = np.einsum("ij,tj->ti", pinv, np.einsum("tij,tj->ti", kc, c))
        u = np.einsum("tij,tj->ti", kc_dot, c) + np.einsum("tij,tj->ti", kc, c_dot)
        p2 = np.einsum("ij,tj->ti", pinv, u)
        acc["eps_dot"] = max(acc["eps_dot"], float(np.abs(eps_dot[ok]).max()))
        acc["p1"] = max(acc["p1"], float(np.linalg.norm(p1, axis=1).max()))
        acc["p2"] = max(acc["p2"], float(np.linalg.norm(p2, axis=1).max()))
    return SignalSuprema(acc["eps_dot"], acc["p1"], acc["p2"], acc["c"], acc["c_dot"],
                         acc["k2"], acc["k2_dot"], flagged)


def corollary_suprema(case: str, g: Graph, cfg: WeightConfig, inputs: Sequence[InputSignal],
                      times, h: float, tol: float = 1e-12):
    """Closed-form suprema ``(eps_dot*, p1*, p2*)`` of the two special cases.

    ``case`` is ``"varying-inputs-constant-weights"`` or
    ``"constant-inputs-varying-weights"``; the constancy it names is checked
    on ``times`` to within ``tol``.
    """
    times = np.asarray(times, dtype=float)
    n = g.n
    pinv = g.pinv
    k2s = cfg.k2(times)
    cs = input_vector(inputs, n, times)
    ones = np.ones(n)
    if case == "varying-inputs-constant-weights":
        if np.max(np.abs(k2s - k2s[0])) > tol:
            raise ConstancyError("weights vary over the horizon")
        k2 = k2s[0]
        sup = signal_suprema(g, cfg, inputs, times, h)
        col = ones @ k2
        kc_norm = np.linalg.norm(pinv @ k_c(k2.sum(axis=1), k2), "fro")
        eps_dot = sup.c_dot_star * np.linalg.norm(col) / col.sum()
        return float(eps_dot), float(sup.c_star * kc_norm), float(sup.c_dot_star * kc_norm)
    if case == "constant-inputs-varying-weights":
        if np.max(np.abs(cs - cs[0])) > tol:
            raise ConstancyError("inputs vary over the horizon")
        c = cs[0]
        lo, hi = float(times[0]), float(times[-1])
        k2_dot = _fd(cfg.k2, times, h, lo, hi)
        den = k2s.sum(axis=(1, 2))
        if np.any(den < DENOM_TOL):
            raise NoActiveSensingError("total weight vanishes on the horizon")
        # 1'K2 [1 1'K2_dot c - c 1'K2_dot 1] / (1'K2 1)^2
        col = k2s.sum(axis=1)
        term = (np.einsum("tj,j->t", col, ones) * np.einsum("tij,j->t", k2_dot, c)
                - np.einsum("tj,j->t", col, c) * k2_dot.sum(axis=(1, 2)))
        eps_dot = float(np.max(np.abs(term) / den ** 2))
        scale = np.linalg.norm(pinv, "fro") * np.linalg.norm(c)
        k2_star = float(np.linalg.norm(k2s, axis=(1, 2)).max())
        k2_dot_star = float(np.linalg.norm(k2_dot, axis=(1, 2)).max())
        return eps_dot, float(scale * k2_star), float(scale * k2_dot_star)
    raise ValueError(f"unknown special case {case!r}")


# -- closed-loop error dynamics ---------------------------------------------

def delta_rate(g: Graph, gains: Gains, decomposition: Decomposition, k1_diag,
               delta, e, s1) -> np.ndarray:
    """``-a F delta - a K_tilde delta + L e + s1`` with ``F = L + K0``."""
    lap = g.laplacian
    f = lap + decomposition.k0
    kt = np.asarray(k1_diag, dtype=float) - np.diag(decomposition.k0)
    return -gains.alpha * (f @ delta) - gains.alpha * kt * delta + lap @ e + s1


def e_rate(g: Graph, gains: Gains, delta, e, s2) -> np.ndarray:
    return -gains.gamma * (g.laplacian @ delta) - gains.gamma * gains.sigma * np.asarray(e) + s2


def lyapunov_rate(g: Graph, gains: Gains, decomposition: Decomposition, k1_diag,
                  delta, e, s1, s2) -> float:
    """Time derivative of the Lyapunov function along the error dynamics.

    ``-d'(F + K_tilde)d - (s/a) e'e + d's1/a + e's2/(a g)``; the ``L e``
    cross terms cancel because ``L`` is symmetric.
    """
    a, gm, sg = gains.alpha, gains.gamma, gains.sigma
    delta = np.asarray(delta, dtype=float)
    e = np.asarray(e, dtype=float)
    m = g.laplacian + np.diag(np.asarray(k1_diag, dtype=float))
    return float(-delta @ m @ delta - sg / a * (e @ e) + delta @ s1 / a + e @ s2 / (a * gm))


def settling_time(times, delta_sq, bound: float, valid=None, atol: float = 1e-10):
    """Earliest sample time after which ``||delta||^2 <= bound + atol`` holds.

    Returns ``None`` if the final sample still exceeds the bound.
    """
    times = np.asarray(times)
    over = np.asarray(delta_sq) > bound + atol
    if valid is not None:
        over &= np.asarray(valid, dtype=bool)
    idx = np.flatnonzero(over)
    if idx.size == 0:
        return float(times[0])
    if idx[-1] == times.size - 1:
        return None
    return float(times[idx[-1] + 1])
