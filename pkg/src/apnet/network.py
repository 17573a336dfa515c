"""Active-passive network dynamics with value-of-information weights.

State per agent ``i``: consensus state ``x_i`` and integral action ``xi_i``.
Agents with at least one weight entry are active, the rest passive.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .graph import Graph
from .signals import InputSignal, WeightSignal


@dataclass(frozen=True)
class Gains:
    alpha: float
    gamma: float
    sigma: float = 0.0

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if not self.sigma >= 0:
            raise ValueError(f"sigma must be nonnegative, got {self.sigma}")


@dataclass(frozen=True)
class NetworkState:
    x: np.ndarray
    xi: np.ndarray
    t: float = 0.0


@dataclass(frozen=True)
class WeightConfig:
    """Which agent senses which input, and with what weight signal.

    ``entries`` maps 0-based ``(agent, input)`` pairs to weight signals.
    Evaluating at ``t`` gives ``K2(t)`` padded to ``n x n`` and
    ``K1(t) = diag(K2(t) 1)``.
    """

    n: int
    m: int
    entries: Mapping[tuple[int, int], WeightSignal]

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("at least one exogenous input is required")
        if self.m > self.n:
            raise ValueError(f"{self.m} inputs exceed {self.n} agents")
        if not self.entries:
            raise ValueError("weight configuration has no entries")
        for i, h in self.entries:
            if not (0 <= i < self.n and 0 <= h < self.m):
                raise ValueError(f"weight entry (agent {i}, input {h}) out of range")
        object.__setattr__(self, "entries", dict(sorted(self.entries.items())))

    @property
    def is_constant(self) -> bool:
        return all(w.is_constant for w in self.entries.values())

    def attachments(self, i: int) -> list[int]:
        """Inputs sensed by agent ``i`` (empty for a passive agent)."""
        return [h for (a, h) in self.entries if a == i]

    def active_agents(self) -> list[int]:
        return sorted({i for i, _ in self.entries})

    def k2(self, t) -> np.ndarray:
        """``K2`` at ``t``; shape ``(n, n)`` or ``(len(t), n, n)`` for array ``t``."""
        shape = np.shape(t) + (self.n, self.n)
        out = np.zeros(shape)
        for (i, h), w in self.entries.items():
            out[..., i, h] = w(t)
        return out

    def k1_diag(self, t) -> np.ndarray:
        """Diagonal of ``K1`` at ``t``: the row sums of ``K2``."""
        out = np.zeros(np.shape(t) + (self.n,))
        for (i, _), w in self.entries.items():
            out[..., i] += w(t)
        return out


def eval_k2(cfg: WeightConfig, t) -> np.ndarray:
    return cfg.k2(t)


def eval_k1(cfg: WeightConfig, t) -> np.ndarray:
    k1 = cfg.k1_diag(t)
    if k1.ndim == 1:
        return np.diag(k1)
    return k1[..., :, None] * np.eye(cfg.n)


def input_vector(inputs: Sequence[InputSignal], n: int, t) -> np.ndarray:
    """Stack the inputs at ``t`` into ``c``, zero-padded to length ``n``."""
    out = np.zeros(np.shape(t) + (n,))
    for h, sig in enumerate(inputs):
        out[..., h] = sig(t)
    return out


def derivative_agent_form(g: Graph, gains: Gains, cfg: WeightConfig,
                          inputs: Sequence[InputSignal], s: NetworkState):
    """Per-agent right-hand side, summing over neighbor and input lists."""
    a, gm, sg = gains.alpha, gains.gamma, gains.sigma
    t = s.t
    dx = np.zeros(g.n)
    dxi = np.zeros(g.n)
    for i in range(g.n):
        disagreement = 0.0
        integral = 0.0
        for j in g.neighbors(i):
            disagreement += s.x[i] - s.x[j]
            integral += s.xi[i] - s.xi[j]
        sensing = 0.0
        for h in cfg.attachments(i):
            sensing += cfg.entries[(i, h)](t) * (s.x[i] - inputs[h](t))
        dx[i] = -a * disagreement + integral - a * sensing
        dxi[i] = -gm * (disagreement + sg * s.xi[i])
    return dx, dxi


def derivative_compact_form(g: Graph, gains: Gains, cfg: WeightConfig,
                            c: np.ndarray, s: NetworkState):
    """Matrix right-hand side; ``c`` is the padded input vector at ``s.t``."""
    lap = g.laplacian
    a = gains.alpha
    k1 = cfg.k1_diag(s.t)
    k2 = cfg.k2(s.t)
    lx = lap @ s.x
    dx = -a * lx + lap @ s.xi - a * k1 * s.x + a * (k2 @ c)
    dxi = -gains.gamma * lx - gains.gamma * gains.sigma * s.xi
    return dx, dxi


def derivative_unweighted(g: Graph, alpha: float, gamma: float,
                          attachments: Mapping[int, Sequence[int]],
                          inputs: Sequence[InputSignal], s: NetworkState):
    """Original active-passive algorithm: every input counts once, no leakage.

    ``attachments`` maps an agent to the inputs it senses.
    """
    dx = np.zeros(g.n)
    dxi = np.zeros(g.n)
    for i in range(g.n):
        diff_x = sum(s.x[i] - s.x[j] for j in g.neighbors(i))
        diff_xi = sum(s.xi[i] - s.xi[j] for j in g.neighbors(i))
        sensed = sum(s.x[i] - inputs[h](s.t) for h in attachments.get(i, ()))
        dx[i] = -alpha * diff_x + diff_xi - alpha * sensed
        dxi[i] = -gamma * diff_x
    return dx, dxi
