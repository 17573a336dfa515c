"""Randomized property checks behind ``apnet verify``."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import analysis
from .graph import build_graph, is_connected, laplacian_pseudoinverse, random_connected_graph, spectrum
from .network import (Gains, NetworkState, WeightConfig, derivative_agent_form,
                      derivative_compact_form, derivative_unweighted, input_vector)
from .signals import (ConstantInput, ConstantWeight, DistanceWeight, PiecewiseLinearInput,
                      PiecewiseLinearWeight, SinusoidInput, Target, TargetPath, TargetTrackInput)

N_MIN, N_MAX = 2, 12


def random_inputs(rng: np.random.Generator, m: int, target: Target):
    out = []
    for _ in range(m):
        kind = rng.integers(4)
        if kind == 0:
            out.append(ConstantInput(float(rng.uniform(-3, 3))))
        elif kind == 1:
            out.append(SinusoidInput(float(rng.uniform(0, 2)), float(rng.uniform(0, 1)),
                                     float(rng.uniform(0, 6.3)), float(rng.uniform(-1, 1))))
        elif kind == 2:
            ts = np.cumsum(rng.uniform(0.5, 2.0, 4))
            out.append(PiecewiseLinearInput(list(zip(ts, rng.uniform(-2, 2, 4)))))
        else:
            out.append(TargetTrackInput(target, sensor=tuple(rng.uniform(0, 3, 2))))
    return out


def random_weights(rng: np.random.Generator, n: int, m: int, target: Target,
                   kinds: str = "mixed") -> WeightConfig:
    """Each input is sensed by one to three random agents."""
    entries = {}
    for h in range(m):
        for i in rng.choice(n, size=int(rng.integers(1, min(3, n) + 1)), replace=False):
            kind = 0 if kinds == "constant" else rng.integers(3)
            if kind == 0:
                w = ConstantWeight(float(rng.uniform(0.05, 1.0)))
            elif kind == 1:
                ts = np.cumsum(rng.uniform(0.5, 2.0, 3))
                w = PiecewiseLinearWeight(list(zip(ts, rng.uniform(0, 1, 3))))
            else:
                w = DistanceWeight(float(rng.uniform(0.5, 3)), tuple(rng.uniform(0, 3, 2)), target)
            entries[(int(i), h)] = w
    return WeightConfig(n, m, entries)


def random_network(rng: np.random.Generator, n_max: int = N_MAX, kinds: str = "mixed"):
    """Random connected graph with random inputs and weights."""
    n = int(rng.integers(N_MIN, n_max + 1))
    g = random_connected_graph(n, rng, p=float(rng.uniform(0.1, 0.6)))
    m = int(rng.integers(1, n + 1))
    target = Target(TargetPath("circle", (1.5, 1.5), radius=1.0, period=float(rng.uniform(5, 30))), "x")
    if kinds == "constant":
        inputs = [ConstantInput(float(v)) for v in rng.uniform(-3, 3, m)]
    else:
        inputs = random_inputs(rng, m, target)
    return g, inputs, random_weights(rng, n, m, target, kinds)


@dataclass
class PropertyResult:
    name: str
    trials: int = 0
    failures: int = 0
    worst: float = 0.0
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.failures == 0

    def record(self, ok: bool, value: float = 0.0, note: str = "") -> None:
        self.trials += 1
        self.worst = max(self.worst, float(value))
        if not ok:
            self.failures += 1
            if note and len(self.notes) < 3:
                self.notes.append(note)


def check_laplacian_kernel(g, res: PropertyResult) -> None:
    lap = g.laplacian
    sd = spectrum(lap)
    rows_zero = not np.any(lap.sum(axis=1))
    v1 = sd.eigenvectors[:, 0]
    parallel = abs(abs(v1.sum()) / np.sqrt(g.n) - 1.0) < 1e-10
    ok = rows_zero and parallel and sd.eigenvalues[0] <= 1e-10 and sd.eigenvalues[1] > 1e-10
    res.record(ok, abs(sd.eigenvalues[0]), f"n={g.n} eig={sd.eigenvalues[:2]}")


def check_pseudoinverse(g, res: PropertyResult, sym: PropertyResult) -> None:
    pinv = laplacian_pseudoinverse(g.laplacian, g)
    n = g.n
    resid = np.linalg.norm(g.laplacian @ pinv - (np.eye(n) - np.ones((n, n)) / n), "fro")
    res.record(resid <= 1e-8, resid, f"n={g.n} residual={resid:.3e}")
    asym = np.abs(pinv - pinv.T).max()
    sym.record(asym <= 1e-10, asym)


def check_grounded_definite(g, rng, res: PropertyResult) -> None:
    k = np.where(rng.random(g.n) < 0.5, 0.0, rng.uniform(0, 1, g.n))
    k[rng.integers(g.n)] = rng.uniform(0.05, 1.0)
    f = g.laplacian + np.diag(k)
    lam = spectrum(f).eigenvalues[0]
    det = np.linalg.det(f)
    res.record(lam > 0 and det != 0, 0.0, f"n={g.n} lambda_min={lam:.3e}")


def check_connectivity(rng, res: PropertyResult) -> None:
    n = int(rng.integers(N_MIN, N_MAX + 1))
    p = rng.uniform(0.05, 0.5)
    edges = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < p]
    g = build_graph(n, edges)
    spectral = spectrum(g.laplacian).eigenvalues[1] > 1e-10
    res.record(spectral == is_connected(g), 0.0, f"n={n} edges={edges}")


def check_forms(rng, eq: PropertyResult, orig: PropertyResult, lc: PropertyResult,
                passive: PropertyResult) -> None:
    g, inputs, cfg = random_network(rng)
    n = g.n
    gains = Gains(float(rng.uniform(0.1, 10)), float(rng.uniform(0.1, 10)), float(rng.uniform(0, 2)))
    t = float(rng.uniform(0, 10))
    s = NetworkState(rng.uniform(-3, 3, n), rng.uniform(-3, 3, n), t)
    c = input_vector(inputs, n, t)

    a_dx, a_dxi = derivative_agent_form(g, gains, cfg, inputs, s)
    c_dx, c_dxi = derivative_compact_form(g, gains, cfg, c, s)
    diff = max(np.abs(a_dx - c_dx).max(), np.abs(a_dxi - c_dxi).max())
    eq.record(diff <= 1e-12, diff, f"n={n} diff={diff:.3e}")

    ones = WeightConfig(n, cfg.m, {key: ConstantWeight(1.0) for key in cfg.entries})
    plain = Gains(gains.alpha, gains.gamma, 0.0)
    attach = {i: ones.attachments(i) for i in range(n)}
    o_dx, o_dxi = derivative_unweighted(g, plain.alpha, plain.gamma, attach, inputs, s)
    w_dx, w_dxi = derivative_compact_form(g, plain, ones, c, s)
    diff = max(np.abs(o_dx - w_dx).max(), np.abs(o_dxi - w_dxi).max())
    orig.record(diff <= 1e-12, diff, f"n={n} diff={diff:.3e}")

    k2 = cfg.k2(t)
    if k2.sum() >= analysis.DENOM_TOL:
        col = np.abs(np.ones(n) @ analysis.l_c(cfg.k1_diag(t), k2)).max()
        lc.record(col <= 1e-12, col, f"n={n} column sum={col:.3e}")

    shifted = [ConstantInput(float(v)) for v in rng.uniform(-5, 5, cfg.m)]
    s_dx, _ = derivative_agent_form(g, gains, cfg, shifted, s)
    idle = [i for i in range(n) if not cfg.attachments(i)]
    if idle:
        d = np.abs(s_dx[idle] - a_dx[idle]).max()
        passive.record(d == 0.0, d)


def run_properties(trials: int = 200, seed: int = 0) -> list[PropertyResult]:
    """Run every randomized property ``trials`` times from ``seed``."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    rng = np.random.default_rng(seed)
    names = ["laplacian-kernel", "pseudoinverse-identity", "pseudoinverse-symmetry",
             "grounded-positive-definite", "connectivity-bfs-vs-spectral",
             "agent-vs-compact-form", "unweighted-recovery", "lc-column-sums", "passive-agents"]
    res = {k: PropertyResult(k) for k in names}
    for _ in range(trials):
        n = int(rng.integers(N_MIN, N_MAX + 1))
        g = random_connected_graph(n, rng, p=float(rng.uniform(0.05, 0.6)))
        check_laplacian_kernel(g, res["laplacian-kernel"])
        check_pseudoinverse(g, res["pseudoinverse-identity"], res["pseudoinverse-symmetry"])
        check_grounded_definite(g, rng, res["grounded-positive-definite"])
        check_connectivity(rng, res["connectivity-bfs-vs-spectral"])
        check_forms(rng, res["agent-vs-compact-form"], res["unweighted-recovery"],
                    res["lc-column-sums"], res["passive-agents"])
    return list(res.values())
