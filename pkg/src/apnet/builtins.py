"""Built-in scenarios: the two illustrative examples plus helper cases."""
from __future__ import annotations

from typing import Callable

from .graph import grid_graph, path_graph
from .network import Gains, WeightConfig
from .signals import (Accuracy, ConstantInput, ConstantWeight, DistanceWeight, SinusoidInput,
                      Target, TargetPath, TargetTrackInput)
from .sim import Scenario

# Two static targets, four agents on a line; agents 1 and 2 are active.
FIG2_AGENTS = ((0.0, 0.0), (1.0, 0.0), (2.0, 0.0), (3.0, 0.0))
FIG2_TARGETS = (
    Target(TargetPath("static", (0.0, 1.0)), 1.0),
    Target(TargetPath("static", (1.0, 1.0)), 2.0),
)
FIG2_GAINS = Gains(alpha=5.0, gamma=10.0, sigma=0.0)

# Moving target over nine agents on a 3x3 grid.
FIG4_SPACING = 1.0
FIG4_AGENTS = tuple((0.5 + c * FIG4_SPACING, 0.5 + r * FIG4_SPACING)
                    for r in range(3) for c in range(3))
FIG4_TARGET = Target(TargetPath("circle", (1.5, 1.5), radius=1.0, period=20.0), "x")
FIG4_RADIUS = 1.2
FIG4_ACCURACY = Accuracy("distance", scale=4.0)
FIG4_GAINS = Gains(alpha=20.0, gamma=150.0, sigma=0.1)


def fig2(heterogeneous: bool) -> Scenario:
    t1, t2 = FIG2_TARGETS
    p1, p2 = FIG2_AGENTS[0], FIG2_AGENTS[1]
    inputs = (
        TargetTrackInput(t1, Accuracy(value=1.0), p1),   # node 1 sees target 1 perfectly
        TargetTrackInput(t2, Accuracy(value=0.5), p1),   # node 1 sees target 2 at 50%
        TargetTrackInput(t1, Accuracy(value=0.5), p2),   # node 2 sees target 1 at 50%
        TargetTrackInput(t2, Accuracy(value=1.0), p2),   # node 2 sees target 2 perfectly
    )
    low = 0.1 if heterogeneous else 1.0
    weights = WeightConfig(4, 4, {
        (0, 0): ConstantWeight(1.0),
        (0, 1): ConstantWeight(low),
        (1, 2): ConstantWeight(low),
        (1, 3): ConstantWeight(1.0),
    })
    name = "fig2-heterogeneous" if heterogeneous else "fig2-identical"
    return Scenario(path_graph(4), FIG2_GAINS, inputs, weights,
                    duration=10.0, dt=1e-3, record_stride=1, name=name)


def fig4(heterogeneous: bool) -> Scenario:
    inputs = tuple(TargetTrackInput(FIG4_TARGET, FIG4_ACCURACY, p) for p in FIG4_AGENTS)
    if heterogeneous:
        entries = {(i, i): DistanceWeight(FIG4_RADIUS, p, FIG4_TARGET)
                   for i, p in enumerate(FIG4_AGENTS)}
    else:
        entries = {(i, i): ConstantWeight(1.0) for i in range(9)}
    name = "fig4-heterogeneous" if heterogeneous else "fig4-identical"
    return Scenario(grid_graph(3, 3), FIG4_GAINS, inputs, WeightConfig(9, 9, entries),
                    duration=60.0, dt=1e-3, record_stride=10, name=name)


def corollary3() -> Scenario:
    """Constant inputs and weights, no leakage, nonzero initial conditions."""
    return fig2(True).replace(x0=[3.0, -1.0, 0.0, 2.0], xi0=[0.5, -0.5, 1.0, 0.0],
                              duration=30.0, record_stride=10, name="corollary-3")


def sinusoid() -> Scenario:
    """Smooth time-varying inputs with constant weights, for step audits."""
    inputs = (
        SinusoidInput(amplitude=1.0, frequency=0.2, offset=1.0),
        SinusoidInput(amplitude=0.5, frequency=0.35, phase=1.0, offset=2.0),
    )
    weights = WeightConfig(4, 2, {
        (0, 0): ConstantWeight(0.8),
        (2, 0): ConstantWeight(0.3),
        (3, 1): ConstantWeight(1.0),
    })
    return Scenario(path_graph(4), Gains(2.0, 4.0, 0.5), inputs, weights,
                    x0=[0.5, -0.5, 0.0, 1.0], duration=5.0, dt=0.02, name="sinusoid")


BUILTINS: dict[str, Callable[[], Scenario]] = {
    "fig2-identical": lambda: fig2(False),
    "fig2-heterogeneous": lambda: fig2(True),
    "fig4-identical": lambda: fig4(False),
    "fig4-heterogeneous": lambda: fig4(True),
    "corollary-3": corollary3,
    "sinusoid": sinusoid,
}


def builtin(name: str) -> Scenario:
    try:
        return BUILTINS[name]()
    except KeyError:
        raise KeyError(f"unknown builtin {name!r}; choose from {', '.join(BUILTINS)}") from None
