"""Time signals driving the network: sensed inputs c_h(t) and weights w_ih(t).

Every signal is callable on a scalar time or on an array of times and
returns a float or an array of matching shape. ``is_constant`` lets the
integrator switch to its time-invariant fast path.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import ClassVar, Union

import numpy as np

Number = Union[float, np.ndarray]


def _out(t, value):
    """Broadcast ``value`` to the shape of ``t``; scalars stay Python floats."""
    if np.ndim(t) == 0:
        return float(value)
    return np.broadcast_to(np.asarray(value, dtype=float), np.shape(t)).copy()


def _check_breakpoints(breakpoints) -> tuple[tuple[float, float], ...]:
    pts = tuple((float(t), float(v)) for t, v in breakpoints)
    if not pts:
        raise ValueError("piecewise-linear signal needs at least one breakpoint")
    times = [t for t, _ in pts]
    if any(b <= a for a, b in zip(times, times[1:])):
        raise ValueError("breakpoint times must be strictly increasing")
    return pts


# -- target geometry --------------------------------------------------------

@dataclass(frozen=True)
class TargetPath:
    """Planar target motion: ``static`` at ``center`` or a ``circle`` about it."""

    kind: str
    center: tuple[float, float]
    radius: float = 0.0
    period: float = 1.0
    phase: float = 0.0

    def __post_init__(self):
        if self.kind not in ("static", "circle"):
            raise ValueError(f"unknown target path kind {self.kind!r}")
        if self.kind == "circle" and (self.radius <= 0 or self.period <= 0):
            raise ValueError("circular path needs positive radius and period")

    @property
    def is_constant(self) -> bool:
        return self.kind == "static"

    def position(self, t):
        cx, cy = self.center
        if self.kind == "static":
            return _out(t, cx), _out(t, cy)
        ang = 2.0 * np.pi * np.asarray(t, dtype=float) / self.period + self.phase
        x = cx + self.radius * np.cos(ang)
        y = cy + self.radius * np.sin(ang)
        if np.ndim(t) == 0:
            return float(x), float(y)
        return x, y


@dataclass(frozen=True)
class Target:
    """A target and its true quantity: a number, or its ``"x"``/``"y"`` coordinate."""

    path: TargetPath
    quantity: Union[float, str]

    def __post_init__(self):
        if isinstance(self.quantity, str) and self.quantity not in ("x", "y"):
            raise ValueError(f"target quantity must be a number, 'x' or 'y', got {self.quantity!r}")

    @property
    def is_constant(self) -> bool:
        return self.path.is_constant

    def distance(self, point, t):
        x, y = self.path.position(t)
        d = np.hypot(np.asarray(x) - point[0], np.asarray(y) - point[1])
        return float(d) if np.ndim(t) == 0 else d

    def true_quantity(self, t) -> Number:
        if isinstance(self.quantity, str):
            x, y = self.path.position(t)
            return x if self.quantity == "x" else y
        return _out(t, self.quantity)


# -- inputs -----------------------------------------------------------------

@dataclass(frozen=True)
class ConstantInput:
    kind: ClassVar[str] = "constant"
    value: float
    is_constant: ClassVar[bool] = True

    def __call__(self, t):
        return _out(t, self.value)


@dataclass(frozen=True)
class SinusoidInput:
    """``offset + amplitude * sin(2*pi*frequency*t + phase)``; frequency in Hz."""

    kind: ClassVar[str] = "sinusoid"
    amplitude: float
    frequency: float
    phase: float = 0.0
    offset: float = 0.0

    @property
    def is_constant(self) -> bool:
        return self.amplitude == 0 or self.frequency == 0

    def __call__(self, t):
        v = self.offset + self.amplitude * np.sin(
            2.0 * np.pi * self.frequency * np.asarray(t, dtype=float) + self.phase)
        return float(v) if np.ndim(t) == 0 else v


@dataclass(frozen=True)
class PiecewiseLinearInput:
    """Linear interpolation between ``(time, value)`` breakpoints, held flat outside."""

    kind: ClassVar[str] = "piecewise-linear"
    breakpoints: tuple[tuple[float, float], ...]

    def __post_init__(self):
        object.__setattr__(self, "breakpoints", _check_breakpoints(self.breakpoints))

    @property
    def is_constant(self) -> bool:
        return len({v for _, v in self.breakpoints}) == 1

    def __call__(self, t):
        ts, vs = zip(*self.breakpoints)
        v = np.interp(t, ts, vs)
        return float(v) if np.ndim(t) == 0 else v


@dataclass(frozen=True)
class Accuracy:
    """Multiplicative measurement accuracy.

    ``constant``: fixed ``value``; ``distance``: ``exp(-d / scale)`` where
    ``d`` is the sensor-target distance.
    """

    kind: str = "constant"
    value: float = 1.0
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in ("constant", "distance"):
            raise ValueError(f"unknown accuracy kind {self.kind!r}")
        if self.kind == "distance" and self.scale <= 0:
            raise ValueError("accuracy scale must be positive")

    def __call__(self, d):
        if self.kind == "constant":
            return _out(d, self.value)
        a = np.exp(-np.asarray(d, dtype=float) / self.scale)
        return float(a) if np.ndim(d) == 0 else a


@dataclass(frozen=True)
class TargetTrackInput:
    """Sensed value ``accuracy(d) * q(t)`` of a target seen from ``sensor``."""

    kind: ClassVar[str] = "target-track"
    target: Target
    accuracy: Accuracy = Accuracy()
    sensor: tuple[float, float] = (0.0, 0.0)

    @property
    def is_constant(self) -> bool:
        return self.target.is_constant

    def __call__(self, t):
        d = self.target.distance(self.sensor, t)
        return self.accuracy(d) * self.target.true_quantity(t)


InputSignal = Union[ConstantInput, SinusoidInput, PiecewiseLinearInput, TargetTrackInput]


# -- weights ----------------------------------------------------------------

@dataclass(frozen=True)
class ConstantWeight:
    kind: ClassVar[str] = "constant"
    is_constant: ClassVar[bool] = True
    value: float

    def __post_init__(self):
        if not 0.0 <= self.value <= 1.0:
            raise ValueError(f"weight {self.value} outside [0, 1]")

    def __call__(self, t):
        return _out(t, self.value)


@dataclass(frozen=True)
class PiecewiseLinearWeight:
    kind: ClassVar[str] = "piecewise-linear"
    breakpoints: tuple[tuple[float, float], ...]

    def __post_init__(self):
        pts = _check_breakpoints(self.breakpoints)
        if any(not 0.0 <= v <= 1.0 for _, v in pts):
            raise ValueError("weight breakpoints must lie in [0, 1]")
        object.__setattr__(self, "breakpoints", pts)

    @property
    def is_constant(self) -> bool:
        return len({v for _, v in self.breakpoints}) == 1

    def __call__(self, t):
        ts, vs = zip(*self.breakpoints)
        v = np.interp(t, ts, vs)
        return float(v) if np.ndim(t) == 0 else v


@dataclass(frozen=True)
class DistanceWeight:
    """``clip(1 - d / radius, 0, 1)`` for agent-target distance ``d``."""

    kind: ClassVar[str] = "distance-based"
    radius: float
    position: tuple[float, float]
    target: Target

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("sensing radius must be positive")

    @property
    def is_constant(self) -> bool:
        return self.target.is_constant

    def __call__(self, t):
        d = self.target.distance(self.position, t)
        w = np.clip(1.0 - np.asarray(d) / self.radius, 0.0, 1.0)
        return float(w) if np.ndim(t) == 0 else w


WeightSignal = Union[ConstantWeight, PiecewiseLinearWeight, DistanceWeight]
