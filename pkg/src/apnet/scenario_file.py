"""JSON scenario files.

Agent, input, target and edge endpoint numbers are 1-based in files and
0-based in memory. Every validation failure raises
:class:`~apnet.errors.ScenarioError` carrying a path such as
``weights[2].signal.value``.
"""
from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any

from .errors import GraphError, ScenarioError
from .graph import build_graph
from .network import Gains, WeightConfig
from .signals import (Accuracy, ConstantInput, ConstantWeight, DistanceWeight,
                      PiecewiseLinearInput, PiecewiseLinearWeight, SinusoidInput, Target,
                      TargetPath, TargetTrackInput)
from .sim import Scenario


def _req(obj: dict, key: str, path: str):
    if not isinstance(obj, dict):
        raise ScenarioError(path, "expected an object")
    if key not in obj:
        raise ScenarioError(f"{path}.{key}" if path else key, "missing")
    return obj[key]


def _num(v, path: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ScenarioError(path, f"expected a finite number, got {v!r}")
    return float(v)


def _int(v, path: str) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise ScenarioError(path, f"expected an integer, got {v!r}")
    return v


def _point(v, path: str) -> tuple[float, float]:
    if not isinstance(v, (list, tuple)) or len(v) != 2:
        raise ScenarioError(path, "expected [x, y]")
    return (_num(v[0], f"{path}[0]"), _num(v[1], f"{path}[1]"))


def _vector(v, n: int, path: str) -> list[float]:
    if not isinstance(v, list) or len(v) != n:
        raise ScenarioError(path, f"expected a list of {n} numbers")
    return [_num(x, f"{path}[{i}]") for i, x in enumerate(v)]


def _breakpoints(v, path: str):
    if not isinstance(v, list) or not v:
        raise ScenarioError(path, "expected a non-empty list of [time, value] pairs")
    return [_point(p, f"{path}[{i}]") for i, p in enumerate(v)]


def _build(factory, path: str, *args, **kwargs):
    try:
        return factory(*args, **kwargs)
    except ValueError as exc:
        raise ScenarioError(path, str(exc)) from None


def _target(spec, table: list[Target], path: str) -> Target:
    if isinstance(spec, int) and not isinstance(spec, bool):
        if not 1 <= spec <= len(table):
            raise ScenarioError(path, f"target index {spec} outside 1..{len(table)}")
        return table[spec - 1]
    p = _req(spec, "path", path)
    kind = _req(p, "kind", f"{path}.path")
    center = _point(_req(p, "center", f"{path}.path"), f"{path}.path.center")
    extra = {k: _num(p[k], f"{path}.path.{k}") for k in ("radius", "period", "phase") if k in p}
    tp = _build(TargetPath, f"{path}.path", kind, center, **extra)
    q = _req(spec, "quantity", path)
    q = q if isinstance(q, str) else _num(q, f"{path}.quantity")
    return _build(Target, path, tp, q)


def _accuracy(spec, path: str) -> Accuracy:
    if spec is None:
        return Accuracy()
    if not isinstance(spec, dict):
        return _build(Accuracy, path, "constant", _num(spec, path))
    kind = _req(spec, "kind", path)
    if kind == "distance":
        return _build(Accuracy, path, "distance", scale=_num(_req(spec, "scale", path), f"{path}.scale"))
    return _build(Accuracy, path, kind, _num(_req(spec, "value", path), f"{path}.value"))


def _input(spec, targets, path: str):
    kind = _req(spec, "kind", path)
    if kind == "constant":
        return ConstantInput(_num(_req(spec, "value", path), f"{path}.value"))
    if kind == "sinusoid":
        kw = {k: _num(spec[k], f"{path}.{k}") for k in ("phase", "offset") if k in spec}
        return SinusoidInput(_num(_req(spec, "amplitude", path), f"{path}.amplitude"),
                             _num(_req(spec, "frequency", path), f"{path}.frequency"), **kw)
    if kind == "piecewise-linear":
        bp = _breakpoints(_req(spec, "breakpoints", path), f"{path}.breakpoints")
        return _build(PiecewiseLinearInput, f"{path}.breakpoints", bp)
    if kind == "target-track":
        tgt = _target(_req(spec, "target", path), targets, f"{path}.target")
        sensor = _point(spec.get("sensor", [0.0, 0.0]), f"{path}.sensor")
        return TargetTrackInput(tgt, _accuracy(spec.get("accuracy"), f"{path}.accuracy"), sensor)
    raise ScenarioError(f"{path}.kind", f"unknown input kind {kind!r}")


def _weight(spec, targets, path: str):
    kind = _req(spec, "kind", path)
    if kind == "constant":
        return _build(ConstantWeight, f"{path}.value", _num(_req(spec, "value", path), f"{path}.value"))
    if kind == "piecewise-linear":
        bp = _breakpoints(_req(spec, "breakpoints", path), f"{path}.breakpoints")
        return _build(PiecewiseLinearWeight, f"{path}.breakpoints", bp)
    if kind == "distance-based":
        tgt = _target(_req(spec, "target", path), targets, f"{path}.target")
        pos = _point(_req(spec, "position", path), f"{path}.position")
        return _build(DistanceWeight, path, _num(_req(spec, "radius", path), f"{path}.radius"), pos, tgt)
    raise ScenarioError(f"{path}.kind", f"unknown weight kind {kind!r}")


def scenario_from_dict(doc: dict[str, Any]) -> Scenario:
    if not isinstance(doc, dict):
        raise ScenarioError("", "scenario document must be a JSON object")
    gdoc = _req(doc, "graph", "")
    n = _int(_req(gdoc, "n", "graph"), "graph.n")
    edges = _req(gdoc, "edges", "graph")
    if not isinstance(edges, list):
        raise ScenarioError("graph.edges", "expected a list of [i, j] pairs")
    pairs = []
    for k, e in enumerate(edges):
        if not isinstance(e, list) or len(e) != 2:
            raise ScenarioError(f"graph.edges[{k}]", "expected [i, j]")
        pairs.append((_int(e[0], f"graph.edges[{k}][0]") - 1, _int(e[1], f"graph.edges[{k}][1]") - 1))
    try:
        graph = build_graph(n, pairs)
    except GraphError as exc:
        raise ScenarioError("graph", str(exc)) from None

    gd = _req(doc, "gains", "")
    gains = _build(Gains, "gains", _num(_req(gd, "alpha", "gains"), "gains.alpha"),
                   _num(_req(gd, "gamma", "gains"), "gains.gamma"),
                   _num(gd.get("sigma", 0.0), "gains.sigma"))

    targets: list[Target] = []
    for k, t in enumerate(doc.get("targets", [])):
        targets.append(_target(t, [], f"targets[{k}]"))

    inputs_doc = _req(doc, "inputs", "")
    if not isinstance(inputs_doc, list) or not inputs_doc:
        raise ScenarioError("inputs", "expected a non-empty list")
    inputs = [_input(s, targets, f"inputs[{k}]") for k, s in enumerate(inputs_doc)]
    if len(inputs) > n:
        raise ScenarioError("inputs", f"{len(inputs)} inputs exceed {n} agents")

    wdoc = _req(doc, "weights", "")
    if not isinstance(wdoc, list) or not wdoc:
        raise ScenarioError("weights", "expected a non-empty list")
    entries = {}
    for k, w in enumerate(wdoc):
        path = f"weights[{k}]"
        i = _int(_req(w, "agent", path), f"{path}.agent")
        h = _int(_req(w, "input", path), f"{path}.input")
        if not 1 <= i <= n:
            raise ScenarioError(f"{path}.agent", f"agent {i} outside 1..{n}")
        if not 1 <= h <= len(inputs):
            raise ScenarioError(f"{path}.input", f"input {h} outside 1..{len(inputs)}")
        if (i - 1, h - 1) in entries:
            raise ScenarioError(path, f"duplicate entry for agent {i}, input {h}")
        entries[(i - 1, h - 1)] = _weight(_req(w, "signal", path), targets, f"{path}.signal")
    weights = _build(WeightConfig, "weights", n, len(inputs), entries)

    init = doc.get("init", {})
    x0 = _vector(init["x0"], n, "init.x0") if "x0" in init else None
    xi0 = _vector(init["xi0"], n, "init.xi0") if "xi0" in init else None
    sd = _req(doc, "sim", "")
    duration = _num(_req(sd, "duration", "sim"), "sim.duration")
    dt = _num(sd.get("dt", 1e-3), "sim.dt")
    stride = _int(sd.get("record_stride", 1), "sim.record_stride")
    return Scenario(graph, gains, inputs, weights, x0=x0, xi0=xi0, duration=duration, dt=dt,
                    record_stride=stride, name=str(doc.get("name", "")))


def load_scenario(path) -> Scenario:
    """Read a scenario file. I/O failures propagate as ``OSError``."""
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}:{exc.lineno}:{exc.colno}", exc.msg) from None
    return scenario_from_dict(doc)


# -- serialization -----------------------------------------------------------

def _target_doc(t: Target) -> dict:
    p = t.path
    path = {"kind": p.kind, "center": list(p.center)}
    if p.kind == "circle":
        path.update(radius=p.radius, period=p.period, phase=p.phase)
    return {"path": path, "quantity": t.quantity}


def scenario_to_dict(sc: Scenario) -> dict[str, Any]:
    targets: list[Target] = []

    def ref(t: Target) -> int:
        if t not in targets:
            targets.append(t)
        return targets.index(t) + 1

    def acc_doc(a: Accuracy):
        return a.value if a.kind == "constant" else {"kind": "distance", "scale": a.scale}

    inputs = []
    for s in sc.inputs:
        if isinstance(s, ConstantInput):
            inputs.append({"kind": s.kind, "value": s.value})
        elif isinstance(s, SinusoidInput):
            inputs.append({"kind": s.kind, "amplitude": s.amplitude, "frequency": s.frequency,
                           "phase": s.phase, "offset": s.offset})
        elif isinstance(s, PiecewiseLinearInput):
            inputs.append({"kind": s.kind, "breakpoints": [list(p) for p in s.breakpoints]})
        else:
            inputs.append({"kind": s.kind, "target": ref(s.target), "accuracy": acc_doc(s.accuracy),
                           "sensor": list(s.sensor)})
    weights = []
    for (i, h), w in sc.weights.entries.items():
        if isinstance(w, ConstantWeight):
            sig = {"kind": w.kind, "value": w.value}
        elif isinstance(w, PiecewiseLinearWeight):
            sig = {"kind": w.kind, "breakpoints": [list(p) for p in w.breakpoints]}
        else:
            sig = {"kind": w.kind, "radius": w.radius, "position": list(w.position),
                   "target": ref(w.target)}
        weights.append({"agent": i + 1, "input": h + 1, "signal": sig})
    doc = {
        "name": sc.name,
        "graph": {"n": sc.n, "edges": [[i + 1, j + 1] for i, j in sc.graph.edges]},
        "gains": {"alpha": sc.gains.alpha, "gamma": sc.gains.gamma, "sigma": sc.gains.sigma},
    }
    if targets:
        doc["targets"] = [_target_doc(t) for t in targets]
    doc.update({
        "inputs": inputs,
        "weights": weights,
        "init": {"x0": sc.x0.tolist(), "xi0": sc.xi0.tolist()},
        "sim": {"duration": sc.duration, "dt": sc.dt, "record_stride": sc.record_stride},
    })
    return doc


def dump_scenario(sc: Scenario, path) -> None:
    Path(path).write_text(json.dumps(scenario_to_dict(sc), indent=2) + "\n")
