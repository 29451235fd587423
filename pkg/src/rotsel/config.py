"""Strict YAML scenario files.

Unknown keys, missing required fields and violated constraints are reported
with the offending key and its line number. Every default that was filled
in is visible in :meth:`Scenario.resolved`, which the CLI writes into the
output metadata.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

import yaml

from .physcore import ConfigurationError, MolecularSpecies, load_species_database
from .rotor import Pulse


class ScenarioError(ValueError):
    """Invalid scenario file; the message names the key and line."""


# section -> {key: (type, default)}; a default of REQUIRED marks a mandatory key
REQUIRED = object()

SECTIONS = {
    "grid": {"t_end": (float, REQUIRED), "dt": (float, REQUIRED), "t_start": (float, 0.0)},
    "options": {
        "parity_resolved": (bool, False),
        "distortion": (bool, True),
        "tail_eps": (float, 1e-8),
        "window": (str, "blackmanharris"),
        "rel_threshold": (float, 1e-3),
    },
    "spectrum": {"start": (float, None), "split_cm1": (float, None)},
    "plan": {"count": (int, 3), "max_den": (int, 50), "windows": (int, 1), "verify": (bool, True), "strength": (float, 1.0)},
    "scan": {
        "center_fraction": (float, 0.75),
        "half_width_fraction": (float, 0.05),
        "step_fraction": (float, 1.0 / 800),
        "second_strength": (float, None),
        "probe_periods": (float, 4.0),
        "samples_per_period": (int, 400),
    },
    "calibrate": {
        "target": (float, 0.5),
        "p_min": (float, 0.1),
        "p_max": (float, 20.0),
        "samples_per_period": (int, 2000),
        "tail_eps": (float, 1e-6),
    },
}
TOP_KEYS = {"species", "temperature", "pulses", "decay_tau", "database"} | set(SECTIONS)
SPECIES_KEYS = {"name", "weight", "B", "D", "kick_scale", "nuclear_spin", "statistics"}
PULSE_KEYS = {"time", "strength"}


@dataclass
class Scenario:
    species: List[MolecularSpecies]
    temperature: float
    pulses: List[Pulse]
    grid: Dict[str, float]
    decay_tau: float = math.inf
    options: Dict[str, Any] = field(default_factory=dict)
    spectrum: Dict[str, Any] = field(default_factory=dict)
    plan: Dict[str, Any] = field(default_factory=dict)
    scan: Dict[str, Any] = field(default_factory=dict)
    calibrate: Dict[str, Any] = field(default_factory=dict)
    source: Optional[str] = None
    notes: List[str] = field(default_factory=list)

    def times(self):
        import numpy as np

        g = self.grid
        n = int(math.floor((g["t_end"] - g["t_start"]) / g["dt"] + 1e-9))
        return g["t_start"] + g["dt"] * np.arange(n + 1)

    @property
    def weights(self) -> Dict[str, float]:
        return {s.name: s.weight for s in self.species}

    def resolved(self) -> Dict[str, Any]:
        """Plain-data view of the fully resolved scenario, defaults included."""
        return {
            "species": [
                {
                    "name": s.name,
                    "weight": s.weight,
                    "B": s.B,
                    "D": s.D,
                    "kick_scale": s.kick_scale,
                    "nuclear_spin": None if s.nuclear_spin is None else str(s.nuclear_spin),
                    "statistics": s.statistics,
                }
                for s in self.species
            ],
            "temperature": self.temperature,
            "pulses": [{"time": p.time, "strength": p.strength} for p in self.pulses],
            "grid": dict(self.grid),
            "decay_tau": "inf" if math.isinf(self.decay_tau) else self.decay_tau,
            "options": dict(self.options),
            "spectrum": dict(self.spectrum),
            "plan": dict(self.plan),
            "scan": dict(self.scan),
            "calibrate": dict(self.calibrate),
        }


def _fail(node, key, msg, source):
    line = node.start_mark.line + 1 if node is not None else "?"
    where = f"{source}:{line}" if source else f"line {line}"
    raise ScenarioError(f"{where}: {key}: {msg}")


def _scalar(node, kind, key, source):
    if not isinstance(node, yaml.ScalarNode):
        _fail(node, key, f"expected a {kind.__name__}", source)
    value = yaml.safe_load(yaml.serialize(node))
    if kind is bool:
        if not isinstance(value, bool):
            _fail(node, key, f"expected true/false, got {value!r}", source)
        return value
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            _fail(node, key, f"expected an integer, got {value!r}", source)
        return value
    if kind is float:
        if isinstance(value, str) and value.strip().lower() in ("inf", "infinity"):
            return math.inf
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            _fail(node, key, f"expected a number, got {value!r}", source)
        return float(value)
    if kind is str:
        if value is None:
            return None
        return str(value)
    return value


def _mapping(node, key, allowed, source) -> Dict[str, Any]:
    if not isinstance(node, yaml.MappingNode):
        _fail(node, key, "expected a mapping", source)
    out = {}
    for k, v in node.value:
        name = k.value
        if name not in allowed:
            _fail(k, f"{key}.{name}" if key else name, f"unknown key (allowed: {', '.join(sorted(allowed))})", source)
        if name in out:
            _fail(k, name, "duplicate key", source)
        out[name] = (k, v)
    return out


def _section(node, name, source) -> Dict[str, Any]:
    schema = SECTIONS[name]
    items = _mapping(node, name, set(schema), source) if node is not None else {}
    out = {}
    for key, (kind, default) in schema.items():
        if key in items:
            knode, vnode = items[key]
            if isinstance(vnode, yaml.ScalarNode) and vnode.tag.endswith(":null") and default is None:
                out[key] = None
            else:
                out[key] = _scalar(vnode, kind, f"{name}.{key}", source)
        elif default is REQUIRED:
            _fail(node, f"{name}.{key}", "required key is missing", source)
        else:
            out[key] = default
    return out


def _positive(value, node, key, source, strict=True):
    if value is None:
        return
    if (strict and not value > 0) or (not strict and value < 0):
        _fail(node, key, f"must be {'positive' if strict else 'non-negative'}, got {value}", source)


def parse_scenario_text(text: str, source: Optional[str] = None) -> Scenario:
    try:
        root = yaml.compose(text)
    except yaml.YAMLError as exc:
        raise ScenarioError(f"{source or '<text>'}: YAML syntax error: {exc}") from None
    if root is None:
        raise ScenarioError(f"{source or '<text>'}: empty scenario")
    top = _mapping(root, "", TOP_KEYS, source)
    for req in ("species", "temperature", "grid"):
        if req not in top:
            _fail(root, req, "required key is missing", source)

    notes: List[str] = []
    db_path = None
    if "database" in top:
        db_path = _scalar(top["database"][1], str, "database", source)
        if source and not Path(db_path).is_absolute():
            db_path = str(Path(source).parent / db_path)
    try:
        database = load_species_database(db_path)
    except (OSError, ConfigurationError) as exc:
        _fail(top.get("database", (None, None))[1], "database", str(exc), source)

    options = _section(top.get("options", (None, None))[1], "options", source)
    onode = top.get("options", (root, root))[1]
    if not 0 < options["tail_eps"] < 1e-3:
        _fail(onode, "options.tail_eps", "must lie in (0, 1e-3)", source)
    if not 0 < options["rel_threshold"] < 1:
        _fail(onode, "options.rel_threshold", "must lie in (0, 1)", source)
    try:
        from scipy.signal import get_window

        get_window(options["window"], 8)
    except ValueError:
        _fail(onode, "options.window", f"unknown window {options['window']!r}", source)

    snode = top["species"][1]
    if not isinstance(snode, yaml.SequenceNode) or not snode.value:
        _fail(snode, "species", "expected a non-empty list", source)
    species = []
    for i, item in enumerate(snode.value):
        key = f"species[{i}]"
        fields = _mapping(item, key, SPECIES_KEYS, source)
        if "name" not in fields:
            _fail(item, f"{key}.name", "required key is missing", source)
        vals = {}
        for k, (knode, vnode) in fields.items():
            kind = str if k in ("name", "statistics") else float
            if k == "nuclear_spin":
                vals[k] = yaml.safe_load(yaml.serialize(vnode))
                continue
            vals[k] = _scalar(vnode, kind, f"{key}.{k}", source)
        name = vals["name"]
        try:
            if "B" in vals:
                sp = MolecularSpecies(**vals)
            elif name in database:
                sp = database[name].replace(**{k: v for k, v in vals.items() if k != "name"})
            else:
                _fail(fields["name"][1], f"{key}.name", f"{name!r} is not in the species database and has no B", source)
            if not options["distortion"]:
                sp = sp.replace(D=0.0)
        except (ConfigurationError, TypeError) as exc:
            _fail(item, key, str(exc), source)
        if "weight" not in vals:
            notes.append(f"{key}: weight defaults to 1")
        species.append(sp)
    names = [s.name for s in species]
    if len(set(names)) != len(names):
        _fail(snode, "species", "species names must be unique", source)
    total = sum(s.weight for s in species)
    if not total > 0:
        _fail(snode, "species", "weights must not all be zero", source)
    if abs(total - 1.0) > 1e-12:
        before = [s.weight for s in species]
        species = [s.replace(weight=s.weight / total) for s in species]
        msg = f"weights {before} normalized to {[round(s.weight, 12) for s in species]}"
        warnings.warn(msg, UserWarning, stacklevel=2)
        notes.append(msg)

    tnode = top["temperature"][1]
    temperature = _scalar(tnode, float, "temperature", source)
    _positive(temperature, tnode, "temperature", source)

    pulses = []
    if "pulses" in top:
        pnode = top["pulses"][1]
        if not isinstance(pnode, yaml.SequenceNode):
            _fail(pnode, "pulses", "expected a list", source)
        for i, item in enumerate(pnode.value):
            key = f"pulses[{i}]"
            fields = _mapping(item, key, PULSE_KEYS, source)
            for req in PULSE_KEYS:
                if req not in fields:
                    _fail(item, f"{key}.{req}", "required key is missing", source)
            t = _scalar(fields["time"][1], float, f"{key}.time", source)
            p = _scalar(fields["strength"][1], float, f"{key}.strength", source)
            _positive(t, fields["time"][1], f"{key}.time", source, strict=False)
            _positive(p, fields["strength"][1], f"{key}.strength", source, strict=False)
            pulses.append(Pulse(t, p))
        pulses.sort(key=lambda p: p.time)

    gnode = top["grid"][1]
    grid = _section(gnode, "grid", source)
    _positive(grid["dt"], gnode, "grid.dt", source)
    _positive(grid["t_start"], gnode, "grid.t_start", source, strict=False)
    if not grid["t_end"] > grid["t_start"]:
        _fail(gnode, "grid.t_end", "must exceed grid.t_start", source)
    if pulses and pulses[-1].time > grid["t_end"]:
        _fail(top["pulses"][1], "pulses", "pulses must lie within the time grid", source)

    decay = math.inf
    if "decay_tau" in top:
        dnode = top["decay_tau"][1]
        decay = _scalar(dnode, float, "decay_tau", source)
        _positive(decay, dnode, "decay_tau", source)

    sections = {}
    for name in ("spectrum", "plan", "scan", "calibrate"):
        node = top.get(name, (None, None))[1]
        sections[name] = _section(node, name, source)
        for key, value in sections[name].items():
            if isinstance(value, (int, float)) and not isinstance(value, bool) and key not in ("start",):
                _positive(value, node or root, f"{name}.{key}", source)
    if sections["plan"]["max_den"] < 2:
        _fail(top.get("plan", (root, root))[1], "plan.max_den", "must be >= 2", source)

    return Scenario(
        species=species,
        temperature=temperature,
        pulses=pulses,
        grid=grid,
        decay_tau=decay,
        options=options,
        source=source,
        notes=notes,
        **sections,
    )


def parse_scenario(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ScenarioError(f"{path}: file not found") from None
    except UnicodeDecodeError as exc:
        raise ScenarioError(f"{path}: not valid UTF-8 ({exc})") from None
    return parse_scenario_text(text, str(path))
