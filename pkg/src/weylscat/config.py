"""JSON system configuration: parsing and validation before any computation.

Example::

    {
      "interval": {"x_l": 0.0, "x_r": 3.141592653589793},
      "internal": {"segments": [{"width": 3.141592653589793, "m": 0.5, "v": 0.0}]},
      "leads": {"left": {"m": 0.5, "v": 0.0}, "right": {"m": 0.5, "v": 0.0}},
      "grid": {"start": 0.05, "stop": 6.0, "count": 200},
      "options": {"compare_series": true, "n_series_terms": 200}
    }

A segment is either constant ``{"width", "m", "v"}`` or sampled
``{"width", "m": [...], "v": [...], "positions": [...]}`` (positions
optional, local to the segment).  A lead may carry a ``transition`` with its
own ``segments``; the left transition ends at x_l and the right one starts
at x_r.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .errors import ConfigError, ProfileError
from .scattering import DEFAULT_SERIES_TERMS, SERIES_TOL, ScatteringSystem, SweepOptions
from .slp import DEFAULT_MESH_NODES, CoefficientProfile, ConstantSegment, SampledSegment
from .weyl import LeadSpec

_TOP_KEYS = {"interval", "internal", "leads", "grid", "options"}
_OPTION_DEFAULTS: dict[str, Any] = {
    "n_series_terms": DEFAULT_SERIES_TERMS,
    "series_tol": SERIES_TOL,
    "mesh_nodes": DEFAULT_MESH_NODES,
    "compare_series": False,
    "diagnostics": False,
    "probe_energies": None,
    "eigen_rows": 10,
    "diagnostic_energy": None,
}


@dataclass(frozen=True, eq=False)
class SystemConfig:
    system: ScatteringSystem
    grid: np.ndarray
    options: dict = field(default_factory=lambda: dict(_OPTION_DEFAULTS))
    sha256: str = ""

    @property
    def sweep_options(self) -> SweepOptions:
        o = self.options
        return SweepOptions(o["compare_series"], o["n_series_terms"], o["series_tol"], o["mesh_nodes"])


def _check_keys(obj, where: str, allowed: set[str], required: set[str] = frozenset()):
    if not isinstance(obj, dict):
        raise ConfigError(f"{where}: expected an object")
    for key in obj:
        if key not in allowed:
            raise ConfigError(f"{where}.{key}: unknown key" if where else f"{key}: unknown key")
    for key in sorted(required):
        if key not in obj:
            raise ConfigError(f"{where}.{key}: missing" if where else f"{key}: missing")


def _number(obj, key: str, where: str) -> float:
    val = obj[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)) or not math.isfinite(val):
        raise ConfigError(f"{where}.{key}: expected a finite number")
    return float(val)


def _segment(obj, where: str):
    _check_keys(obj, where, {"width", "m", "v", "positions", "h_max"}, {"width", "m", "v"})
    width = _number(obj, "width", where)
    try:
        if isinstance(obj["m"], list) or isinstance(obj["v"], list):
            return SampledSegment(width, obj["m"], obj["v"], obj.get("positions"), obj.get("h_max"))
        if "positions" in obj:
            raise ConfigError(f"{where}.positions: only valid for sampled segments")
        return ConstantSegment(width, _number(obj, "m", where), _number(obj, "v", where))
    except (ProfileError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{where}: {exc}") from None


def _segments(obj, where: str) -> list:
    _check_keys(obj, where, {"segments"}, {"segments"})
    segs = obj["segments"]
    if not isinstance(segs, list) or not segs:
        raise ConfigError(f"{where}.segments: expected a non-empty list")
    return [_segment(s, f"{where}.segments[{i}]") for i, s in enumerate(segs)]


def _lead(obj, side: str, x_end: float) -> LeadSpec:
    where = f"leads.{side}"
    _check_keys(obj, where, {"m", "v", "transition"}, {"m", "v"})
    m, v = _number(obj, "m", where), _number(obj, "v", where)
    if m <= 0:
        raise ConfigError(f"{where}.m: must be > 0")
    transition = None
    if "transition" in obj:
        segs = _segments(obj["transition"], f"{where}.transition")
        total = sum(s.width for s in segs)
        a, b = (x_end - total, x_end) if side == "left" else (x_end, x_end + total)
        try:
            transition = CoefficientProfile(a, b, tuple(segs))
        except ProfileError as exc:
            raise ConfigError(f"{where}.transition: {exc}") from None
    return LeadSpec(side, m, v, transition)


def _grid(obj) -> np.ndarray:
    if isinstance(obj, dict) and "values" in obj:
        _check_keys(obj, "grid", {"values"})
        vals = obj["values"]
        if not isinstance(vals, list) or not vals:
            raise ConfigError("grid.values: expected a non-empty list")
        try:
            grid = np.array(vals, dtype=float)
        except (TypeError, ValueError):
            raise ConfigError("grid.values: expected numbers") from None
    else:
        _check_keys(obj, "grid", {"start", "stop", "count"}, {"start", "stop", "count"})
        count = obj["count"]
        if isinstance(count, bool) or not isinstance(count, int) or count < 1:
            raise ConfigError("grid.count: expected a positive integer")
        grid = np.linspace(_number(obj, "start", "grid"), _number(obj, "stop", "grid"), count)
    if not np.all(np.isfinite(grid)):
        raise ConfigError("grid: energies must be finite")
    if np.any(np.diff(grid) < 0):
        raise ConfigError("grid: energies must be sorted")
    return grid


def _options(obj) -> dict:
    _check_keys(obj, "options", set(_OPTION_DEFAULTS))
    opts = dict(_OPTION_DEFAULTS)
    opts.update(obj)
    for key in ("n_series_terms", "mesh_nodes", "eigen_rows"):
        val = opts[key]
        if isinstance(val, bool) or not isinstance(val, int) or val < 1:
            raise ConfigError(f"options.{key}: expected a positive integer")
    if opts["mesh_nodes"] < 3:
        raise ConfigError("options.mesh_nodes: need at least 3 nodes")
    for key in ("compare_series", "diagnostics"):
        if not isinstance(opts[key], bool):
            raise ConfigError(f"options.{key}: expected true or false")
    if not _number(opts, "series_tol", "options") > 0:
        raise ConfigError("options.series_tol: must be > 0")
    if opts["diagnostic_energy"] is not None:
        _number(opts, "diagnostic_energy", "options")
    probes = opts["probe_energies"]
    if probes is not None:
        if not isinstance(probes, list) or not all(isinstance(p, (int, float)) and not isinstance(p, bool) for p in probes):
            raise ConfigError("options.probe_energies: expected a list of numbers")
    return opts


def parse_config(doc: Any, sha256: str = "") -> SystemConfig:
    _check_keys(doc, "", _TOP_KEYS, {"interval", "internal", "leads", "grid"})
    interval = doc["interval"]
    _check_keys(interval, "interval", {"x_l", "x_r"}, {"x_l", "x_r"})
    x_l, x_r = _number(interval, "x_l", "interval"), _number(interval, "x_r", "interval")
    if not x_l < x_r:
        raise ConfigError("interval: x_l must be < x_r")
    segs = _segments(doc["internal"], "internal")
    try:
        profile = CoefficientProfile(x_l, x_r, tuple(segs))
    except ProfileError as exc:
        raise ConfigError(f"internal: {exc}") from None
    leads = doc["leads"]
    _check_keys(leads, "leads", {"left", "right"}, {"left", "right"})
    system = ScatteringSystem(profile, _lead(leads["left"], "left", x_l), _lead(leads["right"], "right", x_r))
    opts = _options(doc.get("options", {}))
    return SystemConfig(system, _grid(doc["grid"]), opts, sha256)


def load_config(path: str | Path) -> SystemConfig:
    raw = Path(path).read_bytes()
    try:
        doc = json.loads(raw)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ConfigError(f"config: not valid JSON ({exc})") from None
    return parse_config(doc, hashlib.sha256(raw).hexdigest())
