"""Flat ``key = value`` scenario files.

Grammar::

    # comment to end of line
    section.key = value
    list.key    = 0.005, 0.01, 0.02
    epsilon     = 4h              # multiples of the grid spacing, or plain numbers
    diagnostics.poles = 0.5 0.5 0.03125; 0.6 0.5 0.03125

Keys are unique.  ``geometry.*`` and ``transport.params.*`` are open
namespaces checked by the objects they build; every other key must appear
in :data:`SCHEMA`.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigInvalid

_EPS_RE = re.compile(r"^\s*([0-9.eE+-]+)\s*h\s*$")


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.replace(",", " ").split()]


def _dt(text: str):
    return "auto" if text.strip().lower() == "auto" else float(text)


def _eps_entries(text: str) -> list[str]:
    items = [v.strip() for v in text.split(",") if v.strip()]
    for v in items:
        if not _EPS_RE.match(v):
            float(v)
    return items


def _poles(text: str):
    if text.strip().lower() in ("auto", "none", ""):
        return text.strip().lower() or "none"
    out = []
    for chunk in text.split(";"):
        vals = _floats(chunk)
        if len(vals) < 2:
            raise ValueError(f"pole {chunk!r} needs coordinates and a time")
        out.append((tuple(vals[:-1]), vals[-1]))
    return out


def _text(text: str) -> str:
    return text.strip()


# key -> (parser, default)
SCHEMA: dict[str, tuple] = {
    "name": (_text, "scenario"),
    "well": (_text, "quartic"),
    "epsilon": (_eps_entries, ["4h"]),
    "output_dir": (_text, ""),
    "grid.dim": (int, 2),
    "grid.resolution": (int, 256),
    "geometry.kind": (_text, "circle"),
    "transport.kind": (_text, "zero"),
    "transport.p": (float, 4.0),
    "transport.q": (float, 4.0),
    "transport.beta": (float, 0.25),
    "transport.files": (_text, ""),
    "solver.scheme": (_text, "explicit"),
    "solver.dt": (_dt, "auto"),
    "solver.t_end": (float, 0.02),
    "solver.cfl_safety": (float, 0.5),
    "solver.snapshot_times": (_floats, [0.005, 0.01, 0.02]),
    "solver.upwind": (_bool, False),
    "diagnostics.times": (_floats, []),
    "diagnostics.poles": (_poles, "auto"),
    "diagnostics.audit_window": (_floats, [0.001, 0.02]),
    "diagnostics.audit_snapshots": (int, 16),
    "diagnostics.tail_constant": (float, 1.0),
    "diagnostics.density_radii": (_floats, []),
    "diagnostics.theta_radius_eps": (float, 10.0),
    "diagnostics.theta_probes": (int, 8),
    "diagnostics.dump_fields": (_bool, True),
    "diagnostics.interface_csv": (_bool, True),
    "diagnostics.brakke_tests": (_text, "one, cos_x1"),
    "checks.radius_law": (_bool, False),
    "checks.radius_times": (_floats, []),
    "checks.radius_tol": (float, 0.02),
    "checks.translation": (_bool, False),
    "checks.translation_tol": (float, 0.02),
    "checks.plane": (_bool, False),
    "checks.plane_front_tol_h": (float, 1.5),
    "checks.plane_shape_tol": (float, 5e-3),
    "checks.plane_drift_tol": (float, -1.0),
    "checks.audit": (_bool, True),
    "checks.audit_tol": (float, 2e-3),
    "checks.theta": (_bool, False),
    "checks.theta_range": (_floats, [0.9, 1.1]),
    "checks.theta_t_max": (float, -1.0),
    "sweep.resolution": (_floats, []),
    "sweep.xi_time": (float, 0.005),
}

OPEN_PREFIXES = ("geometry.", "transport.params.")


@dataclass
class ScenarioConfig:
    values: dict = field(default_factory=dict)
    source: str = "<defaults>"

    def __getitem__(self, key):
        if key in self.values:
            return self.values[key]
        return SCHEMA[key][1]

    def get(self, key, default=None):
        if key in self.values:
            return self.values[key]
        if key in SCHEMA:
            return SCHEMA[key][1]
        return default

    def prefixed(self, prefix: str) -> dict:
        return {k[len(prefix):]: v for k, v in self.values.items() if k.startswith(prefix)}

    def with_values(self, **updates) -> "ScenarioConfig":
        vals = dict(self.values)
        for k, v in updates.items():
            vals[k.replace("__", ".")] = v
        return ScenarioConfig(vals, self.source)

    # -- epsilon handling ----------------------------------------------

    def epsilons(self, resolutions: list[int] | None = None) -> list[float]:
        entries = self["epsilon"]
        res = resolutions or [self["grid.resolution"]] * len(entries)
        return [resolve_epsilon(e, r) for e, r in zip(entries, res)]

    def sweep_resolutions(self) -> list[int]:
        n = len(self["epsilon"])
        given = self["sweep.resolution"]
        if not given:
            return [self["grid.resolution"]] * n
        return [int(r) for r in given]


def resolve_epsilon(entry, resolution: int) -> float:
    if isinstance(entry, (int, float)):
        return float(entry)
    m = _EPS_RE.match(entry)
    if m:
        return float(m.group(1)) / resolution
    return float(entry)


def _parse_open(text: str):
    text = text.strip()
    try:
        vals = _floats(text)
    except ValueError:
        return text
    if len(vals) == 1 and "," not in text:
        return vals[0]
    return vals


def parse_config(text: str, source: str = "<string>") -> ScenarioConfig:
    values: dict = {}
    errors: list[str] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            errors.append(f"{source}:{lineno}: expected 'key = value'")
            continue
        key, val = (s.strip() for s in line.split("=", 1))
        if key in values:
            errors.append(f"{source}:{lineno}: duplicate key {key!r}")
            continue
        if key in SCHEMA:
            try:
                values[key] = SCHEMA[key][0](val)
            except (ValueError, TypeError) as exc:
                errors.append(f"{source}:{lineno}: {key}: {exc}")
        elif key.startswith(OPEN_PREFIXES):
            values[key] = _parse_open(val)
        else:
            errors.append(f"{source}:{lineno}: unknown key {key!r}")
    cfg = ScenarioConfig(values, source)
    errors.extend(validate(cfg))
    if errors:
        raise ConfigInvalid(errors)
    return cfg


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigInvalid([f"{path}: {exc.strerror}"]) from exc
    return parse_config(text, str(path))


def validate(cfg: ScenarioConfig) -> list[str]:
    """Field-level problems that need no simulation objects."""
    errs = []
    if cfg["grid.dim"] not in (1, 2, 3):
        errs.append("grid.dim: must be 1, 2 or 3")
    if cfg["grid.resolution"] < 16:
        errs.append("grid.resolution: must be at least 16")
    if not cfg["epsilon"]:
        errs.append("epsilon: empty list")
    res = cfg.sweep_resolutions()
    if cfg["sweep.resolution"] and len(res) != len(cfg["epsilon"]):
        errs.append("sweep.resolution: needs one entry per epsilon")
    for e, r in zip(cfg["epsilon"], res):
        try:
            ratio = resolve_epsilon(e, r) * r
        except ValueError:
            errs.append(f"epsilon: cannot read {e!r}")
            continue
        if not 2.0 - 1e-9 <= ratio <= 8.0 + 1e-9:
            errs.append(f"epsilon: {e} at resolution {r} gives eps/h = {ratio:.4g}, outside [2, 8]")
    t_end = cfg["solver.t_end"]
    if t_end < 0:
        errs.append("solver.t_end: must be non-negative")
    snaps = cfg["solver.snapshot_times"]
    if any(b <= a for a, b in zip(snaps, snaps[1:])):
        errs.append("solver.snapshot_times: must be strictly increasing")
    if snaps and snaps[-1] > t_end * (1 + 1e-12):
        errs.append(f"solver.snapshot_times: last time {snaps[-1]} exceeds t_end {t_end}")
    diag = cfg["diagnostics.times"]
    if any(b <= a for a, b in zip(diag, diag[1:])):
        errs.append("diagnostics.times: must be strictly increasing")
    if diag and diag[-1] > t_end * (1 + 1e-12):
        errs.append("diagnostics.times: last time exceeds t_end")
    if cfg["solver.scheme"] not in ("explicit", "semi_implicit"):
        errs.append("solver.scheme: must be explicit or semi_implicit")
    if not 0.0 < cfg["solver.cfl_safety"] <= 1.0:
        errs.append("solver.cfl_safety: must lie in (0, 1]")
    if not 0.0 < cfg["transport.beta"] < 0.5:
        errs.append("transport.beta: must lie in (0, 1/2)")
    win = cfg["diagnostics.audit_window"]
    if len(win) != 2 or not win[0] < win[1]:
        errs.append("diagnostics.audit_window: needs t0 < t1")
    return errs


def format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple)):
        if v and isinstance(v[0], tuple):
            return "; ".join(" ".join(format_value(x) for x in c) + f" {format_value(s)}" for c, s in v)
        return ", ".join(format_value(x) for x in v)
    return str(v)


def dump_config(cfg: ScenarioConfig | None = None) -> str:
    """Every schema key with its effective value, then the open namespaces."""
    cfg = cfg or ScenarioConfig()
    lines = []
    for key in SCHEMA:
        lines.append(f"{key} = {format_value(cfg[key])}")
    for key in sorted(k for k in cfg.values if k.startswith(OPEN_PREFIXES) and k not in SCHEMA):
        lines.append(f"{key} = {format_value(cfg.values[key])}")
    return "\n".join(lines) + "\n"
