"""Built-in scenario library, stored as config text."""
from __future__ import annotations

from .config import ScenarioConfig, parse_config

_CIRCLE = """
grid.dim = 2
grid.resolution = 256
epsilon = 4h
geometry.kind = circle
geometry.center = 0.5, 0.5
geometry.r0 = 0.25
"""

_PLANE = """
grid.dim = 2
grid.resolution = 256
epsilon = 8h
geometry.kind = graph
geometry.heights = 0.25, 0.25, 0.25, 0.25, 0.25, 0.25, 0.25, 0.25
geometry.width = 0.5
checks.audit = false
"""

BUILTIN: dict[str, str] = {
    "plane_stationary": _PLANE + """
name = plane_stationary
solver.t_end = 0.01
solver.snapshot_times = 0.0025, 0.005, 0.01
checks.plane = true
checks.plane_drift_tol = 1e-4
""",
    "plane_translate": _PLANE + """
name = plane_translate
transport.kind = constant
transport.params.velocity = 0.5, 0
solver.t_end = 0.02
solver.snapshot_times = 0.005, 0.01, 0.02
checks.plane = true
""",
    "circle_shrink": _CIRCLE + """
name = circle_shrink
solver.t_end = 0.025
solver.snapshot_times = 0.005, 0.01, 0.015, 0.02, 0.025
checks.radius_law = true
checks.radius_times = 0.005, 0.01, 0.02
checks.theta = true
""",
    "circle_transport": _CIRCLE + """
name = circle_transport
transport.kind = constant
transport.params.velocity = 0.5, 0
solver.t_end = 0.02
solver.snapshot_times = 0.005, 0.01, 0.02
checks.radius_law = true
checks.translation = true
""",
    "two_circles_disjoint": """
name = two_circles_disjoint
grid.dim = 2
grid.resolution = 256
epsilon = 4h
geometry.kind = two_circles
geometry.c1 = 0.25, 0.5
geometry.r1 = 0.125
geometry.c2 = 0.75, 0.5
geometry.r2 = 0.125
solver.t_end = 0.006
solver.snapshot_times = 0.002, 0.004, 0.006
diagnostics.audit_window = 0.0005, 0.006
checks.radius_law = true
checks.radius_tol = 0.03
""",
    "annulus_collapse": """
name = annulus_collapse
grid.dim = 2
grid.resolution = 256
epsilon = 4h
geometry.kind = annulus
geometry.center = 0.5, 0.5
geometry.r_in = 0.15
geometry.r_out = 0.38
solver.t_end = 0.014
solver.snapshot_times = 0.002, 0.004, 0.006, 0.008, 0.01, 0.012, 0.014
diagnostics.poles = none
checks.theta = true
""",
    "sphere_shrink": """
name = sphere_shrink
grid.dim = 3
grid.resolution = 128
epsilon = 4h
geometry.kind = sphere
geometry.center = 0.5, 0.5, 0.5
geometry.r0 = 0.25
solver.t_end = 0.004
solver.snapshot_times = 0.002, 0.004
diagnostics.poles = none
diagnostics.interface_csv = true
checks.radius_law = true
checks.radius_tol = 0.03
""",
    "rough_u_circle": _CIRCLE + """
name = rough_u_circle
transport.kind = rough_radial
transport.p = 1.6
transport.q = 4
transport.params.amplitude = 1.0
transport.params.exponent = 0.5
transport.params.center = 0.7513, 0.4987
transport.params.r_in = 0.3
transport.params.r_out = 0.45
solver.t_end = 0.01
solver.snapshot_times = 0.0025, 0.005, 0.0075, 0.01
diagnostics.audit_window = 0.001, 0.01
""",
}


def builtin_names() -> list[str]:
    return list(BUILTIN)


def builtin(name: str) -> ScenarioConfig:
    if name not in BUILTIN:
        raise KeyError(f"unknown built-in scenario {name!r}; choose from {', '.join(BUILTIN)}")
    return parse_config(BUILTIN[name], f"<builtin:{name}>")
