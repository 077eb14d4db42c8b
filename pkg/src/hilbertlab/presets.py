"""Built-in domains and group scenarios."""

from __future__ import annotations

import numpy as np

from .domains import ConvexDomain, Ellipsoid, HalfspacePolytope, PNormBall, lorentz_boost
from .errors import ConfigError
from .groups import GroupScenario
from .projective import rotation_block, sl2c_to_so31, sym_square

# ping-pong for two perpendicular axes through o needs L > 2 artanh(1/sqrt 2)
SCHOTTKY_MIN_LENGTH = 2.0 * np.arctanh(1.0 / np.sqrt(2.0))


def _disk():
    return Ellipsoid.unit_ball(2)


DOMAIN_PRESETS = {
    "disk": (_disk, "unit disk (Klein model of the hyperbolic plane)"),
    "ball-3": (lambda: Ellipsoid.unit_ball(3), "unit ball in dimension 3"),
    "ellipse": (lambda: Ellipsoid([0.0, 0.0], np.diag([0.25, 1.0])), "ellipse x^2/4 + y^2 < 1"),
    "pball-4": (lambda: PNormBall(4.0, 1.0, 2), "p-ball {|x|^4 + |y|^4 < 1}, strictly convex, not an ellipse"),
    "simplex-2": (lambda: HalfspacePolytope.simplex(2), "triangle {x > 0, y > 0, x + y < 1} (metric tests only)"),
}


def domain_preset(name: str) -> ConvexDomain:
    if name not in DOMAIN_PRESETS:
        raise ConfigError(f"unknown domain preset '{name}'", field="domain.preset")
    return DOMAIN_PRESETS[name][0]()


def hyperbolic_sl2(length: float) -> np.ndarray:
    """``diag(e^{L/2}, e^{-L/2})``; its symmetric square translates by ``L``."""
    return np.diag([np.exp(length / 2), np.exp(-length / 2)])


def schottky_pair(length: float = 2.0, angle: float = np.pi / 2, **kw) -> GroupScenario:
    """Two hyperbolic generators of translation length ``length`` with axes through o."""
    a = sym_square(hyperbolic_sl2(length))
    R = rotation_block(2, angle)
    b = R @ a @ R.T
    kw.setdefault("name", f"schottky(L={length:g})")
    kw.setdefault("prune_slack", 2.0)
    return GroupScenario(_disk(), [a, b], np.zeros(2), free_group=True, **kw)


def surface_genus2(**kw) -> GroupScenario:
    """Opposite-side pairings of the regular octagon with angles pi/4 (genus 2)."""
    r_in = np.arccosh(1.0 + np.sqrt(2.0))
    T = lorentz_boost(2, [1.0, 0.0], 2.0 * r_in)
    gens = []
    for k in range(4):
        R = rotation_block(2, k * np.pi / 4)
        gens.append(R @ T @ R.T)
    kw.setdefault("name", "surface-genus-2")
    kw.setdefault("prune_slack", 2.0)
    return GroupScenario(_disk(), gens, np.zeros(2), free_group=False, **kw)


def parabolic_rank1(**kw) -> GroupScenario:
    u = sym_square([[1.0, 1.0], [0.0, 1.0]])
    kw.setdefault("name", "parabolic-rank-1")
    kw.setdefault("max_word_length", 10**6)
    kw.setdefault("prune_slack", 2.0)
    return GroupScenario(_disk(), [u], np.zeros(2), free_group=True, **kw)


def parabolic_rank2(**kw) -> GroupScenario:
    u = sl2c_to_so31([[1.0, 1.0], [0.0, 1.0]])
    v = sl2c_to_so31([[1.0, 1.0j], [0.0, 1.0]])
    kw.setdefault("name", "parabolic-rank-2")
    kw.setdefault("max_word_length", 10**6)
    kw.setdefault("prune_slack", 2.0)
    return GroupScenario(Ellipsoid.unit_ball(3), [u, v], np.zeros(3), free_group=False, **kw)


GROUP_PRESETS = {
    "schottky-2": (lambda **kw: schottky_pair(2.0, **kw),
                   "free Schottky pair in SO(2,1), translation lengths 2, perpendicular axes through o"),
    "schottky-2-l3": (lambda **kw: schottky_pair(3.0, **kw), "same geometry, translation lengths 3"),
    "schottky-2-l4": (lambda **kw: schottky_pair(4.0, **kw), "same geometry, translation lengths 4"),
    "surface-genus-2": (surface_genus2,
                        "cocompact genus-2 surface group: side pairings of the regular octagon with angles pi/4"),
    "parabolic-rank-1": (parabolic_rank1, "cyclic unipotent group in SO(2,1); critical exponent 1/2"),
    "parabolic-rank-2": (parabolic_rank2, "Z^2 of commuting unipotents in SO(3,1) on the 3-ball; critical exponent 1"),
}


def group_preset(name: str, **kw) -> GroupScenario:
    if name not in GROUP_PRESETS:
        raise ConfigError(f"unknown group preset '{name}'", field="group.preset")
    return GROUP_PRESETS[name][0](**kw)


def list_presets(self_test: bool = False) -> str:
    """Scenario library; with ``self_test`` every preset is built and the outcome appended."""

    def probe(builder, describe):
        if not self_test:
            return ""
        try:
            return f"  [ok: {describe(builder())}]"
        except Exception as e:  # a broken preset is reported, not raised
            return f"  [FAILED: {type(e).__name__}: {e}]"

    lines = ["Group scenarios:"]
    for name, (builder, doc) in GROUP_PRESETS.items():
        status = probe(builder, lambda S: f"{S.rank} generators, dim {S.domain.dim}")
        lines.append(f"  {name:<18} {doc}{status}")
    lines.append("Domains:")
    for name, (builder, doc) in DOMAIN_PRESETS.items():
        status = probe(builder, lambda D: f"dim {D.dim}")
        lines.append(f"  {name:<18} {doc}{status}")
    lines += [
        "Group block options (all optional):",
        "  prune_slack        extra search depth past the radius for non-monotone words",
        "  max_radius         refuse balls beyond this radius (default 30)",
        "  max_word_length    stop expanding words past this length (default 64)",
        "Domain kinds for explicit blocks: ellipsoid {center, shape}, pball {p, scale, dim},",
        "  polytope {normals: {rows, cols, data}, offsets}, simplex {dim}.",
    ]
    return "\n".join(lines)
