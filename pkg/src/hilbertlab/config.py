"""Scenario configuration files.

A config is a YAML mapping::

    seed: 7
    domain: {preset: disk}            # or {kind: ellipsoid, center: [..], shape: {dim: 2, data: [..]}}
    group: {preset: schottky-2}       # or {generators: [{dim: 3, data: [..]}, ..], free_group: true}
    basepoints: {x: [0, 0], y: [0, 0]}
    experiments:
      - {name: critical-exponent, radius: 12}
    output: {dir: out}

Matrices are flat row-major lists with a declared ``dim``.  Errors name the
offending field as a dotted path and, when known, its line.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np
import yaml

from .domains import ConvexDomain, Ellipsoid, HalfspacePolytope, PNormBall
from .errors import ConfigError, HilbertLabError
from .groups import GroupScenario
from .presets import DOMAIN_PRESETS, GROUP_PRESETS, domain_preset, group_preset

EXPERIMENTS = (
    "distance",
    "metric-axioms",
    "crampon",
    "busemann-identities",
    "shadow-sandwich",
    "property-suite",
    "orbit-ball",
    "critical-exponent",
    "translation-lengths",
    "ps-measure",
    "shadow-audit",
    "closed-geodesics",
    "orbit-count",
    "equidistribution",
)

_TOP_KEYS = {"seed", "threads", "budget", "domain", "group", "basepoints", "experiments", "output", "name"}


def _line_index(text: str) -> dict:
    """Dotted path -> 1-based line of every node in the document."""
    out = {}
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.YAMLError:
        return out

    def walk(node, path):
        out[path] = node.start_mark.line + 1
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                walk(v, f"{path}.{k.value}" if path else str(k.value))
        elif isinstance(node, yaml.SequenceNode):
            for i, v in enumerate(node.value):
                walk(v, f"{path}[{i}]")

    if root is not None:
        walk(root, "")
    return out


@dataclass
class ScenarioConfig:
    raw: dict
    lines: dict = field(default_factory=dict, repr=False)
    source: str = "<config>"

    def fail(self, path: str, msg: str):
        # a missing key has no line of its own: report its nearest parent
        p = path
        while p and p not in self.lines:
            cut = max(p.rfind("."), p.rfind("["))
            p = p[:cut] if cut > 0 else ""
        raise ConfigError(msg, field=path, line=self.lines.get(p) if p else None)

    # typed accessors --------------------------------------------------------

    def get(self, path: str, default: Any = None) -> Any:
        cur: Any = self.raw
        for part in path.split("."):
            if not isinstance(cur, dict) or part not in cur:
                return default
            cur = cur[part]
        return cur

    def number(self, path: str, value: Any, integer: bool = False, positive: bool = False):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self.fail(path, f"expected a number, got {value!r}")
        if not math.isfinite(value):
            self.fail(path, "must be finite")
        if integer and int(value) != value:
            self.fail(path, f"expected an integer, got {value!r}")
        if positive and value <= 0:
            self.fail(path, "must be positive")
        return int(value) if integer else float(value)

    def vector(self, path: str, value: Any, length: Optional[int] = None) -> np.ndarray:
        if not isinstance(value, list) or not value:
            self.fail(path, "expected a non-empty list of numbers")
        v = np.array([self.number(f"{path}[{i}]", x) for i, x in enumerate(value)])
        if length is not None and v.size != length:
            self.fail(path, f"expected {length} entries, got {v.size}")
        return v

    def matrix(self, path: str, value: Any) -> np.ndarray:
        if not isinstance(value, dict):
            self.fail(path, "expected a matrix block {dim: n, data: [row-major entries]}")
        if "dim" not in value:
            self.fail(f"{path}.dim", "missing matrix dimension")
        if "data" not in value:
            self.fail(f"{path}.data", "missing matrix entries")
        n = self.number(f"{path}.dim", value["dim"], integer=True, positive=True)
        data = self.vector(f"{path}.data", value["data"], n * n)
        return data.reshape(n, n)

    # scenario pieces -----------------------------------------------------------

    @property
    def seed(self) -> int:
        return self.number("seed", self.raw.get("seed", 0), integer=True)

    def domain(self) -> ConvexDomain:
        block = self.raw.get("domain")
        if block is None:
            S = self.scenario_if_preset()
            if S is not None:
                return S.domain
            self.fail("domain", "missing domain block")
        if not isinstance(block, dict):
            self.fail("domain", "expected a mapping")
        if "preset" in block:
            name = block["preset"]
            if name not in DOMAIN_PRESETS:
                self.fail("domain.preset", f"unknown domain preset '{name}'")
            return domain_preset(name)
        kind = block.get("kind")
        try:
            if kind == "ellipsoid":
                c = self.vector("domain.center", block.get("center"))
                A = self.matrix("domain.shape", block.get("shape"))
                return Ellipsoid(c, A)
            if kind == "pball":
                p = self.number("domain.p", block.get("p"), positive=True)
                scale = self.number("domain.scale", block.get("scale", 1.0), positive=True)
                dim = self.number("domain.dim", block.get("dim", 2), integer=True, positive=True)
                return PNormBall(p, scale, dim)
            if kind == "polytope":
                nb = block.get("normals")
                if not isinstance(nb, dict) or "rows" not in nb or "cols" not in nb or "data" not in nb:
                    self.fail("domain.normals", "expected {rows: m, cols: n, data: [row-major entries]}")
                m = self.number("domain.normals.rows", nb["rows"], integer=True, positive=True)
                n = self.number("domain.normals.cols", nb["cols"], integer=True, positive=True)
                N = self.vector("domain.normals.data", nb["data"], m * n).reshape(m, n)
                b = self.vector("domain.offsets", block.get("offsets"), m)
                return HalfspacePolytope(N, b)
            if kind == "simplex":
                dim = self.number("domain.dim", block.get("dim", 2), integer=True, positive=True)
                return HalfspacePolytope.simplex(dim)
        except ConfigError:
            raise
        except HilbertLabError as e:
            self.fail("domain", str(e))
        self.fail("domain.kind", f"unknown domain kind {kind!r} (ellipsoid, pball, polytope, simplex)")

    def scenario_if_preset(self) -> Optional[GroupScenario]:
        block = self.raw.get("group")
        if isinstance(block, dict) and "preset" in block:
            return self.scenario()
        return None

    def scenario(self, budget: Optional[int] = None) -> GroupScenario:
        block = self.raw.get("group")
        if block is None:
            self.fail("group", "missing group block")
        if not isinstance(block, dict):
            self.fail("group", "expected a mapping")
        kw = {}
        for key in ("prune_slack", "max_radius"):
            if key in block:
                kw[key] = self.number(f"group.{key}", block[key], positive=True)
        if "max_word_length" in block:
            kw["max_word_length"] = self.number("group.max_word_length", block["max_word_length"],
                                                integer=True, positive=True)
        b = budget if budget is not None else self.raw.get("budget")
        if b is not None:
            kw["budget"] = self.number("budget", b, integer=True, positive=True)
        try:
            if "preset" in block:
                name = block["preset"]
                if name not in GROUP_PRESETS:
                    self.fail("group.preset", f"unknown group preset '{name}'")
                return group_preset(name, **kw)
            gens = block.get("generators")
            if not isinstance(gens, list) or not gens:
                self.fail("group.generators", "missing generator matrices")
            mats = [self.matrix(f"group.generators[{i}]", g) for i, g in enumerate(gens)]
            D = self.domain()
            o = block.get("basepoint", self.get("basepoints.o"))
            o = np.zeros(D.dim) if o is None else self.vector("group.basepoint", o, D.dim)
            free = block.get("free_group", False)
            if not isinstance(free, bool):
                self.fail("group.free_group", "expected true or false")
            return GroupScenario(D, mats, o, free_group=free, name=str(block.get("name", "custom")), **kw)
        except ConfigError:
            raise
        except HilbertLabError as e:
            self.fail("group", str(e))

    def point(self, key: str, dim: int, default: np.ndarray) -> np.ndarray:
        v = self.get(f"basepoints.{key}")
        return default if v is None else self.vector(f"basepoints.{key}", v, dim)

    def experiments(self) -> list:
        block = self.raw.get("experiments", [])
        if not isinstance(block, list):
            self.fail("experiments", "expected a list of experiment blocks")
        out = []
        for i, e in enumerate(block):
            if isinstance(e, str):
                e = {"name": e}
            if not isinstance(e, dict) or "name" not in e:
                self.fail(f"experiments[{i}]", "each experiment needs a name")
            if e["name"] not in EXPERIMENTS:
                self.fail(f"experiments[{i}].name", f"unknown experiment '{e['name']}'")
            for k, v in e.items():
                _check_finite(self, f"experiments[{i}].{k}", v)
            out.append(dict(e))
        return out


def _check_finite(cfg: ScenarioConfig, path: str, v):
    if isinstance(v, float) and not math.isfinite(v):
        cfg.fail(path, "must be finite")
    if isinstance(v, list):
        for i, x in enumerate(v):
            _check_finite(cfg, f"{path}[{i}]", x)
    if isinstance(v, dict):
        for k, x in v.items():
            _check_finite(cfg, f"{path}.{k}", x)


def parse_config(text: str, source: str = "<config>") -> ScenarioConfig:
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        raise ConfigError(f"{source}: not valid YAML ({getattr(e, 'problem', e)})", field="",
                          line=None if mark is None else mark.line + 1) from None
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError(f"{source}: top level must be a mapping", field="", line=1)
    return config_from_mapping(raw, source, _line_index(text))


def config_from_mapping(raw: dict, source: str = "<config>", lines: Optional[dict] = None) -> ScenarioConfig:
    """Validate an already-parsed mapping (the CLI builds these from flags)."""
    cfg = ScenarioConfig(raw, lines or {}, source)
    for k in raw:
        if k not in _TOP_KEYS:
            cfg.fail(str(k), f"unknown top-level field '{k}'")
    # validate eagerly so a bad file fails before any experiment runs
    cfg.seed
    if "group" in raw:
        cfg.scenario()
    elif "domain" in raw:
        cfg.domain()
    cfg.experiments()
    return cfg


def load_config(path: str) -> ScenarioConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e.strerror}", field="") from None
    return parse_config(text, path)
