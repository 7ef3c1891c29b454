"""Suite configuration: a versioned YAML document validated with line numbers.

Example::

    schema_version: 1
    seed: 0
    alphas: [0.25, 0.5, 0.75]
    experiments:
      - kind: lemma31
        group: heisenberg1
        grid: {half_widths: [4, 4, 8], resolution: 32}
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .grid import GridSpec
from .group import parse_group
from .maximal import TGrid
from .riesz import SubordinationRule

SCHEMA_VERSION = 1
KINDS = ("constants", "lemma31", "main-ineq", "pipeline", "baseline", "coarea", "isoperimetric", "weak11")


class ConfigError(ValueError):
    def __init__(self, message: str, source: str = "<config>", line: int | None = None, path: str = ""):
        where = f"{source}:{line}" if line is not None else source
        loc = f" [{path}]" if path else ""
        super().__init__(f"{where}{loc}: {message}")
        self.line = line
        self.path = path


@dataclass(frozen=True)
class RuleConfig:
    t_min: float = 1e-4
    t_max: float = 1e4
    nodes_per_decade: int = 16

    def rule(self, alpha: float) -> SubordinationRule:
        return SubordinationRule(alpha, self.t_min, self.t_max, self.nodes_per_decade)


@dataclass(frozen=True)
class TGridConfig:
    t_min: float = 1e-3
    t_max: float = 1e3
    count: int = 64

    def tgrid(self) -> TGrid:
        return TGrid.log_spaced(self.t_min, self.t_max, self.count)


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    group: str = "euclidean:2"
    grid: dict | None = None
    alphas: tuple[float, ...] | None = None
    j: int = 1
    members: int | None = None
    region: str | None = None
    epsilon: float | None = None
    p: float = 2.0
    levels: int = 64
    resolutions: tuple[int, ...] = ()
    width_spacings: float = 1.5
    scales: tuple[float, ...] = (0.5, 1.0, 2.0)
    dilation_stress: bool = False

    def grid_spec(self) -> GridSpec:
        g = parse_group(self.group)
        if self.grid is None:
            return default_grid(self.group)
        res = self.grid["resolution"]
        if "half_widths" in self.grid:
            return GridSpec.cube(self.grid["half_widths"], res)
        if isinstance(res, int):
            res = (res,) * g.topological_dimension
        return GridSpec(tuple(self.grid["lower"]), tuple(self.grid["upper"]), tuple(res))


@dataclass(frozen=True)
class SuiteConfig:
    schema_version: int = SCHEMA_VERSION
    seed: int = 0
    alphas: tuple[float, ...] = (0.25, 0.5, 0.75)
    sample_points: int = 256
    rule: RuleConfig = field(default_factory=RuleConfig)
    tgrid: TGridConfig = field(default_factory=TGridConfig)
    experiments: tuple[ExperimentConfig, ...] = ()

    def to_dict(self) -> dict:
        return asdict(self)


def default_grid(group: str) -> GridSpec:
    """The desk-scale grids: R^2 at 128^2, R^3 at 48^3, H^1 at 32^3 over [-4,4]^2 x [-8,8]."""
    g = parse_group(group)
    if not g.is_euclidean:
        return GridSpec.cube((4.0, 4.0, 8.0), 32)
    d = g.topological_dimension
    return GridSpec.cube((4.0,) * d, {1: 512, 2: 128, 3: 48}.get(d, 16))


# --------------------------------------------------------------------------
# validation
# --------------------------------------------------------------------------
_TOP = {"schema_version", "seed", "alphas", "sample_points", "rule", "tgrid", "experiments"}
_EXP = set(ExperimentConfig.__dataclass_fields__)


class _Reader:
    def __init__(self, source: str):
        self.source = source

    def fail(self, node, msg: str, path: str):
        line = node.start_mark.line + 1 if node is not None else None
        raise ConfigError(msg, self.source, line, path)

    def mapping(self, node, path: str, allowed: set) -> dict:
        if not isinstance(node, yaml.MappingNode):
            self.fail(node, "expected a mapping", path)
        out = {}
        for k, v in node.value:
            key = k.value
            if key not in allowed:
                self.fail(k, f"unknown field {key!r}; allowed: {', '.join(sorted(allowed))}", f"{path}.{key}" if path else key)
            if key in out:
                self.fail(k, f"duplicate field {key!r}", path)
            out[key] = v
        return out

    def scalar(self, node, path: str, kind, check=None, what: str = ""):
        if not isinstance(node, yaml.ScalarNode):
            self.fail(node, f"expected a {kind.__name__}", path)
        value = yaml.safe_load(node.value) if node.tag != "tag:yaml.org,2002:str" or kind is not str else node.value
        if kind is float and isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        if kind is float and isinstance(value, str):
            try:
                value = float(value)
            except ValueError:
                pass
        if not isinstance(value, kind) or isinstance(value, bool) and kind is not bool:
            self.fail(node, f"expected a {kind.__name__}, got {node.value!r}", path)
        if check is not None and not check(value):
            self.fail(node, f"value {value!r} out of range{': ' + what if what else ''}", path)
        return value

    def seq(self, node, path: str, kind, check=None, what: str = "") -> tuple:
        if isinstance(node, yaml.ScalarNode) and kind is int:
            return (self.scalar(node, path, int, check, what),)
        if not isinstance(node, yaml.SequenceNode):
            self.fail(node, "expected a list", path)
        return tuple(self.scalar(v, f"{path}[{i}]", kind, check, what) for i, v in enumerate(node.value))


def _alpha_ok(a: float) -> bool:
    return 0.0 < a and math.isfinite(a)


def _parse_experiment(rd: _Reader, node, path: str) -> ExperimentConfig:
    m = rd.mapping(node, path, _EXP)
    if "kind" not in m:
        rd.fail(node, "missing field 'kind'", path)
    kind = rd.scalar(m["kind"], f"{path}.kind", str, lambda k: k in KINDS, "one of " + ", ".join(KINDS))
    kw: dict[str, Any] = {"kind": kind}
    if "group" in m:
        grp = rd.scalar(m["group"], f"{path}.group", str)
        try:
            parse_group(grp)
        except ValueError as exc:
            rd.fail(m["group"], str(exc), f"{path}.group")
        kw["group"] = grp
    if "grid" in m:
        gm = rd.mapping(m["grid"], f"{path}.grid", {"half_widths", "lower", "upper", "resolution"})
        if "resolution" not in gm:
            rd.fail(m["grid"], "missing field 'resolution'", f"{path}.grid")
        grid = {"resolution": rd.seq(gm["resolution"], f"{path}.grid.resolution", int, lambda n: n >= 4, "at least 4 nodes")}
        if len(grid["resolution"]) == 1:
            grid["resolution"] = grid["resolution"][0]
        if "half_widths" in gm:
            grid["half_widths"] = rd.seq(gm["half_widths"], f"{path}.grid.half_widths", float, lambda h: h > 0, "positive")
        elif "lower" in gm and "upper" in gm:
            grid["lower"] = rd.seq(gm["lower"], f"{path}.grid.lower", float)
            grid["upper"] = rd.seq(gm["upper"], f"{path}.grid.upper", float)
        else:
            rd.fail(m["grid"], "give either half_widths or lower and upper", f"{path}.grid")
        dim = parse_group(kw.get("group", "euclidean:2")).topological_dimension
        for key in ("half_widths", "lower", "upper"):
            if key in grid and len(grid[key]) != dim:
                rd.fail(gm[key], f"expected {dim} entries for this group", f"{path}.grid.{key}")
        kw["grid"] = grid
    if "alphas" in m:
        kw["alphas"] = rd.seq(m["alphas"], f"{path}.alphas", float, _alpha_ok, "alpha must be positive")
    for key, kind_, check, what in (
        ("j", int, lambda v: v >= 1, "1-based horizontal index"),
        ("members", int, lambda v: v >= 1, "positive"),
        ("epsilon", float, lambda v: v > 0, "positive"),
        ("p", float, lambda v: v > 1, "p > 1"),
        ("levels", int, lambda v: v >= 8, "at least 8"),
        ("width_spacings", float, lambda v: v > 0, "positive"),
        ("region", str, None, ""),
        ("dilation_stress", bool, None, ""),
    ):
        if key in m:
            kw[key] = rd.scalar(m[key], f"{path}.{key}", kind_, check, what)
    if "resolutions" in m:
        kw["resolutions"] = rd.seq(m["resolutions"], f"{path}.resolutions", int, lambda n: n >= 4, "at least 4 nodes")
    if "scales" in m:
        kw["scales"] = rd.seq(m["scales"], f"{path}.scales", float, lambda s: s > 0, "positive")
        if 1.0 not in kw["scales"]:
            rd.fail(m["scales"], "scales must include 1", f"{path}.scales")
    if kind in ("pipeline", "isoperimetric") and "region" not in kw:
        rd.fail(node, f"{kind} needs a 'region'", path)
    if kind == "weak11" and not kw.get("resolutions"):
        rd.fail(node, "weak11 needs 'resolutions'", path)
    return ExperimentConfig(**kw)


def parse_config(text: str, source: str = "<config>") -> SuiteConfig:
    rd = _Reader(source)
    try:
        root = yaml.compose(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"YAML syntax error: {getattr(exc, 'problem', exc)}", source, mark.line + 1 if mark else None) from None
    if root is None:
        raise ConfigError("empty configuration", source)
    m = rd.mapping(root, "", _TOP)
    if "schema_version" not in m:
        rd.fail(root, "missing field 'schema_version'", "schema_version")
    version = rd.scalar(m["schema_version"], "schema_version", int)
    if version != SCHEMA_VERSION:
        rd.fail(m["schema_version"], f"unsupported schema version {version} (this build reads {SCHEMA_VERSION})", "schema_version")
    kw: dict[str, Any] = {"schema_version": version}
    if "seed" in m:
        kw["seed"] = rd.scalar(m["seed"], "seed", int, lambda s: s >= 0, "non-negative")
    if "sample_points" in m:
        kw["sample_points"] = rd.scalar(m["sample_points"], "sample_points", int, lambda s: s >= 1, "positive")
    if "alphas" in m:
        kw["alphas"] = rd.seq(m["alphas"], "alphas", float, _alpha_ok, "alpha must be positive")
    if "rule" in m:
        rm = rd.mapping(m["rule"], "rule", set(RuleConfig.__dataclass_fields__))
        rk = {}
        for key, kind_ in (("t_min", float), ("t_max", float), ("nodes_per_decade", int)):
            if key in rm:
                rk[key] = rd.scalar(rm[key], f"rule.{key}", kind_, lambda v: v > 0, "positive")
        kw["rule"] = RuleConfig(**rk)
        if kw["rule"].t_min >= kw["rule"].t_max:
            rd.fail(m["rule"], "t_min must be below t_max", "rule")
        if kw["rule"].nodes_per_decade < 8:
            rd.fail(m["rule"], "nodes_per_decade must be at least 8", "rule.nodes_per_decade")
    if "tgrid" in m:
        tm = rd.mapping(m["tgrid"], "tgrid", set(TGridConfig.__dataclass_fields__))
        tk = {}
        for key, kind_ in (("t_min", float), ("t_max", float), ("count", int)):
            if key in tm:
                tk[key] = rd.scalar(tm[key], f"tgrid.{key}", kind_, lambda v: v > 0, "positive")
        kw["tgrid"] = TGridConfig(**tk)
        if kw["tgrid"].t_min >= kw["tgrid"].t_max:
            rd.fail(m["tgrid"], "t_min must be below t_max", "tgrid")
    if "experiments" in m:
        node = m["experiments"]
        if isinstance(node, yaml.ScalarNode) and node.value in ("", "~", "null", "[]"):
            kw["experiments"] = ()
        elif not isinstance(node, yaml.SequenceNode):
            rd.fail(node, "expected a list of experiments", "experiments")
        else:
            kw["experiments"] = tuple(_parse_experiment(rd, v, f"experiments[{i}]") for i, v in enumerate(node.value))
    return SuiteConfig(**kw)


def load_config(path: str | Path) -> SuiteConfig:
    path = Path(path)
    return parse_config(path.read_text(), str(path))


DEFAULT_SUITE = """\
schema_version: 1
seed: 0
alphas: [0.25, 0.5, 0.75]
sample_points: 256
rule: {t_min: 1.0e-4, t_max: 1.0e4, nodes_per_decade: 16}
tgrid: {t_min: 1.0e-3, t_max: 1.0e3, count: 64}
experiments:
  - {kind: constants}
  - {kind: lemma31, group: "euclidean:2", members: 6}
  - {kind: lemma31, group: heisenberg1, members: 6}
  - {kind: main-ineq, group: "euclidean:2"}
  - {kind: main-ineq, group: heisenberg1}
  - kind: pipeline
    group: "euclidean:2"
    region: euclidean-ball 1.0
    epsilon: 0.1
    grid: {half_widths: [2, 2], resolution: 128}
  - kind: pipeline
    group: heisenberg1
    region: koranyi-ball 1.5
    epsilon: 0.2
    grid: {lower: [-3, -3, -2], upper: [3, 3, 2], resolution: [32, 32, 48]}
  - {kind: baseline, group: "euclidean:2", p: 2.0, alphas: [0.5]}
  - {kind: coarea, group: "euclidean:2", members: 3}
  - {kind: coarea, group: heisenberg1, members: 3}
  - kind: isoperimetric
    group: "euclidean:2"
    region: euclidean-ball 1.0
    epsilon: 0.1
    grid: {half_widths: [2, 2], resolution: 128}
  - kind: isoperimetric
    group: heisenberg1
    region: koranyi-ball 1.5
    epsilon: 0.2
    grid: {lower: [-3, -3, -2], upper: [3, 3, 2], resolution: [32, 32, 48]}
  - {kind: weak11, group: "euclidean:3", resolutions: [24, 32, 40]}
  - {kind: weak11, group: heisenberg1, resolutions: [24, 32, 40]}
"""


def default_config() -> SuiteConfig:
    return parse_config(DEFAULT_SUITE, "<default suite>")
