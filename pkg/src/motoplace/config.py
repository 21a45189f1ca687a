"""Project and topology configuration files (TOML).

A project file names a topology file, the design space, the vehicle and the
solver settings. Both files carry ``format_version``. Parsing is strict:
unknown keys, missing keys and out-of-range values raise :class:`ConfigError`
with the file name and, where it can be located, the line of the key.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from pathlib import Path

import tomli
import tomli_w

from motoplace.builder import BuildOptions
from motoplace.cog_region import VehicleParams
from motoplace.geometry import AngleScheme, DesignSpace
from motoplace.solver import SolveLimits
from motoplace.topology import ElementSpec, Topology, TopologyError

CONFIG_FORMAT_VERSION = 1


class ConfigError(ValueError):
    """Invalid configuration; the message carries file and line context."""


@dataclass
class ProjectConfig:
    name: str
    topology_path: Path
    topology: Topology
    space: DesignSpace
    scheme: AngleScheme
    n_com: dict[str, int]
    vehicle: VehicleParams
    mm_box: tuple[float, float, float, float] | None
    drive_cycle: Path | None = None
    ideal_cog: tuple[float, float] | None = None
    region_step: float = 0.02
    region_h_max: float = 1.2
    l_n: float = 1.0
    l_n_mm: float = 1.0
    eps: float = 1e-3
    symmetry_breaking: bool = True
    limits: SolveLimits = field(default_factory=SolveLimits)
    output_dir: Path = Path("out")
    source: Path | None = None

    def build_options(self) -> BuildOptions:
        return BuildOptions(
            n_com=dict(self.n_com),
            l_n=self.l_n,
            l_n_mm=self.l_n_mm,
            mm_box=self.mm_box,
            eps=self.eps,
            symmetry_breaking=self.symmetry_breaking,
        )

    def with_n_com(self, name: str, value: int) -> ProjectConfig:
        n_com = dict(self.n_com)
        n_com[name] = value
        return replace(self, n_com=n_com)


# -- locating keys for error messages ------------------------------------


class _Source:
    def __init__(self, path: Path, text: str):
        self.path = path
        self.lines = text.splitlines()

    def line_of(self, table: str, key: str | None = None) -> int | None:
        header = re.compile(r"^\s*\[\[?\s*([^\]]+?)\s*\]\]?")
        current = ""
        table_line = None
        for n, line in enumerate(self.lines, 1):
            m = header.match(line)
            if m:
                current = m.group(1)
                if current == table and table_line is None:
                    table_line = n
                continue
            if key is not None and current == table and re.match(rf"^\s*{re.escape(key)}\s*=", line):
                return n
        return table_line

    def error(self, message: str, table: str = "", key: str | None = None) -> ConfigError:
        line = self.line_of(table, key)
        where = f"{self.path}:{line}" if line else str(self.path)
        return ConfigError(f"{where}: {message}")


def _read(path: Path) -> tuple[dict, _Source]:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read file ({exc.strerror})") from exc
    src = _Source(path, text)
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    version = data.get("format_version")
    if version != CONFIG_FORMAT_VERSION:
        raise src.error(f"format_version must be {CONFIG_FORMAT_VERSION}, got {version!r}", "", "format_version")
    return data, src


class _Table:
    """Typed, strict access to one TOML table."""

    def __init__(self, data: dict, src: _Source, name: str):
        if not isinstance(data, dict):
            raise src.error(f"[{name}] must be a table", name)
        self.data, self.src, self.name = data, src, name
        self.used: set[str] = set()

    def _get(self, key, default, required):
        self.used.add(key)
        if key not in self.data:
            if required:
                where = f"[{self.name}]" if self.name else "top level"
                raise self.src.error(f"missing required key {key!r} in {where}", self.name)
            return default
        return self.data[key]

    def number(self, key, default=None, *, required=False, lo=None, hi=None, strict_lo=False, integer=False):
        v = self._get(key, default, required)
        if v is None:
            return None
        kind = int if integer else (int, float)
        if isinstance(v, bool) or not isinstance(v, kind):
            raise self.src.error(f"{key} must be {'an integer' if integer else 'a number'}, got {v!r}", self.name, key)
        if lo is not None and (v <= lo if strict_lo else v < lo):
            raise self.src.error(f"{key} = {v} must be {'>' if strict_lo else '>='} {lo}", self.name, key)
        if hi is not None and v > hi:
            raise self.src.error(f"{key} = {v} must be <= {hi}", self.name, key)
        return v if integer else float(v)

    def string(self, key, default=None, *, required=False):
        v = self._get(key, default, required)
        if v is not None and not isinstance(v, str):
            raise self.src.error(f"{key} must be a string", self.name, key)
        return v

    def boolean(self, key, default=None):
        v = self._get(key, default, False)
        if not isinstance(v, bool):
            raise self.src.error(f"{key} must be true or false", self.name, key)
        return v

    def pair(self, key):
        v = self._get(key, None, False)
        if v is None:
            return None
        if not (isinstance(v, list) and len(v) == 2 and all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in v)):
            raise self.src.error(f"{key} must be a list of two numbers", self.name, key)
        return (float(v[0]), float(v[1]))

    def table(self, key, required=False) -> _Table | None:
        v = self._get(key, None, required)
        if v is None:
            return None
        sub = f"{self.name}.{key}" if self.name else key
        return _Table(v, self.src, sub)

    def finish(self) -> None:
        extra = sorted(set(self.data) - self.used)
        if extra:
            raise self.src.error(f"unknown key {extra[0]!r}", self.name, extra[0])


def _box(t: _Table) -> tuple[float, float, float, float]:
    vals = tuple(t.number(k, required=True) for k in ("x_min", "x_max", "y_min", "y_max"))
    t.finish()
    if not (vals[0] < vals[1] and vals[2] < vals[3]):
        raise t.src.error("box needs x_min < x_max and y_min < y_max", t.name)
    return vals


# -- topology files --------------------------------------------------------

_ELEMENT_KEYS = (
    "name", "type", "mass", "shape", "width", "height", "radius", "n_sub", "sub_width",
    "sub_height", "sub_mass", "fixed", "x", "y", "angle", "exists", "role",
)


def load_topology(path: str | Path) -> Topology:
    path = Path(path)
    data, src = _read(path)
    top = _Table(data, src, "")
    top.number("format_version")
    name = top.string("name", required=True)
    top.boolean("synthetic", False)
    top.string("description", "")
    raw = top._get("element", None, True)
    top.finish()
    if not isinstance(raw, list) or not raw:
        raise src.error("[[element]] must list at least one element", "element")
    elements = []
    for item in raw:
        t = _Table(item, src, "element")
        kw = {}
        for key in _ELEMENT_KEYS:
            if key in item:
                v = t._get(key, None, False)
                if key in ("n_sub",):
                    v = t.number(key, integer=True, lo=0)
                elif key in ("name", "type", "shape", "role"):
                    v = t.string(key)
                elif key in ("fixed", "exists"):
                    v = t.boolean(key)
                else:
                    v = t.number(key)
                kw[key] = v
        for key in ("name", "type", "mass", "shape"):
            t._get(key, None, True)
        t.finish()
        elements.append(ElementSpec(**kw))
    try:
        return Topology(name, elements)
    except TopologyError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def topology_to_dict(topology: Topology) -> dict:
    defaults = ElementSpec("", "MM", 1.0, "circle")
    out = []
    for e in topology.elements:
        d = {}
        for key in _ELEMENT_KEYS:
            v = getattr(e, key)
            if key in ("name", "type", "mass", "shape") or (v != getattr(defaults, key) and v is not None):
                d[key] = v
        out.append(d)
    return {"format_version": CONFIG_FORMAT_VERSION, "name": topology.name, "element": out}


# -- project files ---------------------------------------------------------


def load_config(path: str | Path) -> ProjectConfig:
    """Parse and cross-check a project file; defaults are filled in."""
    path = Path(path)
    data, src = _read(path)
    base = path.parent
    top = _Table(data, src, "")
    top.number("format_version")
    name = top.string("name", required=True)
    topo_rel = top.string("topology", required=True)
    topo_path = (base / topo_rel).resolve() if not Path(topo_rel).is_absolute() else Path(topo_rel)
    if not topo_path.exists():
        raise src.error(f"topology file {topo_rel!r} does not exist", "", "topology")
    topology = load_topology(topo_path)
    out_dir = top.string("output_dir", "out")
    cycle_rel = top.string("drive_cycle")
    cycle = None
    if cycle_rel is not None:
        cycle = (base / cycle_rel).resolve() if not Path(cycle_rel).is_absolute() else Path(cycle_rel)
        if not cycle.exists():
            raise src.error(f"drive cycle {cycle_rel!r} does not exist", "", "drive_cycle")
    ideal = top.pair("ideal_cog")
    if cycle is None and ideal is None:
        raise src.error("give either drive_cycle or ideal_cog", "")

    space = _box(top.table("design_space", required=True))

    angles = top.table("angles") or _Table({}, src, "angles")
    n_a = angles.number("n_a", 4, integer=True, lo=2)
    n_pa = angles.number("n_pa", 3, integer=True, lo=2)
    angles.finish()
    if n_a % 2:
        raise src.error(f"n_a = {n_a} must be even", "angles", "n_a")

    n_com_t = top.table("n_com") or _Table({}, src, "n_com")
    n_com = {}
    subsystems = {e.name: e for e in topology.existing if e.is_subsystem}
    for key in sorted(n_com_t.data):
        v = n_com_t.number(key, integer=True, lo=1)
        if key not in subsystems:
            raise src.error(f"n_com given for {key!r}, which is not a subsystem of the topology", "n_com", key)
        if v > subsystems[key].n_sub:
            raise src.error(
                f"n_com for {key} is {v} but the subsystem has only {subsystems[key].n_sub} modules (n_com <= n_sub)",
                "n_com",
                key,
            )
        n_com[key] = v
    for key in subsystems:
        n_com.setdefault(key, 1)

    vt = top.table("vehicle", required=True)
    vehicle_kw = {
        "wheelbase": vt.number("wheelbase", required=True, lo=0, strict_lo=True),
        "chassis_mass": vt.number("chassis_mass", required=True, lo=0, strict_lo=True),
        "chassis_x": vt.number("chassis_x", required=True),
        "chassis_y": vt.number("chassis_y", required=True),
        "rider_mass": vt.number("rider_mass", required=True, lo=0, strict_lo=True),
        "rider_x": vt.number("rider_x", required=True),
        "rider_y": vt.number("rider_y", required=True),
        "mu_f": vt.number("mu_f", 0.9, lo=0, hi=1.5, strict_lo=True),
        "mu_r": vt.number("mu_r", 0.9, lo=0, hi=1.5, strict_lo=True),
        "front_share": vt.number("front_share", 0.5, lo=0, hi=1),
        "c0": vt.number("c0", 0.0),
        "c1": vt.number("c1", 0.0),
        "c2": vt.number("c2", 0.35),
    }
    driven = vt._get("driven", ["rear"], False)
    if not isinstance(driven, list) or not driven or any(d not in ("front", "rear") for d in driven):
        raise src.error('driven must be a non-empty list drawn from "front", "rear"', "vehicle", "driven")
    vehicle_kw["driven"] = tuple(driven)
    vt.finish()

    region = top.table("region") or _Table({}, src, "region")
    step = region.number("step", 0.02, lo=0, strict_lo=True)
    h_max = region.number("h_max", 1.2, lo=0, strict_lo=True)
    region.finish()

    obj = top.table("objective") or _Table({}, src, "objective")
    l_n = obj.number("l_n", 1.0, lo=0, strict_lo=True)
    l_n_mm = obj.number("l_n_mm", 1.0, lo=0, strict_lo=True)
    obj.finish()

    box_t = top.table("mm_box")
    mm_box = _box(box_t) if box_t is not None else None
    if topology.n_mm and mm_box is None:
        raise src.error("the topology has a mounted motor, so [mm_box] is required", "")

    mt = top.table("model") or _Table({}, src, "model")
    eps = mt.number("eps", 1e-3, lo=0, strict_lo=True)
    sym = mt.boolean("symmetry_breaking", True)
    mt.finish()

    st = top.table("solver") or _Table({}, src, "solver")
    limits = SolveLimits(
        gap_tol=st.number("gap_tol", 0.0, lo=0),
        time_limit=st.number("time_limit", 600.0, lo=0, strict_lo=True),
        node_limit=st.number("node_limit", None, integer=True, lo=1),
        threads=st.number("threads", 1, integer=True, lo=1),
    )
    st.finish()
    top.finish()
    return ProjectConfig(
        name=name,
        topology_path=topo_path,
        topology=topology,
        space=DesignSpace(*space),
        scheme=AngleScheme(n_a, n_pa),
        n_com=n_com,
        vehicle=VehicleParams(**vehicle_kw),
        mm_box=mm_box,
        drive_cycle=cycle,
        ideal_cog=ideal,
        region_step=step,
        region_h_max=h_max,
        l_n=l_n,
        l_n_mm=l_n_mm,
        eps=eps,
        symmetry_breaking=sym,
        limits=limits,
        output_dir=Path(out_dir),  # relative to the working directory, not the file
        source=path,
    )


def config_to_dict(cfg: ProjectConfig, base: Path | None = None) -> dict:
    """Serialise ``cfg`` with every default written out; paths relative to ``base``."""
    base = Path(base) if base is not None else (cfg.source.parent if cfg.source else Path.cwd())

    def rel(p: Path) -> str:
        try:
            return Path(p).resolve().relative_to(base.resolve()).as_posix()
        except ValueError:
            return Path(p).resolve().as_posix()

    s, v = cfg.space, cfg.vehicle
    d = {"format_version": CONFIG_FORMAT_VERSION, "name": cfg.name, "topology": rel(cfg.topology_path), "output_dir": Path(cfg.output_dir).as_posix()}
    if cfg.drive_cycle is not None:
        d["drive_cycle"] = rel(cfg.drive_cycle)
    if cfg.ideal_cog is not None:
        d["ideal_cog"] = list(cfg.ideal_cog)
    d["design_space"] = {"x_min": s.x_min, "x_max": s.x_max, "y_min": s.y_min, "y_max": s.y_max}
    d["angles"] = {"n_a": cfg.scheme.n_a, "n_pa": cfg.scheme.n_pa}
    d["n_com"] = dict(sorted(cfg.n_com.items()))
    d["vehicle"] = {
        k: getattr(v, k)
        for k in ("wheelbase", "chassis_mass", "chassis_x", "chassis_y", "rider_mass", "rider_x", "rider_y", "mu_f", "mu_r", "front_share", "c0", "c1", "c2")
    }
    d["vehicle"]["driven"] = list(v.driven)
    d["region"] = {"step": cfg.region_step, "h_max": cfg.region_h_max}
    d["objective"] = {"l_n": cfg.l_n, "l_n_mm": cfg.l_n_mm}
    if cfg.mm_box is not None:
        d["mm_box"] = dict(zip(("x_min", "x_max", "y_min", "y_max"), cfg.mm_box))
    d["model"] = {"eps": cfg.eps, "symmetry_breaking": cfg.symmetry_breaking}
    lim = cfg.limits
    d["solver"] = {"gap_tol": lim.gap_tol, "time_limit": lim.time_limit, "threads": lim.threads}
    if lim.node_limit is not None:
        d["solver"]["node_limit"] = lim.node_limit
    return d


def dumps_config(cfg: ProjectConfig, base: Path | None = None) -> str:
    return tomli_w.dumps(config_to_dict(cfg, base))


def save_config(cfg: ProjectConfig, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(dumps_config(cfg, path.parent), encoding="utf-8")
    return path
