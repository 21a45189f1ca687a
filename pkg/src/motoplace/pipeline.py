"""Stage orchestration: region, model, solve, verify, render.

Each stage raises :class:`StageError` carrying its own exit code, so the CLI
can report which stage failed.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from motoplace.builder import BuildError, assemble, extract_placement, lift_placement
from motoplace.cog_region import DriveCycle, NoFeasibleCog, RegionGrid, inactive_region
from motoplace.config import ConfigError, ProjectConfig
from motoplace.export import write_model
from motoplace.model import MiqpModel
from motoplace.render import render_svg
from motoplace.solver import SolveLimits, SolveResult, branch_and_bound, warm_start
from motoplace.topology import PlacedCluster, PlacedElement, Placement
from motoplace.verify import PlacementError, Tolerances, VerificationReport, verify

log = logging.getLogger("motoplace.pipeline")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_REGION = 3
EXIT_BUILD = 4
EXIT_SOLVE = 5
EXIT_VERIFY = 6
EXIT_IO = 7
SUCCESS_STATUSES = ("optimal", "gap-limit")


class StageError(RuntimeError):
    def __init__(self, stage: str, code: int, message: str):
        super().__init__(f"{stage}: {message}")
        self.stage, self.code = stage, code


# -- region and ideal point ----------------------------------------------------


def compute_region(cfg: ProjectConfig) -> RegionGrid | None:
    """Inactive-limit region for the configured drive cycle, or None without one."""
    if cfg.drive_cycle is None:
        return None
    try:
        cycle = DriveCycle.from_csv(cfg.drive_cycle)
    except (OSError, ValueError) as exc:
        raise StageError("region", EXIT_REGION, f"cannot read drive cycle {cfg.drive_cycle}: {exc}") from exc
    vehicle = cfg.vehicle.with_total_mass(cfg.topology.element_mass)
    region = inactive_region(vehicle, cycle, step=cfg.region_step, h_max=cfg.region_h_max)
    if region.empty:
        raise StageError("region", EXIT_REGION, "no CoG location keeps the tractive-force limits inactive")
    return region


def region_origin(cfg: ProjectConfig) -> tuple[float, float]:
    """Design coordinates of the rear tyre contact point."""
    rear = cfg.topology.rear_wheel()
    if rear is None:
        return (0.0, 0.0)
    return (float(rear.x), float(rear.y) - rear.radius)


def resolve_ideal(cfg: ProjectConfig, region: RegionGrid | None) -> tuple[float, float]:
    if cfg.ideal_cog is not None:
        return cfg.ideal_cog
    if region is None or region.ideal is None:
        raise StageError("region", EXIT_REGION, "no ideal CoG: give ideal_cog or a drive cycle")
    ox, oy = region_origin(cfg)
    return (ox + region.ideal[0], oy + region.ideal[1])


# -- model, solve, verify --------------------------------------------------------


def build_model(cfg: ProjectConfig, ideal: tuple[float, float]) -> MiqpModel:
    try:
        return assemble(cfg.topology, cfg.space, cfg.scheme, cfg.vehicle, ideal, cfg.build_options())
    except BuildError as exc:
        raise StageError("build", EXIT_BUILD, str(exc)) from exc


def hint_from_placement(model: MiqpModel, placement: Placement) -> np.ndarray | None:
    try:
        return lift_placement(model, placement)
    except (ValueError, KeyError) as exc:
        log.info("placement cannot seed this model: %s", exc)
        return None


def split_candidates(placement: Placement, name: str, module: tuple[float, float]) -> list[Placement]:
    """Placements with one cluster of ``name`` cut into two abutting blocks.

    ``module`` is the (width, height) of one module. The modules stay where
    they were, so every candidate has the same mass distribution (and
    objective) as ``placement``.
    """
    pe = placement.elements[name]
    out = []
    for idx, c in enumerate(pe.clusters):
        ca, sa = np.cos(np.radians(c.angle)), np.sin(np.radians(c.angle))
        cuts = [("w", k) for k in range(1, c.n_w)] + [("h", k) for k in range(1, c.n_h)]
        for axis, k in cuts:
            if axis == "w":
                parts = [(k, c.n_h, -(c.n_w - k) / 2 * module[0], 0.0), (c.n_w - k, c.n_h, k / 2 * module[0], 0.0)]
            else:
                parts = [(c.n_w, k, 0.0, -(c.n_h - k) / 2 * module[1]), (c.n_w, c.n_h - k, 0.0, k / 2 * module[1])]
            # offsets (u, v) are in the cluster frame
            new = [PlacedCluster(n_w, n_h, c.x + ca * u - sa * v, c.y + sa * u + ca * v, c.angle) for n_w, n_h, u, v in parts]
            clusters = pe.clusters[:idx] + new + pe.clusters[idx + 1 :]
            elements = dict(placement.elements)
            elements[name] = PlacedElement(name, pe.x, pe.y, pe.angle, clusters)
            out.append(Placement(elements, placement.objective))
    return out


def refine_hint(model: MiqpModel, cfg: ProjectConfig, placement: Placement, name: str) -> np.ndarray | None:
    """Seed for one more cluster of ``name``: the best accepted split of ``placement``."""
    spec = cfg.topology[name]
    best = None
    for cand in split_candidates(placement, name, (spec.sub_width, spec.sub_height)):
        hint = hint_from_placement(model, cand)
        if hint is None:
            continue
        ws = warm_start(model, hint)
        if ws.accepted and (best is None or ws.objective < best[0] - 1e-12):
            best = (ws.objective, hint)
    return None if best is None else best[1]


def solve_model(model: MiqpModel, limits: SolveLimits, hint=None) -> SolveResult:
    result = branch_and_bound(model, limits, hint)
    if result.x is None:
        raise StageError("solve", EXIT_SOLVE, f"no feasible placement found (status {result.status})")
    return result


def verify_solution(
    cfg: ProjectConfig, model: MiqpModel, result: SolveResult, ideal: tuple[float, float]
) -> tuple[Placement, VerificationReport]:
    placement = extract_placement(model, result.x, result.objective)
    report = verify_placement(cfg, placement, ideal, reported_objective=result.objective)
    return placement, report


def verify_placement(
    cfg: ProjectConfig, placement: Placement, ideal: tuple[float, float], reported_objective: float | None = None
) -> VerificationReport:
    try:
        return verify(
            placement,
            cfg.topology,
            cfg.space,
            cfg.vehicle,
            ideal,
            Tolerances(eps=cfg.eps),
            scheme=cfg.scheme,
            l_n=cfg.l_n,
            l_n_mm=cfg.l_n_mm,
            mm_box=cfg.mm_box,
            reported_objective=reported_objective,
        )
    except PlacementError as exc:
        raise StageError("verify", EXIT_VERIFY, str(exc)) from exc


def render(cfg: ProjectConfig, placement: Placement | None, ideal, region: RegionGrid | None = None) -> str:
    return render_svg(
        placement,
        cfg.space,
        cfg.topology,
        mm_box=cfg.mm_box,
        vehicle=cfg.vehicle,
        ideal=ideal,
        region=region,
        region_origin=region_origin(cfg),
    )


# -- full run ---------------------------------------------------------------------------


@dataclass
class PipelineResult:
    exit_code: int
    message: str
    artifacts: dict[str, Path] = field(default_factory=dict)
    ideal: tuple[float, float] | None = None
    result: SolveResult | None = None
    placement: Placement | None = None
    report: VerificationReport | None = None


ARTIFACTS = {
    "region": "region.csv",
    "lp": "model.lp",
    "mps": "model.mps",
    "result": "result.json",
    "placement": "placement.json",
    "verification": "verification.json",
    "svg": "placement.svg",
}


def _write(path: Path, text: str) -> Path:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise StageError("io", EXIT_IO, f"cannot write {path}: {exc.strerror}") from exc
    return path


def run_pipeline(
    cfg: ProjectConfig,
    output_dir: str | Path | None = None,
    *,
    seed: Placement | None = None,
    refine_from: tuple[Placement, str] | None = None,
) -> PipelineResult:
    """Region, model, solve, verify and render, writing every artifact.

    ``seed`` is a placement for the same complexity used as a warm start;
    ``refine_from`` is a placement with one cluster fewer for the named subsystem.
    """
    out = Path(output_dir) if output_dir is not None else cfg.output_dir
    res = PipelineResult(EXIT_OK, "ok")
    try:
        region = compute_region(cfg)
        if region is not None:
            res.artifacts["region"] = _write(out / ARTIFACTS["region"], region.to_csv())
        ideal = resolve_ideal(cfg, region)
        res.ideal = ideal
        model = build_model(cfg, ideal)
        for key in ("lp", "mps"):
            path = out / ARTIFACTS[key]
            try:
                path.parent.mkdir(parents=True, exist_ok=True)
                res.artifacts[key] = write_model(model, path)
            except OSError as exc:
                raise StageError("io", EXIT_IO, f"cannot write {path}: {exc.strerror}") from exc
        hint = None
        if seed is not None:
            hint = hint_from_placement(model, seed)
        elif refine_from is not None:
            hint = refine_hint(model, cfg, *refine_from)
        result = solve_model(model, cfg.limits, hint)
        res.result = result
        res.artifacts["result"] = _write(out / ARTIFACTS["result"], result.to_json())
        placement, report = verify_solution(cfg, model, result, ideal)
        res.placement, res.report = placement, report
        res.artifacts["placement"] = _write(out / ARTIFACTS["placement"], json.dumps(placement.to_dict(), indent=2))
        res.artifacts["verification"] = _write(out / ARTIFACTS["verification"], report.to_json())
        res.artifacts["svg"] = _write(out / ARTIFACTS["svg"], render(cfg, placement, ideal, region))
        if result.status not in SUCCESS_STATUSES:
            res.exit_code, res.message = EXIT_SOLVE, f"solve stopped with status {result.status}"
        elif not report.passed:
            res.exit_code, res.message = EXIT_VERIFY, "verification failed"
    except StageError as exc:
        res.exit_code, res.message = exc.code, str(exc)
    except NoFeasibleCog as exc:
        res.exit_code, res.message = EXIT_REGION, f"region: {exc}"
    except ConfigError as exc:
        res.exit_code, res.message = EXIT_CONFIG, str(exc)
    return res


def sweep(cfg: ProjectConfig, name: str, levels: list[int], output_dir: str | Path | None = None) -> list[PipelineResult]:
    """Solve increasing cluster counts for ``name``, each seeded by the previous optimum."""
    out = Path(output_dir) if output_dir is not None else cfg.output_dir
    results = []
    prev: Placement | None = None
    for n in levels:
        level_cfg = cfg.with_n_com(name, n)
        refine = (prev, name) if prev is not None else None
        res = run_pipeline(level_cfg, out / f"ncom{n}", refine_from=refine)
        results.append(res)
        prev = res.placement if res.placement is not None else prev
    return results


def load_placement(path: str | Path) -> Placement:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return Placement.from_dict(data)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise StageError("verify", EXIT_VERIFY, f"cannot read placement {path}: {exc}") from exc


def load_region(path: str | Path, wheelbase: float) -> RegionGrid:
    try:
        return RegionGrid.from_csv(Path(path).read_text(encoding="utf-8"), wheelbase)
    except (OSError, ValueError, IndexError) as exc:
        raise StageError("region", EXIT_REGION, f"cannot read region grid {path}: {exc}") from exc
