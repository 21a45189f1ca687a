"""Tractive-force limits over a drive cycle and the resulting CoG region.

A candidate centre of gravity ``(b, h)`` is *inactive* when, for every sample
of the drive cycle, the force demanded from each driven wheel stays within
``mu * F_n`` and no wheel lifts off. ``b`` is measured forward from the rear
contact point and ``h`` up from the ground.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, replace
from pathlib import Path
from typing import NamedTuple

import numpy as np

G = 9.81


class NoFeasibleCog(ValueError):
    """Raised when no grid point keeps the tractive-force limits inactive."""


@dataclass(frozen=True)
class VehicleParams:
    wheelbase: float
    chassis_mass: float
    chassis_x: float
    chassis_y: float
    rider_mass: float
    rider_x: float
    rider_y: float
    mu_f: float = 0.9
    mu_r: float = 0.9
    mass: float | None = None  # total mass incl. chassis, rider and powertrain
    g: float = G
    driven: tuple[str, ...] = ("rear",)
    front_share: float = 0.5  # share of the demand sent to the front when both wheels drive
    c0: float = 0.0
    c1: float = 0.0
    c2: float = 0.35

    def __post_init__(self):
        if not self.wheelbase > 0:
            raise ValueError("wheelbase must be positive")
        if not (self.chassis_mass > 0 and self.rider_mass > 0):
            raise ValueError("chassis and rider masses must be positive")
        if self.mass is not None and not self.mass > 0:
            raise ValueError("total mass must be positive")
        for mu in (self.mu_f, self.mu_r):
            if not 0 < mu <= 1.5:
                raise ValueError(f"friction coefficient {mu} outside (0, 1.5]")
        if not self.driven or any(d not in ("front", "rear") for d in self.driven):
            raise ValueError(f"driven wheels must be a non-empty subset of front/rear, got {self.driven}")
        if not 0.0 <= self.front_share <= 1.0:
            raise ValueError("front_share must lie in [0, 1]")

    def with_total_mass(self, element_mass: float) -> VehicleParams:
        return replace(self, mass=self.chassis_mass + self.rider_mass + element_mass)

    @property
    def total_mass(self) -> float:
        if self.mass is None:
            raise ValueError("total vehicle mass is not set; call with_total_mass first")
        return self.mass

    def shares(self) -> tuple[float, float]:
        """Fraction of the tractive demand carried by (front, rear)."""
        if set(self.driven) == {"front", "rear"}:
            return (self.front_share, 1.0 - self.front_share)
        return (1.0, 0.0) if self.driven == ("front",) else (0.0, 1.0)


@dataclass(frozen=True)
class DriveCycle:
    t: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        v = np.asarray(self.v, dtype=float)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "v", v)
        if t.ndim != 1 or t.shape != v.shape or len(t) < 2:
            raise ValueError("drive cycle needs at least two (t, v) samples")
        if np.any(np.diff(t) <= 0):
            raise ValueError("drive cycle time must be strictly increasing")
        if np.any(v < 0):
            raise ValueError("drive cycle speed must be non-negative")

    def acceleration(self) -> np.ndarray:
        """Forward differences, backward difference on the last sample."""
        a = np.empty_like(self.v)
        a[:-1] = np.diff(self.v) / np.diff(self.t)
        a[-1] = a[-2]
        return a

    @classmethod
    def from_csv(cls, path: str | Path) -> DriveCycle:
        text = Path(path).read_text(encoding="utf-8")
        return cls.parse_csv(text)

    @classmethod
    def parse_csv(cls, text: str) -> DriveCycle:
        ts, vs = [], []
        for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1):
            if not row or not "".join(row).strip() or row[0].lstrip().startswith("#"):
                continue
            if len(row) != 2:
                raise ValueError(f"line {lineno}: expected two columns (time_s, speed_mps), got {len(row)}")
            try:
                t, v = float(row[0]), float(row[1])
            except ValueError:
                if not ts:  # header
                    continue
                raise ValueError(f"line {lineno}: non-numeric value in {row}") from None
            ts.append(t)
            vs.append(v)
        return cls(np.array(ts), np.array(vs))


class NormalForces(NamedTuple):
    front: np.ndarray | float
    rear: np.ndarray | float

    @property
    def wheel_lift(self):
        return np.logical_or(np.asarray(self.front) < 0, np.asarray(self.rear) < 0)


def normal_forces(params: VehicleParams, b, h, accel) -> NormalForces:
    """Static load split plus longitudinal load transfer (suspension ignored)."""
    m, g, l = params.total_mass, params.g, params.wheelbase
    b, h, accel = np.asarray(b, float), np.asarray(h, float), np.asarray(accel, float)
    f_front = b / l * m * g - h / l * m * accel
    f_rear = (l - b) / l * m * g + h / l * m * accel
    if f_front.ndim == 0:
        return NormalForces(float(f_front), float(f_rear))
    return NormalForces(f_front, f_rear)


def road_load(params: VehicleParams, v):
    v = np.asarray(v, float)
    return np.where(v > 0, params.c0 + params.c1 * v + params.c2 * v * v, 0.0)


def required_tractive_forces(params: VehicleParams, cycle: DriveCycle) -> np.ndarray:
    """Longitudinal force the driven wheels must deliver at every sample (negative when braking)."""
    return params.total_mass * cycle.acceleration() + road_load(params, cycle.v)


def required_tractive_force(params: VehicleParams, cycle: DriveCycle, i: int) -> float:
    if not 0 <= i < len(cycle.t):
        raise IndexError(f"sample {i} outside the cycle")
    return float(required_tractive_forces(params, cycle)[i])


@dataclass
class RegionGrid:
    b: np.ndarray  # forward distance from the rear contact point
    h: np.ndarray  # height above ground
    inactive: np.ndarray  # shape (len(h), len(b))
    wheelbase: float
    ideal: tuple[float, float] | None = None

    @property
    def empty(self) -> bool:
        return not bool(self.inactive.any())

    def is_inactive(self, b: float, h: float) -> bool:
        i = int(np.argmin(np.abs(self.h - h)))
        j = int(np.argmin(np.abs(self.b - b)))
        return bool(self.inactive[i, j])

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write("# format_version: 1\n")
        out.write("b,h,inactive\n")
        for i, h in enumerate(self.h):
            for j, b in enumerate(self.b):
                out.write(f"{b:.6g},{h:.6g},{int(self.inactive[i, j])}\n")
        return out.getvalue()

    @classmethod
    def from_csv(cls, text: str, wheelbase: float) -> RegionGrid:
        rows = [r for r in csv.reader(io.StringIO(text)) if r and not r[0].startswith("#")]
        data = np.array([[float(c) for c in r] for r in rows[1:]])
        bs, hs = np.unique(data[:, 0]), np.unique(data[:, 1])
        mask = np.zeros((len(hs), len(bs)), dtype=bool)
        for b, h, flag in data:
            mask[np.searchsorted(hs, h), np.searchsorted(bs, b)] = bool(flag)
        return cls(bs, hs, mask, wheelbase)


def _axis(step: float, upper: float) -> np.ndarray:
    n = int(np.floor(upper / step + 1e-9))
    vals = step * np.arange(1, n + 1)
    return vals[vals < upper - 1e-12]


def inactive_mask(params: VehicleParams, cycle: DriveCycle, b: np.ndarray, h: np.ndarray) -> np.ndarray:
    force = required_tractive_forces(params, cycle)
    accel = cycle.acceleration()
    share_f, share_r = params.shares()
    bb, hh = np.meshgrid(b, h)
    mask = np.ones(bb.shape, dtype=bool)
    for f, a in zip(force, accel):
        nf, nr = normal_forces(params, bb, hh, a)
        ok = (nf >= 0) & (nr >= 0)
        if share_f > 0:
            ok &= np.abs(share_f * f) <= params.mu_f * nf
        if share_r > 0:
            ok &= np.abs(share_r * f) <= params.mu_r * nr
        mask &= ok
    return mask


def inactive_region(
    params: VehicleParams,
    cycle: DriveCycle,
    step: float = 0.02,
    h_max: float = 1.2,
    b: np.ndarray | None = None,
    h: np.ndarray | None = None,
) -> RegionGrid:
    """Evaluate the tractive-force limits on a ``step``-spaced grid inside ``(0, l_wb) x (0, h_max]``."""
    if len(cycle.t) == 0:
        raise ValueError("empty drive cycle")
    b = _axis(step, params.wheelbase) if b is None else np.asarray(b, float)
    h = _axis(step, h_max + step / 2) if h is None else np.asarray(h, float)
    region = RegionGrid(b, h, inactive_mask(params, cycle, b, h), params.wheelbase)
    if not region.empty:
        region.ideal = ideal_cog(region)
    return region


def ideal_cog(region: RegionGrid) -> tuple[float, float]:
    """Lowest inactive point, preferring the middle of the wheelbase, then the rear."""
    hi, bi = np.nonzero(region.inactive)
    if len(hi) == 0:
        raise NoFeasibleCog("no CoG location keeps the tractive-force limits inactive")
    mid = region.wheelbase / 2
    keys = sorted(zip(np.round(region.h[hi], 9), np.round(np.abs(region.b[bi] - mid), 9), region.b[bi]))
    _, _, b = keys[0]
    h = region.h[hi[np.argmin(np.round(region.h[hi], 9))]]
    return (float(b), float(h))
