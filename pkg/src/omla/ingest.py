"""Build instances from taxi trip records.

Input CSV header (fixed)::

    taxi_id,driver_id,pickup_lon,pickup_lat,dropoff_lon,dropoff_lat,
    pickup_ts,dropoff_ts,duration_s,fare,toll

Timestamps are ISO-8601. Trips are bucketed onto a lon/lat grid; a task is
an (origin cell, destination cell) pair, a machine is a taxi, and processing
levels are toll options (highest toll = level 1 = fastest route).
"""
from __future__ import annotations

import csv
import json
import logging
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from datetime import datetime, time as dtime
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .model import UNLIMITED, DelayDist, Instance, expected_delay, is_unlimited, make_instance, validate

log = logging.getLogger(__name__)

COLUMNS = ("taxi_id", "driver_id", "pickup_lon", "pickup_lat", "dropoff_lon", "dropoff_lat",
           "pickup_ts", "dropoff_ts", "duration_s", "fare", "toll")


class IngestError(ValueError):
    pass


@dataclass(frozen=True)
class TripRecord:
    taxi_id: str
    driver_id: str
    pickup_lon: float
    pickup_lat: float
    dropoff_lon: float
    dropoff_lat: float
    pickup_ts: datetime
    dropoff_ts: datetime
    duration_s: float
    fare: float
    toll: float


@dataclass(frozen=True)
class GridConfig:
    lon_min: float = -75.0
    lon_max: float = -73.0
    lat_min: float = 40.4
    lat_max: float = 41.0
    cell: float = 0.02
    slot_minutes: float = 1.0
    slots: int = 60
    start: dtime = dtime(19, 0)
    days: int = 23

    def __post_init__(self):
        if self.cell <= 0:
            raise ValueError("cell size must be positive")
        if not (self.lon_min < self.lon_max and self.lat_min < self.lat_max):
            raise ValueError("degenerate bounding box")
        if self.slots < 1 or self.slot_minutes <= 0 or self.days < 1:
            raise ValueError("slots, slot length and day count must be positive")

    def in_box(self, lon, lat) -> bool:
        return self.lon_min <= lon <= self.lon_max and self.lat_min <= lat <= self.lat_max

    def cell_of(self, lon, lat) -> tuple[int, int]:
        return (int(math.floor((lon - self.lon_min) / self.cell)),
                int(math.floor((lat - self.lat_min) / self.cell)))

    def slot_of(self, ts: datetime) -> int | None:
        """1-based slot of a timestamp within the daily window, or None outside it."""
        minutes = (ts.hour - self.start.hour) * 60 + (ts.minute - self.start.minute) \
            + (ts.second - self.start.second) / 60.0
        k = int(math.floor(minutes / self.slot_minutes))
        return k + 1 if 0 <= k < self.slots else None


@dataclass(frozen=True)
class TollLevelSpec:
    """Levels ordered from level 1 upward: decreasing toll, increasing duration."""

    tolls: tuple = (4.8, 2.2, 0.0)
    theta: tuple = (3, 5, 10)
    duration_scale: tuple = (0.85, 0.92, 1.0)


class TripLoad(NamedTuple):
    trips: list
    skipped: int


def load_trips(path, grid: GridConfig = GridConfig()) -> TripLoad:
    """Parse and filter a trip CSV; rows that fail to parse or fall outside
    the box or the daily window are counted in ``skipped``."""
    trips, skipped = [], 0
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in COLUMNS if c not in (reader.fieldnames or [])]
        if missing:
            raise IngestError(f"missing required columns: {missing}")
        for row in reader:
            try:
                rec = TripRecord(
                    taxi_id=row["taxi_id"].strip(),
                    driver_id=row["driver_id"].strip(),
                    pickup_lon=float(row["pickup_lon"]), pickup_lat=float(row["pickup_lat"]),
                    dropoff_lon=float(row["dropoff_lon"]), dropoff_lat=float(row["dropoff_lat"]),
                    pickup_ts=datetime.fromisoformat(row["pickup_ts"].strip()),
                    dropoff_ts=datetime.fromisoformat(row["dropoff_ts"].strip()),
                    duration_s=float(row["duration_s"]), fare=float(row["fare"]),
                    toll=float(row["toll"]),
                )
            except (TypeError, ValueError, AttributeError):
                skipped += 1
                continue
            if (not rec.taxi_id or rec.duration_s <= 0
                    or not grid.in_box(rec.pickup_lon, rec.pickup_lat)
                    or not grid.in_box(rec.dropoff_lon, rec.dropoff_lat)
                    or grid.slot_of(rec.pickup_ts) is None):
                skipped += 1
                continue
            trips.append(rec)
    return TripLoad(trips, skipped)


def _histogram(slots: list) -> np.ndarray:
    arr = np.bincount(np.asarray(slots, dtype=int), minlength=2)[1:].astype(float)
    return arr / arr.sum()


def _level_delays(trips, grid: GridConfig, levels: TollLevelSpec, sidecar, report) -> list:
    if sidecar is not None:
        data = json.loads(Path(sidecar).read_text())
        ds = [DelayDist.from_mapping(d["pmf"]) for d in data["levels"]]
        if len(ds) != len(levels.tolls):
            raise IngestError("sidecar must give one delay pmf per level")
        report["delay_source"] = str(sidecar)
        return ds
    slot_s = grid.slot_minutes * 60.0
    out = []
    for scale in levels.duration_scale:
        slots = [max(1, math.ceil(tr.duration_s * scale / slot_s)) for tr in trips]
        out.append(DelayDist(_histogram(slots)))
    report["delay_source"] = "scaled empirical histogram"
    # keep E[d] strictly increasing in level by delaying a level by whole slots
    shifts = 0
    for i in range(1, len(out)):
        while expected_delay(out[i]) <= expected_delay(out[i - 1]):
            out[i] = DelayDist(np.concatenate([[0.0], out[i].pmf]))
            shifts += 1
    report["delay_shifts"] = shifts
    return out


def build_instance(trips, grid: GridConfig = GridConfig(), levels: TollLevelSpec = TollLevelSpec(),
                   min_trips: int = 6, n_taxis: int | None = None, delta=UNLIMITED, seed: int = 0,
                   sidecar=None) -> tuple[Instance, dict]:
    """Return ``(instance, report)``; raises :class:`IngestError` when no edge survives."""
    if not trips:
        raise IngestError("no trips to build from")
    rng = np.random.default_rng(seed)
    report: dict = {"trips": len(trips)}

    per_taxi = defaultdict(list)
    for tr in trips:
        per_taxi[tr.taxi_id].append(tr)
    kept = sorted(t for t, rs in per_taxi.items() if len(rs) >= min_trips)
    report["taxis_total"] = len(per_taxi)
    report["taxis_kept"] = len(kept)
    if n_taxis is not None and len(kept) > n_taxis:
        kept = sorted(rng.choice(kept, size=n_taxis, replace=False).tolist())
        report["taxis_sampled"] = n_taxis
    if not kept:
        raise IngestError(f"degenerate output: no taxi has at least {min_trips} trips")

    location = {}
    for taxi in kept:
        counts = Counter(grid.cell_of(tr.pickup_lon, tr.pickup_lat) for tr in per_taxi[taxi])
        top = max(counts.values())
        location[taxi] = min(c for c, k in counts.items() if k == top)

    types = defaultdict(list)
    for tr in trips:
        key = (grid.cell_of(tr.pickup_lon, tr.pickup_lat), grid.cell_of(tr.dropoff_lon, tr.dropoff_lat))
        types[key].append(tr)
    served = set(location.values())
    task_keys = sorted(k for k in types if k[0] in served)
    if not task_keys:
        raise IngestError("degenerate output: no trip type starts at a taxi location")
    task_id = {k: i for i, k in enumerate(task_keys)}

    pairs = [(u, task_id[k]) for u, taxi in enumerate(kept) for k in task_keys if k[0] == location[taxi]]
    if not pairs:
        raise IngestError("degenerate output: no edges")
    q = rng.uniform(0.5, 1.0, size=len(pairs))

    T = grid.slots
    counts = np.zeros((len(task_keys), T))
    for k, i in task_id.items():
        for tr in types[k]:
            counts[i, grid.slot_of(tr.pickup_ts) - 1] += 1
    p = counts / grid.days
    factor = max(1.0, float(p.sum(axis=0).max()))
    p = p / factor
    report["rescale_factor"] = factor

    L = len(levels.tolls)
    mean_fare = np.array([np.mean([tr.fare for tr in types[k]]) for k in task_keys])
    repairs = 0
    rewards = []
    for _, v in pairs:
        r = mean_fare[v] - np.asarray(levels.tolls, dtype=float)
        fixed = np.maximum(np.sort(r), 0.0)
        for i in range(1, L):
            fixed[i] = max(fixed[i], fixed[i - 1] + 1e-6)
        if not np.array_equal(fixed, r):
            repairs += 1
        rewards.append(fixed)
    report["reward_repairs"] = repairs

    delays = _level_delays([tr for k in task_keys for tr in types[k]], grid, levels, sidecar, report)

    if is_unlimited(delta):
        budgets = [UNLIMITED] * len(kept)
    else:
        budgets = [int(b) for b in rng.integers(1, int(delta) + 1, size=len(kept))]

    inst = make_instance(T=T, L=L, budgets=budgets, n_tasks=len(task_keys),
                         edges=[(u, v, qe) for (u, v), qe in zip(pairs, q)],
                         rewards=np.array(rewards), theta=levels.theta, arrivals=p, delays=delays)
    report.update(machines=inst.n_machines, tasks=inst.n_tasks, edges=inst.n_edges,
                  taxi_ids=kept, task_cells=[[list(a), list(b)] for a, b in task_keys])
    check = validate(inst)
    if not check.ok:
        raise IngestError(f"built instance fails validation: {check}")
    return inst, report
