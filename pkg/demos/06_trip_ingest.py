# %% [markdown]
# # From trip records to an instance
#
# Trip records are bucketed on a lon/lat grid. A task is an (origin cell,
# destination cell) pair. A machine is a taxi, placed at its most frequent
# pickup cell. Levels are toll options: a higher toll buys a faster route,
# so level 1 is the fastest and lowest-paying. A small synthetic trip file
# stands in for the real data here.

# %%
import csv
import json
import tempfile
from datetime import datetime, timedelta
from pathlib import Path

import numpy as np

from omla import ingest, lp, tables

rng = np.random.default_rng(0)
cells = [(-73.99, 40.75), (-73.97, 40.76), (-73.95, 40.78)]
path = Path(tempfile.mkdtemp()) / "trips.csv"
with open(path, "w", newline="") as fh:
    w = csv.writer(fh)
    w.writerow(ingest.COLUMNS)
    for taxi in range(6):
        home = cells[taxi % 3]
        for k in range(12):
            dest = cells[int(rng.integers(3))]
            start = datetime(2016, 1, 4 + k % 20, 19, int(rng.integers(60)))
            dur = int(rng.integers(300, 1500))
            w.writerow([f"T{taxi}", f"D{taxi}", home[0], home[1], dest[0], dest[1],
                        start.isoformat(), (start + timedelta(seconds=dur)).isoformat(),
                        dur, round(8 + dur / 60, 2), 0])

trips, skipped = ingest.load_trips(path)
inst, report = ingest.build_instance(trips, min_trips=6, delta=5, seed=1)
print({k: report[k] for k in ("trips", "taxis_kept", "machines", "tasks", "edges",
                              "rescale_factor", "reward_repairs", "delay_shifts")})
print("skipped rows:", skipped)

# %%
sol = lp.solve_instance(inst)
tb = tables.build_tables(inst, sol)
print(f"LP(Off) = {sol.objective:.2f}, online expectation = {tb.expected_reward():.2f}")
print("rewards of edge 0 by level:", np.round(inst.rewards[0], 2))
