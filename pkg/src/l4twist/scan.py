"""Checkpointed, resumable parameter sweeps over (mu, E) grids.

Cells are pure functions of their parameters, so the final table is
byte-identical regardless of worker count, interruption or resume
pattern: workers only compute, the parent process appends finished cells
to a newline-delimited JSON checkpoint, and the output CSV is produced by
a deterministic sort with fixed 17-significant-digit formatting.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field

import numpy as np

from .errors import L4TwistError

__all__ = ["SweepSpec", "run_sweep", "TASKS"]

TASKS = ("fixed_point_W", "reconnection:2/7", "reconnection:3/10", "nf_chart")

CSV_HEADER = "mu,E,task,value,status"


@dataclass(frozen=True)
class SweepSpec:
    """Grid extents and the tasks to run on them.

    ``fixed_point_W`` runs on the full (mu, E) product grid; reconnection
    tasks bisect over the mu range once per E row; ``nf_chart`` traces the
    twistless curve once per mu column (value = vertex count).
    """

    mu_min: float
    mu_max: float
    mu_count: int
    e_min: float
    e_max: float
    e_count: int
    tasks: tuple[str, ...] = ("fixed_point_W",)
    worker_count: int = 1

    def __post_init__(self):
        if self.mu_count < 1 or self.e_count < 1:
            raise ValueError("grids must be non-empty")
        if not (0.0 < self.mu_min <= self.mu_max):
            raise ValueError("mu bounds must be positive and ordered")
        if not (self.e_min <= self.e_max):
            raise ValueError("E bounds must be ordered")
        unknown = set(self.tasks) - set(TASKS)
        if unknown:
            raise ValueError(f"unknown tasks {sorted(unknown)}")

    def mu_grid(self) -> np.ndarray:
        return np.linspace(self.mu_min, self.mu_max, self.mu_count)

    def e_grid(self) -> np.ndarray:
        return np.linspace(self.e_min, self.e_max, self.e_count)

    def cells(self) -> list[tuple[str, float, float]]:
        """All (task, mu, E) cells; reconnection rows use mu = NaN keys."""
        out = []
        for task in self.tasks:
            if task == "fixed_point_W":
                for mu in self.mu_grid():
                    for e in self.e_grid():
                        out.append((task, float(mu), float(e)))
            elif task.startswith("reconnection:"):
                for e in self.e_grid():
                    out.append((task, math.nan, float(e)))
            elif task == "nf_chart":
                for mu in self.mu_grid():
                    out.append((task, float(mu), math.nan))
        return out


def _cell_key(task: str, mu: float, e: float) -> tuple:
    return (task, _fmt(mu), _fmt(e))


def _fmt(x: float) -> str:
    if isinstance(x, float) and math.isnan(x):
        return "nan"
    return f"{x:.17g}"


def _run_cell(task: str, mu: float, e: float, opts: dict) -> tuple[float, str]:
    """Compute one cell; returns (value, status)."""
    from fractions import Fraction

    try:
        if task == "fixed_point_W":
            from .rotation import fixed_point_rotation_number

            return fixed_point_rotation_number(mu, e), "ok"
        if task.startswith("reconnection:"):
            from .twist import reconnection_search_numeric

            frac = Fraction(task.split(":", 1)[1])
            bracket = (opts["mu_min"], opts["mu_max"])
            mu_star = reconnection_search_numeric(frac, e, bracket)
            return mu_star, "ok"
        if task == "nf_chart":
            from .twist import twistless_curve

            return float(twistless_curve(mu).n_vertices), "ok"
        raise ValueError(f"unknown task {task}")
    except L4TwistError as exc:
        return math.nan, type(exc).__name__


def _load_checkpoint(path: str) -> dict:
    done = {}
    if path and os.path.exists(path):
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                rec = json.loads(line)
                done[(rec["task"], rec["mu_key"], rec["e_key"])] = (
                    rec["value"],
                    rec["status"],
                )
    return done


def run_sweep(
    spec: SweepSpec, checkpoint_path: str | None = None, out_csv: str | None = None
) -> list[str]:
    """Execute the sweep; returns the final CSV lines (header included).

    Completed cells found in the checkpoint are not recomputed.  With
    ``worker_count > 1`` cells run in a process pool; results are written
    to the checkpoint by the parent in completion order but the final
    table is sorted, so the output does not depend on scheduling.
    """
    cells = spec.cells()
    done = _load_checkpoint(checkpoint_path) if checkpoint_path else {}
    todo = [c for c in cells if _cell_key(*c) not in done]
    opts = {"mu_min": spec.mu_min, "mu_max": spec.mu_max}

    ckpt = open(checkpoint_path, "a") if checkpoint_path else None

    def record(task, mu, e, value, status):
        key = _cell_key(task, mu, e)
        done[key] = (value, status)
        if ckpt is not None:
            rec = {
                "task": task,
                "mu_key": key[1],
                "e_key": key[2],
                "value": value,
                "status": status,
            }
            ckpt.write(json.dumps(rec) + "\n")
            ckpt.flush()

    try:
        if spec.worker_count <= 1:
            for task, mu, e in todo:
                value, status = _run_cell(task, mu, e, opts)
                record(task, mu, e, value, status)
        else:
            with ProcessPoolExecutor(max_workers=spec.worker_count) as pool:
                futures = {
                    pool.submit(_run_cell, task, mu, e, opts): (task, mu, e)
                    for task, mu, e in todo
                }
                for fut in as_completed(futures):
                    task, mu, e = futures[fut]
                    value, status = fut.result()
                    record(task, mu, e, value, status)
    finally:
        if ckpt is not None:
            ckpt.close()

    lines = [CSV_HEADER]
    for task, mu, e in sorted(cells, key=lambda c: (c[0], _sort_val(c[1]), _sort_val(c[2]))):
        value, status = done[_cell_key(task, mu, e)]
        val_str = "" if (isinstance(value, float) and math.isnan(value)) else _fmt(value)
        lines.append(f"{_fmt(mu)},{_fmt(e)},{task},{val_str},{status}")
    if out_csv:
        with open(out_csv, "w", newline="") as fh:
            fh.write("\n".join(lines) + "\n")
    return lines


def _sort_val(x: float) -> float:
    return math.inf if (isinstance(x, float) and math.isnan(x)) else x
