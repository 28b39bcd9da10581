"""CSV emission, run manifests, and the analysis-vs-simulation comparison."""

from __future__ import annotations

import csv
import json
import os
import time
from pathlib import Path

import numpy as np

TOOL_VERSION = "0.1.0"

# gates applied by the comparison (exit code 3 when violated)
TV_THRESHOLD = 0.05
HOLDING_REL_THRESHOLD = 0.10


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def write_csv(path, header, rows) -> None:
    """Write one CSV with a header row; floats carry 12 significant digits."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def read_csv(path):
    """Read a CSV into (header, list of rows of floats-or-strings)."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = []
        for row in reader:
            parsed = []
            for cell in row:
                try:
                    parsed.append(float(cell))
                except ValueError:
                    parsed.append(cell)
            rows.append(parsed)
    return header, rows


class ManifestTimer:
    """Collects manifest fields over a run and writes the file atomically."""

    def __init__(self, command: str, out_dir, scenario=None, seed=None):
        self.data = {
            "command": command,
            "scenario": str(scenario) if scenario is not None else None,
            "seed": seed,
            "output_dir": str(out_dir),
            "tool_version": TOOL_VERSION,
            "outputs": [],
            "diagnostics": {},
        }
        self.out_dir = Path(out_dir)
        self._start = time.monotonic()

    def add_output(self, path) -> None:
        self.data["outputs"].append(str(Path(path).name))

    def note(self, key: str, value) -> None:
        self.data["diagnostics"][key] = value

    def write(self) -> Path:
        self.data["wall_clock_seconds"] = time.monotonic() - self._start
        for name in self.data["outputs"]:
            if not (self.out_dir / name).exists():
                raise FileNotFoundError(f"manifest lists missing output {name}")
        target = self.out_dir / "run_manifest.json"
        tmp = target.with_suffix(".json.tmp")
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(self.data, fh, indent=2, sort_keys=True)
            fh.write("\n")
        os.replace(tmp, target)
        return target


def total_variation(p, q) -> float:
    """Half the L1 distance between two discrete distributions."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError("distributions must have the same support")
    return 0.5 * float(np.abs(p - q).sum())


def _load_pj(directory: Path):
    """Occupancy distribution from pj.csv, falling back to sim_pj.csv."""
    for name in ("pj.csv", "sim_pj.csv"):
        path = directory / name
        if path.exists():
            _, rows = read_csv(path)
            return np.array([row[1] for row in rows]), name
    raise FileNotFoundError(f"no pj.csv or sim_pj.csv in {directory}")


def _load_holding_rate(directory: Path):
    path = directory / "holding.csv"
    if not path.exists():
        return None
    header, rows = read_csv(path)
    record = dict(zip(header, rows[0]))
    return float(record["mu_H"])


def _load_sim_holding_mean(directory: Path):
    path = directory / "sim_counters.csv"
    if not path.exists():
        return None
    _, rows = read_csv(path)
    table = {row[0]: row[1] for row in rows}
    mean = table.get("holding_time_mean")
    return float(mean) if mean not in (None, "") else None


def _load_buffer_curves(directory: Path):
    curves = {}
    for mode, name in (
        ("mobile-mixture", "buffer_mobile_mixture.csv"),
        ("mobile-literal", "buffer_mobile_literal.csv"),
    ):
        path = directory / name
        if path.exists():
            _, rows = read_csv(path)
            xs = np.array([row[0] for row in rows])
            gs = np.array([row[1] for row in rows])
            curves[mode] = (xs, gs)
    return curves


def _load_oracle(directory: Path, names=("oracle_mobile.csv", "oracle_fixed.csv")):
    """Fluid-oracle estimates; mode-specific filenames avoid mistaking a
    birth-death occupancy table for buffer levels."""
    for name in names:
        path = directory / name
        if path.exists():
            _, rows = read_csv(path)
            xs = np.array([row[0] for row in rows])
            est = np.array([row[1] for row in rows])
            se = np.array([row[2] for row in rows])
            return xs, est, se
    return None


def compare_dirs(analysis_dir, sim_dir):
    """Build comparison rows and the overall pass verdict.

    Gated metrics: total variation between the two occupancy distributions
    and the relative error of the simulated mean holding time against
    1/mu_H.  Buffer-vs-oracle rows are informational (CI flags only).
    """
    analysis_dir = Path(analysis_dir)
    sim_dir = Path(sim_dir)
    rows = []
    all_pass = True

    pa, _ = _load_pj(analysis_dir)
    ps, _ = _load_pj(sim_dir)
    if pa.shape != ps.shape:
        raise ValueError("occupancy distributions have different channel counts")
    tv = total_variation(pa, ps)
    ok = tv < TV_THRESHOLD
    all_pass &= ok
    rows.append(["tv_occupancy", tv, TV_THRESHOLD, "pass" if ok else "fail"])

    mu_h = _load_holding_rate(analysis_dir)
    sim_mean = _load_sim_holding_mean(sim_dir)
    if mu_h is not None and sim_mean is not None:
        rel = abs(sim_mean * mu_h - 1.0)
        ok = rel < HOLDING_REL_THRESHOLD
        all_pass &= ok
        rows.append(["holding_mean_rel_err", rel, HOLDING_REL_THRESHOLD, "pass" if ok else "fail"])

    bd = _load_oracle(sim_dir, names=("oracle_birth_death.csv",)) or _load_oracle(
        analysis_dir, names=("oracle_birth_death.csv",)
    )
    if bd is not None and bd[1].shape == pa.shape:
        tv_bd = total_variation(pa, bd[1])
        rows.append(["tv_occupancy_oracle", tv_bd, 0.01, "pass" if tv_bd < 0.01 else "fail"])

    oracle = _load_oracle(sim_dir) or _load_oracle(analysis_dir)
    if oracle is not None:
        xs_o, est, se = oracle
        for mode, (xs_a, gs_a) in sorted(_load_buffer_curves(analysis_dir).items()):
            for x, e, s in zip(xs_o, est, se):
                idx = int(np.argmin(np.abs(xs_a - x)))
                if abs(xs_a[idx] - x) > 1e-9 * max(1.0, abs(x)):
                    continue
                gap = gs_a[idx] - e
                within = abs(gap) <= 2.5758 * s
                rows.append(
                    [f"buffer_gap[{mode}][x={x:g}]", gap, 2.5758 * s,
                     "within-99ci" if within else "outside-99ci"]
                )
    return rows, all_pass
