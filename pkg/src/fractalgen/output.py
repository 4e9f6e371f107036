"""Deterministic table output with a JSON sidecar of the resolved config."""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

from . import __version__


def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(v)
    if hasattr(v, "item"):
        return _fmt(v.item())
    return str(v)


def to_csv(columns, rows, config_hash) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(list(columns) + ["config_hash"])
    for r in rows:
        writer.writerow([_fmt(r.get(c, "")) for c in columns] + [config_hash])
    return buf.getvalue()


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if hasattr(v, "item"):
        return v.item()
    return v


def write_outputs(result, cfg, out_dir, fmt: str = "csv", plots: bool = True) -> list:
    """Write rows, summary, sidecar and figures; returns the written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    h = cfg.config_hash
    written = []
    if fmt == "csv":
        p = out / f"{result.kind}.csv"
        p.write_text(to_csv(result.columns, result.rows, h))
        written.append(p)
        if result.summary:
            p = out / f"{result.kind}_summary.csv"
            p.write_text(to_csv(result.summary_columns, result.summary, h))
            written.append(p)
    elif fmt == "json":
        p = out / f"{result.kind}.json"
        doc = {"config_hash": h, "rows": [dict(r, config_hash=h) for r in result.rows],
               "summary": result.summary, "notes": result.notes, "partial": result.partial}
        p.write_text(json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n")
        written.append(p)
    else:
        raise ValueError(f"unknown output format {fmt!r}")

    sidecar = {"config": cfg.resolved(), "config_hash": h, "version": __version__,
               "partial": result.partial, "notes": result.notes}
    p = out / "config.json"
    p.write_text(json.dumps(_jsonable(sidecar), indent=2, sort_keys=True) + "\n")
    written.append(p)

    if result.kind == "simulate" and cfg.params.get("save_trajectories"):
        from .processes import save_binary, save_csv

        for rep, traj in sorted(result.artifacts.get("trajectories", {}).items()):
            save_binary(traj, out / f"trajectory_{rep}.bin")
            save_csv(traj, out / f"trajectory_{rep}.csv")
            written += [out / f"trajectory_{rep}.bin", out / f"trajectory_{rep}.csv"]
    if result.kind == "dimension":
        from .fractal import write_counts_csv

        for alpha, est in sorted(result.artifacts.get("examples", {}).items()):
            p = out / f"counts_alpha{alpha:g}.csv"
            write_counts_csv(est, p)
            written.append(p)
    if plots:
        from .plotting import render

        written += render(result, out)
    return written


def format_table(columns, rows, limit: int = 40) -> str:
    """Plain fixed-width table for terminal output."""
    cells = [[_short(r.get(c, "")) for c in columns] for r in rows[:limit]]
    widths = [max([len(c)] + [len(row[i]) for row in cells]) for i, c in enumerate(columns)]
    lines = ["  ".join(c.rjust(w) for c, w in zip(columns, widths))]
    lines += ["  ".join(v.rjust(w) for v, w in zip(row, widths)) for row in cells]
    if len(rows) > limit:
        lines.append(f"... {len(rows) - limit} more rows")
    return "\n".join(lines)


def _short(v) -> str:
    if isinstance(v, float):
        return f"{v:.4g}"
    return _fmt(v)
