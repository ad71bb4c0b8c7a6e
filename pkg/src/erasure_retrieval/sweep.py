"""Resumable, parallel sweep over (epsilon, L_q, R, n) cells with a fixed row schema.

Each (n, L_q, R) group is one task: its epsilon cells share queries and
erasure draws, which changes nothing in the rows because no random stream is
keyed by epsilon.  The output file is rewritten atomically, sorted by cell
key, after every finished group, so an interrupted run resumes from the last
completed group.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Iterable

from .config import SweepSpec
from .harness import CSV_FIELDS, ExperimentConfig, cell_rows

WORKERS_ENV = "ERASURE_RETRIEVAL_WORKERS"
INT_FIELDS = frozenset({"L_q", "n", "trials", "resampled_queries"})


class SweepIOError(RuntimeError):
    pass


def cell_key(row: dict) -> tuple:
    return (int(row["n"]), int(row["L_q"]), float(row["R"]), float(row["epsilon"]))


def config_key(cfg: ExperimentConfig, epsilon: float) -> tuple:
    return (int(cfg.n), int(cfg.L_q), float(cfg.R), float(epsilon))


def _typed(row: dict) -> dict:
    out = {}
    for k in CSV_FIELDS:
        value = row[k]
        if k in INT_FIELDS:
            out[k] = int(value)
        else:
            out[k] = float("nan") if value is None else float(value)
    return out


def format_value(value) -> str:
    # repr round-trips floats exactly, so rewriting a file reproduces it byte for byte
    return str(int(value)) if isinstance(value, int) else repr(float(value))


def read_rows(path: Path, format: str) -> list[dict]:
    if not path.exists():
        return []
    text = path.read_text()
    if not text.strip():
        return []
    if format == "json":
        return [_typed(r) for r in json.loads(text)]
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != CSV_FIELDS:
        raise SweepIOError(f"{path}: header does not match the row schema")
    return [_typed(r) for r in reader]


def render_rows(rows: Iterable[dict], format: str) -> str:
    rows = sorted(rows, key=cell_key)
    if format == "json":
        clean = [{k: (None if isinstance(r[k], float) and math.isnan(r[k]) else r[k])
                  for k in CSV_FIELDS} for r in rows]
        return json.dumps(clean, indent=1) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_FIELDS)
    for r in rows:
        writer.writerow([format_value(r[k]) for k in CSV_FIELDS])
    return buf.getvalue()


def write_rows(path: Path, rows: Iterable[dict], format: str) -> None:
    """Atomic replace: a crash leaves either the old or the new file."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(render_rows(rows, format))
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def resolve_workers(flag: int | None = None) -> int:
    """Flag first, then the environment override, then one worker."""
    if flag is not None:
        value, source = flag, "--workers"
    elif os.environ.get(WORKERS_ENV):
        value, source = os.environ[WORKERS_ENV], WORKERS_ENV
    else:
        return 1
    try:
        value = int(value)
    except ValueError:
        raise ValueError(f"{source}: expected an integer, got {value!r}") from None
    if value < 1:
        raise ValueError(f"{source}: must be >= 1, got {value}")
    return value


def _run_group(cfg: ExperimentConfig) -> list[dict]:
    return cell_rows(cfg)


@dataclass(frozen=True)
class SweepSummary:
    path: Path
    computed: int
    skipped: int
    seconds: float


def run_sweep(spec: SweepSpec, workers: int = 1,
              log: Callable[[str], None] | None = None) -> SweepSummary:
    """Compute every cell of ``spec`` that is not already present in the output file."""
    if spec.out is None:
        raise ValueError("out: the sweep needs an output path")
    path = spec.out
    start = time.perf_counter()
    existing = {cell_key(r): r for r in read_rows(path, spec.format)}
    todo = []
    skipped = 0
    for group in spec.groups:
        missing = tuple(e for e in group.epsilons if config_key(group, e) not in existing)
        skipped += len(group.epsilons) - len(missing)
        if missing:
            todo.append(replace(group, epsilons=missing))
    rows = dict(existing)
    computed = 0

    def absorb(cfg: ExperimentConfig, new_rows: list[dict]) -> None:
        nonlocal computed
        for r in new_rows:
            rows[cell_key(r)] = r
        computed += len(new_rows)
        try:
            write_rows(path, rows.values(), spec.format)
        except OSError as exc:
            raise SweepIOError(f"cell n={cfg.n} L_q={cfg.L_q} R={cfg.R} "
                               f"epsilon={list(cfg.epsilons)}: {exc}") from exc
        if log:
            log(f"done n={cfg.n} L_q={cfg.L_q} R={cfg.R} ({len(new_rows)} cells)")

    if workers <= 1 or len(todo) <= 1:
        for cfg in todo:
            absorb(cfg, _run_group(cfg))
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            # completion order varies; the sorted rewrite makes it irrelevant
            for cfg, new_rows in zip(todo, pool.map(_run_group, todo)):
                absorb(cfg, new_rows)
    if not path.exists():
        write_rows(path, rows.values(), spec.format)
    return SweepSummary(path, computed, skipped, time.perf_counter() - start)
