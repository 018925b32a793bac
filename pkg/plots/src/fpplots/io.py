"""Readers for the run-artifact file formats."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np


class MalformedInput(ValueError):
    """Input file does not match its documented format."""


def read_csv(path: Path, expected_columns: list[str] | None = None) -> dict[str, np.ndarray]:
    """Read a headered CSV into named float columns (non-numeric first
    column allowed, kept as strings). Errors name the file and line."""
    path = Path(path)
    try:
        lines = path.read_text().strip().splitlines()
    except OSError as exc:
        raise MalformedInput(f"{path}: {exc}") from exc
    if not lines:
        raise MalformedInput(f"{path}: empty file")
    header = [h.strip() for h in lines[0].split(",")]
    if expected_columns is not None:
        missing = [c for c in expected_columns if c not in header]
        if missing:
            raise MalformedInput(f"{path}: line 1: missing columns {missing}")
    cols: dict[str, list] = {h: [] for h in header}
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != len(header):
            raise MalformedInput(
                f"{path}: line {lineno}: expected {len(header)} fields, got {len(parts)}"
            )
        for h, raw in zip(header, parts):
            try:
                cols[h].append(float(raw))
            except ValueError:
                cols[h].append(raw)
    out = {}
    for h, vals in cols.items():
        try:
            out[h] = np.asarray(vals, dtype=np.float64)
        except (ValueError, TypeError):
            out[h] = np.asarray(vals)
    return out


def read_samples(path: Path) -> np.ndarray:
    """Sample matrix from a samples CSV; drops the optional leading t column."""
    cols = read_csv(path)
    names = [h for h in cols if h.startswith("x_")]
    if not names:
        raise MalformedInput(f"{path}: no x_i columns")
    names.sort(key=lambda h: int(h.split("_")[1]))
    return np.stack([cols[h] for h in names], axis=1)


def read_metrics(path: Path) -> dict:
    path = Path(path)
    try:
        return json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise MalformedInput(f"{path}: {exc}") from exc
