"""CSV ingestion and the synthetic datasets of the 1D and 2D experiments."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataspace import Dataset

__all__ = ["GeneratedData", "load_csv", "generate", "GENERATORS", "CIRCLES2D_GEOMETRY"]

TOY_POINTS = (-0.8, 0.0, 0.2, 0.5, 0.6)

# (center, radius, count); label = position in this tuple
CIRCLES2D_GEOMETRY = (
    ((0.0, 0.0), 0.5, 150),
    ((-1.0, 0.45), 0.12, 25),
    ((1.15, -0.7), 0.12, 25),
)

# (low, high, count); label = position, uniform noise is labelled -1
NOISY1D_GEOMETRY = (
    (-0.9, -0.7, 30),
    (-0.3, 0.2, 30),
    (0.7, 0.8, 10),
)
NOISY1D_NOISE = (-1.0, 1.0, 70)


def _is_number(tok: str) -> bool:
    try:
        float(tok)
    except ValueError:
        return False
    return True


def load_csv(path) -> Dataset:
    """Read one point per row; a leading non-numeric row is a header."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        rows = [(reader.line_num, r) for r in reader if any(c.strip() for c in r)]
    if not rows:
        raise ValueError(f"{path}: empty file")
    start = 0
    if not all(_is_number(c.strip()) for c in rows[0][1]):
        start = 1
    data = rows[start:]
    if not data:
        raise ValueError(f"{path}: no data rows")
    width = len(data[0][1])
    points = []
    for lineno, row in data:
        if len(row) != width:
            raise ValueError(f"ragged row {lineno}")
        try:
            points.append([float(c) for c in row])
        except ValueError:
            raise ValueError(f"non-numeric cell in row {lineno}") from None
    return Dataset(np.array(points))


@dataclass(frozen=True, eq=False)
class GeneratedData:
    dataset: Dataset
    labels: np.ndarray
    name: str
    seed: int
    assumptions: dict = field(default_factory=dict)


def _check_seed(seed) -> int:
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValueError("seed must be a 64-bit unsigned integer")
    return seed


def _noisy1d(rng: np.random.Generator):
    pts, labels = [], []
    for lab, (lo, hi, count) in enumerate(NOISY1D_GEOMETRY):
        pts.append(rng.uniform(lo, hi, count))
        labels.append(np.full(count, lab))
    lo, hi, count = NOISY1D_NOISE
    pts.append(rng.uniform(lo, hi, count))
    labels.append(np.full(count, -1))
    assumptions = {
        "clusters": [list(g) for g in NOISY1D_GEOMETRY],
        "noise": list(NOISY1D_NOISE),
        "distribution": "uniform",
    }
    return np.concatenate(pts)[:, None], np.concatenate(labels), assumptions


def _uniform_disc(rng, center, radius, count):
    r = radius * np.sqrt(rng.uniform(0.0, 1.0, count))
    theta = rng.uniform(0.0, 2.0 * np.pi, count)
    return np.column_stack([center[0] + r * np.cos(theta), center[1] + r * np.sin(theta)])


def _circles2d(rng: np.random.Generator):
    pts, labels = [], []
    for lab, (center, radius, count) in enumerate(CIRCLES2D_GEOMETRY):
        pts.append(_uniform_disc(rng, center, radius, count))
        labels.append(np.full(count, lab))
    assumptions = {
        "discs": [
            {"center": list(c), "radius": r, "count": n} for c, r, n in CIRCLES2D_GEOMETRY
        ],
        "distribution": "uniform in disc",
    }
    return np.concatenate(pts), np.concatenate(labels), assumptions


def _toy(rng):
    return np.array(TOY_POINTS)[:, None], np.zeros(len(TOY_POINTS), dtype=int), {}


GENERATORS = {"noisy1d": _noisy1d, "circles2d": _circles2d, "toy": _toy}


def generate(name: str, seed: int = 0) -> GeneratedData:
    """Build a synthetic dataset; deterministic for a given seed."""
    if name not in GENERATORS:
        raise ValueError(f"unknown spec {name!r}; choose from {sorted(GENERATORS)}")
    seed = _check_seed(seed)
    rng = np.random.default_rng(seed)
    pts, labels, assumptions = GENERATORS[name](rng)
    return GeneratedData(Dataset(pts), np.asarray(labels), name, seed, assumptions)
