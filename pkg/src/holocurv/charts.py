"""Chart points, single and batched."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ChartPoint:
    chart: int
    coords: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coords", np.atleast_1d(np.asarray(self.coords, dtype=complex)))

    @property
    def dim(self):
        return self.coords.shape[0]


@dataclass(frozen=True)
class ChartPoints:
    """A batch of points, each carrying its own chart id."""

    chart: np.ndarray
    coords: np.ndarray

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=complex)
        if coords.ndim == 1:
            coords = coords[:, None]
        chart = np.asarray(self.chart, dtype=np.int64)
        if chart.ndim == 0:
            chart = np.full(coords.shape[0], int(chart), dtype=np.int64)
        if chart.shape != (coords.shape[0],):
            raise ValueError("chart ids and coordinates disagree in length")
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "chart", chart)

    @classmethod
    def of(cls, points):
        if isinstance(points, ChartPoints):
            return points
        if isinstance(points, ChartPoint):
            return cls(np.array([points.chart]), points.coords[None, :])
        points = list(points)
        return cls(np.array([p.chart for p in points]), np.stack([p.coords for p in points]))

    def __len__(self):
        return self.coords.shape[0]

    @property
    def dim(self):
        return self.coords.shape[1]

    def __getitem__(self, idx):
        if isinstance(idx, (int, np.integer)):
            return ChartPoint(int(self.chart[idx]), self.coords[idx])
        return ChartPoints(self.chart[idx], self.coords[idx])

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    @staticmethod
    def concat(batches):
        batches = list(batches)
        return ChartPoints(
            np.concatenate([b.chart for b in batches]),
            np.concatenate([b.coords for b in batches], axis=0),
        )


def grouped(fn, pts, *args):
    """Apply ``fn(chart, coords, *args)`` chart by chart and reassemble in order."""
    pts = ChartPoints.of(pts)
    out = None
    for c in np.unique(pts.chart):
        mask = pts.chart == c
        res = np.asarray(fn(int(c), pts.coords[mask], *[a[mask] for a in args]))
        if out is None:
            out = np.zeros((len(pts),) + res.shape[1:], dtype=res.dtype)
        elif res.dtype.kind == "c" and out.dtype.kind != "c":
            out = out.astype(complex)
        out[mask] = res
    if out is None:
        raise ValueError("empty point batch")
    return out
