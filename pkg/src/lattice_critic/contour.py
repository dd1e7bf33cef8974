"""Argument-principle zero counts on rectangles.

The contour is sampled on a uniform grid and refined adaptively wherever
the phase of f jumps by more than ``max_jump`` between neighbours, so the
accumulated argument is exact as long as no zero lies within the final
sampling resolution of the contour.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import PoleOrZeroTooClose

__all__ = ["ContourCount", "rectangle_winding"]


@dataclass(frozen=True)
class ContourCount:
    winding: float
    samples: int

    @property
    def count(self) -> int:
        return int(round(self.winding))

    @property
    def defect(self) -> float:
        """Distance of the accumulated argument from an integer number of turns."""
        return abs(self.winding - self.count)


def _edge(a: complex, b: complex, step: float) -> np.ndarray:
    n = max(2, int(math.ceil(abs(b - a) / step)) + 1)
    return a + (b - a) * np.linspace(0.0, 1.0, n)


def rectangle_winding(
    f: Callable[[np.ndarray], np.ndarray],
    sigma: tuple[float, float],
    t: tuple[float, float],
    step: float = 0.05,
    max_jump: float = math.pi / 4,
    min_len: float = 1e-10,
) -> ContourCount:
    """(1/2 pi) times the change of arg f around the positively oriented rectangle.

    ``f`` maps an array of complex points to an array of values and must be
    analytic and non-vanishing on the boundary.
    """
    s0, s1 = sorted(sigma)
    t0, t1 = sorted(t)
    corners = [complex(s0, t0), complex(s1, t0), complex(s1, t1), complex(s0, t1), complex(s0, t0)]
    pieces = [_edge(a, b, step)[:-1] for a, b in zip(corners[:-1], corners[1:])]
    pts = np.concatenate(pieces + [np.array([corners[0]])])
    vals = np.asarray(f(pts), dtype=complex)
    for _ in range(80):
        if not np.all(np.isfinite(vals)):
            raise PoleOrZeroTooClose("function is not finite on the contour")
        if np.any(vals == 0):
            raise PoleOrZeroTooClose("zero on the contour")
        d = np.angle(vals[1:] / vals[:-1])
        bad = np.nonzero(np.abs(d) > max_jump)[0]
        if bad.size == 0:
            return ContourCount(float(d.sum() / (2 * math.pi)), int(pts.size))
        if np.min(np.abs(pts[bad + 1] - pts[bad])) < min_len:
            raise PoleOrZeroTooClose("zero or pole on the contour")
        mids = (pts[bad] + pts[bad + 1]) / 2
        mvals = np.asarray(f(mids), dtype=complex)
        pts = np.insert(pts, bad + 1, mids)
        vals = np.insert(vals, bad + 1, mvals)
    raise PoleOrZeroTooClose("contour refinement did not settle")
