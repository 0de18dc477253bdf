"""Fitted-constant checks of Gaussian kernel envelopes.

Every check fits the smallest constant that makes its inequality hold over
the samples.  It passes when that constant is finite; the worst margin is
then zero at the sample that fixes the constant.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable

import numpy as np
from scipy.integrate import trapezoid

from .radial_heat import HeatField, RadialSpace


@dataclass(frozen=True)
class BoundReport:
    bound: str
    fitted_C: float
    worst_margin: float
    samples: int
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return math.isfinite(self.fitted_C) and self.worst_margin >= 0.0 and all(
            math.isfinite(v) for v in self.extra.values()
        )


def write_reports(path: str | Path, reports: Iterable[BoundReport]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["bound", "fitted_C", "worst_margin", "samples"])
        for r in reports:
            w.writerow([r.bound, f"{r.fitted_C:.16e}", f"{r.worst_margin:.16e}", r.samples])


@dataclass(frozen=True)
class KernelSamples:
    """``(r, t, H)`` triples of a kernel centred at the pole."""

    r: np.ndarray
    t: np.ndarray
    h: np.ndarray

    def __post_init__(self):
        if not (self.r.shape == self.t.shape == self.h.shape):
            raise ValueError("sample arrays must share a shape")

    @property
    def n(self) -> int:
        return int(self.r.size)

    def with_value(self, index: int, value: float) -> "KernelSamples":
        h = self.h.copy()
        h[index] = value
        return KernelSamples(self.r, self.t, h)


def samples_from_field(fld: HeatField, r_factor: float = 3.0, r_cap: float = math.inf,
                       stride: int = 1) -> KernelSamples:
    """Grid samples with ``r <= min(r_factor sqrt(t), r_cap)`` at every stored time."""
    rs, ts, hs = [], [], []
    for j, t in enumerate(fld.t_grid):
        lim = min(r_factor * math.sqrt(t), r_cap)
        idx = np.nonzero(fld.r_grid <= lim)[0][::stride]
        rs.append(fld.r_grid[idx])
        ts.append(np.full(idx.size, t))
        hs.append(fld.values[j, idx])
    return KernelSamples(np.concatenate(rs), np.concatenate(ts), np.concatenate(hs))


def _log_volume_at(volume: Callable | RadialSpace, t: np.ndarray) -> np.ndarray:
    half = 0.5 * np.log(t)
    if isinstance(volume, RadialSpace):
        return np.asarray(volume.log_vol(half), dtype=float)
    return np.log(np.asarray(volume(np.exp(half)), dtype=float))


def _fit(log_h: np.ndarray, log_env: np.ndarray) -> float:
    """Smallest ``log C`` with ``log_h <= log C + log_env``; vanishing samples never bind."""
    d = (log_h - log_env)[np.isfinite(log_h)]
    return float(np.max(d)) if d.size else -math.inf


def _log(h: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(h > 0, np.log(np.where(h > 0, h, 1.0)), -np.inf)


def gaussian_upper_check(samples: KernelSamples, volume: Callable | RadialSpace) -> BoundReport:
    """Smallest ``C`` with ``H <= C V(sqrt t)^-1 exp(-r^2/(5t))``."""
    lv = _log_volume_at(volume, samples.t)
    env = -lv - samples.r ** 2 / (5.0 * samples.t)
    return BoundReport("gaussian_upper", math.exp(_fit(_log(samples.h), env)), 0.0, samples.n)


def li_yau_check(samples: KernelSamples, volume: Callable | RadialSpace, eps: float = 0.1) -> BoundReport:
    """Two-sided envelope with exponents ``1/(4 +- eps)``.

    ``fitted_C`` is the upper constant; ``extra['C_lower']`` is ``C'`` in
    ``H >= C'^-1 V(sqrt t)^-1 exp(-r^2/((4-eps)t))``, infinite when some
    sample vanishes.
    """
    if not 0 < eps < 2:
        raise ValueError("eps must lie in (0, 2)")
    lv = _log_volume_at(volume, samples.t)
    lh = _log(samples.h)
    up = -lv - samples.r ** 2 / ((4.0 + eps) * samples.t)
    lo = -lv - samples.r ** 2 / ((4.0 - eps) * samples.t)
    lc = _fit(lh, up)
    if samples.n and np.any(~np.isfinite(lh)):
        lcp = math.inf
    else:
        lcp = float(np.max(lo - lh)) if samples.n else -math.inf
    return BoundReport("li_yau", math.exp(lc), 0.0, samples.n, {"C_lower": math.exp(lcp) if lcp < 710 else math.inf})


def tail_mass(fld: HeatField, space: RadialSpace, R: float, t_index: int = -1) -> float:
    """``int_{r>R} u A dr`` by the trapezoid rule on the field's grid."""
    r = fld.r_grid
    if R > r[-1]:
        raise ValueError("R beyond the grid")
    u = fld.values[t_index]
    g = u * space.area(r)
    if R <= r[0]:
        return float(trapezoid(g, r))
    i = int(np.searchsorted(r, R, side="right"))
    # partial cell [R, r_i] with linear interpolation
    gr = np.interp(R, r, g)
    head = 0.5 * (gr + g[i]) * (r[i] - R) if i < r.size else 0.0
    return float(head + trapezoid(g[i:], r[i:]))


def stability(a: float, b: float) -> float:
    """Relative change between two fitted constants."""
    return abs(a - b) / max(abs(a), abs(b))
