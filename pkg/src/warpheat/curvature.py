"""Ricci curvature of ``dr^2 + f^2 k1 + h^2 k2`` over the Hopf fibration on R^8.

Everything is evaluated as ``r^2 Rc`` from the scale-free quantities
``log(F/r)``, ``r F'/F`` and ``r^2 F''/F``; the exponential terms are combined
in log form so radii far beyond double range are handled.  Physical values
``Rc = r^-2 (r^2 Rc)`` may underflow to zero, which is still finite.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Protocol, Sequence

import numpy as np

from .warp_metric import OutOfRange, WarpProfile, eval_bar_log

COMPONENTS = ("rc_k1", "rc_k2", "rc_rad")


class Profile(Protocol):
    def eval(self, which: str, j: int, s: float) -> tuple[float, float, float]: ...

    def joint_log(self, j: int) -> float: ...


Triple = Callable[[float], tuple[float, float, float]]


@dataclass(frozen=True)
class FunctionProfile:
    """Warp functions given as callables ``r -> (F, F', F'')`` on ``(0, r_max]``.

    Used for closed-form test profiles; a single joint sits at ``r = 1``.
    """

    f: Triple
    h: Triple
    r_max: float = math.inf
    r_min: float = 0.0

    def joint_log(self, j: int) -> float:
        return 0.0

    def eval(self, which: str, j: int, s: float) -> tuple[float, float, float]:
        return self.eval_log(which, s + self.joint_log(j))

    def eval_log(self, which: str, log_r: float) -> tuple[float, float, float]:
        r = math.exp(log_r)
        if not (self.r_min < r <= self.r_max):
            raise OutOfRange(f"r = {r} outside ({self.r_min}, {self.r_max}]")
        v, d1, d2 = (self.f if which == "f" else self.h)(r)
        if not v > 0:
            raise ValueError(f"warp function {which} must be positive, got {v}")
        return math.log(v / r), r * d1 / v, r * r * d2 / v


@dataclass(frozen=True)
class BarProfile:
    """The uncorrected power-law profiles as a curvature source (one joint at ``r = 1``)."""

    params: object

    def joint_log(self, j: int) -> float:
        return 0.0

    def eval(self, which: str, j: int, s: float) -> tuple[float, float, float]:
        lv, d, s2 = eval_bar_log(self.params, which, s)
        return lv - s, d, s2


def flat_profile() -> FunctionProfile:
    lin = lambda r: (r, 1.0, 0.0)  # noqa: E731
    return FunctionProfile(lin, lin)


def sphere_profile() -> FunctionProfile:
    sn = lambda r: (math.sin(r), math.cos(r), -math.sin(r))  # noqa: E731
    return FunctionProfile(sn, sn, r_max=math.pi * (1 - 1e-12))


def ricci_fiber(f: float, h: float) -> tuple[float, float]:
    """Ricci of ``f^2 k1 + h^2 k2`` on the ``k1`` and ``k2`` directions."""
    if not (f > 0 and h > 0):
        raise ValueError("fiber radii must be positive")
    return 2.0 / f ** 2 + 4.0 * f ** 2 / h ** 4, 6.0 * (2.0 * h ** 2 - f ** 2) / h ** 4


@dataclass(frozen=True)
class CurvatureSample:
    """One evaluation of the three Ricci eigenvalues.

    ``scaled`` holds ``r^2 Rc`` (it overflows to ``inf`` on far bands, where the
    physical values underflow instead); ``margins`` are the signed sums over
    the sums of absolute terms, in ``[-1, 1]``.
    """

    log_r: float
    rc_k1: float
    rc_k2: float
    rc_rad: float
    scaled: tuple[float, float, float]
    margins: tuple[float, float, float]

    def component(self, name: str) -> float:
        return getattr(self, name)


def _combine(terms: Sequence[tuple[float, float]]) -> tuple[float, float, float]:
    """Sum of ``sign * exp(logmag)`` as ``(value / exp(M), M, relative margin)``."""
    live = [(sg, lm) for sg, lm in terms if sg != 0 and lm != -math.inf]
    if not live:
        return 0.0, 0.0, 0.0
    m = max(lm for _, lm in live)
    tot = 0.0
    absum = 0.0
    for sg, lm in live:
        x = math.exp(lm - m)
        tot += sg * x
        absum += x
    return tot, m, tot / absum


def _signed_log(x: float) -> tuple[float, float]:
    if x == 0:
        return 0.0, -math.inf
    return math.copysign(1.0, x), math.log(abs(x))


def ricci_scaled(qf: tuple[float, float, float], qh: tuple[float, float, float]) -> list[tuple[float, float, float]]:
    """``(value / exp(M), M, margin)`` for each component of ``r^2 Rc``."""
    lf, df, sf = qf
    lh, dh, sh = qh
    k1 = [(1.0, math.log(2.0) - 2 * lf), _signed_log(-2 * df * df), _signed_log(-sf),
          (1.0, math.log(4.0) + 2 * lf - 4 * lh), _signed_log(-4 * df * dh)]
    k2 = [(1.0, math.log(12.0) - 2 * lh), (-1.0, math.log(6.0) + 2 * lf - 4 * lh),
          _signed_log(-sh), _signed_log(-3 * dh * dh), _signed_log(-3 * df * dh)]
    rad = [_signed_log(-3 * sf), _signed_log(-4 * sh)]
    return [_combine(t) for t in (k1, k2, rad)]


def _sample(prof: Profile, j: int, s: float) -> CurvatureSample:
    parts = ricci_scaled(prof.eval("f", j, s), prof.eval("h", j, s))
    log_r = prof.joint_log(j) + s
    phys = []
    scaled = []
    for v, m, _ in parts:
        with np.errstate(over="ignore", under="ignore"):
            scaled.append(float(v * np.exp(m)))
            phys.append(float(v * np.exp(m - 2 * log_r)) if v != 0 else 0.0)
    return CurvatureSample(log_r, *phys, scaled=tuple(scaled), margins=tuple(p[2] for p in parts))


def ricci_at(profile: Profile, log_r: float) -> CurvatureSample:
    """Ricci eigenvalues at ``r = exp(log_r)`` on the three blocks."""
    if hasattr(profile, "locate"):
        j, s = profile.locate(log_r)
    else:
        j, s = 0, log_r - profile.joint_log(0)
    return _sample(profile, j, s)


def ricci_joint(profile: Profile, j: int, s: float) -> CurvatureSample:
    """Same as :func:`ricci_at` at ``r = b_j e^s``; keeps full precision in ``s``."""
    return _sample(profile, j, s)


# ---------------------------------------------------------------------------
# certification


@dataclass(frozen=True)
class SamplePoint:
    band: int
    joint: int
    offset: float


def _uniform(n: int, lo: float, hi: float) -> np.ndarray:
    return lo + (hi - lo) * (np.arange(n) + 0.5) / n


def sample_plan(profile: WarpProfile, per_band: int = 4096, bands: int | None = None,
                window_factor: int = 10) -> list[SamplePoint]:
    """Log-uniform samples per band plus ``window_factor * per_band`` in each window.

    Band ``-2`` is the flat ball ``r <= b0/2``, band ``-1`` the cap
    ``(b0/2, b0]`` and band ``k`` is ``(b_k, b_{k+1}]``.
    Points are attached to the nearer joint.  Window samples cover
    ``1.5`` half-widths either side of the joint.
    """
    n = profile.n_bands if bands is None else min(bands, profile.n_bands)
    pts: list[SamplePoint] = []
    for band in range(-1, n):
        length = profile.segment_length(band)
        for s in _uniform(per_band, 0.0, length):
            if s <= 0.5 * length:
                pts.append(SamplePoint(band, band, float(s)))
            else:
                pts.append(SamplePoint(band, band + 1, float(s - length)))
    for w in profile.windows:
        if w.joint >= n:
            continue
        for s in _uniform(window_factor * per_band, -1.5 * w.half_width, 1.5 * w.half_width):
            pts.append(SamplePoint(w.joint - 1 if s <= 0 else w.joint, w.joint, float(s)))
    return pts


def function_plan(log_lo: float, log_hi: float, per_band: int = 4096) -> list[SamplePoint]:
    return [SamplePoint(0, 0, float(s)) for s in _uniform(per_band, log_lo, log_hi)]


@dataclass(frozen=True)
class BandMinimum:
    band: int
    component: str
    min_value: float
    argmin_log_r: float
    min_margin: float
    margin_log_r: float
    min_scaled: float
    samples: int


@dataclass(frozen=True)
class CertificationReport:
    passed: bool
    slack: float
    minima: tuple[BandMinimum, ...]

    @property
    def worst(self) -> BandMinimum:
        return min(self.minima, key=lambda m: m.min_margin)

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["band_index", "component", "min_value", "argmin_log_r", "samples"])
            for m in self.minima:
                w.writerow([m.band, m.component, f"{m.min_value:.16e}", f"{m.argmin_log_r:.16e}", m.samples])


def certify_nonneg(profile: Profile, plan: Iterable[SamplePoint] | None = None, slack: float = 0.0,
                   per_band: int = 4096, bands: int | None = None) -> CertificationReport:
    """Minimum of each Ricci component per band over a sample plan.

    A sample passes when its relative margin is ``>= -slack``; the relative
    margin has the sign of the component and is scale-free, so underflowed
    physical values still certify correctly.
    """
    if plan is None:
        if not isinstance(profile, WarpProfile):
            raise ValueError("a sample plan is required for this profile")
        plan = sample_plan(profile, per_band=per_band, bands=bands)
    best: dict[tuple[int, int], list] = {}
    for pt in plan:
        smp = _sample(profile, pt.joint, pt.offset)
        for c in range(3):
            key = (pt.band, c)
            val = smp.component(COMPONENTS[c])
            mg = smp.margins[c]
            rec = best.get(key)
            if rec is None:
                best[key] = [val, smp.log_r, mg, smp.log_r, smp.scaled[c], 1]
                continue
            rec[5] += 1
            if val < rec[0]:
                rec[0], rec[1] = val, smp.log_r
            if mg < rec[2]:
                rec[2], rec[3], rec[4] = mg, smp.log_r, smp.scaled[c]
    minima = tuple(BandMinimum(band, COMPONENTS[c], *rec) for (band, c), rec in sorted(best.items()))
    ok = all(m.min_margin >= -slack for m in minima)
    return CertificationReport(ok, slack, minima)


def band0_lower_bound(params, log_r: float) -> float:
    """Lower bound for ``r^2 Rc|k1`` of the power-law profiles on the first band."""
    e1 = params.eta1
    with np.errstate(over="ignore"):
        lead = float(np.exp(-2 * math.log(params.beta[0]) + 2 * params.omega[0] * params.log_b[1] + 2 * e1 * log_r))
    return 2.0 * (lead - (1 - e1) * (3 + 2 * params.eps0 - e1))
