"""Rescaled volume profiles, limit exponents and the two-limit consistency test.

For the warped example every radius is carried as ``(joint, offset)`` so
``V(sqrt(t) r) / V(sqrt(t))`` is formed from local quantities only.  With
``G = log(A r)`` and ``A = (pi^4/3) f^3 h^4``,

    V(R) = A(R) R * Lambda(R),   Lambda(R) = int_0^inf exp(G(u_R - v) - G(u_R)) dv,

and the integrand decays at least like ``exp(-v)``.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Protocol, Sequence

import numpy as np
from scipy import integrate

from .radial_heat import (
    RadialSpace,
    SolverConfig,
    SurrogateSpec,
    cone,
    cone_constant,
    normalized_diag,
)
from .warp_metric import ConstructionParams, WarpProfile

CONSISTENCY_TOL = 1e-6


def default_r_samples(n: int = 33) -> np.ndarray:
    return np.geomspace(0.25, 4.0, n)


@dataclass(frozen=True)
class BlowdownSequence:
    """Scales ``t_i`` given by ``log t_i``; ``anchors`` hold ``(joint, offset)`` of ``sqrt(t_i)``."""

    label: str
    log_t: np.ndarray
    anchors: tuple[tuple[int, float], ...] | None = None

    def __post_init__(self):
        if np.any(np.diff(self.log_t) <= 0):
            raise ValueError("log_t must increase strictly")
        if self.anchors is not None and len(self.anchors) != len(self.log_t):
            raise ValueError("one anchor per element")

    def __len__(self) -> int:
        return len(self.log_t)


# ---------------------------------------------------------------------------
# volume evaluators


class Volume(Protocol):
    def log_ratio(self, scale, log_r: float) -> float: ...

    def scale_of(self, seq: BlowdownSequence, i: int): ...


@dataclass(frozen=True)
class LogVolume:
    """Volume given by a vectorised ``log V(log r)``."""

    log_volume: Callable[[np.ndarray], np.ndarray]

    def log_ratio(self, scale: float, log_r: float) -> float:
        v = self.log_volume(np.array([scale + log_r, scale]))
        return float(v[0] - v[1])

    def scale_of(self, seq: BlowdownSequence, i: int) -> float:
        return 0.5 * float(seq.log_t[i])

    def log_v(self, log_r: float) -> float:
        return float(self.log_volume(np.array([log_r]))[0])


def power_volume(alpha: float, c: float = 1.0) -> LogVolume:
    lc = math.log(c)
    return LogVolume(lambda x: lc + alpha * np.asarray(x, dtype=float))


def space_volume(space: RadialSpace) -> LogVolume:
    return LogVolume(space.log_vol)


@dataclass(frozen=True)
class WarpVolume:
    """Volume of balls about the pole of the warped metric, in joint-relative form."""

    profile: WarpProfile
    horizon: float = 45.0

    def _g(self, j: int, s: float) -> float:
        lf = self.profile.eval_local("f", j, s)[0]
        lh = self.profile.eval_local("h", j, s)[0]
        return 3.0 * lf + 4.0 * lh + 8.0 * s

    def log_lambda(self, j: int, s: float) -> float:
        g0 = self._g(j, s)
        edges = [0.0, 0.5, 2.0, 6.0, 15.0, self.horizon]
        tot = 0.0
        for a, b in zip(edges[:-1], edges[1:]):
            val, _ = integrate.quad(lambda v: math.exp(self._g(j, s - v) - g0), a, b,
                                    epsabs=0.0, epsrel=1e-12, limit=200)
            tot += val
        return math.log(tot)

    def log_ratio(self, scale: tuple[int, float], log_r: float) -> float:
        j, s = scale
        return (self._g(j, s + log_r) - self._g(j, s)
                + self.log_lambda(j, s + log_r) - self.log_lambda(j, s))

    def scale_of(self, seq: BlowdownSequence, i: int) -> tuple[int, float]:
        if seq.anchors is None:
            raise ValueError("warped volumes need anchored sequences")
        return seq.anchors[i]

    def log_v(self, j: int, s: float) -> float:
        """``log V(b_j e^s)`` (absolute; loses digits once ``log b_j`` is large)."""
        p = self.profile
        jl = p.joint_log(j)
        lf = p.joint_lq("f", j) + p.eval_local("f", j, s)[0]
        lh = p.joint_lq("h", j) + p.eval_local("h", j, s)[0]
        log_a_r = math.log(math.pi ** 4 / 3.0) + 3 * lf + 4 * lh + 8 * (jl + s)
        return log_a_r + self.log_lambda(j, s)


def rescaled_profile(V: Volume, scale, r: float) -> float:
    """``V(sqrt(t) r) / V(sqrt(t))``; ``scale`` is ``log sqrt(t)`` or an anchor."""
    if not r > 0:
        raise ValueError("r must be positive")
    return math.exp(V.log_ratio(scale, math.log(r)))


def log_rescaled_profile(V: Volume, scale, r: float) -> float:
    return V.log_ratio(scale, math.log(r))


@dataclass(frozen=True)
class ExponentFit:
    label: str
    exponents: np.ndarray
    residuals: np.ndarray


def limit_exponent(V: Volume, seq: BlowdownSequence, r_samples: Sequence[float] | None = None) -> ExponentFit:
    """Least-squares slope of ``log V(sqrt(t) r)/V(sqrt(t))`` against ``log r`` at each ``t``."""
    r = default_r_samples() if r_samples is None else np.asarray(r_samples, dtype=float)
    if np.any(r < 0.25 - 1e-12) or np.any(r > 4.0 + 1e-12):
        raise ValueError("r samples must lie in [0.25, 4]")
    x = np.log(r)
    slopes, res = [], []
    for i in range(len(seq)):
        sc = V.scale_of(seq, i)
        y = np.array([V.log_ratio(sc, xi) for xi in x])
        k, c = np.polyfit(x, y, 1)
        slopes.append(k)
        res.append(float(np.max(np.abs(y - (k * x + c)))))
    return ExponentFit(seq.label, np.array(slopes), np.array(res))


def example_sequences(params: ConstructionParams, count: int | None = None) -> tuple[BlowdownSequence, BlowdownSequence]:
    """``t_i = b_{2i+1}^{2(1-eps_{2i})}`` and ``t~_i = b_{2i+2}^{2(1-eps_{2i+1})}`` inside the built bands."""
    L, eps = params.log_b, params.eps
    top = params.n_bands
    a, b = [], []
    i = 0
    while 2 * i + 1 <= top and (count is None or i < count):
        j = 2 * i + 1
        a.append((j, -eps[j - 1] * L[j]))
        i += 1
    i = 0
    while 2 * i + 2 <= top and (count is None or i < count):
        j = 2 * i + 2
        b.append((j, -eps[j - 1] * L[j]))
        i += 1
    la = np.array([2 * ((1 - eps[j - 1]) * L[j]) for j, _ in a])
    lb = np.array([2 * ((1 - eps[j - 1]) * L[j]) for j, _ in b])
    return BlowdownSequence("t", la, tuple(a)), BlowdownSequence("t_tilde", lb, tuple(b))


# ---------------------------------------------------------------------------
# consistency of two limit profiles


@dataclass(frozen=True)
class PowerLaw:
    """``h(r) = c r^alpha``."""

    alpha: float
    c: float = 1.0

    def log_derivative(self, r: np.ndarray) -> np.ndarray:
        if not (self.c * self.alpha > 0):
            raise ValueError("degenerate profile: h' <= 0")
        return math.log(self.c * self.alpha) + (self.alpha - 1.0) * np.log(r)


@dataclass(frozen=True)
class ConsistencyResult:
    consistent: bool
    residual: float


def consistency_check(h, h_tilde, r_samples: Sequence[float] | None = None,
                      tol: float = CONSISTENCY_TOL) -> ConsistencyResult:
    """Whether ``h''/h' = h~''/h~'`` on the samples, i.e. ``h'/h~'`` is constant.

    Profiles are :class:`PowerLaw` or callables returning ``h'``.
    """
    r = default_r_samples() if r_samples is None else np.asarray(r_samples, dtype=float)

    def logd(p) -> np.ndarray:
        if hasattr(p, "log_derivative"):
            return np.asarray(p.log_derivative(r), dtype=float)
        d = np.asarray(p(r), dtype=float)
        if np.any(d <= 0):
            raise ValueError("degenerate profile: h' <= 0")
        return np.log(d)

    diff = logd(h) - logd(h_tilde)
    res = float(np.max(np.abs(diff - diff.mean())))
    return ConsistencyResult(res < tol, res)


def volume_ratio(V: LogVolume, n: float, r: float) -> float:
    """``V(r) / r^n``."""
    if not r > 0:
        raise ValueError("r must be positive")
    return math.exp(V.log_v(math.log(r)) - n * math.log(r))


# ---------------------------------------------------------------------------
# surrogate oscillation demo


def demo_sequences(spec: SurrogateSpec = SurrogateSpec(), pad: float = 1.5) -> tuple[BlowdownSequence, BlowdownSequence]:
    """Band-centre scales of the two exponents, ``sqrt(t)`` at each centre."""
    one, two = [], []
    for c, a in spec.band_centers(pad):
        (one if a == spec.alpha1 else two).append(2.0 * c * math.log(10.0))
    return BlowdownSequence("alpha1", np.array(one)), BlowdownSequence("alpha2", np.array(two))


@dataclass(frozen=True)
class DemoRow:
    seq_label: str
    i: int
    log_t: float
    normalized_diag: float
    target_constant: float

    @property
    def rel_dev(self) -> float:
        return (self.normalized_diag - self.target_constant) / self.target_constant


@dataclass(frozen=True)
class DemoReport:
    rows: tuple[DemoRow, ...]
    clusters: tuple[float, float]
    targets: tuple[float, float]
    cone_errors: tuple[float, float]

    @property
    def separation(self) -> float:
        return abs(self.clusters[1] - self.clusters[0])

    @property
    def solver_error(self) -> float:
        """Largest absolute error of the single-cone runs."""
        return max(self.cone_errors)

    @property
    def passed(self) -> bool:
        close = all(abs(c - t) <= 0.1 * t for c, t in zip(self.clusters, self.targets))
        return close and self.clusters[0] < self.clusters[1] and self.separation > 5 * self.solver_error

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["seq_label", "i", "log_t", "normalized_diag", "target_constant", "rel_dev"])
            for r in self.rows:
                w.writerow([r.seq_label, r.i, f"{r.log_t:.16e}", f"{r.normalized_diag:.16e}",
                            f"{r.target_constant:.16e}", f"{r.rel_dev:.16e}"])


def oscillation_demo(space: RadialSpace, seqs: tuple[BlowdownSequence, BlowdownSequence],
                     alphas: tuple[float, float], config: SolverConfig = SolverConfig(),
                     threads: int = 1) -> DemoReport:
    """``V(sqrt t) H(0,0,t)`` along both sequences against the two cone constants.

    Each cluster is the mean over its sequence.  The cone errors come from
    the same solver on the pure cones at ``t = 1``.
    """
    jobs = [(k, i, float(lt)) for k, s in enumerate(seqs) for i, lt in enumerate(s.log_t)]

    def one(job):
        return normalized_diag(space, math.exp(job[2]), config)

    def cone_err(a):
        return abs(normalized_diag(cone(a), 1.0, config) - cone_constant(a))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            vals = list(ex.map(one, jobs))
            errs = tuple(ex.map(cone_err, alphas))
    else:
        vals = [one(j) for j in jobs]
        errs = tuple(cone_err(a) for a in alphas)
    targets = tuple(cone_constant(a) for a in alphas)
    rows = tuple(DemoRow(seqs[k].label, i, lt, v, targets[k]) for (k, i, lt), v in zip(jobs, vals))
    clusters = tuple(float(np.mean([r.normalized_diag for r in rows if r.seq_label == s.label])) for s in seqs)
    return DemoReport(rows, clusters, targets, errs)
