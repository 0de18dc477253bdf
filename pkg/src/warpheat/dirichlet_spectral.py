"""Dirichlet eigenpairs on balls and the eigenfunction expansion of the kernel.

The discretisation is the finite-volume operator of :mod:`radial_heat`, so
``K phi = lambda W phi`` with diagonal ``W`` is symmetrised as
``W^-1/2 K W^-1/2`` and handed to a tridiagonal eigensolver.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .bounds import BoundReport
from .radial_heat import (
    NonConvergence,
    RadialSpace,
    SolverConfig,
    build_operator,
    graded_grid,
    march,
    seed,
)


class TruncationError(ValueError):
    """Too few modes for the requested time."""


class MonotonicityViolation(RuntimeError):
    pass


@dataclass(frozen=True)
class SpectralDecomposition:
    """Lowest Dirichlet modes, ``phi[j]`` sampled on ``r`` (zero at ``r = R``)."""

    radius: float
    eigenvalues: np.ndarray
    phi: np.ndarray
    r: np.ndarray
    weights: np.ndarray
    space: RadialSpace

    @property
    def count(self) -> int:
        return int(self.eigenvalues.size)

    def gram(self) -> np.ndarray:
        n = self.weights.size
        p = self.phi[:, :n]
        return (p * self.weights) @ p.T

    def sup_phi(self) -> np.ndarray:
        return np.max(np.abs(self.phi), axis=1)

    def to_csv(self, path: str | Path) -> None:
        sup = self.sup_phi()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["j", "lambda", "sup_phi", "annulus_mass_0p1R"])
            for j in range(self.count):
                am = annulus_mass(self, j + 1, 0.1 * self.radius)
                w.writerow([j + 1, f"{self.eigenvalues[j]:.16e}", f"{sup[j]:.16e}", f"{am:.16e}"])


def eigensolve(space: RadialSpace, R: float, J: int = 64, n_points: int = 4000,
               r_grid: np.ndarray | None = None) -> SpectralDecomposition:
    """Lowest ``J`` Dirichlet eigenpairs of ``-(A phi')'/A`` on ``[0, R]``, zero-flux at the pole."""
    if not R > 0 or R > space.domain_max * (1 + 1e-12):
        raise ValueError("radius outside the space")
    r = np.linspace(0.0, R, n_points) if r_grid is None else np.asarray(r_grid, dtype=float)
    op = build_operator(space, r, "dirichlet")
    if J < 1 or J > op.n // 2:
        raise ValueError(f"J = {J} too large for {op.n} unknowns")
    d, e = op.stiffness_bands()
    s = 1.0 / np.sqrt(op.w)
    try:
        lam, vec = eigh_tridiagonal(d * s * s, e * s[:-1] * s[1:], select="i", select_range=(0, J - 1))
    except np.linalg.LinAlgError as exc:
        raise NonConvergence(f"eigensolver failed: {exc}") from exc
    phi = np.zeros((J, r.size))
    phi[:, : op.n] = (vec * s[:, None]).T
    phi *= np.where(phi[:, :1] < 0, -1.0, 1.0)
    return SpectralDecomposition(float(r[-1]), lam, phi, r, op.w, space)


def _interp(spec: SpectralDecomposition, x: float) -> np.ndarray:
    if not 0 <= x <= spec.radius:
        raise ValueError("point outside the ball")
    return np.array([np.interp(x, spec.r, p) for p in spec.phi])


def tail_bound(spec: SpectralDecomposition, t: float, n: float | None = None) -> float:
    """Upper estimate of ``sum_{j>J} exp(-lambda_j t) sup|phi_j|^2``.

    Uses ``lambda_j >= c1 R^-2 j^2`` (radial modes follow the one-dimensional
    counting law) and ``sup|phi_j| <= c j^(n/2)``, both fitted on the
    computed modes.
    """
    if n is None:
        n = spec.space.small_r_exponent + 1.0
    j = np.arange(1, spec.count + 1, dtype=float)
    R2 = spec.radius ** 2
    c1 = float(np.min(spec.eigenvalues * R2 / j ** 2))
    c = float(np.max(spec.sup_phi() / j ** (n / 2.0)))
    total = 0.0
    k = spec.count + 1
    while True:
        block = np.arange(k, k + 4096, dtype=float)
        terms = np.exp(-c1 * block ** 2 * t / R2 + n * np.log(block) + 2 * math.log(c))
        total += float(terms.sum())
        if terms[-1] < 1e-300 or terms[-1] < 1e-17 * total or k > 10 ** 8:
            return total
        k += 4096


@dataclass(frozen=True)
class KernelValue:
    value: float
    tail: float


def kernel(spec: SpectralDecomposition, x: float, y: float, t: float, tol: float = 1e-6) -> KernelValue:
    """``sum_j exp(-lambda_j t) phi_j(x) phi_j(y)`` with a truncation estimate."""
    if not t > 0:
        raise ValueError("time must be positive")
    px, py = _interp(spec, x), _interp(spec, y)
    # the product px * py is formed first so the value is symmetric bit-for-bit
    val = float(np.sum(np.exp(-spec.eigenvalues * t) * (px * py)))
    tail = tail_bound(spec, t)
    if tail > tol * abs(val):
        raise TruncationError(f"truncation tail {tail:.3g} exceeds {tol:g} x kernel {val:.3g}")
    return KernelValue(val, tail)


def kernel_profile(spec: SpectralDecomposition, y: float, t: float) -> np.ndarray:
    """Expansion kernel at every grid node against a fixed ``y``."""
    py = _interp(spec, y)
    return (np.exp(-spec.eigenvalues * t) * py) @ spec.phi


def weyl_check(spec: SpectralDecomposition, n: float) -> BoundReport:
    """Fits ``c1 R^-2 j^(1/n) <= lambda_j <= c2 R^-2 j^2``; ``fitted_C`` is ``c2``."""
    j = np.arange(1, spec.count + 1, dtype=float)
    s = spec.eigenvalues * spec.radius ** 2
    c1 = float(np.min(s / j ** (1.0 / n)))
    c2 = float(np.max(s / j ** 2))
    mono = float(np.min(np.diff(spec.eigenvalues))) if spec.count > 1 else 0.0
    margin = 0.0 if (c1 > 0 and mono >= 0) else min(c1, mono)
    return BoundReport("weyl", c2, margin, spec.count, {"c1": c1})


def linf_check(spec: SpectralDecomposition, n: float) -> BoundReport:
    """Fits ``sup|phi_j| <= c j^(n/2)``."""
    j = np.arange(1, spec.count + 1, dtype=float)
    c = float(np.max(spec.sup_phi() / j ** (n / 2.0)))
    return BoundReport("linf", c, 0.0, spec.count)


def annulus_mass(spec: SpectralDecomposition, j: int, delta: float) -> float:
    """``int_{R-delta}^R phi_j^2 A dr`` using the discretisation's shells."""
    if not 0 < delta <= spec.radius:
        raise ValueError("delta must lie in (0, R]")
    if not 1 <= j <= spec.count:
        raise ValueError("mode index out of range")
    r = spec.r
    lo = spec.radius - delta
    mid = 0.5 * (r[1:] + r[:-1])
    left = np.concatenate([[0.0], mid])[: spec.weights.size]
    right = np.concatenate([mid, [r[-1]]])[: spec.weights.size]
    a = np.maximum(left, lo)
    vol = spec.space.volume
    part = np.where(right > a, vol(right) - vol(np.minimum(a, right)), 0.0)
    # whole shells use the stored weights so the full ball is exactly one
    part = np.where(left >= lo, spec.weights, part)
    p = spec.phi[j - 1, : spec.weights.size]
    return float(np.sum(part * p * p))


def gradient_bound_check(spec: SpectralDecomposition, fractions: Sequence[float] = (0.25, 0.5, 0.75)) -> BoundReport:
    """Fits ``|phi_j'| <= c (d^-1 + lambda_j) sup|phi_j|`` on sub-balls ``r <= R - d``."""
    sup = spec.sup_phi()
    c = 0.0
    for f in fractions:
        rho = f * spec.radius
        d = spec.radius - rho
        mask = spec.r <= rho
        for j in range(spec.count):
            g = np.abs(np.gradient(spec.phi[j], spec.r))[mask]
            c = max(c, float(np.max(g)) / ((1.0 / d + spec.eigenvalues[j]) * sup[j]))
    return BoundReport("gradient", c, 0.0, spec.count * len(fractions))


# ---------------------------------------------------------------------------
# Dirichlet to global


@dataclass(frozen=True)
class GlobalComparison:
    radii: tuple[float, ...]
    t: float
    h_center: tuple[float, ...]  # H_R(0, 0, t) per radius
    h_global_center: float
    sup_diff: tuple[float, ...]  # sup_x |H - H_R|
    decay_constant: float  # c fitted at the smallest radius
    monotone: bool
    consistent: bool

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["R", "H_R_center", "H_global_center", "sup_diff", "decay_envelope"])
            for R, h, m in zip(self.radii, self.h_center, self.sup_diff):
                env = self.decay_constant * math.exp(-R * R / (5 * self.t))
                w.writerow([f"{R:.16e}", f"{h:.16e}", f"{self.h_global_center:.16e}", f"{m:.16e}", f"{env:.16e}"])


def global_compare(space: RadialSpace, radii: Sequence[float], t: float, config: SolverConfig = SolverConfig(),
                   rtol: float = 1e-12) -> GlobalComparison:
    """Dirichlet kernels ``H_R(x, 0, t)`` against the global one on a shared grid.

    Each ball problem uses the global grid cut at a node placed exactly at
    ``R``, so differences reflect the boundary alone.  Pointwise order
    ``H_R1 <= H_R2 <= H`` is required up to ``rtol * H(0)``.
    """
    radii = sorted(float(R) for R in radii)
    if not radii:
        raise ValueError("need at least one radius")
    r_out = min(space.domain_max, max(config.outer_factor * math.sqrt(t), radii[-1] + config.outer_factor * math.sqrt(t)))
    h0 = config.pole_spacing * math.sqrt(config.seed_factor * t)
    r = graded_grid(r_out, config.n_points, h0)
    for R in radii:
        r[int(np.argmin(np.abs(r - R)))] = R
    if np.any(np.diff(r) <= 0):
        raise ValueError("radii too close for the grid")
    t_seed = config.seed_factor * t

    def run(grid: np.ndarray) -> np.ndarray:
        op = build_operator(space, grid, "dirichlet")
        return march(op, seed(op, t_seed), t_seed, [t], config)[0]

    glob = run(r)
    scale = float(glob[0])
    vals, sups = [], []
    prev = None
    monotone = True
    for R in radii:
        n = int(np.nonzero(r == R)[0][0]) + 1
        u = run(r[:n])
        if np.any(u > glob[:n] + rtol * scale):
            monotone = False
        if prev is not None and np.any(prev[: prev.size] > u[: prev.size] + rtol * scale):
            monotone = False
        prev = u
        vals.append(float(u[0]))
        sups.append(float(np.max(np.abs(glob[:n] - u))))
    if not monotone:
        raise MonotonicityViolation("Dirichlet kernels are not ordered by radius")
    c = sups[0] * math.exp(radii[0] ** 2 / (5 * t))
    consistent = all(m <= c * math.exp(-R * R / (5 * t)) * (1 + 1e-9) for R, m in zip(radii, sups))
    return GlobalComparison(tuple(radii), t, tuple(vals), scale, tuple(sups), c, monotone, consistent)
