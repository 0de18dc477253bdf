"""Radial heat flow ``u_t = u'' + (A'/A) u'`` on rotationally symmetric spaces.

The spatial operator is a finite-volume discretisation of ``(A u')'/A``:
node ``r_i`` owns the shell between neighbouring midpoints, with mass
``w_i = V(r_{i+1/2}) - V(r_{i-1/2})`` and face conductance
``A(r_{i+1/2}) / (r_{i+1} - r_i)``.  The first shell starts at ``r = 0`` so the
pole carries zero flux.  The resulting stiffness matrix is symmetric in the
``w``-weighted inner product, which the spectral module relies on.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, optimize
from scipy.linalg import solve_banded
from scipy.special import gammaln

Vec = Callable[[np.ndarray], np.ndarray]


class NonConvergence(RuntimeError):
    """A linear solve failed or discrete mass grew."""


class SeedTooLarge(ValueError):
    pass


# ---------------------------------------------------------------------------
# spaces


@dataclass(frozen=True)
class RadialSpace:
    """Rotationally symmetric space reduced to its area density ``A = V'``.

    ``log_drift`` optionally gives ``r A'(r)/A(r)`` in closed form.
    ``log_volume`` is used where ``V`` itself would overflow.
    """

    name: str
    area: Vec
    volume: Vec
    small_r_exponent: float
    domain_max: float = math.inf
    log_drift: Vec | None = None
    log_volume: Vec | None = None

    def log_vol(self, log_r: np.ndarray) -> np.ndarray:
        log_r = np.asarray(log_r, dtype=float)
        if self.log_volume is not None:
            return self.log_volume(log_r)
        return np.log(self.volume(np.exp(log_r)))


def unit_ball_volume(n: float) -> float:
    """``pi^(n/2) / Gamma(n/2 + 1)``."""
    return math.exp(0.5 * n * math.log(math.pi) - gammaln(0.5 * n + 1.0))


def euclidean(n: int) -> RadialSpace:
    if n < 1:
        raise ValueError("dimension must be positive")
    w = unit_ball_volume(n)
    return RadialSpace(
        f"euclidean-{n}",
        area=lambda r: n * w * np.asarray(r, dtype=float) ** (n - 1),
        volume=lambda r: w * np.asarray(r, dtype=float) ** n,
        small_r_exponent=n - 1,
        log_drift=lambda r: np.full_like(np.asarray(r, dtype=float), n - 1.0),
        log_volume=lambda lr: math.log(w) + n * np.asarray(lr, dtype=float),
    )


def cone(alpha: float) -> RadialSpace:
    """Pure cone with ``V(r) = r^alpha``."""
    if not alpha > 0:
        raise ValueError("cone exponent must be positive")
    return RadialSpace(
        f"cone-{alpha:g}",
        area=lambda r: alpha * np.asarray(r, dtype=float) ** (alpha - 1),
        volume=lambda r: np.asarray(r, dtype=float) ** alpha,
        small_r_exponent=alpha - 1,
        log_drift=lambda r: np.full_like(np.asarray(r, dtype=float), alpha - 1.0),
        log_volume=lambda lr: alpha * np.asarray(lr, dtype=float),
    )


def interval(length: float = 1.0) -> RadialSpace:
    """``A = 1``: a half-line, reflecting at the origin."""
    return RadialSpace(
        "interval",
        area=lambda r: np.ones_like(np.asarray(r, dtype=float)),
        volume=lambda r: np.asarray(r, dtype=float),
        small_r_exponent=0.0,
        domain_max=length,
        log_drift=lambda r: np.zeros_like(np.asarray(r, dtype=float)),
    )


def drift(space: RadialSpace, r: float) -> float:
    """``A'(r)/A(r)``."""
    if not r > 0:
        raise ValueError("drift is singular at the pole")
    if r > space.domain_max:
        raise ValueError("radius beyond the domain")
    if space.log_drift is not None:
        return float(space.log_drift(np.array([r]))[0]) / r
    h = 1e-4
    a = space.area(np.array([r * math.exp(-h), r * math.exp(h)]))
    return float((math.log(a[1]) - math.log(a[0])) / (2 * h * r))


# ---------------------------------------------------------------------------
# surrogate band profile


@dataclass(frozen=True)
class SurrogateSpec:
    """Alternating volume exponents switching at ``log10 r`` boundaries.

    The local exponent ``d log V / d log r`` moves between neighbouring values
    along a logistic of scale ``blend`` decades.
    """

    alpha1: float = 6.0
    alpha2: float = 5.0
    boundaries: tuple[float, ...] = (1.0, 2.5, 4.5, 7.0)
    blend: float = 0.05

    def exponents(self) -> list[float]:
        return [self.alpha1 if k % 2 == 0 else self.alpha2 for k in range(len(self.boundaries) + 1)]

    def band_centers(self, pad: float = 1.5) -> list[tuple[float, float]]:
        """``(log10 r, exponent)`` at the middle of each band; end bands use ``pad`` decades."""
        b = list(self.boundaries)
        edges = [b[0] - pad] + b + [b[-1] + pad]
        out = []
        for k, a in enumerate(self.exponents()):
            lo, hi = edges[k], edges[k + 1]
            out.append((b[0] - pad if k == 0 else (hi if k == len(b) else 0.5 * (lo + hi)), a))
        return out


def surrogate_profile(spec: SurrogateSpec = SurrogateSpec()) -> RadialSpace:
    """Smooth surrogate with ``V ~ c_k r^{alpha_k}`` on alternating bands.

    ``log V`` is the exact integral of the blended exponent, so ``V`` and
    ``A`` are closed-form.
    """
    b = np.asarray(spec.boundaries, dtype=float)
    if b.size and (np.any(np.diff(b) <= 0)):
        raise ValueError("band boundaries must increase")
    if not (spec.alpha1 > 0 and spec.alpha2 > 0 and spec.blend > 0):
        raise ValueError("exponents and blend must be positive")
    alphas = spec.exponents()
    x_k = b * math.log(10.0)
    d_k = np.diff(alphas)
    w = spec.blend * math.log(10.0)

    def expo(x: np.ndarray) -> np.ndarray:
        out = np.full_like(x, alphas[0])
        for xk, dk in zip(x_k, d_k):
            out += dk * 0.5 * (1.0 + np.tanh(0.5 * (x - xk) / w))
        return out

    def dexpo(x: np.ndarray) -> np.ndarray:
        out = np.zeros_like(x)
        for xk, dk in zip(x_k, d_k):
            sg = 0.5 * (1.0 + np.tanh(0.5 * (x - xk) / w))
            out += dk * sg * (1.0 - sg) / w
        return out

    def log_volume(x):
        x = np.asarray(x, dtype=float)
        out = alphas[0] * x
        for xk, dk in zip(x_k, d_k):
            out = out + dk * w * np.logaddexp(0.0, (x - xk) / w)
        return out

    def area(r):
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore"):
            x = np.log(r)
        out = np.exp(log_volume(x) - x) * expo(x)
        return np.where(r > 0, out, 0.0)

    def volume(r):
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore"):
            return np.where(r > 0, np.exp(log_volume(np.log(np.where(r > 0, r, 1.0)))), 0.0)

    def log_drift(r):
        x = np.log(np.asarray(r, dtype=float))
        e = expo(x)
        return e - 1.0 + dexpo(x) / e

    return RadialSpace("surrogate", area, volume, alphas[0] - 1.0,
                       log_drift=log_drift, log_volume=log_volume)


# ---------------------------------------------------------------------------
# cone limits


@dataclass(frozen=True)
class ConeLimit:
    alpha: float
    constant: float


def cone_constant(alpha: float) -> float:
    """``[alpha 2^(alpha-1) Gamma(alpha/2)]^-1``, the diagonal of the unit-time cone kernel."""
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    return math.exp(-(math.log(alpha) + (alpha - 1) * math.log(2.0) + gammaln(0.5 * alpha)))


def cone_constant_quad(alpha: float) -> float:
    """Reciprocal of ``int_0^inf exp(-u^2/4) alpha u^(alpha-1) du`` by adaptive quadrature."""
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    if alpha < 1:
        # v = u^alpha removes the singularity at the origin
        val, _ = integrate.quad(lambda v: math.exp(-0.25 * v ** (2.0 / alpha)), 0.0, math.inf,
                                epsabs=0, epsrel=1e-13, limit=200)
        return 1.0 / val
    # scale by the integrand's peak so large alpha stays in range
    peak = math.sqrt(2.0 * max(alpha - 1.0, 0.0))
    shift = (alpha - 1) * math.log(peak) - 0.25 * peak * peak if peak > 0 else 0.0

    def g(u: float) -> float:
        if u <= 0:
            return 1.0 if alpha == 1 else 0.0
        return alpha * math.exp((alpha - 1) * math.log(u) - 0.25 * u * u - shift)

    a, _ = integrate.quad(g, 0.0, peak, epsabs=0, epsrel=1e-13, limit=200) if peak > 0 else (0.0, 0.0)
    b, _ = integrate.quad(g, peak, math.inf, epsabs=0, epsrel=1e-13, limit=200)
    return math.exp(-shift) / (a + b)


def cone_limit(alpha: float) -> ConeLimit:
    return ConeLimit(alpha, cone_constant(alpha))


def cone_kernel(alpha: float, r: float, t: float) -> float:
    if not t > 0:
        raise ValueError("time must be positive")
    if r < 0:
        raise ValueError("radius must be nonnegative")
    return cone_constant(alpha) * t ** (-0.5 * alpha) * math.exp(-r * r / (4.0 * t))


# ---------------------------------------------------------------------------
# discretisation


@dataclass(frozen=True)
class SolverConfig:
    """Numerical knobs; defaults follow the benchmark settings."""

    n_points: int = 8192
    outer_factor: float = 12.0
    seed_factor: float = 1e-4
    steps_per_decade: int = 200
    boundary: str = "dirichlet"
    pole_spacing: float = 0.05
    mass_tol: float = 1e-10

    def __post_init__(self):
        if self.n_points < 16:
            raise ValueError("n_points must be at least 16")
        if self.boundary not in ("dirichlet", "neumann"):
            raise ValueError("boundary must be 'dirichlet' or 'neumann'")
        if not (self.outer_factor > 0 and self.seed_factor > 0 and self.pole_spacing > 0):
            raise ValueError("factors must be positive")
        if self.steps_per_decade < 1:
            raise ValueError("steps_per_decade must be positive")


def graded_grid(r_max: float, n_points: int, h0: float) -> np.ndarray:
    """Spacing ``h0`` near the pole, then geometric growth ``dr = kappa r`` out to ``r_max``."""
    m = n_points - 1
    if h0 * m >= r_max:
        return np.linspace(0.0, r_max, n_points)

    def count(kappa: float) -> float:
        return (1.0 + math.log(kappa * r_max / h0)) / kappa - m

    kappa = optimize.brentq(count, h0 / r_max * (1 + 1e-12), 10.0, xtol=1e-15, rtol=1e-14)
    xi = np.arange(n_points, dtype=float)
    xc = 1.0 / kappa
    rc = h0 / kappa
    r = np.where(xi <= xc, h0 * xi, rc * np.exp(kappa * (xi - xc)))
    r *= r_max / r[-1]
    r[0] = 0.0
    return r


@dataclass(frozen=True)
class Operator:
    """Lumped mass ``w`` and face conductances ``k`` of the radial Laplacian.

    For a Dirichlet outer boundary the last node is fixed at zero and is not
    an unknown; ``w``/``k`` then cover the interior nodes only.
    """

    r: np.ndarray
    w: np.ndarray
    k: np.ndarray
    boundary: str

    @property
    def n(self) -> int:
        return self.w.size

    def stiffness_bands(self) -> tuple[np.ndarray, np.ndarray]:
        """Diagonal and superdiagonal of ``K`` (symmetric)."""
        kk = self.k
        d = np.zeros(self.n)
        d[: kk.size] += kk
        d[1:] += kk[: self.n - 1]
        return d, -kk[: self.n - 1]

    def mass(self, u: np.ndarray) -> float:
        return float(np.dot(self.w, u[: self.n]))


def build_operator(space: RadialSpace, r: np.ndarray, boundary: str = "dirichlet") -> Operator:
    r = np.asarray(r, dtype=float)
    if r[0] != 0.0 or np.any(np.diff(r) <= 0):
        raise ValueError("grid must start at 0 and increase")
    if r[-1] > space.domain_max * (1 + 1e-12):
        raise ValueError("grid leaves the space's domain")
    mid = 0.5 * (r[1:] + r[:-1])
    edges = np.concatenate([[0.0], mid, [r[-1]]])
    vol = space.volume(edges)
    w = np.diff(vol)
    k = space.area(mid) / np.diff(r)
    if not (np.all(w > 0) and np.all(k > 0)):
        raise ValueError("area density must be positive on the grid")
    if boundary == "dirichlet":
        # last node pinned to zero; the face into it still drains the last unknown
        w = w[:-1]
    return Operator(r, w, k, boundary)


def _time_grid(t_a: float, t_b: float, per_decade: int) -> np.ndarray:
    if t_b <= t_a:
        return np.array([t_a])
    start = t_a if t_a > 0 else 1e-4 * t_b
    n = max(int(math.ceil(per_decade * math.log10(t_b / start))), 4)
    ts = np.geomspace(start, t_b, n + 1)
    if t_a <= 0:
        ts = np.concatenate([[t_a], ts])
    ts[-1] = t_b
    return ts


def _apply_k(d: np.ndarray, e: np.ndarray, u: np.ndarray) -> np.ndarray:
    ku = d * u
    ku[:-1] += e * u[1:]
    ku[1:] += e * u[:-1]
    return ku


def _implicit(op: Operator, d: np.ndarray, e: np.ndarray, c: float, rhs: np.ndarray) -> np.ndarray:
    """Solve ``(W + c K) x = rhs``."""
    ab = np.zeros((3, op.n))
    ab[0, 1:] = c * e
    ab[1] = op.w + c * d
    ab[2, :-1] = c * e
    try:
        out = solve_banded((1, 1), ab, rhs, check_finite=False)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NonConvergence(f"linear solve failed: {exc}") from exc
    if not np.all(np.isfinite(out)):
        raise NonConvergence("non-finite values in time step")
    return out


_GAMMA = 2.0 - math.sqrt(2.0)


def _step(op: Operator, d: np.ndarray, e: np.ndarray, u: np.ndarray, dt: float) -> np.ndarray:
    """One TR-BDF2 step: trapezoid to ``t + gamma dt``, then BDF2 to ``t + dt``.

    L-stable, so stiff modes are damped even when ``lambda dt`` is huge; plain
    Crank-Nicolson leaves them with amplification near -1.
    """
    g = _GAMMA
    mid = _implicit(op, d, e, 0.5 * g * dt, op.w * u - 0.5 * g * dt * _apply_k(d, e, u))
    rhs = op.w * (mid - (1.0 - g) ** 2 * u) / (g * (2.0 - g))
    return _implicit(op, d, e, (1.0 - g) / (2.0 - g) * dt, rhs)


def march(op: Operator, u0: np.ndarray, t0: float, times: Sequence[float], config: SolverConfig) -> list[np.ndarray]:
    """TR-BDF2 from ``t0`` to each output time on a geometric step sequence."""
    d, e = op.stiffness_bands()
    u = np.array(u0[: op.n], dtype=float)
    out = []
    t = t0
    m_prev = op.mass(u)
    for tb in times:
        if tb < t:
            raise ValueError("output times must increase")
        ts = _time_grid(t, tb, config.steps_per_decade)
        for a, b in zip(ts[:-1], ts[1:]):
            u = _step(op, d, e, u, b - a)
        m = op.mass(u)
        if m > m_prev * (1 + config.mass_tol) + 1e-300:
            raise NonConvergence(f"discrete mass increased ({m_prev!r} -> {m!r})")
        m_prev = m
        t = tb
        full = np.zeros(op.r.size)
        full[: op.n] = u
        out.append(full)
    return out


# ---------------------------------------------------------------------------
# fields and drivers


@dataclass(frozen=True)
class HeatField:
    r_grid: np.ndarray
    t_grid: np.ndarray
    values: np.ndarray  # shape (len(t_grid), len(r_grid))
    weights: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def at(self, t_index: int) -> np.ndarray:
        return self.values[t_index]

    def to_csv(self, path: str | Path, stride: int = 1) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["r", "t", "u"])
            for j, t in enumerate(self.t_grid):
                for i in range(0, self.r_grid.size, stride):
                    w.writerow([f"{self.r_grid[i]:.16e}", f"{t:.16e}", f"{self.values[j, i]:.16e}"])


def solve(space: RadialSpace, init: Callable[[np.ndarray], np.ndarray] | np.ndarray, times: Sequence[float],
          config: SolverConfig = SolverConfig(), r_grid: np.ndarray | None = None) -> HeatField:
    """Evolve radial initial data from ``t = 0`` to each of ``times``."""
    times = [float(t) for t in times]
    if any(b <= a for a, b in zip(times, times[1:])) or (times and times[0] <= 0):
        raise ValueError("times must be positive and increasing")
    if r_grid is None:
        r_max = space.domain_max
        if not math.isfinite(r_max):
            r_max = config.outer_factor * math.sqrt(max(times))
        r_grid = np.linspace(0.0, r_max, config.n_points)
    op = build_operator(space, r_grid, config.boundary)
    u0 = init(r_grid) if callable(init) else np.asarray(init, dtype=float)
    if np.any(u0 < 0):
        raise ValueError("initial data must be nonnegative")
    vals = march(op, u0, 0.0, times, config)
    return HeatField(np.asarray(r_grid), np.asarray(times), np.array(vals), op.w)


def kernel_grid(space: RadialSpace, t_min: float, r_max: float, config: SolverConfig) -> np.ndarray:
    h0 = config.pole_spacing * math.sqrt(config.seed_factor * t_min)
    return graded_grid(min(r_max, space.domain_max), config.n_points, h0)


def seed(op: Operator, t_seed: float) -> np.ndarray:
    """Flat Gaussian at ``t_seed``, normalised to unit discrete mass."""
    g = np.exp(-op.r[: op.n] ** 2 / (4.0 * t_seed))
    return g / op.mass(g)


def kernel_field(space: RadialSpace, times: Sequence[float], config: SolverConfig = SolverConfig(),
                 r_grid: np.ndarray | None = None) -> HeatField:
    """``H(0, r, t)`` for each output time on one shared grid.

    Each time is marched from its own seed at ``seed_factor * t``, so every
    column carries the same relative seed and stepping error whatever other
    times are requested.
    """
    times = [float(t) for t in times]
    if not times or times[0] <= 0 or any(b <= a for a, b in zip(times, times[1:])):
        raise ValueError("times must be positive and increasing")
    t_seed = config.seed_factor * times[0]
    if t_seed > times[0] / 100.0:
        raise SeedTooLarge(f"seed time {t_seed:g} exceeds t/100")
    if r_grid is None:
        r_grid = kernel_grid(space, times[0], config.outer_factor * math.sqrt(times[-1]), config)
    op = build_operator(space, r_grid, config.boundary)
    vals = []
    for t in times:
        ts = config.seed_factor * t
        vals += march(op, seed(op, ts), ts, [t], config)
    return HeatField(np.asarray(r_grid), np.asarray(times), np.array(vals), op.w)


def kernel_diag(space: RadialSpace, t: float, config: SolverConfig = SolverConfig()) -> float:
    """``H(0, 0, t)`` from delta data at the pole."""
    return float(kernel_field(space, [t], config).values[0, 0])


def diag_curve(space: RadialSpace, times: Sequence[float], config: SolverConfig = SolverConfig()) -> np.ndarray:
    return kernel_field(space, times, config).values[:, 0].copy()


def normalized_diag(space: RadialSpace, t: float, config: SolverConfig = SolverConfig()) -> float:
    """``V(sqrt t) H(0, 0, t)``."""
    return float(np.exp(space.log_vol(0.5 * math.log(t)))) * kernel_diag(space, t, config)


@dataclass(frozen=True)
class DiagonalCurve:
    t: np.ndarray
    v_sqrt_t: np.ndarray
    h_diag: np.ndarray

    @property
    def normalized(self) -> np.ndarray:
        return self.v_sqrt_t * self.h_diag

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "V_sqrt_t", "H_diag", "normalized"])
            for row in zip(self.t, self.v_sqrt_t, self.h_diag, self.normalized):
                w.writerow([f"{x:.16e}" for x in row])


def diagonal_curve(space: RadialSpace, times: Sequence[float], config: SolverConfig = SolverConfig()) -> DiagonalCurve:
    t = np.asarray(times, dtype=float)
    h = diag_curve(space, t, config)
    v = np.exp(space.log_vol(0.5 * np.log(t)))
    return DiagonalCurve(t, v, h)


def with_points(config: SolverConfig, n_points: int) -> SolverConfig:
    return replace(config, n_points=n_points)
