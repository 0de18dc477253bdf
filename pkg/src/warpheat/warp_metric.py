"""Doubly warped metric ``dr^2 + f^2 k1 + h^2 k2`` on R^8 built from power-law bands.

Band radii grow doubly exponentially, so every radius is carried as its natural
log and the warp functions are evaluated in joint-relative coordinates: a point
is ``(j, s)`` with ``r = b_j * exp(s)``.  Evaluators return

    lq = log(f / r),   D = r f' / f,   S = r^2 f'' / f

which stay O(1) where the raw values overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import brentq

LOG7 = math.log(7.0)
REL_TOL = 1e-12
CONT_TOL = 1e-10


class InfeasibleSchedule(ValueError):
    """No parameter choice satisfies a numbered assumption."""

    def __init__(self, assumption: str, detail: str) -> None:
        self.assumption = assumption
        super().__init__(f"Assumption {assumption} infeasible: {detail}")


class OutOfRange(ValueError):
    pass


class NonpositiveConstant(ValueError):
    pass


class OverlappingWindows(ValueError):
    pass


def _frozen(values: Iterable[float]) -> np.ndarray:
    arr = np.array(list(values), dtype=float)
    arr.setflags(write=False)
    return arr


# ---------------------------------------------------------------------------
# parameters


@dataclass(frozen=True)
class Schedule:
    """Generation config.

    ``omega0=None`` picks the geometric mean of ``eps0`` and ``(eta2-eta1)/100``.
    Even-index targets approach 1 as ``1 - gap * 2**-i``; odd-index targets
    decay as ``odd0 * 2**-i``.
    """

    eta1: float = 0.6
    eta2: float = 0.604
    eps0: float = 2e-5
    n_bands: int = 8
    omega0: float | None = None
    omega_decay: float = 0.1
    b0_margin: float = 0.05
    alpha_gap: float = 0.0095
    alpha_odd0: float = 0.005
    beta_gap: float = 0.0095
    beta_odd0: float = 0.005


@dataclass(frozen=True)
class ConstructionParams:
    eta1: float
    eta2: float
    eps0: float
    log_b: np.ndarray
    eps: np.ndarray
    omega: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    delta_sum: float
    tau_sum: float
    n_bands: int

    @property
    def gap(self) -> float:
        return self.eta2 - self.eta1

    @property
    def b0(self) -> float:
        return math.exp(self.log_b[0])

    def exponents(self, which: str) -> np.ndarray:
        """Power of ``r`` on each band ``(b_k, b_{k+1}]``."""
        k = np.arange(len(self.eps))
        if which == "f":
            return np.where(k % 2 == 0, 1.0 - self.eta1, 1.0 - self.eta2)
        if which == "h":
            return np.where(k % 2 == 0, 1.0 + self.eps, 1.0 - self.eps)
        raise ValueError(f"unknown warp function {which!r}")

    def log_coeff(self, which: str) -> np.ndarray:
        """Log of the power-law coefficient on each band (bar profile)."""
        L = self.log_b
        out = []
        for k in range(len(self.eps)):
            sgn = -1.0 if k % 2 == 0 else 1.0
            if which == "f":
                out.append(math.log(self.beta[k]) + sgn * self.omega[k] * L[k + 1])
            else:
                out.append(math.log(self.alpha[k]) + sgn * self.eps[k] * L[k + 1])
        return np.array(out)


def make_params(eta1: float, eta2: float, eps0: float, log_b: Sequence[float],
                eps: Sequence[float], omega: Sequence[float], alpha: Sequence[float],
                beta: Sequence[float], n_bands: int | None = None) -> ConstructionParams:
    log_b = _frozen(log_b)
    eps = _frozen(eps)
    gap = eta2 - eta1
    delta = float(np.sum(eps))
    tau = float(np.sum(np.exp(-0.5 * gap * log_b[1:]))) if len(log_b) > 1 else 0.0
    return ConstructionParams(
        eta1=float(eta1), eta2=float(eta2), eps0=float(eps0), log_b=log_b, eps=eps,
        omega=_frozen(omega), alpha=_frozen(alpha), beta=_frozen(beta),
        delta_sum=delta, tau_sum=tau,
        n_bands=int(n_bands if n_bands is not None else max(len(log_b) - 2, 0)),
    )


def _targets(gap: float, odd0: float, n: int) -> np.ndarray:
    out = np.empty(n)
    for k in range(n):
        i = k // 2
        out[k] = 1.0 - gap * 2.0 ** -i if k % 2 == 0 else odd0 * 2.0 ** -i
    return out


def generate_params(schedule: Schedule = Schedule()) -> ConstructionParams:
    """Build a parameter set meeting every finitely checkable assumption.

    Radii come from the slope-matching recursions for ``beta`` (one new radius
    per step, given the geometric ``omega`` schedule), ``eps`` from the matching
    recursions for ``alpha``, and ``b_1`` from the cap-gluing identity that
    forces ``C2 = C1 / 3``.
    """
    s = schedule
    e1, e2, e0, N = s.eta1, s.eta2, s.eps0, s.n_bands
    if N < 4:
        raise ValueError("n_bands must be at least 4")
    ratio = (1.0 - e2) / (1.0 - e1)
    if not (1.0 > e2 > e1 > 0.5 * (1.0 + e0)) or not (1.0 - e0 > ratio >= 0.99 * (1 - REL_TOL)):
        raise InfeasibleSchedule(
            "1", f"(1-eta2)/(1-eta1) = {ratio:.6g} must lie in [0.99, 1-eps0) "
            f"with 1 > eta2 > eta1 > (1+eps0)/2")
    gap = e2 - e1
    w0 = s.omega0 if s.omega0 is not None else math.sqrt(e0 * gap / 100.0)
    if not gap / 100.0 > w0 > 0.0:
        raise InfeasibleSchedule("2", f"omega0 = {w0:.3g} must be below (eta2-eta1)/100 = {gap / 100:.3g}")
    if not e0 < w0:
        raise InfeasibleSchedule("17", f"eps0 = {e0:.3g} must be below omega0 = {w0:.3g}")

    n = N + 1
    alpha = _targets(s.alpha_gap, s.alpha_odd0, n)
    beta = _targets(s.beta_gap, s.beta_odd0, n)
    omega = w0 * s.omega_decay ** np.arange(n)
    L = np.empty(N + 2)
    L[0] = LOG7 / e1 + s.b0_margin

    def cap_residual(L1: float) -> float:
        rhs = 2.0 / 3.0 + beta[0] * math.exp(-w0 * L1 - e1 * L[0]) * (1.0 - e1) / 3.0
        return math.log(rhs) + e0 * (L1 - L[0]) - math.log1p(e0) - math.log(alpha[0])

    lo, hi = L[0] + 1e-9, L[0] + 50.0 / e0
    if cap_residual(lo) * cap_residual(hi) > 0:
        raise InfeasibleSchedule("13", "no b1 reconciles the cap constants with alpha0")
    L[1] = brentq(cap_residual, lo, hi, xtol=1e-12, rtol=1e-15, maxiter=200)

    lr = math.log(ratio)
    for k in range(1, n):
        if k % 2 == 1:
            prod = math.log(beta[k - 1] / beta[k]) - lr + (gap - omega[k - 1]) * L[k]
        else:
            prod = (gap - omega[k - 1]) * L[k] - lr + math.log(beta[k] / beta[k - 1])
        if prod <= 0:
            raise InfeasibleSchedule("3", f"slope matching at b_{k} needs a smaller radius than b_{k}")
        L[k + 1] = prod / omega[k]
        if L[k + 1] <= L[k]:
            raise InfeasibleSchedule("5", f"b_{k + 1} not above b_{k}")

    eps = np.empty(n)
    eps[0] = e0
    for k in range(1, n):
        dL = L[k + 1] - L[k]
        if k % 2 == 1:
            target = math.log(alpha[k - 1] / alpha[k]) + math.log1p(eps[k - 1])
            g = lambda e: e * dL + math.log1p(-e) - target  # noqa: E731
        else:
            target = math.log(alpha[k] / alpha[k - 1]) - math.log1p(-eps[k - 1])
            g = lambda e: e * dL - math.log1p(e) - target  # noqa: E731
        hi = min(eps[k - 1], 0.5)
        if g(1e-300) >= 0 or g(hi) <= 0:
            raise InfeasibleSchedule("5", f"eps_{k} would not decrease")
        eps[k] = brentq(g, 1e-300, hi, xtol=1e-300, rtol=1e-15, maxiter=400)

    params = make_params(e1, e2, e0, L, eps, omega, alpha, beta, N)
    report = check_assumptions(params, N)
    bad = report.failures()
    if bad:
        raise InfeasibleSchedule(bad[0].name, bad[0].detail)
    return params


# ---------------------------------------------------------------------------
# assumption checks


@dataclass(frozen=True)
class AssumptionResult:
    name: str
    passed: bool
    worst_margin: float
    detail: str = ""


@dataclass(frozen=True)
class AssumptionReport:
    results: tuple[AssumptionResult, ...]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def failures(self) -> list[AssumptionResult]:
        return [r for r in self.results if not r.passed]

    def get(self, name: str) -> AssumptionResult:
        for r in self.results:
            if r.name == name:
                return r
        raise KeyError(name)


class _Collector:
    """Accumulates relative margins per assumption; a margin >= 0 passes."""

    def __init__(self) -> None:
        self.margins: dict[str, list[tuple[float, bool, str]]] = {}

    def touch(self, name: str) -> None:
        self.margins.setdefault(name, [])

    def less(self, name: str, lhs: float, rhs: float, what: str, strict: bool = True) -> None:
        m = (rhs - lhs) / max(1.0, abs(lhs), abs(rhs))
        ok = m > 0.0 if strict else m >= -REL_TOL
        self.margins.setdefault(name, []).append((m, ok, what))

    def equal(self, name: str, lhs: float, rhs: float, what: str, scale: float = 1.0) -> None:
        m = REL_TOL - abs(lhs - rhs) / max(1.0, abs(scale))
        self.margins.setdefault(name, []).append((m, m >= 0.0, what))

    def report(self) -> AssumptionReport:
        out = []
        for name in sorted(self.margins, key=int):
            entries = self.margins[name]
            if not entries:
                out.append(AssumptionResult(name, True, math.inf, "vacuous"))
                continue
            failing = [e for e in entries if not e[1]]
            m, _, what = min(failing or entries, key=lambda e: e[0])
            out.append(AssumptionResult(name, not failing, m, what))
        return AssumptionReport(tuple(out))


ALL_ASSUMPTIONS = ("1", "2", "3", "4", "5", "6", "7", "8", "9", "10", "11",
                   "13", "14", "15", "17", "18", "19", "20", "21", "22")


def check_assumptions(params: ConstructionParams, count: int | None = None) -> AssumptionReport:
    """Evaluate every finite-index assumption up to sequence index ``count``.

    Margins are relative (``(rhs - lhs) / max(1, |lhs|, |rhs|)``) and
    inequalities involving radii are compared in log form.  Pure function.
    """
    c = _Collector()
    for name in ALL_ASSUMPTIONS:
        c.touch(name)
    p = params
    L, eps, w, al, be = p.log_b, p.eps, p.omega, p.alpha, p.beta
    n = len(eps) if count is None else min(count + 1, len(eps))
    nL = min(len(L), n + 1)
    if n == 0 or len(L) < 2:
        return c.report()
    e1, e2, e0 = p.eta1, p.eta2, p.eps0
    gap = e2 - e1
    ratio = (1 - e2) / (1 - e1)

    c.less("1", ratio, 1 - e0, "(1-eta2)/(1-eta1) < 1-eps0")
    c.less("1", 0.99, ratio, "(1-eta2)/(1-eta1) >= 99/100", strict=False)
    c.less("1", e2, 1.0, "eta2 < 1")
    c.less("1", e1, e2, "eta1 < eta2")
    c.less("1", 0.5 * (1 + e0), e1, "eta1 > (1+eps0)/2")
    _seq_checks(c, "1", be[:n], 0.99, 0.01)
    _seq_checks(c, "4", al[:n], 0.99, 0.01)

    c.less("2", w[0], gap / 100.0, "omega0 < (eta2-eta1)/100")
    for k in range(1, n):
        c.less("2", w[k], w[k - 1], f"omega_{k} < omega_{k-1}")
    c.less("2", 0.0, float(w[n - 1]), "omega positive")

    lr = math.log(ratio)
    for k in range(n - 1):
        if k + 2 > len(L) - 1:
            break
        if k % 2 == 0:
            lhs = -lr + math.log(be[k] / be[k + 1])
            rhs = w[k + 1] * L[k + 2] - (gap - w[k]) * L[k + 1]
            scale = abs(w[k + 1] * L[k + 2]) + abs((gap - w[k]) * L[k + 1])
        else:
            lhs = lr + math.log(be[k] / be[k + 1])
            rhs = (gap - w[k]) * L[k + 1] - w[k + 1] * L[k + 2]
            scale = abs(w[k + 1] * L[k + 2]) + abs((gap - w[k]) * L[k + 1])
        c.equal("3", lhs, rhs, f"slope match at b_{k + 1}", scale)

    for k in range(n - 1):
        if k + 2 > len(L) - 1:
            break
        dl = L[k + 2] - L[k + 1]
        if k % 2 == 0:
            lhs = math.log(al[k] / al[k + 1])
            rhs = math.log1p(-eps[k + 1]) - math.log1p(eps[k]) + eps[k + 1] * dl
        else:
            lhs = math.log(al[k + 1] / al[k])
            rhs = math.log1p(-eps[k]) - math.log1p(eps[k + 1]) + eps[k + 1] * dl
        c.equal("6", lhs, rhs, f"h slope match at b_{k + 1}", abs(eps[k + 1] * dl))

    c.less("5", 0.0, L[0], "b0 > 1")
    for k in range(1, nL):
        c.less("5", L[k - 1], L[k], f"b_{k} > b_{k-1}")
    c.less("5", eps[0], 1.0, "eps0 < 1")
    for k in range(1, n):
        c.less("5", eps[k], eps[k - 1], f"eps_{k} < eps_{k-1}")
    c.less("5", 0.0, float(eps[n - 1]), "eps positive")

    c.less("7", LOG7, e1 * L[0], "b0^eta1 >= 7", strict=False)
    c.less("8", e0 * (L[1] - L[0]), math.log(al[0]) + e1 * L[0], "alpha0 b0^eta1 > (b1/b0)^eps0")
    for k in range(0, n, 2):
        c.less("9", eps[k], 0.5 * (1.0 / al[k] - 1.0), f"eps_{k} < (1/alpha_{k} - 1)/2")
    c.less("10", math.log(e0),
           math.log(0.25 * e1 * (1 - e1)) - e1 * L[0] - w[0] * L[1], "eps0 bound")
    for k in range(2, min(n, nL), 2):
        rhs = math.log((1 + eps[k]) / (1 - eps[k - 1])) - math.log(al[k - 1])
        c.less("11", rhs, e1 * L[k], f"b_{k}^eta1 bound")

    x = be[0] * math.exp(-w[0] * L[1] - e1 * L[0]) * (1 - e1)
    lhs13 = math.log(al[0]) + math.log1p(e0) - e0 * (L[1] - L[0])
    c.equal("13", lhs13, math.log(2.0 / 3.0 + x / 3.0), "cap gluing identity")
    b0 = math.exp(L[0])
    if (1.0 - x) / b0 <= 0:
        c.less("13", 1.0, x, "C1 > 0")

    for k in range(0, nL - 2, 2):
        c.less("14", (1 - 0.5 * (e1 + e2)) * L[k + 1], (1 - e2) * L[k + 2],
               f"b_{k+1} vs b_{k+2}", strict=False)

    delta = float(np.sum(eps[:n]))
    tau = float(np.sum(np.exp(-0.5 * gap * L[1:nL])))
    c.less("15", delta, 1.0, "delta < 1")
    c.less("15", tau, 1.0, "tau < 1")

    for k in range(0, n, 2):
        c.less("17", eps[k], w[k], f"eps_{k} < omega_{k}")

    shrink = 1 - 3 * math.exp(L[0] - L[1]) - 4 * delta
    t18 = 2 * math.exp(L[0] - (1 - e1 - w[0]) * L[1]) + gap / (1 - e2) + tau
    c.less("18", t18, e1 ** 3, "jump budget below eta1^3")
    if shrink > 0:
        c.less("18", math.log(2 + 20 / shrink), 2 * e1 * L[1], "b1^(2 eta1) bound")
        c.less("19", e0, 0.1 * e1 * (1 - e1) * shrink, "eps0 vs eta1(1-eta1)", strict=False)
    else:
        c.less("18", 1.0, 0.0, "1 - 3b0/b1 - 4delta not positive")
        c.less("19", 1.0, 0.0, "1 - 3b0/b1 - 4delta not positive")
    if 1 - 4 * delta > 0:
        c.less("20", math.log(100 / (1 - 4 * delta)), e1 * L[1], "b1^eta1 bound", strict=False)
    else:
        c.less("20", 1.0, 0.0, "4 delta >= 1")
    c.less("21", 3 * math.exp(L[0] - L[1]) + 4 * delta, e1, "3b0/b1 + 4delta <= eta1", strict=False)

    # limits at infinity: finite-index monotone trend from index 1 on
    m = min(n, len(L) - 1)
    a = [eps[i] * L[i] for i in range(1, m)]
    b = [eps[i] ** 2 * L[i + 1] for i in range(1, m)]
    d = [eps[i] * L[i + 1] for i in range(m)]
    for i in range(1, len(a)):
        c.less("22", a[i], a[i - 1], f"eps_i log b_i decreasing at {i + 1}")
        c.less("22", b[i], b[i - 1], f"eps_i^2 log b_(i+1) decreasing at {i + 1}")
    for i in range(1, len(d)):
        c.less("22", d[i - 1], d[i], f"eps_i log b_(i+1) increasing at {i}")
    return c.report()


def _seq_checks(c: _Collector, name: str, seq: np.ndarray, first_min: float, second_max: float) -> None:
    n = len(seq)
    c.less(name, first_min, float(seq[0]), "even start", strict=False)
    if n > 1:
        c.less(name, float(seq[1]), second_max, "odd start", strict=False)
    for k in range(2, n):
        if k % 2 == 0:
            c.less(name, float(seq[k - 2]), float(seq[k]), f"index {k} increasing")
            c.less(name, float(seq[k]), 1.0, f"index {k} below 1")
        else:
            c.less(name, float(seq[k]), float(seq[k - 2]), f"index {k} decreasing")
            c.less(name, 0.0, float(seq[k]), f"index {k} positive")


# ---------------------------------------------------------------------------
# serialization


def dump_params(params: ConstructionParams) -> str:
    lines = [
        f"eta1 = {params.eta1:.17g}",
        f"eta2 = {params.eta2:.17g}",
        f"eps0 = {params.eps0:.17g}",
        f"n_bands = {params.n_bands}",
    ]
    for key, arr in (("log_b", params.log_b), ("eps", params.eps), ("omega", params.omega),
                     ("alpha", params.alpha), ("beta", params.beta)):
        lines.extend(f"{key}.{i} = {v:.17g}" for i, v in enumerate(arr))
    return "\n".join(lines) + "\n"


def load_params(text: str) -> ConstructionParams:
    scalars: dict[str, float] = {}
    seqs: dict[str, dict[int, float]] = {k: {} for k in ("log_b", "eps", "omega", "alpha", "beta")}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key = value")
        key, val = (t.strip() for t in line.split("=", 1))
        if "." in key:
            base, idx = key.split(".", 1)
            if base not in seqs or not idx.isdigit():
                raise ValueError(f"line {lineno}: unknown key {key!r}")
            seqs[base][int(idx)] = float(val)
        elif key in ("eta1", "eta2", "eps0", "n_bands"):
            scalars[key] = float(val)
        else:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
    for k in ("eta1", "eta2", "eps0"):
        if k not in scalars:
            raise ValueError(f"missing key {k!r}")
    arrays = {}
    for k, d in seqs.items():
        if sorted(d) != list(range(len(d))):
            raise ValueError(f"sequence {k!r} has gaps")
        arrays[k] = [d[i] for i in range(len(d))]
    n = int(scalars["n_bands"]) if "n_bands" in scalars else None
    return make_params(scalars["eta1"], scalars["eta2"], scalars["eps0"], arrays["log_b"],
                       arrays["eps"], arrays["omega"], arrays["alpha"], arrays["beta"], n)


def save_params(params: ConstructionParams, path: str | Path) -> None:
    Path(path).write_text(dump_params(params))


# ---------------------------------------------------------------------------
# bar profiles, cap and jumps


def _band_of(params: ConstructionParams, log_r: float) -> int:
    L = params.log_b
    n = len(params.eps)
    if not log_r > L[0]:
        raise OutOfRange(f"log_r = {log_r} must exceed log b0 = {L[0]}")
    k = int(np.searchsorted(L, log_r, side="left")) - 1
    if k >= min(n, len(L) - 1):
        raise OutOfRange(f"log_r = {log_r} beyond the last generated band")
    return k


def eval_bar_log(params: ConstructionParams, which: str, log_r: float) -> tuple[float, float, float]:
    """``(log value, r g'/g, r^2 g''/g)`` of the uncorrected power-law profile."""
    k = _band_of(params, log_r)
    p = float(params.exponents(which)[k])
    return float(params.log_coeff(which)[k] + p * log_r), p, p * (p - 1.0)


def eval_bar(params: ConstructionParams, which: str, log_r: float) -> tuple[float, float, float]:
    """Value, first and second derivative of the power-law profile at ``exp(log_r)``.

    Overflows to ``inf`` once the radius leaves double range; use
    :func:`eval_bar_log` there.
    """
    lv, d, s = eval_bar_log(params, which, log_r)
    with np.errstate(over="ignore"):
        v = float(np.exp(lv))
        return v, float(d * np.exp(lv - log_r)), float(s * np.exp(lv - 2 * log_r))


@dataclass(frozen=True)
class InnerCap:
    """Quadratic caps ``r - C (r - b0/2)^2`` on ``(b0/2, b0]``, identity below."""

    c1: float
    c2: float
    b0: float

    def eval(self, which: str, r: float) -> tuple[float, float, float]:
        c = self.c1 if which == "f" else self.c2
        m = 0.5 * self.b0
        if r <= m:
            return r, 1.0, 0.0
        return r - c * (r - m) ** 2, 1.0 - 2.0 * c * (r - m), -2.0 * c


def _cap_slope_f(params: ConstructionParams) -> float:
    L = params.log_b
    return params.beta[0] * math.exp(-params.omega[0] * L[1] - params.eta1 * L[0]) * (1.0 - params.eta1)


def _cap_slope_h(params: ConstructionParams) -> float:
    L = params.log_b
    return params.alpha[0] * (1.0 + params.eps0) * math.exp(-params.eps0 * (L[1] - L[0]))


def inner_cap(params: ConstructionParams) -> InnerCap:
    b0 = params.b0
    c1 = (1.0 - _cap_slope_f(params)) / b0
    c2 = (1.0 - _cap_slope_h(params)) / b0
    if not (c1 > 0 and c2 > 0):
        raise NonpositiveConstant(f"cap constants must be positive (C1={c1:.3g}, C2={c2:.3g})")
    return InnerCap(c1, c2, b0)


@dataclass(frozen=True)
class JumpOffsets:
    """Jumps of the bar profiles at ``b_k`` and their running sums.

    Magnitudes are stored as ``(sign, log|.|)``; the ``*_rel`` arrays give each
    quantity divided by the bar value just right of ``b_k``.
    """

    tau_sign: np.ndarray
    tau_log: np.ndarray
    delta_sign: np.ndarray
    delta_log: np.ndarray
    zeta_sign: np.ndarray
    zeta_log: np.ndarray
    xi_sign: np.ndarray
    xi_log: np.ndarray
    tau_rel: np.ndarray
    delta_rel: np.ndarray
    zeta_rel: np.ndarray
    xi_rel: np.ndarray

    @property
    def tau0(self) -> float:
        return float(self.tau_sign[0] * math.exp(self.tau_log[0]))

    @property
    def delta0(self) -> float:
        return float(self.delta_sign[0] * math.exp(self.delta_log[0]))


def _jump_rel(params: ConstructionParams, which: str, k: int) -> float:
    """Jump at ``b_k`` (k >= 1) over the bar value just right of ``b_k``."""
    e1, e2, eps = params.eta1, params.eta2, params.eps
    gap = e2 - e1
    if which == "f":
        return -gap / (1.0 - e1) if k % 2 == 1 else gap / (1.0 - e2)
    if k % 2 == 1:
        return -(eps[k] + eps[k - 1]) / (1.0 + eps[k - 1])
    return (eps[k] + eps[k - 1]) / (1.0 - eps[k - 1])


def _chain(params: ConstructionParams, which: str, first_rel: float) -> np.ndarray:
    """Running offset over the bar value at each band start."""
    p = params.exponents(which)
    L = params.log_b
    n = min(len(p), len(L) - 1)
    z = np.empty(n)
    z[0] = first_rel
    for k in range(1, n):
        carried = z[k - 1] * math.exp(-p[k - 1] * (L[k] - L[k - 1])) * p[k] / p[k - 1]
        z[k] = carried + _jump_rel(params, which, k)
    return z


def jump_offsets(params: ConstructionParams) -> JumpOffsets:
    cap = inner_cap(params)
    b0 = cap.b0
    L = params.log_b
    n = min(len(params.eps), len(L) - 1)
    lf = params.log_coeff("f")
    lh = params.log_coeff("h")
    pf = params.exponents("f")
    ph = params.exponents("h")
    bar_f = np.array([lf[k] + pf[k] * L[k] for k in range(n)])
    bar_h = np.array([lh[k] + ph[k] * L[k] for k in range(n)])

    tau0 = 0.25 * b0 * (3.0 - (3.0 + params.eta1) * _cap_slope_f(params) / (1.0 - params.eta1))
    delta0 = (b0 - 0.25 * cap.c2 * b0 * b0) - math.exp(bar_h[0])
    tau_rel = np.array([tau0 / math.exp(bar_f[0])] + [_jump_rel(params, "f", k) for k in range(1, n)])
    delta_rel = np.array([delta0 / math.exp(bar_h[0])] + [_jump_rel(params, "h", k) for k in range(1, n)])
    zeta_rel = _chain(params, "f", tau_rel[0])
    xi_rel = _chain(params, "h", delta_rel[0])

    def signed(rel: np.ndarray, base: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        with np.errstate(divide="ignore"):
            return np.sign(rel), np.log(np.abs(rel)) + base

    ts, tl = signed(tau_rel, bar_f)
    ds, dl = signed(delta_rel, bar_h)
    zs, zl = signed(zeta_rel, bar_f)
    xs, xl = signed(xi_rel, bar_h)
    return JumpOffsets(*(_frozen(a) for a in (ts, tl, ds, dl, zs, zl, xs, xl,
                                               tau_rel, delta_rel, zeta_rel, xi_rel)))


# ---------------------------------------------------------------------------
# C1 profile in joint-relative coordinates


@dataclass(frozen=True)
class Band:
    """One power-law band ``(b_k, b_{k+1}]`` of a corrected profile ``F``.

    ``lq0 = log(F(b_k)/b_k)``; ``a = bar(b_k+)/F(b_k)``;
    ``a_end = bar(b_{k+1}-)/F(b_{k+1})``.  On the band
    ``F(r)/F(b_k) = a (r/b_k)^p + 1 - a``.  ``z_end = 1/a_end - 1`` is kept as
    ``(z_sign, log_z_end)`` since it is far below rounding of ``a_end``.
    """

    log_start: float
    length: float
    p: float
    lq0: float
    a: float
    a_end: float
    z_sign: float = 0.0
    log_z_end: float = -math.inf


@dataclass(frozen=True)
class Window:
    joint: int
    half_width: float


def _bands(params: ConstructionParams, which: str, cap_value: float, bar0: float) -> tuple[Band, ...]:
    p = params.exponents(which)
    L = params.log_b
    n = min(len(p), len(L) - 1)
    out = []
    lq = math.log(cap_value) - L[0]
    a = bar0 / cap_value
    for k in range(n):
        dl = L[k + 1] - L[k]
        decay = math.exp(-p[k] * dl)
        z0 = 1.0 / a - 1.0
        z_end = z0 * decay
        a_end = 1.0 / (1.0 + z_end)
        lz = math.log(abs(z0)) - p[k] * dl if z0 != 0 else -math.inf
        out.append(Band(float(L[k]), float(dl), float(p[k]), float(lq), float(a), float(a_end),
                        float(np.sign(z0)), float(lz)))
        lq = lq + (p[k] - 1.0) * dl + math.log(a + (1.0 - a) * decay)
        if k + 1 < n:
            a = a_end * p[k] / p[k + 1]
    return tuple(out)


@dataclass(frozen=True)
class WarpProfile:
    """Piecewise warp functions ``f``, ``h`` on ``(0, b_N]``.

    Joints are indexed ``-1`` (at ``b0/2``) and ``0..N`` (at ``b_k``).  The
    evaluators return ``(log(F/r), r F'/F, r^2 F''/F)``.
    """

    log_b: np.ndarray
    f_bands: tuple[Band, ...]
    h_bands: tuple[Band, ...]
    cap: InnerCap
    zeta_rel: np.ndarray
    xi_rel: np.ndarray
    windows: tuple[Window, ...] = ()

    # -- geometry of joints
    @property
    def n_bands(self) -> int:
        return len(self.f_bands)

    def joint_log(self, j: int) -> float:
        return math.log(0.5 * self.cap.b0) if j == -1 else float(self.log_b[j])

    def segment_length(self, j: int) -> float:
        """Log-length of the segment right of joint ``j``."""
        if j == -1:
            return math.log(2.0)
        if j < self.n_bands:
            return self.f_bands[j].length
        return 0.0

    def _bands_of(self, which: str) -> tuple[Band, ...]:
        if which == "f":
            return self.f_bands
        if which == "h":
            return self.h_bands
        raise ValueError(f"unknown warp function {which!r}")

    def _cap_c(self, which: str) -> float:
        return self.cap.c1 if which == "f" else self.cap.c2

    def joint_lq(self, which: str, j: int) -> float:
        if j == -1:
            return 0.0
        if j < self.n_bands:
            return self._bands_of(which)[j].lq0
        b = self._bands_of(which)[-1]
        return b.lq0 + (b.p - 1.0) * b.length + math.log(b.a + (1.0 - b.a) * math.exp(-b.p * b.length))

    # -- unsmoothed evaluation
    def _segment(self, which: str, j: int, s: float) -> tuple[float, float, float]:
        """``(log(F(r)/F(b_j)) - s, D, S)``; joint-relative so huge radii keep precision."""
        if j == -1 and s <= 0.0:
            return 0.0, 1.0, 0.0
        if (j == -1 and s > 0.0) or (j == 0 and s <= 0.0):
            r = 0.5 * self.cap.b0 * math.exp(s) if j == -1 else self.cap.b0 * math.exp(s)
            v, d1, d2 = self.cap.eval(which, r)
            return math.log(v / r) - self.joint_lq(which, j), r * d1 / v, r * r * d2 / v
        bands = self._bands_of(which)
        if s > 0.0:
            if j >= self.n_bands:
                raise OutOfRange("beyond the last band")
            b = bands[j]
            e = math.exp(-b.p * s)
            den = b.a + (1.0 - b.a) * e
            d = b.p * b.a / den
            return (b.p - 1.0) * s + math.log(den), d, (b.p - 1.0) * d
        b = bands[j - 1]
        # F/F(b_j) = (x^p + z_end) / (1 + z_end) with x = e^s
        ps = b.p * s
        u = b.z_sign * math.exp(min(b.log_z_end - ps, 700.0))
        z_end = b.z_sign * math.exp(b.log_z_end)
        d = b.p / (1.0 + u)
        return ps + math.log1p(u) - math.log1p(z_end) - s, d, (b.p - 1.0) * d

    def window_at(self, j: int) -> Window | None:
        for w in self.windows:
            if w.joint == j:
                return w
        return None

    def _window_poly(self, which: str, w: Window) -> tuple[float, float, float, float, float, float]:
        xl, xr = math.exp(-w.half_width), math.exp(w.half_width)
        lq, d, s2 = self._segment(which, w.joint, -w.half_width)
        yl = xl * math.exp(lq)
        y1l, y2l = d * yl / xl, s2 * yl / (xl * xl)
        lq, d, s2 = self._segment(which, w.joint, w.half_width)
        yr = xr * math.exp(lq)
        y2r = s2 * yr / (xr * xr)
        return xl, xr, yl, y1l, y2l, y2r

    def _window_eval(self, which: str, w: Window, s: float) -> tuple[float, float, float]:
        xl, xr, yl, y1l, y2l, y2r = self._window_poly(which, w)
        m = (y2r - y2l) / (xr - xl)
        x = math.exp(s)
        t = x - xl
        y2 = y2l + m * t
        y1 = y1l + y2l * t + 0.5 * m * t * t
        y = yl + y1l * t + 0.5 * y2l * t * t + m * t ** 3 / 6.0
        if y <= 0:
            raise ValueError("smoothing produced a nonpositive warp value")
        return math.log(y / x), x * y1 / y, x * x * y2 / y

    def window_drift(self, which: str, j: int) -> tuple[float, float, float]:
        """Right-edge mismatch of a window: ``(value drift, slope drift, w_r^2 |jump of F''|)``.

        All three are in units of ``F(b_j)`` and ``b_j``.
        """
        w = self.window_at(j)
        if w is None:
            return 0.0, 0.0, 0.0
        xl, xr, yl, y1l, y2l, y2r = self._window_poly(which, w)
        lq, d, _ = self._segment(which, j, w.half_width)
        yr = xr * math.exp(lq)
        y1r = d * yr / xr
        m = (y2r - y2l) / (xr - xl)
        t = xr - xl
        ys = yl + y1l * t + 0.5 * y2l * t * t + m * t ** 3 / 6.0
        y1s = y1l + y2l * t + 0.5 * m * t * t
        half = 0.5 * (xr - xl)
        return ys - yr, y1s - y1r, half * half * abs(y2r - y2l)

    # -- public evaluators
    def eval(self, which: str, j: int, s: float) -> tuple[float, float, float]:
        """``(log(F/r), r F'/F, r^2 F''/F)`` at ``r = b_j exp(s)``."""
        lq, d, s2 = self.eval_local(which, j, s)
        return self.joint_lq(which, j) + lq, d, s2

    def eval_local(self, which: str, j: int, s: float) -> tuple[float, float, float]:
        """Like :meth:`eval` but the first entry is ``log(F(r)/F(b_j)) - s``.

        Points past the middle of an adjacent segment are re-expressed from
        the nearer joint, shifting by the difference of joint values.
        """
        self._bands_of(which)
        if j > self.n_bands or (j == self.n_bands and s > 0.0):
            raise OutOfRange("beyond the last band")
        k, sk = j, s
        while k < self.n_bands and sk > 0.5 * self.segment_length(k):
            sk -= self.segment_length(k)
            k += 1
        while k > -1 and sk < -0.5 * self.segment_length(k - 1):
            sk += self.segment_length(k - 1)
            k -= 1
        w = self.window_at(k)
        if w is not None and -w.half_width < sk < w.half_width:
            out = self._window_eval(which, w, sk)
        else:
            out = self._segment(which, k, sk)
        if k == j:
            return out
        return out[0] + self.joint_lq(which, k) - self.joint_lq(which, j), out[1], out[2]

    def locate(self, log_r: float) -> tuple[int, float]:
        """Nearest joint and offset for an absolute log-radius."""
        joints = [self.joint_log(-1)] + [float(x) for x in self.log_b[: self.n_bands + 1]]
        if log_r > joints[-1] * (1 + 1e-15) + 1e-12:
            raise OutOfRange(f"log_r = {log_r} beyond the last band")
        i = int(np.searchsorted(joints, log_r))
        if i == 0:
            return -1, log_r - joints[0]
        if i >= len(joints):
            return len(joints) - 2, log_r - joints[-1]
        lo, hi = joints[i - 1], joints[i]
        if log_r - lo <= hi - log_r:
            return i - 2, log_r - lo
        return i - 1, log_r - hi

    def eval_log(self, which: str, log_r: float) -> tuple[float, float, float]:
        if log_r == -math.inf:
            return 0.0, 1.0, 0.0
        j, s = self.locate(log_r)
        return self.eval(which, j, s)

    def value(self, which: str, r: float) -> tuple[float, float, float]:
        """``(F, F', F'')`` at a radius inside double range."""
        if r == 0.0:
            return 0.0, 1.0, 0.0
        if r < 0.0:
            raise OutOfRange("negative radius")
        lq, d, s = self.eval_log(which, math.log(r))
        v = r * math.exp(lq)
        return v, d * v / r, s * v / (r * r)


def assemble_c1(params: ConstructionParams) -> WarpProfile:
    """Glue the caps to the offset power-law bands; the result is C1 on ``[0, b_N]``."""
    cap = inner_cap(params)
    b0 = cap.b0
    jumps = jump_offsets(params)
    fb0 = _cap_slope_f(params) * b0 / (1.0 - params.eta1)
    hb0 = _cap_slope_h(params) * b0 / (1.0 + params.eps0)
    f_bands = _bands(params, "f", b0 - 0.25 * cap.c1 * b0 * b0, fb0)
    h_bands = _bands(params, "h", b0 - 0.25 * cap.c2 * b0 * b0, hb0)
    return WarpProfile(
        log_b=_frozen(params.log_b[: len(f_bands) + 1]), f_bands=f_bands, h_bands=h_bands,
        cap=cap, zeta_rel=jumps.zeta_rel, xi_rel=jumps.xi_rel,
    )


def c1_residual(profile: WarpProfile) -> float:
    """Largest one-sided mismatch of ``log F`` and ``r F'/F`` over all joints of the unsmoothed profile."""
    worst = 0.0
    for which in ("f", "h"):
        for j in range(-1, profile.n_bands):
            left = profile._segment(which, j, -0.0)
            right = profile._segment(which, j, math.ulp(0.0))
            worst = max(worst, abs(left[0] - right[0]), abs(left[1] - right[1]))
    return worst


# ---------------------------------------------------------------------------
# smoothing


def default_windows(profile: WarpProfile, scale: float = 1e-3) -> list[Window]:
    """Half-width ``min(scale, 2^-i) * min(1, adjacent log-lengths)`` at each interior joint."""
    out = []
    for j in range(-1, profile.n_bands):
        i = max(j, 0)
        left = math.inf if j == -1 else profile.segment_length(j - 1)
        right = profile.segment_length(j)
        out.append(Window(j, min(scale, 2.0 ** -i) * min(1.0, left, right)))
    return out


def smooth_c2(profile: WarpProfile, windows: Sequence[Window] | None = None) -> WarpProfile:
    """Replace ``F''`` by its linear interpolant inside each window.

    ``F'`` and ``F`` are integrated from the window's left edge; outside the
    windows nothing changes.  Windows must be disjoint and sit strictly inside
    the two segments adjacent to their joint.
    """
    if windows is None:
        windows = default_windows(profile)
    ws = sorted((w for w in windows if w.half_width > 0.0), key=lambda w: w.joint)
    for w in ws:
        if not -1 <= w.joint < profile.n_bands:
            raise OverlappingWindows(f"no smoothing window allowed at joint {w.joint}")
        left = math.inf if w.joint == -1 else profile.segment_length(w.joint - 1)
        if not (w.half_width < left and w.half_width < profile.segment_length(w.joint)):
            raise OverlappingWindows(f"window at joint {w.joint} leaves its adjacent segments")
    for a, b in zip(ws, ws[1:]):
        if a.joint == b.joint:
            raise OverlappingWindows(f"two windows at joint {a.joint}")
        if b.joint == a.joint + 1 and a.half_width + b.half_width >= profile.segment_length(a.joint):
            raise OverlappingWindows(f"windows at joints {a.joint} and {b.joint} overlap")
    return replace(profile, windows=tuple(ws))


def build_profile(params: ConstructionParams, smooth: bool = True) -> WarpProfile:
    prof = assemble_c1(params)
    return smooth_c2(prof) if smooth else prof


# ---------------------------------------------------------------------------
# jump claims


@dataclass(frozen=True)
class ClaimResult:
    name: str
    passed: bool
    worst_margin: float
    checks: int


@dataclass(frozen=True)
class ClaimReport:
    results: tuple[ClaimResult, ...]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def get(self, name: str) -> ClaimResult:
        for r in self.results:
            if r.name == name:
                return r
        raise KeyError(name)


CLAIM_TOL = 1e-12


def _band_start_logs(params: ConstructionParams, which: str, base: float) -> np.ndarray:
    """Log of the bar value just right of each ``b_k``, chained from band 0."""
    p = params.exponents(which)
    L = params.log_b
    n = min(len(p), len(L) - 1)
    out = np.empty(n)
    out[0] = base
    for k in range(1, n):
        out[k] = out[k - 1] + p[k - 1] * (L[k] - L[k - 1]) + math.log(p[k - 1] / p[k])
    return out


def verify_claims(params: ConstructionParams) -> ClaimReport:
    """Bounds of each jump against the bar minimum on later bands.

    Margins are ``log(rhs) - log(lhs)``; a claim passes when every margin is
    at least ``-1e-12``.
    """
    jumps = jump_offsets(params)
    L = params.log_b
    e1, e2 = params.eta1, params.eta2
    gap = e2 - e1
    gf = _band_start_logs(params, "f", float(params.log_coeff("f")[0] + (1 - e1) * L[0]))
    gh = _band_start_logs(params, "h", float(params.log_coeff("h")[0] + (1 + params.eps0) * L[0]))
    n = len(gf)
    if n < 3:
        raise ValueError("claims need at least three bands")
    rel_f = np.log(np.abs(jumps.tau_rel))
    rel_h = np.log(np.abs(jumps.delta_rel))
    margins: dict[str, list[float]] = {k: [] for k in ("tau 1.1", "tau 1.2", "tau 1.3", "delta 1.1", "delta 1.2")}
    for j in range(1, n):
        lhs = jumps.tau_log[0]
        rhs = math.log(2.0) + L[0] - (1 - e1 - params.omega[0]) * L[1] + gf[j]
        margins["tau 1.1"].append(rhs - lhs)
        margins["delta 1.1"].append(math.log(3.0) + L[0] - L[1] + gh[j] - jumps.delta_log[0])
    for i in range(1, n):
        margins["tau 1.2"].append(math.log(gap / (1 - e2)) - rel_f[i])
        for j in range(i + 1, n):
            margins["tau 1.3"].append(-0.5 * gap * L[i] + gf[j] - gf[i] - rel_f[i])
        for j in range(i, n):
            margins["delta 1.2"].append(math.log(4 * params.eps[i - 1]) + gh[j] - gh[i] - rel_h[i])
    out = []
    for name, ms in margins.items():
        worst = float(min(ms)) if ms else math.inf
        out.append(ClaimResult(name, worst >= -CLAIM_TOL, worst, len(ms)))
    return ClaimReport(tuple(out))
