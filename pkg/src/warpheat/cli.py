"""Batch front end: ``warpheat <command> [--config PATH] [--out DIR] ...``.

Exit status: 0 success, 1 failed assumption/certification/bound,
2 numerical non-convergence, 3 I/O or configuration error.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
from pathlib import Path
from typing import Callable

import numpy as np

from . import blowdown as bd
from . import bounds
from . import curvature as cv
from . import dirichlet_spectral as ds
from . import radial_heat as rh
from . import warp_metric as wm
from .config import ConfigError, RunConfig, load_config
from .plotting import line_plot

EXIT_OK, EXIT_FAIL, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3
COMMANDS = ("params", "certify", "solve", "spectral", "blowdown", "demo-oscillation")


class CheckFailed(Exception):
    pass


def _f(x: float) -> str:
    return f"{x:.16e}"


def _write_rows(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _schedule(cfg: RunConfig) -> wm.Schedule:
    return wm.Schedule(eta1=cfg["eta1"], eta2=cfg["eta2"], eps0=cfg["eps0"], n_bands=cfg["n_bands"],
                       omega_decay=cfg["omega_decay"])


def _solver(cfg: RunConfig) -> rh.SolverConfig:
    return rh.SolverConfig(n_points=cfg["n_points"], seed_factor=cfg["seed_factor"],
                           outer_factor=cfg["outer_factor"], steps_per_decade=cfg["steps_per_decade"])


def _space(name: str) -> tuple[rh.RadialSpace, float | None, float]:
    """Space, its cone constant when it is a cone, and its dimension for bound fits."""
    if name.startswith("euclidean-"):
        n = int(name.split("-", 1)[1])
        return rh.euclidean(n), rh.unit_ball_volume(n) * (4 * math.pi) ** (-n / 2), float(n)
    if name.startswith("cone-"):
        a = float(name.split("-", 1)[1])
        if not a > 0:
            raise ConfigError("cone exponent must be positive")
        return rh.cone(a), rh.cone_constant(a), a
    if name == "surrogate":
        spec = rh.SurrogateSpec()
        return rh.surrogate_profile(spec), None, spec.alpha1
    raise ConfigError(f"profile {name!r} cannot be time-stepped; use euclidean-N, cone-ALPHA or surrogate")


# ---------------------------------------------------------------------------
# commands


def cmd_params(cfg: RunConfig, out: Path, args) -> int:
    try:
        params = wm.generate_params(_schedule(cfg))
    except wm.InfeasibleSchedule as exc:
        _write_rows(out / "assumptions.csv", ["assumption", "passed", "worst_margin", "detail"],
                    [[exc.assumption, "False", "nan", str(exc)]])
        raise CheckFailed(str(exc)) from exc
    wm.save_params(params, out / "params.txt")
    rep = wm.check_assumptions(params)
    _write_rows(out / "assumptions.csv", ["assumption", "passed", "worst_margin", "detail"],
                [[r.name, str(r.passed), _f(r.worst_margin), r.detail] for r in rep.results])
    claims = wm.verify_claims(params)
    _write_rows(out / "claims.csv", ["claim", "passed", "worst_margin", "checks"],
                [[c.name, str(c.passed), _f(c.worst_margin), c.checks] for c in claims.results])
    if not rep.passed:
        raise CheckFailed("failed: " + ", ".join(f"Assumption {r.name}" for r in rep.failures()))
    if not claims.passed:
        raise CheckFailed("jump claims failed")
    return EXIT_OK


def cmd_certify(cfg: RunConfig, out: Path, args) -> int:
    params = wm.generate_params(_schedule(cfg))
    prof = wm.assemble_c1(params)
    if cfg["window_scale"] > 0:
        prof = wm.smooth_c2(prof, wm.default_windows(prof, cfg["window_scale"]))
    slack = cfg["slack"] if args.slack is None else args.slack
    bands = cfg["bands"] or None
    rep = cv.certify_nonneg(prof, slack=slack, per_band=cfg["per_band"], bands=bands)
    rep.to_csv(out / "certification.csv")
    w = rep.worst
    print(f"certify: {'pass' if rep.passed else 'FAIL'}; worst relative margin {w.min_margin:.3e} "
          f"({w.component}, band {w.band})", file=sys.stderr)
    if not rep.passed:
        raise CheckFailed("curvature certification failed")
    return EXIT_OK


def cmd_solve(cfg: RunConfig, out: Path, args) -> int:
    space, const, _ = _space(cfg["profile"])
    times = cfg["times"]
    sc = _solver(cfg)
    fld = rh.kernel_field(space, times, sc)
    fld.to_csv(out / "field.csv", stride=cfg["field_stride"])
    curve = rh.DiagonalCurve(np.asarray(times), np.exp(space.log_vol(0.5 * np.log(times))), fld.values[:, 0])
    curve.to_csv(out / "diagonal.csv")
    refs = [(f"C = {const:.6g}", const)] if const is not None else []
    line_plot(out / "normalized.svg", [(space.name, list(np.log10(times)), list(curve.normalized))], refs,
              title=f"V(sqrt t) H(0,0,t) on {space.name}", xlabel="log10 t", ylabel="V(sqrt t) H", markers=True)
    for t, v in zip(times, curve.normalized):
        print(f"t = {t:g}: V(sqrt t) H = {v:.7g}", file=sys.stderr)
    return EXIT_OK


def cmd_spectral(cfg: RunConfig, out: Path, args) -> int:
    space, _, n = _space(cfg["profile"])
    spec = ds.eigensolve(space, cfg["radius"], cfg["modes"], cfg["grid"])
    spec.to_csv(out / "spectra.csv")
    reps = [ds.weyl_check(spec, n), ds.linf_check(spec, n), ds.gradient_bound_check(spec)]
    bounds.write_reports(out / "bounds.csv", reps)
    cmp = ds.global_compare(space, cfg["radii"], cfg["t"], _solver(cfg))
    cmp.to_csv(out / "global.csv")
    ok = all(r.passed for r in reps) and cmp.consistent
    if not ok:
        raise CheckFailed("spectral bound or decay check failed")
    return EXIT_OK


def cmd_blowdown(cfg: RunConfig, out: Path, args) -> int:
    params = wm.generate_params(_schedule(cfg))
    vol = bd.WarpVolume(wm.build_profile(params))
    r = bd.default_r_samples(cfg["samples"])
    rows = []
    for seq, target in zip(bd.example_sequences(params), (8 - 3 * params.eta1, 8 - 3 * params.eta2)):
        fit = bd.limit_exponent(vol, seq, r)
        for i, (lt, e, res) in enumerate(zip(seq.log_t, fit.exponents, fit.residuals)):
            rows.append([seq.label, i, _f(lt), _f(e), _f(target), _f(abs(e - target)), _f(res)])
    _write_rows(out / "exponents.csv", ["seq_label", "i", "log_t", "exponent", "target", "abs_dev", "fit_residual"], rows)
    h1, h2 = bd.PowerLaw(8 - 3 * params.eta1), bd.PowerLaw(8 - 3 * params.eta2)
    pairs = [("t_vs_t_tilde", h1, h2), ("t_vs_scaled_t", h1, bd.PowerLaw(h1.alpha, 2.0))]
    res = [(name, bd.consistency_check(a, b, r)) for name, a, b in pairs]
    _write_rows(out / "consistency.csv", ["pair", "consistent", "residual"],
                [[name, str(c.consistent), _f(c.residual)] for name, c in res])
    return EXIT_OK


def cmd_demo_oscillation(cfg: RunConfig, out: Path, args) -> int:
    spec = rh.SurrogateSpec(cfg["alpha1"], cfg["alpha2"], tuple(cfg["boundaries"]), cfg["blend"])
    space = rh.surrogate_profile(spec)
    seqs = bd.demo_sequences(spec, cfg["pad"])
    rep = bd.oscillation_demo(space, seqs, (spec.alpha1, spec.alpha2), _solver(cfg), threads=args.threads)
    rep.to_csv(out / "demo.csv")
    series = []
    for s in seqs:
        rows = [r for r in rep.rows if r.seq_label == s.label]
        series.append((s.label, [r.log_t / math.log(10) for r in rows], [r.normalized_diag for r in rows]))
    refs = [(f"C({spec.alpha1:g}) = {rep.targets[0]:.6g}", rep.targets[0]),
            (f"C({spec.alpha2:g}) = {rep.targets[1]:.6g}", rep.targets[1])]
    line_plot(out / "demo.svg", series, refs, title="V(sqrt t) H(0,0,t) on the surrogate",
              xlabel="log10 t", ylabel="V(sqrt t) H", markers=True)
    print(f"clusters {rep.clusters[0]:.6g} / {rep.clusters[1]:.6g}; "
          f"separation {rep.separation:.3g} vs solver error {rep.solver_error:.3g}", file=sys.stderr)
    if not rep.passed:
        raise CheckFailed("oscillation clusters do not match the cone constants")
    return EXIT_OK


HANDLERS: dict[str, Callable[[RunConfig, Path, argparse.Namespace], int]] = {
    "params": cmd_params,
    "certify": cmd_certify,
    "solve": cmd_solve,
    "spectral": cmd_spectral,
    "blowdown": cmd_blowdown,
    "demo-oscillation": cmd_demo_oscillation,
}


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="warpheat", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--out", help="output directory (default: $WARPHEAT_OUT or ./warpheat_out)")
    p.add_argument("--threads", type=int, default=1, help="worker threads for independent solves")
    p.add_argument("--slack", type=float, default=None, help="certification slack, e.g. 1e-12 (certify only)")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a config key")
    return p


def main(argv: list[str] | None = None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_IO
    try:
        if args.threads < 1:
            raise ConfigError("--threads must be at least 1")
        if args.slack is not None:
            # either sign is accepted: the tolerance is always margin >= -|slack|
            args.slack = abs(args.slack)
            if args.slack > 1e-6:
                raise ConfigError("--slack magnitude must not exceed 1e-6")
        overrides = {}
        for item in args.set:
            if "=" not in item:
                raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
            k, v = item.split("=", 1)
            overrides[k.strip()] = v
        cfg = load_config(args.command, args.config, overrides)
        out = Path(args.out or os.environ.get("WARPHEAT_OUT") or "warpheat_out")
        out.mkdir(parents=True, exist_ok=True)
        (out / "config.txt").write_text(cfg.dumps())
        return HANDLERS[args.command](cfg, out, args)
    except CheckFailed as exc:
        print(f"warpheat {args.command}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except wm.InfeasibleSchedule as exc:
        print(f"warpheat {args.command}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except ds.MonotonicityViolation as exc:
        print(f"warpheat {args.command}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (rh.NonConvergence, ds.TruncationError, FloatingPointError) as exc:
        print(f"warpheat {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, OSError) as exc:
        print(f"warpheat {args.command}: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
