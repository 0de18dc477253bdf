import csv
import math
from dataclasses import replace

import numpy as np
import pytest

from warpheat import dirichlet_spectral as ds
from warpheat import radial_heat as rh


def r_squared():
    # A = r^2, the normalisation under which sup|phi_j| = sqrt(2) j pi / R
    return rh.RadialSpace("r2", lambda r: np.asarray(r, float) ** 2, lambda r: np.asarray(r, float) ** 3 / 3, 2.0)


@pytest.fixture(scope="module")
def ball():
    return ds.eigensolve(rh.euclidean(3), 1.0, 64, 2000)


def test_ball_eigenvalues(ball):
    j = np.arange(1, 11)
    np.testing.assert_allclose(ball.eigenvalues[:10], (j * np.pi) ** 2, rtol=5e-3)


def test_ball_eigenfunction_shape(ball):
    r = ball.r[1:-1]
    for j in (1, 2, 5):
        ratio = ball.phi[j - 1, 1:-1] * r / np.sin(j * np.pi * r)
        ok = np.abs(np.sin(j * np.pi * r)) > 0.2
        assert np.ptp(ratio[ok]) / np.mean(np.abs(ratio[ok])) < 1e-2


def test_interval_modes():
    spec = ds.eigensolve(rh.interval(1.0), 1.0, 8, 2000)
    j = np.arange(1, 9)
    np.testing.assert_allclose(spec.eigenvalues, ((j - 0.5) * np.pi) ** 2, rtol=1e-4)


def test_orthonormal(ball):
    assert np.max(np.abs(ball.gram() - np.eye(ball.count))) < 1e-8


def test_positive_nondecreasing(ball):
    assert ball.eigenvalues[0] > 0
    assert np.all(np.diff(ball.eigenvalues) >= 0)


def test_kernel_symmetric(ball):
    a = ds.kernel(ball, 0.3, 0.7, 0.05).value
    b = ds.kernel(ball, 0.7, 0.3, 0.05).value
    assert a == b


def test_kernel_large_time(ball):
    t = 0.5
    val = ds.kernel(ball, 0.2, 0.4, t).value
    p1 = np.interp([0.2, 0.4], ball.r, ball.phi[0])
    lead = math.exp(-ball.eigenvalues[0] * t) * p1[0] * p1[1]
    assert abs(val / lead - 1) < math.exp(-(ball.eigenvalues[1] - ball.eigenvalues[0]) * t)


def test_kernel_against_time_stepping(ball):
    # point mass on the shell r = y, evolved with the finite-volume solver
    i = int(np.argmin(np.abs(ball.r - 0.5)))
    y = float(ball.r[i])
    op = rh.build_operator(rh.euclidean(3), ball.r, "dirichlet")
    u0 = np.zeros(op.n)
    u0[i] = 1.0 / op.w[i]
    u = rh.march(op, u0, 0.0, [0.02], rh.SolverConfig(steps_per_decade=400))[0]
    assert u[i] == pytest.approx(ds.kernel(ball, y, y, 0.02).value, rel=2e-2)


def test_expansion_matches_pole_solver():
    R = 1.0
    spec = ds.eigensolve(rh.euclidean(3), R, 256, 4000)
    for t in (0.01, 0.1, 1.0):
        prof = ds.kernel_profile(spec, 0.0, t)
        fld = rh.kernel_field(rh.euclidean(3), [t], r_grid=spec.r)
        interior = spec.r <= 0.8 * R
        err = np.max(np.abs(prof[interior] - fld.values[0][interior])) / np.max(np.abs(prof[interior]))
        assert err < 2e-2


def test_tail_bound_covers_truncation():
    full = ds.eigensolve(rh.euclidean(3), 1.0, 64, 2000)
    half = replace(full, eigenvalues=full.eigenvalues[:32], phi=full.phi[:32])
    t = 0.002
    x = 0.3
    diff = abs(ds.kernel(full, x, x, t, tol=1.0).value - ds.kernel(half, x, x, t, tol=1.0).value)
    assert diff > 0
    assert ds.tail_bound(half, t) >= diff


def test_truncation_error_raised(ball):
    short = replace(ball, eigenvalues=ball.eigenvalues[:4], phi=ball.phi[:4])
    with pytest.raises(ds.TruncationError):
        ds.kernel(short, 0.1, 0.1, 1e-4)


def test_weyl_tight_on_ball(ball):
    rep = ds.weyl_check(ball, 3)
    assert rep.passed
    assert rep.fitted_C == pytest.approx(np.pi ** 2, rel=5e-3)
    assert rep.extra["c1"] > 0


def test_cone_ball_scaling():
    a = ds.eigensolve(rh.cone(5.0), 1.0, 8, 2000)
    b = ds.eigensolve(rh.cone(5.0), 2.0, 8, 2000)
    np.testing.assert_allclose(b.eigenvalues, a.eigenvalues / 4, rtol=1e-9)


def test_linf_closed_form():
    spec = ds.eigensolve(r_squared(), 1.0, 16, 4000)
    j = np.arange(1, 6)
    np.testing.assert_allclose(spec.sup_phi()[:5], np.sqrt(2) * j * np.pi, rtol=1e-3)
    np.testing.assert_allclose(np.abs(spec.phi[:5, 0]), spec.sup_phi()[:5], rtol=1e-12)
    assert ds.linf_check(spec, 3).passed


def test_linf_grid_doubling():
    a = ds.linf_check(ds.eigensolve(rh.euclidean(3), 1.0, 32, 2000), 3).fitted_C
    b = ds.linf_check(ds.eigensolve(rh.euclidean(3), 1.0, 32, 4000), 3).fitted_C
    assert abs(a - b) / b < 0.05


def test_annulus_mass(ball):
    assert ds.annulus_mass(ball, 1, 1.0) == pytest.approx(1.0, rel=1e-12)
    exact = 0.1 + math.sin(1.8 * math.pi) / (2 * math.pi)
    assert exact == pytest.approx(0.00645, abs=5e-6)
    assert ds.annulus_mass(ball, 1, 0.1) == pytest.approx(exact, rel=1e-2)
    m = [ds.annulus_mass(ball, 3, d) for d in np.linspace(0.05, 1.0, 20)]
    assert np.all(np.diff(m) >= 0)


def test_annulus_mass_rejects_bad_input(ball):
    with pytest.raises(ValueError):
        ds.annulus_mass(ball, 0, 0.1)
    with pytest.raises(ValueError):
        ds.annulus_mass(ball, 1, 2.0)


def test_gradient_bound(ball):
    rep = ds.gradient_bound_check(ball)
    assert rep.passed and 0 < rep.fitted_C < 10
    scaled = replace(ball, phi=3.0 * ball.phi)
    assert ds.gradient_bound_check(scaled).fitted_C == pytest.approx(rep.fitted_C, rel=1e-12)


def test_gradient_grid_doubling():
    a = ds.gradient_bound_check(ds.eigensolve(rh.euclidean(3), 1.0, 16, 2000)).fitted_C
    b = ds.gradient_bound_check(ds.eigensolve(rh.euclidean(3), 1.0, 16, 4000)).fitted_C
    assert abs(a - b) / b < 0.1


def test_global_compare_decay():
    cmp = ds.global_compare(rh.euclidean(3), [4.0, 6.0, 8.0], 1.0)
    assert cmp.monotone and cmp.consistent
    # ordering holds up to roundoff; the centre gap between R = 6 and 8 is below machine precision
    tol = 1e-12 * cmp.h_global_center
    assert all(b >= a - tol for a, b in zip(cmp.h_center, cmp.h_center[1:]))
    d = [cmp.h_global_center - h for h in cmp.h_center]
    assert d[0] >= 10 * abs(d[1])
    assert abs(d[2]) < 1e-6 * cmp.h_global_center


def test_global_compare_same_radius():
    cmp = ds.global_compare(rh.euclidean(3), [5.0, 5.0], 1.0, rh.SolverConfig(n_points=2048))
    assert cmp.h_center[0] == cmp.h_center[1]
    assert cmp.sup_diff[0] == cmp.sup_diff[1]


def test_spectra_csv(ball, tmp_path):
    path = tmp_path / "s.csv"
    ball.to_csv(path)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["j", "lambda", "sup_phi", "annulus_mass_0p1R"]
    assert len(rows) == 65


def test_eigensolve_rejects_bad_input():
    with pytest.raises(ValueError):
        ds.eigensolve(rh.euclidean(3), -1.0)
    with pytest.raises(ValueError):
        ds.eigensolve(rh.interval(1.0), 2.0)
    with pytest.raises(ValueError):
        ds.eigensolve(rh.euclidean(3), 1.0, J=1000, n_points=200)
