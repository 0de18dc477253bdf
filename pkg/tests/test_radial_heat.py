import csv
import math

import numpy as np
import pytest
from scipy import integrate
from scipy.special import gamma

from warpheat import dirichlet_spectral as ds
from warpheat import radial_heat as rh

C3 = 0.0940316
C5 = 0.0094032


# -- spaces

def test_unit_ball_volumes():
    assert rh.unit_ball_volume(2) == pytest.approx(math.pi, rel=1e-14)
    assert rh.unit_ball_volume(3) == pytest.approx(4 * math.pi / 3, rel=1e-14)
    assert rh.unit_ball_volume(8) == pytest.approx(math.pi ** 4 / 24, rel=1e-14)


@pytest.mark.parametrize("space", [rh.euclidean(3), rh.euclidean(8), rh.cone(5.0), rh.surrogate_profile()])
def test_area_volume_consistency(space):
    r = np.geomspace(1e-3, 1e3, 50)
    assert np.all(space.area(r) > 0)
    assert np.all(np.diff(space.volume(r)) > 0)
    m = space.small_r_exponent
    small = np.array([1e-8])
    assert float(space.volume(small)[0] / space.area(small)[0] * (m + 1) / small[0]) == pytest.approx(1.0, rel=1e-6)


def test_drift_values():
    assert rh.drift(rh.euclidean(3), 2.0) == pytest.approx(1.0)
    assert rh.drift(rh.euclidean(8), 2.0) == pytest.approx(3.5)
    assert rh.drift(rh.cone(5.5), 3.0) == pytest.approx(1.5)
    with pytest.raises(ValueError):
        rh.drift(rh.euclidean(3), 0.0)


def test_drift_finite_difference_fallback():
    sp = rh.euclidean(3)
    bare = rh.RadialSpace("r2", sp.area, sp.volume, 2.0)
    assert rh.drift(bare, 1.5) == pytest.approx(2 / 1.5, rel=1e-7)


# -- cone constants

@pytest.mark.parametrize("alpha", [2.5, 3, 5, 6, 6.2, 8])
def test_cone_constant_quadrature(alpha):
    assert rh.cone_constant_quad(alpha) == pytest.approx(rh.cone_constant(alpha), rel=1e-10)


def test_cone_constant_values():
    assert rh.cone_constant(3) == pytest.approx(C3, rel=1e-6)
    assert rh.cone_constant(3) == pytest.approx(1 / (3 * 4 * gamma(1.5)), rel=1e-14)
    assert rh.cone_constant(6) == pytest.approx(1 / 384, rel=1e-14)
    assert rh.cone_constant(5) == pytest.approx(C5, rel=1e-5)
    assert rh.cone_constant(5) == pytest.approx(rh.cone_constant(3) / 10, rel=1e-13)
    assert rh.cone_constant(3) == pytest.approx(rh.unit_ball_volume(3) * (4 * math.pi) ** -1.5, rel=1e-14)


def test_cone_constant_decreasing():
    a = np.linspace(5, 7, 41)
    c = [rh.cone_constant(x) for x in a]
    assert np.all(np.diff(c) < 0)


@pytest.mark.parametrize("alpha", [0.5, 3.0, 6.2])
def test_cone_kernel_normalized(alpha):
    c = rh.cone_constant(alpha)
    val, _ = integrate.quad(lambda u: c * math.exp(-u * u / 4) * alpha * u ** (alpha - 1), 0, math.inf, epsrel=1e-12)
    assert val == pytest.approx(1.0, rel=1e-9)


def test_cone_kernel_scaling():
    assert rh.cone_kernel(5.0, 0.0, 1.0) == rh.cone_constant(5.0)
    assert rh.cone_kernel(3.0, 0.0, 1.0) == pytest.approx(C3, rel=1e-6)
    lam = 1.7
    for r, t in [(0.0, 1.0), (1.3, 0.4), (4.0, 2.0)]:
        assert rh.cone_kernel(5.0, lam * r, lam ** 2 * t) == pytest.approx(lam ** -5 * rh.cone_kernel(5.0, r, t), rel=1e-13)


# -- solver

def test_solve_from_gaussian():
    sp = rh.euclidean(3)
    r = np.linspace(0.0, 12.0, 4000)
    t0 = 0.01
    init = lambda x: (4 * math.pi * t0) ** -1.5 * np.exp(-x * x / (4 * t0))  # noqa: E731
    fld = rh.solve(sp, init, [1.0 - t0], r_grid=r)
    assert fld.values[0, 0] == pytest.approx((4 * math.pi) ** -1.5, rel=1e-2)


def test_solve_zero_stays_zero():
    fld = rh.solve(rh.euclidean(3), lambda x: np.zeros_like(x), [0.5, 1.0], rh.SolverConfig(n_points=256))
    assert np.all(fld.values == 0.0)


def test_solve_first_eigenfunction():
    sp = rh.euclidean(3)
    r = np.linspace(0.0, 1.0, 2000)
    spec = ds.eigensolve(sp, 1.0, 2, r_grid=r)
    phi = spec.phi[0]
    t = 0.05
    fld = rh.solve(sp, phi, [t], r_grid=r)
    expect = math.exp(-spec.eigenvalues[0] * t) * phi
    interior = r < 0.9
    np.testing.assert_allclose(fld.values[0][interior], expect[interior], rtol=5e-3)


def test_solve_rejects_negative_data():
    with pytest.raises(ValueError):
        rh.solve(rh.euclidean(3), lambda x: -np.ones_like(x), [1.0], rh.SolverConfig(n_points=64))


def test_kernel_diag_values():
    assert rh.kernel_diag(rh.euclidean(3), 1.0) == pytest.approx((4 * math.pi) ** -1.5, rel=1e-2)
    assert rh.kernel_diag(rh.cone(5.0), 1.0) == pytest.approx(C5, rel=1e-2)
    assert rh.kernel_diag(rh.euclidean(3), 4.0) == pytest.approx((4 * math.pi) ** -1.5 / 8, rel=1e-2)


def test_normalized_diag_euclidean():
    for t in (0.5, 3.0):
        assert rh.normalized_diag(rh.euclidean(3), t) == pytest.approx(C3, rel=1e-2)


def test_normalized_diag_cone_six():
    assert rh.normalized_diag(rh.cone(6.0), 2.0) == pytest.approx(1 / 384, rel=1e-2)


def test_cone_self_similarity():
    vals = [rh.normalized_diag(rh.cone(5.0), t) for t in (1.0, 10.0, 100.0)]
    assert max(vals) / min(vals) - 1 < 1e-3


def test_multi_time_field_matches_single_runs():
    sp = rh.cone(5.0)
    times = [0.01, 1.0, 100.0]
    fld = rh.kernel_field(sp, times)
    for j, t in enumerate(times):
        v = fld.values[j, 0] * math.exp(sp.log_vol(0.5 * math.log(t)))
        assert v == pytest.approx(rh.cone_constant(5.0), rel=1e-3)


def test_positivity_and_mass():
    sp = rh.euclidean(3)
    fld = rh.kernel_field(sp, [0.25, 1.0, 4.0], rh.SolverConfig(n_points=2048))
    assert np.all(fld.values >= -1e-14 * fld.values.max())
    mass = fld.values[:, :-1] @ fld.weights
    assert np.all(np.diff(mass) <= 1e-12)
    assert np.all(mass <= 1 + 1e-9)


def test_reflecting_boundary_conserves_mass():
    sp = rh.euclidean(3)
    cfg = rh.SolverConfig(n_points=1024, boundary="neumann", outer_factor=3.0)
    r = np.linspace(0.0, 3.0, 1024)
    op = rh.build_operator(sp, r, "neumann")
    u0 = rh.seed(op, 0.01)
    out = rh.march(op, u0, 0.01, [1.0, 10.0], cfg)
    masses = [op.mass(u) for u in out]
    assert masses == pytest.approx([1.0, 1.0], rel=1e-8)


def test_grid_refinement_order():
    sp = rh.euclidean(3)
    ref = rh.normalized_diag(sp, 1.0, rh.SolverConfig(n_points=32768))
    errs = [abs(rh.normalized_diag(sp, 1.0, rh.SolverConfig(n_points=n)) - ref) for n in (512, 1024)]
    assert errs[0] / errs[1] >= 3.5


def test_seed_too_large():
    with pytest.raises(rh.SeedTooLarge):
        rh.kernel_field(rh.euclidean(3), [1.0], rh.SolverConfig(seed_factor=0.05))


def test_invalid_times():
    with pytest.raises(ValueError):
        rh.kernel_field(rh.euclidean(3), [2.0, 1.0])


def test_field_csv(tmp_path):
    fld = rh.kernel_field(rh.euclidean(3), [1.0], rh.SolverConfig(n_points=128))
    path = tmp_path / "f.csv"
    fld.to_csv(path, stride=16)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["r", "t", "u"]
    assert len(rows) == 1 + 8
    assert rows[1][0] == "0.0000000000000000e+00"


def test_diagonal_curve_csv(tmp_path):
    cur = rh.diagonal_curve(rh.euclidean(3), [0.5, 1.0], rh.SolverConfig(n_points=1024))
    path = tmp_path / "d.csv"
    cur.to_csv(path)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["t", "V_sqrt_t", "H_diag", "normalized"]
    assert float(rows[2][3]) == pytest.approx(C3, rel=1e-2)


# -- surrogate

def test_surrogate_single_band_is_cone():
    sp = rh.surrogate_profile(rh.SurrogateSpec(alpha1=6.0, alpha2=5.0, boundaries=()))
    r = np.geomspace(1e-2, 1e6, 30)
    np.testing.assert_allclose(sp.volume(r), r ** 6, rtol=1e-12)


def test_surrogate_two_bands_continuous():
    sp = rh.surrogate_profile(rh.SurrogateSpec(boundaries=(1.0,)))
    r = np.geomspace(1.0, 100.0, 2001)
    v = sp.volume(r)
    assert np.all(np.diff(v) > 0)
    assert np.max(np.abs(np.diff(np.log(v)))) < 0.02


def test_surrogate_exponent_bands():
    spec = rh.SurrogateSpec()
    sp = rh.surrogate_profile(spec)
    centers = spec.band_centers(1.0)
    assert [a for _, a in centers] == spec.exponents()
    for c, a in centers:
        x = c * math.log(10)
        slope = (sp.log_vol(x + 0.01) - sp.log_vol(x - 0.01)) / 0.02
        assert slope == pytest.approx(a, rel=1e-3)


def test_surrogate_rejects_bad_spec():
    with pytest.raises(ValueError):
        rh.surrogate_profile(rh.SurrogateSpec(boundaries=(2.0, 1.0)))
