import csv
import math

import numpy as np
import pytest
from scipy.special import erfc

from warpheat import bounds
from warpheat import radial_heat as rh

C3 = 0.0940316


def exact_samples(n: int, times=(0.5, 1.0, 4.0), k: int = 60) -> bounds.KernelSamples:
    rs, ts = [], []
    for t in times:
        r = np.linspace(0.0, 3.0 * math.sqrt(t), k)
        rs.append(r)
        ts.append(np.full(k, t))
    r, t = np.concatenate(rs), np.concatenate(ts)
    return bounds.KernelSamples(r, t, (4 * math.pi * t) ** (-n / 2) * np.exp(-r * r / (4 * t)))


@pytest.fixture(scope="module")
def r3_field():
    return rh.kernel_field(rh.euclidean(3), [0.5, 1.0, 2.0], rh.SolverConfig(n_points=4096))


def test_exact_kernel_gaussian_constant():
    rep = bounds.gaussian_upper_check(exact_samples(3), rh.euclidean(3))
    assert rep.passed
    assert rep.fitted_C == pytest.approx(C3, rel=1e-6)


def test_exact_kernel_li_yau_product():
    rep = bounds.li_yau_check(exact_samples(3), rh.euclidean(3))
    assert rep.passed
    assert rep.fitted_C == pytest.approx(C3, rel=1e-6)
    assert rep.fitted_C * rep.extra["C_lower"] == pytest.approx(1.0, rel=1e-12)


def test_on_diagonal_only():
    s = exact_samples(3)
    on = np.nonzero(s.r == 0)[0]
    d = bounds.KernelSamples(s.r[on], s.t[on], s.h[on])
    rep = bounds.li_yau_check(d, rh.euclidean(3))
    assert rep.fitted_C * rep.extra["C_lower"] >= 1.0 - 1e-12


def test_volume_callable_matches_space():
    s = exact_samples(4)
    a = bounds.gaussian_upper_check(s, rh.euclidean(4))
    b = bounds.gaussian_upper_check(s, lambda r: rh.unit_ball_volume(4) * r ** 4)
    assert a.fitted_C == pytest.approx(b.fitted_C, rel=1e-12)


@pytest.mark.parametrize("alpha", [5.0, 6.0])
def test_cone_kernels_pass(alpha):
    s = exact_samples(3)
    h = np.array([rh.cone_kernel(alpha, r, t) for r, t in zip(s.r, s.t)])
    s = bounds.KernelSamples(s.r, s.t, h)
    g = bounds.gaussian_upper_check(s, rh.cone(alpha))
    ly = bounds.li_yau_check(s, rh.cone(alpha))
    assert g.passed and ly.passed
    assert g.fitted_C == pytest.approx(rh.cone_constant(alpha), rel=1e-12)


def test_perturbed_far_sample_inflates_constant():
    s = exact_samples(3)
    i = int(np.argmax(s.r))
    r, t = s.r[i], s.t[i]
    rep = bounds.gaussian_upper_check(s.with_value(i, 2 * s.h[i]), rh.euclidean(3))
    expect = rh.cone_constant(3.0) * 2 * math.exp(r * r * (1 / 5 - 1 / 4) / t)
    assert expect > C3
    assert rep.fitted_C == pytest.approx(expect, rel=1e-10)


def test_vanishing_sample_sets_infinite_lower_constant():
    s = exact_samples(3).with_value(5, 0.0)
    rep = bounds.li_yau_check(s, rh.euclidean(3))
    assert rep.extra["C_lower"] == math.inf and not rep.passed
    assert bounds.gaussian_upper_check(s, rh.euclidean(3)).passed


def test_li_yau_eps_range():
    with pytest.raises(ValueError):
        bounds.li_yau_check(exact_samples(3), rh.euclidean(3), eps=2.5)


def test_sample_shapes_checked():
    with pytest.raises(ValueError):
        bounds.KernelSamples(np.zeros(3), np.zeros(3), np.zeros(2))


def test_solver_field_bounds(r3_field):
    s = bounds.samples_from_field(r3_field)
    assert np.all(s.r <= 3 * np.sqrt(s.t) + 1e-12)
    rep = bounds.li_yau_check(s, rh.euclidean(3))
    assert rep.passed
    on = s.r == 0
    vh = rh.unit_ball_volume(3) * s.t[on] ** 1.5 * s.h[on]
    assert np.all(vh <= rep.fitted_C * (1 + 1e-12))
    assert np.all(vh >= (1 - 1e-12) / rep.extra["C_lower"])


def test_samples_radius_cap(r3_field):
    s = bounds.samples_from_field(r3_field, r_cap=1.0, stride=2)
    assert s.r.max() <= 1.0


def test_tail_mass_basic(r3_field):
    sp = rh.euclidean(3)
    assert bounds.tail_mass(r3_field, sp, 0.0) <= 1.0 + 1e-9
    tails = [bounds.tail_mass(r3_field, sp, R) for R in (0.5, 1.0, 2.0, 4.0, 8.0)]
    assert np.all(np.diff(tails) < 0)
    ratios = np.array(tails[1:]) / np.array(tails[:-1])
    assert np.all(np.diff(ratios) < 0)


def test_tail_mass_matches_closed_form(r3_field):
    # mass of the unit-time kernel outside radius R in three dimensions
    R = 6.0
    expect = erfc(R / 2) + R / math.sqrt(math.pi) * math.exp(-R * R / 4)
    got = bounds.tail_mass(r3_field, rh.euclidean(3), R, t_index=1)
    assert got == pytest.approx(expect, rel=1e-3)
    assert expect == pytest.approx(4.40e-4, rel=1e-2)


def test_tail_mass_beyond_grid(r3_field):
    with pytest.raises(ValueError):
        bounds.tail_mass(r3_field, rh.euclidean(3), 1e6)


def test_stability():
    assert bounds.stability(1.0, 1.0) == 0.0
    assert bounds.stability(1.0, 1.1) == pytest.approx(0.1 / 1.1)


def test_reports_csv(tmp_path):
    reps = [bounds.gaussian_upper_check(exact_samples(3), rh.euclidean(3)),
            bounds.li_yau_check(exact_samples(3), rh.euclidean(3))]
    path = tmp_path / "b.csv"
    bounds.write_reports(path, reps)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["bound", "fitted_C", "worst_margin", "samples"]
    assert [r[0] for r in rows[1:]] == ["gaussian_upper", "li_yau"]
    assert len(rows[1][1].split("e")[0].replace(".", "").lstrip("-")) == 17
