import csv
import math
from dataclasses import replace

import numpy as np
import pytest

from warpheat import curvature as cv
from warpheat import warp_metric as wm


def test_fiber_round_sphere():
    assert cv.ricci_fiber(1.0, 1.0) == (6.0, 6.0)


@pytest.mark.parametrize("f", [0.3, 1.0, 2.5])
def test_fiber_equal_radii(f):
    a, b = cv.ricci_fiber(f, f)
    assert a == pytest.approx(6 / f ** 2, rel=1e-14)
    assert b == pytest.approx(6 / f ** 2, rel=1e-14)


def test_fiber_squashed():
    assert cv.ricci_fiber(1.0, 2.0) == pytest.approx((2 + 4 / 16, 6 * 7 / 16), rel=1e-15)


def test_fiber_rejects_nonpositive():
    with pytest.raises(ValueError):
        cv.ricci_fiber(0.0, 1.0)


def test_flat_space():
    prof = cv.flat_profile()
    for x in (-3.0, 0.0, 2.0, 40.0):
        s = cv.ricci_at(prof, x)
        assert max(abs(s.rc_k1), abs(s.rc_k2), abs(s.rc_rad)) <= 1e-12


def test_round_sphere_equator():
    s = cv.ricci_at(cv.sphere_profile(), math.log(math.pi / 2))
    assert (s.rc_k1, s.rc_k2, s.rc_rad) == pytest.approx((7.0, 7.0, 7.0), rel=1e-12)


def test_round_sphere_everywhere():
    prof = cv.sphere_profile()
    for r in (0.2, 1.0, 2.0, 3.0):
        s = cv.ricci_at(prof, math.log(r))
        assert (s.rc_k1, s.rc_k2, s.rc_rad) == pytest.approx((7.0, 7.0, 7.0), rel=1e-9)


def test_scale_covariance():
    c = 2.0
    base = cv.sphere_profile()

    def scaled(r):
        return (c * math.sin(r / c), math.cos(r / c), -math.sin(r / c) / c)

    prof = cv.FunctionProfile(scaled, scaled, r_max=c * math.pi * (1 - 1e-12))
    for r in (0.3, 1.1, 2.7):
        a = cv.ricci_at(base, math.log(r))
        b = cv.ricci_at(prof, math.log(c * r))
        for name in cv.COMPONENTS:
            assert b.component(name) == pytest.approx(a.component(name) / c ** 2, rel=1e-10)


def test_first_band_midpoint_positive(profile):
    x = 0.5 * (profile.joint_log(0) + profile.joint_log(1))
    smp = cv.ricci_at(profile, x)
    # the physical value underflows at r = exp(9500); sign lives in the margin
    assert smp.margins[0] > 0 and smp.scaled[0] > 0
    assert smp.rc_k1 >= 0


def test_first_band_lower_bound(params):
    # sample-wise check of the closed-form lower bound on the power-law profiles
    bar = cv.BarProfile(params)
    L = params.log_b
    for x in np.linspace(L[0], min(L[1], 500.0), 200)[1:]:
        scaled = cv.ricci_joint(bar, 0, float(x)).scaled[0]
        bound = cv.band0_lower_bound(params, float(x))
        assert scaled >= bound - 1e-12 * max(1.0, abs(bound))


def test_derivative_consistency(profile):
    rng = np.random.default_rng(7)
    h = 1e-4
    checked = 0
    while checked < 100:
        # offsets stay near a joint so that s + h is representable
        j = int(rng.integers(0, profile.n_bands))
        s = float(rng.uniform(-40.0, 40.0))
        w = profile.window_at(j)
        if j == 0 and s < -0.5 * profile.segment_length(-1) or abs(s) < 3 * w.half_width:
            continue
        for which in ("f", "h"):
            lp, dp, _ = profile.eval_local(which, j, s + h)
            lm, dm, _ = profile.eval_local(which, j, s - h)
            l0, d0, s0 = profile.eval_local(which, j, s)
            # log F = lq + s, so d(log F)/ds = D
            d_fd = (lp - lm) / (2 * h) + 1.0
            # dD/ds = D + S - D^2
            s_fd = (dp - dm) / (2 * h) - d0 + d0 * d0
            assert d_fd == pytest.approx(d0, rel=1e-6, abs=1e-9)
            assert s_fd == pytest.approx(s0, rel=1e-6, abs=1e-9)
        checked += 1


def test_certify_flat_exact_zero():
    rep = cv.certify_nonneg(cv.flat_profile(), cv.function_plan(-2.0, 5.0, 256))
    assert rep.passed
    assert all(m.min_value == 0.0 for m in rep.minima)


def test_certify_requires_plan_for_functions():
    with pytest.raises(ValueError):
        cv.certify_nonneg(cv.flat_profile())


def test_certify_first_three_bands(profile):
    rep = cv.certify_nonneg(profile, per_band=4096, bands=3)
    assert rep.passed, rep.worst
    assert {m.band for m in rep.minima} == {-2, -1, 0, 1, 2}


def test_certify_detects_small_eta1(params):
    prof = wm.assemble_c1(replace(params, eta1=1e-5))
    rep = cv.certify_nonneg(prof, per_band=512, bands=2)
    assert not rep.passed
    assert rep.worst.min_value < 0


def test_slack_is_relative_margin(profile):
    rep = cv.certify_nonneg(profile, per_band=64, bands=1, slack=1e-12)
    assert rep.passed and rep.slack == 1e-12


def test_plan_density_in_windows(profile):
    plan = cv.sample_plan(profile, per_band=16, bands=2, window_factor=10)
    in_windows = [p for p in plan if p.joint in (0, 1) and abs(p.offset) <= 1.5 * profile.window_at(p.joint).half_width]
    assert len(in_windows) >= 2 * 160


def test_report_csv(profile, tmp_path):
    rep = cv.certify_nonneg(profile, per_band=32, bands=1)
    path = tmp_path / "cert.csv"
    rep.to_csv(path)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["band_index", "component", "min_value", "argmin_log_r", "samples"]
    assert len(rows) == 1 + len(rep.minima)
    assert "e" in rows[1][2]


def test_far_bands_finite(profile):
    # r far beyond double range: physical values and margins stay finite
    s = cv.ricci_joint(profile, profile.n_bands - 1, 0.3 * profile.segment_length(profile.n_bands - 1))
    assert all(math.isfinite(v) for v in (s.rc_k1, s.rc_k2, s.rc_rad))
    assert all(-1.0 <= m <= 1.0 for m in s.margins)
