import math
from dataclasses import replace

import pytest
import scipy.constants as sc
from hypothesis import given, settings
from hypothesis import strategies as st

from dotgate.environment import delta_from_energy
from dotgate.measurement import (DETECTOR_PRESETS, DetectorParameters, ReadoutReport, current_shift,
                                 damping_regime, measurement_time, readout_report, threshold_shift)

GUO = DETECTOR_PRESETS["guo"]
E = sc.e


def direct_rate(i_d, di):
    """Inverse measurement time as a difference of square roots, without the cancellation-free rewrite."""
    return (math.sqrt((i_d + di) / E) - math.sqrt(i_d / E)) ** 2


def test_threshold_shift():
    det = DetectorParameters(1.8e-9, 0.0, 7.0, 4.0, 400.0)
    # e / eps0 = 1.809e-8 V m
    assert threshold_shift(det) == pytest.approx(0.0791662, rel=1e-5)
    assert threshold_shift(replace(det, inter_dot_distance=14.0)) == pytest.approx(2 * threshold_shift(det))


def test_current_shift():
    assert current_shift(GUO, 0.030) == pytest.approx(-5.4e-11, rel=1e-12)
    assert current_shift(GUO, 0.0) == 0.0


def test_measurement_time_values():
    assert measurement_time(0.0, 5.4e-11) == pytest.approx(E / 5.4e-11, rel=1e-12)
    assert measurement_time(0.0, 5.4e-11) == pytest.approx(2.967e-9, rel=1e-3)
    tau = measurement_time(7.7e-9, 5.4e-11)
    assert tau == pytest.approx(1.698214e-6, rel=1e-6)
    assert abs(tau / 1.7e-6 - 1.0) < 0.05
    assert measurement_time(7.7e-9, -5.4e-11) == tau
    assert measurement_time(1e-9, 0.0) == math.inf
    with pytest.raises(ValueError):
        measurement_time(-1e-9, 1e-11)


def test_asymptotic_limits():
    di = 5.4e-11
    assert measurement_time(1e-15, di) == pytest.approx(E / di, rel=0.01)
    i_d = 1e-5
    assert measurement_time(i_d, di) == pytest.approx(4 * E * i_d / di**2, rel=0.01)


@settings(max_examples=200, deadline=None)
@given(i_d=st.floats(0.0, 1e-6), di=st.floats(1e-14, 1e-8))
def test_rewrite_matches_direct_form(i_d, di):
    assert 1.0 / measurement_time(i_d, di) == pytest.approx(direct_rate(i_d, di), rel=1e-6)


@settings(max_examples=200, deadline=None)
@given(i_d=st.floats(1e-12, 1e-6), di=st.floats(1e-13, 1e-9), k=st.floats(1.01, 10.0))
def test_monotonicity(i_d, di, k):
    assert measurement_time(i_d, k * di) < measurement_time(i_d, di)
    assert measurement_time(k * i_d, di) > measurement_time(i_d, di)


def test_damping_regimes():
    delta = delta_from_energy(1e-5)
    assert damping_regime(1.7e-6, delta) == ("weak_damping", None)
    regime, tz = damping_regime(1.0 / (100 * delta), delta)
    assert regime == "strong_damping"
    assert tz == pytest.approx(12.5 / delta)
    assert damping_regime(1.0, 1e30)[0] == "weak_damping"
    with pytest.warns(UserWarning):
        assert damping_regime(1.0, 1.0) == ("weak_damping", None)
    with pytest.raises(ValueError):
        damping_regime(0.0, 1.0)


def test_zeno_time_exceeds_measurement_time_in_strong_damping():
    # the Zeno expression (1/tau_ms)/(8 Delta^2) grows past tau_ms whenever 1/tau_ms > Delta
    delta = 1e9
    for ratio in (1.5, 10.0, 1e3):
        tau = 1.0 / (ratio * delta)
        _, tz = damping_regime(tau, delta)
        assert tz == pytest.approx(ratio**2 * tau / 8.0)


@settings(max_examples=100, deadline=None)
@given(tau=st.floats(1e-12, 1e-3), delta=st.floats(1e3, 1e14), scale=st.floats(1e-3, 1e3))
def test_regime_is_scale_invariant(tau, delta, scale):
    if math.isclose(1.0 / tau, delta, rel_tol=1e-9):
        return
    assert damping_regime(tau * scale, delta / scale)[0] == damping_regime(tau, delta)[0]


def test_detector_validation():
    with pytest.raises(ValueError):
        DetectorParameters(0.0, 1e-9, 7.0, 4.0, 400.0)
    with pytest.raises(ValueError):
        DetectorParameters(1e-9, -1e-9, 7.0, 4.0, 400.0)


def test_readout_report():
    rep = readout_report(GUO, delta_from_energy(1e-5))
    assert rep.delta_vth == 0.030
    assert abs(rep.delta_id) == pytest.approx(5.4e-11, rel=1e-12)
    assert rep.regime == "weak_damping" and rep.tau_zeno is None
    assert ReadoutReport.from_dict(rep.to_dict()) == rep
    est = readout_report(DETECTOR_PRESETS["geometry"], 1.0)
    assert est.delta_vth == pytest.approx(threshold_shift(DETECTOR_PRESETS["geometry"]))
