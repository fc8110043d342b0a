import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from Detection import (IDEAL, FINITE_ETA, BeamSplitterModel, DetectionReport, displaced_state, p_err_analytic,
                       p_err_numeric, click_probability, signal_fidelity, cascade_count, efficiency_ratio, detect)
from Dynamics import initial_state
from Errors import DetectionError, SpaceMismatchError
from Hilbert import AUXILIARY, SIGNAL, ModeSpace, coherent_state, fock_state, state_fidelity, tensor

ALPHA = math.sqrt(0.6)
MAG_ALPHAS = [0.1, 0.45, ALPHA, 0.9]
PHASE_ALPHAS = [0.0, 0.7, -2.2]


def report(fidelity, p_err, n=None):
    return DetectionReport(alpha_p=1.0, p_click=1 - p_err, p_err_numeric=p_err, p_err_analytic=p_err,
                           signal_fidelity=fidelity, cascade_N=n, cascade_p_err=None if n is None else p_err ** n,
                           cascade_N_analytic=n, lo_amplitude=1.0)


@pytest.mark.parametrize("mag", MAG_ALPHAS)
@pytest.mark.parametrize("phase", PHASE_ALPHAS)
def test_displacing_coherent_state_gives_vacuum(mag, phase):
    alpha = mag * np.exp(1j * phase)
    rho_d = displaced_state(coherent_state(alpha, 16).to_density(), alpha)
    assert rho_d.matrix[0, 0].real > 1 - 1e-8
    assert rho_d.trace() == pytest.approx(1.0, abs=1e-9)


def test_flipped_state_goes_to_twice_the_amplitude():
    rho_d = displaced_state(coherent_state(-ALPHA, 24).to_density(), ALPHA)
    assert state_fidelity(rho_d, coherent_state(-2 * ALPHA, 24)) > 1 - 1e-8


def test_vacuum_goes_to_negative_amplitude():
    rho_d = displaced_state(fock_state(0, 16).to_density(), ALPHA)
    assert state_fidelity(rho_d, coherent_state(-ALPHA, 16)) > 1 - 1e-9


def test_full_state_is_reduced_to_the_probe():
    rho = initial_state(ALPHA, 1)
    assert displaced_state(rho, ALPHA).space == ModeSpace.single(16)


def test_truncation_warning(caplog):
    with caplog.at_level("WARNING"):
        displaced_state(fock_state(0, 8).to_density(), 2.0)
    assert "top two Fock levels" in caplog.text


@pytest.mark.parametrize("alpha2, expected", [(0.6, 0.0907), (0.0, 1.0), (0.2, 0.449)])
def test_p_err_analytic(alpha2, expected):
    assert p_err_analytic(math.sqrt(alpha2)) == pytest.approx(expected, abs=5e-4)


@given(st.floats(min_value=0, max_value=3), st.floats(min_value=0, max_value=3))
def test_p_err_analytic_is_decreasing(a, b):
    lo, hi = sorted((a, b))
    assert p_err_analytic(lo) >= p_err_analytic(hi)


def test_perfect_flip_matches_analytic():
    rho = coherent_state(-ALPHA, 24).to_density()
    assert p_err_numeric(rho, ALPHA) == pytest.approx(p_err_analytic(ALPHA), abs=1e-9)


def test_click_probability_complements_vacuum_weight():
    rho_d = displaced_state(coherent_state(0.3j, 16).to_density(), 0.5)
    assert click_probability(rho_d) + rho_d.matrix[0, 0].real == pytest.approx(1.0, abs=1e-15)


def test_signal_fidelity_of_vacuum_signal():
    assert signal_fidelity(initial_state(ALPHA, 0)) == 0.0
    assert signal_fidelity(initial_state(ALPHA, 1)) == pytest.approx(1.0)
    with pytest.raises(SpaceMismatchError):
        signal_fidelity(coherent_state(0.1, 4).to_density())


@pytest.mark.parametrize("p_err, threshold, expected", [
    (math.exp(-0.8), 0.05, 4),
    (0.09, 0.05, 2),
    (0.4, 0.5, 1),
    (0.5, 0.5, 2),
])
def test_cascade_count(p_err, threshold, expected):
    assert cascade_count(p_err, threshold) == expected


@given(st.floats(min_value=1e-6, max_value=0.999), st.floats(min_value=1e-4, max_value=0.9))
def test_cascade_count_is_minimal(p_err, threshold):
    n = cascade_count(p_err, threshold)
    assert p_err ** n < threshold
    assert n == 1 or p_err ** (n - 1) >= threshold


@given(st.floats(min_value=1e-6, max_value=0.999), st.floats(min_value=1e-6, max_value=0.999))
def test_cascade_count_is_monotone(a, b):
    lo, hi = sorted((a, b))
    assert cascade_count(lo, 0.05) <= cascade_count(hi, 0.05)


@pytest.mark.parametrize("p_err", [0.0, 1.0, 1.5])
def test_cascade_needs_open_interval(p_err):
    with pytest.raises(DetectionError):
        cascade_count(p_err, 0.05)


def test_efficiency_ratio():
    assert efficiency_ratio(report(1.0, 1.0)) == 1.0
    assert efficiency_ratio(report(0.9, 0.3, 3), cascade=True) == pytest.approx(27.0)
    with pytest.raises(DetectionError):
        efficiency_ratio(report(0.9, 0.0))
    with pytest.raises(DetectionError):
        efficiency_ratio(report(0.9, 0.5), cascade=True)


def test_report_serialises_complex_values():
    out = report(0.9, 0.1, 2).as_dict()
    assert out["alpha_p"] == {"re": 1.0, "im": 0.0}
    assert out["cascade_N"] == 2


def test_beam_splitter_model_validation():
    model = BeamSplitterModel.finite(0.99)
    assert model.mode == FINITE_ETA
    assert model.xi == pytest.approx(10.0)
    assert BeamSplitterModel.ideal().mode == IDEAL
    with pytest.raises(DetectionError):
        BeamSplitterModel(eta=0.99, xi=3.0, mode=FINITE_ETA)
    with pytest.raises(DetectionError):
        BeamSplitterModel(eta=1.0, mode=FINITE_ETA)
    with pytest.raises(DetectionError):
        BeamSplitterModel(eta=0.0)
    with pytest.raises(DetectionError):
        BeamSplitterModel(mode="homodyne")


@pytest.mark.parametrize("eta", [0.9, 0.99])
def test_finite_reflectivity_attenuates_the_probe(eta):
    rho_d = displaced_state(coherent_state(ALPHA, 16).to_density(), ALPHA, BeamSplitterModel.finite(eta))
    residual = ALPHA * (math.sqrt(eta) - 1.0)
    assert rho_d.matrix[0, 0].real == pytest.approx(math.exp(-residual ** 2), abs=1e-9)


def test_vacuum_branch_never_clicks(pipeline):
    rep, _, _ = pipeline(0.6)
    assert rep.p_click_vacuum < 1e-8


def test_operating_point(pipeline):
    rep, _, _ = pipeline(0.6)
    assert rep.signal_fidelity == pytest.approx(0.90, abs=0.03)
    assert rep.p_err_numeric == pytest.approx(0.09, abs=0.02)
    assert efficiency_ratio(rep) == pytest.approx(10.0, abs=2.0)
    assert rep.cascade_N == 2
    assert rep.p_click == pytest.approx(1.0 - rep.p_err_numeric, abs=1e-12)


def test_fidelity_drops_at_stronger_probe(pipeline):
    rep, _, _ = pipeline(0.8)
    assert rep.signal_fidelity == pytest.approx(0.84, abs=0.03)


@pytest.mark.parametrize("alpha2", [0.1, 0.2, 0.3])
def test_weak_probe_error_follows_analytic_law(pipeline, alpha2):
    rep, _, _ = pipeline(alpha2)
    assert abs(rep.p_err_numeric - rep.p_err_analytic) < 0.03


def test_four_unit_cascade(pipeline):
    rep, _, _ = pipeline(0.2)
    assert rep.cascade_N == 4
    assert rep.cascade_N_analytic == 4
    assert 0.02 <= rep.cascade_p_err <= 0.05
    assert efficiency_ratio(rep, cascade=True) > 27


def test_detect_without_vacuum_branch():
    flipped = tensor(coherent_state(-ALPHA, 16), fock_state(0, 2, AUXILIARY), fock_state(1, 2, SIGNAL))
    rep = detect(flipped.to_density(), ALPHA, threshold=0.05)
    assert rep.signal_fidelity == pytest.approx(1.0)
    assert rep.p_err_numeric == pytest.approx(p_err_analytic(ALPHA), abs=1e-7)
    assert rep.p_click_vacuum is None
    assert rep.cascade_N == 2
