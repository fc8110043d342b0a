"""! @brief Displacement detection of the transmitted probe. """
##
# @file Detection.py
#
# @brief The transmitted probe is displaced by D(-alpha_p) and sent to an
#        on/off detector with perfect efficiency. Without a signal photon
#        the probe returns to vacuum and never clicks. With a signal photon
#        it is flipped to about |-alpha_p> and the displaced field is
#        about |-2 alpha_p>, which stays dark with probability exp(-4|alpha_p|^2).
#
import math
import logging
from dataclasses import dataclass, asdict

import numpy as np
from scipy.linalg import expm

from Errors import DetectionError, SpaceMismatchError
from Hilbert import (PROBE, SIGNAL, DensityOperator, displacement,
        ladder_ops, partial_trace)
from Utils import config_or

logger = logging.getLogger(__name__)

IDEAL = "ideal"
FINITE_ETA = "finite-eta"
CONSISTENCY_TOLERANCE = 1e-9


@dataclass(frozen=True)
class BeamSplitterModel(object):
    """! Realisation of the displacement stage.

    'ideal' applies D(-alpha) exactly. 'finite-eta' sends the probe through a
    beam splitter of reflectivity eta, which passes a fraction sqrt(eta) of its
    amplitude and mixes in a strong field |-xi alpha>. The injected part is
    xi * sqrt(1 - eta) * alpha = alpha when xi = 1/sqrt(1 - eta).
    """
    eta: float = 1.0
    xi: float = None
    mode: str = IDEAL

    def __post_init__(self):
        if self.mode not in (IDEAL, FINITE_ETA):
            raise DetectionError("Unknown beam splitter mode '%s'" % (self.mode,))
        if not 0 < self.eta <= 1:
            raise DetectionError("Reflectivity must lie in (0, 1], got %s" % (self.eta,))
        if self.mode == FINITE_ETA:
            if self.eta >= 1:
                raise DetectionError("The finite-eta model needs eta < 1")
            xi = 1.0 / math.sqrt(1.0 - self.eta) if self.xi is None else float(self.xi)
            if abs(xi * math.sqrt(1.0 - self.eta) - 1.0) > CONSISTENCY_TOLERANCE:
                raise DetectionError("xi = %s does not satisfy xi * sqrt(1 - eta) = 1 for eta = %s" % (xi, self.eta))
            object.__setattr__(self, "xi", xi)

    @classmethod
    def ideal(cls):
        return cls()

    @classmethod
    def finite(cls, eta=None):
        """! Finite reflectivity model, eta defaults to BEAM_SPLITTER_ETA
        """
        return cls(eta=float(config_or(eta, "BEAM_SPLITTER_ETA")), mode=FINITE_ETA)


@dataclass(frozen=True)
class DetectionReport(object):
    """! Figures of merit of one probe amplitude """
    alpha_p: complex
    p_click: float
    p_err_numeric: float
    p_err_analytic: float
    signal_fidelity: float
    cascade_N: int
    cascade_p_err: float
    cascade_N_analytic: int
    lo_amplitude: complex
    p_click_vacuum: float = None
    probe_overlap: float = None
    probe_phase: float = None
    signal_occupation: float = None

    def as_dict(self):
        """! JSON friendly dictionary, complex values split into re/im
        """
        out = {}
        for key, value in asdict(self).items():
            if isinstance(value, complex):
                out[key] = {"re": value.real, "im": value.imag}
            else:
                out[key] = value
        return out


def _probe_state(rho):
    if rho.space.modes == (PROBE,):
        return rho
    if PROBE not in rho.space.modes:
        raise SpaceMismatchError("The state on %s has no probe mode" % (rho.space,))
    return partial_trace(rho, [PROBE])


def _beam_splitter(probe, model):
    """! Passes the probe through the beam splitter with a vacuum ancilla
         and traces the ancilla out
    """
    dim = probe.space.dims[0]
    a, ad = ladder_ops(dim)
    theta = math.acos(math.sqrt(model.eta))
    generator = theta * (np.kron(ad.matrix, a.matrix) - np.kron(a.matrix, ad.matrix))
    unitary = expm(generator)
    ancilla = np.zeros((dim, dim), dtype=complex)
    ancilla[0, 0] = 1.0
    joint = unitary @ np.kron(probe.matrix, ancilla) @ unitary.conj().T
    reduced = np.trace(joint.reshape(dim, dim, dim, dim), axis1=1, axis2=3)
    return DensityOperator(reduced, probe.space, probe.tail)


def displaced_state(rho_t, alpha, model=None, warn_weight=None):
    """! D(-alpha) rho D(-alpha)^dagger of the transmitted probe
    @param rho_t        Probe state, or a multi-mode state that is reduced first
    @param alpha        Local-oscillator amplitude
    @param model        BeamSplitterModel, ideal by default
    @param warn_weight  Top-two-level weight that triggers a truncation warning
    @return single-mode DensityOperator
    """
    model = model or BeamSplitterModel.ideal()
    warn_weight = config_or(warn_weight, "TRUNCATION_WARNING_WEIGHT")
    probe = _probe_state(rho_t)
    if model.mode == FINITE_ETA:
        probe = _beam_splitter(probe, model)
    d = displacement(-alpha, probe.space.dims[0]).matrix
    result = DensityOperator(d @ probe.matrix @ d.conj().T, probe.space, probe.tail)
    edge = float(np.sum(result.populations()[-2:]))
    if edge > warn_weight:
        logger.warning("Displacement by %s leaves %.3e of the weight in the top two Fock levels" % (-alpha, edge))
    return result


def p_err_analytic(alpha_p):
    """! exp(-4 |alpha_p|^2), the dark probability of |-2 alpha_p>
    """
    return math.exp(-4.0 * abs(alpha_p) ** 2)


def click_probability(rho_d):
    """! 1 - <0|rho_D|0> of a displaced probe state
    """
    return 1.0 - float(np.real(rho_d.matrix[0, 0]))


def p_err_numeric(rho_t, alpha_p, model=None, lo_amplitude=None):
    """! Probability that the detector stays dark although a signal photon passed
    @param rho_t         Full end-of-medium state of the single-photon branch
    @param alpha_p       Probe amplitude
    @param model         BeamSplitterModel
    @param lo_amplitude  Displacement amplitude, defaults to alpha_p
    """
    lo = alpha_p if lo_amplitude is None else lo_amplitude
    rho_d = displaced_state(rho_t, lo, model)
    return float(np.real(rho_d.matrix[0, 0]))


def signal_fidelity(rho):
    """! Population of |1> in the reduced signal mode
    """
    if SIGNAL not in rho.space.modes:
        raise SpaceMismatchError("The state on %s has no signal mode" % (rho.space,))
    return float(partial_trace(rho, [SIGNAL]).populations()[1])


def cascade_count(p_err, threshold=None):
    """! Smallest N with p_err^N < threshold
    @param p_err      Error probability of one unit, in (0, 1)
    @param threshold  Target error, defaults to CASCADE_THRESHOLD
    """
    threshold = float(config_or(threshold, "CASCADE_THRESHOLD"))
    if not 0 < p_err < 1:
        raise DetectionError("A cascade needs 0 < p_err < 1, got %s" % (p_err,))
    if threshold <= 0:
        raise DetectionError("The cascade threshold must be positive, got %s" % (threshold,))
    if p_err < threshold:
        return 1
    n = max(1, int(math.floor(math.log(threshold) / math.log(p_err))) + 1)
    # guard the floor against rounding either way
    while n > 1 and p_err ** (n - 1) < threshold:
        n -= 1
    while p_err ** n >= threshold:
        n += 1
    return n


def cascade_or_none(p_err, threshold=None):
    """! Cascade count, or None where no cascade is defined: p_err of 0, or
         within rounding of 1 (a probe that never flips)
    """
    if 0 < p_err < 1.0 - CONSISTENCY_TOLERANCE:
        return cascade_count(p_err, threshold)
    return None


def efficiency_ratio(report, cascade=False):
    """! F / P_err, or F^N / P_err^N for the cascade
    """
    if report.p_err_numeric <= 0:
        raise DetectionError("The efficiency ratio needs p_err > 0")
    if cascade and report.cascade_N is None:
        raise DetectionError("No cascade is defined for p_err = %s" % (report.p_err_numeric,))
    ratio = report.signal_fidelity / report.p_err_numeric
    return ratio ** report.cascade_N if cascade else ratio


def detect(rho_t, alpha_p, threshold=None, model=None, lo_amplitude=None, rho_vacuum=None):
    """! Evaluates all detection figures of merit of one probe amplitude
    @param rho_t         Full end-of-medium state of the single-photon branch
    @param alpha_p       Probe amplitude
    @param threshold     Cascade target error
    @param model         BeamSplitterModel
    @param lo_amplitude  Displacement amplitude, defaults to alpha_p
    @param rho_vacuum    Optional end-of-medium state of the vacuum branch
    @return DetectionReport
    """
    lo = alpha_p if lo_amplitude is None else lo_amplitude
    rho_d = displaced_state(rho_t, lo, model)
    p_err = float(np.real(rho_d.matrix[0, 0]))
    analytic = p_err_analytic(alpha_p)
    n = cascade_or_none(p_err, threshold)
    n_analytic = cascade_or_none(analytic, threshold)

    p_click_vacuum = None
    if rho_vacuum is not None:
        p_click_vacuum = click_probability(displaced_state(rho_vacuum, lo, model))

    report = DetectionReport(alpha_p=complex(alpha_p), p_click=click_probability(rho_d),
            p_err_numeric=p_err, p_err_analytic=analytic, signal_fidelity=signal_fidelity(rho_t),
            cascade_N=n, cascade_p_err=None if n is None else p_err ** n, cascade_N_analytic=n_analytic,
            lo_amplitude=complex(lo), p_click_vacuum=p_click_vacuum)
    logger.info("|alpha_p|^2 = %.3f: P_err %.5f (analytic %.5f), F %.5f, N %s"
            % (abs(alpha_p) ** 2, p_err, analytic, report.signal_fidelity, n))
    return report
