"""! @brief Three-wave-mixing Hamiltonian and the spatial master equation. """
##
# @file Dynamics.py
#
# @brief This module builds the pumped three-wave-mixing interaction
#        H = (g/2) a_a a_p^dag a_s^dag + (g^*/2) a_a^dag a_p a_s
#        and propagates the three-mode density operator along z with
#        d rho/dz = -i[H, rho] + sum_j (gamma_j/2)(2 a_j rho a_j^dag - {a_j^dag a_j, rho}).
#
#        Units are dimensionless: with g = 1, z is the accumulated
#        interaction phase and z = 2*pi is one full Rabi-like cycle.
#
import math
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from Errors import SpaceMismatchError, StiffnessError, InvalidDimensionError
from Hilbert import (PROBE, AUXILIARY, SIGNAL, ModeSpace, Operator, DensityOperator,
        mode_ops, coherent_state, fock_state, tensor, partial_trace, state_fidelity)
from Statistics import StepStatistics, getStatistics
from Utils import config_or

logger = logging.getLogger(__name__)

CYCLE = 2.0 * math.pi


@dataclass(frozen=True)
class InteractionParams(object):
    """! Coupling strength g, loss rates (gamma_a, gamma_p, gamma_s) per unit
         length and the truncated space the interaction acts on.
    """
    g: complex = 1.0
    gammas: tuple = (0.0, 0.0, 0.0)
    space: ModeSpace = field(default_factory=ModeSpace.standard)

    def __post_init__(self):
        gammas = tuple(float(x) for x in self.gammas)
        if len(gammas) != 3:
            raise InvalidDimensionError("Expected three loss rates (gamma_a, gamma_p, gamma_s), got %s" % (gammas,))
        if any(x < 0 for x in gammas):
            raise InvalidDimensionError("Loss rates must be nonnegative, got %s" % (gammas,))
        if self.space.modes != (PROBE, AUXILIARY, SIGNAL):
            raise SpaceMismatchError("The interaction needs the full three-mode space, got %s" % (self.space,))
        object.__setattr__(self, "gammas", gammas)
        object.__setattr__(self, "g", complex(self.g))

    def gamma(self, mode):
        """! Loss rate of PROBE, AUXILIARY or SIGNAL
        """
        gamma_a, gamma_p, gamma_s = self.gammas
        return {PROBE: gamma_p, AUXILIARY: gamma_a, SIGNAL: gamma_s}[mode]


@dataclass(frozen=True)
class ObservableRecord(object):
    """! Expectation values of one sample along z """
    z: float
    n_probe: float
    n_aux: float
    n_signal: float
    a_probe: complex
    purity: float
    trace: float

    HEADER = ("z", "n_probe", "n_aux", "n_signal", "re_a_probe", "im_a_probe", "purity", "trace")

    def as_row(self):
        return (self.z, self.n_probe, self.n_aux, self.n_signal,
                self.a_probe.real, self.a_probe.imag, self.purity, self.trace)

    def vector(self):
        """! Real vector used to compare two runs
        """
        return np.array(self.as_row()[1:7])


@dataclass(frozen=True, eq=False)
class PropagationResult(object):
    """! Sampled states, their observables and the step-size audit """
    samples: list
    observables: list
    step_stats: StepStatistics

    @property
    def final(self):
        return self.samples[-1][1]

    def at(self, z):
        """! Sampled state closest to z
        """
        idx = int(np.argmin([abs(s[0] - z) for s in self.samples]))
        return self.samples[idx][1]


def build_hamiltonian(params):
    """! Interaction Hamiltonian on params.space
    @param params  InteractionParams
    @return hermitian Operator
    """
    space = params.space
    a_p, ad_p, _ = mode_ops(space, PROBE)
    a_a, ad_a, _ = mode_ops(space, AUXILIARY)
    a_s, ad_s, _ = mode_ops(space, SIGNAL)
    forward = a_a.matrix @ ad_p.matrix @ ad_s.matrix
    backward = ad_a.matrix @ a_p.matrix @ a_s.matrix
    h = 0.5 * params.g * forward + 0.5 * np.conj(params.g) * backward
    return Operator(h, space, hermitian=True)


class LindbladGenerator(object):
    """! Precomputed right-hand side of the master equation.

    Uses H_eff = H - (i/2) sum_j gamma_j a_j^dag a_j, so that
    L(rho) = -i(H_eff rho - rho H_eff^dag) + sum_j gamma_j a_j rho a_j^dag.
    The operators are stored as CSR matrices; right products are
    evaluated as (B^T rho^T)^T so every product is sparse times dense.
    """

    def __init__(self, params):
        self.params = params
        self.space = params.space
        self.hamiltonian = build_hamiltonian(params)
        heff = self.hamiltonian.matrix.copy()
        self._jumps = []
        for mode in (PROBE, AUXILIARY, SIGNAL):
            gamma = params.gamma(mode)
            if gamma == 0:
                continue
            a, ad, n = mode_ops(self.space, mode)
            heff = heff - 0.5j * gamma * n.matrix
            self._jumps.append((gamma, sparse.csr_matrix(a.matrix), sparse.csr_matrix(ad.matrix.T)))
        self._heff = sparse.csr_matrix(heff)
        # (H_eff^dag)^T
        self._heff_conj = sparse.csr_matrix(heff.conj())
        self.evaluations = 0

    def __call__(self, rho):
        self.evaluations += 1
        out = -1j * (self._heff @ rho - (self._heff_conj @ rho.T).T)
        for gamma, a, ad_t in self._jumps:
            out += gamma * (ad_t @ (a @ rho).T).T
        return out

    def rk4_step(self, rho, h):
        k1 = self(rho)
        k2 = self(rho + 0.5 * h * k1)
        k3 = self(rho + 0.5 * h * k2)
        k4 = self(rho + h * k3)
        return rho + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def lindblad_rhs(rho, params):
    """! d rho / dz of the master equation
    @param rho     DensityOperator on params.space
    @param params  InteractionParams
    @return The derivative, wrapped as DensityOperator
    """
    if rho.space != params.space:
        raise SpaceMismatchError("State on %s does not match interaction space %s" % (rho.space, params.space))
    return DensityOperator(LindbladGenerator(params)(rho.matrix), rho.space)


class _ObservableSet(object):
    def __init__(self, space):
        self._n = [mode_ops(space, m)[2].matrix.T.copy() for m in (PROBE, AUXILIARY, SIGNAL)]
        self._a_p = mode_ops(space, PROBE)[0].matrix.T.copy()

    def record(self, z, rho):
        n_p, n_a, n_s = (float(np.real(np.sum(rho * n))) for n in self._n)
        return ObservableRecord(z=float(z), n_probe=n_p, n_aux=n_a, n_signal=n_s,
                a_probe=complex(np.sum(rho * self._a_p)),
                purity=float(np.real(np.vdot(rho.conj().T, rho))),
                trace=float(np.real(np.trace(rho))))


def _integrate(generator, rho0, points, h_max):
    """! Fixed-step RK4 through the sample points; each segment is split
         into equal steps no longer than h_max
    """
    rho = np.array(rho0, dtype=complex)
    states = [rho.copy()]
    steps = 0
    for z0, z1 in zip(points[:-1], points[1:]):
        n = max(1, int(math.ceil((z1 - z0) / h_max - 1e-9)))
        h = (z1 - z0) / n
        for _ in range(n):
            rho = generator.rk4_step(rho, h)
        steps += n
        states.append(rho.copy())
    return states, steps


def _max_difference(obs_a, obs_b):
    return max(float(np.max(np.abs(a.vector() - b.vector()))) for a, b in zip(obs_a, obs_b))


def propagate(rho0, params, z_end, sample_points=None, steps_per_cycle=None, audit=None, audit_tol=None):
    """! Integrates the master equation from z = 0 to z_end

    The step is 2*pi / steps_per_cycle (scaled by the fastest rate). With the
    audit enabled the run is repeated with twice the step; while the two
    runs disagree by more than audit_tol the step is halved again.

    @param rho0             Initial DensityOperator on params.space
    @param params           InteractionParams
    @param z_end            Propagation length, >= 0
    @param sample_points    z values to sample, within [0, z_end]
    @param steps_per_cycle  Defaults to STEPS_PER_CYCLE
    @param audit            Defaults to STEP_AUDIT
    @param audit_tol        Defaults to STEP_AUDIT_TOLERANCE
    @return PropagationResult
    """
    if rho0.space != params.space:
        raise SpaceMismatchError("Initial state on %s does not match interaction space %s" % (rho0.space, params.space))
    if z_end < 0:
        raise InvalidDimensionError("z_end must be nonnegative, got %s" % (z_end,))
    steps_per_cycle = int(config_or(steps_per_cycle, "STEPS_PER_CYCLE"))
    audit = config_or(audit, "STEP_AUDIT")
    audit_tol = config_or(audit_tol, "STEP_AUDIT_TOLERANCE")

    requested = [float(z) for z in (sample_points if sample_points is not None else [])]
    for z in requested:
        if z < 0 or z > z_end:
            raise InvalidDimensionError("Sample point %s outside [0, %s]" % (z, z_end))
    points = sorted(set([0.0, float(z_end)] + requested))

    generator = LindbladGenerator(params)
    observables = _ObservableSet(params.space)
    stats = StepStatistics()

    rate = max(abs(params.g), max(params.gammas), 1.0)
    h = CYCLE / (steps_per_cycle * rate)
    stats.step = h

    states, steps = _integrate(generator, rho0.matrix, points, h)
    records = [observables.record(z, s) for z, s in zip(points, states)]
    total_steps = steps

    if audit and z_end > 0:
        coarse, coarse_steps = _integrate(generator, rho0.matrix, points, 2.0 * h)
        total_steps += coarse_steps
        stats.rejected += coarse_steps
        diff = _max_difference(records, [observables.record(z, s) for z, s in zip(points, coarse)])
        while diff >= audit_tol:
            h = 0.5 * h
            if h < 1e-12 * z_end:
                raise StiffnessError("Step size underflow at h = %.3e while the audit still differs by %.3e"
                        % (h, diff))
            logger.warning("Step audit differs by %.3e, refining to h = %.3e" % (diff, h))
            getStatistics().addRefinement()
            stats.refinements += 1
            stats.rejected += steps
            finer, steps = _integrate(generator, rho0.matrix, points, h)
            total_steps += steps
            finer_records = [observables.record(z, s) for z, s in zip(points, finer)]
            diff = _max_difference(records, finer_records)
            states, records = finer, finer_records
        stats.max_local_error = diff
        stats.step = h
        logger.debug("Step audit passed with difference %.3e at h = %.3e" % (diff, h))

    stats.accepted = steps
    getStatistics().addPropagation(total_steps, generator.evaluations)

    samples = [(z, DensityOperator(s, params.space, rho0.tail)) for z, s in zip(points, states)]
    return PropagationResult(samples=samples, observables=records, step_stats=stats)


def initial_state(alpha_p, signal_photons=1, space=None, eps_trunc=None):
    """! |alpha_p> (x) |0_a> (x) |n_s> as a density operator
    @param alpha_p         Complex probe amplitude
    @param signal_photons  0 or 1
    @param space           Defaults to the standard space
    """
    space = space or ModeSpace.standard()
    probe = coherent_state(alpha_p, space.dim_of(PROBE), eps_trunc, PROBE)
    aux = fock_state(0, space.dim_of(AUXILIARY), AUXILIARY)
    signal = fock_state(int(signal_photons), space.dim_of(SIGNAL), SIGNAL)
    return tensor(probe, aux, signal).to_density()


def probe_overlap(rho, alpha, eps_trunc=None):
    """! <-alpha| Tr_{a,s}[rho] |-alpha>, the overlap of the transmitted probe
         with the phase-flipped coherent state
    """
    reduced = partial_trace(rho, [PROBE])
    ket = coherent_state(-alpha, reduced.space.dims[0], eps_trunc, PROBE)
    return state_fidelity(reduced, ket)


def probe_phase(rho):
    """! arg <a_p> of the probe field
    """
    a_p = mode_ops(rho.space, PROBE)[0]
    return float(np.angle(rho.expect(a_p)))


def two_level_oracle(n, g, z):
    """! Exact evolution of |n_p, 0_a, 1_s> inside the block {|n,0,1>, |n-1,1,0>}
    @param n  Probe photon number, >= 1
    @return (amplitude of |n,0,1>, amplitude of |n-1,1,0>)
    """
    if n < 1:
        raise InvalidDimensionError("The exchange block needs n >= 1, got %s" % (n,))
    coupling = 0.5 * math.sqrt(n)
    block = np.array([[0.0, coupling * g], [coupling * np.conj(g), 0.0]], dtype=complex)
    energies, vectors = np.linalg.eigh(block)
    evolution = vectors @ np.diag(np.exp(-1j * energies * z)) @ vectors.conj().T
    amplitudes = evolution @ np.array([1.0, 0.0], dtype=complex)
    return complex(amplitudes[0]), complex(amplitudes[1])
