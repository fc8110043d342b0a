"""! @brief Truncated Fock space operators and states. """
##
# @file Hilbert.py
#
# @brief This module contains the operator and state algebra of the three
#        truncated bosonic modes (probe, auxiliary, signal). All matrices
#        are dense; the largest space used is 16*2*2 = 64 dimensional.
#
import logging
from dataclasses import dataclass
from functools import reduce

import numpy as np
from scipy.linalg import expm
from scipy.special import gammainc, gammaln

from Errors import InvalidDimensionError, SpaceMismatchError, TruncationError, ToleranceError
from Utils import config_or

logger = logging.getLogger(__name__)

# Fixed mode order
PROBE = 0
AUXILIARY = 1
SIGNAL = 2
MODE_NAMES = ("probe", "auxiliary", "signal")

HERMITIAN_TOLERANCE = 1e-12


@dataclass(frozen=True)
class ModeSpace(object):
    """! Tensor product of truncated modes.

    'dims' are the truncation dimensions, 'modes' the mode indices they belong
    to. The full space is (PROBE, AUXILIARY, SIGNAL); reduced spaces keep the
    same relative order.
    """
    dims: tuple
    modes: tuple = (PROBE, AUXILIARY, SIGNAL)

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        modes = tuple(int(m) for m in self.modes)
        if len(dims) != len(modes) or not len(dims):
            raise InvalidDimensionError("Expected one dimension per mode, got %s for %s" % (dims, modes))
        if any(d < 2 for d in dims):
            raise InvalidDimensionError("Every mode needs at least two levels, got %s" % (dims,))
        if list(modes) != sorted(set(modes)) or any(m not in (PROBE, AUXILIARY, SIGNAL) for m in modes):
            raise InvalidDimensionError("Modes must be a strictly increasing subset of (0, 1, 2), got %s" % (modes,))
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "modes", modes)

    @classmethod
    def single(cls, dim, mode=PROBE):
        """! A space holding one mode only
        """
        return cls((dim,), (mode,))

    @classmethod
    def standard(cls, probe_dim=None, aux_dim=None, signal_dim=None):
        """! The three-mode space with the configured default truncations
        """
        return cls((config_or(probe_dim, "PROBE_DIM"),
                    config_or(aux_dim, "AUX_DIM"),
                    config_or(signal_dim, "SIGNAL_DIM")))

    @property
    def total(self):
        return int(np.prod(self.dims))

    def dim_of(self, mode):
        """! Truncation dimension of the given mode
        """
        try:
            return self.dims[self.modes.index(mode)]
        except ValueError:
            raise SpaceMismatchError("Mode '%s' is not part of the space %s" % (MODE_NAMES[mode], self))

    def position_of(self, mode):
        """! Tensor factor position of the given mode
        """
        if mode not in self.modes:
            raise SpaceMismatchError("Mode '%s' is not part of the space %s" % (MODE_NAMES[mode], self))
        return self.modes.index(mode)

    def index(self, *levels):
        """! Flat basis index of the Fock configuration 'levels' (one per mode)
        """
        if len(levels) != len(self.dims):
            raise SpaceMismatchError("Expected %i occupation numbers, got %i" % (len(self.dims), len(levels)))
        return int(np.ravel_multi_index(levels, self.dims))


def _check_square(matrix, space):
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise SpaceMismatchError("Expected a square matrix, got shape %s" % (matrix.shape,))
    if matrix.shape[0] != space.total:
        raise SpaceMismatchError("Matrix dimension %i does not match space dimension %i"
                % (matrix.shape[0], space.total))


@dataclass(frozen=True, eq=False)
class Operator(object):
    """! Dense operator on a mode space. 'hermitian' marks operators that are
         checked to satisfy A = A^dagger on construction.
    """
    matrix: np.ndarray
    space: ModeSpace
    hermitian: bool = False

    def __post_init__(self):
        matrix = np.array(self.matrix, dtype=complex)
        _check_square(matrix, self.space)
        if self.hermitian and not np.allclose(matrix, matrix.conj().T, rtol=0, atol=HERMITIAN_TOLERANCE):
            raise ToleranceError("Operator flagged hermitian deviates from its adjoint by %.3e"
                    % (np.max(np.abs(matrix - matrix.conj().T)),))
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)

    def dag(self):
        return Operator(self.matrix.conj().T, self.space, self.hermitian)

    def __matmul__(self, other):
        if self.space != other.space:
            raise SpaceMismatchError("Cannot multiply operators on %s and %s" % (self.space, other.space))
        return Operator(self.matrix @ other.matrix, self.space)

    def commutator(self, other):
        """! [self, other] as a new operator
        """
        if self.space != other.space:
            raise SpaceMismatchError("Cannot commute operators on %s and %s" % (self.space, other.space))
        return Operator(self.matrix @ other.matrix - other.matrix @ self.matrix, self.space)


@dataclass(frozen=True, eq=False)
class StateVector(object):
    """! Ket in the truncated space. 'tail' is the probability weight lost
         to the truncation when the state was constructed.
    """
    amplitudes: np.ndarray
    space: ModeSpace
    tail: float = 0.0

    def __post_init__(self):
        amplitudes = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if amplitudes.shape[0] != self.space.total:
            raise SpaceMismatchError("State length %i does not match space dimension %i"
                    % (amplitudes.shape[0], self.space.total))
        amplitudes.setflags(write=False)
        object.__setattr__(self, "amplitudes", amplitudes)

    def norm2(self):
        return float(np.real(np.vdot(self.amplitudes, self.amplitudes)))

    def overlap(self, other):
        """! <self|other>
        """
        if self.space != other.space:
            raise SpaceMismatchError("Cannot overlap states on %s and %s" % (self.space, other.space))
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def to_density(self):
        return DensityOperator(np.outer(self.amplitudes, self.amplitudes.conj()), self.space, self.tail)


@dataclass(frozen=True, eq=False)
class DensityOperator(object):
    """! Density matrix on a mode space. Invariants are verified by 'check',
         not on construction, so that intermediate Runge-Kutta stages can be
         wrapped as well.
    """
    matrix: np.ndarray
    space: ModeSpace
    tail: float = 0.0

    def __post_init__(self):
        matrix = np.array(self.matrix, dtype=complex)
        _check_square(matrix, self.space)
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)

    def trace(self):
        return float(np.real(np.trace(self.matrix)))

    def purity(self):
        return float(np.real(np.vdot(self.matrix.conj().T, self.matrix)))

    def expect(self, op):
        """! Tr[rho A] for an operator on the same space
        """
        if op.space != self.space:
            raise SpaceMismatchError("Cannot evaluate an operator on %s for a state on %s" % (op.space, self.space))
        return complex(np.sum(self.matrix * op.matrix.T))

    def populations(self):
        return np.real(np.diag(self.matrix)).copy()

    def check(self, tol=None, losses=0.0):
        """! Verifies hermiticity, trace window and positivity
        @param tol     Tolerance, defaults to DENSITY_TOLERANCE
        @param losses  Trace that may legitimately have leaked out
        """
        tol = config_or(tol, "DENSITY_TOLERANCE")
        herm = float(np.max(np.abs(self.matrix - self.matrix.conj().T)))
        if herm > max(tol, 1e-10):
            raise ToleranceError("Density operator is not hermitian (deviation %.3e)" % (herm,))
        tr = self.trace()
        if tr > 1 + tol or tr < 1 - self.tail - losses - tol:
            raise ToleranceError("Density operator trace %.12f outside [%.3e, 1]" % (tr, 1 - self.tail - losses))
        smallest = float(np.min(np.linalg.eigvalsh(0.5 * (self.matrix + self.matrix.conj().T))))
        if smallest < -tol:
            raise ToleranceError("Density operator has a negative eigenvalue %.3e" % (smallest,))
        return self


def ladder_ops(dim):
    """! Annihilation and creation operators of a single truncated mode
    @param dim  Truncation dimension, at least 2
    @return (a, a^dagger)
    """
    if int(dim) != dim or dim < 2:
        raise InvalidDimensionError("Ladder operators need dim >= 2, got %s" % (dim,))
    dim = int(dim)
    a = np.diag(np.sqrt(np.arange(1, dim, dtype=float)), k=1).astype(complex)
    space = ModeSpace.single(dim)
    return Operator(a, space), Operator(a.conj().T, space)


def number_op(dim):
    """! a^dagger a of a single mode
    """
    a, ad = ladder_ops(dim)
    return Operator(ad.matrix @ a.matrix, a.space, hermitian=True)


def parity_op(dim):
    """! (-1)^n of a single mode
    """
    return Operator(np.diag((-1.0) ** np.arange(dim)), ModeSpace.single(dim), hermitian=True)


def embed(op, mode_index, space):
    """! Lifts a single-mode operator onto 'space' with identities on the other modes
    @param op          Single-mode operator
    @param mode_index  PROBE, AUXILIARY or SIGNAL
    @param space       Target space
    """
    position = space.position_of(mode_index)
    if op.matrix.shape[0] != space.dims[position]:
        raise SpaceMismatchError("Operator of dimension %i cannot act on mode '%s' of dimension %i"
                % (op.matrix.shape[0], MODE_NAMES[mode_index], space.dims[position]))
    factors = [np.eye(d, dtype=complex) for d in space.dims]
    factors[position] = op.matrix
    return Operator(reduce(np.kron, factors), space, hermitian=op.hermitian)


def mode_ops(space, mode):
    """! Embedded (a, a^dagger, n) for one mode of 'space'
    """
    a, ad = ladder_ops(space.dim_of(mode))
    return embed(a, mode, space), embed(ad, mode, space), embed(number_op(space.dim_of(mode)), mode, space)


def poisson_tail(mean, dim):
    """! Probability weight of a Poisson distribution at n >= dim
    """
    if mean == 0:
        return 0.0
    return float(gammainc(dim, mean))


def required_dim(alpha, eps_trunc):
    """! Smallest truncation whose coherent-state tail is below eps_trunc
    """
    mean = abs(alpha) ** 2
    dim = 2
    while poisson_tail(mean, dim) >= eps_trunc:
        dim += 1
    return dim


def coherent_amplitudes(alpha, dim):
    """! Fock amplitudes exp(-|a|^2/2) a^n / sqrt(n!) for n < dim
    """
    n = np.arange(dim)
    if alpha == 0:
        amplitudes = np.zeros(dim, dtype=complex)
        amplitudes[0] = 1.0
        return amplitudes
    log_mag = -0.5 * abs(alpha) ** 2 + n * np.log(abs(alpha)) - 0.5 * gammaln(n + 1)
    return np.exp(log_mag) * np.exp(1j * n * np.angle(alpha))


def coherent_state(alpha, dim, eps_trunc=None, mode=PROBE):
    """! Truncated coherent state |alpha>
    @param alpha      Complex amplitude
    @param dim        Truncation dimension
    @param eps_trunc  Largest admissible tail weight, defaults to EPS_TRUNC
    @return StateVector recording the tail
    """
    if int(dim) != dim or dim < 2:
        raise InvalidDimensionError("Coherent states need dim >= 2, got %s" % (dim,))
    eps_trunc = config_or(eps_trunc, "EPS_TRUNC")
    dim = int(dim)
    tail = poisson_tail(abs(alpha) ** 2, dim)
    if tail >= eps_trunc:
        needed = required_dim(alpha, eps_trunc)
        raise TruncationError("Coherent state |%s> loses %.3e of its weight at dim %i, use dim >= %i"
                % (alpha, tail, dim, needed), required_dim=needed)
    return StateVector(coherent_amplitudes(alpha, dim), ModeSpace.single(dim, mode), tail)


def fock_state(n, dim, mode=PROBE):
    """! Single-mode Fock state |n>
    """
    if n >= dim:
        raise InvalidDimensionError("Fock state |%i> does not fit into dim %i" % (n, dim))
    amplitudes = np.zeros(dim, dtype=complex)
    amplitudes[n] = 1.0
    return StateVector(amplitudes, ModeSpace.single(dim, mode))


def tensor(*states):
    """! Product of single-mode states (kets or density operators) in mode order
    """
    modes = tuple(m for s in states for m in s.space.modes)
    dims = tuple(d for s in states for d in s.space.dims)
    space = ModeSpace(dims, modes)
    tail = 1.0 - np.prod([1.0 - s.tail for s in states])
    if all(isinstance(s, StateVector) for s in states):
        return StateVector(reduce(np.kron, [s.amplitudes for s in states]), space, tail)
    matrices = [s.to_density().matrix if isinstance(s, StateVector) else s.matrix for s in states]
    return DensityOperator(reduce(np.kron, matrices), space, tail)


def displacement(alpha, dim):
    """! D(alpha) = expm(alpha a^dagger - alpha^* a) on a single truncated mode
    @param alpha  Complex displacement
    @param dim    Truncation dimension
    """
    a, ad = ladder_ops(dim)
    generator = alpha * ad.matrix - np.conj(alpha) * a.matrix
    return Operator(expm(generator), a.space)


class DisplacementFamily(object):
    """! D(alpha) for many alpha on the same truncated mode.

    The generator a^dagger - a is diagonalised once, so each displacement
    costs a matrix product instead of a scaling-and-squaring exponential.
    D(r e^{i theta}) = R(theta) D(r) R(-theta) with R(theta) = exp(i theta n).
    The result is the exponential of the same truncated generator as
    'displacement'.
    """

    def __init__(self, dim):
        a, ad = ladder_ops(dim)
        self.dim = int(dim)
        self._levels = np.arange(self.dim)
        self._eigval, self._eigvec = np.linalg.eigh(1j * (ad.matrix - a.matrix))

    def columns(self, alpha, count):
        """! First 'count' columns of D(alpha)
        """
        r = abs(alpha)
        theta = np.angle(alpha)
        left = np.exp(1j * theta * self._levels)
        right = np.exp(-1j * theta * self._levels[:count])
        phase = np.exp(-1j * r * self._eigval)
        block = self._eigvec @ (phase[:, None] * (self._eigvec.conj().T[:, :count] * right[None, :]))
        return left[:, None] * block

    def matrix(self, alpha):
        return self.columns(alpha, self.dim)


def partial_trace(rho, keep):
    """! Reduced density operator on the modes in 'keep'
    @param rho   DensityOperator
    @param keep  Iterable of mode indices
    """
    keep = sorted(set(keep))
    if not keep:
        raise InvalidDimensionError("partial_trace needs at least one mode to keep")
    space = rho.space
    for m in keep:
        space.position_of(m)
    if keep == list(space.modes):
        return rho

    n = len(space.dims)
    t = rho.matrix.reshape(space.dims + space.dims)
    for position in reversed(range(n)):
        if space.modes[position] in keep:
            continue
        t = np.trace(t, axis1=position, axis2=position + t.ndim // 2)
    dims = tuple(space.dims[space.position_of(m)] for m in keep)
    reduced = ModeSpace(dims, tuple(keep))
    return DensityOperator(t.reshape(reduced.total, reduced.total), reduced, rho.tail)


def state_fidelity(rho, ket):
    """! <psi| rho |psi> for a ket on the same space
    """
    if rho.space != ket.space:
        raise SpaceMismatchError("Cannot compare a state on %s with a ket on %s" % (rho.space, ket.space))
    return float(np.real(np.vdot(ket.amplitudes, rho.matrix @ ket.amplitudes)))
