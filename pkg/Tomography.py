"""! @brief Wigner functions of reduced single-mode states. """
##
# @file Tomography.py
#
# @brief Evaluates W(x, p) = (1/pi) * sum_n (-1)^n <n| D(-alpha) rho D(alpha) |n>
#        with alpha = (x + ip)/sqrt(2). In this convention the integral of W
#        over dx dp is one and the vacuum peaks at 1/pi.
#
import math
import logging
from dataclasses import dataclass

import numpy as np

from Errors import SpaceMismatchError, InvalidDimensionError, ToleranceError
from Hilbert import DensityOperator, StateVector, DisplacementFamily
from Utils import config_or

logger = logging.getLogger(__name__)

WIGNER_BOUND = 1.0 / math.pi
BOUND_SLACK = 1e-6
UNIFORM_TOLERANCE = 1e-9


def _uniform(values, name):
    values = np.array(values, dtype=float).reshape(-1)
    if values.size < 2:
        raise InvalidDimensionError("The %s axis needs at least two points" % (name,))
    steps = np.diff(values)
    if np.any(steps <= 0):
        raise InvalidDimensionError("The %s axis must be strictly increasing" % (name,))
    if np.max(np.abs(steps - steps[0])) > UNIFORM_TOLERANCE * max(1.0, abs(steps[0])):
        raise InvalidDimensionError("The %s axis must be uniformly spaced" % (name,))
    values.setflags(write=False)
    return values


@dataclass(frozen=True, eq=False)
class PhaseSpaceGrid(object):
    """! Uniform (x, p) grid. alpha = (x + ip)/sqrt(2). """
    x_values: np.ndarray
    p_values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x_values", _uniform(self.x_values, "x"))
        object.__setattr__(self, "p_values", _uniform(self.p_values, "p"))

    @classmethod
    def uniform(cls, lo, hi, points):
        """! Square grid with 'points' samples over [lo, hi] on both axes
        """
        axis = np.linspace(lo, hi, int(points))
        return cls(axis, axis)

    @classmethod
    def default(cls):
        lo, hi, points = config_or(None, "WIGNER_GRID")
        return cls.uniform(lo, hi, points)

    @property
    def dx(self):
        return float(self.x_values[1] - self.x_values[0])

    @property
    def dp(self):
        return float(self.p_values[1] - self.p_values[0])

    @property
    def shape(self):
        return (self.x_values.size, self.p_values.size)


@dataclass(frozen=True, eq=False)
class WignerMap(object):
    """! W(x, p) sampled on a PhaseSpaceGrid, values[i, j] at (x_i, p_j) """
    grid: PhaseSpaceGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != self.grid.shape:
            raise SpaceMismatchError("Wigner values of shape %s do not match grid %s" % (values.shape, self.grid.shape))
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def integral(self):
        """! Riemann sum of W dx dp
        """
        return float(np.sum(self.values) * self.grid.dx * self.grid.dp)

    def minimum(self):
        return float(np.min(self.values))

    def maximum(self):
        return float(np.max(self.values))

    def value_at(self, x, p):
        """! W at the grid point closest to (x, p)
        """
        i = int(np.argmin(np.abs(self.grid.x_values - x)))
        j = int(np.argmin(np.abs(self.grid.p_values - p)))
        return float(self.values[i, j])

    def peak(self):
        """! (x, p) of the largest value
        """
        i, j = np.unravel_index(int(np.argmax(self.values)), self.values.shape)
        return float(self.grid.x_values[i]), float(self.grid.p_values[j])

    def check(self):
        """! Verifies that all values lie within +-1/pi
        """
        worst = float(np.max(np.abs(self.values)))
        if worst > WIGNER_BOUND + BOUND_SLACK:
            raise ToleranceError("Wigner value %.9f exceeds the bound 1/pi, the working dimension is too small" % (worst,))
        return self

    def rows(self):
        """! (x, p, W) rows, x major
        """
        for i, x in enumerate(self.grid.x_values):
            for j, p in enumerate(self.grid.p_values):
                yield float(x), float(p), float(self.values[i, j])


def wigner(rho, grid=None, work_dim=None):
    """! Wigner function of a single-mode state
    @param rho       Single-mode DensityOperator (or StateVector)
    @param grid      PhaseSpaceGrid, defaults to WIGNER_GRID
    @param work_dim  Fock dimension the state is padded to before displacing
    @return WignerMap
    """
    if isinstance(rho, StateVector):
        rho = rho.to_density()
    if not isinstance(rho, DensityOperator):
        raise SpaceMismatchError("wigner expects a DensityOperator, got %s" % (type(rho).__name__,))
    if len(rho.space.dims) != 1:
        raise SpaceMismatchError("wigner needs a single-mode state, reduce %s with partial_trace first" % (rho.space,))
    grid = grid or PhaseSpaceGrid.default()
    dim = rho.space.dims[0]
    work_dim = max(int(config_or(work_dim, "WIGNER_WORK_DIM")), dim)

    family = DisplacementFamily(work_dim)
    matrix = np.asarray(rho.matrix)
    parity = (-1.0) ** np.arange(work_dim)

    values = np.empty(grid.shape)
    for i, x in enumerate(grid.x_values):
        for j, p in enumerate(grid.p_values):
            cols = family.columns(-(x + 1j * p) / math.sqrt(2.0), dim)
            diag = np.sum((cols @ matrix) * cols.conj(), axis=1)
            values[i, j] = float(np.real(np.dot(parity, diag))) / math.pi

    result = WignerMap(grid, values)
    logger.debug("Wigner map on %ix%i points, min %.4f, max %.4f, integral %.6f"
            % (grid.shape + (result.minimum(), result.maximum(), result.integral())))
    return result.check()


def parity_expectation(rho):
    """! sum_n (-1)^n rho_nn, equal to pi * W(0, 0)
    """
    if len(rho.space.dims) != 1:
        raise SpaceMismatchError("parity_expectation needs a single-mode state")
    return float(np.dot((-1.0) ** np.arange(rho.space.dims[0]), rho.populations()))
