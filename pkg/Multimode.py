"""! @brief Real-space wave-packet model of the detection process. """
##
# @file Multimode.py
#
# @brief Propagates the two-photon wave function phi_ps(t; z_p, z_s) of
#        probe and signal and the auxiliary wave function phi_a(t; z_a):
#
#        d phi_ps/dt = -v_p d phi_ps/dz_p - v_s d phi_ps/dz_s
#                      - i (g0/2) int_medium f_g phi_a dz_a
#        d phi_a/dt  = -v_a d phi_a/dz_a
#                      - i (g0/2) int_medium int_medium f_g phi_ps dz_p dz_s
#
#        with the Gaussian response f_g = c G(z_a - z_p) G(z_a - z_s),
#        c = 1/sqrt(pi sigma^3). Method of lines: finite differences in
#        space, classical RK4 in time.
#
import math
import logging
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import minimize_scalar

from Errors import DomainError, CflError, ConfigError, SpaceMismatchError, ToleranceError
from Statistics import getStatistics
from Utils import config_or, get_config

logger = logging.getLogger(__name__)

CENTRAL4 = "central4"
UPWIND3 = "upwind3"
SCHEMES = (CENTRAL4, UPWIND3)

# largest field amplitude allowed at the domain edges and, for the input,
# anywhere inside the absorbing layers
BOUNDARY_AMPLITUDE = 1e-8
MIN_GRID_POINTS = 64


@dataclass(frozen=True)
class Grid1D(object):
    """! Uniform grid including both end points """
    z_min: float
    z_max: float
    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < MIN_GRID_POINTS:
            raise ConfigError("A grid needs at least %i points, got %s" % (MIN_GRID_POINTS, self.n))
        if not self.z_max > self.z_min:
            raise ConfigError("Grid bounds must satisfy z_min < z_max, got [%s, %s]" % (self.z_min, self.z_max))
        object.__setattr__(self, "z_min", float(self.z_min))
        object.__setattr__(self, "z_max", float(self.z_max))
        object.__setattr__(self, "n", int(self.n))

    @classmethod
    def default(cls):
        z_min, z_max = get_config("MM_DOMAIN")
        return cls(z_min, z_max, get_config("MM_GRID_POINTS"))

    @property
    def dz(self):
        return (self.z_max - self.z_min) / (self.n - 1)

    @property
    def points(self):
        return np.linspace(self.z_min, self.z_max, self.n)

    def refined(self, factor=2):
        """! Same domain with 'factor' times the number of intervals
        """
        return Grid1D(self.z_min, self.z_max, (self.n - 1) * factor + 1)


@dataclass(frozen=True)
class MultimodeParams(object):
    """! Coupling, kernel width, pulse shapes, velocities and numerics.

    'medium' is the interaction window (z_in, z_out); all three coordinates
    must lie inside it for the coupling to act. 'cfl' scales the time step
    dt = cfl * dz / max(v); 'dt' overrides it. Absorbing layers of
    'absorber_width' at both domain ends damp outgoing waves with the rate
    absorber_rate * xi^2, xi running from 0 to 1 towards the edge. A width
    of 0 disables them.
    """
    g0: float = 0.0
    sigma: float = 0.2
    tau: float = 0.6
    v_a: float = 1.0
    v_p: float = 1.0
    v_s: float = 1.0
    z_p0: float = -5.0
    z_s0: float = -5.0
    tau_p: float = None
    tau_s: float = None
    medium: tuple = None
    grid: Grid1D = None
    cfl: float = None
    dt: float = None
    scheme: str = None
    absorber_width: float = None
    absorber_rate: float = None

    def __post_init__(self):
        if self.sigma <= 0 or self.tau <= 0:
            raise ConfigError("sigma and tau must be positive, got sigma=%s tau=%s" % (self.sigma, self.tau))
        if min(self.v_a, self.v_p, self.v_s) <= 0:
            raise ConfigError("Group velocities must be positive, got (%s, %s, %s)" % (self.v_a, self.v_p, self.v_s))
        fill = {
            "tau_p": self.tau if self.tau_p is None else self.tau_p,
            "tau_s": self.tau if self.tau_s is None else self.tau_s,
            "medium": tuple(float(z) for z in config_or(self.medium, "MM_MEDIUM")),
            "grid": self.grid or Grid1D.default(),
            "cfl": float(config_or(self.cfl, "MM_CFL_FACTOR")),
            "scheme": config_or(self.scheme, "MM_ADVECTION_SCHEME"),
            "absorber_width": float(config_or(self.absorber_width, "MM_ABSORBER_WIDTH")),
            "absorber_rate": float(config_or(self.absorber_rate, "MM_ABSORBER_RATE")),
        }
        for key, value in fill.items():
            object.__setattr__(self, key, value)
        if self.tau_p <= 0 or self.tau_s <= 0:
            raise ConfigError("Pulse durations must be positive")
        if len(self.medium) != 2 or not self.medium[1] > self.medium[0]:
            raise ConfigError("The medium must be an interval (z_in, z_out), got %s" % (self.medium,))
        if self.scheme not in SCHEMES:
            raise ConfigError("Unknown advection scheme '%s', use one of %s" % (self.scheme, SCHEMES))
        if self.absorber_width < 0 or self.absorber_rate < 0:
            raise ConfigError("Absorber width and rate must be nonnegative, got %s and %s"
                    % (self.absorber_width, self.absorber_rate))
        if 2.0 * self.absorber_width >= self.grid.z_max - self.grid.z_min:
            raise ConfigError("Absorbing layers of width %s do not fit into [%s, %s]"
                    % (self.absorber_width, self.grid.z_min, self.grid.z_max))

    @property
    def v_max(self):
        return max(self.v_a, self.v_p, self.v_s)

    @property
    def time_step(self):
        return self.dt if self.dt is not None else self.cfl * self.grid.dz / self.v_max

    @property
    def courant(self):
        return self.v_max * self.time_step / self.grid.dz


@dataclass(frozen=True, eq=False)
class FieldPS(object):
    """! phi_ps on the grid, values[i, j] at (z_p[i], z_s[j]) """
    values: np.ndarray
    grid: Grid1D

    def __post_init__(self):
        values = np.array(self.values, dtype=complex)
        if values.shape != (self.grid.n, self.grid.n):
            raise SpaceMismatchError("Field of shape %s does not fit a %i point grid" % (values.shape, self.grid.n))
        if not np.all(np.isfinite(values)):
            raise ToleranceError("phi_ps contains non-finite values")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def norm2(self):
        return float(np.sum(np.abs(self.values) ** 2) * self.grid.dz ** 2)

    def boundary_amplitude(self):
        v = self.values
        return float(max(np.max(np.abs(v[0])), np.max(np.abs(v[-1])),
                         np.max(np.abs(v[:, 0])), np.max(np.abs(v[:, -1]))))


@dataclass(frozen=True, eq=False)
class FieldA(object):
    """! phi_a on the grid """
    values: np.ndarray
    grid: Grid1D

    def __post_init__(self):
        values = np.array(self.values, dtype=complex).reshape(-1)
        if values.shape != (self.grid.n,):
            raise SpaceMismatchError("Field of length %i does not fit a %i point grid" % (values.size, self.grid.n))
        if not np.all(np.isfinite(values)):
            raise ToleranceError("phi_a contains non-finite values")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, grid):
        return cls(np.zeros(grid.n, dtype=complex), grid)

    def norm2(self):
        return float(np.sum(np.abs(self.values) ** 2) * self.grid.dz)

    def boundary_amplitude(self):
        return float(max(abs(self.values[0]), abs(self.values[-1])))


@dataclass(frozen=True, eq=False)
class MultimodeTrajectory(object):
    """! Snapshots of a propagation, with the total norm, the auxiliary weight
         and the weight removed by the absorbing layers so far per snapshot
    """
    times: list
    fields: list
    norms: list
    aux_weights: list
    absorbed: list
    steps: int
    dt: float

    @property
    def final(self):
        return self.fields[-1]

    @property
    def max_norm_drift(self):
        return float(max(abs(n + a - self.norms[0]) for n, a in zip(self.norms, self.absorbed)))


def _gaussian(z, center, width):
    return np.exp(-(z - center) ** 2 / (2.0 * width ** 2))


def _pulse(params, z_p, z_s):
    grid = params.grid
    z = grid.points
    prefactor = 1.0 / math.sqrt(math.pi * params.tau_p * params.tau_s)
    return prefactor * np.outer(_gaussian(z, z_p, params.tau_p), _gaussian(z, z_s, params.tau_s))


def _layer_depth(params):
    """! xi in [0, 1] inside the absorbing layers, 0 in the interior """
    grid = params.grid
    z = grid.points
    width = params.absorber_width
    if width == 0:
        return np.zeros(grid.n)
    return np.clip(np.maximum(grid.z_min + width - z, z - (grid.z_max - width)) / width, 0.0, 1.0)


def absorber_profile(params):
    """! Damping rate kappa(z) = absorber_rate * xi^2 of the absorbing layers
    """
    return params.absorber_rate * _layer_depth(params) ** 2


def gaussian_input(params):
    """! Separable Gaussian two-photon input centred at (z_p0, z_s0)

    The input may not exceed BOUNDARY_AMPLITUDE inside the absorbing layers
    or at the domain edges.

    @param params  MultimodeParams
    @return FieldPS, normalised to one
    """
    grid = params.grid
    z = grid.points
    outside = _layer_depth(params) > 0
    outside[0] = outside[-1] = True
    prefactor = 1.0 / math.sqrt(math.pi * params.tau_p * params.tau_s)
    for name, center, width in (("probe", params.z_p0, params.tau_p), ("signal", params.z_s0, params.tau_s)):
        edge = prefactor * float(np.max(_gaussian(z[outside], center, width)))
        if edge > BOUNDARY_AMPLITUDE:
            raise DomainError("The %s pulse at %s with width %s reaches %.3e inside the absorbing layers of [%s, %s]"
                    % (name, center, width, edge, grid.z_min, grid.z_max))
    return FieldPS(_pulse(params, params.z_p0, params.z_s0), grid)


def free_advected_input(params, t):
    """! The input pulse translated to z_j0 + v_j t without interaction
    """
    return FieldPS(_pulse(params, params.z_p0 + params.v_p * t, params.z_s0 + params.v_s * t), params.grid)


def kernel(z_a, z_p, z_s, sigma):
    """! Nonlocal response f_g(z_a, z_p, z_s), broadcasting over arrays
    """
    if sigma <= 0:
        raise ConfigError("sigma must be positive, got %s" % (sigma,))
    z_a = np.asarray(z_a, dtype=float)
    return (np.exp(-(z_a - z_p) ** 2 / (2.0 * sigma ** 2)) * np.exp(-(z_a - z_s) ** 2 / (2.0 * sigma ** 2))
            / math.sqrt(math.pi * sigma ** 3))


class CouplingOperator(object):
    """! The nonlocal coupling restricted to the medium.

    Only grid points inside the medium take part, so the work is two dense
    products on the medium block. With G[a, p] = exp(-(z_a - z_p)^2 / 2 sigma^2):

        d phi_ps/dt[p, s] = -i (g0/2) c dz sum_a G[a, p] G[a, s] phi_a[a]
        d phi_a/dt[a]     = -i (g0/2) c dz^2 sum_{p,s} G[a, p] G[a, s] phi_ps[p, s]

    which conserves dz^2 |phi_ps|^2 + dz |phi_a|^2 exactly.
    """

    def __init__(self, params):
        grid = params.grid
        z = grid.points
        z_in, z_out = params.medium
        self.index = np.flatnonzero((z >= z_in) & (z <= z_out))
        zm = z[self.index]
        self.gauss = np.exp(-(zm[:, None] - zm[None, :]) ** 2 / (2.0 * params.sigma ** 2))
        self.rate = 0.5 * params.g0 / math.sqrt(math.pi * params.sigma ** 3)
        self.dz = grid.dz
        self.n = grid.n
        self.active = params.g0 != 0 and self.index.size > 0
        self._block = np.ix_(self.index, self.index)

    def apply(self, phi_ps, phi_a):
        """! Coupling contributions to (d phi_ps/dt, d phi_a/dt)
        """
        dps = np.zeros_like(phi_ps)
        da = np.zeros_like(phi_a)
        if not self.active:
            return dps, da
        g = self.gauss
        block = phi_ps[self._block]
        fa = phi_a[self.index]
        dps[self._block] = (-1j * self.rate * self.dz) * (g.T @ (fa[:, None] * g))
        da[self.index] = (-1j * self.rate * self.dz ** 2) * np.sum((g @ block) * g, axis=1)
        return dps, da

    def scaled_matrix(self):
        """! The coupling on the medium block in the variables (dz phi_ps, sqrt(dz) phi_a),
             ordered as [phi_ps (row major), phi_a]. It is anti-hermitian.
        """
        m = self.index.size
        transfer = (self.gauss[:, :, None] * self.gauss[:, None, :]).reshape(m, m * m).T
        scale = -1j * self.rate * self.dz ** 1.5
        out = np.zeros((m * m + m, m * m + m), dtype=complex)
        out[:m * m, m * m:] = scale * transfer
        out[m * m:, :m * m] = scale * transfer.T
        return out


def _derivative(u, axis, dz, scheme):
    """! d u / dz along 'axis' with zero values beyond the domain
    """
    pad = [(0, 0)] * u.ndim
    pad[axis] = (2, 2)
    p = np.pad(u, pad)
    n = u.shape[axis]

    def shift(k):
        index = [slice(None)] * u.ndim
        index[axis] = slice(2 + k, 2 + k + n)
        return p[tuple(index)]

    if scheme == CENTRAL4:
        return (-shift(2) + 8.0 * shift(1) - 8.0 * shift(-1) + shift(-2)) / (12.0 * dz)
    # biased towards the upwind side for positive velocities
    return (2.0 * shift(1) + 3.0 * u - 6.0 * shift(-1) + shift(-2)) / (6.0 * dz)


class _RightHandSide(object):
    def __init__(self, params):
        self.params = params
        self.coupling = CouplingOperator(params)
        self.dz = params.grid.dz
        self.evaluations = 0

    def __call__(self, phi_ps, phi_a):
        self.evaluations += 1
        p = self.params
        dps = (-p.v_p * _derivative(phi_ps, 0, self.dz, p.scheme)
               - p.v_s * _derivative(phi_ps, 1, self.dz, p.scheme))
        da = -p.v_a * _derivative(phi_a, 0, self.dz, p.scheme)
        cps, ca = self.coupling.apply(phi_ps, phi_a)
        return dps + cps, da + ca

    def rk4_step(self, phi_ps, phi_a, dt):
        k1 = self(phi_ps, phi_a)
        k2 = self(phi_ps + 0.5 * dt * k1[0], phi_a + 0.5 * dt * k1[1])
        k3 = self(phi_ps + 0.5 * dt * k2[0], phi_a + 0.5 * dt * k2[1])
        k4 = self(phi_ps + dt * k3[0], phi_a + dt * k3[1])
        return (phi_ps + (dt / 6.0) * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
                phi_a + (dt / 6.0) * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]))


def _check_fields(phi_ps, phi_a, params):
    if phi_ps.grid != params.grid or phi_a.grid != params.grid:
        raise SpaceMismatchError("Fields on %s / %s do not match the parameter grid %s"
                % (phi_ps.grid, phi_a.grid, params.grid))


def coupled_rhs(phi_ps, phi_a, params):
    """! Time derivatives of both fields
    @return (FieldPS, FieldA) holding d phi_ps/dt and d phi_a/dt
    """
    _check_fields(phi_ps, phi_a, params)
    dps, da = _RightHandSide(params)(phi_ps.values, phi_a.values)
    return FieldPS(dps, params.grid), FieldA(da, params.grid)


def _norm(phi_ps, phi_a, dz):
    return float(np.sum(np.abs(phi_ps) ** 2) * dz ** 2 + np.sum(np.abs(phi_a) ** 2) * dz)


def propagate_multimode(params, t_end, sample_times=None, initial=None, norm_tolerance=None,
                        check_norm=True, check_boundary=True):
    """! Integrates the coupled equations from t = 0 to t_end

    After every RK4 step the fields are multiplied by exp(-kappa dt) of the
    absorbing layers. The norm check compares the norm plus the absorbed
    weight against the initial norm.

    @param params          MultimodeParams
    @param t_end           End time, > 0
    @param sample_times    Times at which snapshots are kept, t = 0 and t_end are always kept
    @param initial         Optional (FieldPS, FieldA) start, defaults to the Gaussian input and phi_a = 0
    @param norm_tolerance  Largest accepted norm drift, defaults to MM_NORM_TOLERANCE
    @param check_norm      Raise ToleranceError when the drift exceeds the tolerance
    @param check_boundary  Raise ToleranceError when a snapshot exceeds BOUNDARY_AMPLITUDE at
                           the domain edges or more than norm_tolerance was absorbed
    @return MultimodeTrajectory
    """
    if t_end <= 0:
        raise ConfigError("t_end must be positive, got %s" % (t_end,))
    limit = get_config("MM_CFL_LIMIT")
    if params.courant > limit:
        raise CflError("Courant number %.4f exceeds the limit %.4f (dt = %.4e, dz = %.4e)"
                % (params.courant, limit, params.time_step, params.grid.dz))
    norm_tolerance = config_or(norm_tolerance, "MM_NORM_TOLERANCE")

    if initial is None:
        initial = (gaussian_input(params), FieldA.zeros(params.grid))
    _check_fields(initial[0], initial[1], params)

    requested = sorted(set(float(t) for t in (sample_times or [])))
    for t in requested:
        if t < 0 or t > t_end:
            raise ConfigError("Sample time %s outside [0, %s]" % (t, t_end))
    times = sorted(set([0.0, float(t_end)] + requested))

    rhs = _RightHandSide(params)
    dz = params.grid.dz
    phi_ps = np.array(initial[0].values)
    phi_a = np.array(initial[1].values)
    norm0 = _norm(phi_ps, phi_a, dz)
    kappa = absorber_profile(params)
    absorbing = bool(np.any(kappa > 0))

    fields = [initial]
    norms = [norm0]
    aux = [initial[1].norm2()]
    absorbed = [0.0]
    removed = 0.0
    steps = 0
    dt_max = params.time_step
    for t0, t1 in zip(times[:-1], times[1:]):
        n = max(1, int(math.ceil((t1 - t0) / dt_max - 1e-9)))
        dt = (t1 - t0) / n
        damp_a = np.exp(-kappa * dt)
        damp_ps = np.outer(damp_a, damp_a)
        loss_a = 1.0 - damp_a ** 2
        loss_ps = 1.0 - damp_ps ** 2
        for k in range(n):
            phi_ps, phi_a = rhs.rk4_step(phi_ps, phi_a, dt)
            steps += 1
            if absorbing:
                removed += float(np.sum(np.abs(phi_ps) ** 2 * loss_ps) * dz ** 2
                                 + np.sum(np.abs(phi_a) ** 2 * loss_a) * dz)
                phi_ps *= damp_ps
                phi_a *= damp_a
            if check_norm:
                drift = abs(_norm(phi_ps, phi_a, dz) + removed - norm0)
                if drift > norm_tolerance:
                    raise ToleranceError("Norm drifted by %.3e > %.3e at t = %.4f"
                            % (drift, norm_tolerance, t0 + dt * (k + 1)))
        snapshot = (FieldPS(phi_ps, params.grid), FieldA(phi_a, params.grid))
        if check_boundary:
            edge = max(snapshot[0].boundary_amplitude(), snapshot[1].boundary_amplitude())
            if edge > BOUNDARY_AMPLITUDE:
                raise ToleranceError("Boundary amplitude %.3e > %.1e at t = %.4f, the domain is too small"
                        % (edge, BOUNDARY_AMPLITUDE, t1))
            if removed > norm_tolerance:
                raise ToleranceError("The absorbing layers removed a weight of %.3e > %.3e by t = %.4f, "
                        "the domain is too small" % (removed, norm_tolerance, t1))
        fields.append(snapshot)
        norms.append(_norm(phi_ps, phi_a, dz))
        aux.append(snapshot[1].norm2())
        absorbed.append(removed)
        logger.debug("t = %.4f: norm %.12f, auxiliary weight %.6f, absorbed %.3e" % (t1, norms[-1], aux[-1], removed))

    getStatistics().addMultimodeRun(steps)
    return MultimodeTrajectory(times=times, fields=fields, norms=norms, aux_weights=aux, absorbed=absorbed,
            steps=steps, dt=dt_max)


def multimode_fidelity(phi_ps_end, params, t_end):
    """! 1/2 |1 - <phi_free(t_end)|phi_ps_end>|, 0 without and 1 with a uniform pi shift
    """
    if phi_ps_end.grid != params.grid:
        raise SpaceMismatchError("Field grid %s does not match %s" % (phi_ps_end.grid, params.grid))
    reference = free_advected_input(params, t_end)
    overlap = np.vdot(reference.values, phi_ps_end.values) * params.grid.dz ** 2
    return float(np.clip(0.5 * abs(1.0 - overlap), 0.0, 1.0))


def phase_map(phi_ps, floor=None):
    """! arg(phi_ps) where |phi_ps| exceeds floor * max|phi_ps|, NaN elsewhere
    """
    floor = config_or(floor, "MM_PHASE_FLOOR")
    if floor <= 0:
        raise ConfigError("The phase floor must be positive, got %s" % (floor,))
    magnitude = np.abs(phi_ps.values)
    phase = np.angle(phi_ps.values)
    peak = float(np.max(magnitude))
    if peak == 0:
        return np.full(magnitude.shape, np.nan)
    return np.where(magnitude > floor * peak, phase, np.nan)


def marginals(phi_ps):
    """! Position densities of probe (over z_p) and signal (over z_s)
    """
    density = np.abs(phi_ps.values) ** 2
    dz = phi_ps.grid.dz
    return density.sum(axis=1) * dz, density.sum(axis=0) * dz


def auxiliary_weight(phi_a):
    """! Probability that the excitation sits in the auxiliary field
    """
    return phi_a.norm2()


def fidelity_for(params, t_end):
    """! Multimode fidelity of one complete run
    """
    run = propagate_multimode(params, t_end, check_norm=False, check_boundary=False)
    return multimode_fidelity(run.final[0], params, t_end)


def calibrate_g0(params, t_end, scan=None, xatol=1e-3):
    """! Finds the coupling of the first fidelity maximum
    @param params  MultimodeParams, g0 is ignored
    @param t_end   Propagation time
    @param scan    [g_min, g_max, points], defaults to MM_G0_SCAN
    @return (g0, F(g0), list of (g, F) scan points)
    """
    g_min, g_max, points = config_or(scan, "MM_G0_SCAN")
    grid = np.linspace(g_min, g_max, int(points))
    if grid.size < 3:
        raise ConfigError("The coupling scan needs at least three points")
    values = [fidelity_for(replace(params, g0=float(g)), t_end) for g in grid]
    for g, f in zip(grid, values):
        logger.debug("g0 = %.4f: F = %.6f" % (g, f))

    best = int(np.argmax(values))
    for i in range(1, len(values) - 1):
        if values[i] >= values[i - 1] and values[i] >= values[i + 1]:
            best = i
            break
    lo = grid[max(best - 1, 0)]
    hi = grid[min(best + 1, grid.size - 1)]
    result = minimize_scalar(lambda g: -fidelity_for(replace(params, g0=float(g)), t_end),
            bounds=(lo, hi), method="bounded", options={"xatol": xatol})
    if -result.fun >= values[best]:
        g0, f0 = float(result.x), float(-result.fun)
    else:
        g0, f0 = float(grid[best]), float(values[best])
    logger.info("Calibrated g0 = %.5f with F = %.6f" % (g0, f0))
    return g0, f0, [(float(g), float(f)) for g, f in zip(grid, values)]
