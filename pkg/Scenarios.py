"""! @brief Run configurations and the scenarios driven by the command line. """
##
# @file Scenarios.py
#
# @brief A run configuration is a JSON document parsed into frozen
#        dataclasses. Unknown keys, duplicate keys and wrongly typed values
#        are rejected with the dotted path of the offending field. Each
#        scenario writes plain data files into the output directory; file
#        contents depend on the configuration only.
#
import os
import json
import math
import cmath
import logging
import typing
from dataclasses import dataclass, field, fields, is_dataclass, replace

import numpy as np

import Export
from Detection import BeamSplitterModel, detect, displaced_state, efficiency_ratio, cascade_or_none
from Dynamics import InteractionParams, ObservableRecord, propagate, initial_state, probe_overlap, probe_phase
from Errors import ConfigError
from Hilbert import PROBE, SIGNAL, ModeSpace, partial_trace
from Multimode import (Grid1D, MultimodeParams, propagate_multimode, multimode_fidelity, phase_map,
        marginals, calibrate_g0)
from Statistics import getStatistics
from SweepWorker import run_points
from Tomography import PhaseSpaceGrid, wigner
from Utils import SCENARIOS, config_or, get_config
from Visual import Visual

logger = logging.getLogger(__name__)


##
## Run configuration
##

@dataclass(frozen=True)
class LossConfig(object):
    a: float = 0.0
    p: float = 0.0
    s: float = 0.0


@dataclass(frozen=True)
class TruncationConfig(object):
    probe: typing.Optional[int] = None
    aux: typing.Optional[int] = None
    signal: typing.Optional[int] = None
    eps_trunc: typing.Optional[float] = None


@dataclass(frozen=True)
class SingleModeConfig(object):
    """! One propagation through the medium. z_end = 2 pi is one full cycle at g = 1. """
    alpha_p2: float = 0.6
    alpha_phase: float = 0.0
    g: float = 1.0
    g_phase: float = 0.0
    gammas: LossConfig = field(default_factory=LossConfig)
    z_end: float = 2.0 * math.pi
    samples: int = 65
    signal_photons: int = 1
    vacuum_branch: bool = True
    steps_per_cycle: typing.Optional[int] = None
    step_audit: typing.Optional[bool] = None
    truncation: TruncationConfig = field(default_factory=TruncationConfig)

    def __post_init__(self):
        if self.alpha_p2 < 0:
            raise ConfigError("singlemode.alpha_p2 must be nonnegative, got %s" % (self.alpha_p2,))
        if self.z_end < 0:
            raise ConfigError("singlemode.z_end must be nonnegative, got %s" % (self.z_end,))
        if self.samples < 2:
            raise ConfigError("singlemode.samples must be at least 2, got %s" % (self.samples,))
        if self.signal_photons not in (0, 1):
            raise ConfigError("singlemode.signal_photons must be 0 or 1, got %s" % (self.signal_photons,))


@dataclass(frozen=True)
class DetectionConfig(object):
    mode: str = "ideal"
    eta: typing.Optional[float] = None
    calibrate_displacement: bool = True
    threshold: typing.Optional[float] = None
    thresholds: typing.Tuple[float, ...] = (0.05, 0.01)


@dataclass(frozen=True)
class WignerConfig(object):
    min: typing.Optional[float] = None
    max: typing.Optional[float] = None
    points: typing.Optional[int] = None
    work_dim: typing.Optional[int] = None


@dataclass(frozen=True)
class SweepConfig(object):
    alpha_p2: typing.Tuple[float, ...] = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0)

    def __post_init__(self):
        if not self.alpha_p2:
            raise ConfigError("sweep.alpha_p2 must not be empty")
        if any(a <= 0 for a in self.alpha_p2):
            raise ConfigError("sweep.alpha_p2 entries must be positive")


@dataclass(frozen=True)
class CalibrationConfig(object):
    scan: typing.Optional[typing.Tuple[float, ...]] = None
    xatol: float = 1e-3

    def __post_init__(self):
        if self.scan is not None and len(self.scan) != 3:
            raise ConfigError("multimode.calibration.scan must be [g_min, g_max, points]")


@dataclass(frozen=True)
class MultimodeConfig(object):
    """! Wave-packet run. A missing g0 is calibrated to the first fidelity maximum. """
    g0: typing.Optional[float] = None
    sigma: float = 0.2
    tau: float = 0.6
    tau_p: typing.Optional[float] = None
    tau_s: typing.Optional[float] = None
    v_a: float = 1.0
    v_p: float = 1.0
    v_s: float = 1.0
    z_p0: float = -5.0
    z_s0: float = -5.0
    medium: typing.Optional[typing.Tuple[float, ...]] = None
    domain: typing.Optional[typing.Tuple[float, ...]] = None
    points: typing.Optional[int] = None
    cfl: typing.Optional[float] = None
    dt: typing.Optional[float] = None
    scheme: typing.Optional[str] = None
    absorber_width: typing.Optional[float] = None
    absorber_rate: typing.Optional[float] = None
    t_end: float = 16.0
    sample_times: typing.Tuple[float, ...] = ()
    phase_floor: typing.Optional[float] = None
    norm_tolerance: typing.Optional[float] = None
    binary_dump: bool = False
    calibration: CalibrationConfig = field(default_factory=CalibrationConfig)

    def __post_init__(self):
        if self.domain is not None and len(self.domain) != 2:
            raise ConfigError("multimode.domain must be [z_min, z_max]")
        if self.medium is not None and len(self.medium) != 2:
            raise ConfigError("multimode.medium must be [z_in, z_out]")


@dataclass(frozen=True)
class RunConfig(object):
    scenario: typing.Optional[str] = None
    output: typing.Optional[str] = None
    singlemode: SingleModeConfig = field(default_factory=SingleModeConfig)
    detection: DetectionConfig = field(default_factory=DetectionConfig)
    wigner: WignerConfig = field(default_factory=WignerConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    multimode: MultimodeConfig = field(default_factory=MultimodeConfig)

    def __post_init__(self):
        if self.scenario is not None and self.scenario not in SCENARIOS:
            raise ConfigError("scenario must be one of %s, got '%s'" % (SCENARIOS, self.scenario))


def _join(path, name):
    return "%s.%s" % (path, name) if path else name


def _coerce(value, hint, path):
    origin = typing.get_origin(hint)
    if origin is typing.Union:
        if value is None:
            return None
        inner = [a for a in typing.get_args(hint) if a is not type(None)][0]
        return _coerce(value, inner, path)
    if origin is tuple:
        if not isinstance(value, list):
            raise ConfigError("%s: expected a list, got %s" % (path, json.dumps(value)))
        item = typing.get_args(hint)[0]
        return tuple(_coerce(v, item, "%s[%i]" % (path, i)) for i, v in enumerate(value))
    if is_dataclass(hint):
        return parse_section(hint, value, path)
    if hint is bool:
        if not isinstance(value, bool):
            raise ConfigError("%s: expected true or false, got %s" % (path, json.dumps(value)))
        return value
    if hint is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError("%s: expected an integer, got %s" % (path, json.dumps(value)))
        return value
    if hint is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError("%s: expected a number, got %s" % (path, json.dumps(value)))
        return float(value)
    if hint is str:
        if not isinstance(value, str):
            raise ConfigError("%s: expected a string, got %s" % (path, json.dumps(value)))
        return value
    raise ConfigError("%s: unsupported field type %s" % (path, hint))


def parse_section(cls, data, path=""):
    """! Builds the dataclass 'cls' from a JSON object, rejecting unknown keys
    """
    if not isinstance(data, dict):
        raise ConfigError("%s: expected an object" % (path or "<root>",))
    hints = typing.get_type_hints(cls)
    known = set(f.name for f in fields(cls))
    for key in data:
        if key not in known:
            raise ConfigError("Unknown configuration key '%s'" % (_join(path, key),))
    return cls(**{key: _coerce(value, hints[key], _join(path, key)) for key, value in data.items()})


def _reject_duplicates(pairs):
    out = {}
    for key, value in pairs:
        if key in out:
            raise ConfigError("Duplicate configuration key '%s'" % (key,))
        out[key] = value
    return out


def parse_run_config(text, source="<config>"):
    """! Parses the JSON text of a run configuration
    """
    try:
        data = json.loads(text, object_pairs_hook=_reject_duplicates)
    except json.JSONDecodeError as e:
        raise ConfigError("%s:%i:%i: %s" % (source, e.lineno, e.colno, e.msg))
    return parse_section(RunConfig, data)


def load_run_config(path):
    """! Reads and parses a run configuration file
    """
    try:
        with open(path) as f:
            text = f.read()
    except OSError as e:
        raise ConfigError("Cannot read configuration '%s': %s" % (path, e))
    return parse_run_config(text, path)


##
## Single-mode helpers
##

def _space(cfg):
    t = cfg.truncation
    return ModeSpace.standard(t.probe, t.aux, t.signal)


def _interaction(cfg):
    return InteractionParams(g=cfg.g * cmath.exp(1j * cfg.g_phase),
            gammas=(cfg.gammas.a, cfg.gammas.p, cfg.gammas.s), space=_space(cfg))


def _alpha(cfg, alpha_p2=None):
    alpha_p2 = cfg.alpha_p2 if alpha_p2 is None else alpha_p2
    return math.sqrt(alpha_p2) * cmath.exp(1j * cfg.alpha_phase)


def _model(det):
    if det.mode == "ideal":
        return BeamSplitterModel.ideal()
    if det.mode == "finite-eta":
        return BeamSplitterModel.finite(det.eta)
    raise ConfigError("detection.mode must be 'ideal' or 'finite-eta', got '%s'" % (det.mode,))


def lo_amplitude(alpha, params, z_end, det):
    """! Local-oscillator amplitude: the transmitted no-photon probe when calibrated
    """
    if det.calibrate_displacement:
        return alpha * math.exp(-0.5 * params.gamma(PROBE) * z_end)
    return alpha


def _propagate_branch(cfg, alpha, photons, sample_points=None):
    params = _interaction(cfg)
    rho0 = initial_state(alpha, photons, params.space, cfg.truncation.eps_trunc)
    return propagate(rho0, params, cfg.z_end, sample_points,
            steps_per_cycle=cfg.steps_per_cycle, audit=cfg.step_audit), params


def evaluate_point(point):
    """! Propagates both signal branches of one probe amplitude and evaluates detection
    @param point  (alpha_p2, SingleModeConfig, DetectionConfig)
    @return (DetectionReport, step statistics dict)
    """
    alpha_p2, cfg, det = point
    alpha = _alpha(cfg, alpha_p2)
    result, params = _propagate_branch(cfg, alpha, cfg.signal_photons)
    rho_t = result.final
    rho_vac = None
    if cfg.vacuum_branch and cfg.signal_photons == 1:
        rho_vac = _propagate_branch(cfg, alpha, 0)[0].final
    elif cfg.signal_photons == 0:
        rho_vac = rho_t
    report = detect(rho_t, alpha, det.threshold, _model(det), lo_amplitude(alpha, params, cfg.z_end, det), rho_vac)
    report = replace(report, probe_overlap=probe_overlap(rho_t, alpha, cfg.truncation.eps_trunc),
            probe_phase=probe_phase(rho_t), signal_occupation=result.observables[-1].n_signal)
    return report, result.step_stats.as_dict()


def _wigner_grid(wcfg):
    lo, hi, points = get_config("WIGNER_GRID")
    return PhaseSpaceGrid.uniform(lo if wcfg.min is None else wcfg.min, hi if wcfg.max is None else wcfg.max,
            points if wcfg.points is None else wcfg.points)


def _summary(wmap):
    return {"min": wmap.minimum(), "max": wmap.maximum(), "integral": wmap.integral(),
            "origin": wmap.value_at(0.0, 0.0)}


def _wigner_maps(config, result, alpha, lo, rho_vac, out, visual):
    """! Writes the signal, transmitted and detected Wigner maps of the final state
    """
    grid = _wigner_grid(config.wigner)
    model = _model(config.detection)
    rho_t = result.final
    states = {
        "signal": partial_trace(rho_t, [SIGNAL]),
        "transmitted": partial_trace(rho_t, [PROBE]),
        "detected": displaced_state(rho_t, lo, model),
    }
    if rho_vac is not None:
        states["detected_vacuum"] = displaced_state(rho_vac, lo, model)
    summaries = {}
    for name, state in states.items():
        wmap = wigner(state, grid, config.wigner.work_dim)
        path = os.path.join(out, "wigner_%s.csv" % (name,))
        Export.write_wigner_csv(path, wmap)
        summaries[name] = _summary(wmap)
        if visual is not None:
            visual.render(os.path.join(out, "wigner_%s.png" % (name,)), wmap.values)
    return summaries


##
## Scenarios
##

def run_singlemode(config, out, threads=1, visual=None):
    """! Observables along z, final Wigner maps and the detection report
    @return Summary dictionary, also written to report.json
    """
    cfg = config.singlemode
    det = config.detection
    alpha = _alpha(cfg)
    samples = list(np.linspace(0.0, cfg.z_end, cfg.samples))
    result, params = _propagate_branch(cfg, alpha, cfg.signal_photons, samples)
    rho_t = result.final
    rho_vac = None
    if cfg.signal_photons == 1 and cfg.vacuum_branch:
        rho_vac = _propagate_branch(cfg, alpha, 0)[0].final
    elif cfg.signal_photons == 0:
        rho_vac = rho_t
    lo = lo_amplitude(alpha, params, cfg.z_end, det)

    rho_t.check()
    report = detect(rho_t, alpha, det.threshold, _model(det), lo, rho_vac)
    report = replace(report, probe_overlap=probe_overlap(rho_t, alpha, cfg.truncation.eps_trunc),
            probe_phase=probe_phase(rho_t), signal_occupation=result.observables[-1].n_signal)

    Export.write_csv(os.path.join(out, "observables.csv"), ObservableRecord.HEADER,
            (r.as_row() for r in result.observables))
    wigners = _wigner_maps(config, result, alpha, lo, rho_vac, out, visual)

    summary = {
        "report": report.as_dict(),
        "efficiency_ratio": efficiency_ratio(report) if report.p_err_numeric > 0 else None,
        "cascade_efficiency_ratio": efficiency_ratio(report, cascade=True) if report.cascade_N else None,
        "step_stats": result.step_stats.as_dict(),
        "wigner": wigners,
        "z_end": cfg.z_end,
    }
    Export.write_json(os.path.join(out, "report.json"), summary)
    return summary


def run_wigner(config, out, threads=1, visual=None):
    """! Final-state Wigner maps only
    """
    cfg = config.singlemode
    alpha = _alpha(cfg)
    result, params = _propagate_branch(cfg, alpha, cfg.signal_photons)
    rho_vac = None
    if cfg.signal_photons == 1 and cfg.vacuum_branch:
        rho_vac = _propagate_branch(cfg, alpha, 0)[0].final
    lo = lo_amplitude(alpha, params, cfg.z_end, config.detection)
    summary = {"wigner": _wigner_maps(config, result, alpha, lo, rho_vac, out, visual)}
    Export.write_json(os.path.join(out, "wigner.json"), summary)
    return summary


SWEEP_HEADER = ("alpha_p2", "p_err_numeric", "p_err_analytic", "fidelity", "n_cascade", "n_cascade_analytic",
        "p_click_vacuum", "probe_overlap", "signal_occupation")


def _sweep_reports(config, threads):
    points = [(a, config.singlemode, config.detection) for a in config.sweep.alpha_p2]
    logger.info("Evaluating %i sweep points on %i worker(s)" % (len(points), max(1, threads)))
    return run_points(evaluate_point, points, threads)


def run_sweep(config, out, threads=1, visual=None):
    """! Detection error and fidelity over the probe intensity
    """
    results = _sweep_reports(config, threads)
    rows = []
    for alpha_p2, (report, stats) in zip(config.sweep.alpha_p2, results):
        rows.append((alpha_p2, report.p_err_numeric, report.p_err_analytic, report.signal_fidelity,
                report.cascade_N, report.cascade_N_analytic, report.p_click_vacuum,
                report.probe_overlap, report.signal_occupation))
    Export.write_csv(os.path.join(out, "sweep.csv"), SWEEP_HEADER, rows)
    best = min(range(len(rows)), key=lambda i: rows[i][1])
    summary = {"minimum_p_err": {"alpha_p2": rows[best][0], "p_err_numeric": rows[best][1],
               "fidelity": rows[best][3]},
               "points": [dict(zip(SWEEP_HEADER, r)) for r in rows]}
    Export.write_json(os.path.join(out, "sweep.json"), summary)
    return summary


CASCADE_HEADER = ("alpha_p2", "threshold", "p_err_numeric", "n_numeric", "p_err_numeric_n",
        "p_err_analytic", "n_analytic", "p_err_analytic_n", "fidelity", "efficiency_ratio_n")


def run_cascade(config, out, threads=1, visual=None):
    """! Cascade sizes for every probe intensity and target error
    """
    results = _sweep_reports(config, threads)
    rows = []
    for alpha_p2, (report, stats) in zip(config.sweep.alpha_p2, results):
        for threshold in config.detection.thresholds:
            p, pa, f = report.p_err_numeric, report.p_err_analytic, report.signal_fidelity
            n = cascade_or_none(p, threshold)
            na = cascade_or_none(pa, threshold)
            rows.append((alpha_p2, threshold, p, n, None if n is None else p ** n, pa, na,
                    None if na is None else pa ** na, f, None if n is None else (f / p) ** n))
    Export.write_csv(os.path.join(out, "cascade.csv"), CASCADE_HEADER, rows)
    summary = {"rows": [dict(zip(CASCADE_HEADER, r)) for r in rows]}
    Export.write_json(os.path.join(out, "cascade.json"), summary)
    return summary


def multimode_params(mcfg, g0=None):
    """! MultimodeParams of a configuration section
    """
    domain = config_or(mcfg.domain, "MM_DOMAIN")
    grid = Grid1D(domain[0], domain[1], config_or(mcfg.points, "MM_GRID_POINTS"))
    return MultimodeParams(g0=mcfg.g0 if g0 is None else g0, sigma=mcfg.sigma, tau=mcfg.tau,
            v_a=mcfg.v_a, v_p=mcfg.v_p, v_s=mcfg.v_s, z_p0=mcfg.z_p0, z_s0=mcfg.z_s0,
            tau_p=mcfg.tau_p, tau_s=mcfg.tau_s, medium=mcfg.medium, grid=grid,
            cfl=mcfg.cfl, dt=mcfg.dt, scheme=mcfg.scheme,
            absorber_width=mcfg.absorber_width, absorber_rate=mcfg.absorber_rate)


def run_multimode(config, out, threads=1, visual=None):
    """! Wave-packet propagation, snapshots, phase maps and the multimode fidelity
    """
    mcfg = config.multimode
    calibration = None
    if mcfg.g0 is None:
        params = multimode_params(mcfg, g0=0.0)
        g0, f_cal, scan = calibrate_g0(params, mcfg.t_end, mcfg.calibration.scan, mcfg.calibration.xatol)
        calibration = {"g0": g0, "fidelity": f_cal, "scan": [{"g0": g, "fidelity": f} for g, f in scan]}
        params = replace(params, g0=g0)
    else:
        params = multimode_params(mcfg)

    logger.info("Multimode run: g0 %.5f, %i points, dt %.4e, t_end %.3f"
            % (params.g0, params.grid.n, params.time_step, mcfg.t_end))
    run = propagate_multimode(params, mcfg.t_end, mcfg.sample_times, norm_tolerance=mcfg.norm_tolerance)

    time_rows = []
    for k, (t, (phi_ps, phi_a)) in enumerate(zip(run.times, run.fields)):
        Export.write_snapshot_csv(os.path.join(out, "snapshot_%03i.csv" % (k,)), phi_ps)
        Export.write_auxiliary_csv(os.path.join(out, "auxiliary_%03i.csv" % (k,)), phi_a)
        phases = phase_map(phi_ps, mcfg.phase_floor)
        Export.write_phase_csv(os.path.join(out, "phase_%03i.csv" % (k,)), params.grid, phases)
        if mcfg.binary_dump:
            Export.write_qndm(os.path.join(out, "snapshot_%03i.qndm" % (k,)), params.grid, t,
                    [phi_ps.values, phi_a.values])
        if visual is not None:
            visual.render(os.path.join(out, "phase_%03i.png" % (k,)), phases, -math.pi, math.pi)
        time_rows.append((k, t, run.norms[k], run.aux_weights[k], run.absorbed[k]))
    Export.write_csv(os.path.join(out, "times.csv"), ("index", "t", "norm", "auxiliary_weight", "absorbed"), time_rows)

    final_ps = run.final[0]
    p_probe, p_signal = marginals(final_ps)
    Export.write_csv(os.path.join(out, "marginals.csv"), ("z", "probe", "signal"),
            zip(params.grid.points, p_probe, p_signal))

    fidelity = multimode_fidelity(final_ps, params, mcfg.t_end)
    summary = {
        "fidelity": fidelity,
        "g0": params.g0,
        "calibration": calibration,
        "norm_drift": run.max_norm_drift,
        "steps": run.steps,
        "dt": run.dt,
        "grid": {"z_min": params.grid.z_min, "z_max": params.grid.z_max, "n": params.grid.n},
        "medium": list(params.medium),
        "scheme": params.scheme,
        "absorber": {"width": params.absorber_width, "rate": params.absorber_rate},
        "absorbed": run.absorbed[-1],
        "t_end": mcfg.t_end,
        "auxiliary_weight_final": run.aux_weights[-1],
    }
    Export.write_json(os.path.join(out, "fidelity.json"), summary)
    logger.info("Multimode fidelity %.6f, norm drift %.3e" % (fidelity, run.max_norm_drift))
    return summary


RUNNERS = {
    "singlemode": run_singlemode,
    "sweep": run_sweep,
    "wigner": run_wigner,
    "cascade": run_cascade,
    "multimode": run_multimode,
}


def run_scenario(scenario, config, out, threads=1, render=None):
    """! Runs one scenario and writes its files into 'out'
    @return The scenario summary
    """
    if config.scenario is not None and config.scenario != scenario:
        raise ConfigError("The configuration is for scenario '%s', not '%s'" % (config.scenario, scenario))
    if threads < 1:
        raise ConfigError("--threads must be at least 1, got %s" % (threads,))
    Export.ensure_dir(out)
    render = config_or(render, "RENDER_PNG")
    visual = None
    if render:
        visual = Visual()
        visual.start()
    try:
        summary = RUNNERS[scenario](config, out, threads, visual)
    finally:
        if visual is not None:
            visual.finish()
    getStatistics().logStatistics()
    return summary
