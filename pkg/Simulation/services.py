"""
Computations behind the CLI commands and HTTP endpoints. Every table is a
``tablib.Dataset`` so it renders to CSV and JSON the same way.
"""
import itertools
import logging
import math

import tablib

from Backaction.physics import (
    antisqueezing_slope, atom_number_scaling,
    metrological_squeezing_db, scattering_g_sq, scattering_probability, squeezing_headroom,
)
from Cavity.physics import LOCK_BEAM_OFFSET, PhotonDrive, photon_drive, stark_shift, time_averaged_photons
from MonteCarlo.engine import (
    fit_antisqueezing_slope, readout_noise_floor, run_ensemble, slice_schedule,
)
from Sequence.physics import (
    NoiseCurveParams, echo_contrast, no_echo_sequence, rotation_noise_curve,
)

logger = logging.getLogger(__name__)


def squeezing_per_atom(cfg, power_nw=None):
    """q/N summed over the squeezing pulses: Σ n̄_k Ω̄² τ_k τ_cav/√2."""
    n_ss = cfg.n_ss(power_nw)
    tau = cfg.derived.tau_cav
    total = 0.0
    for _, _, seg in cfg.sequence.squeezing_pulses():
        if seg.duration > 0:
            n_bar = time_averaged_photons(n_ss, seg.duration, tau)
            total += antisqueezing_slope(n_bar, cfg.omega_bar, seg.duration, tau)
    return total


def pulse_scattering(cfg, readout=False):
    """Per-atom scattering of the squeezing pulses, or of the readout pulse."""
    probe = cfg.probe()
    g_sq = scattering_g_sq(cfg.cavity.g_max, cfg.coupling().reduction_factor)
    if readout:
        pulses = [cfg.sequence.readout_pulse()] if cfg.sequence.readout_pulse() else []
    else:
        pulses = cfg.sequence.squeezing_pulses()
    total = 0.0
    for _, _, seg in pulses:
        if seg.duration > 0:
            drive = photon_drive(probe, cfg.derived, seg.duration)
            total += scattering_probability(
                drive.n_bar, g_sq, probe.linewidth_gamma, probe.delta_2, seg.duration).p_scatter
    return total


def contrasts(cfg, p_scatter=None):
    """Echo contrast of the configured sequence and of the 20 us no-echo control."""
    ensemble = cfg.ensemble_sample()
    drive = PhotonDrive(n_ss=cfg.n_ss(), n_bar=0.0)
    p = pulse_scattering(cfg) if p_scatter is None else p_scatter
    common = dict(tau_cav=cfg.derived.tau_cav, omega_max=cfg.omega_max, r_c=cfg.r_c)
    echo = echo_contrast(ensemble, drive, cfg.sequence, p_scatter=p, **common)
    control = echo_contrast(ensemble, drive, no_echo_sequence(), require_echo=False, **common)
    return echo, control


def derive_table(cfg):
    """Quantity/value/unit rows: cavity, coupling, calibration and squeezing budget."""
    derived = cfg.derived
    probe = cfg.probe()
    stats = cfg.coupling()
    n = cfg.n_atoms
    n_ss = cfg.n_ss()
    q = squeezing_per_atom(cfg) * n
    p_prep = pulse_scattering(cfg)
    p_read = pulse_scattering(cfg, readout=True)
    echo, control = contrasts(cfg, p_prep)
    g_sq_mean = cfg.cavity.g_max ** 2 / stats.reduction_factor
    lock_n = cfg.n_ss(cfg.data['lock_power_nw'])
    first_pulse = cfg.sequence.squeezing_pulses()[0][2]

    rows = [
        ('fsr', derived.fsr, 'Hz'),
        ('hwhm', derived.hwhm, 'Hz'),
        ('tau_cav', derived.tau_cav * 1e6, 'us'),
        ('kappa', derived.kappa, 'rad/s'),
        ('omega_max', stats.omega_mean * stats.reduction_factor / (2 * math.pi), 'Hz'),
        ('reduction_factor', stats.reduction_factor, ''),
        ('omega_bar', stats.omega_mean, 'rad/s'),
        ('omega_sq_mean', stats.omega_sq_mean, 'rad^2/s^2'),
        ('effective_projection_variance', stats.effective_projection_variance, 'rad^2/s^2'),
        ('prior_variance_factor', cfg.prior_factor, ''),
        ('eta_in', probe.eta_in, ''),
        ('n_ss', n_ss, 'photons'),
        ('n_bar_pulse', photon_drive(probe, derived, first_pulse.duration).n_bar, 'photons'),
        ('q_total', q, ''),
        ('conditional_var_norm', 1 / (1 + q), ''),
        ('antisqueezed_var_norm', 1 + q, ''),
        ('p_scatter_prep', p_prep, ''),
        ('p_scatter_readout', p_read, ''),
        ('stark_shift_upper', stark_shift(n_ss, g_sq_mean, probe.delta_2) * 1e6, 'uK'),
        ('stark_shift_lower', stark_shift(n_ss, g_sq_mean, probe.delta_1) * 1e6, 'uK'),
        ('stark_shift_lock', stark_shift(lock_n, g_sq_mean, probe.delta_2 - LOCK_BEAM_OFFSET) * 1e6, 'uK'),
        ('echo_contrast', echo, ''),
        ('no_echo_contrast', control, ''),
        ('squeezing_headroom', squeezing_headroom(
            n, q, p_prep, cfg.data['probe']['detection_efficiency']), 'dB'),
    ]
    data = tablib.Dataset(headers=['quantity', 'value', 'unit'])
    for row in rows:
        data.append(row)
    return data


def noise_curve_params(cfg):
    """Normalized V_z, V_y after both squeezing pulses and the configured floor."""
    q = squeezing_per_atom(cfg) * cfg.n_atoms
    xi = cfg.prior_factor
    return NoiseCurveParams(
        var_z=xi / (1 + xi * q),
        var_y=xi + q,
        v_floor=cfg.model['noise_floor'],
    )


def rotation_noise_table(cfg, thetas=None):
    """V(θ) normalized to N/4 and in rad² of probe phase per slice."""
    thetas = cfg.data['curves']['thetas_rad'] if thetas is None else thetas
    params = noise_curve_params(cfg)
    scale = (cfg.n_atoms / 4) * (cfg.omega_bar * cfg.derived.tau_cav) ** 2
    data = tablib.Dataset(headers=['theta_rad', 'variance_norm', 'variance_rad2'])
    for theta, v in rotation_noise_curve(params, thetas):
        data.append((theta, v, v * scale))
    return data


def antisqueezing_table(cfg):
    """
    Normalized antisqueezing 1 + slope·N for every configured power and N,
    with one η_in for all powers. Returns (rows, slopes).
    """
    curves = cfg.data['curves']
    tau = cfg.derived.tau_cav
    rows = tablib.Dataset(headers=['power_nw', 'n_atoms', 'n_bar', 'antisqueezing_norm'])
    slopes = tablib.Dataset(headers=['power_nw', 'slope', 'fit_slope', 'fit_slope_se', 'r_squared'])
    for power in curves['powers_nw']:
        slope = squeezing_per_atom(cfg, power)
        first = cfg.sequence.squeezing_pulses()[0][2]
        n_bar = time_averaged_photons(cfg.n_ss(power), first.duration, tau)
        values = []
        for n in curves['atom_numbers']:
            value = 1 + slope * n
            values.append(value)
            rows.append((power, n, n_bar, value))
        if len(curves['atom_numbers']) >= 2:
            fit = fit_antisqueezing_slope(curves['atom_numbers'], values)
        else:
            fit = {'slope': slope, 'slope_se': 0.0, 'r_squared': 1.0}
        slopes.append((power, slope, fit['slope'], fit['slope_se'], fit['r_squared']))
    return rows, slopes


def slope_ratio(slopes):
    """Highest-power slope over lowest-power slope."""
    ordered = sorted(zip(slopes['power_nw'], slopes['slope']))
    if len(ordered) < 2 or ordered[0][1] == 0:
        return None
    return ordered[-1][1] / ordered[0][1]


def antisqueezing_mc(cfg, shots, master_seed, workers=1):
    """
    Monte Carlo antisqueezing at θ = π/2: normalized outcome variance minus
    the window noise floor, fitted against N for each power.
    """
    curves = cfg.data['curves']
    rows = tablib.Dataset(headers=['power_nw', 'n_atoms', 'variance_norm', 'variance_norm_se'])
    slopes = tablib.Dataset(headers=['power_nw', 'slope', 'slope_se', 'r_squared'])
    for power in curves['powers_nw']:
        values = []
        for n in curves['atom_numbers']:
            shot_cfg = cfg.shot_config(theta=math.pi / 2, n_atoms=n, power_nw=power)
            stats = run_ensemble(shot_cfg, shots, master_seed, workers=workers)
            norm = shot_cfg.phase_scale ** 2 * shot_cfg.projection_variance
            floor = readout_noise_floor(shot_cfg, slice_schedule(shot_cfg)) / shot_cfg.projection_variance
            value = stats.variance_of_outcome / norm - floor
            values.append(value)
            rows.append((power, n, value, stats.variance_se / norm))
            logger.debug("mc antisqueezing P=%.3g nW N=%d: %.4g", power, n, value)
        fit = fit_antisqueezing_slope(curves['atom_numbers'], values)
        slopes.append((power, fit['slope'], fit['slope_se'], fit['r_squared']))
    return rows, slopes


def headroom_table(cfg):
    """Projected squeezing (dB) versus atom number at the configured slope."""
    slope = squeezing_per_atom(cfg)
    p_prep = pulse_scattering(cfg)
    data = tablib.Dataset(headers=['n_atoms', 'squeezing_db'])
    for n, db in atom_number_scaling(
            cfg.data['curves']['atom_numbers'], slope, p_prep, cfg.data['probe']['detection_efficiency']):
        data.append((n, db))
    return data


def mc_run(cfg, shots=None, master_seed=None, workers=None, theta=None):
    mc = cfg.mc
    shot_cfg = cfg.shot_config(theta=theta)
    return run_ensemble(
        shot_cfg,
        mc['shots'] if shots is None else shots,
        mc['master_seed'] if master_seed is None else master_seed,
        workers=mc['workers'] if workers is None else workers,
        bins=mc['bins'],
    )


def sweep_point_summary(cfg):
    n = cfg.n_atoms
    q = squeezing_per_atom(cfg) * n
    p_prep = pulse_scattering(cfg)
    echo, _ = contrasts(cfg, p_prep)
    first = cfg.sequence.squeezing_pulses()[0][2]
    cond = 1 / (1 + q)
    return {
        'n_bar': time_averaged_photons(cfg.n_ss(), first.duration, cfg.derived.tau_cav),
        'q_total': q,
        'conditional_var_norm': cond,
        'antisqueezed_var_norm': 1 + q,
        'p_scatter_prep': p_prep,
        'p_scatter_readout': pulse_scattering(cfg, readout=True),
        'contrast': echo,
        'metrological_db': metrological_squeezing_db(cond * n / 4, echo, n),
        'headroom_db': squeezing_headroom(n, q, p_prep, cfg.data['probe']['detection_efficiency']),
    }


def sweep_table(cfg):
    """
    One row per point of the cartesian product of ``cfg.data['sweep']``.
    Points inherit the resolved η_in; sweep ``probe.eta_in`` over "auto" to
    recalibrate per point.
    """
    sweep = cfg.data['sweep']
    if not sweep:
        raise ValueError("config has no sweep section")
    paths = list(sweep)
    data = None
    for values in itertools.product(*(sweep[p] for p in paths)):
        overrides = dict(zip(paths, values))
        overrides['sweep'] = {}
        summary = sweep_point_summary(cfg.with_overrides(overrides))
        if data is None:
            data = tablib.Dataset(headers=paths + list(summary))
        data.append(list(values) + list(summary.values()))
        logger.debug("sweep point %s done", dict(zip(paths, values)))
    return data
