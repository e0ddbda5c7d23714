"""
Per-shot stochastic simulation of the squeezing protocol.

Each probe pulse is cut into photon-lifetime slices. In every slice the
probe measures the (coupling-weighted) J_z with J_z-equivalent noise
(N/4)/q_s, the Gaussian moments are conditioned on that record and the
conjugate J_y receives (N/4)·q_s of backaction. Summed over slices q_s equals
the leaky-cavity q of the pulse.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import partial

import numpy as np
import tablib
from scipy import stats
from scipy.spatial.transform import Rotation

from Backaction.physics import SpinMoments
from Cavity.physics import photons_between
from Sequence.physics import (
    MICROWAVE, PROBE_ON, difference_of_means, measurement_windows, rotate_moments, window_mean,
)
from qndsim.exceptions import InvalidParameterError, SequenceValidationError

logger = logging.getLogger(__name__)

GAUSSIAN = 'gaussian'
BINOMIAL = 'binomial'

SHOT_TABLE_HEADERS = ('shot', 'true_jz', 'cond_mean', 'cond_var', 'outcome', 'scattered')


@dataclass(frozen=True)
class ShotConfig:
    """
    Everything a shot needs, in SI units.

    ``scatter_rate`` is the per-atom scattering probability per intracavity
    photon-second (0 disables scattering). ``phase_per_atom`` is the
    atom-number phase per slice divided by N.
    """
    n_atoms: int
    n_ss: float
    omega_bar: float
    tau_cav: float
    sequence: object
    prior: str = GAUSSIAN
    prior_factor: float = 1.0
    scatter_rate: float = 0.0
    dead_time: float = 20e-6
    phase_per_atom: float = 0.0

    def __post_init__(self):
        if self.n_atoms < 1:
            raise InvalidParameterError(f"atom number must be at least 1, got {self.n_atoms}")
        if self.n_ss < 0:
            raise InvalidParameterError("photon number must be non-negative")
        if self.tau_cav <= 0:
            raise InvalidParameterError("tau_cav must be positive")
        if self.prior not in (GAUSSIAN, BINOMIAL):
            raise InvalidParameterError(f"unknown prior '{self.prior}'")
        if self.prior == BINOMIAL and self.prior_factor != 1.0:
            raise InvalidParameterError("the exact binomial prior needs uniform coupling")
        if self.scatter_rate < 0 or self.dead_time < 0:
            raise InvalidParameterError("scatter rate and dead time must be non-negative")
        if not self.sequence.squeezing_pulses():
            raise SequenceValidationError("sequence has no squeezing pulse")
        if self.sequence.readout_pulse() is None:
            raise SequenceValidationError("sequence has no readout pulse")
        for index, _, seg in self.sequence.probe_pulses():
            # one sample per slice, stamped at the slice midpoint
            if not any((a + b) / 2 >= self.dead_time for a, b in _slice_bounds(seg.duration, self.tau_cav)):
                raise SequenceValidationError(
                    f"probe pulse of {seg.duration * 1e6:.1f} us leaves no trace sample after the "
                    f"{self.dead_time * 1e6:.1f} us dead time", index=index)

    @property
    def projection_variance(self):
        return self.n_atoms / 4

    @property
    def prior_variance(self):
        return self.prior_factor * self.n_atoms / 4

    @property
    def phase_scale(self):
        """Probe phase per unit of J_z over one slice."""
        return self.omega_bar * self.tau_cav

    @property
    def offset(self):
        return self.phase_per_atom * self.n_atoms


@dataclass(frozen=True)
class SliceParams:
    q: float
    meas_noise_var: float
    phase_noise_sd: float
    phase_scale: float = 1.0
    offset: float = 0.0

    @classmethod
    def from_photons(cls, cfg, photon_seconds):
        """Slice carrying ∫n dt = ``photon_seconds``; dark slices have q = 0 and no noise."""
        q = cfg.n_atoms * cfg.omega_bar ** 2 * cfg.tau_cav * photon_seconds / math.sqrt(2)
        if q <= 0:
            return cls(0.0, 0.0, 0.0, cfg.phase_scale, cfg.offset)
        noise = cfg.projection_variance / q
        return cls(q, noise, abs(cfg.phase_scale) * math.sqrt(noise), cfg.phase_scale, cfg.offset)


@dataclass(frozen=True)
class ProbeStep:
    index: int
    start: float
    duration: float
    slices: tuple
    p_scatter: float
    readout: bool
    last_squeeze: bool

    @property
    def q_total(self):
        return sum(sp.q for _, sp in self.slices)


@dataclass(frozen=True)
class RotationStep:
    index: int
    angle: float
    axis_phase: float
    matrix: np.ndarray = field(compare=False, repr=False)


@dataclass(frozen=True, eq=False)
class ShotRecord:
    shot: int
    true_jz: float
    conditional_mean: float
    conditional_var: float
    phase_trace: tuple
    window_means: dict
    scattered_count: int
    final_outcome: float
    n_atoms: int

    @property
    def contrast_multiplier(self):
        return 1 - self.scattered_count / self.n_atoms

    def __eq__(self, other):
        if not isinstance(other, ShotRecord):
            return NotImplemented
        return (
            (self.shot, self.true_jz, self.conditional_mean, self.conditional_var,
             self.window_means, self.scattered_count, self.final_outcome)
            == (other.shot, other.true_jz, other.conditional_mean, other.conditional_var,
                other.window_means, other.scattered_count, other.final_outcome)
            and all(np.array_equal(a, b) for a, b in zip(self.phase_trace, other.phase_trace))
        )


@dataclass(frozen=True)
class EnsembleStats:
    shots: int
    seed: int
    variance_of_outcome: float
    variance_se: float
    variance_ci: tuple
    mean_outcome: float
    histogram: dict
    mean_conditional_var: float
    var_conditional_mean: float
    mean_contrast_multiplier: float
    model_variance: float
    records: tuple = field(default=(), repr=False)

    def to_dict(self):
        return {
            'shots': self.shots,
            'seed': self.seed,
            'variance_of_outcome': self.variance_of_outcome,
            'variance_se': self.variance_se,
            'variance_ci': list(self.variance_ci),
            'mean_outcome': self.mean_outcome,
            'histogram': self.histogram,
            'mean_conditional_var': self.mean_conditional_var,
            'var_conditional_mean': self.var_conditional_mean,
            'mean_contrast_multiplier': self.mean_contrast_multiplier,
            'model_variance': self.model_variance,
        }


def shot_rng(master_seed, shot_index):
    """Independent stream for one shot: SeedSequence(master_seed, spawn_key=(shot_index,))."""
    seq = np.random.SeedSequence(master_seed, spawn_key=(shot_index,))
    return np.random.Generator(np.random.PCG64(seq))


def draw_prior(rng, n_atoms, prior=GAUSSIAN, prior_factor=1.0, size=None):
    """J_z of an uncorrelated state: Normal(0, ξN/4) or Binomial(N, ½) - N/2."""
    if prior == BINOMIAL:
        return rng.binomial(n_atoms, 0.5, size) - n_atoms / 2
    return rng.normal(0.0, math.sqrt(prior_factor * n_atoms / 4), size)


def _slice_bounds(duration, tau):
    bounds = [0.0]
    while duration - bounds[-1] > 1e-9 * tau:
        bounds.append(min(bounds[-1] + tau, duration))
    return list(zip(bounds[:-1], bounds[1:]))


def slice_schedule(cfg):
    """Deterministic list of ProbeStep/RotationStep in sequence order."""
    steps = []
    last_squeeze = cfg.sequence.squeezing_pulses()[-1][0]
    for index, start, seg in cfg.sequence.timeline():
        if seg.kind == MICROWAVE:
            axis = np.array([math.cos(seg.axis_phase), math.sin(seg.axis_phase), 0.0])
            matrix = Rotation.from_rotvec(seg.rotation_angle * axis).as_matrix()
            steps.append(RotationStep(index, seg.rotation_angle, seg.axis_phase, matrix))
        elif seg.kind == PROBE_ON:
            slices = tuple(
                (start + (a + b) / 2,
                 SliceParams.from_photons(cfg, photons_between(cfg.n_ss, a, b, cfg.tau_cav)))
                for a, b in _slice_bounds(seg.duration, cfg.tau_cav)
            )
            photons = photons_between(cfg.n_ss, 0.0, seg.duration, cfg.tau_cav)
            p = cfg.scatter_rate * photons
            if p > 1:
                raise InvalidParameterError(
                    f"segment {index}: scattering probability {p:.3g} exceeds 1")
            step = ProbeStep(index, start, seg.duration, slices, p, seg.readout, index == last_squeeze)
            logger.debug("segment %d: %d slices, q=%.4g, p_scatter=%.3g",
                         index, len(slices), step.q_total, p)
            steps.append(step)
    return tuple(steps)


def slice_update(m, sp, true_jz, draw):
    """
    Condition ``m`` on one slice's measurement y = true_jz + ε,
    ε = sqrt(meas_noise_var)·draw, then add backaction to V_y.

    Returns the new moments and the measured phase scale·y + offset.
    """
    if sp.q == 0:
        return m, sp.phase_scale * true_jz + sp.offset
    y = true_jz + math.sqrt(sp.meas_noise_var) * draw
    s = m.var_z + sp.meas_noise_var
    innovation = y - m.mean_z
    var_z = 1 / (1 / m.var_z + 1 / sp.meas_noise_var)
    updated = SpinMoments(
        j_length=m.j_length,
        mean_x=m.mean_x,
        mean_y=m.mean_y + m.cov_yz / s * innovation,
        mean_z=m.mean_z + m.var_z / s * innovation,
        # meas_noise_var·q = N/4
        var_y=m.var_y - m.cov_yz ** 2 / s + sp.meas_noise_var * sp.q,
        var_z=var_z,
        contrast=m.contrast,
        cov_yz=m.cov_yz * sp.meas_noise_var / s,
    )
    return updated, sp.phase_scale * y + sp.offset


def run_shot(cfg, master_seed, shot_index=0, schedule=None):
    """Simulate one shot; identical (master_seed, shot_index) give identical records."""
    schedule = slice_schedule(cfg) if schedule is None else schedule
    rng = shot_rng(master_seed, shot_index)
    n = cfg.n_atoms
    true = np.array([n / 2, draw_prior(rng, n, cfg.prior, cfg.prior_factor),
                     draw_prior(rng, n, cfg.prior, cfg.prior_factor)], dtype=float)
    m = SpinMoments.coherent(n, cfg.prior_factor)
    windows = measurement_windows(cfg.sequence, cfg.dead_time)
    probe_windows = dict(zip((i for i, _, _ in cfg.sequence.squeezing_pulses()), windows['squeeze']))
    times, phases, window_means = [], [], {}
    scattered = 0
    snapshot = None

    for step in schedule:
        if isinstance(step, RotationStep):
            m = rotate_moments(m, step.angle, step.axis_phase)
            true = step.matrix @ true
            continue
        draws = rng.standard_normal((len(step.slices), 2))
        first = len(times)
        for (t, sp), (eps, kick) in zip(step.slices, draws):
            m, phase = slice_update(m, sp, true[2], eps)
            true[1] += math.sqrt(cfg.projection_variance * sp.q) * kick
            times.append(t)
            phases.append(phase)
        window = windows['readout'] if step.readout else probe_windows[step.index]
        window_means[step.index] = window_mean(
            (np.array(times[first:]), np.array(phases[first:])), window)
        if step.last_squeeze:
            snapshot = (float(true[2]), float(m.mean_z), float(m.var_z))
        if step.p_scatter > 0 and not step.readout:
            k = int(rng.binomial(n - scattered, step.p_scatter))
            scattered += k
            true[2] += math.sqrt(k / 4) * rng.standard_normal()

    trace = (np.array(times), np.array(phases))
    outcome = difference_of_means(trace, windows['squeeze'][-1], windows['readout'])
    return ShotRecord(
        shot=shot_index,
        true_jz=snapshot[0],
        conditional_mean=snapshot[1],
        conditional_var=snapshot[2],
        phase_trace=trace,
        window_means=window_means,
        scattered_count=scattered,
        final_outcome=outcome,
        n_atoms=n,
    )


def readout_noise_floor(cfg, schedule=None):
    """
    Variance (J_z² units) the slice measurement noise adds to the
    difference of the last squeezing window and the readout window.
    """
    schedule = slice_schedule(cfg) if schedule is None else schedule
    windows = measurement_windows(cfg.sequence, cfg.dead_time)
    total = 0.0
    for step in schedule:
        if not isinstance(step, ProbeStep) or not (step.readout or step.last_squeeze):
            continue
        start, end = windows['readout'] if step.readout else windows['squeeze'][-1]
        inside = [sp.meas_noise_var for t, sp in step.slices if start <= t < end]
        if inside:
            total += sum(inside) / len(inside) ** 2
    return total


def outcome_variance_model(cfg, schedule=None):
    """
    Exact variance (rad²) of the difference-of-means outcome of ``run_shot``.

    Propagates the unconditional covariance of the true (J_y, J_z) through
    backaction, scattering and rotations, keeps a frozen copy of J_z from the
    last squeezing window, and adds the window noise floor. At a final
    rotation θ about x this is
    (1-cosθ)²·Var(J_z) + sin²θ·Var(J_y) + cos²θ·(scattering after the window) + floor.
    """
    schedule = slice_schedule(cfg) if schedule is None else schedule
    projection = cfg.projection_variance
    prior = cfg.prior_variance
    # index 0: J_y, 1: J_z, 2: J_z frozen at the last squeezing window
    cov = np.diag([prior, prior, 0.0])
    unscattered = float(cfg.n_atoms)
    for step in schedule:
        if isinstance(step, RotationStep):
            block = np.eye(3)
            block[:2, :2] = step.matrix[1:, 1:]
            cov = block @ cov @ block.T
            continue
        cov[0, 0] += projection * step.q_total
        if step.last_squeeze:
            cov[2, :] = cov[1, :]
            cov[:, 2] = cov[:, 1]
        if not step.readout:
            # only atoms that have not scattered yet can scatter
            cov[1, 1] += unscattered * step.p_scatter / 4
            unscattered *= 1 - step.p_scatter
    variance = cov[1, 1] + cov[2, 2] - 2 * cov[1, 2]
    return cfg.phase_scale ** 2 * (variance + readout_noise_floor(cfg, schedule))


def fit_antisqueezing_slope(atom_numbers, normalized_variances):
    """Least-squares slope of normalized variance versus N, with its error and R²."""
    if len(atom_numbers) < 2:
        raise InvalidParameterError("need at least two atom numbers for a slope")
    fit = stats.linregress(atom_numbers, normalized_variances)
    return {
        'slope': float(fit.slope),
        'slope_se': float(fit.stderr) if len(atom_numbers) > 2 else 0.0,
        'intercept': float(fit.intercept),
        'r_squared': float(fit.rvalue ** 2),
    }


def variance_interval(values, confidence=0.95):
    """Unbiased variance with its standard error and χ² confidence interval."""
    n = len(values)
    s2 = float(np.var(values, ddof=1))
    dof = n - 1
    alpha = 1 - confidence
    lower = dof * s2 / stats.chi2.ppf(1 - alpha / 2, dof)
    upper = dof * s2 / stats.chi2.ppf(alpha / 2, dof)
    return s2, s2 * math.sqrt(2 / dof), (float(lower), float(upper))


def outcome_histogram(values, bins='fd'):
    counts, edges = np.histogram(values, bins=bins)
    if len(counts) > len(values) / 2:
        logger.warning("histogram has %d bins for %d shots (fewer than 2 shots per bin)",
                       len(counts), len(values))
    return {'edges': edges.tolist(), 'counts': counts.tolist()}


def run_ensemble(cfg, n_shots, master_seed, workers=1, bins='fd'):
    """
    Run ``n_shots`` shots and summarize them. Shot i uses stream
    (master_seed, i); results do not depend on ``workers``.
    """
    if n_shots < 2:
        raise InvalidParameterError(f"an ensemble needs at least 2 shots, got {n_shots}")
    schedule = slice_schedule(cfg)
    simulate = partial(run_shot, cfg, master_seed, schedule=schedule)
    logger.info("running %d shots (seed=%s, workers=%d)", n_shots, master_seed, workers)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = tuple(pool.map(simulate, range(n_shots)))
    else:
        records = tuple(map(simulate, range(n_shots)))

    outcomes = np.array([r.final_outcome for r in records])
    cond_means = np.array([r.conditional_mean for r in records])
    variance, se, ci = variance_interval(outcomes)
    return EnsembleStats(
        shots=n_shots,
        seed=master_seed,
        variance_of_outcome=variance,
        variance_se=se,
        variance_ci=ci,
        mean_outcome=float(outcomes.mean()),
        histogram=outcome_histogram(outcomes, bins),
        mean_conditional_var=float(np.mean([r.conditional_var for r in records])),
        var_conditional_mean=float(np.var(cond_means, ddof=1)),
        mean_contrast_multiplier=float(np.mean([r.contrast_multiplier for r in records])),
        model_variance=outcome_variance_model(cfg, schedule),
        records=records,
    )


def shot_table(stats_or_records):
    """Per-shot rows as a tablib Dataset with SHOT_TABLE_HEADERS."""
    records = getattr(stats_or_records, 'records', stats_or_records)
    data = tablib.Dataset(headers=SHOT_TABLE_HEADERS)
    for r in records:
        data.append((r.shot, float(r.true_jz), float(r.conditional_mean), float(r.conditional_var),
                     float(r.final_outcome), int(r.scattered_count)))
    return data
