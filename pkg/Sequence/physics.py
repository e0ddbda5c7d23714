"""
Spin-echo pulse sequences and Gaussian spin-moment transformations.

Microwave pulses are ideal instantaneous rotations; their durations only
advance the clock.
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.transform import Rotation

from Backaction.physics import SpinMoments
from Cavity.physics import time_averaged_photons
from Coupling.physics import coupling_weight, coupling_drift
from qndsim.exceptions import InvalidParameterError, SequenceValidationError

logger = logging.getLogger(__name__)

PROBE_ON = 'probe_on'
PROBE_OFF = 'probe_off'
MICROWAVE = 'microwave'
KINDS = (PROBE_ON, PROBE_OFF, MICROWAVE)

# Atoms leave the cavity mode after a few ms
TRANSIT_LIMIT = 3e-3

ANGLE_TOLERANCE = 1e-9


def is_pi(angle):
    return abs(math.remainder(angle - math.pi, 2 * math.pi)) < ANGLE_TOLERANCE


@dataclass(frozen=True)
class PulseSegment:
    kind: str
    duration: float
    rotation_angle: float = None
    axis_phase: float = None
    readout: bool = False

    @classmethod
    def probe(cls, duration, readout=False):
        return cls(PROBE_ON, duration, readout=readout)

    @classmethod
    def dark(cls, duration):
        return cls(PROBE_OFF, duration)

    @classmethod
    def microwave(cls, duration, angle, axis_phase=0.0):
        return cls(MICROWAVE, duration, rotation_angle=angle, axis_phase=axis_phase)


@dataclass(frozen=True)
class PulseSequence:
    segments: tuple
    transit_limit: float = TRANSIT_LIMIT
    well_formed: bool = field(default=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, 'segments', tuple(self.segments))
        self.validate()
        object.__setattr__(self, 'well_formed', True)

    def validate(self):
        readouts = []
        previous = None
        for index, seg in enumerate(self.segments):
            if seg.kind not in KINDS:
                raise SequenceValidationError(f"unknown kind '{seg.kind}'", index)
            if seg.duration < 0:
                raise SequenceValidationError("duration must be non-negative", index)
            has_rotation = seg.rotation_angle is not None and seg.axis_phase is not None
            if seg.kind == MICROWAVE and not has_rotation:
                raise SequenceValidationError("microwave segment needs rotation angle and axis phase", index)
            if seg.kind != MICROWAVE and (seg.rotation_angle is not None or seg.axis_phase is not None):
                raise SequenceValidationError("rotation fields are only allowed on microwave segments", index)
            if seg.readout:
                if seg.kind != PROBE_ON:
                    raise SequenceValidationError("only a probe_on segment can be the readout", index)
                readouts.append(index)
            if previous is not None and previous.kind == PROBE_ON:
                if seg.kind == PROBE_ON:
                    raise SequenceValidationError("probe_on segments must be separated", index)
                if seg.kind == MICROWAVE:
                    raise SequenceValidationError(
                        "microwave pulse inside a probe-on window (needs a probe_off first)", index)
            previous = seg
        if len(readouts) > 1:
            raise SequenceValidationError("more than one readout segment", readouts[1])
        if readouts:
            later = [i for i, s in enumerate(self.segments) if s.kind == PROBE_ON and i > readouts[0]]
            if later:
                raise SequenceValidationError("readout must be the last probe_on segment", readouts[0])
        if self.total_duration > self.transit_limit:
            raise SequenceValidationError(
                f"total duration {self.total_duration * 1e6:.1f} us exceeds the transit limit "
                f"{self.transit_limit * 1e6:.1f} us"
            )

    @property
    def total_duration(self):
        return sum(seg.duration for seg in self.segments)

    def timeline(self):
        """(index, start time, segment) for every segment."""
        t = 0.0
        for index, seg in enumerate(self.segments):
            yield index, t, seg
            t += seg.duration

    def probe_pulses(self):
        return [(i, start, seg) for i, start, seg in self.timeline() if seg.kind == PROBE_ON]

    def squeezing_pulses(self):
        return [(i, start, seg) for i, start, seg in self.probe_pulses() if not seg.readout]

    def readout_pulse(self):
        for item in self.probe_pulses():
            if item[2].readout:
                return item
        return None

    def has_echo(self):
        """True when a π pulse separates two squeezing pulses."""
        pulses = self.squeezing_pulses()
        if len(pulses) < 2:
            return False
        first, last = pulses[0][0], pulses[-1][0]
        return any(seg.kind == MICROWAVE and is_pi(seg.rotation_angle)
                   for seg in self.segments[first + 1:last])

    def final_rotation_index(self):
        """Index of the last microwave between the last squeezing pulse and the readout, or None."""
        readout = self.readout_pulse()
        stop = readout[0] if readout else len(self.segments)
        last_squeeze = self.squeezing_pulses()[-1][0] if self.squeezing_pulses() else -1
        candidates = [i for i in range(last_squeeze + 1, stop) if self.segments[i].kind == MICROWAVE]
        return candidates[-1] if candidates else None

    def with_final_rotation(self, theta, axis_phase=0.0, tau_pi=None):
        """Replace the angle of the last microwave before the readout."""
        index = self.final_rotation_index()
        if index is None:
            raise SequenceValidationError("no final microwave rotation to adjust")
        old = self.segments[index]
        duration = old.duration if tau_pi is None else abs(theta) / math.pi * tau_pi
        segments = list(self.segments)
        segments[index] = PulseSegment.microwave(duration, theta, axis_phase)
        return PulseSequence(tuple(segments), self.transit_limit)


def echo_sequence(tau_sq=60e-6, tau_off=60e-6, tau_pi=50e-6, theta=0.0, tau_meas=200e-6, axis_phase=0.0):
    """Squeeze, echo π, squeeze, final rotation θ, then the destructive readout."""
    return PulseSequence((
        PulseSegment.probe(tau_sq),
        PulseSegment.dark(tau_off),
        PulseSegment.microwave(tau_pi, math.pi),
        PulseSegment.probe(tau_sq),
        PulseSegment.dark(tau_off),
        PulseSegment.microwave(abs(theta) / math.pi * tau_pi, theta, axis_phase),
        PulseSegment.probe(tau_meas, readout=True),
    ))


def no_echo_sequence(tau_pulse=20e-6, tau_off=60e-6, tau_pi=50e-6, theta=0.0, tau_meas=200e-6, axis_phase=0.0):
    """One short probe pulse without spin echo: the dephasing control."""
    return PulseSequence((
        PulseSegment.probe(tau_pulse),
        PulseSegment.dark(tau_off),
        PulseSegment.microwave(abs(theta) / math.pi * tau_pi, theta, axis_phase),
        PulseSegment.probe(tau_meas, readout=True),
    ))


def rotate_moments(m, theta, axis_phase=0.0):
    """
    Rotate the spin by ``theta`` about the equatorial axis at ``axis_phase``
    (0 = the mean-spin x axis). Means rotate as a vector; the transverse
    covariance rotates as a quadratic form. Contrast is unchanged.
    """
    axis = np.array([math.cos(axis_phase), math.sin(axis_phase), 0.0])
    rot = Rotation.from_rotvec(theta * axis).as_matrix()
    mean = rot @ np.array([m.mean_x, m.mean_y, m.mean_z])
    cov = np.array([
        [0.0, 0.0, 0.0],
        [0.0, m.var_y, m.cov_yz],
        [0.0, m.cov_yz, m.var_z],
    ])
    cov = rot @ cov @ rot.T
    return SpinMoments(
        j_length=m.j_length,
        mean_x=float(mean[0]), mean_y=float(mean[1]), mean_z=float(mean[2]),
        var_y=float(cov[1, 1]), var_z=float(cov[2, 2]),
        contrast=m.contrast, cov_yz=float(cov[1, 2]),
    )


@dataclass(frozen=True)
class NoiseCurveParams:
    """Ellipse variances entering V(θ); ``v_floor`` is the no-atom noise floor."""
    var_z: float
    var_y: float
    v_floor: float = 0.0


def rotation_noise_curve(params, thetas):
    """V(θ) = V_z cos²θ + V_y sin²θ + V_floor for each θ."""
    return [
        (theta, params.var_z * math.cos(theta) ** 2 + params.var_y * math.sin(theta) ** 2 + params.v_floor)
        for theta in thetas
    ]


def _accumulated_phases(ensemble, n_ss, seq, tau_cav, omega_max, r_c):
    base = coupling_weight(ensemble, omega_max, r_c)
    phase = np.zeros(ensemble.n_atoms)
    sign = 1.0
    pulses = {i for i, _, _ in seq.squeezing_pulses()}
    for index, start, seg in seq.timeline():
        if seg.kind == MICROWAVE and is_pi(seg.rotation_angle):
            sign = -sign
        if index not in pulses or seg.duration == 0:
            continue
        n_bar = time_averaged_photons(n_ss, seg.duration, tau_cav)
        omega_t = base * (1 + coupling_drift(ensemble, start + seg.duration / 2, r_c))
        phase += sign * n_bar * omega_t * seg.duration
    return phase


def echo_contrast(ensemble, drive, seq, *, tau_cav, omega_max, r_c, p_scatter=0.0, require_echo=True):
    """
    Length of the coupling-weighted collective spin after the squeezing
    pulses, relative to its initial length.

    Each atom picks up a differential Stark phase n̄_k Ω_i(t_k) τ_k per pulse,
    with the sign flipped by every π pulse and Ω_i re-evaluated at the pulse
    centre after ballistic motion. Readout weights are |Ω_i| at readout time.
    """
    if require_echo and not seq.has_echo():
        raise SequenceValidationError("sequence has no echo π pulse between squeezing pulses")
    if not 0 <= p_scatter <= 1:
        raise InvalidParameterError(f"scattering probability must lie in [0, 1], got {p_scatter}")
    phase = _accumulated_phases(ensemble, drive.n_ss, seq, tau_cav, omega_max, r_c)
    readout = seq.readout_pulse()
    t_read = readout[1] if readout else seq.total_duration
    weights = np.abs(coupling_weight(ensemble, omega_max, r_c)
                     * (1 + coupling_drift(ensemble, t_read, r_c)))
    total = weights.sum()
    if total == 0:
        raise InvalidParameterError("no atom couples to the cavity mode")
    coherence = abs(np.sum(weights * np.exp(1j * phase))) / total
    return float(coherence * (1 - p_scatter))


def window_mean(trace, window):
    times, phases = trace
    start, end = window
    mask = (times >= start) & (times < end)
    if not mask.any():
        raise InvalidParameterError(f"window [{start:.3g}, {end:.3g}) s contains no samples")
    return float(phases[mask].mean())


def as_trace(trace):
    """Accept (times, phases) arrays or a list of (time, phase) pairs."""
    if isinstance(trace, tuple) and len(trace) == 2 and np.ndim(trace[0]) == 1:
        return np.asarray(trace[0], dtype=float), np.asarray(trace[1], dtype=float)
    points = np.asarray(trace, dtype=float).reshape(-1, 2)
    return points[:, 0], points[:, 1]


def difference_of_means(trace, window_a, window_b):
    """mean(window_b) - mean(window_a) of a phase trace."""
    samples = as_trace(trace)
    return window_mean(samples, window_b) - window_mean(samples, window_a)


def atom_number_readout(phase_before_echo, phase_after_echo, phase_per_atom=None):
    """
    Average the two squeezing-pulse phases: J_z flips sign across the π pulse
    and cancels, leaving the atom-number term. Divided by ``phase_per_atom``
    when given.
    """
    common = (phase_before_echo + phase_after_echo) / 2
    if phase_per_atom is None:
        return common
    if phase_per_atom == 0:
        raise InvalidParameterError("phase per atom must be non-zero")
    return common / phase_per_atom


def measurement_windows(seq, dead_time):
    """
    Averaging windows that skip the first ``dead_time`` of every probe pulse.

    Returns {'squeeze': [(start, end), ...], 'readout': (start, end) or None}.
    """
    def window(start, seg):
        if seg.duration <= dead_time:
            raise SequenceValidationError(
                f"probe pulse of {seg.duration * 1e6:.1f} us is shorter than the dead time")
        return (start + dead_time, start + seg.duration)

    readout = seq.readout_pulse()
    return {
        'squeeze': [window(start, seg) for _, start, seg in seq.squeezing_pulses()],
        'readout': window(readout[1], readout[2]) if readout else None,
    }
