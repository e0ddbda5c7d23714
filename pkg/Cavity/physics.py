"""
Cavity and probe parameters and their closed-form derivations.

All angular frequencies are rad/s; conversion from Hz happens at the config
boundary (see ``Cavity.serializers``).
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import constants

from qndsim.exceptions import InvalidParameterError

logger = logging.getLogger(__name__)

# 87Rb ground-state hyperfine (clock) splitting
HYPERFINE_SPLITTING = 2 * math.pi * 6.834682610904e9

# Allowed mismatch between |delta_1 - delta_2| and the clock splitting
DETUNING_TOLERANCE = 2 * math.pi * 5e6

# Lock beam sits this far to the red of the probe
LOCK_BEAM_OFFSET = 2 * math.pi * 18.06e9


@dataclass(frozen=True)
class CavitySpec:
    """Cavity geometry. ``g_max`` is the antinode, on-axis coupling in rad/s."""
    length: float
    finesse: float
    mode_waist: float
    g_max: float

    def __post_init__(self):
        if self.length <= 0:
            raise InvalidParameterError(f"cavity length must be positive, got {self.length}")
        if self.finesse <= 1:
            raise InvalidParameterError(f"finesse must exceed 1, got {self.finesse}")
        if self.mode_waist <= 0:
            raise InvalidParameterError(f"mode waist must be positive, got {self.mode_waist}")
        if self.g_max < 0:
            raise InvalidParameterError(f"g_max must be non-negative, got {self.g_max}")


@dataclass(frozen=True)
class DerivedCavity:
    fsr: float
    hwhm: float
    tau_cav: float
    kappa: float


@dataclass(frozen=True)
class ProbeSpec:
    """
    Probe laser settings.

    delta_1/delta_2 are the signed detunings (rad/s) from the lower and upper
    clock states' optical transitions; linewidth_gamma is the natural
    linewidth Γ (rad/s) used for spontaneous scattering.
    """
    delta_1: float
    delta_2: float
    input_power: float
    wavelength: float
    eta_in: float = 0.35
    linewidth_gamma: float = 2 * math.pi * 6.0666e6

    def __post_init__(self):
        if self.delta_1 == 0 or self.delta_2 == 0:
            raise InvalidParameterError("probe detunings must be non-zero")
        if abs(abs(self.delta_1 - self.delta_2) - HYPERFINE_SPLITTING) > DETUNING_TOLERANCE:
            raise InvalidParameterError(
                "|delta_1 - delta_2| must equal the clock hyperfine splitting "
                f"(got {abs(self.delta_1 - self.delta_2) / (2 * math.pi):.6g} Hz)"
            )
        if self.input_power < 0:
            raise InvalidParameterError(f"input power must be non-negative, got {self.input_power}")
        if self.wavelength <= 0:
            raise InvalidParameterError(f"wavelength must be positive, got {self.wavelength}")
        if not 0 <= self.eta_in <= 1:
            raise InvalidParameterError(f"eta_in must lie in [0, 1], got {self.eta_in}")
        if self.linewidth_gamma <= 0:
            raise InvalidParameterError("natural linewidth must be positive")

    @classmethod
    def red_of_upper(cls, delta_2, **kwargs):
        """Probe tuned ``delta_2`` from the upper clock transition; delta_1 follows from the splitting."""
        return cls(delta_1=delta_2 - HYPERFINE_SPLITTING, delta_2=delta_2, **kwargs)


@dataclass(frozen=True)
class PhotonDrive:
    n_ss: float
    n_bar: float

    def __post_init__(self):
        if not 0 <= self.n_bar <= self.n_ss:
            raise InvalidParameterError(
                f"time-averaged photon number {self.n_bar} must lie in [0, n_ss={self.n_ss}]"
            )


def derive_cavity(spec):
    """FSR, HWHM linewidth, photon lifetime and angular HWHM of ``spec``."""
    if spec.length <= 0 or spec.finesse <= 1:
        raise InvalidParameterError("cavity length and finesse must be positive")
    fsr = constants.c / (2 * spec.length)
    hwhm = fsr / (2 * spec.finesse)
    kappa = 2 * math.pi * hwhm
    return DerivedCavity(fsr=fsr, hwhm=hwhm, tau_cav=1 / (2 * kappa), kappa=kappa)


def dispersive_shift_rate(g_max, delta_1, delta_2):
    """Ω_max = g²(1/Δ₂ − 1/Δ₁): phase per unit J_z per second per photon."""
    if delta_1 == 0 or delta_2 == 0:
        raise InvalidParameterError("detunings must be non-zero")
    return g_max ** 2 * (1 / delta_2 - 1 / delta_1)


def common_shift_rate(g_max, delta_1, delta_2):
    """Rate multiplying N/2 in the interaction; only adds an overall phase."""
    if delta_1 == 0 or delta_2 == 0:
        raise InvalidParameterError("detunings must be non-zero")
    return g_max ** 2 * (1 / delta_2 + 1 / delta_1)


def photon_energy(wavelength):
    return constants.hbar * 2 * math.pi * constants.c / wavelength


def steady_state_photons(probe, cav):
    """Intracavity photon number for a continuous probe at ``probe.input_power``."""
    if probe.input_power < 0:
        raise InvalidParameterError("input power must be non-negative")
    return probe.eta_in * probe.input_power / (photon_energy(probe.wavelength) * cav.kappa)


def buildup_fraction(pulse_duration, tau_cav):
    """
    Mean of (1 - exp(-t/(2 tau_cav)))² over [0, T], i.e. n̄/n_ss.

    Uses the closed form in x = T/(2 tau_cav); for tiny x the leading series
    x²/3 - x³/4 avoids cancellation.
    """
    if pulse_duration <= 0:
        raise InvalidParameterError(f"pulse duration must be positive, got {pulse_duration}")
    x = pulse_duration / (2 * tau_cav)
    if x < 1e-4:
        return x * x / 3 - x ** 3 / 4
    return 1 - (2 / x) * -np.expm1(-x) + (1 / (2 * x)) * -np.expm1(-2 * x)


def time_averaged_photons(n_ss, pulse_duration, tau_cav):
    return n_ss * float(buildup_fraction(pulse_duration, tau_cav))


def photons_between(n_ss, t_start, t_end, tau_cav):
    """∫ n(t) dt over [t_start, t_end] measured from probe turn-on."""
    if t_end <= t_start:
        return 0.0
    head = time_averaged_photons(n_ss, t_end, tau_cav) * t_end
    if t_start <= 0:
        return head
    return head - time_averaged_photons(n_ss, t_start, tau_cav) * t_start


def photon_drive(probe, cav, pulse_duration):
    n_ss = steady_state_photons(probe, cav)
    return PhotonDrive(n_ss=n_ss, n_bar=time_averaged_photons(n_ss, pulse_duration, cav.tau_cav))


def stark_shift(n, g_sq, detuning):
    """Light shift ħ·n·g²/Δ of one clock state, returned as a temperature (K)."""
    if detuning == 0:
        raise InvalidParameterError("detuning must be non-zero")
    return constants.hbar * n * g_sq / abs(detuning) / constants.k
