"""
Closed-form QND measurement model: phase imprint, conditional squeezing,
backaction antisqueezing, spontaneous-emission penalty and squeezing metrics.

Variances are in units of J_z² (projection noise of a coherent state is N/4).
"""
import logging
import math
import warnings
from dataclasses import dataclass, replace

from qndsim.exceptions import InvalidParameterError, ShortTimeValidityWarning

logger = logging.getLogger(__name__)

SHORT_TIME_LIMIT = 0.1
SHORT = 'short'
LEAKY = 'leaky'


@dataclass(frozen=True)
class SpinMoments:
    """
    Gaussian summary of the collective pseudospin in the frame where the mean
    spin points along x. ``cov_yz`` is the J_y/J_z cross-covariance.
    """
    j_length: float
    mean_x: float
    mean_y: float
    mean_z: float
    var_y: float
    var_z: float
    contrast: float = 1.0
    cov_yz: float = 0.0

    def __post_init__(self):
        if self.var_y <= 0 or self.var_z <= 0:
            raise InvalidParameterError("spin variances must be positive")
        if not 0 <= self.contrast <= 1:
            raise InvalidParameterError(f"contrast must lie in [0, 1], got {self.contrast}")

    @classmethod
    def coherent(cls, N, prior_factor=1.0):
        """Coherent spin state along x; ``prior_factor`` scales both transverse variances."""
        if N < 1:
            raise InvalidParameterError(f"atom number must be at least 1, got {N}")
        return cls(
            j_length=N / 2, mean_x=N / 2, mean_y=0.0, mean_z=0.0,
            var_y=prior_factor * N / 4, var_z=prior_factor * N / 4,
        )

    @property
    def n_atoms(self):
        return 2 * self.j_length

    def with_contrast(self, contrast):
        return replace(self, contrast=contrast, mean_x=contrast * self.j_length)


@dataclass(frozen=True)
class ScatteringReport:
    p_scatter: float
    expected_scattered: float
    added_phase_variance: float
    contrast_multiplier: float


def probe_phase(j_z, omega_bar, t):
    """Δφ = J_z Ω̄ t."""
    if t < 0:
        raise InvalidParameterError(f"interaction time must be non-negative, got {t}")
    return j_z * omega_bar * t


def squeezing_parameter(N, n, omega, t, tau_cav=None, mode=LEAKY):
    """
    The q in (ΔJ_z)² = (N/4)/(1+q).

    short: q = N n Ω² t²/2 (n intracavity photons, t ≪ τ_cav);
    leaky: q = N n̄ Ω² t τ_cav/√2 (n̄ time-averaged photons).
    """
    if t < 0:
        raise InvalidParameterError(f"interaction time must be non-negative, got {t}")
    if n < 0:
        raise InvalidParameterError(f"photon number must be non-negative, got {n}")
    if mode == SHORT:
        if n * omega ** 2 * t ** 2 > SHORT_TIME_LIMIT:
            message = (f"short-time formula used with nΩ²t² = {n * omega ** 2 * t ** 2:.3g} "
                       f"> {SHORT_TIME_LIMIT}")
            logger.warning(message)
            warnings.warn(message, ShortTimeValidityWarning, stacklevel=3)
        return N * n * omega ** 2 * t ** 2 / 2
    if mode == LEAKY:
        if tau_cav is None or tau_cav <= 0:
            raise InvalidParameterError("leaky-cavity mode needs a positive tau_cav")
        return N * n * omega ** 2 * t * tau_cav / math.sqrt(2)
    raise InvalidParameterError(f"unknown mode '{mode}' (expected '{SHORT}' or '{LEAKY}')")


def conditional_variance(N, n, omega, t, tau_cav=None, mode=LEAKY, prior_variance=None):
    """
    Variance of J_z conditioned on the probe phase record.

    With a prior other than N/4 the measurement precision N·q/(N/4) is added
    to the prior precision, which reduces to the closed forms for the default.
    """
    q = squeezing_parameter(N, n, omega, t, tau_cav, mode)
    projection = N / 4
    prior = projection if prior_variance is None else prior_variance
    return prior / (1 + q * prior / projection)


def antisqueezed_variance(N, n_bar, omega, t, tau_cav, prior_variance=None):
    """(ΔJ_y)² = (N/4)(1 + N n̄ Ω² t τ_cav/√2)."""
    if t < 0:
        raise InvalidParameterError(f"interaction time must be non-negative, got {t}")
    q = squeezing_parameter(N, n_bar, omega, t, tau_cav, LEAKY)
    projection = N / 4
    prior = projection if prior_variance is None else prior_variance
    return prior + projection * q


def antisqueezing_slope(n_bar, omega, t, tau_cav):
    """d[(ΔJ_y)²/(N/4)]/dN = n̄ Ω² t τ_cav/√2."""
    return n_bar * omega ** 2 * t * tau_cav / math.sqrt(2)


def scattering_g_sq(g_max, reduction_factor, upper_population=0.5):
    """
    Coupling-averaged g² seen by the scattering channel at Δ₂: the cloud mean
    g_max²/reduction_factor weighted by the upper clock state's population.
    """
    return upper_population * g_max ** 2 / reduction_factor


def scattering_probability(n_bar, omega_weight_g_sq, gamma, delta, t, N=1, omega_bar=0.0):
    """
    Far-detuned spontaneous scattering per atom, p = n̄ g² γ t / δ².

    The scattered atoms' phase contribution cannot be subtracted shot by shot;
    it adds N·p·(Ω̄t)²/4 to the phase variance.
    """
    if gamma <= 0:
        raise InvalidParameterError("natural linewidth must be positive")
    if abs(delta) < 10 * gamma:
        raise InvalidParameterError(
            f"scattering model needs |delta| >> gamma (|delta|/gamma = {abs(delta) / gamma:.3g})"
        )
    if n_bar < 0 or t < 0:
        raise InvalidParameterError("photon number and duration must be non-negative")
    p = n_bar * omega_weight_g_sq * gamma * t / delta ** 2
    if p > 1:
        raise InvalidParameterError(f"scattering probability {p:.3g} exceeds 1; model not valid")
    return ScatteringReport(
        p_scatter=p,
        expected_scattered=N * p,
        added_phase_variance=N * p * (omega_bar * t) ** 2 / 4,
        contrast_multiplier=1 - p,
    )


def metrological_squeezing_db(var_z, contrast, N):
    """10 log10[(var_z/(N/4)) / contrast²]; negative means squeezed."""
    if var_z <= 0:
        raise InvalidParameterError("variance must be positive")
    if not 0 < contrast <= 1:
        raise InvalidParameterError(f"contrast must lie in (0, 1], got {contrast}")
    return 10 * math.log10((var_z / (N / 4)) / contrast ** 2)


def squeezing_headroom(N, q_total, p_scatter=0.0, detection_efficiency=1.0, contrast=1.0):
    """
    Metrological squeezing reachable when the probe is read out at
    ``detection_efficiency`` of the shot-noise limit and the only loss is
    spontaneous scattering (its unaccounted N·p/4 adds to the variance).
    """
    if not 0 < detection_efficiency <= 1:
        raise InvalidParameterError("detection efficiency must lie in (0, 1]")
    projection = N / 4
    var_z = projection / (1 + detection_efficiency * q_total) + projection * p_scatter
    return metrological_squeezing_db(var_z, contrast, N)


def atom_number_scaling(atom_numbers, slope, p_scatter=0.0, detection_efficiency=1.0):
    """Projected squeezing (dB) for each N at fixed per-atom squeezing slope q/N."""
    return [
        (N, squeezing_headroom(N, slope * N, p_scatter, detection_efficiency))
        for N in atom_numbers
    ]
