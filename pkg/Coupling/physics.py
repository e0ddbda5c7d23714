"""
Atom cloud sampling and atom-cavity coupling statistics.

Per-atom weight: Ω_i = Ω_max · ½ · exp(-ρ_i²/r_c²). The ½ is the standing-wave
cos² averaged over the axial motion; the transverse factor is frozen over a
pulse and only changes through ballistic motion (``coupling_drift``).
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import constants

from qndsim.exceptions import InvalidParameterError

logger = logging.getLogger(__name__)

RB87_MASS = 86.909180527 * constants.atomic_mass


def thermal_velocity(temperature, mass=RB87_MASS):
    """Per-axis Maxwell-Boltzmann velocity spread sqrt(k_B T / m)."""
    if temperature < 0:
        raise InvalidParameterError(f"temperature must be non-negative, got {temperature}")
    return math.sqrt(constants.k * temperature / mass)


@dataclass(frozen=True)
class Atom:
    x: float
    y: float
    vx: float
    vy: float
    z: float
    vz: float

    @property
    def rho(self):
        return math.hypot(self.x, self.y)


@dataclass(frozen=True, eq=False)
class AtomEnsemble:
    """
    A materialized cloud. Positions and velocities are numpy arrays with one
    entry per atom; x is the drift (gravity) axis, z the cavity axis.
    """
    n_atoms: int
    cloud_radius: float
    temperature: float
    drift_velocity: float
    expansion_velocity: float
    x: np.ndarray
    y: np.ndarray
    vx: np.ndarray
    vy: np.ndarray
    z: np.ndarray
    vz: np.ndarray

    def __post_init__(self):
        if self.n_atoms < 1:
            raise InvalidParameterError(f"n_atoms must be at least 1, got {self.n_atoms}")
        if self.cloud_radius <= 0:
            raise InvalidParameterError(f"cloud radius must be positive, got {self.cloud_radius}")
        for name in ('x', 'y', 'vx', 'vy', 'z', 'vz'):
            if len(getattr(self, name)) != self.n_atoms:
                raise InvalidParameterError(f"'{name}' has {len(getattr(self, name))} entries, expected {self.n_atoms}")
            getattr(self, name).setflags(write=False)

    @property
    def rho(self):
        return np.hypot(self.x, self.y)

    def atom(self, index):
        return Atom(
            x=float(self.x[index]), y=float(self.y[index]),
            vx=float(self.vx[index]), vy=float(self.vy[index]),
            z=float(self.z[index]), vz=float(self.vz[index]),
        )

    def __len__(self):
        return self.n_atoms

    def __eq__(self, other):
        if not isinstance(other, AtomEnsemble):
            return NotImplemented
        scalars = ('n_atoms', 'cloud_radius', 'temperature', 'drift_velocity', 'expansion_velocity')
        arrays = ('x', 'y', 'vx', 'vy', 'z', 'vz')
        return (all(getattr(self, f) == getattr(other, f) for f in scalars)
                and all(np.array_equal(getattr(self, f), getattr(other, f)) for f in arrays))


@dataclass(frozen=True)
class CouplingStats:
    omega_mean: float
    omega_sq_mean: float
    reduction_factor: float
    effective_projection_variance: float


def coupling_reduction_factor(r_a, r_c):
    """Ω_max / Ω̄ = 2((r_a/r_c)² + 1) for a Gaussian cloud in a TEM00 standing wave."""
    if r_c <= 0:
        raise InvalidParameterError(f"mode radius must be positive, got {r_c}")
    if r_a < 0:
        raise InvalidParameterError(f"cloud radius must be non-negative, got {r_a}")
    return 2 * ((r_a / r_c) ** 2 + 1)


def effective_projection_variance(N, omega_max, r_a, r_c):
    """Projection noise of Σ Ω_i j_zi: (N/16) Ω_max² / (2(r_a/r_c)² + 1)."""
    if N < 1:
        raise InvalidParameterError(f"atom number must be at least 1, got {N}")
    if r_c <= 0:
        raise InvalidParameterError(f"mode radius must be positive, got {r_c}")
    return (N / 16) * omega_max ** 2 / (2 * (r_a / r_c) ** 2 + 1)


def coupling_stats(N, omega_max, r_a, r_c):
    factor = coupling_reduction_factor(r_a, r_c)
    return CouplingStats(
        omega_mean=omega_max / factor,
        omega_sq_mean=omega_max ** 2 / (4 * (2 * (r_a / r_c) ** 2 + 1)),
        reduction_factor=factor,
        effective_projection_variance=effective_projection_variance(N, omega_max, r_a, r_c),
    )


def prior_variance_factor(r_a, r_c):
    """
    Projection variance of the coupling-weighted J_z in units of N/4, i.e.
    effective_projection_variance / (Ω̄² N/4) = (1 + a²)² / (1 + 2a²), a = r_a/r_c.
    """
    a_sq = (r_a / r_c) ** 2
    return (1 + a_sq) ** 2 / (1 + 2 * a_sq)


def sample_ensemble(N, r_a, temperature, seed, drift_velocity=0.0, wavelength=780.241e-9):
    """
    Draw ``N`` atoms: transverse density ∝ exp(-ρ²/r_a²), Maxwell-Boltzmann
    velocities, axial positions uniform over one standing-wave period λ/2.
    ``drift_velocity`` is added along x.
    """
    if N < 1:
        raise InvalidParameterError(f"atom number must be at least 1, got {N}")
    if r_a <= 0:
        raise InvalidParameterError(f"cloud radius must be positive, got {r_a}")
    rng = np.random.default_rng(seed)
    sigma_v = thermal_velocity(temperature)
    sigma_r = r_a / math.sqrt(2)
    x = rng.normal(0.0, sigma_r, N)
    y = rng.normal(0.0, sigma_r, N)
    vx = rng.normal(0.0, sigma_v, N) + drift_velocity
    vy = rng.normal(0.0, sigma_v, N)
    z = rng.uniform(0.0, wavelength / 2, N)
    vz = rng.normal(0.0, sigma_v, N)
    logger.debug("sampled %d atoms (r_a=%.3g m, T=%.3g K, seed=%s)", N, r_a, temperature, seed)
    return AtomEnsemble(
        n_atoms=int(N),
        cloud_radius=r_a,
        temperature=temperature,
        drift_velocity=drift_velocity,
        expansion_velocity=sigma_v,
        x=x, y=y, vx=vx, vy=vy, z=z, vz=vz,
    )


def coupling_weight(atom, omega_max, r_c, wavelength=None):
    """
    Ω_i for an ``Atom`` (scalar) or an ``AtomEnsemble`` (array).

    With ``wavelength`` given the axial cos²(kz) is kept instead of its mean ½.
    """
    transverse = np.exp(-(atom.x ** 2 + atom.y ** 2) / r_c ** 2)
    if wavelength is None:
        axial = 0.5
    else:
        axial = np.cos(2 * math.pi * atom.z / wavelength) ** 2
    return omega_max * axial * transverse


def coupling_drift(atom, dt, r_c):
    """Ω_i(t+dt)/Ω_i(t) - 1 after ballistic transverse motion over ``dt``."""
    if dt < 0:
        raise InvalidParameterError(f"dt must be non-negative, got {dt}")
    x_new = atom.x + atom.vx * dt
    y_new = atom.y + atom.vy * dt
    exponent = -((x_new ** 2 + y_new ** 2) - (atom.x ** 2 + atom.y ** 2)) / r_c ** 2
    return np.expm1(exponent)


def empirical_coupling_stats(ensemble, omega_max, r_c, n_atoms=None):
    """
    Sample estimates from a materialized cloud, scaled to ``n_atoms``
    (default: the sample size), with their standard errors.

    Returns a dict with omega_mean, omega_mean_se, projection_variance and
    projection_variance_se; the projection variance is Var(Σ Ω_i j_i) for
    independent j_i = ±½, i.e. N·mean(Ω_i²)/4.
    """
    weights = coupling_weight(ensemble, omega_max, r_c)
    m = weights.size
    n = m if n_atoms is None else n_atoms
    squares = weights ** 2
    return {
        'omega_mean': float(weights.mean()),
        'omega_mean_se': float(weights.std(ddof=1) / math.sqrt(m)),
        'projection_variance': float(n * squares.mean() / 4),
        'projection_variance_se': float(n * squares.std(ddof=1) / 4 / math.sqrt(m)),
    }
