"""Domain types, bath coefficients and the phase-encoded input state.

Conventions used throughout the package:

* gamma = 1 by default, so times are reported as gamma*t, spectral widths as
  lambda/gamma and temperatures as kT/omega0.
* The qubit basis is ordered (|e>, |g>): index 0 is the excited state.
* Bloch vector: z = rho_ee - rho_gg, x + i*y = 2*rho_eg.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "DomainError",
    "SingularityError",
    "IntegrationError",
    "ConfigError",
    "ReservoirSpec",
    "QubitState",
    "BathCoefficients",
    "PhaseScenario",
    "mean_photon_number",
    "bath_coefficients",
    "prepare_output_state",
    "bloch_vector",
    "state_from_bloch",
    "SIGMA_PLUS",
    "SIGMA_MINUS",
]


class DomainError(ValueError):
    """Input outside the domain of a function."""


class SingularityError(ArithmeticError):
    """A formula hit a removable or genuine singularity it cannot resolve."""


class IntegrationError(RuntimeError):
    """Numerical integration produced an unphysical state."""


class ConfigError(ValueError):
    """Invalid sweep or run configuration."""


# sigma_+ = |e><g|, sigma_- = |g><e| in the (|e>, |g>) basis
SIGMA_PLUS = np.array([[0, 1], [0, 0]], dtype=complex)
SIGMA_MINUS = np.array([[0, 0], [1, 0]], dtype=complex)
SIGMA_PLUS.setflags(write=False)
SIGMA_MINUS.setflags(write=False)


def _require_finite(name, value):
    if not np.all(np.isfinite(value)):
        raise DomainError(f"{name} must be finite, got {value!r}")


def mean_photon_number(kT_over_omega):
    """Bose-Einstein occupation 1/(exp(omega/kT) - 1) at resonance.

    Works element-wise on arrays. ``kT_over_omega = 0`` gives exactly 0 (the
    continuous limit) instead of evaluating ``1/(exp(inf) - 1)``.
    """
    kt = np.asarray(kT_over_omega, dtype=float)
    _require_finite("kT_over_omega", kt)
    if np.any(kt < 0):
        raise DomainError(f"kT_over_omega must be >= 0, got {kT_over_omega!r}")
    with np.errstate(divide="ignore", over="ignore"):
        n = np.where(kt > 0, 1.0 / np.expm1(1.0 / np.where(kt > 0, kt, 1.0)), 0.0)
    return float(n) if n.ndim == 0 else n


@dataclass(frozen=True)
class BathCoefficients:
    """Effective thermal occupation ``N`` and two-photon correlation ``M``."""

    N: float
    M: complex


def bath_coefficients(r, theta, n) -> BathCoefficients:
    """Squeezed-thermal bath coefficients.

    N = n (cosh^2 r + sinh^2 r) + sinh^2 r
    M = -cosh r sinh r exp(i theta) (2n + 1)
    """
    for name, v in (("r", r), ("theta", theta), ("n", n)):
        _require_finite(name, v)
    if np.any(np.asarray(r) < 0) or np.any(np.asarray(n) < 0):
        raise DomainError("r and n must be non-negative")
    ch, sh = np.cosh(r), np.sinh(r)
    N = n * (ch**2 + sh**2) + sh**2
    M = -ch * sh * np.exp(1j * np.asarray(theta)) * (2 * n + 1)
    if np.ndim(N) == 0:
        return BathCoefficients(float(N), complex(M))
    return BathCoefficients(N, M)


@dataclass(frozen=True)
class ReservoirSpec:
    """Bath and coupling parameters.

    ``theta`` is stored as given; code that relies on periodicity compares it
    modulo 2*pi.
    """

    gamma: float = 1.0
    lambda_over_gamma: float = 0.1
    r: float = 0.0
    theta: float = 0.0
    kT_over_omega: float = 0.0

    def __post_init__(self):
        for name in ("gamma", "lambda_over_gamma", "r", "theta", "kT_over_omega"):
            _require_finite(name, getattr(self, name))
        if self.gamma <= 0:
            raise DomainError(f"gamma must be > 0, got {self.gamma}")
        if self.lambda_over_gamma <= 0:
            raise DomainError(f"lambda_over_gamma must be > 0, got {self.lambda_over_gamma}")
        if self.r < 0:
            raise DomainError(f"r must be >= 0, got {self.r}")
        if self.kT_over_omega < 0:
            raise DomainError(f"kT_over_omega must be >= 0, got {self.kT_over_omega}")

    @property
    def lam(self) -> float:
        """Spectral width in absolute units (lambda_over_gamma * gamma)."""
        return self.lambda_over_gamma * self.gamma

    @property
    def n(self) -> float:
        return mean_photon_number(self.kT_over_omega)

    @property
    def coefficients(self) -> BathCoefficients:
        return bath_coefficients(self.r, self.theta, self.n)


@dataclass(frozen=True)
class PhaseScenario:
    """The phase to be estimated."""

    phi: float

    def __post_init__(self):
        _require_finite("phi", self.phi)


def _state_violation(rho):
    """Largest violation of the density-matrix invariants (0 when valid)."""
    rho = np.asarray(rho)
    herm = np.max(np.abs(rho - np.swapaxes(rho, -1, -2).conj()))
    trace = np.max(np.abs(np.trace(rho, axis1=-2, axis2=-1) - 1))
    ev = np.linalg.eigvalsh(0.5 * (rho + np.swapaxes(rho, -1, -2).conj()))
    pos = max(float(np.max(-ev)), float(np.max(ev - 1)), 0.0)
    return float(herm), float(trace), pos


@dataclass(frozen=True, eq=False)
class QubitState:
    """A 2x2 density matrix in the (|e>, |g>) basis.

    The matrix is copied and made read-only. ``atol`` sets the tolerance of
    the Hermiticity and trace checks; eigenvalues may stray outside [0, 1]
    by ``max(atol, 1e-9)``.
    """

    rho: np.ndarray
    atol: float = field(default=1e-12, repr=False)

    def __post_init__(self):
        rho = np.array(self.rho, dtype=complex)
        if rho.shape != (2, 2):
            raise DomainError(f"qubit state must be 2x2, got shape {rho.shape}")
        _require_finite("rho", rho)
        herm, trace, pos = _state_violation(rho)
        if herm > self.atol:
            raise DomainError(f"rho is not Hermitian (deviation {herm:.3g})")
        if trace > self.atol:
            raise DomainError(f"trace(rho) != 1 (deviation {trace:.3g})")
        if pos > max(self.atol, 1e-9):
            raise DomainError(f"rho has eigenvalues outside [0, 1] (by {pos:.3g})")
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)

    def __array__(self, dtype=None, copy=None):
        return self.rho if dtype is None else self.rho.astype(dtype)

    def __eq__(self, other):
        if not isinstance(other, QubitState):
            return NotImplemented
        return np.array_equal(self.rho, other.rho)

    __hash__ = None

    @property
    def purity(self) -> float:
        return float(np.real(np.trace(self.rho @ self.rho)))

    @property
    def populations(self):
        return float(self.rho[0, 0].real), float(self.rho[1, 1].real)

    @property
    def coherence(self) -> complex:
        """The off-diagonal element rho_eg."""
        return complex(self.rho[0, 1])

    def bloch(self):
        return bloch_vector(self)


def prepare_output_state(phi) -> QubitState:
    """State after the phase gate acts on (|e> + |g>)/sqrt(2).

    The gate imprints exp(i*phi) on |e>, so rho_eg = exp(i*phi)/2.
    """
    _require_finite("phi", phi)
    eg = 0.5 * np.exp(1j * phi)
    return QubitState(np.array([[0.5, eg], [np.conj(eg), 0.5]]))


def bloch_vector(state):
    """Bloch vector (x, y, z) with x + iy = 2 rho_eg and z = rho_ee - rho_gg.

    Accepts a :class:`QubitState` or an array of shape (..., 2, 2); for
    stacked input the result has shape (..., 3).
    """
    rho = state.rho if isinstance(state, QubitState) else np.asarray(state)
    c = 2 * rho[..., 0, 1]
    z = np.real(rho[..., 0, 0] - rho[..., 1, 1])
    vec = np.stack([c.real, c.imag, z], axis=-1)
    if vec.ndim == 1:
        return tuple(float(v) for v in vec)
    return vec


def state_from_bloch(vec, check=True):
    """Inverse of :func:`bloch_vector`: rho = (I + x X + y Y + z Z) / 2."""
    v = np.asarray(vec, dtype=float)
    x, y, z = v[..., 0], v[..., 1], v[..., 2]
    rho = np.empty(v.shape[:-1] + (2, 2), dtype=complex)
    rho[..., 0, 0] = (1 + z) / 2
    rho[..., 1, 1] = (1 - z) / 2
    rho[..., 0, 1] = (x + 1j * y) / 2
    rho[..., 1, 0] = (x - 1j * y) / 2
    if v.ndim == 1 and check:
        return QubitState(rho)
    return rho
