"""Reduced qubit dynamics in a squeezed thermal reservoir with a Lorentzian spectrum.

Everything is in the interaction picture. The time-local generator is built
literally from sigma_+/sigma_- products; the closed-form solution depends on
time only through the decay clock ``vartheta = int_0^t alpha``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .core import (
    SIGMA_MINUS,
    SIGMA_PLUS,
    DomainError,
    IntegrationError,
    QubitState,
    ReservoirSpec,
    _state_violation,
    bath_coefficients,
    mean_photon_number,
)

__all__ = [
    "EvolutionMode",
    "SolutionCoefficients",
    "Trajectory",
    "alpha",
    "vartheta",
    "decay_clock",
    "solution_coefficients",
    "closed_form_rho",
    "closed_form_state",
    "master_generator",
    "evolve_numeric",
    "evolve_batch",
    "DEFAULT_DT",
]

DEFAULT_DT = 1e-3
_INVARIANT_TOL = 1e-7


class EvolutionMode(str, enum.Enum):
    NON_MARKOVIAN = "nonMarkovian"
    MARKOVIAN = "markovian"

    @classmethod
    def parse(cls, value) -> "EvolutionMode":
        if isinstance(value, cls):
            return value
        key = str(value).replace("-", "").replace("_", "").lower()
        for mode in cls:
            if mode.value.lower() == key:
                return mode
        raise DomainError(f"unknown evolution mode {value!r}; expected one of "
                          + ", ".join(m.value for m in cls))


def _check_time(t):
    t = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(t)):
        raise DomainError("time must be finite")
    if np.any(t < 0):
        raise DomainError(f"time must be >= 0, got {t}")
    return t


def alpha(t, spec: ReservoirSpec, mode=EvolutionMode.NON_MARKOVIAN):
    """Memory-kernel rate alpha(t).

    Non-Markovian (Lorentzian spectrum): (gamma/2)(1 - exp(-lambda t)).
    Markovian: the constant gamma. Note the Lorentzian rate saturates at
    gamma/2, not gamma; the Markovian convention is kept as is.
    """
    mode = EvolutionMode.parse(mode)
    t = _check_time(t)
    if mode is EvolutionMode.MARKOVIAN:
        a = np.full_like(t, spec.gamma)
    else:
        a = 0.5 * spec.gamma * -np.expm1(-spec.lam * t)
    a = a.astype(complex)
    return complex(a) if a.ndim == 0 else a


def decay_clock(gamma_t, lambda_over_gamma=0.1, mode=EvolutionMode.NON_MARKOVIAN):
    """vartheta as a function of the dimensionless time gamma*t.

    Non-Markovian: (gamma t + (exp(-lambda t) - 1) / (lambda/gamma)) / 2.
    Markovian: gamma t. Vectorised over both arguments.
    """
    mode = EvolutionMode.parse(mode)
    gt = _check_time(gamma_t)
    if mode is EvolutionMode.MARKOVIAN:
        vt = gt * 1.0
    else:
        lg = np.asarray(lambda_over_gamma, dtype=float)
        if np.any(~np.isfinite(lg)) or np.any(lg <= 0):
            raise DomainError("lambda_over_gamma must be finite and > 0")
        x = lg * gt
        # series branch avoids cancellation in t + expm1(-x)/lam for x << 1
        small = x < 1e-3
        series = gt * x * (0.5 - x / 6 + x**2 / 24 - x**3 / 120)
        direct = gt + np.expm1(-x) / lg
        vt = 0.5 * np.where(small, series, direct)
    return float(vt) if vt.ndim == 0 else vt


def vartheta(t, spec: ReservoirSpec, mode=EvolutionMode.NON_MARKOVIAN):
    """Decay clock int_0^t alpha(tau) dtau (dimensionless)."""
    t = _check_time(t)
    return decay_clock(spec.gamma * t, spec.lambda_over_gamma, mode)


@dataclass(frozen=True)
class SolutionCoefficients:
    """Closed-form quantities (vartheta, A, B1, B2); fields may be arrays."""

    vartheta: float
    A: float
    B1: float
    B2: float

    @property
    def is_initial(self):
        return np.all(np.asarray(self.vartheta) == 0)


def solution_coefficients(vt, n, r) -> SolutionCoefficients:
    """A = (exp(-2(1+2n) vt cosh 2r) - 1) / ((1+2n) cosh 2r),
    B1 = exp(-e^{2r} (1+2n) vt), B2 = exp(-e^{-2r} (1+2n) vt).
    """
    vt, n, r = (np.asarray(v, dtype=float) for v in (vt, n, r))
    for name, v in (("vartheta", vt), ("n", n), ("r", r)):
        if not np.all(np.isfinite(v)):
            raise DomainError(f"{name} must be finite")
        if np.any(v < 0):
            raise DomainError(f"{name} must be >= 0")
    k = 1 + 2 * n
    c2 = np.cosh(2 * r)
    A = np.expm1(-2 * k * vt * c2) / (k * c2)
    B1 = np.exp(-np.exp(2 * r) * k * vt)
    B2 = np.exp(-np.exp(-2 * r) * k * vt)
    if A.ndim == 0:
        return SolutionCoefficients(float(vt), float(A), float(B1), float(B2))
    vt = np.broadcast_to(vt, A.shape)
    return SolutionCoefficients(vt, A, B1, B2)


def closed_form_rho(phi, theta, coeffs: SolutionCoefficients):
    """Closed-form density matrix as an array of shape (..., 2, 2)."""
    A, B1, B2 = (np.asarray(v, dtype=float) for v in (coeffs.A, coeffs.B1, coeffs.B2))
    phi, theta = np.asarray(phi, dtype=float), np.asarray(theta, dtype=float)
    d = phi - theta / 2
    eg = 0.5 * np.exp(0.5j * theta) * (np.cos(d) * B1 + 1j * np.sin(d) * B2)
    ee = 0.5 * (1 + A)
    shape = np.broadcast_shapes(eg.shape, ee.shape)
    rho = np.empty(shape + (2, 2), dtype=complex)
    rho[..., 0, 0] = ee
    rho[..., 1, 1] = 1 - ee
    rho[..., 0, 1] = eg
    rho[..., 1, 0] = np.conj(eg)
    return rho


def closed_form_state(phi, theta, coeffs: SolutionCoefficients) -> QubitState:
    return QubitState(closed_form_rho(phi, theta, coeffs))


def _generator_parts(rho, N, M):
    """The alpha and alpha* parts of the generator: d(rho)/dt = alpha P + alpha* Q.

    ``N`` and ``M`` broadcast against the leading axes of ``rho``.
    """
    sp, sm = SIGMA_PLUS, SIGMA_MINUS
    N = np.asarray(N)[..., None, None]
    M = np.asarray(M)[..., None, None]
    pe = sp @ sm
    pg = sm @ sp
    emit = sm @ rho @ sp
    absorb = sp @ rho @ sm
    P = (-(N + 1) * (pe @ rho - emit)
         - N * (rho @ pg - absorb)
         + 2 * np.conj(M) * (sm @ rho @ sm))
    Q = (-(N + 1) * (rho @ pe - emit)
         - N * (pg @ rho - absorb)
         + 2 * M * (sp @ rho @ sp))
    return P, Q


def _generator(rho, a, N, M):
    """Right-hand side for stacked states; ``a`` is alpha(t) (complex)."""
    a = np.asarray(a)[..., None, None]
    P, Q = _generator_parts(rho, N, M)
    return a * P + np.conj(a) * Q


def _superoperators(N, M):
    """4x4 matrices S_a, S_c acting on row-major vec(rho), built by applying
    the generator to the matrix units, so that vec(d rho/dt) = (alpha S_a +
    alpha* S_c) vec(rho)."""
    N, M = np.asarray(N), np.asarray(M)
    batch = np.broadcast_shapes(N.shape, M.shape)
    units = np.eye(4, dtype=complex).reshape(4, 2, 2)
    P, Q = _generator_parts(units, np.asarray(N)[..., None], np.asarray(M)[..., None])
    # P[..., k, :, :] is the image of unit k; columns of S are the images
    S_a = np.swapaxes(P.reshape(batch + (4, 4)), -1, -2)
    S_c = np.swapaxes(Q.reshape(batch + (4, 4)), -1, -2)
    return S_a, S_c


def master_generator(state, t, spec: ReservoirSpec, mode=EvolutionMode.NON_MARKOVIAN):
    """d(rho)/dt of the time-local master equation at time ``t``.

    In Markovian mode alpha = gamma, which turns the generator into the
    standard squeezed-bath Lindblad form.
    """
    rho = state.rho if isinstance(state, QubitState) else np.asarray(state, dtype=complex)
    bc = spec.coefficients
    return _generator(rho, alpha(t, spec, mode), bc.N, bc.M)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Times (in 1/gamma units when gamma = 1) and the states at those times."""

    times: np.ndarray
    rhos: np.ndarray

    def __post_init__(self):
        if len(self.times) != len(self.rhos):
            raise ValueError("times and states differ in length")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("trajectory times must be strictly increasing")
        for arr in (self.times, self.rhos):
            arr.setflags(write=False)

    def __len__(self):
        return len(self.times)

    def __getitem__(self, i):
        return float(self.times[i]), QubitState(self.rhos[i], atol=_INVARIANT_TOL)

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    @property
    def final(self) -> QubitState:
        return self[-1][1]


def _step_count(t_end, dt):
    if t_end < 0 or not math.isfinite(t_end):
        raise DomainError(f"t_end must be finite and >= 0, got {t_end}")
    if t_end == 0:
        return 0, 0.0
    if not (dt > 0) or dt > t_end:
        raise DomainError(f"need 0 < dt <= t_end, got dt={dt}, t_end={t_end}")
    steps = int(math.ceil(t_end / dt - 1e-9))
    return steps, t_end / steps


def evolve_batch(rho0, alpha_fn, N, M, t_end, dt=DEFAULT_DT, stride=1):
    """Fixed-step RK4 for a stack of initial states.

    The generator is linear in rho, so it is turned into 4x4 superoperators
    once (by applying the generator to the matrix units) and each RK4 stage is
    a single batched matrix-vector product.

    ``alpha_fn(t)`` returns alpha for every batch member (broadcastable to
    the batch shape). Returns ``(times, rhos)`` with ``rhos`` of shape
    (len(times), *batch, 2, 2); every ``stride``-th step is stored plus the
    final one. Raises :class:`IntegrationError` if a stored state violates
    the density-matrix invariants by more than 1e-7.
    """
    rho = np.array(rho0, dtype=complex)
    batch = rho.shape[:-2]
    steps, h = _step_count(float(t_end), float(dt))
    stride = max(int(stride), 1)
    keep = [0] + [i for i in range(1, steps + 1) if i % stride == 0 or i == steps]
    out = np.empty((len(keep),) + rho.shape, dtype=complex)
    out[0] = rho
    S_a, S_c = _superoperators(np.broadcast_to(N, batch), np.broadcast_to(M, batch))
    v = rho.reshape(batch + (4, 1))

    def rhs(a, x):
        a = np.broadcast_to(np.asarray(a, dtype=complex), batch)[..., None, None]
        return (a * S_a + np.conj(a) * S_c) @ x

    slot = 1
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(1, steps + 1):
            t = (i - 1) * h
            k1 = rhs(alpha_fn(t), v)
            a_mid = alpha_fn(t + h / 2)
            k2 = rhs(a_mid, v + 0.5 * h * k1)
            k3 = rhs(a_mid, v + 0.5 * h * k2)
            k4 = rhs(alpha_fn(t + h), v + h * k3)
            v = v + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
            if slot < len(keep) and keep[slot] == i:
                out[slot] = v.reshape(batch + (2, 2))
                slot += 1
    times = np.array(keep, dtype=float) * h
    worst = max(_state_violation(out)) if np.all(np.isfinite(out)) else math.inf
    if not worst <= _INVARIANT_TOL:
        raise IntegrationError(
            f"integrated state violates density-matrix invariants by {worst:.3g}; "
            f"reduce the step size (dt={dt})")
    return times, out


def evolve_numeric(initial, spec: ReservoirSpec, mode=EvolutionMode.NON_MARKOVIAN,
                   t_end=10.0, dt=DEFAULT_DT, stride=1) -> Trajectory:
    """Integrate the master equation from ``initial`` with classical RK4."""
    mode = EvolutionMode.parse(mode)
    rho0 = initial.rho if isinstance(initial, QubitState) else np.asarray(initial)
    bc = spec.coefficients
    times, rhos = evolve_batch(rho0, lambda t: alpha(t, spec, mode), bc.N, bc.M,
                               t_end, dt, stride)
    return Trajectory(times, rhos)


def lorentzian_alpha(gamma, lam):
    """Vectorised alpha(t) for a batch of spectral widths (used by sweeps)."""
    gamma = np.asarray(gamma, dtype=float)
    lam = np.asarray(lam, dtype=float)
    return lambda t: (0.5 * gamma * -np.expm1(-lam * t)).astype(complex)


def batch_bath(r, theta, kT):
    """Bath coefficients N, M for arrays of (r, theta, kT)."""
    bc = bath_coefficients(np.asarray(r, float), np.asarray(theta, float),
                           np.asarray(mean_photon_number(kT), float))
    return bc.N, bc.M
