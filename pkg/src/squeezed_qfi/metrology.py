"""Quantum Fisher information of the imprinted phase.

Three independent routes are provided and are expected to agree:

* :func:`qfi_analytic` -- closed form in (A, B1, B2) and phi - theta/2;
* :func:`qfi_eigen` -- spectral decomposition of rho with first-order
  perturbation for the eigenvalue/eigenvector derivatives;
* :func:`qfi_bloch` -- single-qubit Bloch-vector identity.

States are taken in the interaction picture. The QFI is invariant under
phi-independent unitaries, so the free sigma_z rotation does not matter.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import DomainError, QubitState, SingularityError
from .dynamics import SolutionCoefficients, closed_form_rho

__all__ = [
    "QfiReport",
    "SldMatrix",
    "qfi_analytic",
    "qfi_eigen",
    "qfi_bloch",
    "qfi_pure",
    "drho_analytic",
    "drho_finite_difference",
    "sld",
    "qfi_thermal",
    "squeezing_advantage",
    "advantage_threshold",
    "printed_threshold",
    "qfi_spectral_terms",
    "cramer_rao_bound",
    "qfi_report",
]

EIG_CUTOFF = 1e-12
_SINGULAR = 1e-14


def _as_matrix(x):
    return x.rho if isinstance(x, QubitState) else np.asarray(x, dtype=complex)


def _scalar(x):
    x = np.asarray(x)
    return float(x) if x.ndim == 0 else x


def _coeff_arrays(coeffs):
    return tuple(np.asarray(v, dtype=float)
                 for v in (coeffs.vartheta, coeffs.A, coeffs.B1, coeffs.B2))


def qfi_analytic(phi, theta, coeffs: SolutionCoefficients):
    """Closed-form QFI.

    F = [B1^2 (A^2 + B2^2 - 1) - (1 - A^2)(B2^2 - B1^2) cos^2 d]
        / [A^2 + B1^2 cos^2 d + B2^2 sin^2 d - 1],   d = phi - theta/2.

    Numerator and denominator are both negative for mixed states. At
    vartheta = 0 the state is pure and the value 1 is returned.
    """
    vt, A, B1, B2 = _coeff_arrays(coeffs)
    d = np.asarray(phi, dtype=float) - np.asarray(theta, dtype=float) / 2
    c2 = np.cos(d) ** 2
    s2 = np.sin(d) ** 2
    A2, B12, B22 = A * A, B1 * B1, B2 * B2
    num = B12 * (A2 + B22 - 1) - (1 - A2) * (B22 - B12) * c2
    den = A2 + B12 * c2 + B22 * s2 - 1
    # exact pure state: the coefficients at vartheta = 0
    pure = (vt == 0) | ((A == 0) & (B1 == 1) & (B2 == 1))
    pure = np.broadcast_to(pure, np.broadcast_shapes(pure.shape, den.shape))
    bad = (np.abs(den) < _SINGULAR) & ~pure
    if np.any(bad):
        idx = np.argwhere(bad)[0] if bad.ndim else ()
        raise SingularityError(
            "QFI denominator vanishes for a mixed state at "
            f"phi={float(np.broadcast_to(phi, bad.shape)[tuple(idx)])!r}, "
            f"theta={float(np.broadcast_to(theta, bad.shape)[tuple(idx)])!r}, "
            f"vartheta={float(np.broadcast_to(vt, bad.shape)[tuple(idx)])!r}")
    with np.errstate(divide="ignore", invalid="ignore"):
        F = np.where(pure, 1.0, num / np.where(pure, -1.0, den))
    return _scalar(F)


def drho_analytic(phi, theta, coeffs: SolutionCoefficients):
    """d(rho)/d(phi) of the closed-form state; diagonal entries are exactly 0."""
    _, _, B1, B2 = _coeff_arrays(coeffs)
    phi, theta = np.asarray(phi, dtype=float), np.asarray(theta, dtype=float)
    d = phi - theta / 2
    eg = 0.5 * np.exp(0.5j * theta) * (-np.sin(d) * B1 + 1j * np.cos(d) * B2)
    out = np.zeros(eg.shape + (2, 2), dtype=complex)
    out[..., 0, 1] = eg
    out[..., 1, 0] = np.conj(eg)
    return out


def drho_finite_difference(rho_of_phi, phi, h=1e-6):
    """Central difference (rho(phi + h) - rho(phi - h)) / 2h.

    For state families without a closed-form derivative, e.g. integrator
    output evaluated at shifted phases.
    """
    return (np.asarray(rho_of_phi(phi + h)) - np.asarray(rho_of_phi(phi - h))) / (2 * h)


def qfi_eigen(rho, drho):
    """QFI from the spectral decomposition of rho.

    F = sum_i (d lambda_i)^2 / lambda_i
        + sum_{i != j} 2 (lambda_i - lambda_j)^2 / (lambda_i + lambda_j) |<i|d j>|^2

    with d lambda_i = <i|drho|i> and <i|d j> = <i|drho|j> / (lambda_j - lambda_i).
    Eigenvalues below 1e-12 are dropped in the first sum, pairs with
    lambda_i + lambda_j below 1e-12 in the second. For (near-)degenerate
    pairs the division by lambda_j - lambda_i is replaced by its limit
    2 |<i|drho|j>|^2 / (lambda_i + lambda_j). Accepts stacked input.
    """
    rho = _as_matrix(rho)
    drho = np.asarray(drho, dtype=complex)
    if np.max(np.abs(drho - np.swapaxes(drho, -1, -2).conj()), initial=0) > 1e-10:
        raise DomainError("drho must be Hermitian")
    if np.max(np.abs(np.trace(drho, axis1=-2, axis2=-1)), initial=0) > 1e-10:
        raise DomainError("drho must be traceless")
    lam, vec = np.linalg.eigh(rho)
    # drho in the eigenbasis of rho
    d = np.swapaxes(vec, -1, -2).conj() @ drho @ vec
    dlam = np.real(np.diagonal(d, axis1=-2, axis2=-1))
    keep = lam >= EIG_CUTOFF
    with np.errstate(divide="ignore", invalid="ignore"):
        first = np.where(keep, dlam**2 / np.where(keep, lam, 1.0), 0.0).sum(axis=-1)

    li, lj = lam[..., :, None], lam[..., None, :]
    gap = lj - li
    ssum = li + lj
    off = ~np.eye(lam.shape[-1], dtype=bool)
    valid = off & (ssum >= EIG_CUTOFF)
    degenerate = np.abs(gap) < EIG_CUTOFF
    with np.errstate(divide="ignore", invalid="ignore"):
        safe_sum = np.where(valid, ssum, 1.0)
        dvec = d / np.where(degenerate, 1.0, gap)  # <i|d j>
        regular = 2 * gap**2 / safe_sum * np.abs(dvec) ** 2
        limit = 2 * np.abs(d) ** 2 / safe_sum
    second = np.where(valid, np.where(degenerate, limit, regular), 0.0).sum(axis=(-2, -1))
    return _scalar(first + second)


def qfi_pure(psi, dpsi):
    """4 (<dpsi|dpsi> - |<dpsi|psi>|^2) for a pure state vector."""
    psi, dpsi = np.asarray(psi, complex), np.asarray(dpsi, complex)
    return float(4 * (np.vdot(dpsi, dpsi).real - abs(np.vdot(dpsi, psi)) ** 2))


def qfi_bloch(rvec, drvec):
    """Single-qubit QFI from the Bloch vector r and its derivative.

    F = |dr|^2 + (r . dr)^2 / (1 - |r|^2) for mixed states, |dr|^2 for pure
    states (1 - |r|^2 < 1e-10 with |r . dr| < 1e-8). Works on (..., 3) arrays.
    """
    r = np.asarray(rvec, dtype=float)
    dr = np.asarray(drvec, dtype=float)
    r2 = np.sum(r * r, axis=-1)
    if np.any(r2 > (1 + 1e-9) ** 2):
        raise DomainError(f"Bloch vector longer than 1 (|r|^2 = {np.max(r2)!r})")
    dot = np.sum(r * dr, axis=-1)
    dr2 = np.sum(dr * dr, axis=-1)
    gap = 1 - r2
    pure = (gap < 1e-10) & (np.abs(dot) < 1e-8)
    bad = (gap <= 0) & ~pure
    if np.any(bad):
        raise DomainError("Bloch vector on the pure boundary with a radial derivative")
    with np.errstate(divide="ignore", invalid="ignore"):
        F = np.where(pure, dr2, dr2 + dot**2 / np.where(pure | bad, 1.0, gap))
    return _scalar(F)


@dataclass(frozen=True, eq=False)
class SldMatrix:
    """Symmetric logarithmic derivative L with 2 drho = L rho + rho L."""

    L: np.ndarray

    def residual(self, rho, drho) -> float:
        rho = _as_matrix(rho)
        return float(np.max(np.abs(self.L @ rho + rho @ self.L - 2 * np.asarray(drho))))

    def qfi(self, rho) -> float:
        rho = _as_matrix(rho)
        return float(np.real(np.trace(rho @ self.L @ self.L)))


def sld(rho, drho) -> SldMatrix:
    """Solve 2 drho = L rho + rho L in the eigenbasis of rho.

    L_ij = 2 <i|drho|j> / (lambda_i + lambda_j); pairs with
    lambda_i + lambda_j < 1e-12 are left at 0. If drho has weight there
    (beyond 1e-9) the equation has no solution and SingularityError is raised.
    """
    rho = _as_matrix(rho)
    drho = np.asarray(drho, dtype=complex)
    lam, vec = np.linalg.eigh(rho)
    d = vec.conj().T @ drho @ vec
    ssum = lam[:, None] + lam[None, :]
    kernel = ssum < EIG_CUTOFF
    if np.any(np.abs(d[kernel]) > 1e-9):
        raise SingularityError(
            f"drho has a component {np.max(np.abs(d[kernel])):.3g} on the kernel of rho; "
            "no SLD exists")
    Le = np.where(kernel, 0.0, 2 * d / np.where(kernel, 1.0, ssum))
    L = vec @ Le @ vec.conj().T
    return SldMatrix(0.5 * (L + L.conj().T))


def qfi_thermal(vt, n):
    """QFI without squeezing: exp(-2 (1 + 2n) vartheta)."""
    vt, n = np.asarray(vt, dtype=float), np.asarray(n, dtype=float)
    if np.any(vt < 0) or np.any(n < 0):
        raise DomainError("vartheta and n must be non-negative")
    return _scalar(np.exp(-2 * (1 + 2 * n) * vt))


def advantage_threshold(coeffs: SolutionCoefficients, n):
    """Phase condition for beating the unsqueezed QFI.

    F > F_th is equivalent to ``cos^2(phi - theta/2) * D > Q`` with
    Q = (A^2 + B2^2 - 1)(B1^2 - F_th) and D = (B1^2 - B2^2)(A^2 + F_th - 1).
    Returns ``(threshold, divisor)`` with threshold = Q / D; when D > 0 the
    condition reads cos^2 > threshold, when D < 0 it flips. Used only as a
    diagnostic next to the direct comparison in :func:`squeezing_advantage`.
    """
    vt, A, B1, B2 = _coeff_arrays(coeffs)
    fth = np.exp(-2 * (1 + 2 * np.asarray(n, dtype=float)) * vt)
    A2, B12, B22 = A * A, B1 * B1, B2 * B2
    q = (A2 + B22 - 1) * (B12 - fth)
    div = (B12 - B22) * (A2 + fth - 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        thr = np.where(div != 0, q / np.where(div != 0, div, 1.0), np.nan)
    return _scalar(thr), _scalar(div)


def printed_threshold(coeffs: SolutionCoefficients, n):
    """Right-hand side of the advantage condition in its commonly quoted form.

    That form has ``A`` (not ``A^2``) in the numerator factor
    (A + B2^2 - 1); the unlabelled squared amplitude in the denominator is
    read as A^2. Kept only for comparison with :func:`advantage_threshold`.
    """
    vt, A, B1, B2 = _coeff_arrays(coeffs)
    fth = np.exp(-2 * (1 + 2 * np.asarray(n, dtype=float)) * vt)
    q = (A + B2 * B2 - 1) * (B1 * B1 - fth)
    div = (B1 * B1 - B2 * B2) * (A * A + fth - 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        thr = np.where(div != 0, q / np.where(div != 0, div, 1.0), np.nan)
    return _scalar(thr)


def squeezing_advantage(phi, theta, coeffs: SolutionCoefficients, n):
    """Whether the squeezed-bath QFI beats the thermal one at equal vartheta.

    Returns ``(advantage, margin)`` with margin = F - F_th. Without squeezing
    (B1 == B2) the two baths coincide and the margin is exactly 0 rather
    than rounding noise.
    """
    F = np.asarray(qfi_analytic(phi, theta, coeffs))
    margin = F - np.asarray(qfi_thermal(coeffs.vartheta, n))
    margin = np.where(np.asarray(coeffs.B1) == np.asarray(coeffs.B2), 0.0, margin)
    adv = margin > 0
    if adv.ndim == 0:
        return bool(adv), float(margin)
    return adv, margin


def qfi_spectral_terms(phi, theta, coeffs: SolutionCoefficients):
    """Closed forms of the two sums of the spectral QFI formula.

    With m = 2 [A^2 + B1^2 cos^2 d + B2^2 sin^2 d]:

    population term  (B1^2 - B2^2)^2 sin^2(2 phi - theta) / [m (2 - m)]
    coherence term   {2 A^2 [B1^2 sin^2 d + B2^2 cos^2 d] + 2 B1^2 B2^2} / m

    Their sum equals :func:`qfi_analytic` for mixed states. Note the
    population term carries the *square* of (B1^2 - B2^2); it is the
    eigenvalue-derivative contribution (d|r|)^2 / (1 - |r|^2).
    """
    _, A, B1, B2 = _coeff_arrays(coeffs)
    d = np.asarray(phi, dtype=float) - np.asarray(theta, dtype=float) / 2
    c2, s2 = np.cos(d) ** 2, np.sin(d) ** 2
    A2, B12, B22 = A * A, B1 * B1, B2 * B2
    m = 2 * (A2 + B12 * c2 + B22 * s2)
    pop = (B12 - B22) ** 2 * np.sin(2 * d) ** 2 / (m * (2 - m))
    coh = (2 * A2 * (B12 * s2 + B22 * c2) + 2 * B12 * B22) / m
    return _scalar(pop), _scalar(coh)


def cramer_rao_bound(F, nu=1):
    """Smallest achievable phase uncertainty 1/sqrt(nu F) after nu repetitions."""
    if not (isinstance(nu, (int, np.integer)) and nu >= 1):
        raise DomainError(f"nu must be a positive integer, got {nu!r}")
    F = np.asarray(F, dtype=float)
    if np.any(~np.isfinite(F)) or np.any(F <= 0):
        raise DomainError(f"Fisher information must be > 0, got {F}")
    return _scalar(1 / np.sqrt(nu * F))


@dataclass(frozen=True)
class QfiReport:
    qfi_analytic: float
    qfi_eigen: float
    qfi_bloch: float
    max_pairwise_disagreement: float
    thermal_baseline: float
    advantage: bool
    margin: float
    threshold: float
    threshold_advantage: bool
    printed_threshold: float = math.nan
    printed_advantage: bool = False

    @property
    def qfi(self) -> float:
        return self.qfi_analytic

    def cramer_rao(self, nu=1) -> float:
        return cramer_rao_bound(self.qfi_analytic, nu)


def qfi_report(phi, theta, coeffs: SolutionCoefficients, n) -> QfiReport:
    """Evaluate all three routes plus the thermal comparison at one point."""
    rho = closed_form_rho(phi, theta, coeffs)
    drho = drho_analytic(phi, theta, coeffs)
    fa = float(qfi_analytic(phi, theta, coeffs))
    fe = float(qfi_eigen(rho, drho))
    r = np.array([2 * rho[0, 1].real, 2 * rho[0, 1].imag, (rho[0, 0] - rho[1, 1]).real])
    dr = np.array([2 * drho[0, 1].real, 2 * drho[0, 1].imag, 0.0])
    fb = float(qfi_bloch(r, dr))
    vals = (fa, fe, fb)
    disagreement = max(abs(a - b) for a in vals for b in vals)
    fth = float(qfi_thermal(coeffs.vartheta, n))
    adv, margin = squeezing_advantage(phi, theta, coeffs, n)
    thr, div = advantage_threshold(coeffs, n)
    c2 = math.cos(phi - theta / 2) ** 2
    cond = bool(c2 * div > thr * div) if div != 0 else False
    pthr = printed_threshold(coeffs, n)
    return QfiReport(fa, fe, fb, disagreement, fth, adv, margin, thr, cond,
                     pthr, bool(c2 > pthr))
