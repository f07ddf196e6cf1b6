"""Self-verification: closed form vs integrator, cross-route QFI agreement and
the qualitative orderings of every figure preset.

Every check recomputes its reference values independently of the function
under test where that is possible (e.g. B1, B2 are re-derived from their
exponentials rather than read back from :class:`SolutionCoefficients`), so a
corrupted coefficient routine is caught.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import dynamics, experiments, metrology
from .core import mean_photon_number, prepare_output_state
from .dynamics import EvolutionMode

__all__ = ["CheckResult", "VerifyReport", "verify_suite", "dynamics_grid"]


@dataclass
class CheckResult:
    name: str
    passed: bool
    error: float
    tolerance: float
    seconds: float = 0.0
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        text = (f"[{status}] {self.name}: worst error {self.error:.3g} "
                f"(tolerance {self.tolerance:.3g}, {self.seconds:.2f} s)")
        return text + (f" -- {self.detail}" if self.detail else "")


@dataclass
class VerifyReport:
    grid_density: int
    checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self):
        return [c for c in self.checks if not c.passed]

    def format(self) -> str:
        lines = [c.line() for c in self.checks]
        total = sum(c.seconds for c in self.checks)
        verdict = "ALL CHECKS PASSED" if self.passed else f"{len(self.failures())} CHECK(S) FAILED"
        lines.append(f"{verdict} (grid density {self.grid_density}, {total:.1f} s)")
        return "\n".join(lines)


def _timed(fn):
    def wrapper(*args, **kwargs):
        start = time.perf_counter()
        result = fn(*args, **kwargs)
        result.seconds = time.perf_counter() - start
        return result
    wrapper.__name__ = fn.__name__
    return wrapper


def dynamics_grid(density=1):
    """Parameter grid for the closed-form/integrator and three-route checks.

    density 1 gives r in {0, 0.5, 1, 1.5}, kT in {0, 0.5, 1}, theta in
    {0, 1}, phi in {0, 0.7}, lambda in {0.1, 2}. Higher densities refine the
    r and kT lists over the same ranges.
    """
    rs = np.linspace(0, 1.5, 3 * density + 1)
    kts = np.linspace(0, 1, 2 * density + 1)
    grid = np.array([(r, kt, th, ph, lam)
                     for r in rs for kt in kts
                     for th in (0.0, 1.0) for ph in (0.0, 0.7)
                     for lam in (0.1, 2.0)])
    return {"r": grid[:, 0], "kT": grid[:, 1], "theta": grid[:, 2],
            "phi": grid[:, 3], "lambda": grid[:, 4]}


def _reference_coefficients(vt, n, r):
    """Independent re-derivation of A, B1, B2 (oracle for mutation tests)."""
    k = 1 + 2 * n
    A = (np.exp(-2 * k * vt * np.cosh(2 * r)) - 1) / (k * np.cosh(2 * r))
    return A, np.exp(-np.exp(2 * r) * k * vt), np.exp(-np.exp(-2 * r) * k * vt)


def _rel_err(a, b, rel=1e-8, floor=1e-12):
    """|a - b| relative to |b|, with |b| floored so that an absolute error of
    ``floor`` maps to ``rel``."""
    a, b = np.asarray(a), np.asarray(b)
    return np.abs(a - b) / np.maximum(np.abs(b), floor / rel)


@_timed
def check_closed_form_vs_rk4(density=1, mode=EvolutionMode.NON_MARKOVIAN, t_end=10.0,
                             dt=dynamics.DEFAULT_DT, tol=1e-6):
    g = dynamics_grid(density)
    mode = EvolutionMode.parse(mode)
    if mode is EvolutionMode.MARKOVIAN:
        # lambda plays no role; drop the duplicate half of the grid
        sel = g["lambda"] == g["lambda"][0]
        g = {k: v[sel] for k, v in g.items()}
    n = mean_photon_number(g["kT"])
    N, M = dynamics.batch_bath(g["r"], g["theta"], g["kT"])
    rho0 = np.array([prepare_output_state(p).rho for p in g["phi"]])
    if mode is EvolutionMode.MARKOVIAN:
        alpha_fn = lambda t: np.full(len(n), 1.0 + 0j)  # noqa: E731
    else:
        alpha_fn = dynamics.lorentzian_alpha(1.0, g["lambda"])
    times, rhos = dynamics.evolve_batch(rho0, alpha_fn, N, M, t_end, dt, stride=10)
    vt = dynamics.decay_clock(times[:, None], g["lambda"][None, :], mode)
    coeffs = dynamics.solution_coefficients(vt, n[None, :], g["r"][None, :])
    closed = dynamics.closed_form_rho(g["phi"][None, :], g["theta"][None, :], coeffs)
    err = float(np.max(np.abs(closed - rhos)))
    trace_err = float(np.max(np.abs(np.trace(rhos, axis1=-2, axis2=-1) - 1)))
    coh = np.abs(rhos[..., 0, 1])
    rise = float(np.max(np.diff(coh, axis=0), initial=0.0))
    ok = err <= tol and trace_err <= 1e-9 and rise <= 1e-12
    name = "closed form vs RK4" + (" (markovian)" if mode is EvolutionMode.MARKOVIAN else "")
    return _result(name, ok, err, tol,
                              f"{len(n)} trajectories, trace drift {trace_err:.1e}, "
                              f"max coherence rise {rise:.1e}")


def _result(name, ok, err, tol, detail=""):
    return CheckResult(name, bool(ok), float(err), float(tol), detail=detail)


def _closed_form_samples(density):
    g = dynamics_grid(density)
    times = np.linspace(0, 10, 100 * density + 1)
    shape = (len(times), len(g["r"]))
    gt = np.broadcast_to(times[:, None], shape).ravel()
    p = {k: np.broadcast_to(v[None, :], shape).ravel() for k, v in g.items()}
    n = mean_photon_number(p["kT"])
    vt = dynamics.decay_clock(gt, p["lambda"])
    return p, n, dynamics.solution_coefficients(vt, n, p["r"])


@_timed
def check_three_routes(density=1, tol=1e-8):
    p, n, coeffs = _closed_form_samples(density)
    fa = metrology.qfi_analytic(p["phi"], p["theta"], coeffs)
    rho = dynamics.closed_form_rho(p["phi"], p["theta"], coeffs)
    drho = metrology.drho_analytic(p["phi"], p["theta"], coeffs)
    fe = metrology.qfi_eigen(rho, drho)
    c, dc = 2 * rho[..., 0, 1], 2 * drho[..., 0, 1]
    r = np.stack([c.real, c.imag, (rho[..., 0, 0] - rho[..., 1, 1]).real], axis=-1)
    dr = np.stack([dc.real, dc.imag, np.zeros_like(dc.real)], axis=-1)
    fb = metrology.qfi_bloch(r, dr)
    err = max(float(np.max(_rel_err(fe, fa))), float(np.max(_rel_err(fb, fa))))
    return _result("three-route QFI agreement", err <= tol, err, tol,
                              f"{len(fa)} states")


@_timed
def check_spectral_terms(density=1, tol=1e-9):
    p, n, coeffs = _closed_form_samples(density)
    mixed = np.asarray(coeffs.vartheta) > 0
    coeffs = dynamics.SolutionCoefficients(*(np.asarray(v)[mixed] for v in (
        coeffs.vartheta, coeffs.A, coeffs.B1, coeffs.B2)))
    phi, theta = p["phi"][mixed], p["theta"][mixed]
    pop, coh = metrology.qfi_spectral_terms(phi, theta, coeffs)
    fa = metrology.qfi_analytic(phi, theta, coeffs)
    err = float(np.max(_rel_err(pop + coh, fa)))
    return _result("spectral-term decomposition", err <= tol, err, tol)


@_timed
def check_finite_difference(density=1, tol=1e-8):
    p, n, coeffs = _closed_form_samples(density)
    stride = max(1, len(p["phi"]) // 500)
    sl = slice(None, None, stride)
    c = dynamics.SolutionCoefficients(*(np.asarray(v)[sl] for v in (
        coeffs.vartheta, coeffs.A, coeffs.B1, coeffs.B2)))
    theta = p["theta"][sl]
    fd = metrology.drho_finite_difference(
        lambda ph: dynamics.closed_form_rho(ph, theta, c), p["phi"][sl])
    err = float(np.max(np.abs(fd - metrology.drho_analytic(p["phi"][sl], theta, c))))
    return _result("drho vs central difference", err <= tol, err, tol)


@_timed
def check_thermal_reduction(density=1, tol=1e-12, seed=1):
    rng = np.random.default_rng(seed)
    k = 1000 * density
    phi, theta = rng.uniform(-10, 10, k), rng.uniform(-10, 10, k)
    vt, n = rng.uniform(0, 5, k), rng.uniform(0, 3, k)
    coeffs = dynamics.solution_coefficients(vt, n, 0.0)
    err = float(np.max(np.abs(metrology.qfi_analytic(phi, theta, coeffs)
                              - np.exp(-2 * (1 + 2 * n) * vt))))
    return _result("thermal reduction (r = 0)", err <= tol, err, tol)


@_timed
def check_boundary_identities(density=1, tol=1e-12, seed=2):
    rng = np.random.default_rng(seed)
    k = 500 * density
    theta, vt = rng.uniform(0, 2 * np.pi, k), rng.uniform(1e-3, 5, k)
    n, r = rng.uniform(0, 2, k), rng.uniform(0, 2, k)
    coeffs = dynamics.solution_coefficients(vt, n, r)
    _, B1, B2 = _reference_coefficients(vt, n, r)
    e1 = np.abs(metrology.qfi_analytic(theta / 2, theta, coeffs) - B2**2)
    e2 = np.abs(metrology.qfi_analytic(theta / 2 + np.pi / 2, theta, coeffs) - B1**2)
    err = float(max(e1.max(), e2.max()))
    return _result("boundary identities F(theta/2)=B2^2, F(theta/2+pi/2)=B1^2",
                              err <= tol, err, tol)


@_timed
def check_phase_matching(density=1, points=10_000, seed=3):
    """argmax over phi of the QFI sits at theta/2 modulo pi (r > 0)."""
    rng = np.random.default_rng(seed)
    k = 20 * density
    phis = np.arange(points) * (np.pi / points)
    spacing = np.pi / points
    worst = 0.0
    for theta, vt, n, r in zip(rng.uniform(0, 2 * np.pi, k), rng.uniform(0.05, 5, k),
                               rng.uniform(0, 2, k), rng.uniform(0.1, 2, k)):
        coeffs = dynamics.solution_coefficients(vt, n, r)
        F = metrology.qfi_analytic(phis, theta, coeffs)
        best = phis[np.argmax(F)]
        off = (best - theta / 2) % np.pi
        worst = max(worst, min(off, np.pi - off))
    return _result("phase-matching argmax at phi = theta/2 (mod pi)",
                              worst <= spacing, worst, spacing, f"{points}-point scans")


@_timed
def check_periodicity(density=1, tol=1e-12, seed=4):
    rng = np.random.default_rng(seed)
    k = 1000 * density
    phi, theta = rng.uniform(0, 2 * np.pi, k), rng.uniform(0, 2 * np.pi, k)
    coeffs = dynamics.solution_coefficients(rng.uniform(1e-3, 5, k), rng.uniform(0, 2, k),
                                            rng.uniform(0, 2, k))
    F = metrology.qfi_analytic(phi, theta, coeffs)
    e1 = np.abs(metrology.qfi_analytic(phi + np.pi, theta, coeffs) - F)
    e2 = np.abs(metrology.qfi_analytic(phi, theta + 2 * np.pi, coeffs) - F)
    err = float(max(e1.max(), e2.max()))
    return _result("periodicity (pi in phi, 2 pi in theta)", err <= tol, err, tol)


def _curve(fig_id, density, **fixed):
    spec = experiments.figure_preset(fig_id, points=100 * density + 1, **fixed)
    return experiments.run_sweep(spec)


@_timed
def check_temperature_ordering(density=1, gamma_t=2.0):
    """At fixed gamma*t: F strictly decreasing in kT, Markovian below non-Markovian."""
    kts = [0.0, 0.5, 1.0, 2.0]
    worst = -np.inf
    F = {}
    for mode in EvolutionMode:
        spec = experiments.SweepSpec(
            axes=[("kT", kts)],
            fixed={"gamma_t": gamma_t, "lambda": 0.1, "r": 0.0}, mode=mode)
        F[mode] = experiments.run_sweep(spec).column("qfi_analytic")
        worst = max(worst, float(np.max(np.diff(F[mode]))))
    gap = float(np.max(F[EvolutionMode.MARKOVIAN] - F[EvolutionMode.NON_MARKOVIAN]))
    # also along the whole preset curve (gamma*t > 0)
    for fid in ("fig3a", "fig3b"):
        t = _curve(fid, density)
        gt = t.column("gamma_t")
        grid = t.column("qfi_analytic").reshape(len(np.unique(gt)), -1)[1:]
        worst = max(worst, float(np.max(np.diff(grid, axis=1))))
    ok = worst < 0 and gap < 0
    return _result(f"temperature ordering at gamma*t = {gamma_t:g}", ok,
                              max(worst, gap), 0.0,
                              "F(kT) strictly decreasing; markovian < non-Markovian")


def _r_profile(table, at_phi):
    phis = table.column("phi")
    idx = np.argmin(np.abs(phis - at_phi))
    sel = phis == phis[idx]
    order = np.argsort(table.column("r")[sel])
    return table.column("qfi_analytic")[sel][order]


@_timed
def check_squeezing_crossover(density=1):
    """Panels with theta = 0: F rises with r at phi = 0, falls at phi = pi/2.
    Panels with phi - theta/2 = 0.01: F(r) non-decreasing for every phi."""
    worst = -np.inf
    rs = (0.0, 0.2, 0.5, 1.0)
    for fid, gt in (("fig4a", 5.0), ("fig4b", 0.8)):
        mode = EvolutionMode.MARKOVIAN if fid == "fig4b" else EvolutionMode.NON_MARKOVIAN
        for phi, sign in ((0.0, 1), (np.pi / 2, -1)):
            spec = experiments.SweepSpec(
                axes=[("r", rs)],
                fixed={"phi": phi, "theta": 0.0, "gamma_t": gt, "kT": 0.0, "lambda": 0.1},
                mode=mode)
            F = experiments.run_sweep(spec).column("qfi_analytic")
            worst = max(worst, float(np.max(-sign * np.diff(F))))
        t = _curve(fid, density)
        worst = max(worst, float(np.max(-np.diff(_r_profile(t, 0.0)))))
    crossover_ok = worst < 0
    drop = -np.inf
    for fid in ("fig4c", "fig4d"):
        t = _curve(fid, density)
        grid = t.column("qfi_analytic").reshape(-1, len(rs))
        drop = max(drop, float(np.max(-np.diff(grid, axis=1))))
    ok = crossover_ok and drop <= 0
    return _result("squeezing crossover and phase-matched monotonicity", ok,
                              max(worst, drop), 0.0)


@_timed
def check_phase_matched_grid(density=1, kt_slack=1e-14):
    """Phase matched at gamma*t = 10: F increasing in r, decreasing in kT.

    Near kT = 0 the occupation n ~ exp(-1/kT) is below double precision, so
    F is flat there; strict decrease is required only where n changes by
    more than 1e-6 and rounding-level rises up to ``kt_slack`` are tolerated
    elsewhere.
    """
    t = _curve("fig5", density)
    kts = np.unique(t.column("kT"))
    grid = t.column("qfi_analytic").reshape(len(kts), -1)
    dr = np.diff(grid, axis=1)
    dk = np.diff(grid, axis=0)
    dn = np.diff(mean_photon_number(kts))
    resolvable = dn > 1e-6
    ok = (np.all(dr > 0) and np.all(dk <= kt_slack) and np.all(dk[resolvable] < 0))
    err = max(float(np.max(-dr)), float(np.max(dk)))
    return _result("phase-matched F increasing in r, decreasing in kT", ok, err,
                              kt_slack, f"{grid.size} grid points")


@_timed
def check_spectral_width_ordering(density=1, slack=1e-15):
    """Narrower spectra decay more slowly at every gamma*t > 0."""
    t = _curve("fig6", density)
    gts = np.unique(t.column("gamma_t"))
    grid = t.column("qfi_analytic").reshape(len(gts), -1)[1:]  # lambda ascending
    worst = float(np.max(np.diff(grid, axis=1)))
    return _result("spectral-width ordering", worst <= slack, worst, slack)


@_timed
def check_initial_point(density=1, tol=1e-12):
    """At gamma*t = 0 the analytic QFI is exactly 1 and delta phi = 1/sqrt(nu)."""
    coeffs = dynamics.solution_coefficients(0.0, 0.3, 0.7)
    exact = True
    worst = 0.0
    for phi in np.linspace(0, 2 * np.pi, 7 * density):
        rep = metrology.qfi_report(float(phi), 0.4, coeffs, 0.3)
        exact &= rep.qfi_analytic == 1.0
        worst = max(worst, abs(rep.qfi_eigen - 1), abs(rep.qfi_bloch - 1))
        for nu in (1, 4, 100):
            exact &= metrology.cramer_rao_bound(rep.qfi_analytic, nu) == 1 / math.sqrt(nu)
    return _result("initial point F = 1 and delta phi = 1/sqrt(nu)", exact and worst <= tol,
                   worst, tol, "analytic route and bound exact")


CHECKS = (
    ("closed_form_vs_rk4", check_closed_form_vs_rk4),
    ("closed_form_vs_rk4_markovian",
     lambda d: check_closed_form_vs_rk4(d, mode=EvolutionMode.MARKOVIAN)),
    ("three_routes", check_three_routes),
    ("spectral_terms", check_spectral_terms),
    ("finite_difference", check_finite_difference),
    ("thermal_reduction", check_thermal_reduction),
    ("boundary_identities", check_boundary_identities),
    ("phase_matching", check_phase_matching),
    ("periodicity", check_periodicity),
    ("temperature_ordering", check_temperature_ordering),
    ("squeezing_crossover", check_squeezing_crossover),
    ("phase_matched_grid", check_phase_matched_grid),
    ("spectral_width_ordering", check_spectral_width_ordering),
    ("initial_point", check_initial_point),
)


def verify_suite(grid_density=1, only=None) -> VerifyReport:
    """Run every check at the given grid density; failures do not stop the run."""
    if int(grid_density) < 1:
        raise ValueError("grid_density must be >= 1")
    report = VerifyReport(int(grid_density))
    for key, fn in CHECKS:
        if only is not None and key not in only:
            continue
        try:
            report.checks.append(fn(int(grid_density)))
        except Exception as exc:  # a crash is a failed check, not an aborted run
            report.checks.append(CheckResult(key, False, float("inf"), 0.0,
                                             detail=f"{type(exc).__name__}: {exc}"))
    return report
