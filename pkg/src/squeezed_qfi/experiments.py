"""Parameter sweeps and the canned figure presets."""
from __future__ import annotations

import io
import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import ConfigError, SingularityError, mean_photon_number
from .dynamics import (
    EvolutionMode,
    closed_form_rho,
    decay_clock,
    solution_coefficients,
)
from .metrology import (
    drho_analytic,
    qfi_analytic,
    qfi_eigen,
    qfi_thermal,
    squeezing_advantage,
)

__all__ = [
    "PARAMETERS",
    "OUTPUTS",
    "FIGURES",
    "SweepSpec",
    "SweepTable",
    "evaluate_points",
    "run_sweep",
    "figure_preset",
]

PARAMETERS = ("gamma_t", "phi", "theta", "r", "kT", "lambda")
OUTPUTS = ("qfi_analytic", "qfi_eigen", "qfi_thermal", "bloch", "advantage")
DEFAULTS = {"gamma_t": 0.0, "phi": 0.0, "theta": 0.0, "r": 0.0, "kT": 0.0, "lambda": 0.1}
FIGURES = ("fig2a", "fig2b", "fig3a", "fig3b", "fig4a", "fig4b", "fig4c", "fig4d",
           "fig5", "fig6")
DEFAULT_POINTS = 201
CHUNK_ROWS = 4096


@dataclass(frozen=True)
class SweepSpec:
    """Cartesian sweep over named parameters.

    ``axes`` is an ordered list of (name, values); values are sorted so that
    the table rows come out in lexicographic order of the axis values.
    Parameters that are neither axes nor in ``fixed`` take ``DEFAULTS``.
    When ``phase_offset`` is set, theta is not free: every row uses
    theta = 2 (phi - phase_offset).
    """

    axes: tuple = ()
    fixed: dict = field(default_factory=dict)
    mode: EvolutionMode = EvolutionMode.NON_MARKOVIAN
    outputs: tuple = ("qfi_analytic",)
    phase_offset: float | None = None

    def __post_init__(self):
        axes = tuple((str(name), tuple(sorted(float(v) for v in values)))
                     for name, values in self.axes)
        names = [a[0] for a in axes]
        if len(set(names)) != len(names):
            raise ConfigError(f"duplicate axis names in {names}")
        for name in list(names) + list(self.fixed):
            if name not in PARAMETERS:
                raise ConfigError(f"unknown parameter {name!r}; expected one of "
                                  + ", ".join(PARAMETERS))
        overlap = set(names) & set(self.fixed)
        if overlap:
            raise ConfigError(f"parameters both swept and fixed: {sorted(overlap)}")
        for name, values in axes:
            if not values:
                raise ConfigError(f"axis {name!r} has no values")
        for out in self.outputs:
            if out not in OUTPUTS:
                raise ConfigError(f"unknown output {out!r}; expected one of " + ", ".join(OUTPUTS))
        if self.phase_offset is not None and ("theta" in names or "theta" in self.fixed):
            raise ConfigError("theta is derived from phi when phase_offset is set")
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "fixed", {k: float(v) for k, v in self.fixed.items()})
        object.__setattr__(self, "mode", EvolutionMode.parse(self.mode))
        object.__setattr__(self, "outputs", tuple(self.outputs))

    @property
    def axis_names(self):
        return tuple(a[0] for a in self.axes)

    def columns(self):
        cols = list(self.axis_names)
        if self.phase_offset is not None:
            cols.append("theta")
        for out in self.outputs:
            cols.extend(("bloch_x", "bloch_y", "bloch_z") if out == "bloch" else (out,))
        return tuple(cols)

    def grid(self):
        """Parameter arrays for every row, keyed by parameter name."""
        if self.axes:
            mesh = np.array(list(itertools.product(*(v for _, v in self.axes))), dtype=float)
        else:
            mesh = np.zeros((1, 0))
        rows = mesh.shape[0]
        params = {}
        for name in PARAMETERS:
            if name in self.axis_names:
                params[name] = mesh[:, self.axis_names.index(name)]
            else:
                params[name] = np.full(rows, self.fixed.get(name, DEFAULTS[name]))
        if self.phase_offset is not None:
            params["theta"] = 2 * (params["phi"] - self.phase_offset)
        return params


@dataclass(frozen=True, eq=False)
class SweepTable:
    columns: tuple
    rows: np.ndarray

    def __post_init__(self):
        rows = np.array(self.rows, dtype=float, ndmin=2)
        if rows.shape[1] != len(self.columns):
            raise ValueError(f"row length {rows.shape[1]} != column count {len(self.columns)}")
        rows.setflags(write=False)
        object.__setattr__(self, "columns", tuple(self.columns))
        object.__setattr__(self, "rows", rows)

    def __len__(self):
        return self.rows.shape[0]

    def column(self, name):
        return self.rows[:, self.columns.index(name)]

    def to_csv(self, path_or_file=None) -> str:
        """Render as CSV: 17 significant digits, '.' decimals, LF line endings."""
        buf = io.StringIO()
        buf.write(",".join(self.columns) + "\n")
        for row in self.rows:
            buf.write(",".join(format_float(v) for v in row) + "\n")
        text = buf.getvalue()
        if path_or_file is None:
            return text
        if hasattr(path_or_file, "write"):
            path_or_file.write(text)
        else:
            with open(path_or_file, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        return text


def format_float(v) -> str:
    return format(float(v), ".17g")


def evaluate_points(params, mode=EvolutionMode.NON_MARKOVIAN, outputs=("qfi_analytic",)):
    """Evaluate the requested outputs on equal-length parameter arrays.

    Returns a dict mapping column name to array.
    """
    mode = EvolutionMode.parse(mode)
    gt = np.asarray(params["gamma_t"], dtype=float)
    phi = np.asarray(params["phi"], dtype=float)
    theta = np.asarray(params["theta"], dtype=float)
    r = np.asarray(params["r"], dtype=float)
    n = np.asarray(mean_photon_number(params["kT"]), dtype=float)
    vt = np.asarray(decay_clock(gt, params["lambda"], mode), dtype=float)
    coeffs = solution_coefficients(vt, n, r)
    cols = {}
    fa = None
    for out in outputs:
        if out == "qfi_analytic":
            fa = np.asarray(qfi_analytic(phi, theta, coeffs)) if fa is None else fa
            cols[out] = fa
        elif out == "qfi_eigen":
            rho = closed_form_rho(phi, theta, coeffs)
            cols[out] = np.asarray(qfi_eigen(rho, drho_analytic(phi, theta, coeffs)))
        elif out == "qfi_thermal":
            cols[out] = np.asarray(qfi_thermal(vt, n)) * np.ones_like(gt)
        elif out == "bloch":
            rho = closed_form_rho(phi, theta, coeffs)
            c = 2 * rho[..., 0, 1]
            cols["bloch_x"], cols["bloch_y"] = c.real, c.imag
            cols["bloch_z"] = (rho[..., 0, 0] - rho[..., 1, 1]).real
        elif out == "advantage":
            adv, _ = squeezing_advantage(phi, theta, coeffs, n)
            cols[out] = np.asarray(adv, dtype=float)
    return cols


def _thread_count():
    raw = os.environ.get("QFI_THREADS", "").strip()
    if not raw:
        return 1
    try:
        return max(int(raw), 1)
    except ValueError:
        raise ConfigError(f"QFI_THREADS must be a positive integer, got {raw!r}") from None


def _locate_singularity(spec, params, lo, hi):
    for i in range(lo, hi):
        row = {k: v[i:i + 1] for k, v in params.items()}
        try:
            evaluate_points(row, spec.mode, spec.outputs)
        except SingularityError as exc:
            context = ", ".join(f"{k}={float(row[k][0])!r}" for k in PARAMETERS)
            raise SingularityError(f"row {i} ({context}): {exc}") from exc
    raise AssertionError("singularity vanished on row-wise re-evaluation")


def run_sweep(spec: SweepSpec, threads=None) -> SweepTable:
    """Evaluate ``spec`` on its full Cartesian grid.

    Rows are split into fixed-size chunks that may be evaluated on several
    threads (``threads`` or the QFI_THREADS environment variable); results
    are assembled in chunk order so the table never depends on scheduling.
    """
    params = spec.grid()
    total = len(params["phi"])
    bounds = [(lo, min(lo + CHUNK_ROWS, total)) for lo in range(0, total, CHUNK_ROWS)]

    def work(bound):
        lo, hi = bound
        chunk = {k: v[lo:hi] for k, v in params.items()}
        try:
            cols = evaluate_points(chunk, spec.mode, spec.outputs)
        except SingularityError:
            _locate_singularity(spec, params, lo, hi)
        cols.update({k: chunk[k] for k in PARAMETERS})
        return np.column_stack([cols[c] for c in spec.columns()])

    workers = threads if threads is not None else _thread_count()
    if workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            blocks = list(pool.map(work, bounds))
    else:
        blocks = [work(b) for b in bounds]
    return SweepTable(spec.columns(), np.vstack(blocks))


def _span(lo, hi, points):
    return tuple(np.linspace(lo, hi, points))


def figure_preset(fig_id, points=DEFAULT_POINTS, **overrides) -> SweepSpec:
    """Sweep reproducing one figure panel.

    ``overrides`` replace fixed parameters, e.g. ``figure_preset("fig3a",
    **{"lambda": 0.01})`` for a narrower spectrum than the default 0.1.
    The kT of fig6 is read as 0.5 in units of omega0, like every other panel.
    """
    if fig_id not in FIGURES:
        raise ConfigError(f"unknown figure id {fig_id!r}; valid ids: " + ", ".join(FIGURES))
    if points < 2:
        raise ConfigError("points must be >= 2")
    nm, mk = EvolutionMode.NON_MARKOVIAN, EvolutionMode.MARKOVIAN
    times = _span(0.0, 10.0, points)
    squeezing = (0.0, 0.2, 0.5, 1.0)
    offset = None
    if fig_id in ("fig2a", "fig2b"):
        fixed = {"r": 1.5, "kT": 0.5, "lambda": 0.1}
        if fig_id == "fig2a":
            fixed["theta"] = 0.0
            axes = [("gamma_t", times), ("phi", _span(0, 2 * math.pi, points))]
        else:
            fixed["phi"] = 0.0
            axes = [("gamma_t", times), ("theta", _span(0, 2 * math.pi, points))]
        mode, outputs = nm, ("qfi_analytic",)
    elif fig_id in ("fig3a", "fig3b"):
        fixed = {"r": 0.0, "lambda": 0.1, "phi": 0.0, "theta": 0.0}
        axes = [("gamma_t", times), ("kT", (0.0, 0.5, 1.0, 2.0))]
        mode = nm if fig_id == "fig3a" else mk
        outputs = ("qfi_analytic", "qfi_thermal")
    elif fig_id in ("fig4a", "fig4b", "fig4c", "fig4d"):
        markov = fig_id in ("fig4b", "fig4d")
        fixed = {"kT": 0.0, "lambda": 0.1, "gamma_t": 0.8 if markov else 5.0}
        if fig_id in ("fig4a", "fig4b"):
            fixed["theta"] = 0.0
        else:
            offset = 0.01
        axes = [("phi", _span(0, math.pi, points)), ("r", squeezing)]
        mode = mk if markov else nm
        outputs = ("qfi_analytic", "qfi_thermal", "advantage")
    elif fig_id == "fig5":
        fixed = {"gamma_t": 10.0, "lambda": 0.1, "phi": 0.0}
        offset = 0.01
        axes = [("kT", _span(0, 2, points)), ("r", _span(0, 2, points))]
        mode, outputs = nm, ("qfi_analytic",)
    else:  # fig6
        fixed = {"r": 0.5, "kT": 0.5, "phi": 0.0}
        offset = 0.01
        axes = [("gamma_t", times), ("lambda", (0.05, 0.1, 0.5, 2.0))]
        mode, outputs = nm, ("qfi_analytic",)

    axis_names = {a[0] for a in axes}
    for key, value in overrides.items():
        if key in axis_names:
            raise ConfigError(f"{key!r} is a swept axis of {fig_id}; it cannot be fixed")
        if key == "theta" and offset is not None:
            raise ConfigError(f"theta is tied to phi in {fig_id}")
        fixed[key] = value
    return SweepSpec(axes=axes, fixed=fixed, mode=mode, outputs=outputs, phase_offset=offset)
