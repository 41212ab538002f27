"""Scenario configuration and orchestration of the two propagation methods."""
from __future__ import annotations

import hashlib
import json
import math
import warnings
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__
from .amplitudes import DEFAULT_NMAX, RESUM
from .errors import ConfigError, ScatterError
from .fdtd import GridSpec, build_propagator, evolve, max_stable_dt, sample_potential
from .physics import BarrierSpec, Family, ParticleSpec
from .snapshot import FINITE_DIFFERENCE, SEMI_ANALYTIC, Snapshot, compare, export_snapshot
from .wavepacket import (
    InitialGaussian, SpinorField, charge_density, dirac_amplitude_table, dirac_spectrum, evaluate_dirac,
    evaluate_kg, kg_amplitude_table, kg_spectrum, momentum_grid, negative_branch_charge,
    region_charges,
)

METHODS = ("semi", "fd", "both")
EDGE_MARGIN_WIDTHS = 6.0


@dataclass(frozen=True)
class ScenarioConfig:
    """One scenario, read from a flat JSON object (natural units unless overridden).

    ``dt = None`` selects the largest stable step; ``x_min = None`` centres the
    domain on the origin. ``n_max`` is an int, ``"resum"`` or None (Dirac closed form).
    """

    equation: str = "kg"
    mass: float = 1.0
    c: float = 1.0
    hbar: float = 1.0
    family: str = "rectangular"
    height: float = 0.0
    width: float = 1.0
    smoothness: float | None = None
    x0: float = -50.0
    p0: float = 1.0
    d: float = 5.0
    length: float = 400.0
    n_points: int = 8192
    x_min: float | None = None
    dt: float | None = None
    n_taylor: int = 12
    splitting: str = "none"
    n_samples: int = 2049
    n_sigma: float = 10.0
    snapshot_times: tuple = (0.0,)
    n_max: int | str | None = DEFAULT_NMAX
    allow_divergent: bool = False
    method: str = "both"
    output_dir: str | None = None
    plot_script: bool = False

    def __post_init__(self):
        object.__setattr__(self, "equation", str(self.equation).lower())
        object.__setattr__(self, "snapshot_times", tuple(float(t) for t in self.snapshot_times))
        if self.equation not in ("kg", "dirac"):
            raise ConfigError(f"equation must be 'kg' or 'dirac', got {self.equation!r}")
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}")
        times = self.snapshot_times
        if not times:
            raise ConfigError("at least one snapshot time is required")
        if any(t < 0 for t in times) or any(b < a for a, b in zip(times, times[1:])):
            raise ConfigError("snapshot times must be non-negative and non-decreasing")
        if isinstance(self.n_max, str) and self.n_max != RESUM:
            raise ConfigError(f"n_max must be an integer, '{RESUM}' or null")
        if self.n_samples % 2 == 0:
            raise ConfigError("n_samples must be odd (Simpson quadrature)")

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown configuration keys: {', '.join(unknown)}")
        try:
            return cls(**data)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_file(cls, path) -> "ScenarioConfig":
        try:
            data = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: top level must be a JSON object")
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["snapshot_times"] = list(self.snapshot_times)
        return d

    @property
    def content_hash(self) -> str:
        """Digest of everything that affects numerical output."""
        d = self.to_dict()
        for key in ("output_dir", "plot_script", "method"):
            d.pop(key)
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def replace(self, **changes) -> "ScenarioConfig":
        d = self.to_dict()
        d.update(changes)
        return ScenarioConfig.from_dict(d)

    # derived objects
    def particle(self) -> ParticleSpec:
        return ParticleSpec(self.mass, self.c, self.hbar)

    def barrier(self) -> BarrierSpec:
        return BarrierSpec(Family(self.family), self.height, self.width, self.smoothness)

    def gaussian(self) -> InitialGaussian:
        return InitialGaussian(self.x0, self.p0, self.d)

    def grid(self) -> GridSpec:
        dx = self.length / self.n_points
        dt = self.dt
        if dt is None:
            v = np.max(np.abs(sample_potential(self.barrier(), self._x(dx), dx)))
            dt = max_stable_dt(self.equation, self.particle(), dx, float(v))
        return GridSpec(self.length, self.n_points, dt, self.n_taylor, self.x_min)

    def _x(self, dx):
        x_min = -0.5 * self.length if self.x_min is None else self.x_min
        return x_min + dx * np.arange(self.n_points)


@dataclass
class ComparisonReport:
    scenario_hash: str
    equation: str
    metrics: list = field(default_factory=list)
    charges: dict = field(default_factory=dict)
    negative_branch_charge: float = 0.0
    superradiance: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def _charge_row(s: Snapshot, spec: BarrierSpec):
    q1, q2, q3, qt = region_charges(s.field, spec, s.rho)
    return {"t": s.t, "Q1": q1, "Q2": q2, "Q3": q3, "Qtotal": qt}


def superradiance_ratio(row: dict, q_neg: float, q_initial: float = 1.0) -> float:
    """Reflected over incident charge of the positive-energy (scattering) part.

    The negative-energy branch moves freely to the left and stays in region 1,
    so it is removed from both the region-1 charge and the initial charge.
    """
    return (row["Q1"] - q_neg) / (q_initial - q_neg)


def check_domain(cfg: ScenarioConfig):
    """Refuse configurations whose light cone reaches the domain edge too early."""
    grid = cfg.grid()
    x_lo, x_hi = grid.x_min, grid.x_min + (grid.n_points - 1) * grid.dx
    margin = EDGE_MARGIN_WIDTHS * cfg.d
    if cfg.x0 - margin < x_lo or cfg.x0 + margin > x_hi:
        raise ConfigError(f"initial packet support x0 +- {EDGE_MARGIN_WIDTHS:g}d "
                          f"= [{cfg.x0 - margin:g}, {cfg.x0 + margin:g}] is not inside "
                          f"the domain [{x_lo:g}, {x_hi:g}]")
    t_last = cfg.snapshot_times[-1]
    reach = cfg.c * t_last
    if cfg.x0 - margin - reach < x_lo or cfg.x0 + margin + reach > x_hi:
        t_max = min(cfg.x0 - margin - x_lo, x_hi - cfg.x0 - margin) / cfg.c
        raise ConfigError(f"wavefront reaches the domain edge at t = {t_max:.4g}, "
                          f"before the last snapshot t = {t_last:g}")
    return grid


def _edge_alignment_warning(cfg: ScenarioConfig, grid: GridSpec):
    spec = cfg.barrier()
    if cfg.equation != "dirac" or spec.family is Family.SMOOTH_TANH:
        return None
    edges = [0.0] if spec.family is Family.STEP_LEFT else [spec.width] \
        if spec.family is Family.STEP_RIGHT else [0.0, spec.width]
    off = [e for e in edges
           if abs((e - grid.x_min) / grid.dx - round((e - grid.x_min) / grid.dx)) > 1e-6]
    if off:
        msg = (f"sharp potential edge(s) at {off} fall between grid points; expect "
               "spurious high-momentum (doubled) modes in the Dirac evolution")
        warnings.warn(msg, stacklevel=3)
        return msg
    return None


def _semi_field(cfg, spec, spectrum, table, t, x):
    if cfg.equation == "kg":
        return evaluate_kg(spec, spectrum, table, t, x, allow_divergent=cfg.allow_divergent)
    return evaluate_dirac(spec, spectrum, table, t, x, allow_divergent=cfg.allow_divergent)


def semi_setup(cfg: ScenarioConfig, n_max=None):
    ps, spec, g = cfg.particle(), cfg.barrier(), cfg.gaussian()
    n_max = cfg.n_max if n_max is None else n_max
    p = momentum_grid(g, ps, cfg.n_samples, cfg.n_sigma)
    if cfg.equation == "kg":
        spectrum = kg_spectrum(g, ps, p)
        table = kg_amplitude_table(spec, spectrum, DEFAULT_NMAX if n_max is None else n_max)
    else:
        spectrum = dirac_spectrum(g, ps, p)
        table = dirac_amplitude_table(spec, spectrum, n_max)
    return spectrum, table


def initial_state(cfg: ScenarioConfig, x) -> SpinorField:
    g = cfg.gaussian()
    phi = g.upper_component(x, cfg.hbar)
    return SpinorField(x, phi, np.zeros_like(phi), 0.0, cfg.equation)


def run_scenario(cfg: ScenarioConfig, method: str | None = None):
    """Run the configured pipelines; returns (snapshots, ComparisonReport).

    Snapshots are ordered by method (finite-difference first), then time.
    Semi-analytic fields are evaluated at the times actually reached by the
    finite-difference run when both methods are active.
    """
    method = cfg.method if method is None else method
    if method not in METHODS:
        raise ConfigError(f"method must be one of {METHODS}")
    try:
        return _run(cfg, method)
    except ScatterError as exc:
        raise type(exc)(f"scenario {cfg.content_hash}: {exc}") from exc


def _run(cfg: ScenarioConfig, method: str):
    grid = check_domain(cfg)
    spec, ps = cfg.barrier(), cfg.particle()
    x = grid.x
    report = ComparisonReport(cfg.content_hash, cfg.equation)
    q_initial = float(np.sum(charge_density(initial_state(cfg, x))) * grid.dx)
    meta = {"scenario_hash": cfg.content_hash, "version": __version__}
    fd_snaps, semi_snaps = [], []
    times = list(cfg.snapshot_times)

    if method in ("fd", "both"):
        note = _edge_alignment_warning(cfg, grid)
        if note:
            report.warnings.append(note)
        prop = build_propagator(cfg.equation, grid, spec, ps, splitting=cfg.splitting)
        raw = evolve(initial_state(cfg, x), prop, snapshot_times=times)
        fd_snaps = [Snapshot(s.field, FINITE_DIFFERENCE, {**s.metadata, **meta}) for s in raw]
        times = [s.t for s in fd_snaps]

    spectrum = None
    if method in ("semi", "both"):
        if not spec.is_barrier:
            raise ConfigError("semi-analytic packets need a rectangular or smooth barrier")
        spectrum, table = semi_setup(cfg)
        for t in times:
            f = _semi_field(cfg, spec, spectrum, table, t, x)
            semi_snaps.append(Snapshot(f, SEMI_ANALYTIC, dict(meta)))
    elif spec.is_barrier:
        spectrum = semi_setup(cfg)[0]

    if spectrum is not None:
        report.negative_branch_charge = negative_branch_charge(spectrum)
    for name, snaps in ((FINITE_DIFFERENCE, fd_snaps), (SEMI_ANALYTIC, semi_snaps)):
        if not snaps:
            continue
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            rows = [_charge_row(s, spec) for s in snaps] if spec.is_barrier else []
        report.warnings.extend(sorted({f"{name}: {w.message}" for w in caught}))
        report.charges[name] = rows
        if rows:
            report.superradiance[name] = superradiance_ratio(
                rows[-1], report.negative_branch_charge, q_initial)
    for a, b in zip(semi_snaps, fd_snaps):
        report.metrics.append(compare(a, b))

    snapshots = fd_snaps + semi_snaps
    if cfg.output_dir:
        write_outputs(cfg, snapshots, report)
    return snapshots, report


def snapshot_filename(s: Snapshot, index: int) -> str:
    tag = "fd" if s.provenance == FINITE_DIFFERENCE else "semi"
    return f"{tag}_{index:03d}.csv"


def write_outputs(cfg: ScenarioConfig, snapshots, report: ComparisonReport) -> Path:
    out = Path(cfg.output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    counters = {}
    names = []
    for s in snapshots:
        k = counters.get(s.provenance, 0)
        counters[s.provenance] = k + 1
        name = snapshot_filename(s, k)
        export_snapshot(s, out / name)
        names.append((name, s.t, s.provenance))
    (out / "report.json").write_text(json.dumps(report.to_dict(), indent=1, sort_keys=True) + "\n")
    (out / "config.json").write_text(json.dumps(cfg.to_dict(), indent=1, sort_keys=True) + "\n")
    if cfg.plot_script:
        (out / "plot.gp").write_text(_plot_script(names, cfg))
    return out


def _plot_script(names, cfg: ScenarioConfig) -> str:
    lines = ["# gnuplot script: charge density per snapshot",
             "set datafile separator ','", "set xlabel 'x'", "set ylabel 'rho'"]
    if cfg.barrier().is_barrier:
        lines.append("set arrow from 0, graph 0 to 0, graph 1 nohead dt 3")
        lines.append(f"set arrow from {cfg.width}, graph 0 to {cfg.width}, graph 1 nohead dt 3")
    by_time = {}
    for name, t, prov in names:
        by_time.setdefault(round(t, 9), []).append((name, prov))
    for t, entries in by_time.items():
        plots = []
        for name, prov in entries:
            # finite-difference curves drawn upside down
            col = "(-$6)" if prov == FINITE_DIFFERENCE else "6"
            plots.append(f"'{name}' skip 1 using 1:{col} with lines title '{prov}'")
        lines.append(f"set title 't = {t:g}'")
        lines.append("plot " + ", ".join(plots))
        lines.append("pause -1")
    return "\n".join(lines) + "\n"


def amplitude_sweep(cfg: ScenarioConfig, p_values=None, n_max=None):
    """Barrier coefficients and MSE convergence data over a sweep of p1."""
    from .amplitudes import (convergence, dirac_barrier_closed_form, dirac_step_rectangular,
                             kg_step_rectangular, kg_step_smooth, mse_assemble)
    from .physics import classify_regime, dirac_alphas

    ps, spec = cfg.particle(), cfg.barrier()
    if not spec.is_barrier:
        raise ConfigError("amplitude sweep needs a rectangular or smooth barrier")
    if p_values is None:
        sp = cfg.gaussian().sigma_p(cfg.hbar)
        p_values = np.linspace(max(cfg.p0 - 6 * sp, 1e-3 * sp), cfg.p0 + 6 * sp, 25)
    p = np.asarray(p_values, dtype=float)
    n_max = (cfg.n_max if cfg.n_max is not None else DEFAULT_NMAX) if n_max is None else n_max
    rows = []
    for p1 in p:
        kin = classify_regime(ps, spec.height, p1)
        if cfg.equation == "kg":
            if spec.family is Family.SMOOTH_TANH:
                steps = kg_step_smooth(kin, spec.smoothness, spec.width)
            else:
                steps = kg_step_rectangular(kin, spec.width)
        else:
            ratios = dirac_alphas(ps, spec.height, p1)
            steps = dirac_step_rectangular(ratios, kin, spec.width)
        conv = convergence(steps)
        try:
            amps = mse_assemble(steps, n_max)
        except ScatterError:
            amps = None
        if amps is None and cfg.equation == "dirac":
            amps = dirac_barrier_closed_form(dirac_alphas(ps, spec.height, p1), kin, spec.width)
        row = {"p1": float(p1), "regime": kin.regime.value, "loop_modulus": float(conv.modulus),
               "converges": bool(conv.converges)}
        for name in ("B1", "A2", "B2", "A3"):
            v = complex(getattr(amps, name)) if amps is not None else complex(math.nan, math.nan)
            row[f"re_{name}"], row[f"im_{name}"] = v.real, v.imag
        rows.append(row)
    return rows
