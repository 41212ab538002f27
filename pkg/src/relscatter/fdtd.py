"""Finite-difference time evolution of the two-component KG and Dirac equations.

Hamiltonians (acting on ``(phi, chi)``):

    KG:    H = (sigma3 + i sigma2) (-hbar^2 / 2m) d^2/dx^2 + mc^2 sigma3 + V(x)
    Dirac: H = -i hbar c sigma1 d/dx + mc^2 sigma3 + V(x)

A step is ``exp(-i H dt / hbar)`` expanded as a truncated Taylor series of
banded operator applications. Spatial derivatives use 5-point 4th-order
stencils; points outside the grid are treated as zero.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, GridMismatchError, InstabilityError, StabilityError
from .physics import BarrierSpec, Family, ParticleSpec, potential_at
from .wavepacket import SpinorField, charge_density

D2_STENCIL = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0
D1_STENCIL = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
# max over k of the stencil symbols: |d2| <= (16/3)/dx^2, |d1| <= 1.3722/dx
D2_SYMBOL_MAX = 16.0 / 3.0
D1_SYMBOL_MAX = 1.3722
STABILITY_LIMIT = 0.5
DEFAULT_TAYLOR = 12
MAX_TAYLOR = 40
DEFECT_TOL = 1e-10
SPLITTINGS = ("none", "strang", "lie")


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid x_n = x_min + n dx, n = 0..Nx-1, with dx = l / Nx.

    ``x_min`` defaults to -l/2 (domain centred on the origin).
    """

    length: float
    n_points: int
    dt: float
    n_taylor: int = DEFAULT_TAYLOR
    x_min: float | None = None

    def __post_init__(self):
        if not self.length > 0:
            raise ConfigError("domain length must be positive")
        if int(self.n_points) != self.n_points or self.n_points < 5:
            raise ConfigError("grid needs at least 5 points (stencil width)")
        if not self.dt > 0:
            raise ConfigError("time step must be positive")
        if self.n_taylor < 1:
            raise ConfigError("Taylor order must be at least 1")
        if self.x_min is None:
            object.__setattr__(self, "x_min", -0.5 * self.length)

    @property
    def dx(self) -> float:
        return self.length / self.n_points

    @property
    def x(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.n_points)

    @property
    def momentum_cutoff(self) -> float:
        return math.pi / self.dx

    def check_cutoff(self, p_max: float, hbar: float = 1.0, factor: float = 100.0) -> bool:
        """Warn unless hbar pi / dx is at least ``factor`` times ``p_max``."""
        ok = hbar * self.momentum_cutoff >= factor * p_max
        if not ok:
            warnings.warn(f"momentum cutoff {hbar * self.momentum_cutoff:.3g} is below "
                          f"{factor:g} x p_max = {factor * p_max:.3g}", stacklevel=2)
        return ok


def _apply(f, stencil, out=None):
    n = f.shape[-1]
    if n < 5:
        raise ValueError("array length must be at least 5")
    if out is None:
        out = np.empty_like(f)
    out[...] = stencil[2] * f if stencil[2] != 0 else 0.0
    out[..., 1:] += stencil[1] * f[..., :-1]
    out[..., :-1] += stencil[3] * f[..., 1:]
    out[..., 2:] += stencil[0] * f[..., :-2]
    out[..., :-2] += stencil[4] * f[..., 2:]
    return out


def second_derivative_apply(f, dx: float):
    """4th-order second derivative with zero-padded (truncated) edge rows."""
    f = np.asarray(f)
    return _apply(f, D2_STENCIL) / dx**2


def first_derivative_apply(f, dx: float):
    """4th-order first derivative with zero-padded (truncated) edge rows."""
    f = np.asarray(f)
    return _apply(f, D1_STENCIL) / dx


def sample_potential(spec: BarrierSpec, x, dx: float):
    """Potential on the grid; sharp edges are cell-averaged.

    For the discontinuous families each sample is V times the fraction of the
    cell [x - dx/2, x + dx/2] inside the barrier, which reduces to theta(0) = 1/2
    for a grid point on an edge.
    """
    x = np.asarray(x, dtype=float)
    if spec.family is Family.SMOOTH_TANH:
        return potential_at(spec, x)
    lo, hi = x - 0.5 * dx, x + 0.5 * dx
    if spec.family is Family.RECTANGULAR:
        a, b = 0.0, spec.width
    elif spec.family is Family.STEP_LEFT:
        a, b = 0.0, np.inf
    else:
        a, b = -np.inf, spec.width
    frac = np.clip((np.minimum(hi, b) - np.maximum(lo, a)) / dx, 0.0, 1.0)
    return spec.height * frac


@dataclass
class BandedOperator:
    """``u = -i dt H / hbar`` (or its kinetic/potential part) as a banded action."""

    equation: str
    potential: np.ndarray
    stencil: np.ndarray
    kinetic: complex
    diag_upper: np.ndarray
    diag_lower: np.ndarray

    def apply(self, phi, chi):
        if self.equation == "kg":
            d = _apply(phi + chi, self.stencil)
            d *= self.kinetic
            return d + self.diag_upper * phi, -d + self.diag_lower * chi
        dphi = _apply(chi, self.stencil)
        dchi = _apply(phi, self.stencil)
        dphi *= self.kinetic
        dchi *= self.kinetic
        dphi += self.diag_upper * phi
        dchi += self.diag_lower * chi
        return dphi, dchi


@dataclass
class Propagator:
    equation: str
    grid: GridSpec
    particle: ParticleSpec
    barrier: BarrierSpec
    operator: BandedOperator
    n_taylor: int
    splitting: str
    mass_phase: np.ndarray | None = None
    defect: float = 0.0
    norm_bound: float = 0.0
    info: dict = field(default_factory=dict)

    @property
    def dt(self) -> float:
        return self.grid.dt

    def _taylor(self, phi, chi):
        acc_p, acc_c = phi.copy(), chi.copy()
        tp, tc = phi, chi
        for n in range(1, self.n_taylor + 1):
            tp, tc = self.operator.apply(tp, tc)
            inv = 1.0 / n
            tp *= inv
            tc *= inv
            acc_p += tp
            acc_c += tc
        return acc_p, acc_c

    def step(self, phi, chi):
        """One time step; returns new (phi, chi)."""
        if self.splitting == "none":
            return self._taylor(phi, chi)
        mp, mc = self.mass_phase
        if self.splitting == "lie":
            p, c = self._taylor(phi, chi)
            return mp * mp * p, mc * mc * c
        p, c = self._taylor(mp * phi, mc * chi)
        return mp * p, mc * c

    def apply(self, field_in: SpinorField, steps: int = 1) -> SpinorField:
        _check_grid(field_in, self.grid)
        phi, chi = field_in.phi.copy(), field_in.chi.copy()
        for _ in range(steps):
            phi, chi = self.step(phi, chi)
        return SpinorField(field_in.x, phi, chi, field_in.t + steps * self.dt,
                           field_in.equation, dict(field_in.metadata))

    def metric(self, a, b):
        """Conserved inner product: sigma3 (KG) or identity (Dirac) weighted."""
        sign = -1.0 if self.equation == "kg" else 1.0
        return np.vdot(a[0], b[0]) + sign * np.vdot(a[1], b[1])

    def unitarity_defect(self, n_states: int = 3, seed: int = 0) -> float:
        """max |<U a, S U b> - <a, S b>| over random normalised states."""
        rng = np.random.default_rng(seed)
        n = self.grid.n_points
        states = []
        for _ in range(n_states):
            v = rng.standard_normal((2, n)) + 1j * rng.standard_normal((2, n))
            v /= np.sqrt(np.sum(np.abs(v) ** 2))
            states.append((v[0], v[1]))
        stepped = [self.step(*s) for s in states]
        worst = 0.0
        for i in range(n_states):
            for j in range(i, n_states):
                d = self.metric(stepped[i], stepped[j]) - self.metric(states[i], states[j])
                worst = max(worst, abs(d))
        return worst


def stability_bound(equation: str, ps: ParticleSpec, dx: float, v_max: float) -> float:
    """Upper estimate of the spectral radius of H (energy units)."""
    if equation == "kg":
        kin = D2_SYMBOL_MAX * ps.hbar**2 / (2 * ps.mass * dx**2)
        # FV spectrum: sqrt(mc^2 (mc^2 + 2 T))
        e_max = math.sqrt(ps.rest_energy * (ps.rest_energy + 2 * kin))
    elif equation == "dirac":
        e_max = math.hypot(ps.rest_energy, D1_SYMBOL_MAX * ps.hbar * ps.c / dx)
    else:
        raise ConfigError(f"unknown equation {equation!r}")
    return e_max + v_max


def max_stable_dt(equation: str, ps: ParticleSpec, dx: float, v_max: float,
                  limit: float = STABILITY_LIMIT) -> float:
    return limit * ps.hbar / stability_bound(equation, ps, dx, v_max)


def build_propagator(equation: str, grid: GridSpec, spec: BarrierSpec, ps: ParticleSpec,
                     splitting: str = "none", adapt: bool = True) -> Propagator:
    """Truncated-Taylor step operator.

    ``splitting`` selects how the rest-mass term enters: ``"none"`` keeps it
    inside the Taylor series, ``"lie"`` applies the diagonal phase
    exp(-+i mc^2 dt / hbar) after the series, ``"strang"`` splits the phase
    symmetrically around it. Both split forms are pseudo-unitary; ``"lie"`` is
    first order in dt because the mass term does not commute with the kinetic one.
    """
    equation = equation.lower()
    if equation not in ("kg", "dirac"):
        raise ConfigError(f"unknown equation {equation!r}")
    if splitting not in SPLITTINGS:
        raise ConfigError(f"splitting must be one of {SPLITTINGS}")
    x = grid.x
    dx, dt, hbar = grid.dx, grid.dt, ps.hbar
    V = sample_potential(spec, x, dx)
    v_max = float(np.max(np.abs(V)))
    bound = stability_bound(equation, ps, dx, v_max) * dt / hbar
    if bound > STABILITY_LIMIT * (1 + 1e-12):
        raise StabilityError(f"time step {dt:g} violates the stability bound: ||u|| estimate "
                             f"{bound:.3g} > {STABILITY_LIMIT} (max dt "
                             f"{max_stable_dt(equation, ps, dx, v_max):.4g})")
    f = -1j * dt / hbar
    mc2 = ps.rest_energy if splitting == "none" else 0.0
    if equation == "kg":
        stencil = D2_STENCIL
        kinetic = f * (-(hbar**2) / (2 * ps.mass * dx**2))
    else:
        stencil = D1_STENCIL
        kinetic = f * (-1j * hbar * ps.c / dx)
    op = BandedOperator(equation, V, stencil, kinetic, f * (V + mc2), f * (V - mc2))
    mass_phase = None
    if splitting != "none":
        half = 0.5 * ps.rest_energy * dt / hbar
        mass_phase = (np.exp(-1j * half), np.exp(1j * half))
    prop = Propagator(equation, grid, ps, spec, op, grid.n_taylor, splitting, mass_phase,
                      norm_bound=bound)
    if adapt:
        prop.defect = prop.unitarity_defect()
        while prop.defect > DEFECT_TOL and prop.n_taylor < MAX_TAYLOR:
            prop.n_taylor += 2
            prop.defect = prop.unitarity_defect()
        if prop.defect > DEFECT_TOL:
            raise StabilityError(f"unitarity defect {prop.defect:.2e} above {DEFECT_TOL} "
                                 f"even with Taylor order {prop.n_taylor}")
    return prop


def _check_grid(f: SpinorField, grid: GridSpec):
    if f.x.size != grid.n_points:
        raise GridMismatchError(f"state has {f.x.size} points, grid has {grid.n_points}")
    if not np.allclose(f.x, grid.x, rtol=0, atol=1e-9 * grid.dx):
        raise GridMismatchError("state grid coordinates do not match the propagator grid")


def evolve(state: SpinorField, prop: Propagator, steps: int | None = None,
           snapshot_times=(), check_every: int = 200, monitor_every: int | None = None):
    """Advance ``state`` and record snapshots at the steps nearest to ``snapshot_times``.

    Returns a list of :class:`~relscatter.snapshot.Snapshot` in time order; the
    achieved time of each is stored in its field. ``steps`` defaults to the
    step of the last requested snapshot. With ``monitor_every`` the total
    charge is also sampled every that many steps and returned in the metadata
    of the final snapshot under ``"charge_history"``.
    """
    from .snapshot import FINITE_DIFFERENCE, Snapshot

    _check_grid(state, prop.grid)
    if state.equation != prop.equation:
        raise ConfigError("state and propagator describe different equations")
    dt = prop.dt
    times = sorted(float(t) for t in snapshot_times)
    targets = [max(0, int(round((t - state.t) / dt))) for t in times]
    if steps is None:
        steps = max(targets) if targets else 0
    if steps < 0:
        raise ValueError("steps must be non-negative")
    if targets and max(targets) > steps:
        raise ValueError("requested snapshot lies beyond the final step")
    dx = prop.grid.dx
    phi, chi = state.phi.copy(), state.chi.copy()
    q0 = float(np.sum(charge_density(state)) * dx)
    scale0 = max(float(np.max(np.abs(phi))), float(np.max(np.abs(chi))), 1e-300)
    history = []
    out = []
    want = {}
    for k, t in zip(targets, times):
        want.setdefault(k, []).append(t)

    def record(n):
        f = SpinorField(state.x, phi.copy(), chi.copy(), state.t + n * dt, prop.equation)
        q = float(np.sum(charge_density(f)) * dx)
        meta = {"method": FINITE_DIFFERENCE, "step": n, "dt": dt, "dx": dx,
                "n_taylor": prop.n_taylor, "splitting": prop.splitting,
                "total_charge": q, "initial_charge": q0}
        for t_req in want[n]:
            m = dict(meta, requested_t=t_req)
            out.append(Snapshot(f, FINITE_DIFFERENCE, m))

    if 0 in want:
        record(0)
    for n in range(1, steps + 1):
        phi, chi = prop.step(phi, chi)
        if n % check_every == 0 or n in want or n == steps:
            peak = max(float(np.max(np.abs(phi))), float(np.max(np.abs(chi))))
            if not np.isfinite(peak) or peak > 1e8 * scale0:
                raise InstabilityError(f"field blew up at step {n} (t = {state.t + n * dt:g}): "
                                       f"max |psi| = {peak:.3g}")
        if monitor_every and n % monitor_every == 0:
            history.append((state.t + n * dt, float((np.vdot(phi, phi) + (-1 if prop.equation == "kg" else 1)
                                                      * np.vdot(chi, chi)).real * dx)))
        if n in want:
            record(n)
    if steps == 0 and not out:
        return [Snapshot(state, FINITE_DIFFERENCE, {"step": 0, "total_charge": q0})]
    if monitor_every and out:
        out[-1].metadata["charge_history"] = history
    return out
