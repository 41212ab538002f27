"""Semi-analytic wavepackets built from barrier-weighted plane waves.

The initial state is a Gaussian in the upper component,
``G(0, x) = (g(x), 0)`` with ``g(x) ~ exp(-(x - x0)^2 / 4 d^2) exp(+i p0 x / hbar)``,
normalised to unit charge. It is decomposed on positive- and negative-energy
free plane waves of positive momentum; only the positive-energy part scatters,
the negative-energy part propagates freely to the left.

Fields are evaluated region by region by quadrature over the momentum grid.
Partial sums are reduced chunk by chunk in a fixed order, so repeated
evaluations are bit-identical.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .amplitudes import (
    DEFAULT_NMAX, BarrierAmplitudes, Mode, dirac_barrier_closed_form,
    dirac_step_rectangular, kg_step_rectangular, kg_step_smooth, mse_assemble,
)
from .errors import DivergenceError
from .physics import (
    BarrierSpec, DiracSpinorRatios, Family, Kinematics, ParticleSpec,
    classify_regime, dirac_alphas, heaviside,
)

_CHUNK = 1024
SLOPE_WIDTHS = 5.0
POLE_WARN_LOOP = 1e6


@dataclass(frozen=True)
class InitialGaussian:
    x0: float
    p0: float
    d: float

    def __post_init__(self):
        if not self.d > 0:
            raise ValueError("Gaussian width d must be positive")

    def sigma_p(self, hbar: float = 1.0) -> float:
        return hbar / (2 * self.d)

    def check_clearance(self, spec: BarrierSpec | None = None) -> bool:
        """Warn when the packet starts within 3 d of the left barrier edge."""
        if abs(self.x0) < 3 * self.d:
            warnings.warn(f"initial packet centre x0={self.x0} lies within 3d of the barrier edge",
                          stacklevel=2)
            return False
        return True

    def upper_component(self, x, hbar: float = 1.0):
        """Unit-charge initial upper component on ``x``."""
        x = np.asarray(x, dtype=float)
        norm = (2 * np.pi * self.d**2) ** -0.25
        return norm * np.exp(-((x - self.x0) ** 2) / (4 * self.d**2) + 1j * self.p0 * x / hbar)


@dataclass(frozen=True)
class MomentumSpectrum:
    """Quadrature nodes over positive momenta and branch coefficients.

    ``c_plus``/``c_minus`` already include the Gaussian Fourier amplitude and
    its normalisation, so ``sum(weights * c * plane_wave)`` is the field.
    """

    equation: str
    p: np.ndarray
    weights: np.ndarray
    c_plus: np.ndarray
    c_minus: np.ndarray
    gaussian: InitialGaussian
    particle: ParticleSpec


@dataclass
class SpinorField:
    x: np.ndarray
    phi: np.ndarray
    chi: np.ndarray
    t: float
    equation: str
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.phi = np.asarray(self.phi, dtype=complex)
        self.chi = np.asarray(self.chi, dtype=complex)
        if not (self.x.shape == self.phi.shape == self.chi.shape) or self.x.ndim != 1:
            raise ValueError("x, phi and chi must be 1-D arrays of equal length")
        self.equation = self.equation.lower()
        if self.equation not in ("kg", "dirac"):
            raise ValueError(f"unknown equation {self.equation!r}")
        if self.x.size > 1:
            dx = np.diff(self.x)
            if np.any(dx <= 0) or not np.allclose(dx, dx[0], rtol=1e-9, atol=0):
                raise ValueError("grid must be strictly increasing and uniform")

    @property
    def dx(self) -> float:
        return float(self.x[1] - self.x[0])

    @property
    def psi(self):
        """Canonical Klein-Gordon wavefunction phi + chi."""
        return self.phi + self.chi


def simpson_weights(p: np.ndarray) -> np.ndarray:
    n = p.size
    if n < 3 or n % 2 == 0:
        raise ValueError("Simpson quadrature needs an odd number (>= 3) of samples")
    h = p[1] - p[0]
    w = np.full(n, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    return w * h / 3.0


def momentum_grid(g: InitialGaussian, ps: ParticleSpec, n_samples: int = 2049,
                  n_sigma: float = 10.0, p_min: float | None = None) -> np.ndarray:
    """Uniform grid over [max(p_min, p0 - n_sigma sp), p0 + n_sigma sp]."""
    sp = g.sigma_p(ps.hbar)
    lo = g.p0 - n_sigma * sp
    if p_min is None:
        p_min = 1e-3 * sp
    lo = max(lo, p_min)
    return np.linspace(lo, g.p0 + n_sigma * sp, n_samples)


def _check_grid(g: InitialGaussian, ps: ParticleSpec, p):
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size < 3:
        raise ValueError("momentum grid must be a 1-D array with at least 3 samples")
    if np.any(p <= 0):
        raise ValueError("momentum grid must contain strictly positive momenta only")
    dp = np.diff(p)
    if np.any(dp <= 0) or not np.allclose(dp, dp[0], rtol=1e-8, atol=0):
        raise ValueError("momentum grid must be uniform and increasing")
    sp = g.sigma_p(ps.hbar)
    if p[-1] < g.p0 + 6 * sp or (p[0] > g.p0 - 6 * sp and p[0] > 10 * dp[0]):
        warnings.warn("momentum grid spans less than +-6 sigma_p around p0", stacklevel=3)
    return p


def _gaussian_amplitude(g: InitialGaussian, hbar: float, p):
    # Fourier amplitude of upper_component: g(x) = int dp ghat(p) exp(i p x / hbar)
    norm = (2 * np.pi * g.d**2) ** -0.25 * g.d / (hbar * np.sqrt(np.pi))
    q = p - g.p0
    return norm * np.exp(-(g.d * q / hbar) ** 2 - 1j * q * g.x0 / hbar)


def kg_spectrum(g: InitialGaussian, ps: ParticleSpec, p_grid) -> MomentumSpectrum:
    """Klein-Gordon branch coefficients of the initial Gaussian.

    With branch spinors ``(mc^2 +- E, mc^2 -+ E) / 2mc^2`` the expansion
    coefficients are ``(E +- mc^2) / 2E`` times the Fourier amplitude.
    """
    p = _check_grid(g, ps, p_grid)
    E = ps.energy(p)
    mc2 = ps.rest_energy
    ghat = _gaussian_amplitude(g, ps.hbar, p)
    return MomentumSpectrum("kg", p, simpson_weights(p), (E + mc2) / (2 * E) * ghat,
                            (E - mc2) / (2 * E) * ghat, g, ps)


def dirac_spectrum(g: InitialGaussian, ps: ParticleSpec, p_grid) -> MomentumSpectrum:
    """Dirac branch coefficients ``n^+-(p) * ghat(p)`` of the initial Gaussian."""
    p = _check_grid(g, ps, p_grid)
    ratios = dirac_alphas(ps, 0.0, p)
    ghat = _gaussian_amplitude(g, ps.hbar, p)
    return MomentumSpectrum("dirac", p, simpson_weights(p), np.real(ratios.n1_plus) * ghat,
                            np.real(ratios.n1_minus) * ghat, g, ps)


@dataclass(frozen=True)
class AmplitudeTable:
    """Barrier coefficients sampled on a spectrum's momentum grid."""

    kinematics: Kinematics
    amplitudes: BarrierAmplitudes
    loop_modulus: np.ndarray
    ratios: DiracSpinorRatios | None = None


def kg_amplitude_table(spec: BarrierSpec, spectrum: MomentumSpectrum, n_max=DEFAULT_NMAX,
                       convention: str = "mirror") -> AmplitudeTable:
    kin = _kinematics(spec, spectrum)
    if spec.family is Family.SMOOTH_TANH:
        steps = kg_step_smooth(kin, spec.smoothness, spec.width, convention=convention)
    else:
        steps = kg_step_rectangular(kin, spec.width)
    loop = np.abs(steps.loop_factor)
    if np.any(loop > POLE_WARN_LOOP):
        p_bad = float(spectrum.p[np.argmax(loop)])
        warnings.warn(f"Klein-Gordon step amplitudes nearly singular at p1 = {p_bad:.6g} "
                      "(E = V/2 for a sharp step); the wavepacket integral is unreliable",
                      stacklevel=2)
    return AmplitudeTable(kin, mse_assemble(steps, n_max), loop)


def dirac_amplitude_table(spec: BarrierSpec, spectrum: MomentumSpectrum,
                          n_max=None) -> AmplitudeTable:
    """Dirac coefficients; closed form by default, MSE partial sums if ``n_max`` given.

    Smooth barriers reuse the sharp-edge coefficients (appropriate for steep edges).
    """
    kin = _kinematics(spec, spectrum)
    ratios = dirac_alphas(spectrum.particle, spec.height, spectrum.p)
    steps = dirac_step_rectangular(ratios, kin, spec.width)
    if n_max is None:
        amps = dirac_barrier_closed_form(ratios, kin, spec.width)
    else:
        amps = mse_assemble(steps, n_max)
    return AmplitudeTable(kin, amps, np.abs(steps.loop_factor), ratios)


def _kinematics(spec: BarrierSpec, spectrum: MomentumSpectrum) -> Kinematics:
    if not spec.is_barrier:
        raise ValueError("semi-analytic wavepackets need a rectangular or smooth barrier")
    kin = classify_regime(spectrum.particle, spec.height, spectrum.p)
    if not kin.uniform:
        warnings.warn("momentum grid straddles several scattering regimes", stacklevel=3)
    return kin


def _region_weights(x, L):
    return heaviside(-x), heaviside(x) * heaviside(L - x), heaviside(x - L)


def _quadrature(x, k_cols, coeffs):
    """sum_j coeffs[j] * exp(i k_cols[j] x), chunked over x for bounded memory."""
    out = np.zeros(x.size, dtype=complex)
    for start in range(0, x.size, _CHUNK):
        xs = x[start:start + _CHUNK]
        out[start:start + _CHUNK] = np.exp(1j * np.outer(xs, k_cols)) @ coeffs
    return out


def _check_causal(table: AmplitudeTable, allow_divergent: bool):
    if table.amplitudes.mode is Mode.MSE_PARTIAL or allow_divergent:
        return
    if np.any(table.loop_modulus >= 1):
        raise DivergenceError("resummed/connection amplitudes used where the multiple "
                              "scattering series diverges")


def _slope_metadata(spec: BarrierSpec, x):
    if spec.family is not Family.SMOOTH_TANH:
        return {}
    w = SLOPE_WIDTHS / spec.smoothness
    flagged = (np.abs(x) < w) | (np.abs(x - spec.width) < w)
    return {"slope_region_points": int(flagged.sum()), "slope_half_width": w,
            "excluded_intervals": slope_intervals(spec)}


def slope_intervals(spec: BarrierSpec):
    """Intervals around smooth edges where the regional plane-wave form is not valid."""
    if spec.family is not Family.SMOOTH_TANH:
        return []
    w = SLOPE_WIDTHS / spec.smoothness
    return [[-w, w], [spec.width - w, spec.width + w]]


def evaluate_kg(spec: BarrierSpec, spectrum: MomentumSpectrum, table: AmplitudeTable, t: float,
                x, allow_divergent: bool = False) -> SpinorField:
    """Klein-Gordon wavepacket at time ``t`` on grid ``x``.

    Plane waves in region j carry the spinor ``(mc^2 + E - V_j, mc^2 - E + V_j) / 2mc^2``
    (equal to ``(mc^2 +- E)`` in the field-free regions), so that phi + chi is
    the canonical wavefunction.
    """
    if spectrum.equation != "kg":
        raise ValueError("evaluate_kg needs a Klein-Gordon spectrum")
    _check_causal(table, allow_divergent)
    ps = spectrum.particle
    hbar, mc2, V, L = ps.hbar, ps.rest_energy, spec.height, spec.width
    x = np.asarray(x, dtype=float)
    p, w = spectrum.p, spectrum.weights
    E = ps.energy(p)
    amps = table.amplitudes
    p2 = np.asarray(table.kinematics.p2)
    pos = w * spectrum.c_plus * np.exp(-1j * E * t / hbar)
    neg = w * spectrum.c_minus * np.exp(1j * E * t / hbar)
    th1, th2, th3 = _region_weights(x, L)
    upper = (mc2 + E) / (2 * mc2)
    lower = (mc2 - E) / (2 * mc2)
    upper2 = (mc2 + E - V) / (2 * mc2)
    lower2 = (mc2 - E + V) / (2 * mc2)
    phi = np.zeros(x.size, dtype=complex)
    chi = np.zeros(x.size, dtype=complex)

    k1 = p / hbar
    m1 = th1 > 0
    if np.any(m1):
        xs = x[m1]
        refl = pos * amps.B1
        # negative-energy branch carries the spinor (mc^2 - E, mc^2 + E) / 2mc^2
        phi_r = _quadrature(xs, k1, pos * upper + neg * lower) + _quadrature(xs, -k1, refl * upper)
        chi_r = _quadrature(xs, k1, pos * lower + neg * upper) + _quadrature(xs, -k1, refl * lower)
        phi[m1] += th1[m1] * phi_r
        chi[m1] += th1[m1] * chi_r
    m2 = th2 > 0
    if np.any(m2):
        xs = x[m2]
        k2 = p2 / hbar
        a, b = pos * amps.A2, pos * amps.B2
        phi[m2] += th2[m2] * (_quadrature(xs, k2, a * upper2) + _quadrature(xs, -k2, b * upper2))
        chi[m2] += th2[m2] * (_quadrature(xs, k2, a * lower2) + _quadrature(xs, -k2, b * lower2))
    m3 = th3 > 0
    if np.any(m3):
        xs = x[m3]
        a = pos * amps.A3
        phi[m3] += th3[m3] * _quadrature(xs, k1, a * upper)
        chi[m3] += th3[m3] * _quadrature(xs, k1, a * lower)
    meta = {"method": "semi-analytic", "mode": amps.mode.value, "n_max": amps.n_max}
    meta.update(_slope_metadata(spec, x))
    return SpinorField(x, phi, chi, float(t), "kg", meta)


def evaluate_dirac(spec: BarrierSpec, spectrum: MomentumSpectrum, table: AmplitudeTable, t: float,
                   x, allow_divergent: bool = False) -> SpinorField:
    """Dirac wavepacket at time ``t`` on grid ``x``."""
    if spectrum.equation != "dirac":
        raise ValueError("evaluate_dirac needs a Dirac spectrum")
    _check_causal(table, allow_divergent)
    ps = spectrum.particle
    hbar, L = ps.hbar, spec.width
    x = np.asarray(x, dtype=float)
    p, w = spectrum.p, spectrum.weights
    E = ps.energy(p)
    amps = table.amplitudes
    r = table.ratios
    a1, a2 = r.alpha1_plus, r.alpha2_plus
    n1, n2 = r.n1_plus, r.n2_plus
    a1m, n1m = r.alpha1_minus, r.n1_minus
    p2 = np.asarray(table.kinematics.p2)
    pos = w * spectrum.c_plus * np.exp(-1j * E * t / hbar)
    neg = w * spectrum.c_minus * np.exp(1j * E * t / hbar)
    th1, th2, th3 = _region_weights(x, L)
    phi = np.zeros(x.size, dtype=complex)
    chi = np.zeros(x.size, dtype=complex)
    k1 = p / hbar

    m1 = th1 > 0
    if np.any(m1):
        xs = x[m1]
        fwd, back = pos * n1, pos * n1 * amps.B1
        negc = neg * n1m
        phi_r = _quadrature(xs, k1, fwd + negc) + _quadrature(xs, -k1, back)
        chi_r = (_quadrature(xs, k1, fwd * a1 + negc * a1m)
                 - _quadrature(xs, -k1, back * a1))
        phi[m1] += th1[m1] * phi_r
        chi[m1] += th1[m1] * chi_r
    m2 = th2 > 0
    if np.any(m2):
        xs = x[m2]
        k2 = p2 / hbar
        fwd, back = pos * n2 * amps.A2, pos * n2 * amps.B2
        phi[m2] += th2[m2] * (_quadrature(xs, k2, fwd) + _quadrature(xs, -k2, back))
        chi[m2] += th2[m2] * (_quadrature(xs, k2, fwd * a2) - _quadrature(xs, -k2, back * a2))
    m3 = th3 > 0
    if np.any(m3):
        xs = x[m3]
        fwd = pos * n1 * amps.A3
        phi[m3] += th3[m3] * _quadrature(xs, k1, fwd)
        chi[m3] += th3[m3] * _quadrature(xs, k1, fwd * a1)
    meta = {"method": "semi-analytic", "mode": amps.mode.value, "n_max": amps.n_max}
    meta.update(_slope_metadata(spec, x))
    return SpinorField(x, phi, chi, float(t), "dirac", meta)


def charge_density(f: SpinorField) -> np.ndarray:
    """|phi|^2 - |chi|^2 for Klein-Gordon (indefinite), |phi|^2 + |chi|^2 for Dirac."""
    a = f.phi.real**2 + f.phi.imag**2
    b = f.chi.real**2 + f.chi.imag**2
    return a - b if f.equation == "kg" else a + b


def region_charges(f: SpinorField, spec: BarrierSpec, rho=None):
    """Trapezoidal charge in x < 0, 0 <= x <= L, x > L and their total.

    Boundary grid points are shared with the theta(0) = 1/2 convention, so the
    three regional charges add up to the full trapezoidal integral.
    """
    rho = charge_density(f) if rho is None else rho
    x = f.x
    w = np.full(x.size, f.dx)
    w[0] = w[-1] = 0.5 * f.dx
    peak = np.max(np.abs(rho)) if rho.size else 0.0
    if peak > 0 and max(abs(rho[0]), abs(rho[-1])) > 1e-10 * peak:
        warnings.warn("charge density at the grid boundary exceeds 1e-10 of its peak",
                      stacklevel=2)
    L = spec.width if spec.is_barrier else 0.0
    th1, th2, th3 = _region_weights(x, L)
    q = [float(np.sum(w * th * rho)) for th in (th1, th2, th3)]
    return q[0], q[1], q[2], q[0] + q[1] + q[2]


def negative_branch_charge(spectrum: MomentumSpectrum) -> float:
    """Conserved charge carried by the freely moving negative-energy branch.

    KG: -(2 pi hbar) int |c^-|^2 (E / mc^2) dp. Dirac: (2 pi hbar) int |c^-|^2 dp.
    """
    ps = spectrum.particle
    scale = 2 * np.pi * ps.hbar
    dens = np.abs(spectrum.c_minus) ** 2
    if spectrum.equation == "kg":
        dens = -dens * ps.energy(spectrum.p) / ps.rest_energy
    return float(scale * np.sum(spectrum.weights * dens))


def mse_terms_needed(t: float, L: float, group_velocity: float, max_terms: int = 16) -> int:
    """Number of internal round trips that can have completed by time ``t``.

    The (n+1)-th loop cannot contribute before (n+1) * 2L / |v|, counted from
    t = 0 (the earliest conceivable entry into the barrier).
    """
    if t < 0:
        raise ValueError("time must be non-negative")
    v = abs(group_velocity)
    if v == 0:
        return max_terms
    n = int(np.floor(t * v / (2 * L)))
    return min(n, max_terms)
