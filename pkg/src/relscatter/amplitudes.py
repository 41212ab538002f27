"""Step and barrier scattering amplitudes.

A barrier is treated as two steps: the left edge at x = 0 and the right edge at
x = L. Step amplitudes are named ``{t,r}_{l,r}^{i,o}``: transmission/reflection,
left/right edge, wave incoming from the left (i) or from inside the barrier (o).
Barrier coefficients multiply ``exp(+-i p_j x / hbar)`` in region j, with the
incident amplitude fixed to A1 = 1 and no wave coming from the right (B3 = 0).

Every function broadcasts over arrays of incident momenta.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Any, Literal

import numpy as np

from .errors import DivergenceError, SingularError
from .physics import DiracSpinorRatios, Kinematics
from .special import gamma_ratio

DEFAULT_NMAX = 4
RESUM = "resum"


@dataclass(frozen=True)
class StepAmplitudes:
    t_l_i: Any
    t_l_o: Any
    t_r_i: Any
    r_l_i: Any
    r_l_o: Any
    r_r_i: Any

    @property
    def loop_factor(self):
        return self.r_l_o * self.r_r_i


class Mode(str, enum.Enum):
    MSE_PARTIAL = "mse-partial"
    MSE_RESUMMED = "mse-resummed"
    CONNECTION = "connection-formula"


@dataclass(frozen=True)
class BarrierAmplitudes:
    A1: Any
    B1: Any
    A2: Any
    B2: Any
    A3: Any
    B3: Any
    mode: Mode
    n_max: int | None = None

    @property
    def reflection(self):
        return self.B1

    @property
    def transmission(self):
        return self.A3

    def as_array(self) -> np.ndarray:
        """Stack (B1, A2, B2, A3) along a trailing axis."""
        return np.stack(np.broadcast_arrays(self.B1, self.A2, self.B2, self.A3), axis=-1)


@dataclass(frozen=True)
class ConvergenceReport:
    loop_factor: Any
    modulus: Any
    converges: Any


def _phase(p, L, hbar):
    return np.exp(1j * p * L / hbar)


def _check_nonzero(den, what):
    if np.any(np.asarray(den) == 0):
        raise SingularError(f"vanishing denominator in {what}")


def kg_step_rectangular(kin: Kinematics, L: float) -> StepAmplitudes:
    """Klein-Gordon amplitudes of the two sharp steps bounding [0, L]."""
    p1, p2, hbar = kin.p1, kin.p2, kin.particle.hbar
    den = p1 + p2
    _check_nonzero(den, "Klein-Gordon step amplitudes (p1 + p2 = 0)")
    r_l_o = (p2 - p1) / den
    t_l_o = 2 * p2 / den
    return StepAmplitudes(
        t_l_i=2 * p1 / den,
        t_l_o=t_l_o,
        t_r_i=t_l_o * _phase(p2 - p1, L, hbar),
        r_l_i=(p1 - p2) / den,
        r_l_o=r_l_o,
        r_r_i=r_l_o * _phase(2 * p2, L, hbar),
    )


def smooth_step_parameters(kin: Kinematics, eps: float):
    """(nu, mu, lambda) for the tanh step of smoothness ``eps``."""
    ps = kin.particle
    hbar, c = ps.hbar, ps.c
    nu = np.asarray(kin.p1) / (2 * hbar * eps)
    mu = np.asarray(kin.p2) / (2 * hbar * eps)
    lam = 0.5 + np.sqrt(complex((hbar * c * eps) ** 2 - kin.height**2)) / (2 * hbar * c * eps)
    if lam.imag == 0:
        lam = lam.real
    return nu, mu, lam


def kg_step_smooth(kin: Kinematics, eps: float, L: float,
                   convention: Literal["mirror", "printed"] = "mirror") -> StepAmplitudes:
    """Klein-Gordon amplitudes of the two tanh steps of a smooth barrier.

    The incoming-from-left amplitudes use the classic Gamma-function ratios
    for a tanh step centred at x = 0. The amplitudes for a wave hitting the
    left edge from inside are the same ratios with (mu, nu) -> (-mu, -nu),
    which for real parameters is the complex conjugate of the commonly quoted
    form. The right edge is the mirror image of the left one, so
    ``t_r_i = t_l_o exp(i (p2 - p1) L / hbar)`` and
    ``r_r_i = r_l_o exp(2 i p2 L / hbar)``.

    ``convention="printed"`` swaps the t_r_i phase for
    ``exp(2 i eps mu L (mu - nu))`` as it is often transcribed; it is kept only
    so the two conventions can be compared against the sharp-step limit.
    """
    if not eps > 0:
        raise ValueError("smoothness eps must be positive")
    if kin.height == 0:
        # no step at all; the Gamma ratios would hit 1 / Gamma(0)
        return kg_step_rectangular(kin, L)
    nu, mu, lam = smooth_step_parameters(kin, eps)
    i = 1j
    t_l_i = gamma_ratio([-i * nu + lam - i * mu, 1 - i * nu - lam - i * mu],
                        [1 - 2 * i * mu, -2 * i * nu])
    r_l_i = gamma_ratio([2 * i * nu, -i * nu + lam - i * mu, 1 - i * nu - lam - i * mu],
                        [-2 * i * nu, i * nu + lam - i * mu, 1 + i * nu - lam - i * mu])
    t_l_o = gamma_ratio([-i * mu + lam - i * nu, 1 - i * mu - lam - i * nu],
                        [1 - 2 * i * nu, -2 * i * mu])
    r_l_o = gamma_ratio([2 * i * mu, -i * mu + lam - i * nu, 1 - i * mu - lam - i * nu],
                        [-2 * i * mu, i * mu + lam - i * nu, 1 + i * mu - lam - i * nu])
    hbar = kin.particle.hbar
    p1, p2 = kin.p1, kin.p2
    if convention == "mirror":
        t_r_i = t_l_o * _phase(p2 - p1, L, hbar)
    elif convention == "printed":
        t_r_i = t_l_o * np.exp(2j * eps * mu * L * (mu - nu))
    else:
        raise ValueError(f"unknown phase convention {convention!r}")
    r_r_i = r_l_o * _phase(2 * p2, L, hbar)
    return StepAmplitudes(t_l_i, t_l_o, t_r_i, r_l_i, r_l_o, r_r_i)


def dirac_step_rectangular(ratios: DiracSpinorRatios, kin: Kinematics, L: float) -> StepAmplitudes:
    """Positive-energy Dirac amplitudes of the sharp steps bounding [0, L]."""
    a1, a2 = ratios.alpha1_plus, ratios.alpha2_plus
    n1, n2 = ratios.n1_plus, ratios.n2_plus
    den = a1 + a2
    _check_nonzero(den, "Dirac step amplitudes (alpha1 + alpha2 = 0)")
    hbar = kin.particle.hbar
    r_l_i = (a1 - a2) / den
    r_l_o = -r_l_i
    t_l_o = 2 * a2 / den * (n2 / n1)
    return StepAmplitudes(
        t_l_i=2 * a1 / den * (n1 / n2),
        t_l_o=t_l_o,
        t_r_i=t_l_o * _phase(kin.p2 - kin.p1, L, hbar),
        r_l_i=r_l_i,
        r_l_o=r_l_o,
        r_r_i=r_l_o * _phase(2 * kin.p2, L, hbar),
    )


def convergence(steps: StepAmplitudes) -> ConvergenceReport:
    rho = steps.loop_factor
    mod = np.abs(rho)
    return ConvergenceReport(rho, mod, mod < 1)


def mse_assemble(steps: StepAmplitudes, n_max: int | str = DEFAULT_NMAX) -> BarrierAmplitudes:
    """Sum the multiple scattering series, truncated after ``n_max`` loops.

    ``n_max="resum"`` replaces the geometric sum by 1 / (1 - loop factor) and
    is refused when any loop factor has modulus >= 1.
    """
    rho = steps.loop_factor
    if n_max == RESUM:
        if np.any(np.abs(rho) >= 1):
            worst = float(np.max(np.abs(rho)))
            raise DivergenceError(f"multiple scattering series diverges (|loop factor| = {worst:.6g})")
        series = 1.0 / (1.0 - rho)
        mode, n = Mode.MSE_RESUMMED, None
    else:
        n = int(n_max)
        if n < 0:
            raise ValueError("n_max must be non-negative")
        series = np.zeros_like(np.asarray(rho, dtype=complex))
        term = np.ones_like(series)
        for _ in range(n + 1):
            series = series + term
            term = term * rho
        if series.ndim == 0:
            series = complex(series)
        mode = Mode.MSE_PARTIAL
    t_l_i = steps.t_l_i
    return BarrierAmplitudes(
        A1=1.0,
        B1=steps.r_l_i + t_l_i * steps.t_l_o * steps.r_r_i * series,
        A2=t_l_i * series,
        B2=t_l_i * steps.r_r_i * series,
        A3=t_l_i * steps.t_r_i * series,
        B3=0.0,
        mode=mode,
        n_max=n,
    )


def mse_term(steps: StepAmplitudes, n: int):
    """The n-th contribution to the transmitted amplitude A3."""
    return steps.t_l_i * steps.loop_factor**n * steps.t_r_i


def dirac_barrier_closed_form(ratios: DiracSpinorRatios, kin: Kinematics, L: float) -> BarrierAmplitudes:
    """Positive-energy Dirac barrier coefficients from the connection formulas."""
    a1, a2 = ratios.alpha1_plus, ratios.alpha2_plus
    n12 = ratios.n1_plus / ratios.n2_plus
    hbar = kin.particle.hbar
    phi = kin.p2 * L / hbar
    e2 = np.exp(2j * phi)
    sin, cos = np.sin(phi), np.cos(phi)
    den_s = 2j * a1 * a2 * cos + (a1**2 + a2**2) * sin
    den_e = (a1 + a2) ** 2 - (a1 - a2) ** 2 * e2
    _check_nonzero(den_s, "Dirac barrier closed form (resonance)")
    _check_nonzero(den_e, "Dirac barrier closed form (resonance)")
    return BarrierAmplitudes(
        A1=1.0,
        B1=(a1 - a2) * (a1 + a2) * sin / den_s,
        A2=2 * a1 * (a1 + a2) / den_e * n12,
        B2=-2 * a1 * (a1 - a2) * e2 / den_e * n12,
        A3=2j * a1 * a2 * np.exp(-1j * kin.p1 * L / hbar) / den_s,
        B3=0.0,
        mode=Mode.CONNECTION,
    )


def matching_oracle(equation: str, kin: Kinematics, L: float,
                    ratios: DiracSpinorRatios | None = None) -> BarrierAmplitudes:
    """Solve the 4x4 continuity system of a rectangular barrier directly.

    Klein-Gordon matches psi and psi' at x = 0 and x = L; Dirac matches both
    spinor components. Unknowns are (B1, A2, B2, A3).
    """
    equation = equation.lower()
    hbar = kin.particle.hbar
    p1, p2 = np.broadcast_arrays(np.asarray(kin.p1, dtype=complex), np.asarray(kin.p2, dtype=complex))
    shape = p1.shape
    p1, p2 = p1.ravel(), p2.ravel()
    e2p = np.exp(1j * p2 * L / hbar)
    e2m = np.exp(-1j * p2 * L / hbar)
    e1 = np.exp(1j * p1 * L / hbar)
    one = np.ones_like(p1)
    zero = np.zeros_like(p1)
    if equation == "kg":
        # value and derivative (divided by i/hbar) at each edge
        w1, w2 = p1, p2
        u1 = u2 = one
    elif equation == "dirac":
        if ratios is None:
            raise ValueError("Dirac matching needs spinor ratios")
        a1 = np.broadcast_to(np.asarray(ratios.alpha1_plus, dtype=complex), shape).ravel()
        a2 = np.broadcast_to(np.asarray(ratios.alpha2_plus, dtype=complex), shape).ravel()
        u1 = np.broadcast_to(np.asarray(ratios.n1_plus, dtype=complex), shape).ravel()
        u2 = np.broadcast_to(np.asarray(ratios.n2_plus, dtype=complex), shape).ravel()
        w1, w2 = a1 * u1, a2 * u2
    else:
        raise ValueError(f"unknown equation {equation!r}")
    # rows: first/second matched quantity at x=0, then at x=L
    M = np.stack([
        np.stack([-u1, u2, u2, zero], axis=-1),
        np.stack([w1, w2, -w2, zero], axis=-1),
        np.stack([zero, u2 * e2p, u2 * e2m, -u1 * e1], axis=-1),
        np.stack([zero, w2 * e2p, -w2 * e2m, -w1 * e1], axis=-1),
    ], axis=-2)
    rhs = np.stack([u1, w1, zero, zero], axis=-1)
    cond = np.linalg.cond(M)
    if np.any(~np.isfinite(cond)) or np.any(cond > 1e14):
        raise SingularError("matching system is singular")
    sol = np.linalg.solve(M, rhs[..., None])[..., 0]
    B1, A2, B2, A3 = (sol[:, k].reshape(shape) for k in range(4))
    if not shape:
        B1, A2, B2, A3 = complex(B1), complex(A2), complex(B2), complex(A3)
    return BarrierAmplitudes(1.0, B1, A2, B2, A3, 0.0, Mode.CONNECTION)
