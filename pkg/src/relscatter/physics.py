"""Constants, potential profiles and relativistic kinematics.

All routines accept scalars or numpy arrays of incident momenta; the plane-wave
conventions are ``exp(+i p x / hbar)`` for right-moving positive-energy waves.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import BranchError


@dataclass(frozen=True)
class ParticleSpec:
    mass: float = 1.0
    c: float = 1.0
    hbar: float = 1.0

    def __post_init__(self):
        for name in ("mass", "c", "hbar"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be strictly positive, got {value!r}")

    @property
    def rest_energy(self) -> float:
        return self.mass * self.c**2

    def energy(self, p):
        """Positive free-particle energy sqrt(m^2 c^4 + p^2 c^2)."""
        p = np.asarray(p, dtype=float)
        return np.sqrt(self.rest_energy**2 + (p * self.c) ** 2)

    def group_velocity(self, p):
        return np.asarray(p) * self.c**2 / self.energy(p)


class Family(str, enum.Enum):
    RECTANGULAR = "rectangular"
    SMOOTH_TANH = "smooth"
    STEP_LEFT = "step_left"
    STEP_RIGHT = "step_right"


@dataclass(frozen=True)
class BarrierSpec:
    """Potential profile.

    ``width`` is ignored by the step families and ``smoothness`` is only
    used by the tanh barrier.
    """

    family: Family = Family.RECTANGULAR
    height: float = 0.0
    width: float = 1.0
    smoothness: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        if not np.isfinite(self.height):
            raise ValueError("barrier height must be a finite real number")
        if self.family in (Family.RECTANGULAR, Family.SMOOTH_TANH) and not self.width > 0:
            raise ValueError("barrier width must be positive")
        if self.family is Family.SMOOTH_TANH:
            if self.smoothness is None or not self.smoothness > 0:
                raise ValueError("smooth barrier needs a positive smoothness parameter")

    @property
    def is_barrier(self) -> bool:
        return self.family in (Family.RECTANGULAR, Family.SMOOTH_TANH)


def heaviside(x):
    """Unit step with the midpoint convention theta(0) = 1/2."""
    return np.heaviside(x, 0.5)


def potential_at(spec: BarrierSpec, x):
    x = np.asarray(x, dtype=float)
    V, L = spec.height, spec.width
    if spec.family is Family.RECTANGULAR:
        out = V * heaviside(x) * heaviside(L - x)
    elif spec.family is Family.SMOOTH_TANH:
        eps = spec.smoothness
        out = 0.5 * V * (np.tanh(eps * x) - np.tanh(eps * (x - L)))
    elif spec.family is Family.STEP_LEFT:
        out = V * heaviside(x)
    else:
        out = V * heaviside(L - x)
    return out[()] if out.ndim == 0 else out


class Regime(str, enum.Enum):
    SUBCRITICAL = "propagating-sub"
    EVANESCENT = "evanescent"
    KLEIN = "klein-zone"


@dataclass(frozen=True)
class Kinematics:
    """Momenta and energy for one incident momentum (or an array of them).

    ``p2`` is complex; its branch follows the regime: negative real in the
    Klein zone, positive real when subcritical, ``+i*kappa`` when evanescent.
    ``regime`` is a single :class:`Regime` when all samples agree, otherwise an
    object array of per-sample regimes.
    """

    particle: ParticleSpec
    height: float
    p1: Any
    energy: Any
    p2: Any
    regime: Any = field(compare=False)

    @property
    def p3(self):
        return self.p1

    @property
    def uniform(self) -> bool:
        return isinstance(self.regime, Regime)

    def group_velocity_inside(self):
        """Group velocity c^2 p2 / (E - V) of the region-2 wave (real p2 only)."""
        c = self.particle.c
        return np.real(self.p2) * c**2 / (self.energy - self.height)


def classify_regime(ps: ParticleSpec, V: float, p1) -> Kinematics:
    p1_arr = np.asarray(p1, dtype=float)
    if np.any(~(p1_arr > 0)):
        raise ValueError("incident momentum p1 must be strictly positive")
    c, mc2 = ps.c, ps.rest_energy
    E = ps.energy(p1_arr)
    p2_sq = ((E - V) ** 2 - mc2**2) / c**2
    klein = (V - E > mc2) & (p2_sq > 0)
    sub = (E - V > mc2) & (p2_sq > 0)
    root = np.sqrt(np.abs(p2_sq))
    p2 = np.where(klein, -root, np.where(sub, root, 1j * root)).astype(complex)
    if V == 0:
        p2 = p1_arr.astype(complex)
    codes = np.where(klein, 2, np.where(sub, 0, 1))
    table = (Regime.SUBCRITICAL, Regime.EVANESCENT, Regime.KLEIN)
    if p1_arr.ndim == 0:
        return Kinematics(ps, V, float(p1_arr), float(E), complex(p2), table[int(codes)])
    unique = np.unique(codes)
    if unique.size == 1:
        regime = table[int(unique[0])]
    else:
        regime = np.array([table[k] for k in codes.ravel()], dtype=object).reshape(codes.shape)
    return Kinematics(ps, V, p1_arr, E, p2, regime)


@dataclass(frozen=True)
class DiracSpinorRatios:
    """Lower/upper component ratios of the 2-spinor plane waves, per region."""

    alpha1_plus: Any
    alpha2_plus: Any
    alpha1_minus: Any
    alpha2_minus: Any

    @staticmethod
    def _norm(alpha):
        return 1.0 / np.sqrt(1.0 + np.asarray(alpha, dtype=complex) ** 2)

    @property
    def n1_plus(self):
        return self._norm(self.alpha1_plus)

    @property
    def n2_plus(self):
        return self._norm(self.alpha2_plus)

    @property
    def n1_minus(self):
        return self._norm(self.alpha1_minus)

    @property
    def n2_minus(self):
        return self._norm(self.alpha2_minus)


def dirac_alphas(ps: ParticleSpec, V: float, p1) -> DiracSpinorRatios:
    """Spinor ratios for the positive- and negative-energy branches.

    The region-2 positive-energy ratio is ``c p2 / (mc^2 + E - V)`` with the
    regime-selected p2; in the Klein zone this coincides with the closed form
    ``-sqrt(p1^2 c^2 - 2 V E + V^2) / (mc^2 + E - V)`` and is positive.
    """
    kin = classify_regime(ps, V, p1)
    c, mc2 = ps.c, ps.rest_energy
    E = np.asarray(kin.energy, dtype=float)
    p1_arr = np.asarray(kin.p1, dtype=float)
    den2p = mc2 + E - V
    den2m = mc2 - E - V
    if np.any(den2p == 0) or np.any(den2m == 0):
        raise BranchError("spinor ratio denominator vanishes (mc^2 +/- E - V = 0)")
    a1p = p1_arr * c / (mc2 + E)
    # p c / (mc^2 - E), rewritten to avoid cancellation at small p
    a1m = -(mc2 + E) / (p1_arr * c)
    a2p = c * np.asarray(kin.p2) / den2p
    root_m = np.sqrt((p1_arr * c) ** 2 + 2 * V * E + V**2 + 0j)
    a2m = -root_m / den2m
    if np.ndim(p1) == 0:
        a1p, a1m, a2p, a2m = float(a1p), float(a1m), complex(a2p), complex(a2m)
        if a2p.imag == 0:
            a2p = a2p.real
        if a2m.imag == 0:
            a2m = a2m.real
    return DiracSpinorRatios(a1p, a2p, a1m, a2m)
