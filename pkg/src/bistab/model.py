"""Parameters and state containers for the two-mode four-level cavity model.

The model: two cavity modes, each coherently driven and each coupled to one
optical transition of a four-level medium (two ground levels g1, g2 and two
excited levels e1, e2). Transition i is g_i <-> e_i with collective coupling
g_i = g_single * sqrt(N). Each excited level decays back down its own
transition at rate gamma_i and across to the other ground level at rate
Gamma_i, which is what couples the two otherwise independent mode+transition
blocks. Level populations are fractions summing to one; all rates and
frequencies are in units of gamma_1.

Real state embedding (12 components, fixed ordering used everywhere):

    [Re a1, Im a1, Re a2, Im a2, Re m1, Im m1, Re m2, Im m2,
     ne1, ng1, ne2, ng2]
"""
from __future__ import annotations

from dataclasses import dataclass, field, fields, replace

import numpy as np

from .errors import InvalidParameterError
from .kernels import (
    I_CROSS1,
    I_CROSS2,
    I_DA1,
    I_DA2,
    I_DC1,
    I_DC2,
    I_ETA1,
    I_ETA2,
    I_G1,
    I_G2,
    I_GAMMA1,
    I_GAMMA2,
    I_KAPPA1,
    I_KAPPA2,
    NDIM,
    NP,
    jac12,
    rhs12,
)

STATE_LABELS = ("re_alpha1", "im_alpha1", "re_alpha2", "im_alpha2",
                "re_m1", "im_m1", "re_m2", "im_m2",
                "ne1", "ng1", "ne2", "ng2")


@dataclass(frozen=True)
class SystemParams:
    """Physical parameters in units of gamma_1.

    The defaults are the reference configuration used throughout: symmetric
    rates, resonant cavities, red-detuned atoms, N = 5000 atoms, undriven.
    Construction only coerces to float; use validate() / require_valid()
    to check admissibility, so that deliberately pathological values can
    still be probed in diagnostics.
    """

    gamma1: float = 1.0  # direct decay e1 -> g1
    gamma2: float = 1.0  # direct decay e2 -> g2
    Gamma1: float = 1.0  # cross decay e1 -> g2
    Gamma2: float = 1.0  # cross decay e2 -> g1
    kappa1: float = 1.32  # cavity linewidth, mode 1
    kappa2: float = 1.32
    g_single: float = 0.1  # single-atom coupling
    N: float = 5e3  # atom number
    delta_A1: float = -12.0  # drive-atom detuning
    delta_A2: float = -12.0
    delta_C1: float = 0.0  # drive-cavity detuning
    delta_C2: float = 0.0
    eta1: float = 0.0  # drive amplitude, mode 1
    eta2: float = 0.0

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            try:
                object.__setattr__(self, f.name, float(v))
            except (TypeError, ValueError):
                raise InvalidParameterError(
                    f"{f.name} must be a real number, got {v!r}"
                ) from None

    # --- admissibility ---

    def validate(self) -> "ValidationReport":
        """Report every violated invariant; empty report means admissible."""
        bad = []
        for name in ("gamma1", "gamma2", "Gamma1", "Gamma2", "kappa1", "kappa2"):
            v = getattr(self, name)
            if not np.isfinite(v) or v <= 0.0:
                bad.append(f"{name}: nonpositive linewidth ({v!r})")
        for name in ("eta1", "eta2"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0.0:
                bad.append(f"{name}: negative drive amplitude ({v!r})")
        if not np.isfinite(self.N) or self.N < 1.0:
            bad.append(f"N: atom number must be >= 1 ({self.N!r})")
        for name in ("g_single", "delta_A1", "delta_A2", "delta_C1", "delta_C2"):
            v = getattr(self, name)
            if not np.isfinite(v):
                bad.append(f"{name}: not finite ({v!r})")
        return ValidationReport(violations=tuple(bad))

    def require_valid(self) -> "SystemParams":
        report = self.validate()
        if not report.ok:
            raise InvalidParameterError(
                "invalid parameters: " + "; ".join(report.violations)
            )
        return self

    # --- derived couplings ---

    @property
    def g1(self) -> float:
        """Collective coupling of transition 1, g_single * sqrt(N)."""
        return self.g_single * float(np.sqrt(self.N))

    @property
    def g2(self) -> float:
        """Collective coupling of transition 2, g_single * sqrt(N)."""
        return self.g_single * float(np.sqrt(self.N))

    # --- convenience constructors ---

    def with_drive(self, eta1: float, eta2: float) -> "SystemParams":
        return replace(self, eta1=float(eta1), eta2=float(eta2))

    def with_atom_number(self, N: float) -> "SystemParams":
        return replace(self, N=float(N))

    def with_drive_polar(self, radius: float, phi: float,
                         from_axis1: bool = False) -> "SystemParams":
        """Drive pair on a circle of fixed total intensity eta1^2 + eta2^2.

        By default phi is measured from the eta_2 axis (phi = 0 drives mode 2
        only, phi = pi/2 drives mode 1 only); from_axis1=True transposes the
        convention so that phi = arctan(eta2/eta1).
        """
        if radius < 0.0:
            raise InvalidParameterError(f"radius must be >= 0, got {radius!r}")
        s, c = np.sin(phi), np.cos(phi)
        if from_axis1:
            return self.with_drive(radius * c, radius * s)
        return self.with_drive(radius * s, radius * c)

    def to_vector(self) -> np.ndarray:
        """Packed parameter vector in the kernel layout."""
        p = np.empty(NP)
        p[I_GAMMA1] = self.gamma1
        p[I_GAMMA2] = self.gamma2
        p[I_CROSS1] = self.Gamma1
        p[I_CROSS2] = self.Gamma2
        p[I_KAPPA1] = self.kappa1
        p[I_KAPPA2] = self.kappa2
        p[I_G1] = self.g1
        p[I_G2] = self.g2
        p[I_DA1] = self.delta_A1
        p[I_DA2] = self.delta_A2
        p[I_DC1] = self.delta_C1
        p[I_DC2] = self.delta_C2
        p[I_ETA1] = self.eta1
        p[I_ETA2] = self.eta2
        return p

    def swap_modes(self) -> "SystemParams":
        """Exchange every index-1 quantity with its index-2 partner."""
        return replace(
            self,
            gamma1=self.gamma2, gamma2=self.gamma1,
            Gamma1=self.Gamma2, Gamma2=self.Gamma1,
            kappa1=self.kappa2, kappa2=self.kappa1,
            delta_A1=self.delta_A2, delta_A2=self.delta_A1,
            delta_C1=self.delta_C2, delta_C2=self.delta_C1,
            eta1=self.eta2, eta2=self.eta1,
        )


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of SystemParams.validate: the list of violated invariants."""

    violations: tuple = field(default_factory=tuple)

    @property
    def ok(self) -> bool:
        return len(self.violations) == 0

    def __bool__(self) -> bool:
        return self.ok


def validate(params: SystemParams) -> ValidationReport:
    return params.validate()


def cooperativity(params: SystemParams, mode: int) -> float:
    """Collective cooperativity C_i = g_i^2 / sqrt((dC^2+kappa^2)(dA^2+gamma^2))."""
    if mode == 1:
        g, k, dc, da, gm = (params.g1, params.kappa1, params.delta_C1,
                            params.delta_A1, params.gamma1)
    elif mode == 2:
        g, k, dc, da, gm = (params.g2, params.kappa2, params.delta_C2,
                            params.delta_A2, params.gamma2)
    else:
        raise InvalidParameterError(f"mode must be 1 or 2, got {mode!r}")
    return g * g / float(np.sqrt((dc * dc + k * k) * (da * da + gm * gm)))


@dataclass(frozen=True)
class MeanFieldState:
    """One mean-field configuration: two fields, two polarizations, four levels."""

    alpha1: complex
    alpha2: complex
    m1: complex
    m2: complex
    ne1: float
    ng1: float
    ne2: float
    ng2: float

    @classmethod
    def empty(cls, ground_split: float = 0.5) -> "MeanFieldState":
        """Dark state: no fields, population split between the ground levels."""
        if not 0.0 <= ground_split <= 1.0:
            raise InvalidParameterError(
                f"ground_split must lie in [0, 1], got {ground_split!r}"
            )
        return cls(0j, 0j, 0j, 0j, 0.0, ground_split, 0.0, 1.0 - ground_split)

    @classmethod
    def from_vector(cls, y) -> "MeanFieldState":
        y = np.asarray(y, dtype=float)
        if y.shape != (NDIM,):
            raise InvalidParameterError(f"expected shape ({NDIM},), got {y.shape}")
        return cls(
            alpha1=complex(y[0], y[1]), alpha2=complex(y[2], y[3]),
            m1=complex(y[4], y[5]), m2=complex(y[6], y[7]),
            ne1=float(y[8]), ng1=float(y[9]), ne2=float(y[10]), ng2=float(y[11]),
        )

    def to_vector(self) -> np.ndarray:
        """Real 12-vector in the documented ordering; exact inverse of from_vector."""
        return np.array([
            self.alpha1.real, self.alpha1.imag,
            self.alpha2.real, self.alpha2.imag,
            self.m1.real, self.m1.imag,
            self.m2.real, self.m2.imag,
            self.ne1, self.ng1, self.ne2, self.ng2,
        ])

    def swap_modes(self) -> "MeanFieldState":
        return MeanFieldState(
            alpha1=self.alpha2, alpha2=self.alpha1,
            m1=self.m2, m2=self.m1,
            ne1=self.ne2, ng1=self.ng2, ne2=self.ne1, ng2=self.ng1,
        )

    @property
    def total_population(self) -> float:
        return self.ne1 + self.ng1 + self.ne2 + self.ng2

    @property
    def inversion1(self) -> float:
        return self.ne1 - self.ng1

    @property
    def inversion2(self) -> float:
        return self.ne2 - self.ng2

    def is_physical(self, tol: float = 1e-9) -> bool:
        """Populations in [0, 1] and normalized, within tol."""
        pops = (self.ne1, self.ng1, self.ne2, self.ng2)
        if any(v < -tol or v > 1.0 + tol for v in pops):
            return False
        return abs(self.total_population - 1.0) <= tol


# === functional wrappers ===================================================


def rhs(state: MeanFieldState, params: SystemParams) -> np.ndarray:
    """Time derivative of the packed state vector."""
    out = np.empty(NDIM)
    rhs12(state.to_vector(), params.to_vector(), out)
    return out


def jacobian(state: MeanFieldState, params: SystemParams) -> np.ndarray:
    """Analytic 12x12 Jacobian of the flow at the given state."""
    J = np.empty((NDIM, NDIM))
    jac12(state.to_vector(), params.to_vector(), J)
    return J


def random_physical_state(rng: np.random.Generator,
                          field_scale: float = 1.0) -> MeanFieldState:
    """Draw a normalized state with O(field_scale) fields, for stress tests."""
    z = rng.standard_normal(8) * field_scale
    pops = rng.random(4)
    pops /= pops.sum()
    y = np.concatenate([z, pops])
    # polarizations are bounded in the physical region; shrink them
    y[4:8] *= 0.25
    return MeanFieldState.from_vector(y)
