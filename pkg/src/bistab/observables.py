"""Measurable quantities: transmittance, populations, excitation diagnostics.

Transmittance of mode i is the intracavity intensity normalized by the
resonantly driven empty cavity, T_i = kappa_i^2 |alpha_i|^2 / eta_i^2, the
order parameter of the bistable transition. For a steady state it depends on
the drive only through the self-consistent inversion x_i, which also gives
the dispersive approximation T_i ~ 1 / (1 + C_i^2 x_i^2) with C_i the
cooperativity.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import UndefinedNormalizationError
from .model import MeanFieldState, SystemParams, cooperativity


def _state_of(candidate) -> MeanFieldState:
    # accept a bare state or anything carrying one (e.g. SteadyState)
    if isinstance(candidate, MeanFieldState):
        return candidate
    return candidate.state


def transmittance_exact(candidate, params: SystemParams, mode: int) -> float:
    """T_i = kappa_i^2 |alpha_i|^2 / eta_i^2 from the stored field amplitude.

    Meaningful only when alpha_i is the self-consistent response to the
    drive in params; pass the steady state computed at those parameters,
    never a stale one.
    """
    st = _state_of(candidate)
    if mode == 1:
        k, eta, alpha = params.kappa1, params.eta1, st.alpha1
    elif mode == 2:
        k, eta, alpha = params.kappa2, params.eta2, st.alpha2
    else:
        raise ValueError(f"mode must be 1 or 2, got {mode!r}")
    if eta == 0.0:
        raise UndefinedNormalizationError(
            f"eta{mode} = 0: the empty-cavity normalization vanishes; use "
            f"transmittance_from_inversion for the undriven limit"
        )
    return k * k * (alpha.real ** 2 + alpha.imag ** 2) / (eta * eta)


def transmittance_from_inversion(x: float, params: SystemParams,
                                 mode: int) -> float:
    """Exact T_i as a function of the inversion alone.

    T_i = kappa_i^2 |D_i|^2 / |(kappa_i - i dC_i) D_i - g_i^2 x|^2, which is
    the eta -> 0 limit of transmittance_exact at fixed x and coincides with
    it at every steady state; well defined for undriven modes (arc
    endpoints).
    """
    if mode == 1:
        g, k, dc = params.g1, params.kappa1, params.delta_C1
        gt, da = params.gamma1 + params.Gamma1, params.delta_A1
    elif mode == 2:
        g, k, dc = params.g2, params.kappa2, params.delta_C2
        gt, da = params.gamma2 + params.Gamma2, params.delta_A2
    else:
        raise ValueError(f"mode must be 1 or 2, got {mode!r}")
    D = gt - 1j * da
    B = (k - 1j * dc) * D - g * g * x
    return k * k * abs(D) ** 2 / abs(B) ** 2


def transmittance_approx(x: float, params: SystemParams, mode: int) -> float:
    """Dispersive approximation T_i = 1 / (1 + C_i^2 x^2)."""
    c = cooperativity(params, mode)
    return 1.0 / (1.0 + c * c * x * x)


def purity_proxy(candidate) -> float:
    """Total excited population ne1 + ne2; small values mean nearly pure
    (ground-manifold) steady states."""
    st = _state_of(candidate)
    return st.ne1 + st.ne2


@dataclass(frozen=True)
class ObservableRecord:
    """Everything plotted from one steady state."""

    T1: float
    T2: float
    ng1: float
    ng2: float
    ne1: float
    ne2: float
    purity_proxy: float
    photon1: float  # |alpha_1|^2 N, reporting only
    photon2: float


def observable_record(candidate, params: SystemParams) -> ObservableRecord:
    """Bundle the plotted observables of a (steady) state.

    Transmittance falls back to the inversion form for an undriven mode,
    where the empty-cavity normalization is a limit rather than a ratio.
    """
    st = _state_of(candidate)
    ts = []
    for mode, eta, x in ((1, params.eta1, st.inversion1),
                         (2, params.eta2, st.inversion2)):
        if eta > 0.0:
            ts.append(transmittance_exact(st, params, mode))
        else:
            ts.append(transmittance_from_inversion(x, params, mode))
    return ObservableRecord(
        T1=ts[0], T2=ts[1],
        ng1=st.ng1, ng2=st.ng2, ne1=st.ne1, ne2=st.ne2,
        purity_proxy=st.ne1 + st.ne2,
        photon1=abs(st.alpha1) ** 2 * params.N,
        photon2=abs(st.alpha2) ** 2 * params.N,
    )


@dataclass(frozen=True)
class DiagnosticReport:
    """Physicality diagnostics; empty flags means the state is physical."""

    flags: tuple

    @property
    def ok(self) -> bool:
        return len(self.flags) == 0

    def __bool__(self) -> bool:
        return self.ok


def physicality_check(state: MeanFieldState, tol: float = 1e-9) -> DiagnosticReport:
    """Flag populations outside [0, 1], broken normalization, and coherence
    bounds |m_i|^2 > ne_i ng_i (valid for single-atom density matrices; the
    mean-field flow is not guaranteed to preserve it, hence a diagnostic
    rather than an invariant)."""
    if tol < 0.0:
        raise ValueError(f"tol must be >= 0, got {tol!r}")
    flags = []
    for name in ("ne1", "ng1", "ne2", "ng2"):
        v = getattr(state, name)
        if v < -tol or v > 1.0 + tol:
            flags.append(f"{name} = {v!r} outside [0, 1]")
    dev = abs(state.total_population - 1.0)
    if dev > tol:
        flags.append(f"population sum deviates from 1 by {dev:.3e}")
    for mode, m, ne, ng in ((1, state.m1, state.ne1, state.ng1),
                            (2, state.m2, state.ne2, state.ng2)):
        if abs(m) ** 2 > ne * ng + tol:
            flags.append(
                f"coherence bound violated on transition {mode}: "
                f"|m|^2 = {abs(m) ** 2:.3e} > ne ng = {ne * ng:.3e}"
            )
    return DiagnosticReport(flags=tuple(flags))
