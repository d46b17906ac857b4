"""Exact steady-state solver via elimination to a single real polynomial.

At a fixed point the field and polarization equations are linear in alpha_i
and m_i once the inversion x_i = ne_i - ng_i of each transition is known:

    alpha_i = eta_i / (kappa_i - i dC_i - g_i^2 x_i / D_i),  D_i = gt_i - i dA_i

with gt_i = gamma_i + Gamma_i the total polarization decay. Substituting into
the excited-level balance gives ne_i as a rational function of x_i alone,

    ne_i = -d_i x_i / Q_i(x_i),    d_i = g_i^2 eta_i^2,
    Q_i(x) = (a_i - g_i^2 x)^2 + b_i^2,
    a_i = kappa_i gt_i - dC_i dA_i,   b_i = kappa_i dA_i + dC_i gt_i,

so Q_i > 0 whenever b_i != 0. The two remaining conditions are the cross-flow
balance Gamma_1 ne_1 = Gamma_2 ne_2 and the population normalization
(2 ne_1 - x_1) + (2 ne_2 - x_2) = 1 (see fixed_point_residuals). Clearing
denominators turns them into one degree-7 polynomial P(x_1) plus an explicit
lift of x_2:

    x_2 = M(x_1) / (Gamma_2 Q_1(x_1)),
    M(x) = -2 (Gamma_1 + Gamma_2) d_1 x - Gamma_2 (1 + x) Q_1(x),

    P(x) = -Gamma_1 d_1 x [ (a_2 Gamma_2 Q_1 - g_2^2 M)^2
                            + b_2^2 Gamma_2^2 Q_1^2 ]
           + Gamma_2^2 d_2 M Q_1^2.

For admissible parameters (positive drives and decay rates) P < 0 on x > 0
and P > 0 on x <= -1, so every real root lies in (-1, 0] and the solution
count is odd. Step-by-step algebra in docs/steady_state_reduction.md.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateParameterError,
    MarginalStabilityError,
    SingularParameterError,
)
from .kernels import NDIM, OK, SNAPPED, jac12, newton12, rhs12, settle_loop
from .model import MeanFieldState, SystemParams

EPS_ZERO = 1e-9  # eigenvalue real parts inside this band count as zero
EPS_STAB = 1e-9  # strict-stability margin on the remaining spectrum
DEDUP_TOL = 1e-7  # max-norm distance below which two fixed points coincide

# left null vector of the Jacobian (population conservation), unit norm
_V_CONS = np.array([0.0] * 8 + [0.5] * 4)


def _mode_rates(params: SystemParams, mode: int):
    if mode == 1:
        return (params.g1, params.kappa1, params.delta_C1,
                params.gamma1 + params.Gamma1, params.delta_A1, params.eta1)
    if mode == 2:
        return (params.g2, params.kappa2, params.delta_C2,
                params.gamma2 + params.Gamma2, params.delta_A2, params.eta2)
    raise ValueError(f"mode must be 1 or 2, got {mode!r}")


def response_coeffs(params: SystemParams, mode: int):
    """(a, b, d) of the rational excited-population law for one mode."""
    g, k, dc, gt, da, eta = _mode_rates(params, mode)
    return k * gt - dc * da, k * da + dc * gt, g * g * eta * eta


def alpha_of_x(x: float, params: SystemParams, mode: int) -> complex:
    """Steady cavity field of one mode at fixed inversion of its transition."""
    g, k, dc, gt, da, eta = _mode_rates(params, mode)
    den = (k - 1j * dc) - g * g * x / (gt - 1j * da)
    if abs(den) < 1e-14:
        raise SingularParameterError(
            f"cavity response pole: |denominator| = {abs(den):.3e} at "
            f"x = {x!r}, mode {mode}"
        )
    return eta / den


def polarization_of_x(x: float, params: SystemParams, mode: int) -> complex:
    """Steady polarization m_i = g_i x alpha_i / D_i at fixed inversion."""
    g, _, _, gt, da, _ = _mode_rates(params, mode)
    return g * x * alpha_of_x(x, params, mode) / (gt - 1j * da)


def excited_population_of_x(x: float, params: SystemParams, mode: int) -> float:
    """ne_i(x) = -g_i^2 x |alpha_i(x)|^2 / |D_i|^2; nonnegative for x <= 0."""
    g, _, _, gt, da, _ = _mode_rates(params, mode)
    a = alpha_of_x(x, params, mode)
    return -g * g * x * (a.real * a.real + a.imag * a.imag) / (gt * gt + da * da)


def fixed_point_residuals(x1: float, x2: float, params: SystemParams):
    """The two scalar conditions closing the steady-state system.

    Returns (Gamma_1 ne_1(x1) - Gamma_2 ne_2(x2),
             (2 ne_1(x1) - x1) + (2 ne_2(x2) - x2) - 1): cross-flow balance
    between the two decay channels and population normalization. Both vanish
    at every physical fixed point.
    """
    ne1 = excited_population_of_x(x1, params, 1)
    ne2 = excited_population_of_x(x2, params, 2)
    return (params.Gamma1 * ne1 - params.Gamma2 * ne2,
            (2.0 * ne1 - x1) + (2.0 * ne2 - x2) - 1.0)


def polynomial_in_x1(params: SystemParams) -> np.ndarray:
    """Ascending coefficients of P(x_1); degree 7 in the generic case."""
    params.require_valid()
    if params.eta1 == 0.0 and params.eta2 == 0.0:
        raise DegenerateParameterError(
            "undriven system: every split of the population over the two "
            "ground levels is a fixed point, no isolated solutions exist"
        )
    g1s, g2s = params.g1 ** 2, params.g2 ** 2
    G1, G2 = params.Gamma1, params.Gamma2
    a1, b1, d1 = response_coeffs(params, 1)
    a2, b2, d2 = response_coeffs(params, 2)

    q1 = np.array([a1 * a1 + b1 * b1, -2.0 * a1 * g1s, g1s * g1s])

    def pmul(u, v):
        return np.convolve(u, v)

    def padd(u, v):
        n = max(len(u), len(v))
        w = np.zeros(n)
        w[: len(u)] += u
        w[: len(v)] += v
        return w

    m = padd(np.array([0.0, -2.0 * (G1 + G2) * d1]),
             -G2 * pmul(np.array([1.0, 1.0]), q1))
    t = padd(a2 * G2 * q1, -g2s * m)
    bracket = padd(pmul(t, t), b2 * b2 * G2 * G2 * pmul(q1, q1))
    poly = padd(-G1 * d1 * pmul(np.array([0.0, 1.0]), bracket),
                G2 * G2 * d2 * pmul(m, pmul(q1, q1)))
    if np.max(np.abs(poly)) < 1e-300:
        raise DegenerateParameterError(
            "steady-state elimination broke down: all polynomial "
            "coefficients vanish"
        )
    return poly


def lift_root(x1: float, params: SystemParams) -> MeanFieldState:
    """Full mean-field state corresponding to a root x_1 of the polynomial."""
    g1s = params.g1 ** 2
    a1, b1, d1 = response_coeffs(params, 1)
    q1 = (a1 - g1s * x1) ** 2 + b1 * b1
    m = -2.0 * (params.Gamma1 + params.Gamma2) * d1 * x1 \
        - params.Gamma2 * (1.0 + x1) * q1
    x2 = m / (params.Gamma2 * q1)

    ne1 = excited_population_of_x(x1, params, 1)
    ne2 = excited_population_of_x(x2, params, 2)
    return MeanFieldState(
        alpha1=alpha_of_x(x1, params, 1), alpha2=alpha_of_x(x2, params, 2),
        m1=polarization_of_x(x1, params, 1),
        m2=polarization_of_x(x2, params, 2),
        ne1=ne1, ng1=ne1 - x1, ne2=ne2, ng2=ne2 - x2,
    )


def real_roots_in_range(coeffs: np.ndarray) -> np.ndarray:
    """Real roots of the ascending-coefficient polynomial, clipped to [-1, 1].

    Roots come from the balanced companion matrix; eigen-solver noise is
    absorbed by the filter |Im| < 1e-8 (1 + |Re|) and Re within 1e-8 of the
    physical inversion range.
    """
    c = np.asarray(coeffs, dtype=float)
    c = c / np.max(np.abs(c))
    roots = np.polynomial.polynomial.polyroots(c)
    keep = []
    for z in roots:
        if abs(z.imag) < 1e-8 * (1.0 + abs(z.real)) and \
                -1.0 - 1e-8 <= z.real <= 1.0 + 1e-8:
            keep.append(min(1.0, max(-1.0, z.real)))
    return np.array(sorted(keep))


# === stability ============================================================


def _as_vector(state) -> np.ndarray:
    if isinstance(state, MeanFieldState):
        return state.to_vector()
    if isinstance(state, SteadyState):
        return state.state.to_vector()
    return np.asarray(state, dtype=float)


def classify_stability(candidate, params: SystemParams,
                       eps_zero: float = EPS_ZERO,
                       eps_stab: float = EPS_STAB):
    """Linear stability of a fixed point, conservation mode removed.

    Population conservation forces one structurally zero eigenvalue whose
    left eigenvector is the population sum; it carries no dynamics and is
    identified by eigenvector overlap (> 0.99) and discarded. Returns
    (stable, spectrum_max_real) over the remaining eleven eigenvalues, with
    stable <=> spectrum_max_real < -eps_stab.

    Raises MarginalStabilityError when the zero band |Re| < eps_zero does
    not contain exactly the conservation mode: either it is missing (the
    candidate is not a fixed point, or eps_zero is too tight) or additional
    eigenvalues sit on the imaginary axis and the point is on a phase
    boundary.
    """
    y = _as_vector(candidate)
    J = np.empty((NDIM, NDIM))
    jac12(y, params.to_vector(), J)
    w, vl = np.linalg.eig(J.T)
    near = [k for k in range(NDIM) if abs(w[k].real) < eps_zero]
    cons = [k for k in near
            if abs(np.vdot(vl[:, k] / np.linalg.norm(vl[:, k]), _V_CONS)) >= 0.99]
    if len(cons) != 1:
        raise MarginalStabilityError(
            f"expected exactly one conservation eigenvalue in the zero band, "
            f"found {len(cons)} among {len(near)} near-zero eigenvalue(s)",
            eigenvalues=w,
        )
    if len(near) > 1:
        raise MarginalStabilityError(
            f"{len(near) - 1} eigenvalue(s) besides the conservation mode lie "
            f"within {eps_zero:g} of the imaginary axis (phase boundary)",
            eigenvalues=w,
        )
    rest = np.delete(w, cons[0])
    max_real = float(np.max(rest.real))
    return max_real < -eps_stab, max_real


# === solution containers ==================================================


@dataclass(frozen=True)
class SteadyState:
    """One fixed point with its stability verdict."""

    state: MeanFieldState
    x1: float  # inversion ne1 - ng1
    x2: float
    stable: bool
    spectrum_max_real: float  # largest Re over the 11 dynamical eigenvalues
    residual_norm: float  # max-norm of the flow at the refined point
    marginal: bool = False  # classification was ambiguous (phase boundary)


@dataclass(frozen=True)
class SolutionSet:
    """All fixed points at one parameter point, sorted by x_1 ascending."""

    params: SystemParams
    solutions: tuple

    @property
    def n_total(self) -> int:
        return len(self.solutions)

    @property
    def n_stable(self) -> int:
        return sum(1 for s in self.solutions if s.stable)

    @property
    def n_marginal(self) -> int:
        return sum(1 for s in self.solutions if s.marginal)

    @property
    def stable_solutions(self) -> tuple:
        return tuple(s for s in self.solutions if s.stable)

    def branch_pattern(self) -> str:
        """E.g. 'SUS' for stable/unstable/stable in increasing x_1."""
        return "".join(
            "M" if s.marginal else ("S" if s.stable else "U")
            for s in self.solutions
        )

    def closest_index(self, state: MeanFieldState) -> tuple:
        """(index, max-norm distance) of the solution nearest to state."""
        if not self.solutions:
            return -1, np.inf
        y = state.to_vector()
        dists = [float(np.max(np.abs(y - s.state.to_vector())))
                 for s in self.solutions]
        j = int(np.argmin(dists))
        return j, dists[j]


def flow_residual(y, params: SystemParams) -> float:
    """Max-norm of the 12-component flow; zero at an exact fixed point."""
    out = np.empty(NDIM)
    rhs12(np.asarray(y, dtype=float), params.to_vector(), out)
    return float(np.max(np.abs(out)))


def classify_fixed_point(y, params: SystemParams) -> SteadyState:
    """Wrap a refined fixed-point vector as a classified SteadyState.

    Marginal classifications are flagged, not raised; spectrum_max_real then
    reports the largest real part excluding the single best conservation
    candidate.
    """
    y = np.asarray(y, dtype=float)
    st = MeanFieldState.from_vector(y)
    try:
        stable, max_real = classify_stability(y, params)
        marginal = False
    except MarginalStabilityError as err:
        stable = False
        marginal = True
        # best effort: drop the eigenvalue nearest the axis, report the rest
        w = err.eigenvalues
        rest = np.delete(w, int(np.argmin(np.abs(w.real))))
        max_real = float(np.max(rest.real))
    return SteadyState(
        state=st, x1=st.inversion1, x2=st.inversion2,
        stable=stable, spectrum_max_real=max_real,
        residual_norm=flow_residual(y, params), marginal=marginal,
    )


def find_all_roots(params: SystemParams) -> SolutionSet:
    """Every fixed point of the flow at the given parameters.

    Roots of the eliminated polynomial are lifted to full states, polished
    by damped Newton on the full 12-dimensional fixed-point system,
    deduplicated, classified, and sorted by x_1. Marginal classifications
    are flagged on the entries rather than raised, so parameter sweeps can
    record them; strict callers should check n_marginal.
    """
    coeffs = polynomial_in_x1(params)
    p_vec = params.to_vector()
    states = []
    for x1 in real_roots_in_range(coeffs):
        y = lift_root(float(x1), params).to_vector()
        newton12(y, p_vec, 50, 1e-12)
        if any(np.max(np.abs(y - other)) < DEDUP_TOL for other in states):
            continue
        states.append(y)
    sols = sorted((classify_fixed_point(y, params) for y in states),
                  key=lambda s: s.x1)
    return SolutionSet(params=params, solutions=tuple(sols))


def multistart_oracle(params: SystemParams, n_starts: int = 200,
                      seed: int = 0, with_basins: bool = False):
    """Independent fixed-point hunt, no polynomial involved.

    Two passes over n_starts random physical initial points. First, damped
    Newton on the full fixed-point system builds a candidate census. Second,
    every start is settled by time integration, snapping once within 1e-6 of
    a known candidate (stiff large-N flows would otherwise crawl through the
    final linear approach); a settle that lands somewhere new extends the
    census. Returns the deduplicated union of every physical fixed point
    reached, sorted by x1. Deterministic for a given seed. Not guaranteed
    exhaustive - a lower-bound cross-check for find_all_roots, not a
    replacement.

    with_basins=True returns (SolutionSet, hits) where hits[i] counts the
    settling runs that ended on solution i; a stable solution with zero hits
    was found by Newton only, never reached dynamically from the sample.
    """
    params.require_valid()
    if n_starts < 1:
        raise ValueError(f"n_starts must be >= 1, got {n_starts!r}")
    rng = np.random.default_rng(seed)
    p_vec = params.to_vector()
    scale = (params.eta1 + params.eta2) / min(params.kappa1, params.kappa2) + 0.1
    found = []

    def record(y):
        if np.min(y[8:12]) < -1e-7:
            return
        if any(np.max(np.abs(y - f)) < DEDUP_TOL for f in found):
            return
        found.append(y.copy())

    # cycle population concentration and field scale so the sample covers
    # corner-dominated (nearly pure) states and near-empty cavities as well
    # as generic mixed states; deep dark attractors at large N have basins
    # reachable only from that sector
    concs = (1.0, 0.25, 0.02)
    facs = (1.0, 0.1, 0.01)
    starts = []
    for i in range(n_starts):
        f = facs[(i // 3) % 3]
        y0 = np.zeros(NDIM)
        y0[0:4] = rng.normal(0.0, scale * f, 4)
        y0[4:8] = rng.normal(0.0, 0.3 * f, 4)
        y0[8:12] = rng.dirichlet(np.full(4, concs[i % 3]))
        starts.append(y0)

        y = y0.copy()
        ok, _, _ = newton12(y, p_vec, 200, 1e-12)
        if ok:
            record(y)

    destinations = []
    for y0 in starts:
        targets = np.array(found).reshape(-1, NDIM)
        y = y0.copy()
        _, _, _, status, ti = settle_loop(y, p_vec, 1e-9, 1e5, 1e-10, 1e-10,
                                          targets, 1e-6)
        if status == SNAPPED:
            destinations.append(targets[ti].copy())
        elif status == OK:
            ok, _, _ = newton12(y, p_vec, 80, 1e-12)
            if ok:
                record(y)
                destinations.append(y.copy())

    sols = sorted((classify_fixed_point(y, params) for y in found),
                  key=lambda s: s.x1)
    out = SolutionSet(params=params, solutions=tuple(sols))
    if not with_basins:
        return out
    vecs = [s.state.to_vector() for s in sols]
    hits = np.zeros(len(vecs), dtype=int)
    for d in destinations:
        for i, v in enumerate(vecs):
            if np.max(np.abs(d - v)) < 1e-5:
                hits[i] += 1
                break
    return out, hits
