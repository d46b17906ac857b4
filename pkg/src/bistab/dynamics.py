"""Time evolution: adaptive integration, settling to attractors, hysteresis.

The integrator is an embedded Dormand-Prince 5(4) pair, I-controller step
adaptation (safety 0.9, growth clamped to [0.2, 5]). Runge-Kutta steps
preserve linear invariants exactly, so total population is conserved to
roundoff along every trajectory regardless of tolerance; the tests check
this rather than enforcing it by projection. The system is weakly stiff at
the reference parameters; if the controller ever underflows the step size,
a StiffnessError surfaces instead of silently switching methods.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError, StiffnessError
from .kernels import (
    HIT_TMAX,
    NDIM,
    OK,
    SNAPPED,
    STEP_UNDERFLOW,
    integrate_adaptive,
    integrate_fixed,
    newton12,
    rhs12,
    settle_loop,
)
from .model import MeanFieldState, SystemParams
from .observables import ObservableRecord, observable_record
from .steady_state import (
    SolutionSet,
    SteadyState,
    classify_fixed_point,
    find_all_roots,
)

REL_TOL = 1e-10
ABS_TOL = 1e-10
SETTLE_EPS = 1e-9
T_MAX = 1e5


def _check_tolerances(rel_tol: float, abs_tol: float) -> None:
    for name, v in (("rel_tol", rel_tol), ("abs_tol", abs_tol)):
        if not 1e-14 < v < 1e-2:
            raise InvalidParameterError(
                f"{name} must lie in (1e-14, 1e-2), got {v!r}"
            )


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Sampled solution of the flow."""

    times: np.ndarray  # (n,) strictly increasing
    states: np.ndarray  # (n, 12) in the documented real ordering
    n_accepted: int
    n_rejected: int

    def state_at(self, index: int) -> MeanFieldState:
        return MeanFieldState.from_vector(self.states[index])

    def final_state(self) -> MeanFieldState:
        return self.state_at(-1)

    @property
    def total_population(self) -> np.ndarray:
        return self.states[:, 8:12].sum(axis=1)

    def population_drift(self) -> float:
        """Largest deviation of the conserved population sum from its start."""
        tot = self.total_population
        return float(np.max(np.abs(tot - tot[0])))


@dataclass(frozen=True, eq=False)
class NonConvergence:
    """Settling hit t_max before the flow norm dropped below eps.

    A value, not an exception: sweeps record it and move on.
    """

    state: MeanFieldState  # last state reached
    t_elapsed: float
    residual_norm: float


def integrate(state0: MeanFieldState, params: SystemParams, t_end: float,
              rel_tol: float = REL_TOL, abs_tol: float = ABS_TOL,
              t_eval=None) -> Trajectory:
    """Evolve from t = 0 to t_end, sampling exactly at t_eval.

    Default sampling is 201 uniform times including both endpoints. Raises
    StiffnessError if the controller drives the step below representable
    size (the error carries the last good time and state).
    """
    params.require_valid()
    _check_tolerances(rel_tol, abs_tol)
    if t_end <= 0.0 or not np.isfinite(t_end):
        raise InvalidParameterError(f"t_end must be finite and > 0, got {t_end!r}")
    if t_eval is None:
        t_eval = np.linspace(0.0, t_end, 201)
    t_eval = np.asarray(t_eval, dtype=float)
    if t_eval.ndim != 1 or t_eval.size == 0:
        raise InvalidParameterError("t_eval must be a non-empty 1-d array")
    if np.any(np.diff(t_eval) <= 0.0):
        raise InvalidParameterError("t_eval must be strictly increasing")
    if t_eval[0] < 0.0 or t_eval[-1] > t_end * (1.0 + 1e-12):
        raise InvalidParameterError("t_eval must lie within [0, t_end]")

    y = state0.to_vector()
    samples = np.empty((t_eval.size, NDIM))
    t, n_acc, n_rej, status = integrate_adaptive(
        y, params.to_vector(), 0.0, float(t_end), rel_tol, abs_tol,
        t_eval, samples,
    )
    if status == STEP_UNDERFLOW:
        raise StiffnessError(
            f"step size underflow at t = {t:.6g}", t=t,
            state=MeanFieldState.from_vector(y),
        )
    return Trajectory(times=t_eval.copy(), states=samples,
                      n_accepted=n_acc, n_rejected=n_rej)


def settle(state0: MeanFieldState, params: SystemParams,
           eps: float = SETTLE_EPS, t_max: float = T_MAX,
           rel_tol: float = REL_TOL, abs_tol: float = ABS_TOL,
           known_targets=None, target_tol: float = 1e-6):
    """Relax onto an attractor: returns a SteadyState or NonConvergence.

    Integrates until the max-norm of the flow drops below eps, then
    Newton-polishes and classifies the endpoint. known_targets, if given,
    is a sequence of candidate fixed points (MeanFieldState or 12-vectors);
    the run stops as soon as the trajectory comes within target_tol
    (max-norm) of one of them, short-circuiting the slow final approach
    when the destinations are already known. Hitting t_max first yields a
    NonConvergence value instead of an exception.
    """
    params.require_valid()
    _check_tolerances(rel_tol, abs_tol)
    if eps < 1e-12:
        raise InvalidParameterError(f"eps must be >= 1e-12, got {eps!r}")
    if known_targets is None:
        targets = np.empty((0, NDIM))
    else:
        rows = [t.to_vector() if isinstance(t, MeanFieldState)
                else np.asarray(t, dtype=float) for t in known_targets]
        targets = np.array(rows, dtype=float).reshape(-1, NDIM)

    y = state0.to_vector()
    p_vec = params.to_vector()
    t, _, _, status, _ = settle_loop(
        y, p_vec, eps, float(t_max), rel_tol, abs_tol, targets, target_tol,
    )
    if status == STEP_UNDERFLOW:
        raise StiffnessError(
            f"step size underflow at t = {t:.6g} while settling", t=t,
            state=MeanFieldState.from_vector(y),
        )
    if status == HIT_TMAX:
        out = np.empty(NDIM)
        rhs12(y, p_vec, out)
        return NonConvergence(state=MeanFieldState.from_vector(y),
                              t_elapsed=t,
                              residual_norm=float(np.max(np.abs(out))))
    # polish to machine precision; reject a polish that jumps away
    yp = y.copy()
    ok, _, _ = newton12(yp, p_vec, 80, 1e-12)
    if ok and np.max(np.abs(yp - y)) < 1e-4:
        y = yp
    return classify_fixed_point(y, params)


def integrate_to_fixed_step(state0: MeanFieldState, params: SystemParams,
                            t_end: float, n_steps: int) -> MeanFieldState:
    """Constant-step run of the same RK pair, for convergence-order studies."""
    if n_steps < 1:
        raise InvalidParameterError(f"n_steps must be >= 1, got {n_steps!r}")
    y = state0.to_vector()
    integrate_fixed(y, params.to_vector(), float(t_end), int(n_steps))
    return MeanFieldState.from_vector(y)


# === quasi-static sweeps ==================================================


@dataclass(frozen=True, eq=False)
class SweepRecord:
    """Settled system at one point of a quasi-static control path."""

    control: float  # path parameter (angle phi in radians for arc paths)
    eta1: float
    eta2: float
    state: MeanFieldState
    observables: ObservableRecord
    converged: bool
    branch_id: int  # index into the x1-sorted exact solution list, -1 if none
    stable: bool
    n_solutions: int  # size of the exact solution set at this drive
    residual_norm: float


def phi_loop(n_steps: int) -> np.ndarray:
    """Angles 0 -> pi/2 -> 0: n_steps up, retraced in reverse (2 n_steps - 1)."""
    if n_steps < 2:
        raise InvalidParameterError(f"n_steps must be >= 2, got {n_steps!r}")
    up = np.linspace(0.0, np.pi / 2.0, n_steps)
    return np.concatenate([up, up[-2::-1]])


def hysteresis_sweep(params_base: SystemParams, radius: float,
                     phi_path=None, n_steps: int = 181,
                     convention: str = "from-vertical",
                     initial_state: MeanFieldState | None = None,
                     eps: float = SETTLE_EPS, t_max: float = T_MAX,
                     rel_tol: float = REL_TOL, abs_tol: float = ABS_TOL,
                     target_tol: float = 1e-6) -> list:
    """Quasi-static sweep of the drive angle at fixed total drive intensity.

    At each angle of phi_path (default: up-down loop of n_steps per leg) the
    drive pair is set on the circle of the given radius and the system
    relaxes to an attractor seeded from the previous settled state, so the
    outcome depends on the path history. The exact solution set at each
    point supplies relaxation targets and branch labels. Fully
    deterministic: identical inputs give identical records.

    Returns a list of SweepRecord; non-convergent points are recorded with
    converged=False and the sweep continues from their last state.
    """
    params_base.require_valid()
    if radius <= 0.0:
        raise InvalidParameterError(f"radius must be > 0, got {radius!r}")
    from_axis1 = _convention_flag(convention)
    if phi_path is None:
        phi_path = phi_loop(n_steps)
    phi_path = np.asarray(phi_path, dtype=float)
    if phi_path.ndim != 1 or phi_path.size == 0:
        raise InvalidParameterError("phi_path must be a non-empty 1-d array")

    records = []
    current = (initial_state if initial_state is not None
               else MeanFieldState.empty())
    for phi in phi_path:
        p_k = params_base.with_drive_polar(radius, float(phi),
                                           from_axis1=from_axis1)
        sols = find_all_roots(p_k)
        targets = [s.state.to_vector() for s in sols.solutions]
        res = settle(current, p_k, eps, t_max, rel_tol, abs_tol,
                     known_targets=targets, target_tol=target_tol)
        if isinstance(res, NonConvergence):
            records.append(SweepRecord(
                control=float(phi), eta1=p_k.eta1, eta2=p_k.eta2,
                state=res.state, observables=observable_record(res.state, p_k),
                converged=False, branch_id=-1, stable=False,
                n_solutions=sols.n_total, residual_norm=res.residual_norm,
            ))
            current = res.state
            continue
        branch_id, dist = sols.closest_index(res.state)
        if dist > 1e-4:
            branch_id = -1
        records.append(SweepRecord(
            control=float(phi), eta1=p_k.eta1, eta2=p_k.eta2,
            state=res.state, observables=observable_record(res.state, p_k),
            converged=True, branch_id=branch_id, stable=res.stable,
            n_solutions=sols.n_total, residual_norm=res.residual_norm,
        ))
        current = res.state
    return records


def _convention_flag(convention: str) -> bool:
    """Map an angle-convention name to the from_axis1 boolean."""
    if convention in ("from-vertical", "from_vertical"):
        return False
    if convention in ("from-axis1", "from_axis1", "from-axis-1"):
        return True
    raise InvalidParameterError(
        f"convention must be 'from-vertical' or 'from-axis1', got {convention!r}"
    )


def basin_probe(solution_set: SolutionSet, offsets,
                eps: float = SETTLE_EPS, t_max: float = T_MAX):
    """Settle from perturbed copies of each solution; returns branch indices.

    For each solution in the set and each offset vector, relax from
    state + offset and report which solution the flow reaches (-1 when
    unresolved). Used to exercise attraction/repulsion of branches.
    """
    targets = [s.state.to_vector() for s in solution_set.solutions]
    out = []
    for sol in solution_set.solutions:
        y0 = sol.state.to_vector()
        row = []
        for off in offsets:
            start = MeanFieldState.from_vector(y0 + np.asarray(off, dtype=float))
            res = settle(start, solution_set.params, eps, t_max,
                         known_targets=targets, target_tol=1e-7)
            if isinstance(res, NonConvergence):
                row.append(-1)
                continue
            y = res.state.to_vector()
            dists = [np.max(np.abs(y - t)) for t in targets]
            j = int(np.argmin(dists))
            row.append(j if dists[j] < 1e-5 else -1)
        out.append(row)
    return out
