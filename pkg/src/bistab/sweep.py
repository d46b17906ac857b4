"""Parameter sweeps: phase-diagram grids, constant-intensity arcs, size scans.

Nodes are independent work items fanned out over a thread pool (the numeric
kernels release the GIL) and reduced in submission order, so results are
bit-identical for any worker count. Worker count: explicit argument, else
the BISTAB_THREADS environment variable, else all available cores.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import BistabError, DegenerateParameterError, InvalidParameterError
from .model import SystemParams
from .steady_state import SolutionSet, find_all_roots


def resolve_workers(n_workers=None) -> int:
    """Explicit count > BISTAB_THREADS > cpu count; 0 means auto."""
    if n_workers is None:
        raw = os.environ.get("BISTAB_THREADS", "0").strip()
        try:
            n_workers = int(raw)
        except ValueError:
            raise InvalidParameterError(
                f"BISTAB_THREADS must be an integer, got {raw!r}"
            ) from None
    n_workers = int(n_workers)
    if n_workers < 0:
        raise InvalidParameterError(f"worker count must be >= 0, got {n_workers}")
    return n_workers if n_workers > 0 else (os.cpu_count() or 1)


def _solve_many(param_list, n_workers=None):
    """find_all_roots over a parameter list, order-preserving, parallel."""
    workers = resolve_workers(n_workers)
    if workers == 1 or len(param_list) < 2:
        return [find_all_roots(p) for p in param_list]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(find_all_roots, param_list))


# === phase diagram ========================================================


@dataclass(frozen=True, eq=False)
class PhaseDiagram:
    """Stable/total solution counts on a rectangular drive grid.

    counts[i, j] belongs to the node (eta1_axis[i], eta2_axis[j]). Nodes
    where the fixed-point set is a continuum (the undriven origin) carry
    degenerate_mask and zero counts; nodes where any solution defied
    classification carry marginal_mask.
    """

    eta1_axis: np.ndarray
    eta2_axis: np.ndarray
    counts: np.ndarray  # stable counts, int
    total_counts: np.ndarray  # int
    marginal_mask: np.ndarray  # bool
    degenerate_mask: np.ndarray  # bool
    failures: tuple  # (i, j, message) for nodes that raised unexpectedly

    @property
    def resolution(self) -> tuple:
        return self.counts.shape

    def occurring_totals(self) -> np.ndarray:
        """Distinct total counts over solvable nodes."""
        ok = ~self.degenerate_mask
        return np.unique(self.total_counts[ok])


def phase_diagram_grid(params_base: SystemParams, eta1_max: float = 5.0,
                       eta2_max: float = 5.0, resolution: int = 101,
                       n_workers=None) -> PhaseDiagram:
    """Solve the fixed-point problem on a uniform grid of drive pairs.

    The undriven origin node is skipped (degenerate continuum); per-node
    failures are recorded in-place and never abort the grid.
    """
    params_base.require_valid()
    if resolution < 2:
        raise InvalidParameterError(f"resolution must be >= 2, got {resolution!r}")
    if eta1_max <= 0.0 or eta2_max <= 0.0:
        raise InvalidParameterError("grid maxima must be > 0")
    e1 = np.linspace(0.0, eta1_max, resolution)
    e2 = np.linspace(0.0, eta2_max, resolution)

    nodes = [(i, j) for i in range(resolution) for j in range(resolution)
             if not (e1[i] == 0.0 and e2[j] == 0.0)]
    plist = [params_base.with_drive(e1[i], e2[j]) for i, j in nodes]

    counts = np.zeros((resolution, resolution), dtype=int)
    totals = np.zeros((resolution, resolution), dtype=int)
    marginal = np.zeros((resolution, resolution), dtype=bool)
    degenerate = np.zeros((resolution, resolution), dtype=bool)
    if e1[0] == 0.0 and e2[0] == 0.0:
        degenerate[0, 0] = True

    failures = []
    workers = resolve_workers(n_workers)

    def solve_node(p):
        try:
            return find_all_roots(p)
        except DegenerateParameterError:
            return "degenerate"
        except BistabError as err:  # record, never abort
            return f"failed: {err}"

    if workers == 1:
        results = [solve_node(p) for p in plist]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(solve_node, plist))

    for (i, j), res in zip(nodes, results):
        if isinstance(res, str):
            if res == "degenerate":
                degenerate[i, j] = True
            else:
                failures.append((i, j, res))
            continue
        counts[i, j] = res.n_stable
        totals[i, j] = res.n_total
        marginal[i, j] = res.n_marginal > 0
    return PhaseDiagram(
        eta1_axis=e1, eta2_axis=e2, counts=counts, total_counts=totals,
        marginal_mask=marginal, degenerate_mask=degenerate,
        failures=tuple(failures),
    )


# === arcs =================================================================


@dataclass(frozen=True, eq=False)
class Branch:
    """One connected solution trace along an arc."""

    phi_indices: np.ndarray  # contiguous, increasing
    solutions: tuple  # SteadyState per index

    @property
    def n_points(self) -> int:
        return len(self.solutions)

    @property
    def all_stable(self) -> bool:
        return all(s.stable for s in self.solutions)

    @property
    def any_stable(self) -> bool:
        return any(s.stable for s in self.solutions)

    def x_path(self) -> np.ndarray:
        return np.array([[s.x1, s.x2] for s in self.solutions])


@dataclass(frozen=True, eq=False)
class ArcSweep:
    """Solution sets along a quarter circle of constant drive intensity."""

    params_base: SystemParams
    radius: float
    angles: np.ndarray  # (n_phi,) in [0, pi/2]
    convention: str  # "from-vertical" or "from-axis1"
    solution_sets: tuple  # SolutionSet per angle
    branches: tuple  # Branch traces partitioning all solutions
    ambiguities: tuple  # (phi_index, branch_a, branch_b) near-ties

    @property
    def n_phi(self) -> int:
        return self.angles.size

    def params_at(self, index: int) -> SystemParams:
        return self.solution_sets[index].params

    def counts(self) -> np.ndarray:
        return np.array([s.n_total for s in self.solution_sets])

    def multivalued_mask(self) -> np.ndarray:
        return self.counts() > 1

    def branch_of(self, phi_index: int, solution_index: int) -> int:
        """Branch id holding the given solution (ids = positions in branches)."""
        for b_id, br in enumerate(self.branches):
            pos = np.searchsorted(br.phi_indices, phi_index)
            if pos < br.phi_indices.size and br.phi_indices[pos] == phi_index:
                sol = self.solution_sets[phi_index].solutions[solution_index]
                if br.solutions[pos] is sol:
                    return b_id
        return -1


def _connect_branches(solution_sets, tie_factor: float = 1.5):
    """Nearest-neighbor continuation in (x1, x2) across consecutive angles.

    Between consecutive angles, solutions are paired by iterated
    mutual-nearest matching: the globally closest mutual pair is accepted,
    removed, and the matching repeats on the remainder. When the counts
    agree this yields a complete pairing; when a fold adds or removes
    solutions the leftovers open new branches or close dying ones. A new
    solution whose second-nearest open branch lies within tie_factor of its
    matched distance is flagged ambiguous. Returns (branches, ambiguities).
    """

    def coords(sol_set):
        return np.array([[s.x1, s.x2] for s in sol_set.solutions])

    def match(prev_xy, new_xy):
        # iterated mutual-nearest pairs, deterministic order
        pairs = []
        if prev_xy.size == 0 or new_xy.size == 0:
            return pairs
        d = np.linalg.norm(prev_xy[:, None, :] - new_xy[None, :, :], axis=2)
        live_a = list(range(d.shape[0]))
        live_b = list(range(d.shape[1]))
        while live_a and live_b:
            sub = d[np.ix_(live_a, live_b)]
            ia, ib = np.unravel_index(int(np.argmin(sub)), sub.shape)
            a, b = live_a[ia], live_b[ib]
            pairs.append((a, b, float(d[a, b])))
            live_a.remove(a)
            live_b.remove(b)
        return pairs

    branches = []  # mutable: [ [phi_indices], [solutions] ]
    open_ids = []  # branch ids open at the previous angle
    ambiguities = []
    for k, sol_set in enumerate(solution_sets):
        new_xy = coords(sol_set)
        if k == 0 or not open_ids:
            assigned = {}
        else:
            prev_xy = np.array([[branches[b][1][-1].x1, branches[b][1][-1].x2]
                                for b in open_ids])
            pairs = match(prev_xy, new_xy)
            assigned = {b: open_ids[a] for a, b, _ in pairs}
            if len(open_ids) > 1:
                d = np.linalg.norm(prev_xy[:, None, :] - new_xy[None, :, :],
                                   axis=2)
                for a, b, dist in pairs:
                    rivals = sorted(d[:, b])
                    if len(rivals) > 1 and rivals[1] <= tie_factor * dist:
                        second = int(np.argsort(d[:, b])[1])
                        ambiguities.append((k, open_ids[a], open_ids[second]))
        next_open = []
        for s_idx, sol in enumerate(sol_set.solutions):
            if s_idx in assigned:
                b_id = assigned[s_idx]
                branches[b_id][0].append(k)
                branches[b_id][1].append(sol)
            else:
                b_id = len(branches)
                branches.append([[k], [sol]])
            next_open.append(b_id)
        open_ids = next_open
    out = tuple(
        Branch(phi_indices=np.array(idx, dtype=int), solutions=tuple(sols))
        for idx, sols in branches
    )
    return out, tuple(ambiguities)


def arc_sweep(params_base: SystemParams, radius: float, n_phi: int = 721,
              convention: str = "from-vertical",
              n_workers=None) -> ArcSweep:
    """Solve along the quarter circle eta1^2 + eta2^2 = radius^2.

    Angles cover [0, pi/2] uniformly. Under the default "from-vertical"
    convention phi = 0 drives mode 2 only (eta1 = r sin phi,
    eta2 = r cos phi); "from-axis1" transposes the roles so that
    phi = arctan(eta2/eta1). Branches are connected by nearest-neighbor
    continuation in (x1, x2); near-ties are flagged in ambiguities.
    """
    params_base.require_valid()
    if radius <= 0.0:
        raise InvalidParameterError(f"radius must be > 0, got {radius!r}")
    if n_phi < 3:
        raise InvalidParameterError(f"n_phi must be >= 3, got {n_phi!r}")
    from .dynamics import _convention_flag

    from_axis1 = _convention_flag(convention)
    angles = np.linspace(0.0, np.pi / 2.0, n_phi)
    plist = [params_base.with_drive_polar(radius, float(phi),
                                          from_axis1=from_axis1)
             for phi in angles]
    sol_sets = _solve_many(plist, n_workers)
    branches, ambiguities = _connect_branches(sol_sets)
    return ArcSweep(
        params_base=params_base, radius=radius, angles=angles,
        convention=convention, solution_sets=tuple(sol_sets),
        branches=branches, ambiguities=ambiguities,
    )


def bistable_interval_width(arc: ArcSweep) -> float:
    """Total angular measure where the arc is multivalued."""
    mask = arc.multivalued_mask()
    if arc.n_phi < 2:
        return 0.0
    dphi = arc.angles[1] - arc.angles[0]
    return float(np.sum(mask) * dphi)


def finite_size_scan(params_base: SystemParams, N_list,
                     radius: float = 0.29, n_phi: int = 721,
                     convention: str = "from-vertical",
                     n_workers=None) -> list:
    """arc_sweep repeated over atom numbers, everything else held fixed.

    The drive amplitudes are already scaled per atom, so the radius stays
    put while the collective coupling grows with sqrt(N).
    """
    out = []
    for N in N_list:
        p = params_base.with_atom_number(float(N))
        p.require_valid()
        out.append(arc_sweep(p, radius, n_phi, convention, n_workers))
    return out
