"""Phase-diagram grids, constant-intensity arcs, branch tracing, size scans.

Grid censuses and branch structures are frozen from deterministic solves at
the default operating point; parallel runs must reproduce the serial results
bit for bit because nodes are independent and reduced in submission order.
"""
import numpy as np
import pytest

from bistab import SystemParams, arc_sweep
from bistab.errors import InvalidParameterError
from bistab.observables import transmittance_from_inversion
from bistab.sweep import (
    bistable_interval_width,
    finite_size_scan,
    phase_diagram_grid,
    resolve_workers,
)


@pytest.fixture(scope="module")
def grid21(baseline):
    return phase_diagram_grid(baseline, resolution=21, n_workers=1)


@pytest.fixture(scope="module")
def arc361(baseline):
    return arc_sweep(baseline, radius=1.13, n_phi=361)


@pytest.fixture(scope="module")
def arc181(baseline):
    return arc_sweep(baseline, radius=1.13, n_phi=181)


# === worker resolution =====================================================


def test_resolve_workers_explicit_beats_environment(monkeypatch):
    monkeypatch.setenv("BISTAB_THREADS", "3")
    assert resolve_workers() == 3
    assert resolve_workers(2) == 2


def test_resolve_workers_auto_uses_all_cores(monkeypatch):
    monkeypatch.delenv("BISTAB_THREADS", raising=False)
    assert resolve_workers() >= 1
    assert resolve_workers(0) == resolve_workers()


def test_resolve_workers_rejects_bad_values(monkeypatch):
    monkeypatch.setenv("BISTAB_THREADS", "many")
    with pytest.raises(InvalidParameterError):
        resolve_workers()
    monkeypatch.delenv("BISTAB_THREADS")
    with pytest.raises(InvalidParameterError):
        resolve_workers(-1)


# === phase diagram grid ====================================================


def test_grid_validates_inputs(baseline):
    with pytest.raises(InvalidParameterError):
        phase_diagram_grid(baseline, resolution=1)
    with pytest.raises(InvalidParameterError):
        phase_diagram_grid(baseline, eta1_max=0.0)


def test_grid_census_at_default_point(grid21):
    # 21 x 21 drive grid up to eta = 5: monostable background with a
    # seven-node bistable island, no failures, no marginal nodes
    assert grid21.resolution == (21, 21)
    assert list(grid21.occurring_totals()) == [1, 3]
    assert int((grid21.total_counts == 3).sum()) == 7
    assert grid21.failures == ()
    assert int(grid21.marginal_mask.sum()) == 0


def test_grid_marks_undriven_origin_degenerate(grid21):
    assert int(grid21.degenerate_mask.sum()) == 1
    assert grid21.degenerate_mask[0, 0]
    assert grid21.total_counts[0, 0] == 0


def test_grid_count_consistency(grid21):
    # every solvable node has at least one stable solution, and stable
    # counts never exceed the fold bound (n_total + 1) / 2
    ok = ~grid21.degenerate_mask
    assert np.all(grid21.counts[ok] >= 1)
    assert np.all(grid21.counts <= grid21.total_counts)
    assert np.all(grid21.counts[ok] <= (grid21.total_counts[ok] + 1) // 2)


def test_grid_is_workercount_invariant(baseline, grid21):
    g4 = phase_diagram_grid(baseline, resolution=21, n_workers=4)
    assert np.array_equal(grid21.counts, g4.counts)
    assert np.array_equal(grid21.total_counts, g4.total_counts)
    assert np.array_equal(grid21.marginal_mask, g4.marginal_mask)
    assert np.array_equal(grid21.degenerate_mask, g4.degenerate_mask)


# === arc branch structure ==================================================


def test_arc_drives_single_mode_at_start(arc361):
    p0 = arc361.params_at(0)
    assert p0.eta1 == 0.0
    assert p0.eta2 == 1.13


def test_arc_branch_structure_at_bistable_radius(arc361):
    # two stable sheets joined by one unstable connector across the folds
    struct = [(int(br.phi_indices[0]), int(br.phi_indices[-1]), br.all_stable)
              for br in arc361.branches]
    assert struct == [(0, 191, True), (169, 191, False), (169, 360, True)]
    assert arc361.ambiguities == ()


def test_arc_branches_partition_all_solutions(arc361):
    cover = sum(br.n_points for br in arc361.branches)
    total = sum(ss.n_total for ss in arc361.solution_sets)
    assert cover == total == 407


def test_arc_folds_bound_the_multivalued_window(arc361):
    # the unstable connector spans exactly the window where the stable
    # sheets coexist, so its endpoints sit on the two fold indices
    mask = arc361.multivalued_mask()
    idx = np.flatnonzero(mask)
    assert idx[0] == 169 and idx[-1] == 191
    assert len(idx) == 191 - 169 + 1
    assert all(ss.n_total == 3 for ss in arc361.solution_sets[169:192])


@pytest.mark.parametrize("radius", [3.38, 4.5])
def test_arc_single_valued_at_large_radius(baseline, radius):
    arc = arc_sweep(baseline, radius=radius, n_phi=91)
    assert len(arc.branches) == 1
    assert arc.branches[0].all_stable
    assert bistable_interval_width(arc) == 0.0


def _max_interior_jump(arc, margin_rad=0.06):
    # largest single-step movement along any branch, skipping steps within
    # margin_rad of the branch ends where fold curvature dominates
    dphi = arc.angles[1] - arc.angles[0]
    m = int(np.ceil(margin_rad / dphi))
    out = 0.0
    for br in arc.branches:
        xp = br.x_path()
        if len(xp) < 2 * m + 2:
            continue
        d = np.abs(np.diff(xp, axis=0)).max(axis=1)
        out = max(out, d[m:-m].max() if m > 0 else d.max())
    return out


def test_arc_refinement_halves_interior_jumps(arc181, arc361):
    j181 = _max_interior_jump(arc181)
    j361 = _max_interior_jump(arc361)
    assert j181 == pytest.approx(0.007099, abs=1e-5)
    ratio = j181 / j361
    assert 1.5 <= ratio <= 2.5


def test_arc_traces_are_swap_symmetric(arc181):
    # reflecting the arc about phi = pi/4 exchanges the roles of the two
    # modes; the multisets of limit-form transmittances must match
    worst = 0.0
    for k in range(arc181.n_phi):
        kk = arc181.n_phi - 1 - k
        ss_a, ss_b = arc181.solution_sets[k], arc181.solution_sets[kk]
        assert ss_a.n_total == ss_b.n_total
        t1s = sorted(transmittance_from_inversion(s.x1, ss_a.params, 1)
                     for s in ss_a.solutions)
        t2s = sorted(transmittance_from_inversion(s.x2, ss_b.params, 2)
                     for s in ss_b.solutions)
        worst = max(worst, max(abs(a - b) for a, b in zip(t1s, t2s)))
    assert worst <= 1e-10


# === finite size scan ======================================================


def test_scan_first_entry_matches_standalone_arc(baseline, scan_arcs):
    solo = arc_sweep(baseline.with_atom_number(5e3), radius=0.29, n_phi=721)
    for ssa, ssb in zip(scan_arcs[0].solution_sets, solo.solution_sets):
        assert ssa.n_total == ssb.n_total
        for sa, sb in zip(ssa.solutions, ssb.solutions):
            assert sa.x1 == sb.x1
            assert sa.x2 == sb.x2
            assert sa.stable == sb.stable


def test_scan_validates_parameters(baseline):
    with pytest.raises(InvalidParameterError):
        finite_size_scan(baseline, [5e3, 0.5], radius=0.29, n_phi=11)
