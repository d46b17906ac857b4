"""Transmittance, purity proxy, observable bundling, physicality diagnostics.

Anchor values are frozen from direct evaluation of the closed forms and from
deterministic steady-state solves at the default operating point.
"""
import numpy as np
import pytest
from dataclasses import replace
from types import SimpleNamespace

from bistab import (
    MeanFieldState,
    SystemParams,
    cooperativity,
    find_all_roots,
    purity_proxy,
    transmittance_approx,
    transmittance_exact,
)
from bistab.errors import UndefinedNormalizationError
from bistab.observables import (
    observable_record,
    physicality_check,
    transmittance_from_inversion,
)
from bistab.sweep import bistable_interval_width


# === exact transmittance ===================================================


def _empty_cavity_state(alpha1=0j, alpha2=0j):
    return MeanFieldState(alpha1=alpha1, alpha2=alpha2, m1=0j, m2=0j,
                          ne1=0.0, ng1=0.5, ne2=0.0, ng2=0.5)


def test_exact_transmittance_detuned_empty_cavity(baseline):
    # decoupled cavity: alpha = eta / (kappa - i dC), T = k^2 / (k^2 + dC^2)
    p = replace(baseline, g_single=0.0, delta_C1=2.0, eta1=0.7)
    st = _empty_cavity_state(alpha1=p.eta1 / (p.kappa1 - 1j * p.delta_C1))
    t = transmittance_exact(st, p, mode=1)
    assert t == p.kappa1 ** 2 / (p.kappa1 ** 2 + 4.0)
    assert t == 0.3034271384786849


def test_exact_transmittance_resonant_empty_cavity(baseline):
    p1 = replace(baseline, g_single=0.0, eta1=0.7)
    st1 = _empty_cavity_state(alpha1=p1.eta1 / p1.kappa1 + 0j)
    assert transmittance_exact(st1, p1, mode=1) == pytest.approx(1.0, rel=1e-15)
    p2 = replace(baseline, g_single=0.0, eta2=0.3)
    st2 = _empty_cavity_state(alpha2=p2.eta2 / p2.kappa2 + 0j)
    assert transmittance_exact(st2, p2, mode=2) == 1.0


def test_exact_transmittance_undriven_mode_raises(baseline):
    p = replace(baseline, g_single=0.0, eta2=0.3)
    st = _empty_cavity_state(alpha2=p.eta2 / p.kappa2 + 0j)
    with pytest.raises(UndefinedNormalizationError):
        transmittance_exact(st, p, mode=1)


def test_exact_transmittance_rejects_bad_mode(baseline):
    p = baseline.with_drive(1.0, 1.0)
    with pytest.raises(ValueError):
        transmittance_exact(MeanFieldState.empty(), p, mode=3)


def test_transmittance_accepts_state_carriers(baseline):
    # bare states and objects exposing .state give identical values
    p = replace(baseline, g_single=0.0, eta2=0.3)
    st = _empty_cavity_state(alpha2=p.eta2 / p.kappa2 + 0j)
    direct = transmittance_exact(st, p, mode=2)
    wrapped = transmittance_exact(SimpleNamespace(state=st), p, mode=2)
    assert wrapped == direct


# === inversion form ========================================================


def test_inversion_form_matches_exact_at_steady_states(baseline):
    # T(x) is the drive-independent form; at a self-consistent fixed point
    # it must agree with the stored-amplitude ratio to round-off
    p = baseline.with_drive_polar(1.13, np.pi / 4)
    sols = find_all_roots(p)
    assert sols.n_total == 3
    worst = max(
        abs(transmittance_from_inversion(x, p, mode)
            - transmittance_exact(s, p, mode))
        for s in sols.solutions for mode, x in ((1, s.x1), (2, s.x2))
    )
    assert worst <= 1e-12


def test_inversion_form_defined_for_undriven_mode(baseline):
    p = baseline.with_drive(0.1, 0.0)
    s = find_all_roots(p).solutions[0]
    rec = observable_record(s, p)
    assert rec.T2 == transmittance_from_inversion(s.x2, p, 2)
    assert rec.T2 == pytest.approx(0.08533615153928259, rel=1e-12)


def test_inversion_form_rejects_bad_mode(baseline):
    with pytest.raises(ValueError):
        transmittance_from_inversion(-1.0, baseline, mode=0)


# === dispersive approximation ==============================================


def test_dispersive_formula(baseline):
    c = cooperativity(baseline, 1)
    for x in (-1.0, -0.3, 0.0, 0.5):
        assert transmittance_approx(x, baseline, 1) == 1.0 / (1.0 + c * c * x * x)
    assert transmittance_approx(0.0, baseline, 2) == 1.0


def test_dispersive_anchor_at_full_inversion(baseline):
    # saturated ground state x = -1 at the default operating point
    approx = transmittance_approx(-1.0, baseline, 1)
    exact = transmittance_from_inversion(-1.0, baseline, 1)
    assert approx == pytest.approx(0.09178362071721484, rel=1e-12)
    assert exact == pytest.approx(0.08533615153928259, rel=1e-12)
    assert abs(approx - exact) < 0.05


# === purity proxy ==========================================================


def test_purity_saturates_at_half_under_strong_drive(baseline):
    # strong symmetric drive mixes all four levels equally: ne -> 1/4 each
    p = baseline.with_drive(1000.0, 1000.0)
    sols = find_all_roots(p)
    assert sols.n_total == 1
    s = sols.solutions[0]
    assert purity_proxy(s.state) == pytest.approx(0.499998710625623, rel=1e-9)
    assert purity_proxy(s.state) > 0.4999
    assert abs(s.state.ne1 - 0.25) < 1e-5


def test_purity_decreases_with_atom_number(scan_arcs):
    # growing collective coupling pushes stable branches deeper into the
    # ground manifold: the worst-case excited population falls monotonically
    purities = [
        max(purity_proxy(s.state)
            for sset in arc.solution_sets for s in sset.solutions if s.stable)
        for arc in scan_arcs
    ]
    frozen = [0.0018600947364578806, 0.001257968119446041,
              0.0001631323811901853, 1.6762322416031342e-05]
    for got, want in zip(purities, frozen):
        assert got == pytest.approx(want, rel=1e-9)
    assert all(a > b for a, b in zip(purities, purities[1:]))


# === transmittance complementarity =========================================


@pytest.mark.parametrize("scan_index, wedge", [(2, (89, 631)), (3, (29, 691))])
def test_stable_branches_never_transmit_on_both_modes(scan_arcs, scan_index, wedge):
    # on every stable branch one mode is dark: min(T1,T2) stays below the
    # single-atom scale 1/C^2 while max(T1,T2) stays near unity away from
    # the fold points of the multistable wedge
    arc = scan_arcs[scan_index]
    c2 = cooperativity(arc.params_base, 1) ** 2
    multi = [k for k in range(arc.n_phi)
             if arc.solution_sets[k].n_stable >= 2]
    assert (min(multi), max(multi)) == wedge
    lo, hi = wedge
    for k in range(1, arc.n_phi - 1):
        sp = arc.params_at(k)
        for s in arc.solution_sets[k].solutions:
            if not s.stable:
                continue
            t1 = transmittance_exact(s, sp, 1)
            t2 = transmittance_exact(s, sp, 2)
            assert min(t1, t2) * c2 <= 1.3
            if lo + 45 <= k <= hi - 45:
                assert max(t1, t2) >= 0.9


def test_scan_widths_grow_with_atom_number(scan_arcs):
    widths = [bistable_interval_width(arc) for arc in scan_arcs]
    frozen = [0.12435470920459599, 0.4428772976935611,
              1.1846422297911512, 1.4464416175903005]
    for got, want in zip(widths, frozen):
        assert got == pytest.approx(want, rel=1e-12)
    assert all(a < b for a, b in zip(widths, widths[1:]))


# === observable record =====================================================


def test_observable_record_fields_are_bitwise_consistent(baseline):
    p = baseline.with_drive_polar(1.13, np.pi / 4)
    s = find_all_roots(p).solutions[0]
    rec = observable_record(s, p)
    assert rec.T1 == transmittance_exact(s, p, 1)
    assert rec.T2 == transmittance_exact(s, p, 2)
    st = s.state
    assert (rec.ne1, rec.ng1, rec.ne2, rec.ng2) == (st.ne1, st.ng1, st.ne2, st.ng2)
    assert rec.purity_proxy == st.ne1 + st.ne2
    assert rec.photon1 == abs(st.alpha1) ** 2 * p.N
    assert rec.photon2 == abs(st.alpha2) ** 2 * p.N


# === physicality diagnostics ===============================================


def test_physicality_clean_state():
    report = physicality_check(MeanFieldState.empty())
    assert report.flags == ()
    assert report.ok
    assert bool(report)


def test_physicality_flags_population_range():
    bad = MeanFieldState(alpha1=0j, alpha2=0j, m1=0j, m2=0j,
                         ne1=0.0, ng1=1.5, ne2=0.0, ng2=-0.5)
    report = physicality_check(bad)
    assert not report
    assert report.flags == ("ng1 = 1.5 outside [0, 1]",
                            "ng2 = -0.5 outside [0, 1]")


def test_physicality_flags_broken_normalization():
    bad = MeanFieldState(alpha1=0j, alpha2=0j, m1=0j, m2=0j,
                         ne1=0.3, ng1=0.3, ne2=0.3, ng2=0.3)
    report = physicality_check(bad)
    assert any("population sum deviates" in f for f in report.flags)


def test_physicality_flags_coherence_bound():
    bad = MeanFieldState(alpha1=0j, alpha2=0j, m1=0.5 + 0j, m2=0j,
                         ne1=0.25, ng1=0.25, ne2=0.25, ng2=0.25)
    report = physicality_check(bad)
    assert len(report.flags) == 1
    assert report.flags[0].startswith("coherence bound violated on transition 1")


def test_physicality_rejects_negative_tolerance():
    with pytest.raises(ValueError):
        physicality_check(MeanFieldState.empty(), tol=-1e-9)
