"""Compiled kernels against their interpreted twins.

Both paths are built from the same source functions with fastmath disabled,
so every kernel must reproduce the interpreted result bit for bit; the
fallback path (BISTAB_NO_NUMBA=1) must carry a full steady-state solve to
identical floats.
"""
import os
import subprocess
import sys
import textwrap

import numpy as np
import pytest

from bistab import MeanFieldState, SystemParams, find_all_roots
from bistab.kernels import (
    HIT_TMAX,
    NUMBA_DISABLED,
    NUMBA_ENABLED,
    OK,
    SNAPPED,
    integrate_adaptive,
    integrate_adaptive_py,
    jac12,
    jac12_py,
    newton12,
    newton12_py,
    rhs12,
    rhs12_py,
    settle_loop,
    settle_loop_py,
    warmup,
)

NO_TARGETS = np.empty((0, 12))


@pytest.fixture(scope="module")
def driven_vector():
    p = SystemParams().with_drive(1.13 / np.sqrt(2), 1.13 / np.sqrt(2))
    return p, p.to_vector(), MeanFieldState.empty().to_vector()


# === plumbing ==============================================================


def test_jit_flags_are_coherent():
    assert isinstance(NUMBA_ENABLED, bool)
    assert isinstance(NUMBA_DISABLED, bool)
    assert not (NUMBA_ENABLED and NUMBA_DISABLED)
    if NUMBA_DISABLED:
        assert rhs12 is rhs12_py


def test_warmup_runs_clean():
    warmup()
    warmup()


# === algebraic kernels =====================================================


def test_rhs_and_jacobian_twins_bitwise(driven_vector):
    _, pv, _ = driven_vector
    rng = np.random.default_rng(0)
    for _ in range(50):
        y = rng.normal(size=12)
        y[8:] = np.abs(y[8:])
        y[8:] /= y[8:].sum()
        a, b = np.empty(12), np.empty(12)
        rhs12(y, pv, a)
        rhs12_py(y, pv, b)
        assert np.array_equal(a, b)
        Ja, Jb = np.empty((12, 12)), np.empty((12, 12))
        jac12(y, pv, Ja)
        jac12_py(y, pv, Jb)
        assert np.array_equal(Ja, Jb)


def test_newton_twins_agree_on_failed_start(driven_vector):
    # the driven vacuum is not a descent start; both paths must give up at
    # the same iteration with the same residual
    _, pv, y0 = driven_vector
    ya, yb = y0.copy(), y0.copy()
    ra = newton12(ya, pv, 50, 1e-12)
    rb = newton12_py(yb, pv, 50, 1e-12)
    assert ra == rb
    assert ra[0] is False or ra[0] == False  # noqa: E712 - numba returns np.bool_
    assert ra[1] == 0
    assert np.array_equal(ya, yb)


def test_newton_twins_converge_bitwise_near_root(driven_vector):
    _, pv, y0 = driven_vector
    y = y0.copy()
    settle_loop(y, pv, 1e-10, 400.0, 1e-10, 1e-12, NO_TARGETS, 1e-9)
    start = y + 1e-4
    ya, yb = start.copy(), start.copy()
    ca, na, resa = newton12(ya, pv, 50, 1e-12)
    cb, nb, resb = newton12_py(yb, pv, 50, 1e-12)
    assert bool(ca) and bool(cb)
    assert na == nb <= 5
    assert resa == resb
    assert np.array_equal(ya, yb)


# === integrators ===========================================================


def test_adaptive_twins_bitwise(driven_vector):
    _, pv, y0 = driven_vector
    t_eval = np.array([1.0, 2.0, 5.0])
    ya, yb = y0.copy(), y0.copy()
    sa, sb = np.empty((3, 12)), np.empty((3, 12))
    outa = integrate_adaptive(ya, pv, 0.0, 5.0, 1e-10, 1e-10, t_eval, sa)
    outb = integrate_adaptive_py(yb, pv, 0.0, 5.0, 1e-10, 1e-10, t_eval, sb)
    assert outa == outb
    assert outa[3] == OK
    assert np.array_equal(ya, yb)
    assert np.array_equal(sa, sb)


def test_settle_twins_bitwise(driven_vector):
    _, pv, y0 = driven_vector
    ya, yb = y0.copy(), y0.copy()
    outa = settle_loop(ya, pv, 1e-10, 400.0, 1e-10, 1e-12, NO_TARGETS, 1e-9)
    outb = settle_loop_py(yb, pv, 1e-10, 400.0, 1e-10, 1e-12, NO_TARGETS, 1e-9)
    assert outa == outb
    assert np.array_equal(ya, yb)


def test_settle_status_codes(driven_vector):
    _, pv, y0 = driven_vector
    y = y0.copy()
    out = settle_loop(y, pv, 1e-10, 0.01, 1e-10, 1e-12, NO_TARGETS, 1e-9)
    assert out[3] == HIT_TMAX
    assert out[4] == -1
    # snapping: hand the settled point back as a known target
    target = y0.copy()
    settle_loop(target, pv, 1e-10, 400.0, 1e-10, 1e-12, NO_TARGETS, 1e-9)
    y = y0.copy()
    out = settle_loop(y, pv, 1e-10, 400.0, 1e-10, 1e-12,
                      target.reshape(1, 12), 1e-3)
    assert out[3] == SNAPPED
    assert out[4] == 0


# === interpreted fallback path =============================================


def test_fallback_flag_reproduces_compiled_solve(driven_vector):
    # a fresh interpreter with BISTAB_NO_NUMBA=1 must run entirely on the
    # interpreted twins and land on the same steady states, bit for bit
    p, _, _ = driven_vector
    expected = [s.x1 for s in find_all_roots(p).solutions]
    code = textwrap.dedent("""
        import numpy as np
        from bistab.kernels import NUMBA_ENABLED, NUMBA_DISABLED, rhs12, rhs12_py
        from bistab import SystemParams, find_all_roots
        assert NUMBA_DISABLED and not NUMBA_ENABLED
        assert rhs12 is rhs12_py
        p = SystemParams().with_drive(1.13 / np.sqrt(2), 1.13 / np.sqrt(2))
        print(" ".join(repr(s.x1) for s in find_all_roots(p).solutions))
    """)
    env = dict(os.environ, BISTAB_NO_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code],
                         capture_output=True, text=True, env=env)
    assert out.returncode == 0, out.stderr
    assert [float(t) for t in out.stdout.split()] == expected
