"""Low-level numeric kernels: model right-hand side, Jacobian, Newton, RK stepping.

Everything here operates on plain float64 arrays so the same source compiles
under numba and runs unchanged as pure numpy/python. JIT compilation is on by
default when numba imports; set the environment variable ``BISTAB_NO_NUMBA=1``
to force the interpreted fallback path (useful for debugging and as a
reference for the benchmark in ``benchmarks/bench_kernels.py``).

State vector layout (12 real components):

    index  0..1   Re/Im alpha_1   cavity field, mode 1
    index  2..3   Re/Im alpha_2   cavity field, mode 2
    index  4..5   Re/Im m_1       polarization, transition 1
    index  6..7   Re/Im m_2       polarization, transition 2
    index  8      n_e1            excited population, transition 1
    index  9      n_g1            ground population, level g1
    index 10      n_e2            excited population, transition 2
    index 11      n_g2            ground population, level g2

Parameter vector layout (14 components):

    0 gamma_1   1 gamma_2    2 Gamma_1  3 Gamma_2
    4 kappa_1   5 kappa_2    6 g_1      7 g_2
    8 dA_1      9 dA_2      10 dC_1    11 dC_2
    12 eta_1   13 eta_2

with g_i the collective coupling, dA/dC the atomic/cavity detunings and
Gamma_1 (Gamma_2) the cross decay e1 -> g2 (e2 -> g1). All rates in units of
gamma.
"""
import os

import numpy as np

# === jit plumbing =========================================================

_flag = os.environ.get("BISTAB_NO_NUMBA", "").strip().lower()
NUMBA_DISABLED = _flag in ("1", "true", "yes", "on")

if NUMBA_DISABLED:
    NUMBA_ENABLED = False
else:
    try:
        import numba

        NUMBA_ENABLED = True
    except ImportError:  # pragma: no cover - numba is a hard dep, but stay usable
        NUMBA_ENABLED = False


def _jit(fn):
    # nogil: kernels touch only float64 arrays, so sweep threads can overlap
    if NUMBA_ENABLED:
        return numba.njit(cache=True, fastmath=False, nogil=True)(fn)
    return fn


# parameter vector indices
I_GAMMA1, I_GAMMA2 = 0, 1
I_CROSS1, I_CROSS2 = 2, 3
I_KAPPA1, I_KAPPA2 = 4, 5
I_G1, I_G2 = 6, 7
I_DA1, I_DA2 = 8, 9
I_DC1, I_DC2 = 10, 11
I_ETA1, I_ETA2 = 12, 13

NP = 14  # parameter vector length
NDIM = 12  # state vector length

# integrator status codes
OK = 0
HIT_TMAX = 1
STEP_UNDERFLOW = 2
SNAPPED = 3

# === model ================================================================


def _rhs12(y, p, out):
    """Mean-field time derivative, written out component by component."""
    a1r, a1i = y[0], y[1]
    a2r, a2i = y[2], y[3]
    m1r, m1i = y[4], y[5]
    m2r, m2i = y[6], y[7]
    ne1, ng1, ne2, ng2 = y[8], y[9], y[10], y[11]

    g1, g2 = p[I_G1], p[I_G2]
    gg1 = p[I_GAMMA1] + p[I_CROSS1]  # total polarization decay, transition 1
    gg2 = p[I_GAMMA2] + p[I_CROSS2]
    x1 = ne1 - ng1
    x2 = ne2 - ng2

    # cavity fields: (i dC - kappa) a + g m + eta
    out[0] = -p[I_KAPPA1] * a1r - p[I_DC1] * a1i + g1 * m1r + p[I_ETA1]
    out[1] = p[I_DC1] * a1r - p[I_KAPPA1] * a1i + g1 * m1i
    out[2] = -p[I_KAPPA2] * a2r - p[I_DC2] * a2i + g2 * m2r + p[I_ETA2]
    out[3] = p[I_DC2] * a2r - p[I_KAPPA2] * a2i + g2 * m2i

    # polarizations: (i dA - gamma - Gamma) m + g (ne - ng) a
    out[4] = -gg1 * m1r - p[I_DA1] * m1i + g1 * x1 * a1r
    out[5] = p[I_DA1] * m1r - gg1 * m1i + g1 * x1 * a1i
    out[6] = -gg2 * m2r - p[I_DA2] * m2i + g2 * x2 * a2r
    out[7] = p[I_DA2] * m2r - gg2 * m2i + g2 * x2 * a2i

    # populations; pump term 2 g Re(a* m), cross decay feeds the other ground
    # level. Each flux is computed once and reused with both signs so the
    # four derivatives cancel pairwise to rounding of the row sums alone.
    pump1 = 2.0 * g1 * (a1r * m1r + a1i * m1i)
    pump2 = 2.0 * g2 * (a2r * m2r + a2i * m2i)
    dec1 = 2.0 * p[I_GAMMA1] * ne1
    dec2 = 2.0 * p[I_GAMMA2] * ne2
    cross1 = 2.0 * p[I_CROSS1] * ne1
    cross2 = 2.0 * p[I_CROSS2] * ne2
    out[8] = -(pump1 + dec1 + cross1)
    out[9] = (pump1 + dec1) + cross2
    out[10] = -(pump2 + dec2 + cross2)
    out[11] = (pump2 + dec2) + cross1


def _jac12(y, p, J):
    """Analytic Jacobian of _rhs12. J must be a zeroed (12, 12) array."""
    a1r, a1i = y[0], y[1]
    a2r, a2i = y[2], y[3]
    m1r, m1i = y[4], y[5]
    m2r, m2i = y[6], y[7]
    g1, g2 = p[I_G1], p[I_G2]
    gg1 = p[I_GAMMA1] + p[I_CROSS1]
    gg2 = p[I_GAMMA2] + p[I_CROSS2]
    x1 = y[8] - y[9]
    x2 = y[10] - y[11]

    for i in range(NDIM):
        for j in range(NDIM):
            J[i, j] = 0.0

    J[0, 0] = -p[I_KAPPA1]
    J[0, 1] = -p[I_DC1]
    J[0, 4] = g1
    J[1, 0] = p[I_DC1]
    J[1, 1] = -p[I_KAPPA1]
    J[1, 5] = g1
    J[2, 2] = -p[I_KAPPA2]
    J[2, 3] = -p[I_DC2]
    J[2, 6] = g2
    J[3, 2] = p[I_DC2]
    J[3, 3] = -p[I_KAPPA2]
    J[3, 7] = g2

    J[4, 0] = g1 * x1
    J[4, 4] = -gg1
    J[4, 5] = -p[I_DA1]
    J[4, 8] = g1 * a1r
    J[4, 9] = -g1 * a1r
    J[5, 1] = g1 * x1
    J[5, 4] = p[I_DA1]
    J[5, 5] = -gg1
    J[5, 8] = g1 * a1i
    J[5, 9] = -g1 * a1i
    J[6, 2] = g2 * x2
    J[6, 6] = -gg2
    J[6, 7] = -p[I_DA2]
    J[6, 10] = g2 * a2r
    J[6, 11] = -g2 * a2r
    J[7, 3] = g2 * x2
    J[7, 6] = p[I_DA2]
    J[7, 7] = -gg2
    J[7, 10] = g2 * a2i
    J[7, 11] = -g2 * a2i

    J[8, 0] = -2.0 * g1 * m1r
    J[8, 1] = -2.0 * g1 * m1i
    J[8, 4] = -2.0 * g1 * a1r
    J[8, 5] = -2.0 * g1 * a1i
    J[8, 8] = -2.0 * gg1
    J[9, 0] = 2.0 * g1 * m1r
    J[9, 1] = 2.0 * g1 * m1i
    J[9, 4] = 2.0 * g1 * a1r
    J[9, 5] = 2.0 * g1 * a1i
    J[9, 8] = 2.0 * p[I_GAMMA1]
    J[9, 10] = 2.0 * p[I_CROSS2]
    J[10, 2] = -2.0 * g2 * m2r
    J[10, 3] = -2.0 * g2 * m2i
    J[10, 6] = -2.0 * g2 * a2r
    J[10, 7] = -2.0 * g2 * a2i
    J[10, 10] = -2.0 * gg2
    J[11, 2] = 2.0 * g2 * m2r
    J[11, 3] = 2.0 * g2 * m2i
    J[11, 6] = 2.0 * g2 * a2r
    J[11, 7] = 2.0 * g2 * a2i
    J[11, 8] = 2.0 * p[I_CROSS1]
    J[11, 10] = 2.0 * p[I_GAMMA2]


rhs12 = _jit(_rhs12)
jac12 = _jit(_jac12)

# === Newton refinement ====================================================


def _newton12_impl(rhs, jac):
    def _newton12(y, p, max_iter, tol):
        """Damped Newton for fixed points, in place on y.

        The population equations are linearly dependent (their sum is a
        conserved quantity), so the raw 12x12 Jacobian is singular at every
        point. The last population row is therefore replaced by the
        normalization constraint sum(populations) = 1, which pins the
        physical leaf and makes the system square and generically regular.

        Returns (converged, n_iter, residual_norm) where residual_norm is the
        2-norm of the modified residual at exit.
        """
        F = np.empty(NDIM)
        Ft = np.empty(NDIM)
        J = np.empty((NDIM, NDIM))
        yt = np.empty(NDIM)
        nf = 0.0
        for it in range(max_iter):
            rhs(y, p, F)
            F[11] = y[8] + y[9] + y[10] + y[11] - 1.0
            nf = 0.0
            for i in range(NDIM):
                nf += F[i] * F[i]
            nf = np.sqrt(nf)
            if nf < tol:
                return True, it, nf
            jac(y, p, J)
            for j in range(NDIM):
                J[11, j] = 0.0
            J[11, 8] = 1.0
            J[11, 9] = 1.0
            J[11, 10] = 1.0
            J[11, 11] = 1.0
            try:
                step = np.linalg.solve(J, F)
            except Exception:
                # singular at this iterate (e.g. a random start); give up
                return False, it, nf
            # backtracking line search on the residual norm
            lam = 1.0
            accepted = False
            for _ in range(30):
                for i in range(NDIM):
                    yt[i] = y[i] - lam * step[i]
                rhs(yt, p, Ft)
                Ft[11] = yt[8] + yt[9] + yt[10] + yt[11] - 1.0
                nt = 0.0
                for i in range(NDIM):
                    nt += Ft[i] * Ft[i]
                nt = np.sqrt(nt)
                if nt < nf * (1.0 - 0.25 * lam) + 1e-300:
                    for i in range(NDIM):
                        y[i] = yt[i]
                    accepted = True
                    break
                lam *= 0.5
            if not accepted:
                return False, it, nf
        rhs(y, p, F)
        F[11] = y[8] + y[9] + y[10] + y[11] - 1.0
        nf = 0.0
        for i in range(NDIM):
            nf += F[i] * F[i]
        return np.sqrt(nf) < tol, max_iter, np.sqrt(nf)

    return _newton12


newton12 = _jit(_newton12_impl(rhs12, jac12))
_newton12_py = _newton12_impl(_rhs12, _jac12)

# === Dormand-Prince 5(4) ==================================================
# Classic DP54 tableau with FSAL; the propagated solution is 5th order and
# the embedded difference gives the 4th-order error estimate.

_C2, _C3, _C4, _C5 = 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0
_A21 = 1.0 / 5.0
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
_A51, _A52, _A53, _A54 = (
    19372.0 / 6561.0,
    -25360.0 / 2187.0,
    64448.0 / 6561.0,
    -212.0 / 729.0,
)
_A61, _A62, _A63, _A64, _A65 = (
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
)
_B1, _B3, _B4, _B5, _B6 = (
    35.0 / 384.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
)
# b5 - b4 (error weights); stage 2 weight is zero
_E1, _E3, _E4, _E5, _E6, _E7 = (
    71.0 / 57600.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
)

H_MIN = 1e-14  # below this the problem is declared stiff


def _stepper_impl(rhs):
    def _attempt_step(y, k1, p, h, rtol, atol, work, ynew, k7):
        """One DP54 trial step from y with derivative k1. Returns err_norm.

        work is a (6, 12) scratch block for stages k2..k6 and the stage state.
        ynew receives the 5th-order solution, k7 its derivative (FSAL).
        """
        k2 = work[0]
        k3 = work[1]
        k4 = work[2]
        k5 = work[3]
        k6 = work[4]
        ys = work[5]

        for i in range(NDIM):
            ys[i] = y[i] + h * _A21 * k1[i]
        rhs(ys, p, k2)
        for i in range(NDIM):
            ys[i] = y[i] + h * (_A31 * k1[i] + _A32 * k2[i])
        rhs(ys, p, k3)
        for i in range(NDIM):
            ys[i] = y[i] + h * (_A41 * k1[i] + _A42 * k2[i] + _A43 * k3[i])
        rhs(ys, p, k4)
        for i in range(NDIM):
            ys[i] = y[i] + h * (
                _A51 * k1[i] + _A52 * k2[i] + _A53 * k3[i] + _A54 * k4[i]
            )
        rhs(ys, p, k5)
        for i in range(NDIM):
            ys[i] = y[i] + h * (
                _A61 * k1[i]
                + _A62 * k2[i]
                + _A63 * k3[i]
                + _A64 * k4[i]
                + _A65 * k5[i]
            )
        rhs(ys, p, k6)
        for i in range(NDIM):
            ynew[i] = y[i] + h * (
                _B1 * k1[i] + _B3 * k3[i] + _B4 * k4[i] + _B5 * k5[i] + _B6 * k6[i]
            )
        rhs(ynew, p, k7)

        err = 0.0
        for i in range(NDIM):
            e = h * (
                _E1 * k1[i]
                + _E3 * k3[i]
                + _E4 * k4[i]
                + _E5 * k5[i]
                + _E6 * k6[i]
                + _E7 * k7[i]
            )
            ay = abs(y[i])
            an = abs(ynew[i])
            sc = atol + rtol * (ay if ay > an else an)
            q = e / sc
            err += q * q
        return np.sqrt(err / NDIM)

    return _attempt_step


def _initial_step_impl(rhs):
    def _initial_step(y0, f0, p, t_span, rtol, atol):
        """Standard two-probe startup heuristic for the first step size."""
        d0 = 0.0
        d1 = 0.0
        for i in range(NDIM):
            sc = atol + rtol * abs(y0[i])
            q0 = y0[i] / sc
            q1 = f0[i] / sc
            d0 += q0 * q0
            d1 += q1 * q1
        d0 = np.sqrt(d0 / NDIM)
        d1 = np.sqrt(d1 / NDIM)
        if d0 < 1e-5 or d1 < 1e-5:
            h0 = 1e-6
        else:
            h0 = 0.01 * d0 / d1
        y1 = np.empty(NDIM)
        f1 = np.empty(NDIM)
        for i in range(NDIM):
            y1[i] = y0[i] + h0 * f0[i]
        rhs(y1, p, f1)
        d2 = 0.0
        for i in range(NDIM):
            sc = atol + rtol * abs(y0[i])
            q = (f1[i] - f0[i]) / sc
            d2 += q * q
        d2 = np.sqrt(d2 / NDIM) / h0
        dm = d1 if d1 > d2 else d2
        if dm <= 1e-15:
            h1 = max(1e-6, h0 * 1e-3)
        else:
            h1 = (0.01 / dm) ** 0.2
        h = min(100.0 * h0, h1)
        if h > t_span:
            h = t_span
        return h

    return _initial_step


_attempt_step = _jit(_stepper_impl(rhs12))
_initial_step = _jit(_initial_step_impl(rhs12))
_attempt_step_py = _stepper_impl(_rhs12)
_initial_step_py = _initial_step_impl(_rhs12)


def _integrate_impl(rhs, attempt_step, initial_step):
    def _integrate(y, p, t0, t_end, rtol, atol, t_eval, samples):
        """Adaptive DP54 from t0 to t_end, sampling exactly at t_eval.

        y is advanced in place. samples must have shape (len(t_eval), 12);
        requested times are hit exactly by clamping the step. Returns
        (t, n_accepted, n_rejected, status).
        """
        k1 = np.empty(NDIM)
        k7 = np.empty(NDIM)
        ynew = np.empty(NDIM)
        work = np.empty((6, NDIM))
        rhs(y, p, k1)

        n_eval = t_eval.shape[0]
        pos = 0
        while pos < n_eval and t_eval[pos] <= t0:
            for i in range(NDIM):
                samples[pos, i] = y[i]
            pos += 1

        t = t0
        n_acc = 0
        n_rej = 0
        if t_end <= t0:
            return t, n_acc, n_rej, OK
        h = initial_step(y, k1, p, t_end - t0, rtol, atol)
        facmax = 5.0
        while t < t_end:
            if h > t_end - t:
                h = t_end - t
            clamped = False
            clamp_to = 0.0
            if pos < n_eval and t + h >= t_eval[pos]:
                h = t_eval[pos] - t
                clamp_to = t_eval[pos]
                clamped = True
            if h < H_MIN:
                return t, n_acc, n_rej, STEP_UNDERFLOW
            err = attempt_step(y, k1, p, h, rtol, atol, work, ynew, k7)
            if err <= 1.0:
                # land exactly on the requested sample time, no roundoff creep
                if clamped:
                    t = clamp_to
                else:
                    t = t + h
                for i in range(NDIM):
                    y[i] = ynew[i]
                    k1[i] = k7[i]
                n_acc += 1
                if clamped:
                    for i in range(NDIM):
                        samples[pos, i] = y[i]
                    pos += 1
                if err == 0.0:
                    fac = facmax
                else:
                    fac = 0.9 * err ** -0.2
                    if fac > facmax:
                        fac = facmax
                    if fac < 0.2:
                        fac = 0.2
                h = h * fac
                facmax = 5.0
            else:
                fac = 0.9 * err ** -0.2
                if fac < 0.2:
                    fac = 0.2
                h = h * fac
                n_rej += 1
                facmax = 1.0
        return t, n_acc, n_rej, OK

    return _integrate


def _settle_impl(rhs, attempt_step, initial_step):
    def _settle(y, p, eps, t_max, rtol, atol, targets, target_tol):
        """Integrate until the derivative norm falls below eps.

        targets is a (k, 12) array of already-known fixed points (k may be 0);
        when the trajectory comes within target_tol (max-norm) of one of them
        the loop stops early and reports its row index. Returns
        (t, n_accepted, n_rejected, status, target_index).
        """
        k1 = np.empty(NDIM)
        k7 = np.empty(NDIM)
        ynew = np.empty(NDIM)
        work = np.empty((6, NDIM))
        rhs(y, p, k1)

        nf = 0.0
        for i in range(NDIM):
            if abs(k1[i]) > nf:
                nf = abs(k1[i])
        if nf < eps:
            return 0.0, 0, 0, OK, -1

        t = 0.0
        n_acc = 0
        n_rej = 0
        h = initial_step(y, k1, p, t_max, rtol, atol)
        facmax = 5.0
        n_targets = targets.shape[0]
        # the controller's per-step error re-injection leaves a flow-norm
        # floor of roughly 10 * tol / h; when the norm stops improving while
        # still above eps, tighten the tolerances so the floor drops below it
        best_nf = nf
        stalled = 0
        while t < t_max:
            if h > t_max - t:
                h = t_max - t
            if h < H_MIN:
                return t, n_acc, n_rej, STEP_UNDERFLOW, -1
            err = attempt_step(y, k1, p, h, rtol, atol, work, ynew, k7)
            if err <= 1.0:
                t = t + h
                for i in range(NDIM):
                    y[i] = ynew[i]
                    k1[i] = k7[i]
                n_acc += 1
                nf = 0.0
                for i in range(NDIM):
                    if abs(k1[i]) > nf:
                        nf = abs(k1[i])
                if nf < eps:
                    return t, n_acc, n_rej, OK, -1
                if nf < 0.5 * best_nf:
                    best_nf = nf
                    stalled = 0
                else:
                    stalled += 1
                    if stalled >= 200:
                        stalled = 0
                        if rtol > 2e-13:
                            rtol = rtol * 1e-2
                            atol = atol * 1e-2
                            if rtol < 1e-13:
                                rtol = 1e-13
                            if atol < 1e-13:
                                atol = 1e-13
                for kt in range(n_targets):
                    d = 0.0
                    for i in range(NDIM):
                        q = abs(y[i] - targets[kt, i])
                        if q > d:
                            d = q
                    if d < target_tol:
                        return t, n_acc, n_rej, SNAPPED, kt
                if err == 0.0:
                    fac = facmax
                else:
                    fac = 0.9 * err ** -0.2
                    if fac > facmax:
                        fac = facmax
                    if fac < 0.2:
                        fac = 0.2
                h = h * fac
                facmax = 5.0
            else:
                fac = 0.9 * err ** -0.2
                if fac < 0.2:
                    fac = 0.2
                h = h * fac
                n_rej += 1
                facmax = 1.0
        return t, n_acc, n_rej, HIT_TMAX, -1

    return _settle


def _fixed_impl(rhs, attempt_step):
    def _integrate_fixed(y, p, t_end, n_steps):
        """Constant-step DP54 (no controller); used for convergence studies."""
        k1 = np.empty(NDIM)
        k7 = np.empty(NDIM)
        ynew = np.empty(NDIM)
        work = np.empty((6, NDIM))
        rhs(y, p, k1)
        h = t_end / n_steps
        for _ in range(n_steps):
            attempt_step(y, k1, p, h, 1.0, 1.0, work, ynew, k7)
            for i in range(NDIM):
                y[i] = ynew[i]
                k1[i] = k7[i]

    return _integrate_fixed


integrate_adaptive = _jit(_integrate_impl(rhs12, _attempt_step, _initial_step))
settle_loop = _jit(_settle_impl(rhs12, _attempt_step, _initial_step))
integrate_fixed = _jit(_fixed_impl(rhs12, _attempt_step))

# interpreted twins, exposed for the benchmark regardless of the env flag
integrate_adaptive_py = _integrate_impl(_rhs12, _attempt_step_py, _initial_step_py)
settle_loop_py = _settle_impl(_rhs12, _attempt_step_py, _initial_step_py)
newton12_py = _newton12_py
rhs12_py = _rhs12
jac12_py = _jac12


def warmup():
    """Trigger JIT compilation of all kernels (no-op on the fallback path)."""
    y = np.zeros(NDIM)
    y[9] = 0.6
    y[11] = 0.4
    p = np.ones(NP)
    p[I_DA1] = p[I_DA2] = -2.0
    p[I_DC1] = p[I_DC2] = 0.0
    out = np.empty(NDIM)
    rhs12(y, p, out)
    J = np.empty((NDIM, NDIM))
    jac12(y, p, J)
    yc = y.copy()
    newton12(yc, p, 3, 1e-30)
    t_eval = np.array([0.5, 1.0])
    samples = np.empty((2, NDIM))
    yc = y.copy()
    integrate_adaptive(yc, p, 0.0, 1.0, 1e-8, 1e-8, t_eval, samples)
    yc = y.copy()
    settle_loop(yc, p, 1e-6, 5.0, 1e-8, 1e-8, np.empty((0, NDIM)), 1e-9)
    yc = y.copy()
    integrate_fixed(yc, p, 1.0, 10)
