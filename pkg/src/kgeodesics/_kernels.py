"""Hot numeric kernels for spheroid geodesics.

Everything here works on the embedded spheroid

    F(x) = (x0^2 + x1^2)/a^2 + x2^2/c^2 - 1 = 0

with the geodesic equation  x'' = -(x'^T H x' / |grad F|^2) grad F,
H = Hess F.  Integrating in the embedding avoids the colatitude chart
singularity at the poles entirely; positions are re-projected onto the
constraint and velocities renormalized to unit speed after every accepted
step, so the curve parameter is arc length.

The kernels are compiled with numba ``@njit`` by default.  Setting the
environment variable ``KGEODESICS_BACKEND=numpy`` selects the pure-numpy
(interpreted) fallback: the very same functions, undecorated.  Both paths
produce the same results; the fallback is 2-3 orders of magnitude slower
and exists for environments without a working numba and for benchmarking
(see ``benchmarks/bench_kernels.py``).

Status codes returned by the drivers:
    0  success
    1  step-size underflow
    2  sample capacity exhausted
"""

import os

import numpy as np

BACKEND_ENV = "KGEODESICS_BACKEND"


def _resolve_backend() -> str:
    choice = os.environ.get(BACKEND_ENV, "auto").strip().lower() or "auto"
    if choice == "auto":
        try:
            import numba  # noqa: F401
        except ImportError:
            return "numpy"
        return "numba"
    if choice == "numba":
        import numba  # noqa: F401  # fail loudly if requested but unavailable
        return "numba"
    if choice in ("numpy", "python"):
        return "numpy"
    raise ValueError(f"unrecognized {BACKEND_ENV}={choice!r} (use 'numba' or 'numpy')")


BACKEND = _resolve_backend()

if BACKEND == "numba":
    from numba import njit

    def _jit(func):
        return njit(cache=True, fastmath=False)(func)
else:
    def _jit(func):
        return func


# Dormand-Prince 5(4) tableau.
_A21 = 1.0 / 5.0
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
_A51, _A52, _A53, _A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
_A61, _A62, _A63, _A64, _A65 = (
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
)
_B1, _B3, _B4, _B5, _B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
# b - bhat (error weights); stage 7 is the FSAL evaluation at the 5th-order solution.
_E1 = 71.0 / 57600.0
_E3 = -71.0 / 16695.0
_E4 = 71.0 / 1920.0
_E5 = -17253.0 / 339200.0
_E6 = 22.0 / 525.0
_E7 = -1.0 / 40.0

OK = 0
STEP_UNDERFLOW = 1
CAPACITY = 2


@_jit
def _accel(a2, c2, x0, x1, x2, v0, v1, v2):
    # grad F / 2 and v^T H v / 2; the factor 2 cancels in the ratio.
    n0 = x0 / a2
    n1 = x1 / a2
    n2 = x2 / c2
    vhv = (v0 * v0 + v1 * v1) / a2 + v2 * v2 / c2
    nn = n0 * n0 + n1 * n1 + n2 * n2
    k = vhv / nn
    return -k * n0, -k * n1, -k * n2


@_jit
def _rhs6(a2, c2, y, out):
    out[0] = y[3]
    out[1] = y[4]
    out[2] = y[5]
    w0, w1, w2 = _accel(a2, c2, y[0], y[1], y[2], y[3], y[4], y[5])
    out[3] = w0
    out[4] = w1
    out[5] = w2


@_jit
def gauss_curvature(a2, c2, z):
    """Gauss curvature of the spheroid as a function of the height z."""
    e = c2 + z * z * (a2 - c2) / c2
    return c2 / (e * e)


@_jit
def _rhs8(a2, c2, y, out):
    _rhs6(a2, c2, y, out)
    out[6] = y[7]
    out[7] = -gauss_curvature(a2, c2, y[2]) * y[6]


@_jit
def _project6(a2, c2, y):
    # Restore F(x)=0 along grad F, then make v tangent and unit.
    for _ in range(2):
        f = (y[0] * y[0] + y[1] * y[1]) / a2 + y[2] * y[2] / c2 - 1.0
        n0 = y[0] / a2
        n1 = y[1] / a2
        n2 = y[2] / c2
        nn = n0 * n0 + n1 * n1 + n2 * n2
        s = 0.5 * f / nn
        y[0] -= s * n0
        y[1] -= s * n1
        y[2] -= s * n2
    n0 = y[0] / a2
    n1 = y[1] / a2
    n2 = y[2] / c2
    nn = n0 * n0 + n1 * n1 + n2 * n2
    vn = (y[3] * n0 + y[4] * n1 + y[5] * n2) / nn
    y[3] -= vn * n0
    y[4] -= vn * n1
    y[5] -= vn * n2
    sp = np.sqrt(y[3] * y[3] + y[4] * y[4] + y[5] * y[5])
    if sp > 0.0:
        y[3] /= sp
        y[4] /= sp
        y[5] /= sp
    return sp


@_jit
def _dp45_step(a2, c2, y, h, n, K, ytmp, ynew, yerr):
    """One trial Dormand-Prince step for an n-dim state (6 or 8). Returns max error."""
    if n == 6:
        _rhs6(a2, c2, y, K[0])
    else:
        _rhs8(a2, c2, y, K[0])
    for i in range(n):
        ytmp[i] = y[i] + h * _A21 * K[0, i]
    if n == 6:
        _rhs6(a2, c2, ytmp, K[1])
    else:
        _rhs8(a2, c2, ytmp, K[1])
    for i in range(n):
        ytmp[i] = y[i] + h * (_A31 * K[0, i] + _A32 * K[1, i])
    if n == 6:
        _rhs6(a2, c2, ytmp, K[2])
    else:
        _rhs8(a2, c2, ytmp, K[2])
    for i in range(n):
        ytmp[i] = y[i] + h * (_A41 * K[0, i] + _A42 * K[1, i] + _A43 * K[2, i])
    if n == 6:
        _rhs6(a2, c2, ytmp, K[3])
    else:
        _rhs8(a2, c2, ytmp, K[3])
    for i in range(n):
        ytmp[i] = y[i] + h * (_A51 * K[0, i] + _A52 * K[1, i] + _A53 * K[2, i] + _A54 * K[3, i])
    if n == 6:
        _rhs6(a2, c2, ytmp, K[4])
    else:
        _rhs8(a2, c2, ytmp, K[4])
    for i in range(n):
        ytmp[i] = y[i] + h * (
            _A61 * K[0, i] + _A62 * K[1, i] + _A63 * K[2, i] + _A64 * K[3, i] + _A65 * K[4, i]
        )
    if n == 6:
        _rhs6(a2, c2, ytmp, K[5])
    else:
        _rhs8(a2, c2, ytmp, K[5])
    for i in range(n):
        ynew[i] = y[i] + h * (
            _B1 * K[0, i] + _B3 * K[2, i] + _B4 * K[3, i] + _B5 * K[4, i] + _B6 * K[5, i]
        )
    if n == 6:
        _rhs6(a2, c2, ynew, K[6])
    else:
        _rhs8(a2, c2, ynew, K[6])
    err = 0.0
    for i in range(n):
        yerr[i] = h * (
            _E1 * K[0, i]
            + _E3 * K[2, i]
            + _E4 * K[3, i]
            + _E5 * K[4, i]
            + _E6 * K[5, i]
            + _E7 * K[6, i]
        )
        e = abs(yerr[i])
        if e > err:
            err = e
    return err


@_jit
def integrate_spheroid(a2, c2, y0, length, atol, hmax, out_t, out_y):
    """Integrate the geodesic from y0 for the given arc length, recording accepted steps.

    out_t (cap,) and out_y (cap, 6) receive the samples; row 0 is the
    (projected) initial state and the last row lands exactly at t = length.
    Returns (n_samples, status, max_err).
    """
    cap = out_t.shape[0]
    y = y0.copy()
    _project6(a2, c2, y)
    K = np.empty((7, 6))
    ytmp = np.empty(6)
    ynew = np.empty(6)
    yerr = np.empty(6)
    out_t[0] = 0.0
    for i in range(6):
        out_y[0, i] = y[i]
    n = 1
    if length <= 0.0:
        return n, OK, 0.0
    t = 0.0
    h = length * 1e-3
    if h > hmax:
        h = hmax
    if h > 0.01:
        h = 0.01
    max_err = 0.0
    while t < length:
        rem = length - t
        if rem <= 1e-15 * (1.0 + length):
            break
        clipped = False
        if h > rem:
            h = rem
            clipped = True
        err = _dp45_step(a2, c2, y, h, 6, K, ytmp, ynew, yerr)
        if err <= atol:
            t += h
            for i in range(6):
                y[i] = ynew[i]
            _project6(a2, c2, y)
            if n >= cap:
                return n, CAPACITY, max_err
            out_t[n] = t
            for i in range(6):
                out_y[n, i] = y[i]
            n += 1
            if err > max_err:
                max_err = err
            fac = 5.0
            if err > 0.0:
                fac = 0.9 * (atol / err) ** 0.2
                if fac > 5.0:
                    fac = 5.0
                elif fac < 0.2:
                    fac = 0.2
            if not clipped:
                h *= fac
        else:
            fac = 0.9 * (atol / err) ** 0.2
            if fac < 0.2:
                fac = 0.2
            h *= fac
        if h > hmax:
            h = hmax
        if h < 1e-14:
            if length - t <= 1e-12 * (1.0 + length):
                break
            return n, STEP_UNDERFLOW, max_err
    return n, OK, max_err


@_jit
def shoot_last(a2, c2, y0, length, atol, yout):
    """Endpoint-only geodesic integration. Writes the final state into yout (6,)."""
    y = y0.copy()
    _project6(a2, c2, y)
    K = np.empty((7, 6))
    ytmp = np.empty(6)
    ynew = np.empty(6)
    yerr = np.empty(6)
    if length <= 0.0:
        for i in range(6):
            yout[i] = y[i]
        return OK
    t = 0.0
    h = length * 1e-3
    if h > 0.01:
        h = 0.01
    while t < length:
        rem = length - t
        if rem <= 1e-15 * (1.0 + length):
            break
        if h > rem:
            h = rem
        err = _dp45_step(a2, c2, y, h, 6, K, ytmp, ynew, yerr)
        if err <= atol:
            t += h
            for i in range(6):
                y[i] = ynew[i]
            _project6(a2, c2, y)
            fac = 5.0
            if err > 0.0:
                fac = 0.9 * (atol / err) ** 0.2
                if fac > 5.0:
                    fac = 5.0
                elif fac < 0.2:
                    fac = 0.2
            h *= fac
        else:
            fac = 0.9 * (atol / err) ** 0.2
            if fac < 0.2:
                fac = 0.2
            h *= fac
        if h < 1e-14:
            if length - t <= 1e-12 * (1.0 + length):
                break
            for i in range(6):
                yout[i] = y[i]
            return STEP_UNDERFLOW
    for i in range(6):
        yout[i] = y[i]
    return OK


@_jit
def closest_approach(a2, c2, y0, lmax, atol, hmax, px, py, pz):
    """Track the closest approach to the target point along a shoot of length lmax.

    Returns (t_best, d_best, status).  The step size is capped by hmax so the
    per-step endpoint checks resolve the minimum; a parabolic fit through the
    best sample and its neighbours refines t_best (good enough to seed the
    boundary-value refinement).
    """
    y = y0.copy()
    _project6(a2, c2, y)
    K = np.empty((7, 6))
    ytmp = np.empty(6)
    ynew = np.empty(6)
    yerr = np.empty(6)
    t = 0.0
    h = 1e-3 * lmax
    if h > hmax:
        h = hmax
    dx = y[0] - px
    dy = y[1] - py
    dz = y[2] - pz
    d2 = dx * dx + dy * dy + dz * dz
    # rolling triple around the best sample
    t_best = 0.0
    d2_best = d2
    t_prev = 0.0
    d2_prev = d2
    tb_m = 0.0
    db_m = d2
    tb_p = -1.0
    db_p = d2
    want_next = True
    while t < lmax:
        rem = lmax - t
        if rem <= 1e-15 * (1.0 + lmax):
            break
        if h > rem:
            h = rem
        err = _dp45_step(a2, c2, y, h, 6, K, ytmp, ynew, yerr)
        if err <= atol:
            t += h
            for i in range(6):
                y[i] = ynew[i]
            _project6(a2, c2, y)
            dx = y[0] - px
            dy = y[1] - py
            dz = y[2] - pz
            d2 = dx * dx + dy * dy + dz * dz
            if want_next:
                tb_p = t
                db_p = d2
                want_next = False
            if d2 < d2_best:
                d2_best = d2
                t_best = t
                tb_m = t_prev
                db_m = d2_prev
                want_next = True
            t_prev = t
            d2_prev = d2
            fac = 5.0
            if err > 0.0:
                fac = 0.9 * (atol / err) ** 0.2
                if fac > 5.0:
                    fac = 5.0
                elif fac < 0.2:
                    fac = 0.2
            h *= fac
        else:
            fac = 0.9 * (atol / err) ** 0.2
            if fac < 0.2:
                fac = 0.2
            h *= fac
        if h > hmax:
            h = hmax
        if h < 1e-14:
            if lmax - t <= 1e-12 * (1.0 + lmax):
                break
            return t_best, np.sqrt(d2_best), STEP_UNDERFLOW
    # parabolic refinement of the sampled minimum
    t_ref = t_best
    d2_ref = d2_best
    if tb_p > tb_m and not want_next and tb_m < t_best < tb_p:
        x1 = tb_m - t_best
        x2 = tb_p - t_best
        y1 = db_m - d2_best
        y2 = db_p - d2_best
        den = x1 * x2 * (x1 - x2)
        if abs(den) > 1e-300:
            aa = (y1 * x2 - y2 * x1) / den
            bb = (y2 * x1 * x1 - y1 * x2 * x2) / den
            if aa > 0.0:
                dt = -bb / (2.0 * aa)
                if x1 < dt < x2:
                    t_ref = t_best + dt
                    val = d2_best + aa * dt * dt + bb * dt
                    if val < 0.0:
                        val = 0.0
                    d2_ref = val
    return t_ref, np.sqrt(d2_ref), OK


@_jit
def multistart_probe(a2, c2, q, e1, e2, px, py, pz, n_dirs, lmax, atol, hmax, out_t, out_d):
    """Closest approach to the target for a full grid of shooting directions at q."""
    y0 = np.empty(6)
    for k in range(n_dirs):
        ang = 2.0 * np.pi * k / n_dirs
        ca = np.cos(ang)
        sa = np.sin(ang)
        y0[0] = q[0]
        y0[1] = q[1]
        y0[2] = q[2]
        y0[3] = ca * e1[0] + sa * e2[0]
        y0[4] = ca * e1[1] + sa * e2[1]
        y0[5] = ca * e1[2] + sa * e2[2]
        tb, db, st = closest_approach(a2, c2, y0, lmax, atol, hmax, px, py, pz)
        out_t[k] = tb
        out_d[k] = db
    return OK


@_jit
def refine_bvp(a2, c2, q, e1, e2, px, py, pz, alpha0, l0, atol, conv_tol, max_iter, yend):
    """Gauss-Newton refinement of a shooting start (alpha, L) to hit the target.

    Residual is the R^3 endpoint mismatch; the 3x2 Jacobian uses a forward
    difference in alpha and the exact endpoint velocity in L.  A light
    Levenberg damping keeps the normal equations stable near focal points.
    Returns (alpha, L, |r|, converged).  yend receives the final state.
    """
    alpha = alpha0
    ell = l0
    y0 = np.empty(6)
    yf = np.empty(6)
    yfh = np.empty(6)
    rn = 1e300
    for _ in range(max_iter):
        ca = np.cos(alpha)
        sa = np.sin(alpha)
        y0[0] = q[0]
        y0[1] = q[1]
        y0[2] = q[2]
        y0[3] = ca * e1[0] + sa * e2[0]
        y0[4] = ca * e1[1] + sa * e2[1]
        y0[5] = ca * e1[2] + sa * e2[2]
        st = shoot_last(a2, c2, y0, ell, atol, yf)
        if st != OK:
            break
        r0 = yf[0] - px
        r1 = yf[1] - py
        r2 = yf[2] - pz
        rn = np.sqrt(r0 * r0 + r1 * r1 + r2 * r2)
        if rn < conv_tol:
            for i in range(6):
                yend[i] = yf[i]
            return alpha, ell, rn, 1
        h = 1e-7
        ca = np.cos(alpha + h)
        sa = np.sin(alpha + h)
        y0[3] = ca * e1[0] + sa * e2[0]
        y0[4] = ca * e1[1] + sa * e2[1]
        y0[5] = ca * e1[2] + sa * e2[2]
        st = shoot_last(a2, c2, y0, ell, atol, yfh)
        if st != OK:
            break
        j00 = (yfh[0] - yf[0]) / h
        j10 = (yfh[1] - yf[1]) / h
        j20 = (yfh[2] - yf[2]) / h
        j01 = yf[3]
        j11 = yf[4]
        j21 = yf[5]
        a00 = j00 * j00 + j10 * j10 + j20 * j20
        a01 = j00 * j01 + j10 * j11 + j20 * j21
        a11 = j01 * j01 + j11 * j11 + j21 * j21
        g0 = j00 * r0 + j10 * r1 + j20 * r2
        g1 = j01 * r0 + j11 * r1 + j21 * r2
        lam = 1e-12 * (a00 + a11) + 1e-300
        a00 += lam
        a11 += lam
        det = a00 * a11 - a01 * a01
        if det <= 0.0:
            break
        da = (a11 * g0 - a01 * g1) / det
        dl = (-a01 * g0 + a00 * g1) / det
        if da > 0.3:
            da = 0.3
        elif da < -0.3:
            da = -0.3
        lim = 0.3 * (1.0 + ell)
        if dl > lim:
            dl = lim
        elif dl < -lim:
            dl = -lim
        alpha -= da
        ell -= dl
        if ell < 1e-9:
            ell = 1e-9
    for i in range(6):
        yend[i] = yf[i]
    return alpha, ell, rn, 0


@_jit
def refine_batch(
    a2, c2, q, e1, e2, px, py, pz, alphas, l0s, atol, conv_tol, max_iter, out, yends
):
    """Run refine_bvp over a batch of starts; out rows are (alpha, L, resid, ok)."""
    n = alphas.shape[0]
    yend = np.empty(6)
    for k in range(n):
        al, el, rn, ok = refine_bvp(
            a2, c2, q, e1, e2, px, py, pz, alphas[k], l0s[k], atol, conv_tol, max_iter, yend
        )
        out[k, 0] = al
        out[k, 1] = el
        out[k, 2] = rn
        out[k, 3] = ok
        for i in range(6):
            yends[k, i] = yend[i]
    return OK


@_jit
def jacobi_spheroid(a2, c2, y0, length, atol, out_t, out_j, out_jp):
    """Integrate the scalar normal Jacobi equation J'' + K(t) J = 0 along a geodesic.

    Initial conditions J(0)=0, J'(0)=1, curvature evaluated along the
    simultaneously integrated geodesic.  Records (t, J, J') at accepted steps
    and refines the first sign change of J with bisection on the cubic
    Hermite interpolant.  Returns (n, first_zero, status); first_zero = -1.0
    when J has no zero in (0, length].
    """
    cap = out_t.shape[0]
    y = np.empty(8)
    for i in range(6):
        y[i] = y0[i]
    _project6(a2, c2, y[:6])
    y[6] = 0.0
    y[7] = 1.0
    K = np.empty((7, 8))
    ytmp = np.empty(8)
    ynew = np.empty(8)
    yerr = np.empty(8)
    out_t[0] = 0.0
    out_j[0] = 0.0
    out_jp[0] = 1.0
    n = 1
    first_zero = -1.0
    if length <= 0.0:
        return n, first_zero, OK
    t = 0.0
    h = length * 1e-3
    if h > 0.01:
        h = 0.01
    t_prev = 0.0
    j_prev = 0.0
    jp_prev = 1.0
    while t < length:
        rem = length - t
        if rem <= 1e-15 * (1.0 + length):
            break
        if h > rem:
            h = rem
        err = _dp45_step(a2, c2, y, h, 8, K, ytmp, ynew, yerr)
        if err <= atol:
            step = h
            t += h
            for i in range(8):
                y[i] = ynew[i]
            sp = _project6(a2, c2, y[:6])
            if n >= cap:
                return n, first_zero, CAPACITY
            out_t[n] = t
            out_j[n] = y[6]
            out_jp[n] = y[7]
            n += 1
            if first_zero < 0.0 and t_prev > 0.0 and j_prev * y[6] <= 0.0 and j_prev != 0.0:
                # bisection on the cubic Hermite interpolant of J over [t_prev, t]
                lo = 0.0
                hi = 1.0
                d0 = jp_prev * step
                d1 = y[7] * step
                for _ in range(80):
                    mid = 0.5 * (lo + hi)
                    s2 = mid * mid
                    s3 = s2 * mid
                    val = (
                        j_prev * (2.0 * s3 - 3.0 * s2 + 1.0)
                        + d0 * (s3 - 2.0 * s2 + mid)
                        + y[6] * (-2.0 * s3 + 3.0 * s2)
                        + d1 * (s3 - s2)
                    )
                    if val * j_prev > 0.0:
                        lo = mid
                    else:
                        hi = mid
                first_zero = t_prev + 0.5 * (lo + hi) * step
            t_prev = t
            j_prev = y[6]
            jp_prev = y[7]
            fac = 5.0
            if err > 0.0:
                fac = 0.9 * (atol / err) ** 0.2
                if fac > 5.0:
                    fac = 5.0
                elif fac < 0.2:
                    fac = 0.2
            h *= fac
        else:
            fac = 0.9 * (atol / err) ** 0.2
            if fac < 0.2:
                fac = 0.2
            h *= fac
        if h < 1e-14:
            if length - t <= 1e-12 * (1.0 + length):
                break
            return n, first_zero, STEP_UNDERFLOW
    return n, first_zero, OK


def warm_up():
    """Trigger compilation of every kernel on a tiny workload (no-op on numpy backend)."""
    a2 = 1.0
    c2 = 0.25
    y0 = np.array([1.0, 0.0, 0.0, 0.0, 1.0, 0.0])
    cap = 64
    integrate_spheroid(a2, c2, y0, 0.05, 1e-10, 10.0, np.empty(cap), np.empty((cap, 6)))
    yout = np.empty(6)
    shoot_last(a2, c2, y0, 0.05, 1e-10, yout)
    closest_approach(a2, c2, y0, 0.05, 1e-8, 0.05, 0.0, 1.0, 0.0)
    q = y0[:3].copy()
    e1 = np.array([0.0, 1.0, 0.0])
    e2 = np.array([0.0, 0.0, 1.0])
    multistart_probe(a2, c2, q, e1, e2, 0.0, 1.0, 0.0, 4, 0.05, 1e-8, 0.05, np.empty(4), np.empty(4))
    out = np.empty((1, 4))
    yends = np.empty((1, 6))
    refine_batch(
        a2, c2, q, e1, e2, 0.0, 1.0, 0.0, np.array([0.0]), np.array([1.5]), 1e-10, 1e-9, 4, out, yends
    )
    jacobi_spheroid(a2, c2, y0, 0.05, 1e-10, np.empty(cap), np.empty(cap), np.empty(cap))
