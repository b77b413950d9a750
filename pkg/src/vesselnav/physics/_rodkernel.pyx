# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled rod equilibrium solver.

Statement-for-statement mirror of ``_kernel_py.solve_rod``; both backends
must stay bit-identical. Keep arithmetic expressions, guards and iteration
order in sync with the reference when editing.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, floor, isfinite, sqrt

cnp.import_array()

ERR_NONE = 0
ERR_NONFINITE = 1
ERR_EXPLOSION = 2

cdef long _ERR_NONE = 0
cdef long _ERR_NONFINITE = 1
cdef long _ERR_EXPLOSION = 2

cdef double _CHI_EPS = 1e-8
cdef double _LEN_EPS = 1e-12


cdef struct NearestHit:
    long seg
    double t
    double cx
    double cy
    double cz
    double dist


cdef inline void _scan(
    const double[:, ::1] seg_a, const double[:, ::1] seg_d, const double[::1] seg_len2,
    const long[::1] items, long lo, long hi, bint use_range, long m,
    double px, double py, double pz, NearestHit* hit,
) noexcept nogil:
    cdef long k, s
    cdef double wx, wy, wz, t, ex, ey, ez, d2
    cdef double best = INFINITY
    cdef long best_seg = -1
    cdef double best_t = 0.0
    cdef long count = m if use_range else (hi - lo)
    for k in range(count):
        s = k if use_range else items[lo + k]
        wx = px - seg_a[s, 0]
        wy = py - seg_a[s, 1]
        wz = pz - seg_a[s, 2]
        t = (wx * seg_d[s, 0] + wy * seg_d[s, 1] + wz * seg_d[s, 2]) / seg_len2[s]
        if t < 0.0:
            t = 0.0
        elif t > 1.0:
            t = 1.0
        ex = wx - t * seg_d[s, 0]
        ey = wy - t * seg_d[s, 1]
        ez = wz - t * seg_d[s, 2]
        d2 = (ex * ex + ey * ey) + ez * ez
        if d2 < best:
            best = d2
            best_seg = s
            best_t = t
    hit.seg = best_seg
    hit.t = best_t
    hit.dist = best


cdef inline void _nearest_segment(
    const double[:, ::1] seg_a, const double[:, ::1] seg_d, const double[::1] seg_len2,
    double ox, double oy, double oz, long d0, long d1, long d2_, double cell,
    const long[::1] cell_start, const long[::1] cell_items, double slack, long m,
    double px, double py, double pz, NearestHit* hit,
) noexcept nogil:
    cdef long ix = <long>floor((px - ox) / cell)
    cdef long iy = <long>floor((py - oy) / cell)
    cdef long iz = <long>floor((pz - oz) / cell)
    cdef long c, s0, s1
    hit.seg = -1
    hit.t = 0.0
    hit.dist = INFINITY
    if 0 <= ix < d0 and 0 <= iy < d1 and 0 <= iz < d2_:
        c = (ix * d1 + iy) * d2_ + iz
        s0 = cell_start[c]
        s1 = cell_start[c + 1]
        _scan(seg_a, seg_d, seg_len2, cell_items, s0, s1, False, m, px, py, pz, hit)
    if hit.seg < 0 or sqrt(hit.dist) > slack:
        _scan(seg_a, seg_d, seg_len2, cell_items, 0, 0, True, m, px, py, pz, hit)
    cdef long s = hit.seg
    hit.cx = seg_a[s, 0] + hit.t * seg_d[s, 0]
    hit.cy = seg_a[s, 1] + hit.t * seg_d[s, 1]
    hit.cz = seg_a[s, 2] + hit.t * seg_d[s, 2]
    hit.dist = sqrt(hit.dist)


def solve_rod(
    cnp.ndarray[cnp.float64_t, ndim=2] x,
    base_pos,
    inlet_dir,
    seed_n,
    seed_b,
    cnp.ndarray[cnp.float64_t, ndim=1] k1,
    cnp.ndarray[cnp.float64_t, ndim=1] k2,
    cnp.ndarray[cnp.float64_t, ndim=1] stiff,
    cnp.ndarray[cnp.float64_t, ndim=1] eta,
    cnp.ndarray[cnp.float64_t, ndim=2] cap_anchor,
    cnp.ndarray[cnp.float64_t, ndim=1] cap_r,
    table,
    double margin,
    double ds,
    double tol,
    long max_iters,
    double bend_cap,
    energy_out=None,
):
    """Relax one rod to quasi-static equilibrium in place (compiled twin)."""
    cdef long n = x.shape[0]
    cdef long nb = n - 1
    cdef double bx = base_pos[0], by = base_pos[1], bz = base_pos[2]
    cdef double idx = inlet_dir[0], idy = inlet_dir[1], idz = inlet_dir[2]
    cdef double snx = seed_n[0], sny = seed_n[1], snz = seed_n[2]
    cdef double sbx = seed_b[0], sby = seed_b[1], sbz = seed_b[2]

    cdef const double[:, ::1] seg_a = table.seg_a
    cdef const double[:, ::1] seg_d = table.seg_d
    cdef const double[::1] seg_len2 = table.seg_len2
    cdef const double[::1] seg_r0 = table.seg_r0
    cdef const double[::1] seg_dr = table.seg_dr
    origin = table.origin
    cdef double ox = origin[0], oy = origin[1], oz = origin[2]
    dims = table.dims
    cdef long d0 = dims[0], d1 = dims[1], d2_ = dims[2]
    cdef double cell = table.cell
    cdef const long[::1] cell_start = table.cell_start
    cdef const long[::1] cell_items = table.cell_items
    cdef double slack = table.slack
    cdef long m = seg_a.shape[0]

    cdef double[::1] X = np.empty(3 * n)
    cdef double[::1] prev = np.empty(3 * n)
    cdef double[::1] grad = np.empty(3 * n)
    cdef double[::1] CA = np.empty(3 * n)
    cdef double[::1] tn = np.empty(3 * n)
    cdef double[::1] dn = np.empty(6 * n)
    cdef const double[::1] K1 = k1
    cdef const double[::1] K2 = k2
    cdef const double[::1] B = stiff
    cdef const double[::1] ETA = eta
    cdef const double[::1] CAPR = cap_r
    cdef double[::1] eout
    cdef long eout_len = 0
    if energy_out is not None:
        eout = energy_out
        eout_len = eout.shape[0]

    cdef long j, it, i
    for j in range(n):
        X[3 * j] = x[j, 0]
        X[3 * j + 1] = x[j, 1]
        X[3 * j + 2] = x[j, 2]
        CA[3 * j] = cap_anchor[j, 0]
        CA[3 * j + 1] = cap_anchor[j, 1]
        CA[3 * j + 2] = cap_anchor[j, 2]

    cdef long err = _ERR_NONE
    cdef long iters = 0
    cdef double maxdisp = 0.0
    cdef double energy, ddx, ddy, ddz, d, clean_tol, moved
    cdef bint want_energy

    for it in range(max_iters):
        iters = it + 1
        for j in range(3 * n):
            prev[j] = X[j]

        _pin_and_ftl(X, n, nb, bx, by, bz, idx, idy, idz, ds)

        want_energy = eout_len > 0 and it < eout_len
        energy = _bending_step(
            X, n, nb, idx, idy, idz, snx, sny, snz, sbx, sby, sbz,
            K1, K2, B, ETA, grad, tn, dn, ds, bend_cap, want_energy,
        )
        if want_energy:
            eout[it] = energy

        err = _collision_pass(
            X, n, nb, CA, CAPR,
            seg_a, seg_d, seg_len2, seg_r0, seg_dr,
            ox, oy, oz, d0, d1, d2_, cell, cell_start, cell_items, slack, m,
            margin, prev, True, &moved,
        )
        if err != _ERR_NONE:
            break

        maxdisp = 0.0
        for j in range(n):
            ddx = X[3 * j] - prev[3 * j]
            ddy = X[3 * j + 1] - prev[3 * j + 1]
            ddz = X[3 * j + 2] - prev[3 * j + 2]
            d = sqrt((ddx * ddx + ddy * ddy) + ddz * ddz)
            if d > maxdisp:
                maxdisp = d
        if maxdisp < tol:
            break

    if err == _ERR_NONE:
        clean_tol = 0.005 * ds
        for it in range(60):
            for j in range(3 * n):
                prev[j] = X[j]
            _pin_and_ftl(X, n, nb, bx, by, bz, idx, idy, idz, ds)
            _collision_pass(
                X, n, nb, CA, CAPR,
                seg_a, seg_d, seg_len2, seg_r0, seg_dr,
                ox, oy, oz, d0, d1, d2_, cell, cell_start, cell_items, slack, m,
                margin, prev, False, &moved,
            )
            if moved < clean_tol:
                break
        for j in range(3 * n):
            if not isfinite(X[j]):
                err = _ERR_NONFINITE
                break

    for j in range(n):
        x[j, 0] = X[3 * j]
        x[j, 1] = X[3 * j + 1]
        x[j, 2] = X[3 * j + 2]
    return iters, maxdisp, err


cdef void _pin_and_ftl(
    double[::1] X, long n, long nb,
    double bx, double by, double bz,
    double idx, double idy, double idz, double ds,
) noexcept nogil:
    cdef long j
    cdef double ex, ey, ez, ln, sc
    X[3 * nb] = bx
    X[3 * nb + 1] = by
    X[3 * nb + 2] = bz
    for j in range(nb - 1, -1, -1):
        ex = X[3 * j] - X[3 * (j + 1)]
        ey = X[3 * j + 1] - X[3 * (j + 1) + 1]
        ez = X[3 * j + 2] - X[3 * (j + 1) + 2]
        ln = sqrt((ex * ex + ey * ey) + ez * ez)
        if ln < _LEN_EPS:
            ex = idx
            ey = idy
            ez = idz
            ln = 1.0
        sc = ds / ln
        X[3 * j] = X[3 * (j + 1)] + ex * sc
        X[3 * j + 1] = X[3 * (j + 1) + 1] + ey * sc
        X[3 * j + 2] = X[3 * (j + 1) + 2] + ez * sc


cdef void _transport_directors(
    double[::1] X, long nb,
    double idx, double idy, double idz,
    double snx, double sny, double snz,
    double[::1] tn, double[::1] dn,
) noexcept nogil:
    cdef long j
    cdef double ex, ey, ez, ln
    cdef double ptx, pty, ptz, nx_, ny_, nz_
    cdef double tx, ty, tz, dot, den, axx, axy, axz, adn, cx, cy, cz, pr
    for j in range(nb):
        ex = X[3 * j] - X[3 * (j + 1)]
        ey = X[3 * j + 1] - X[3 * (j + 1) + 1]
        ez = X[3 * j + 2] - X[3 * (j + 1) + 2]
        ln = sqrt((ex * ex + ey * ey) + ez * ez)
        if ln < _LEN_EPS:
            ex = idx
            ey = idy
            ez = idz
            ln = 1.0
        tn[3 * j] = ex / ln
        tn[3 * j + 1] = ey / ln
        tn[3 * j + 2] = ez / ln
    ptx = idx
    pty = idy
    ptz = idz
    nx_ = snx
    ny_ = sny
    nz_ = snz
    for j in range(nb - 1, -1, -1):
        tx = tn[3 * j]
        ty = tn[3 * j + 1]
        tz = tn[3 * j + 2]
        dot = ptx * tx + pty * ty + ptz * tz
        den = 1.0 + dot
        if den >= _CHI_EPS:
            axx = pty * tz - ptz * ty
            axy = ptz * tx - ptx * tz
            axz = ptx * ty - pty * tx
            adn = axx * nx_ + axy * ny_ + axz * nz_
            cx = axy * nz_ - axz * ny_
            cy = axz * nx_ - axx * nz_
            cz = axx * ny_ - axy * nx_
            nx_ = dot * nx_ + cx + axx * (adn / den)
            ny_ = dot * ny_ + cy + axy * (adn / den)
            nz_ = dot * nz_ + cz + axz * (adn / den)
        pr = nx_ * tx + ny_ * ty + nz_ * tz
        nx_ -= pr * tx
        ny_ -= pr * ty
        nz_ -= pr * tz
        ln = sqrt((nx_ * nx_ + ny_ * ny_) + nz_ * nz_)
        if ln < _LEN_EPS:
            _perp3(tx, ty, tz, &nx_, &ny_, &nz_)
        else:
            nx_ /= ln
            ny_ /= ln
            nz_ /= ln
        dn[6 * j] = nx_
        dn[6 * j + 1] = ny_
        dn[6 * j + 2] = nz_
        dn[6 * j + 3] = ty * nz_ - tz * ny_
        dn[6 * j + 4] = tz * nx_ - tx * nz_
        dn[6 * j + 5] = tx * ny_ - ty * nx_
        ptx = tx
        pty = ty
        ptz = tz


cdef double _stencil_forces(
    double[::1] X, long nb, long i,
    double idx, double idy, double idz,
    double snx, double sny, double snz,
    double sbx, double sby, double sbz,
    const double[::1] K1, const double[::1] K2, const double[::1] B,
    double[::1] dn, double ds, double* f,
) noexcept nogil:
    cdef double t1x, t1y, t1z, t2x, t2y, t2z, L1, L2
    cdef double rnx, rny, rnz, rbx, rby, rbz
    cdef double ex, ey, ez, chi, kbx, kby, kbz, r0x, r0y, r0z
    cdef double dxk, dyk, dzk, energy, gx, gy, gz, kbg, pr
    cdef double c1x, c1y, c1z, c2x, c2y, c2z
    cdef long j
    if i == nb:
        t1x = idx
        t1y = idy
        t1z = idz
        L1 = ds
        rnx = snx
        rny = sny
        rnz = snz
        rbx = sbx
        rby = sby
        rbz = sbz
    else:
        ex = X[3 * i] - X[3 * (i + 1)]
        ey = X[3 * i + 1] - X[3 * (i + 1) + 1]
        ez = X[3 * i + 2] - X[3 * (i + 1) + 2]
        L1 = sqrt((ex * ex + ey * ey) + ez * ez)
        if L1 < _LEN_EPS:
            ex = idx
            ey = idy
            ez = idz
            L1 = 1.0
        t1x = ex / L1
        t1y = ey / L1
        t1z = ez / L1
        rnx = dn[6 * i]
        rny = dn[6 * i + 1]
        rnz = dn[6 * i + 2]
        rbx = dn[6 * i + 3]
        rby = dn[6 * i + 4]
        rbz = dn[6 * i + 5]
    j = i - 1
    ex = X[3 * j] - X[3 * (j + 1)]
    ey = X[3 * j + 1] - X[3 * (j + 1) + 1]
    ez = X[3 * j + 2] - X[3 * (j + 1) + 2]
    L2 = sqrt((ex * ex + ey * ey) + ez * ez)
    if L2 < _LEN_EPS:
        ex = idx
        ey = idy
        ez = idz
        L2 = 1.0
    t2x = ex / L2
    t2y = ey / L2
    t2z = ez / L2
    chi = 1.0 + (t1x * t2x + t1y * t2y + t1z * t2z)
    if chi < _CHI_EPS:
        chi = _CHI_EPS
    kbx = 2.0 * (t1y * t2z - t1z * t2y) / chi
    kby = 2.0 * (t1z * t2x - t1x * t2z) / chi
    kbz = 2.0 * (t1x * t2y - t1y * t2x) / chi
    r0x = K1[i] * rnx + K2[i] * rbx
    r0y = K1[i] * rny + K2[i] * rby
    r0z = K1[i] * rnz + K2[i] * rbz
    dxk = kbx / ds - r0x
    dyk = kby / ds - r0y
    dzk = kbz / ds - r0z
    energy = B[i] * ds * ((dxk * dxk + dyk * dyk) + dzk * dzk)
    gx = 2.0 * B[i] * dxk
    gy = 2.0 * B[i] * dyk
    gz = 2.0 * B[i] * dzk
    kbg = kbx * gx + kby * gy + kbz * gz
    c1x = 2.0 * (t2y * gz - t2z * gy) - t2x * kbg
    c1y = 2.0 * (t2z * gx - t2x * gz) - t2y * kbg
    c1z = 2.0 * (t2x * gy - t2y * gx) - t2z * kbg
    pr = t1x * c1x + t1y * c1y + t1z * c1z
    f[0] = (c1x - pr * t1x) / (L1 * chi)
    f[1] = (c1y - pr * t1y) / (L1 * chi)
    f[2] = (c1z - pr * t1z) / (L1 * chi)
    c2x = -2.0 * (t1y * gz - t1z * gy) - t1x * kbg
    c2y = -2.0 * (t1z * gx - t1x * gz) - t1y * kbg
    c2z = -2.0 * (t1x * gy - t1y * gx) - t1z * kbg
    pr = t2x * c2x + t2y * c2y + t2z * c2z
    f[3] = (c2x - pr * t2x) / (L2 * chi)
    f[4] = (c2y - pr * t2y) / (L2 * chi)
    f[5] = (c2z - pr * t2z) / (L2 * chi)
    return energy


cdef double _bending_step(
    double[::1] X, long n, long nb,
    double idx, double idy, double idz,
    double snx, double sny, double snz,
    double sbx, double sby, double sbz,
    const double[::1] K1, const double[::1] K2,
    const double[::1] B, const double[::1] ETA,
    double[::1] grad, double[::1] tn, double[::1] dn,
    double ds, double bend_cap, bint want_energy,
) noexcept nogil:
    cdef long i, j
    cdef double energy = 0.0
    cdef double f[6]
    cdef double gx, gy, gz, sx, sy, sz, sl, sc
    if nb < 1:
        return 0.0
    _transport_directors(X, nb, idx, idy, idz, snx, sny, snz, tn, dn)
    if want_energy:
        for i in range(nb, 0, -1):
            energy += _stencil_forces(
                X, nb, i, idx, idy, idz, snx, sny, snz, sbx, sby, sbz, K1, K2, B, dn, ds, f
            )
    for j in range(nb - 1, -1, -1):
        gx = 0.0
        gy = 0.0
        gz = 0.0
        if j + 1 <= nb:
            _stencil_forces(
                X, nb, j + 1, idx, idy, idz, snx, sny, snz, sbx, sby, sbz, K1, K2, B, dn, ds, f
            )
            gx += f[3]
            gy += f[4]
            gz += f[5]
        if 1 <= j and j <= nb:
            _stencil_forces(
                X, nb, j, idx, idy, idz, snx, sny, snz, sbx, sby, sbz, K1, K2, B, dn, ds, f
            )
            gx += f[0] - f[3]
            gy += f[1] - f[4]
            gz += f[2] - f[5]
        if 1 <= j - 1:
            _stencil_forces(
                X, nb, j - 1, idx, idy, idz, snx, sny, snz, sbx, sby, sbz, K1, K2, B, dn, ds, f
            )
            gx -= f[0]
            gy -= f[1]
            gz -= f[2]
        sx = ETA[j] * gx
        sy = ETA[j] * gy
        sz = ETA[j] * gz
        sl = sqrt((sx * sx + sy * sy) + sz * sz)
        if sl > bend_cap:
            sc = bend_cap / sl
            sx *= sc
            sy *= sc
            sz *= sc
        X[3 * j] -= sx
        X[3 * j + 1] -= sy
        X[3 * j + 2] -= sz
    return energy


cdef long _collision_pass(
    double[::1] X, long n, long nb,
    const double[::1] CA, const double[::1] CAPR,
    const double[:, ::1] seg_a, const double[:, ::1] seg_d, const double[::1] seg_len2,
    const double[::1] seg_r0, const double[::1] seg_dr,
    double ox, double oy, double oz, long d0, long d1, long d2_, double cell,
    const long[::1] cell_start, const long[::1] cell_items, double slack, long m,
    double margin, const double[::1] iter_start, bint check_errors, double* moved_out,
) noexcept nogil:
    cdef long j
    cdef double px, py, pz, wx, wy, wz, ln, sc, cr
    cdef double r_loc, bound, ddx, ddy, ddz, d, ix, iy, iz, step
    cdef double moved = 0.0
    cdef long err = _ERR_NONE
    cdef NearestHit hit
    for j in range(nb):
        px = X[3 * j]
        py = X[3 * j + 1]
        pz = X[3 * j + 2]
        if not (isfinite(px) and isfinite(py) and isfinite(pz)):
            moved_out[0] = moved
            return _ERR_NONFINITE if check_errors else _ERR_NONE
        cr = CAPR[j]
        if cr < INFINITY:
            wx = px - CA[3 * j]
            wy = py - CA[3 * j + 1]
            wz = pz - CA[3 * j + 2]
            ln = sqrt((wx * wx + wy * wy) + wz * wz)
            if ln > cr:
                sc = cr / ln
                px = CA[3 * j] + wx * sc
                py = CA[3 * j + 1] + wy * sc
                pz = CA[3 * j + 2] + wz * sc
        _nearest_segment(
            seg_a, seg_d, seg_len2, ox, oy, oz, d0, d1, d2_, cell,
            cell_start, cell_items, slack, m, px, py, pz, &hit,
        )
        r_loc = seg_r0[hit.seg] + hit.t * seg_dr[hit.seg]
        bound = r_loc - margin
        if hit.dist > bound and hit.dist > _LEN_EPS:
            sc = bound / hit.dist
            px = hit.cx + (px - hit.cx) * sc
            py = hit.cy + (py - hit.cy) * sc
            pz = hit.cz + (pz - hit.cz) * sc
        ddx = px - X[3 * j]
        ddy = py - X[3 * j + 1]
        ddz = pz - X[3 * j + 2]
        d = sqrt((ddx * ddx + ddy * ddy) + ddz * ddz)
        if d > moved:
            moved = d
        X[3 * j] = px
        X[3 * j + 1] = py
        X[3 * j + 2] = pz
        if check_errors:
            ix = px - iter_start[3 * j]
            iy = py - iter_start[3 * j + 1]
            iz = pz - iter_start[3 * j + 2]
            step = sqrt((ix * ix + iy * iy) + iz * iz)
            if step > 4.0 * r_loc:
                err = _ERR_EXPLOSION
    moved_out[0] = moved
    return err


cdef void _perp3(double tx, double ty, double tz, double* px, double* py, double* pz) noexcept nogil:
    cdef double ax = tx if tx >= 0 else -tx
    cdef double ay = ty if ty >= 0 else -ty
    cdef double az = tz if tz >= 0 else -tz
    cdef double vx, vy, vz, ln
    if ax <= ay and ax <= az:
        vx = 0.0
        vy = tz
        vz = -ty
    elif ay <= az:
        vx = -tz
        vy = 0.0
        vz = tx
    else:
        vx = ty
        vy = -tx
        vz = 0.0
    ln = sqrt((vx * vx + vy * vy) + vz * vz)
    px[0] = vx / ln
    py[0] = vy / ln
    pz[0] = vz / ln
