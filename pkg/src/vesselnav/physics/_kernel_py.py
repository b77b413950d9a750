"""Pure-Python rod equilibrium solver (reference implementation).

The compiled extension in ``_rodkernel.pyx`` mirrors this code statement by
statement; both must produce bit-identical results. Keep every arithmetic
expression, guard and iteration order in sync when editing either one.

One solver iteration applies, in order:
  (a) inextensibility: base pin + follow-the-leader toward the tip,
  (b) a capped gradient step on the discrete bending energy
      sum_i B_i * ds * |kappa_i - kappa0_i|^2,
  (c) collision projections: the coaxial cap, then the lumen tube.
After convergence a cleanup loop alternates (a) and (c) so the final state
is inside the lumen with segment lengths restored.
"""

from __future__ import annotations

import math

import numpy as np

from .tube import TubeTable

ERR_NONE = 0
ERR_NONFINITE = 1
ERR_EXPLOSION = 2

_CHI_EPS = 1e-8
_LEN_EPS = 1e-12


def _nearest_segment(table: TubeTable, px, py, pz):
    """Exact nearest tube segment: grid candidates, exhaustive fallback.

    Returns (seg, t, cx, cy, cz, dist) with c the closest point.
    """
    ax = table.seg_a[:, 0]
    ay = table.seg_a[:, 1]
    az = table.seg_a[:, 2]
    dx = table.seg_d[:, 0]
    dy = table.seg_d[:, 1]
    dz = table.seg_d[:, 2]
    len2 = table.seg_len2
    ox, oy, oz = (float(v) for v in table.origin)
    d0, d1, d2 = (int(v) for v in table.dims)
    cell = table.cell

    def scan(indices):
        best = math.inf
        best_seg = -1
        best_t = 0.0
        for s in indices:
            s = int(s)
            wx = px - ax[s]
            wy = py - ay[s]
            wz = pz - az[s]
            t = (wx * dx[s] + wy * dy[s] + wz * dz[s]) / len2[s]
            if t < 0.0:
                t = 0.0
            elif t > 1.0:
                t = 1.0
            ex = wx - t * dx[s]
            ey = wy - t * dy[s]
            ez = wz - t * dz[s]
            d2_ = (ex * ex + ey * ey) + ez * ez
            if d2_ < best:
                best = d2_
                best_seg = s
                best_t = t
        return best_seg, best_t, best

    ix = int(math.floor((px - ox) / cell))
    iy = int(math.floor((py - oy) / cell))
    iz = int(math.floor((pz - oz) / cell))
    best_seg = -1
    best_t = 0.0
    best = math.inf
    if 0 <= ix < d0 and 0 <= iy < d1 and 0 <= iz < d2:
        c = (ix * d1 + iy) * d2 + iz
        s0 = int(table.cell_start[c])
        s1 = int(table.cell_start[c + 1])
        best_seg, best_t, best = scan(table.cell_items[s0:s1])
    if best_seg < 0 or math.sqrt(best) > table.slack:
        best_seg, best_t, best = scan(range(table.n_segments))
    s = best_seg
    cx = ax[s] + best_t * dx[s]
    cy = ay[s] + best_t * dy[s]
    cz = az[s] + best_t * dz[s]
    return s, best_t, cx, cy, cz, math.sqrt(best)


def solve_rod(
    x: np.ndarray,
    base_pos,
    inlet_dir,
    seed_n,
    seed_b,
    k1: np.ndarray,
    k2: np.ndarray,
    stiff: np.ndarray,
    eta: np.ndarray,
    cap_anchor: np.ndarray,
    cap_r: np.ndarray,
    table: TubeTable,
    margin: float,
    ds: float,
    tol: float,
    max_iters: int,
    bend_cap: float,
    energy_out: np.ndarray | None = None,
) -> tuple[int, float, int]:
    """Relax one rod to quasi-static equilibrium in place.

    ``x`` is (n, 3) tip-first; the last row is the pinned base. Returns
    (iterations_used, last_max_displacement, error_flag).
    """
    n = len(x)
    nb = n - 1
    bx, by, bz = (float(v) for v in base_pos)
    _solve = _SolverScratch(n)
    X = _solve.x
    for j in range(n):
        X[3 * j] = float(x[j, 0])
        X[3 * j + 1] = float(x[j, 1])
        X[3 * j + 2] = float(x[j, 2])
    idx = float(inlet_dir[0])
    idy = float(inlet_dir[1])
    idz = float(inlet_dir[2])
    snx, sny, snz = (float(v) for v in seed_n)
    sbx, sby, sbz = (float(v) for v in seed_b)
    K1 = [float(v) for v in k1]
    K2 = [float(v) for v in k2]
    B = [float(v) for v in stiff]
    ETA = [float(v) for v in eta]
    CAPR = [float(v) for v in cap_r]
    CA = _solve.cap
    for j in range(n):
        CA[3 * j] = float(cap_anchor[j, 0])
        CA[3 * j + 1] = float(cap_anchor[j, 1])
        CA[3 * j + 2] = float(cap_anchor[j, 2])

    err = ERR_NONE
    iters = 0
    maxdisp = 0.0
    prev = _solve.prev
    grad = _solve.grad
    tn = _solve.tangents
    dn = _solve.directors

    for it in range(max_iters):
        iters = it + 1
        for j in range(3 * n):
            prev[j] = X[j]

        _pin_and_ftl(X, n, nb, bx, by, bz, idx, idy, idz, ds)

        want_energy = energy_out is not None and it < len(energy_out)
        energy = _bending_step(
            X, n, nb, idx, idy, idz, snx, sny, snz, sbx, sby, sbz,
            K1, K2, B, ETA, grad, tn, dn, ds, bend_cap, want_energy,
        )
        if want_energy:
            energy_out[it] = energy

        err = _collision_pass(X, n, nb, CA, CAPR, table, margin, prev, True)
        if err != ERR_NONE:
            break

        maxdisp = 0.0
        for j in range(n):
            ddx = X[3 * j] - prev[3 * j]
            ddy = X[3 * j + 1] - prev[3 * j + 1]
            ddz = X[3 * j + 2] - prev[3 * j + 2]
            d = math.sqrt((ddx * ddx + ddy * ddy) + ddz * ddz)
            if d > maxdisp:
                maxdisp = d
        if maxdisp < tol:
            break

    if err == ERR_NONE:
        # cleanup: restore lengths, end strictly inside the lumen
        clean_tol = 0.005 * ds
        for _ in range(60):
            for j in range(3 * n):
                prev[j] = X[j]
            _pin_and_ftl(X, n, nb, bx, by, bz, idx, idy, idz, ds)
            moved = _collision_pass(X, n, nb, CA, CAPR, table, margin, None, False)
            if moved < clean_tol:
                break
        for j in range(3 * n):
            if not math.isfinite(X[j]):
                err = ERR_NONFINITE
                break

    for j in range(n):
        x[j, 0] = X[3 * j]
        x[j, 1] = X[3 * j + 1]
        x[j, 2] = X[3 * j + 2]
    return iters, maxdisp, err


class _SolverScratch:
    def __init__(self, n: int):
        self.x = [0.0] * (3 * n)
        self.prev = [0.0] * (3 * n)
        self.grad = [0.0] * (3 * n)
        self.cap = [0.0] * (3 * n)
        self.tangents = [0.0] * (3 * n)
        self.directors = [0.0] * (6 * n)


def _pin_and_ftl(X, n, nb, bx, by, bz, idx, idy, idz, ds):
    X[3 * nb] = bx
    X[3 * nb + 1] = by
    X[3 * nb + 2] = bz
    for j in range(nb - 1, -1, -1):
        ex = X[3 * j] - X[3 * (j + 1)]
        ey = X[3 * j + 1] - X[3 * (j + 1) + 1]
        ez = X[3 * j + 2] - X[3 * (j + 1) + 2]
        ln = math.sqrt((ex * ex + ey * ey) + ez * ez)
        if ln < _LEN_EPS:
            ex = idx
            ey = idy
            ez = idz
            ln = 1.0
        sc = ds / ln
        X[3 * j] = X[3 * (j + 1)] + ex * sc
        X[3 * j + 1] = X[3 * (j + 1) + 1] + ey * sc
        X[3 * j + 2] = X[3 * (j + 1) + 2] + ez * sc


def _transport_directors(X, nb, idx, idy, idz, snx, sny, snz, tn, dn):
    """Edge tangents plus the inlet frame parallel-transported base to tip."""
    for j in range(nb):
        ex = X[3 * j] - X[3 * (j + 1)]
        ey = X[3 * j + 1] - X[3 * (j + 1) + 1]
        ez = X[3 * j + 2] - X[3 * (j + 1) + 2]
        ln = math.sqrt((ex * ex + ey * ey) + ez * ez)
        if ln < _LEN_EPS:
            ex, ey, ez = idx, idy, idz
            ln = 1.0
        tn[3 * j] = ex / ln
        tn[3 * j + 1] = ey / ln
        tn[3 * j + 2] = ez / ln
    ptx, pty, ptz = idx, idy, idz
    nx_, ny_, nz_ = snx, sny, snz
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
        # re-orthonormalize against the new tangent
        pr = nx_ * tx + ny_ * ty + nz_ * tz
        nx_ -= pr * tx
        ny_ -= pr * ty
        nz_ -= pr * tz
        ln = math.sqrt((nx_ * nx_ + ny_ * ny_) + nz_ * nz_)
        if ln < _LEN_EPS:
            nx_, ny_, nz_ = _perp3(tx, ty, tz)
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
        ptx, pty, ptz = tx, ty, tz


def _stencil_forces(X, nb, i, idx, idy, idz, snx, sny, snz, sbx, sby, sbz, K1, K2, B, dn, ds):
    """Bending forces (f1, f2) and energy of the stencil centered at node i.

    f1 is dE/d(e1) pulled back to positions: dE/dx[i+1] = -f1,
    dE/dx[i] = f1 - f2, dE/dx[i-1] = +f2. Tangents come from current
    positions; directors from the last transport pass.
    """
    if i == nb:
        t1x, t1y, t1z = idx, idy, idz
        L1 = ds
        rnx, rny, rnz = snx, sny, snz
        rbx, rby, rbz = sbx, sby, sbz
    else:
        ex = X[3 * i] - X[3 * (i + 1)]
        ey = X[3 * i + 1] - X[3 * (i + 1) + 1]
        ez = X[3 * i + 2] - X[3 * (i + 1) + 2]
        L1 = math.sqrt((ex * ex + ey * ey) + ez * ez)
        if L1 < _LEN_EPS:
            ex, ey, ez = idx, idy, idz
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
    L2 = math.sqrt((ex * ex + ey * ey) + ez * ez)
    if L2 < _LEN_EPS:
        ex, ey, ez = idx, idy, idz
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
    # d(kb)/d(e1)^T g = (I - t1 t1^T)(2 t2 x g - t2 (kb . g)) / (L1 chi)
    kbg = kbx * gx + kby * gy + kbz * gz
    c1x = 2.0 * (t2y * gz - t2z * gy) - t2x * kbg
    c1y = 2.0 * (t2z * gx - t2x * gz) - t2y * kbg
    c1z = 2.0 * (t2x * gy - t2y * gx) - t2z * kbg
    pr = t1x * c1x + t1y * c1y + t1z * c1z
    f1x = (c1x - pr * t1x) / (L1 * chi)
    f1y = (c1y - pr * t1y) / (L1 * chi)
    f1z = (c1z - pr * t1z) / (L1 * chi)
    # d(kb)/d(e2)^T g = (I - t2 t2^T)(-2 t1 x g - t1 (kb . g)) / (L2 chi)
    c2x = -2.0 * (t1y * gz - t1z * gy) - t1x * kbg
    c2y = -2.0 * (t1z * gx - t1x * gz) - t1y * kbg
    c2z = -2.0 * (t1x * gy - t1y * gx) - t1z * kbg
    pr = t2x * c2x + t2y * c2y + t2z * c2z
    f2x = (c2x - pr * t2x) / (L2 * chi)
    f2y = (c2y - pr * t2y) / (L2 * chi)
    f2z = (c2z - pr * t2z) / (L2 * chi)
    return f1x, f1y, f1z, f2x, f2y, f2z, energy


def _bending_step(
    X, n, nb, idx, idy, idz, snx, sny, snz, sbx, sby, sbz,
    K1, K2, B, ETA, grad, tn, dn, ds, bend_cap, want_energy,
):
    """One Gauss-Seidel sweep of capped per-node gradient steps.

    Nodes are visited base to tip, each moving along the current negative
    gradient of the bending energy. Returns the energy before the sweep
    when requested, else 0.
    """
    if nb < 1:
        return 0.0
    _transport_directors(X, nb, idx, idy, idz, snx, sny, snz, tn, dn)
    energy = 0.0
    if want_energy:
        for i in range(nb, 0, -1):
            f = _stencil_forces(
                X, nb, i, idx, idy, idz, snx, sny, snz, sbx, sby, sbz, K1, K2, B, dn, ds
            )
            energy += f[6]
    for j in range(nb - 1, -1, -1):  # base stays pinned
        gx = 0.0
        gy = 0.0
        gz = 0.0
        if j + 1 <= nb:
            f = _stencil_forces(
                X, nb, j + 1, idx, idy, idz, snx, sny, snz, sbx, sby, sbz, K1, K2, B, dn, ds
            )
            gx += f[3]
            gy += f[4]
            gz += f[5]
        if 1 <= j <= nb:
            f = _stencil_forces(
                X, nb, j, idx, idy, idz, snx, sny, snz, sbx, sby, sbz, K1, K2, B, dn, ds
            )
            gx += f[0] - f[3]
            gy += f[1] - f[4]
            gz += f[2] - f[5]
        if 1 <= j - 1:
            f = _stencil_forces(
                X, nb, j - 1, idx, idy, idz, snx, sny, snz, sbx, sby, sbz, K1, K2, B, dn, ds
            )
            gx -= f[0]
            gy -= f[1]
            gz -= f[2]
        sx = ETA[j] * gx
        sy = ETA[j] * gy
        sz = ETA[j] * gz
        sl = math.sqrt((sx * sx + sy * sy) + sz * sz)
        if sl > bend_cap:
            sc = bend_cap / sl
            sx *= sc
            sy *= sc
            sz *= sc
        X[3 * j] -= sx
        X[3 * j + 1] -= sy
        X[3 * j + 2] -= sz
    return energy


def _collision_pass(X, n, nb, CA, CAPR, table, margin, iter_start, check_errors):
    """Cap + lumen projection for every free node.

    With ``check_errors`` the return value is an error flag computed against
    ``iter_start`` positions; otherwise it is the max displacement applied.
    """
    moved = 0.0
    err = ERR_NONE
    for j in range(nb):  # base node is pinned, skip it
        px = X[3 * j]
        py = X[3 * j + 1]
        pz = X[3 * j + 2]
        if not (math.isfinite(px) and math.isfinite(py) and math.isfinite(pz)):
            return ERR_NONFINITE if check_errors else moved
        cr = CAPR[j]
        if cr < math.inf:
            wx = px - CA[3 * j]
            wy = py - CA[3 * j + 1]
            wz = pz - CA[3 * j + 2]
            ln = math.sqrt((wx * wx + wy * wy) + wz * wz)
            if ln > cr:
                sc = cr / ln
                px = CA[3 * j] + wx * sc
                py = CA[3 * j + 1] + wy * sc
                pz = CA[3 * j + 2] + wz * sc
        seg, t, cx, cy, cz, dist = _nearest_segment(table, px, py, pz)
        r_loc = table.seg_r0[seg] + t * table.seg_dr[seg]
        bound = r_loc - margin
        if dist > bound and dist > _LEN_EPS:
            sc = bound / dist
            px = cx + (px - cx) * sc
            py = cy + (py - cy) * sc
            pz = cz + (pz - cz) * sc
        ddx = px - X[3 * j]
        ddy = py - X[3 * j + 1]
        ddz = pz - X[3 * j + 2]
        d = math.sqrt((ddx * ddx + ddy * ddy) + ddz * ddz)
        if d > moved:
            moved = d
        X[3 * j] = px
        X[3 * j + 1] = py
        X[3 * j + 2] = pz
        if check_errors and iter_start is not None:
            ix = px - iter_start[3 * j]
            iy = py - iter_start[3 * j + 1]
            iz = pz - iter_start[3 * j + 2]
            step = math.sqrt((ix * ix + iy * iy) + iz * iz)
            if step > 4.0 * r_loc:
                err = ERR_EXPLOSION
    if check_errors:
        return err
    return moved


def _perp3(tx, ty, tz):
    ax, ay, az = abs(tx), abs(ty), abs(tz)
    if ax <= ay and ax <= az:
        px, py, pz = 0.0, tz, -ty
    elif ay <= az:
        px, py, pz = -tz, 0.0, tx
    else:
        px, py, pz = ty, -tx, 0.0
    ln = math.sqrt((px * px + py * py) + pz * pz)
    return px / ln, py / ln, pz / ln
