"""Pure-Python ray/height-field intersection.

Line-for-line mirror of ``_kernels.pyx``; used when the compiled extension
is unavailable or ``RFRECON_PURE_PYTHON`` is set.
"""

import math

import numpy as np

INF = math.inf


def _patch_hit(z00, z10, z01, z11, s0, s1, r0, r1, oz, vz, t_in, t_out):
    e1 = z10 - z00
    e2 = z01 - z00
    e3 = z00 - z10 - z01 + z11
    a = e3 * s1 * r1
    b = e1 * s1 + e2 * r1 + e3 * (s0 * r1 + s1 * r0) - vz
    c = z00 + e1 * s0 + e2 * r0 + e3 * s0 * r0 - oz
    f_in = (a * t_in + b) * t_in + c
    if f_in <= 0.0:
        return t_in
    scale = abs(b) + abs(c) + 1e-300
    best = INF
    if abs(a) * (abs(t_in) + abs(t_out) + 1.0) <= 1e-14 * scale:
        if b != 0.0:
            best = -c / b
    else:
        disc = b * b - 4.0 * a * c
        if disc < 0.0:
            return INF
        q = -0.5 * (b + math.copysign(math.sqrt(disc), b))
        roots = []
        if q != 0.0:
            roots.append(c / q)
        roots.append(q / a)
        for r in roots:
            if t_in <= r < best:
                best = r
    if best >= t_in and best <= t_out:
        return best
    return INF


def intersect_rays(heights, valid_cells, x0, y0, dx, dy, zmin, zmax, origins, dirs, tmin, tmax):
    """First hit of each ray with the bilinear height-field surface.

    ``valid_cells`` has shape ``(H-1, W-1)``: a cell is usable when all four
    corners are valid. Returns ``(t, cell_col, cell_row)``; misses get
    ``t = inf`` and cell indices -1.
    """
    n_rays = origins.shape[0]
    h, w = heights.shape
    t_hit = np.full(n_rays, INF)
    cell_c = np.full(n_rays, -1, dtype=np.int64)
    cell_r = np.full(n_rays, -1, dtype=np.int64)
    if w < 2 or h < 2:
        return t_hit, cell_c, cell_r
    x_hi = x0 + (w - 1) * dx
    y_hi = y0 + (h - 1) * dy
    hz = heights.tolist()
    vc = valid_cells.tolist()
    for n in range(n_rays):
        ox, oy, oz = float(origins[n, 0]), float(origins[n, 1]), float(origins[n, 2])
        vx, vy, vz = float(dirs[n, 0]), float(dirs[n, 1]), float(dirs[n, 2])
        t0 = float(tmin[n])
        t1 = float(tmax[n])
        ok = True
        for o, v, lo, hi in ((ox, vx, x0, x_hi), (oy, vy, y0, y_hi), (oz, vz, zmin, zmax)):
            if v == 0.0:
                if o < lo or o > hi:
                    ok = False
                    break
            else:
                ta = (lo - o) / v
                tb = (hi - o) / v
                if ta > tb:
                    ta, tb = tb, ta
                if ta > t0:
                    t0 = ta
                if tb < t1:
                    t1 = tb
        if not ok or t0 > t1:
            continue
        px = ox + t0 * vx
        py = oy + t0 * vy
        k = int(math.floor((px - x0) / dx))
        l = int(math.floor((py - y0) / dy))
        k = min(max(k, 0), w - 2)
        l = min(max(l, 0), h - 2)
        if vx > 0.0:
            step_x = 1
            tmx = (x0 + (k + 1) * dx - ox) / vx
            tdx = dx / vx
        elif vx < 0.0:
            step_x = -1
            tmx = (x0 + k * dx - ox) / vx
            tdx = -dx / vx
        else:
            step_x = 0
            tmx = INF
            tdx = INF
        if vy > 0.0:
            step_y = 1
            tmy = (y0 + (l + 1) * dy - oy) / vy
            tdy = dy / vy
        elif vy < 0.0:
            step_y = -1
            tmy = (y0 + l * dy - oy) / vy
            tdy = -dy / vy
        else:
            step_y = 0
            tmy = INF
            tdy = INF
        t_in = t0
        while True:
            t_out = min(tmx, tmy, t1)
            if vc[l][k]:
                xk = x0 + k * dx
                yl = y0 + l * dy
                th = _patch_hit(
                    hz[l][k], hz[l][k + 1], hz[l + 1][k], hz[l + 1][k + 1],
                    (ox - xk) / dx, vx / dx, (oy - yl) / dy, vy / dy,
                    oz, vz, t_in, t_out,
                )
                if th < INF:
                    t_hit[n] = th
                    cell_c[n] = k
                    cell_r[n] = l
                    break
            if t_out >= t1:
                break
            if tmx < tmy:
                k += step_x
                t_in = tmx
                tmx += tdx
            else:
                l += step_y
                t_in = tmy
                tmy += tdy
            if k < 0 or k > w - 2 or l < 0 or l > h - 2:
                break
    return t_hit, cell_c, cell_r
