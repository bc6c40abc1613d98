# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled ray/height-field intersection (see _raycast_py for the reference)."""

import numpy as np
cimport numpy as cnp
from libc.math cimport floor, sqrt, fabs, copysign, INFINITY

cnp.import_array()


cdef inline double _patch_hit(double z00, double z10, double z01, double z11,
                              double s0, double s1, double r0, double r1,
                              double oz, double vz, double t_in, double t_out) nogil:
    cdef double e1 = z10 - z00
    cdef double e2 = z01 - z00
    cdef double e3 = z00 - z10 - z01 + z11
    cdef double a = e3 * s1 * r1
    cdef double b = e1 * s1 + e2 * r1 + e3 * (s0 * r1 + s1 * r0) - vz
    cdef double c = z00 + e1 * s0 + e2 * r0 + e3 * s0 * r0 - oz
    cdef double f_in = (a * t_in + b) * t_in + c
    cdef double scale, best, disc, q, r
    if f_in <= 0.0:
        return t_in
    scale = fabs(b) + fabs(c) + 1e-300
    best = INFINITY
    if fabs(a) * (fabs(t_in) + fabs(t_out) + 1.0) <= 1e-14 * scale:
        if b != 0.0:
            best = -c / b
    else:
        disc = b * b - 4.0 * a * c
        if disc < 0.0:
            return INFINITY
        q = -0.5 * (b + copysign(sqrt(disc), b))
        if q != 0.0:
            r = c / q
            if t_in <= r and r < best:
                best = r
        r = q / a
        if t_in <= r and r < best:
            best = r
    if best >= t_in and best <= t_out:
        return best
    return INFINITY


def intersect_rays(const double[:, ::1] heights, const cnp.uint8_t[:, ::1] valid_cells,
                   double x0, double y0, double dx, double dy, double zmin, double zmax,
                   const double[:, ::1] origins, const double[:, ::1] dirs,
                   const double[::1] tmin, const double[::1] tmax):
    cdef Py_ssize_t n_rays = origins.shape[0]
    cdef Py_ssize_t h = heights.shape[0]
    cdef Py_ssize_t w = heights.shape[1]
    t_hit_arr = np.full(n_rays, np.inf)
    cell_c_arr = np.full(n_rays, -1, dtype=np.int64)
    cell_r_arr = np.full(n_rays, -1, dtype=np.int64)
    if w < 2 or h < 2:
        return t_hit_arr, cell_c_arr, cell_r_arr
    cdef double[::1] t_hit = t_hit_arr
    cdef cnp.int64_t[::1] cell_c = cell_c_arr
    cdef cnp.int64_t[::1] cell_r = cell_r_arr
    cdef double x_hi = x0 + (w - 1) * dx
    cdef double y_hi = y0 + (h - 1) * dy
    cdef Py_ssize_t n, k, l
    cdef int step_x, step_y, axis, ok
    cdef double ox, oy, oz, vx, vy, vz, t0, t1, o, v, lo, hi, ta, tb, tmp
    cdef double px, py, tmx, tmy, tdx, tdy, t_in, t_out, th, xk, yl
    with nogil:
        for n in range(n_rays):
            ox = origins[n, 0]; oy = origins[n, 1]; oz = origins[n, 2]
            vx = dirs[n, 0]; vy = dirs[n, 1]; vz = dirs[n, 2]
            t0 = tmin[n]
            t1 = tmax[n]
            ok = 1
            for axis in range(3):
                if axis == 0:
                    o = ox; v = vx; lo = x0; hi = x_hi
                elif axis == 1:
                    o = oy; v = vy; lo = y0; hi = y_hi
                else:
                    o = oz; v = vz; lo = zmin; hi = zmax
                if v == 0.0:
                    if o < lo or o > hi:
                        ok = 0
                        break
                else:
                    ta = (lo - o) / v
                    tb = (hi - o) / v
                    if ta > tb:
                        tmp = ta; ta = tb; tb = tmp
                    if ta > t0:
                        t0 = ta
                    if tb < t1:
                        t1 = tb
            if ok == 0 or t0 > t1:
                continue
            px = ox + t0 * vx
            py = oy + t0 * vy
            k = <Py_ssize_t>floor((px - x0) / dx)
            l = <Py_ssize_t>floor((py - y0) / dy)
            if k < 0:
                k = 0
            if k > w - 2:
                k = w - 2
            if l < 0:
                l = 0
            if l > h - 2:
                l = h - 2
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
                tmx = INFINITY
                tdx = INFINITY
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
                tmy = INFINITY
                tdy = INFINITY
            t_in = t0
            while True:
                t_out = tmx
                if tmy < t_out:
                    t_out = tmy
                if t1 < t_out:
                    t_out = t1
                if valid_cells[l, k]:
                    xk = x0 + k * dx
                    yl = y0 + l * dy
                    th = _patch_hit(heights[l, k], heights[l, k + 1],
                                    heights[l + 1, k], heights[l + 1, k + 1],
                                    (ox - xk) / dx, vx / dx, (oy - yl) / dy, vy / dy,
                                    oz, vz, t_in, t_out)
                    if th < INFINITY:
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
    return t_hit_arr, cell_c_arr, cell_r_arr
