# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled ray-marching kernel. Arithmetic mirrors _compositing_np so the
two backends agree to float64 rounding; pixels parallelize with OpenMP.
"""

import numpy as np

cimport numpy as cnp
from cython.parallel cimport prange
from libc.math cimport INFINITY, floor, pow


cdef inline double _interp1(double s, const double[::1] xs, const double[:, ::1] ys,
                            Py_ssize_t channel, Py_ssize_t n) nogil:
    # Matches np.interp: exact node values, slope form in between.
    cdef Py_ssize_t j
    cdef double slope
    if s <= xs[0]:
        return ys[0, channel]
    if s >= xs[n - 1]:
        return ys[n - 1, channel]
    j = 0
    while j + 1 < n and xs[j + 1] <= s:
        j += 1
    if xs[j] == s:
        return ys[j, channel]
    slope = (ys[j + 1, channel] - ys[j, channel]) / (xs[j + 1] - xs[j])
    return slope * (s - xs[j]) + ys[j, channel]


cdef void _march_one(
    const float[:, :, ::1] values,
    Py_ssize_t nx, Py_ssize_t ny, Py_ssize_t nz,
    const double[::1] bmin,
    const double[::1] spacing,
    double bmax0, double bmax1, double bmax2,
    double vmin, double inv_range,
    const double[::1] tf_pos,
    const double[:, ::1] tf_rgba,
    Py_ssize_t n_tf,
    const double[::1] eye,
    const double[:, ::1] dirs,
    Py_ssize_t ray,
    double step, double exponent,
    double[:, ::1] out,
) nogil:
    cdef double t_near = 0.0
    cdef double t_far = INFINITY
    cdef bint hit = True
    cdef Py_ssize_t axis, ix, iy, iz, k
    cdef double d, o, lo_w, hi_w, t1, t2, tmp, t
    cdef double px, py, pz, gx, gy, gz, fx, fy, fz
    cdef double c00, c10, c01, c11, c0, c1, sample, s
    cdef double r, g, b, a, a_corr, w
    cdef double acc_r = 0.0, acc_g = 0.0, acc_b = 0.0, acc_a = 0.0

    for axis in range(3):
        d = dirs[ray, axis]
        o = eye[axis]
        lo_w = bmin[axis]
        if axis == 0:
            hi_w = bmax0
        elif axis == 1:
            hi_w = bmax1
        else:
            hi_w = bmax2
        if d == 0.0:
            if o < lo_w or o > hi_w:
                hit = False
                break
        else:
            t1 = (lo_w - o) / d
            t2 = (hi_w - o) / d
            if t1 > t2:
                tmp = t1
                t1 = t2
                t2 = tmp
            if t1 > t_near:
                t_near = t1
            if t2 < t_far:
                t_far = t2
    if not hit or t_near >= t_far:
        return

    k = 0
    while True:
        t = t_near + (k + 0.5) * step
        if t >= t_far:
            break
        px = eye[0] + t * dirs[ray, 0]
        py = eye[1] + t * dirs[ray, 1]
        pz = eye[2] + t * dirs[ray, 2]
        gx = (px - bmin[0]) / spacing[0]
        gy = (py - bmin[1]) / spacing[1]
        gz = (pz - bmin[2]) / spacing[2]
        ix = <Py_ssize_t> floor(gx)
        iy = <Py_ssize_t> floor(gy)
        iz = <Py_ssize_t> floor(gz)
        if ix < 0:
            ix = 0
        if ix > nx - 2:
            ix = nx - 2
        if iy < 0:
            iy = 0
        if iy > ny - 2:
            iy = ny - 2
        if iz < 0:
            iz = 0
        if iz > nz - 2:
            iz = nz - 2
        fx = gx - ix
        fy = gy - iy
        fz = gz - iz
        if fx < 0.0:
            fx = 0.0
        if fx > 1.0:
            fx = 1.0
        if fy < 0.0:
            fy = 0.0
        if fy > 1.0:
            fy = 1.0
        if fz < 0.0:
            fz = 0.0
        if fz > 1.0:
            fz = 1.0

        c00 = (<double> values[ix, iy, iz]) * (1.0 - fx) + (<double> values[ix + 1, iy, iz]) * fx
        c10 = (<double> values[ix, iy + 1, iz]) * (1.0 - fx) + (<double> values[ix + 1, iy + 1, iz]) * fx
        c01 = (<double> values[ix, iy, iz + 1]) * (1.0 - fx) + (<double> values[ix + 1, iy, iz + 1]) * fx
        c11 = (<double> values[ix, iy + 1, iz + 1]) * (1.0 - fx) + (<double> values[ix + 1, iy + 1, iz + 1]) * fx
        c0 = c00 * (1.0 - fy) + c10 * fy
        c1 = c01 * (1.0 - fy) + c11 * fy
        sample = c0 * (1.0 - fz) + c1 * fz

        if inv_range == 0.0:
            s = 0.5
        else:
            s = (sample - vmin) * inv_range
            if s < 0.0:
                s = 0.0
            if s > 1.0:
                s = 1.0

        r = _interp1(s, tf_pos, tf_rgba, 0, n_tf)
        g = _interp1(s, tf_pos, tf_rgba, 1, n_tf)
        b = _interp1(s, tf_pos, tf_rgba, 2, n_tf)
        a = _interp1(s, tf_pos, tf_rgba, 3, n_tf)
        a_corr = 1.0 - pow(1.0 - a, exponent)

        w = (1.0 - acc_a) * a_corr
        acc_r = acc_r + w * r
        acc_g = acc_g + w * g
        acc_b = acc_b + w * b
        acc_a = acc_a + w
        if acc_a > 0.999:
            break
        k += 1

    out[ray, 0] = acc_r
    out[ray, 1] = acc_g
    out[ray, 2] = acc_b


def composite_rays(
    const float[:, :, ::1] values,
    const double[::1] bmin,
    const double[::1] spacing,
    double vmin,
    double vmax,
    const double[::1] tf_pos,
    const double[:, ::1] tf_rgba,
    const double[::1] eye,
    const double[:, ::1] dirs,
    double step,
    double ref_step,
    int num_threads=0,
):
    """Front-to-back compositing over black; returns (R, 3) float64."""
    cdef Py_ssize_t n_rays = dirs.shape[0]
    cdef Py_ssize_t n_tf = tf_pos.shape[0]
    cdef Py_ssize_t nx = values.shape[0]
    cdef Py_ssize_t ny = values.shape[1]
    cdef Py_ssize_t nz = values.shape[2]
    out_arr = np.zeros((n_rays, 3), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef double inv_range = 1.0 / (vmax - vmin) if vmax > vmin else 0.0
    cdef double exponent = step / ref_step
    cdef double bmax0 = bmin[0] + (nx - 1) * spacing[0]
    cdef double bmax1 = bmin[1] + (ny - 1) * spacing[1]
    cdef double bmax2 = bmin[2] + (nz - 1) * spacing[2]
    cdef Py_ssize_t ray

    if num_threads > 0:
        for ray in prange(n_rays, nogil=True, schedule="static",
                          num_threads=num_threads):
            _march_one(values, nx, ny, nz, bmin, spacing, bmax0, bmax1, bmax2,
                       vmin, inv_range, tf_pos, tf_rgba, n_tf, eye, dirs, ray,
                       step, exponent, out)
    else:
        for ray in prange(n_rays, nogil=True, schedule="static"):
            _march_one(values, nx, ny, nz, bmin, spacing, bmax0, bmax1, bmax2,
                       vmin, inv_range, tf_pos, tf_rgba, n_tf, eye, dirs, ray,
                       step, exponent, out)
    return out_arr
