# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled path loop. Mirrors ``_fallback.run_paths`` operation for operation."""
from cpython.pycapsule cimport PyCapsule_GetPointer
from libc.math cimport log1p
from numpy.random cimport bitgen_t


cdef inline Py_ssize_t _next_phase(const double[:, ::1] cum, const long[::1] last,
                                   Py_ssize_t i, double u) noexcept nogil:
    cdef Py_ssize_t j
    for j in range(cum.shape[1]):
        if u < cum[i, j]:
            return j
    return last[i]


cdef void _one_path(bitgen_t *rng, const double[:, ::1] cum, const long[::1] last,
                    const double[::1] qd, const double[::1] c, double nu, long L,
                    double a, Py_ssize_t phase0, double[::1] fo, long[::1] io) noexcept nogil:
    cdef double x = a, z = a, xn, zn, dt, rate, u
    cdef double xmin = a, xmax = a, zmin = a, zmax = a
    cdef Py_ssize_t ph = phase0
    cdef long stage = 0, first_switch = -1, ret_stage = -1, ret_phase = -1, events = 0
    cdef bint up0 = c[phase0] > 0
    while True:
        rate = qd[ph] + nu
        u = rng.next_double(rng.state)
        dt = -log1p(-u) / rate
        xn = x + c[ph] * dt
        zn = z + c[ph] * dt
        if zn < 0.0:
            zn = 0.0
        if ret_stage < 0:
            if (up0 and c[ph] < 0 and xn <= a) or (not up0 and c[ph] > 0 and xn >= a):
                ret_stage = stage
                ret_phase = ph
        if xn < xmin:
            xmin = xn
        if xn > xmax:
            xmax = xn
        if zn < zmin:
            zmin = zn
        if zn > zmax:
            zmax = zn
        x = xn
        z = zn
        events += 1
        u = rng.next_double(rng.state)
        if u * rate < nu:
            stage += 1
            if stage == L:
                break
        else:
            u = rng.next_double(rng.state)
            ph = _next_phase(cum, last, ph, u)
            if first_switch < 0:
                first_switch = stage
    fo[0] = x
    fo[1] = z
    fo[2] = xmin
    fo[3] = xmax
    fo[4] = zmin
    fo[5] = zmax
    io[0] = ph
    io[1] = first_switch if first_switch >= 0 else L
    io[2] = ret_stage
    io[3] = ret_phase
    io[4] = events


def run_paths(bit_generator, reset, Py_ssize_t j0, Py_ssize_t j1, const double[:, ::1] cum,
              const long[::1] last, const double[::1] qd, const double[::1] c, double nu, long L, double a,
              Py_ssize_t phase0, double[:, ::1] fout, long[:, ::1] iout):
    cdef bitgen_t *rng = <bitgen_t *> PyCapsule_GetPointer(bit_generator.capsule, "BitGenerator")
    cdef Py_ssize_t j
    for j in range(j0, j1):
        reset(j)
        with nogil:
            _one_path(rng, cum, last, qd, c, nu, L, a, phase0, fout[j - j0], iout[j - j0])
