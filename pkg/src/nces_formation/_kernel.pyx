# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled batched swarm step; same contract as ``_kernel_py.step_batch``."""

from libc.math cimport cos, sin, tanh, exp, fabs, fmod, M_PI, INFINITY

BACKEND = "cython"

cdef double TWO_PI = 2.0 * M_PI


cdef inline double _wrap(double a) nogil:
    cdef double w = fmod(a + M_PI, TWO_PI)
    if w <= 0.0:
        w += TWO_PI
    return w - M_PI


def step_batch(double[:, :, ::1] state, const signed char[::1] alive, const double[:, :, ::1] offsets,
               const long[:, :, ::1] nbr, const signed char[:, ::1] zeta, const double[::1] target,
               const double[::1] tcmd, const double[:, :, :, ::1] w1, const double[:, :, :, ::1] w2,
               const double[::1] ts, const signed char[::1] active, tuple limits, const double[::1] kdiag,
               double delta_s, int agg, double[:, :, ::1] err_out, double[:, :, ::1] cmd_out,
               double[:, ::1] j_out, signed char[::1] st_out):
    cdef double tau = limits[0], v_min = limits[1], v_max = limits[2]
    cdef double a_vmax = limits[3], a_lmax = limits[4]
    cdef Py_ssize_t m = state.shape[0], n = state.shape[1], kmax = nbr.shape[2]
    cdef Py_ssize_t hidden = w1.shape[2], n_in = w1.shape[3]
    cdef Py_ssize_t b, i, k, j, h, q
    cdef double ex, ey, et, c, s, erx, ery, ert, acc, zi, lx, th, cth, sth
    cdef double r0, r1, r2, red, d, nv, vi
    cdef double z[8]
    cdef double hid[64]
    if hidden > 64 or n_in > 8:
        raise ValueError("kernel supports at most 8 inputs and 64 hidden units")

    with nogil:
        for b in range(m):
            st_out[b] = 0
            for i in range(n):
                err_out[b, i, 0] = 0.0
                err_out[b, i, 1] = 0.0
                err_out[b, i, 2] = 0.0
                cmd_out[b, i, 0] = 0.0
                cmd_out[b, i, 1] = 0.0
                j_out[b, i] = 0.0
            if not active[b]:
                continue
            for i in range(n):
                if not alive[i]:
                    continue
                ex = 0.0
                ey = 0.0
                et = 0.0
                for k in range(kmax):
                    j = nbr[b, i, k]
                    if j < 0:
                        continue
                    ex += (offsets[b, i, 0] - offsets[b, j, 0]) - (state[b, i, 0] - state[b, j, 0])
                    ey += (offsets[b, i, 1] - offsets[b, j, 1]) - (state[b, i, 1] - state[b, j, 1])
                    et += _wrap(state[b, j, 2] - state[b, i, 2])
                if zeta[b, i]:
                    ex += target[0] + offsets[b, i, 0] - state[b, i, 0]
                    ey += target[1] + offsets[b, i, 1] - state[b, i, 1]
                    et += _wrap(target[2] - state[b, i, 2])
                c = cos(state[b, i, 2])
                s = sin(state[b, i, 2])
                erx = c * ex + s * ey
                ery = -s * ex + c * ey
                ert = _wrap(et)
                err_out[b, i, 0] = erx
                err_out[b, i, 1] = ery
                err_out[b, i, 2] = ert

                z[0] = state[b, i, 2]
                z[1] = state[b, i, 3]
                z[2] = erx
                z[3] = ery
                z[4] = ert
                if n_in == 6:
                    z[5] = ts[b]
                for h in range(hidden):
                    acc = 0.0
                    for q in range(n_in):
                        acc += w1[b, i, h, q] * z[q]
                    hid[h] = 1.0 / (1.0 + exp(-acc))
                acc = 0.0
                for h in range(hidden):
                    acc += w2[b, i, 0, h] * hid[h]
                cmd_out[b, i, 0] = a_vmax * tanh(acc)
                acc = 0.0
                for h in range(hidden):
                    acc += w2[b, i, 1, h] * hid[h]
                cmd_out[b, i, 1] = a_lmax * tanh(acc)
                j_out[b, i] = exp(-(kdiag[0] * erx * erx + kdiag[1] * ery * ery + kdiag[2] * ert * ert))

            if agg >= 0:
                red = INFINITY if agg == 0 else -INFINITY
                for i in range(n):
                    if not alive[i]:
                        continue
                    vi = state[b, i, 3]
                    zi = zeta[b, i]
                    lx = zi
                    r0 = 0.0
                    r1 = 0.0
                    r2 = 0.0
                    for k in range(kmax):
                        j = nbr[b, i, k]
                        if j < 0:
                            continue
                        lx += 1.0
                        th = state[b, j, 2] - state[b, i, 2]
                        cth = cos(th)
                        sth = sin(th)
                        r0 += tau * cth * cmd_out[b, j, 0] + cth * state[b, j, 3]
                        r1 += tau * sth * cmd_out[b, j, 0] + sth * state[b, j, 3]
                        r2 += cmd_out[b, j, 1] / state[b, j, 3]
                    erx = err_out[b, i, 0]
                    ery = err_out[b, i, 1]
                    ert = err_out[b, i, 2]
                    r0 += -tau * lx * cmd_out[b, i, 0] + ery / vi * cmd_out[b, i, 1] - lx * vi
                    r1 += -erx / vi * cmd_out[b, i, 1]
                    r2 += -lx / vi * cmd_out[b, i, 1]
                    if zi:
                        th = target[2] - state[b, i, 2]
                        r0 += cos(th) * tcmd[0]
                        r1 += sin(th) * tcmd[0]
                        r2 += tcmd[1]
                    for q in range(3):
                        if q == 0:
                            d = fabs(erx + r0 * tau) - fabs(erx)
                        elif q == 1:
                            d = fabs(ery + r1 * tau) - fabs(ery)
                        else:
                            d = fabs(ert + r2 * tau) - fabs(ert)
                        if agg == 0:
                            if d < red:
                                red = d
                        elif d > red:
                            red = d
                if red > delta_s:
                    st_out[b] = 1
                    continue

            for i in range(n):
                if not alive[i]:
                    continue
                vi = state[b, i, 3]
                c = state[b, i, 2]
                state[b, i, 0] += vi * cos(c) * tau
                state[b, i, 1] += vi * sin(c) * tau
                state[b, i, 2] = _wrap(c + cmd_out[b, i, 1] / vi * tau)
                nv = vi + cmd_out[b, i, 0] * tau
                if nv < v_min:
                    nv = v_min
                elif nv > v_max:
                    nv = v_max
                state[b, i, 3] = nv
