# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled convolution kernels.

Every output element is the sum ``0 + t_1 + t_2 + ... + bias`` with terms in
(input channel, tap) order, whatever the loop nest, so offline and chunked
execution agree bit for bit.
"""
import numpy as np
from libc.string cimport memset

ctypedef fused real:
    float
    double

# below this many output steps, vectorize across output channels instead of time
cdef Py_ssize_t SHORT_OUTPUT = 32


def conv1d(const real[:, ::1] xp, const real[:, :, ::1] w, const real[:, :, ::1] wt,
           const real[::1] b, Py_ssize_t stride, Py_ssize_t dilation,
           Py_ssize_t groups, Py_ssize_t n_out):
    """``wt`` is ``w`` transposed to ``[in/groups, kernel, out]``."""
    cdef Py_ssize_t cout = w.shape[0]
    cdef Py_ssize_t cin_g = w.shape[1]
    cdef Py_ssize_t ksize = w.shape[2]
    cdef Py_ssize_t cout_g = cout // groups
    cdef Py_ssize_t hist = (ksize - 1) * dilation
    cdef Py_ssize_t g, oc, o0, c, ci, k, j
    cdef real wv, xv
    cdef real* orow
    cdef real* acc
    cdef const real* xrow
    cdef const real* wcol
    if real is float:
        dtype = np.float32
    else:
        dtype = np.float64
    out = np.zeros((cout, n_out), dtype=dtype)
    acc_arr = np.empty(cout, dtype=dtype)
    cdef real[:, ::1] o = out
    cdef real[::1] accv = acc_arr
    if n_out == 0:
        return out
    with nogil:
        if n_out < SHORT_OUTPUT:
            acc = &accv[0]
            for j in range(n_out):
                for g in range(groups):
                    o0 = g * cout_g
                    memset(&acc[o0], 0, cout_g * sizeof(real))
                    for ci in range(cin_g):
                        xrow = &xp[g * cin_g + ci, hist + j * stride]
                        for k in range(ksize):
                            xv = xrow[-k * dilation]
                            wcol = &wt[ci, k, o0]
                            for oc in range(cout_g):
                                acc[o0 + oc] += wcol[oc] * xv
                for oc in range(cout):
                    o[oc, j] = acc[oc] + b[oc]
        else:
            for oc in range(cout):
                orow = &o[oc, 0]
                for ci in range(cin_g):
                    c = (oc // cout_g) * cin_g + ci
                    for k in range(ksize):
                        wv = w[oc, ci, k]
                        xrow = &xp[c, hist - k * dilation]
                        if stride == 1:
                            for j in range(n_out):
                                orow[j] += wv * xrow[j]
                        else:
                            for j in range(n_out):
                                orow[j] += wv * xrow[j * stride]
                for j in range(n_out):
                    orow[j] += b[oc]
    return out


def conv_transpose1d(const real[:, ::1] x, const real[:, :, ::1] wt,
                     const real[::1] b, const real[:, ::1] carry,
                     Py_ssize_t stride):
    """``wt`` is the kernel transposed to ``[in, 2*stride, out]``; returns ``(out, carry)``."""
    cdef Py_ssize_t cin = x.shape[0]
    cdef Py_ssize_t n_in = x.shape[1]
    cdef Py_ssize_t cout = wt.shape[2]
    cdef Py_ssize_t n = n_in * stride
    cdef Py_ssize_t oc, c, r, i
    cdef real xv
    cdef const real* wh
    cdef const real* wtl
    if real is float:
        dtype = np.float32
    else:
        dtype = np.float64
    out = np.empty((cout, n), dtype=dtype)
    new_carry = np.array(carry, dtype=dtype, copy=True)
    head_arr = np.empty(cout, dtype=dtype)
    tail_arr = np.empty(cout, dtype=dtype)
    cdef real[:, ::1] o = out
    cdef real[:, ::1] prev = new_carry
    cdef real[::1] h = head_arr
    cdef real[::1] t = tail_arr
    with nogil:
        for i in range(n_in):
            for r in range(stride):
                memset(&h[0], 0, cout * sizeof(real))
                memset(&t[0], 0, cout * sizeof(real))
                for c in range(cin):
                    xv = x[c, i]
                    wh = &wt[c, r, 0]
                    wtl = &wt[c, r + stride, 0]
                    for oc in range(cout):
                        h[oc] += wh[oc] * xv
                        t[oc] += wtl[oc] * xv
                for oc in range(cout):
                    o[oc, i * stride + r] = (h[oc] + prev[oc, r]) + b[oc]
                    prev[oc, r] = t[oc]
    return out, new_carry

