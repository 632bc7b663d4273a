"""Pure-numpy kernels with the same contract as the compiled ``_kernels``."""

import numpy as np


def conv1d(xp, w, wt, b, stride, dilation, groups, n_out):
    cout, cin_g, ksize = w.shape
    hist = (ksize - 1) * dilation
    idx = hist + stride * np.arange(n_out)[None, :] - dilation * np.arange(ksize)[:, None]
    cols = xp[:, idx].reshape(groups, cin_g * ksize, n_out)
    wg = w.reshape(groups, cout // groups, cin_g * ksize)
    out = np.matmul(wg, cols).reshape(cout, n_out)
    out += b[:, None]
    return out


def conv_transpose1d(x, wt, b, carry, stride):
    cout = wt.shape[2]
    n_in = x.shape[1]
    # first half of the kernel lands on the current step, second half spills into the next
    head = np.einsum("cro,ci->oir", wt[:, :stride], x).reshape(cout, n_in * stride)
    tail = np.einsum("cro,ci->oir", wt[:, stride:], x).reshape(cout, n_in * stride)
    out = head
    out[:, :stride] += carry
    out[:, stride:] += tail[:, :-stride]
    out += b[:, None]
    return out, np.ascontiguousarray(tail[:, -stride:])

