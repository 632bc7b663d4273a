"""Slow, obviously-correct reference implementations used only by the tests."""

import numpy as np


def naive_causal_conv(x, w, b, stride=1, dilation=1, groups=1):
    """Explicit summation: y[o, j] = b[o] + sum w[o, ci, k] * x[c, j*stride - k*dilation] (zero before 0)."""
    cin, n = x.shape
    cout, cin_g, ksize = w.shape
    cout_g = cout // groups
    n_out = -(-n // stride)
    y = np.zeros((cout, n_out))
    for o in range(cout):
        g = o // cout_g
        for j in range(n_out):
            s = float(b[o])
            for ci in range(cin_g):
                c = g * cin_g + ci
                for k in range(ksize):
                    t = j * stride - k * dilation
                    if 0 <= t < n:
                        s += float(w[o, ci, k]) * float(x[c, t])
            y[o, j] = s
    return y


def naive_transposed_conv_full(x, w, stride):
    """Full overlap-add (no bias): y[o, i*stride + k] += w[o, c, k] * x[c, i]."""
    cin, n = x.shape
    cout, _, ksize = w.shape
    y = np.zeros((cout, (n - 1) * stride + ksize))
    for o in range(cout):
        for c in range(cin):
            for i in range(n):
                for k in range(ksize):
                    y[o, i * stride + k] += float(w[o, c, k]) * float(x[c, i])
    return y


def naive_d_loss(real_logits, fake_logits):
    K = len(real_logits)
    total = 0.0
    for k in range(K):
        T = len(real_logits[k])
        s = 0.0
        for t in range(T):
            s += max(0.0, 1.0 - float(real_logits[k][t])) / T
        for t in range(len(fake_logits[k])):
            s += max(0.0, 1.0 + float(fake_logits[k][t])) / len(fake_logits[k])
        total += s / K
    return total


def naive_g_adv(fake_logits):
    K = len(fake_logits)
    total = 0.0
    for k in range(K):
        T = len(fake_logits[k])
        for t in range(T):
            total += max(0.0, 1.0 - float(fake_logits[k][t])) / (K * T)
    return total


def naive_feature_loss(real_feats, fake_feats):
    K = len(real_feats)
    L = len(real_feats[0])
    total = 0.0
    for k in range(K):
        for l in range(L):
            a, b = real_feats[k][l], fake_feats[k][l]
            C, T = a.shape
            s = 0.0
            for t in range(T):
                col = 0.0
                for c in range(C):
                    col += abs(float(a[c, t]) - float(b[c, t]))
                s += col / C
            total += s / T
    return total / (K * L)


def naive_dft_mag(frame):
    n = len(frame)
    out = np.zeros(n // 2 + 1)
    for k in range(n // 2 + 1):
        re = im = 0.0
        for t in range(n):
            ang = -2.0 * np.pi * k * t / n
            re += frame[t] * np.cos(ang)
            im += frame[t] * np.sin(ang)
        out[k] = np.hypot(re, im)
    return out


def naive_avg_pool(x):
    """Causal kernel-4 stride-2 mean with zero history."""
    n = len(x)
    out = []
    for j in range(-(-n // 2)):
        s = 0.0
        for k in range(4):
            t = 2 * j - k
            if 0 <= t < n:
                s += x[t]
        out.append(s / 4)
    return np.array(out)
