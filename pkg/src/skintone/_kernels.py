"""Compiled inner loops for the matting-Laplacian product.

Arrays are planes-first: ``(k, H, W)``. Box sums use running sums down the
rows, then along each row, with windows clipped at the border.
"""
import numpy as np
from numba import njit


@njit(cache=True)
def box_planes(a, r):
    k, n, m = a.shape
    out = np.empty_like(a)
    col = np.empty(m)
    for p in range(k):
        col[:] = 0.0
        for i in range(min(r, n)):
            for j in range(m):
                col[j] += a[p, i, j]
        for i in range(n):
            if i + r < n:
                for j in range(m):
                    col[j] += a[p, i + r, j]
            if i - r - 1 >= 0:
                for j in range(m):
                    col[j] -= a[p, i - r - 1, j]
            acc = 0.0
            for j in range(min(r, m)):
                acc += col[j]
            for j in range(m):
                if j + r < m:
                    acc += col[j + r]
                if j - r - 1 >= 0:
                    acc -= col[j - r - 1]
                out[p, i, j] = acc
    return out


@njit(cache=True)
def laplacian_planes(x, y, mean, inv_delta, count, r):
    """L x for x of shape (C, H, W); guide statistics planes-first."""
    c, n, m = x.shape
    first = np.empty((4 * c, n, m))
    for ch in range(c):
        for i in range(n):
            for j in range(m):
                xv = x[ch, i, j]
                first[ch, i, j] = xv
                for d in range(3):
                    first[c + 3 * ch + d, i, j] = xv * y[d, i, j]
    s1 = box_planes(first, r)

    coef = np.empty((4 * c, n, m))
    cov = np.empty(3)
    for i in range(n):
        for j in range(m):
            w = count[i, j]
            for ch in range(c):
                xm = s1[ch, i, j] / w
                for d in range(3):
                    cov[d] = s1[c + 3 * ch + d, i, j] / w - xm * mean[d, i, j]
                bval = xm
                for e in range(3):
                    a = (cov[0] * inv_delta[0, e, i, j] + cov[1] * inv_delta[1, e, i, j]
                         + cov[2] * inv_delta[2, e, i, j])
                    coef[3 * ch + e, i, j] = a
                    bval -= a * mean[e, i, j]
                coef[3 * c + ch, i, j] = bval
    s2 = box_planes(coef, r)

    out = np.empty_like(x)
    for ch in range(c):
        for i in range(n):
            for j in range(m):
                out[ch, i, j] = (count[i, j] * x[ch, i, j]
                                 - s2[3 * ch, i, j] * y[0, i, j]
                                 - s2[3 * ch + 1, i, j] * y[1, i, j]
                                 - s2[3 * ch + 2, i, j] * y[2, i, j]
                                 - s2[3 * c + ch, i, j])
    return out
