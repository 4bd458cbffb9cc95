# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: component labelling and the SMO dual solver.

Each function is an operation-for-operation port of its twin in
``_purepy.py``; results are bit-identical.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY

cnp.import_array()

cdef double TAU = 1e-12
# alphas this close to a bound count as bounded when estimating the bias
cdef double BOUND_EPS = 1e-8


def label_bfs(edges):
    cdef cnp.uint8_t[:, ::1] mask = np.ascontiguousarray(edges, dtype=bool).view(np.uint8)
    cdef Py_ssize_t h = mask.shape[0], w = mask.shape[1]
    cdef Py_ssize_t n = h * w
    labels_arr = np.zeros((h, w), dtype=np.int32)
    cdef cnp.int32_t[:, ::1] labels2 = labels_arr
    cdef cnp.int32_t* out = &labels2[0, 0] if n > 0 else NULL
    cdef const cnp.uint8_t* fg = &mask[0, 0] if n > 0 else NULL
    cdef Py_ssize_t[::1] queue = np.empty(max(n, 1), dtype=np.intp)
    cdef Py_ssize_t head, tail, p, q, r, c, start
    cdef cnp.int32_t count = 0
    for start in range(n):
        if not fg[start] or out[start]:
            continue
        count += 1
        out[start] = count
        head = 0
        tail = 0
        queue[tail] = start
        tail += 1
        while head < tail:
            p = queue[head]
            head += 1
            r = p // w
            c = p - r * w
            if r > 0:
                q = p - w
                if fg[q] and not out[q]:
                    out[q] = count
                    queue[tail] = q
                    tail += 1
            if r < h - 1:
                q = p + w
                if fg[q] and not out[q]:
                    out[q] = count
                    queue[tail] = q
                    tail += 1
            if c > 0:
                q = p - 1
                if fg[q] and not out[q]:
                    out[q] = count
                    queue[tail] = q
                    tail += 1
            if c < w - 1:
                q = p + 1
                if fg[q] and not out[q]:
                    out[q] = count
                    queue[tail] = q
                    tail += 1
    return labels_arr, int(count)


cdef double _rho(double[::1] alpha, double[::1] grad, double[::1] y, double[::1] cbox):
    cdef double ub = INFINITY, lb = -INFINITY, total = 0.0, yg
    cdef Py_ssize_t nfree = 0, t
    for t in range(alpha.shape[0]):
        yg = y[t] * grad[t]
        if alpha[t] >= cbox[t] - BOUND_EPS:
            if y[t] < 0:
                ub = min(ub, yg)
            else:
                lb = max(lb, yg)
        elif alpha[t] <= BOUND_EPS:
            if y[t] > 0:
                ub = min(ub, yg)
            else:
                lb = max(lb, yg)
        else:
            nfree += 1
            total += yg
    if nfree:
        return total / nfree
    return (ub + lb) / 2.0


def smo_solve(K, y, cbox, double tol=1e-3, long max_iter=1000000):
    cdef double[:, ::1] k = np.ascontiguousarray(K, dtype=np.float64)
    cdef double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef double[::1] cb = np.ascontiguousarray(cbox, dtype=np.float64)
    cdef Py_ssize_t n = yv.shape[0]
    alpha_arr = np.zeros(n)
    grad_arr = -np.ones(n)
    cdef double[::1] alpha = alpha_arr
    cdef double[::1] grad = grad_arr
    cdef Py_ssize_t i, j, t
    cdef long it = 0
    cdef double gmax, gmax2, best, diff, quad, obj, gap = INFINITY
    cdef double ci, cj, old_i, old_j, delta, total, di, dj, si, sj
    while it < max_iter:
        gmax = -INFINITY
        i = -1
        for t in range(n):
            if yv[t] > 0:
                if alpha[t] < cb[t] and -grad[t] >= gmax:
                    gmax = -grad[t]
                    i = t
            elif alpha[t] > 0 and grad[t] >= gmax:
                gmax = grad[t]
                i = t
        if i < 0:
            gap = 0.0
            break
        gmax2 = -INFINITY
        j = -1
        best = INFINITY
        for t in range(n):
            if yv[t] > 0:
                if alpha[t] > 0:
                    diff = gmax + grad[t]
                    if grad[t] >= gmax2:
                        gmax2 = grad[t]
                else:
                    continue
            else:
                if alpha[t] < cb[t]:
                    diff = gmax - grad[t]
                    if -grad[t] >= gmax2:
                        gmax2 = -grad[t]
                else:
                    continue
            if diff > 0:
                quad = k[i, i] + k[t, t] - 2.0 * k[i, t]
                if quad <= 0:
                    quad = TAU
                obj = -(diff * diff) / quad
                if obj <= best:
                    best = obj
                    j = t
        gap = gmax + gmax2
        if j < 0 or gap < tol:
            break
        it += 1
        ci = cb[i]
        cj = cb[j]
        old_i = alpha[i]
        old_j = alpha[j]
        quad = k[i, i] + k[j, j] - 2.0 * k[i, j]
        if quad <= 0:
            quad = TAU
        if yv[i] != yv[j]:
            delta = (-grad[i] - grad[j]) / quad
            diff = alpha[i] - alpha[j]
            alpha[i] += delta
            alpha[j] += delta
            if diff > 0:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = diff
            elif alpha[i] < 0:
                alpha[i] = 0.0
                alpha[j] = -diff
            if diff > ci - cj:
                if alpha[i] > ci:
                    alpha[i] = ci
                    alpha[j] = ci - diff
            elif alpha[j] > cj:
                alpha[j] = cj
                alpha[i] = cj + diff
        else:
            delta = (grad[i] - grad[j]) / quad
            total = alpha[i] + alpha[j]
            alpha[i] -= delta
            alpha[j] += delta
            if total > ci:
                if alpha[i] > ci:
                    alpha[i] = ci
                    alpha[j] = total - ci
            elif alpha[j] < 0:
                alpha[j] = 0.0
                alpha[i] = total
            if total > cj:
                if alpha[j] > cj:
                    alpha[j] = cj
                    alpha[i] = total - cj
            elif alpha[i] < 0:
                alpha[i] = 0.0
                alpha[j] = total
        di = alpha[i] - old_i
        dj = alpha[j] - old_j
        si = yv[i] * di
        sj = yv[j] * dj
        for t in range(n):
            grad[t] += yv[t] * (k[i, t] * si + k[j, t] * sj)
    return alpha_arr, _rho(alpha, grad, yv, cb), it, gap
