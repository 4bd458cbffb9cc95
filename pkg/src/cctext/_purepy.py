"""Pure-Python versions of the hot kernels.

These mirror ``_speedups.pyx`` operation for operation so the two backends
produce identical results; they are the fallback when the extension is not
built and the reference the extension is tested against.
"""
from collections import deque

import numpy as np

TAU = 1e-12
# alphas this close to a bound count as bounded when estimating the bias
BOUND_EPS = 1e-8


def label_bfs(edges):
    """4-connected component labels in raster-scan discovery order.

    Returns ``(labels, count)`` with ``labels`` an int32 array, 0 = background.
    """
    mask = np.ascontiguousarray(edges, dtype=bool)
    h, w = mask.shape
    fg = mask.ravel().tolist()
    out = [0] * (h * w)
    count = 0
    queue = deque()
    for start in range(h * w):
        if not fg[start] or out[start]:
            continue
        count += 1
        out[start] = count
        queue.append(start)
        while queue:
            p = queue.popleft()
            r, c = divmod(p, w)
            if r > 0:
                q = p - w
                if fg[q] and not out[q]:
                    out[q] = count
                    queue.append(q)
            if r < h - 1:
                q = p + w
                if fg[q] and not out[q]:
                    out[q] = count
                    queue.append(q)
            if c > 0:
                q = p - 1
                if fg[q] and not out[q]:
                    out[q] = count
                    queue.append(q)
            if c < w - 1:
                q = p + 1
                if fg[q] and not out[q]:
                    out[q] = count
                    queue.append(q)
    return np.asarray(out, dtype=np.int32).reshape(h, w), count


def _select_working_set(alpha, grad, y, cbox, kdiag, krow_of):
    gmax = -np.inf
    i = -1
    for t in range(alpha.size):
        if y[t] > 0:
            if alpha[t] < cbox[t] and -grad[t] >= gmax:
                gmax = -grad[t]
                i = t
        elif alpha[t] > 0 and grad[t] >= gmax:
            gmax = grad[t]
            i = t
    if i < 0:
        return -1, -1, 0.0
    ki = krow_of(i)
    gmax2 = -np.inf
    j = -1
    best = np.inf
    for t in range(alpha.size):
        if y[t] > 0:
            if alpha[t] > 0:
                diff = gmax + grad[t]
                if grad[t] >= gmax2:
                    gmax2 = grad[t]
            else:
                continue
        else:
            if alpha[t] < cbox[t]:
                diff = gmax - grad[t]
                if -grad[t] >= gmax2:
                    gmax2 = -grad[t]
            else:
                continue
        if diff > 0:
            quad = kdiag[i] + kdiag[t] - 2.0 * ki[t]
            if quad <= 0:
                quad = TAU
            obj = -(diff * diff) / quad
            if obj <= best:
                best = obj
                j = t
    return i, j, gmax + gmax2


def smo_solve(K, y, cbox, tol=1e-3, max_iter=1_000_000):
    """Soft-margin SVM dual by two-coordinate (SMO) descent.

    Working-set selection uses second-order information. ``K`` is the full
    kernel matrix, ``y`` labels in {+1, -1}, ``cbox`` per-sample upper bounds.
    Returns ``(alpha, rho, iterations, gap)``; the decision function is
    ``sum(alpha * y * k(x_i, x)) - rho``.
    """
    K = np.ascontiguousarray(K, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    cbox = np.ascontiguousarray(cbox, dtype=np.float64)
    n = y.size
    alpha = np.zeros(n)
    grad = -np.ones(n)
    kdiag = np.diag(K).copy()
    gap = np.inf
    it = 0
    while it < max_iter:
        i, j, gap = _select_working_set(alpha, grad, y, cbox, kdiag, lambda r: K[r])
        if j < 0 or gap < tol:
            break
        it += 1
        ci, cj = cbox[i], cbox[j]
        old_i, old_j = alpha[i], alpha[j]
        if y[i] != y[j]:
            quad = kdiag[i] + kdiag[j] - 2.0 * K[i, j]
            if quad <= 0:
                quad = TAU
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
            quad = kdiag[i] + kdiag[j] - 2.0 * K[i, j]
            if quad <= 0:
                quad = TAU
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
        # Q = (y y^T) * K
        grad += y * (K[i] * (y[i] * di) + K[j] * (y[j] * dj))
    return alpha, _rho(alpha, grad, y, cbox), it, gap


def _rho(alpha, grad, y, cbox):
    ub, lb = np.inf, -np.inf
    nfree = 0
    total = 0.0
    for t in range(alpha.size):
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
