"""Pure numpy implementations of the per-iteration kernels.

These mirror ``_kernels.pyx`` one to one and are used whenever the compiled
extension is unavailable (or ``DHPR_PURE_PYTHON=1`` is set).  All kernels take
2-D float64 arrays whose rows index agents.
"""

import numpy as np


def soft_threshold(X, thresh):
    X = np.asarray(X, dtype=np.float64)
    t = np.asarray(thresh, dtype=np.float64).reshape(-1, 1)
    out = np.zeros_like(X)
    pos = X > t
    neg = X < -t
    tb = np.broadcast_to(t, X.shape)
    out[pos] = X[pos] - tb[pos]
    out[neg] = X[neg] + tb[neg]
    return out


def group_shrink(Y, group_ptr, thresh):
    """Block soft-threshold of contiguous column groups, row by row.

    ``thresh`` has shape (n_rows, n_groups).
    """
    Y = np.array(Y, dtype=np.float64, copy=True)
    thresh = np.asarray(thresh, dtype=np.float64)
    for l in range(len(group_ptr) - 1):
        a, b = group_ptr[l], group_ptr[l + 1]
        blk = Y[:, a:b]
        nrm = np.sqrt(np.sum(blk * blk, axis=1))
        th = thresh[:, l]
        scale = np.zeros_like(nrm)
        keep = nrm > th
        scale[keep] = 1.0 - th[keep] / nrm[keep]
        Y[:, a:b] = blk * scale[:, None]
    return Y


def _sigmoid(u):
    out = np.empty_like(u)
    pos = u >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-u[pos]))
    e = np.exp(u[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def logistic_prox(xi, t, b, tol=1e-12, max_iter=200):
    """Elementwise prox of t*log(1+exp(-b*y)) via Newton with bisection safeguard."""
    xi = np.asarray(xi, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    t = np.broadcast_to(np.asarray(t, dtype=np.float64).reshape(-1, 1), xi.shape)
    lo = xi - t
    hi = xi + t
    y = xi.copy()
    dx = hi - lo
    done = np.zeros(xi.shape, dtype=bool)
    for _ in range(max_iter):
        s = _sigmoid(-b * y)
        g = y - xi - t * b * s
        done |= np.abs(g) <= tol
        if np.all(done):
            break
        gp = 1.0 + t * s * (1.0 - s)
        hi = np.where(done | (g <= 0), hi, y)
        lo = np.where(done | (g > 0), lo, y)
        step = y - g / gp
        dxold = dx
        # bisect when Newton leaves the bracket or fails to halve the step
        bis = ~((step > lo) & (step < hi)) | (np.abs(2.0 * g) > np.abs(dxold * gp))
        half = 0.5 * (hi - lo)
        dx = np.where(done, dx, np.where(bis, half, g / gp))
        y = np.where(done, y, np.where(bis, lo + half, step))
    return y


def neighbor_mix(indptr, indices, weights, X):
    """out[i] = sum_j w_ij X[j] over the stored neighbours of i, ascending j."""
    X = np.asarray(X, dtype=np.float64)
    out = np.zeros_like(X)
    for i in range(X.shape[0]):
        acc = out[i]
        for q in range(indptr[i], indptr[i + 1]):
            acc += weights[q] * X[indices[q]]
    return out
