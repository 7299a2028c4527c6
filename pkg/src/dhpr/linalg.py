"""Small dense linear-algebra helpers shared by the problem and metrics modules."""

import numpy as np

LAMBDA_MARGIN = 1e-6


def power_iteration(apply, dim, tol=1e-10, max_iter=5000, seed=0):
    """Largest eigenvalue of a symmetric PSD operator given as a matvec.

    Stops when the Rayleigh quotient changes by at most ``tol`` relative.
    """
    rng = np.random.Generator(np.random.Philox(seed))
    v = rng.standard_normal(dim)
    v /= np.linalg.norm(v)
    rq = 0.0
    for _ in range(max_iter):
        w = apply(v)
        new = float(v @ w)
        nrm = np.linalg.norm(w)
        if nrm == 0.0:
            return 0.0
        v = w / nrm
        if abs(new - rq) <= tol * abs(new):
            return new
        rq = new
    return rq


def lambda_max_AAT(A, margin=LAMBDA_MARGIN):
    """Upper estimate of lambda_max(A A^T), inflated by a relative ``margin``.

    Power iteration runs on whichever of A^T A and A A^T is smaller.
    """
    A = np.asarray(A, dtype=np.float64)
    if A.size == 0 or not np.any(A):
        raise ValueError("lambda_max of a zero matrix is degenerate")
    m, p = A.shape
    if m <= p:
        lam = power_iteration(lambda v: A @ (A.T @ v), m)
    else:
        lam = power_iteration(lambda v: A.T @ (A @ v), p)
    return lam * (1.0 + margin)
