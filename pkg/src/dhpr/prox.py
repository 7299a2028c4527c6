"""Proximal operators and convex conjugates for the supported losses and regularizers.

Single-vector functions (``prox_l1``, ``prox_logistic``, ...) are the library
surface.  ``RegularizerBatch`` and ``LossBatch`` apply the same operators to all
agents at once, one agent per row, and are what the solvers call each iteration.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels

REG_KINDS = ("l1", "sparse_group")
LOSS_KINDS = ("least_squares", "logistic", "zero")
FEAS_TOL = 1e-9


class ConjugateUnavailable(NotImplementedError):
    """Raised when no closed-form conjugate is implemented (dual objective unavailable)."""


@dataclass(frozen=True, eq=False)
class RegularizerSpec:
    """theta1*||x||_1 (+ theta2 * sum_l w_l ||x_{G_l}||_2 for the sparse-group kind)."""

    kind: str
    theta1: float
    theta2: float = 0.0
    groups: tuple = ()
    group_weights: tuple = ()

    def __post_init__(self):
        if self.kind not in REG_KINDS:
            raise ValueError(f"unknown regularizer kind {self.kind!r}")
        if self.theta1 < 0 or self.theta2 < 0:
            raise ValueError("regularization weights must be nonnegative")
        if self.kind == "sparse_group":
            if len(self.groups) != len(self.group_weights):
                raise ValueError("one weight per group required")
            if any(w <= 0 for w in self.group_weights):
                raise ValueError("group weights must be positive")
            groups = tuple(np.asarray(g, dtype=np.int_) for g in self.groups)
            object.__setattr__(self, "groups", groups)
            flat = np.concatenate(groups) if groups else np.empty(0, dtype=np.int_)
            if len(np.unique(flat)) != len(flat):
                raise ValueError("groups overlap")

    @property
    def dim(self):
        if self.kind != "sparse_group":
            return None
        return int(sum(len(g) for g in self.groups))

    def layout(self):
        """(perm, ptr): column order placing groups contiguously, and group offsets."""
        perm = np.concatenate(self.groups)
        ptr = np.concatenate([[0], np.cumsum([len(g) for g in self.groups])])
        if np.array_equal(perm, np.arange(len(perm))):
            perm = None
        return perm, ptr.astype(np.int_)

    def value(self, x):
        x = np.asarray(x, dtype=np.float64)
        val = self.theta1 * np.abs(x).sum()
        if self.kind == "sparse_group":
            val += self.theta2 * sum(w * np.linalg.norm(x[g]) for g, w in zip(self.groups, self.group_weights))
        return float(val)


@dataclass(frozen=True, eq=False)
class LossSpec:
    """Loss f_i(y) on the agent's linear predictions y = A_i x."""

    kind: str
    b: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        if self.kind not in LOSS_KINDS:
            raise ValueError(f"unknown loss kind {self.kind!r}")
        b = np.asarray(self.b, dtype=np.float64)
        object.__setattr__(self, "b", b)
        if self.kind == "logistic":
            _check_labels(b)

    def value(self, y):
        y = np.asarray(y, dtype=np.float64)
        if self.kind == "least_squares":
            r = y - self.b
            return float(0.5 * r @ r)
        if self.kind == "logistic":
            return float(np.logaddexp(0.0, -self.b * y).sum())
        return 0.0

    def grad(self, y):
        y = np.asarray(y, dtype=np.float64)
        if self.kind == "least_squares":
            return y - self.b
        if self.kind == "logistic":
            return -self.b * _sigmoid(-self.b * y)
        return np.zeros_like(y)


def _check_labels(b):
    if not np.all((b == 1.0) | (b == -1.0)):
        raise ValueError("logistic labels must be +1 or -1")


def _sigmoid(u):
    return np.exp(-np.logaddexp(0.0, -u))


def prox_l1(xi, t, theta):
    """Soft-threshold: sign(xi) * max(|xi| - t*theta, 0)."""
    xi = np.asarray(xi, dtype=np.float64)
    out = kernels.soft_threshold(xi.reshape(1, -1), np.array([t * theta]))
    return out.reshape(xi.shape)


def prox_sparse_group(xi, t, spec: RegularizerSpec):
    """Prox of t*(theta1 ||.||_1 + theta2 sum_l w_l ||._{G_l}||): soft-threshold, then group shrink."""
    xi = np.asarray(xi, dtype=np.float64)
    y = prox_l1(xi, t, spec.theta1)
    if spec.theta2 == 0.0 or not spec.groups:
        return y
    perm, ptr = spec.layout()
    th = (t * spec.theta2 * np.asarray(spec.group_weights, dtype=np.float64)).reshape(1, -1)
    if perm is None:
        return kernels.group_shrink(y.reshape(1, -1), ptr, th).reshape(xi.shape)
    out = np.empty_like(y)
    out[perm] = kernels.group_shrink(y[perm].reshape(1, -1), ptr, th).ravel()
    return out


def prox_least_squares(xi, t, b):
    """Prox of t * 0.5||y - b||^2."""
    xi = np.asarray(xi, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if xi.shape != b.shape:
        raise ValueError(f"dimension mismatch: {xi.shape} vs {b.shape}")
    return (xi + t * b) / (1.0 + t)


def prox_logistic(xi, t, b):
    """Prox of t * sum_j log(1 + exp(-b_j y_j)), coordinatewise.

    Each coordinate solves ``y - xi_j = t b_j sigmoid(-b_j y)`` by Newton's method
    safeguarded by bisection on ``[xi_j - t, xi_j + t]``.
    """
    xi = np.asarray(xi, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if xi.shape != b.shape:
        raise ValueError(f"dimension mismatch: {xi.shape} vs {b.shape}")
    _check_labels(b)
    out = kernels.logistic_prox(xi.reshape(1, -1), np.array([float(t)]), b.reshape(1, -1))
    return out.reshape(xi.shape)


def prox_loss(spec: LossSpec, xi, t):
    if spec.kind == "least_squares":
        return prox_least_squares(xi, t, spec.b)
    if spec.kind == "logistic":
        return prox_logistic(xi, t, spec.b)
    return np.array(xi, dtype=np.float64, copy=True)


def prox_reg(spec: RegularizerSpec, xi, t):
    if spec.kind == "l1":
        return prox_l1(xi, t, spec.theta1)
    return prox_sparse_group(xi, t, spec)


def conjugate_value(spec, point) -> float:
    """Fenchel conjugate value; ``inf`` outside the domain.

    Only the least-squares loss and the l1 regularizer are supported.
    """
    point = np.asarray(point, dtype=np.float64)
    if isinstance(spec, LossSpec) and spec.kind == "least_squares":
        return float(0.5 * point @ point + point @ spec.b)
    if isinstance(spec, RegularizerSpec) and spec.kind == "l1":
        if point.size == 0 or np.abs(point).max() <= spec.theta1 * (1.0 + FEAS_TOL):
            return 0.0
        return float("inf")
    raise ConjugateUnavailable(f"dual objective unavailable for {spec.kind!r}")


class RegularizerBatch:
    """The agents' regularizers applied row-wise to an (N, p) array."""

    def __init__(self, specs):
        specs = list(specs)
        kinds = {s.kind for s in specs}
        if len(kinds) != 1:
            raise ValueError("all agents must share one regularizer kind")
        self.kind = kinds.pop()
        self.specs = specs
        self.theta1 = np.array([s.theta1 for s in specs])
        self.theta2 = np.array([s.theta2 for s in specs])
        self.perm = None
        self.ptr = None
        self.group_weights = None
        if self.kind == "sparse_group":
            ref = specs[0]
            for s in specs[1:]:
                same = len(s.groups) == len(ref.groups) and all(
                    np.array_equal(g, h) for g, h in zip(s.groups, ref.groups)
                )
                if not same or tuple(s.group_weights) != tuple(ref.group_weights):
                    raise ValueError("agents must share the group partition")
            self.perm, self.ptr = ref.layout()
            self.group_weights = np.asarray(ref.group_weights, dtype=np.float64)

    def _rows(self, t):
        return np.broadcast_to(np.asarray(t, dtype=np.float64), self.theta1.shape)

    def prox(self, X, t):
        """Row i gets prox_{t_i r_i}; ``t`` is a scalar or length-N array."""
        t = self._rows(t)
        Y = kernels.soft_threshold(X, t * self.theta1)
        if self.kind == "l1" or not np.any(self.theta2):
            return Y
        th = (t * self.theta2)[:, None] * self.group_weights[None, :]
        if self.perm is None:
            return kernels.group_shrink(Y, self.ptr, th)
        out = np.empty_like(Y)
        out[:, self.perm] = kernels.group_shrink(np.ascontiguousarray(Y[:, self.perm]), self.ptr, th)
        return out

    def combined(self) -> RegularizerSpec:
        """sum_i r_i as a single regularizer (groups coincide across agents)."""
        ref = self.specs[0]
        return RegularizerSpec(
            self.kind,
            float(self.theta1.sum()),
            float(self.theta2.sum()),
            ref.groups,
            ref.group_weights,
        )

    def value(self, X):
        return float(sum(s.value(x) for s, x in zip(self.specs, X)))

    def conjugate(self, V):
        return float(sum(conjugate_value(s, v) for s, v in zip(self.specs, V)))


class LossBatch:
    """The agents' losses on an (N, m_max) array with zero-padded rows masked out."""

    def __init__(self, specs, sizes, m_max=None):
        specs = list(specs)
        kinds = {s.kind for s in specs}
        if len(kinds) != 1:
            raise ValueError("all agents must share one loss kind")
        self.kind = kinds.pop()
        self.specs = specs
        self.sizes = np.asarray(sizes, dtype=np.int_)
        m_max = int(self.sizes.max()) if m_max is None else m_max
        n = len(specs)
        self.mask = np.zeros((n, m_max), dtype=bool)
        self.B = np.zeros((n, m_max))
        for i, (s, m) in enumerate(zip(specs, self.sizes)):
            self.mask[i, :m] = True
            if self.kind != "zero":
                self.B[i, :m] = s.b
        if self.kind == "logistic":
            self.B[~self.mask] = 1.0
        self.padded = not self.mask.all()

    def prox(self, Xi, t):
        """Row i gets prox_{t_i f_i}; padding entries pass through unchanged."""
        t = np.broadcast_to(np.asarray(t, dtype=np.float64), (len(self.specs),))
        if self.kind == "least_squares":
            Y = (Xi + t[:, None] * self.B) / (1.0 + t[:, None])
        elif self.kind == "logistic":
            Y = kernels.logistic_prox(Xi, t, self.B)
        else:
            return np.array(Xi, copy=True)
        if self.padded:
            Y = np.where(self.mask, Y, Xi)
        return Y

    def grad(self, Y):
        if self.kind == "least_squares":
            G = Y - self.B
        elif self.kind == "logistic":
            G = -self.B * _sigmoid(-self.B * Y)
        else:
            G = np.zeros_like(Y)
        if self.padded:
            G = np.where(self.mask, G, 0.0)
        return G

    def value(self, Y):
        return float(sum(s.value(y[:m]) for s, y, m in zip(self.specs, Y, self.sizes)))

    def conjugate(self, Z):
        return float(sum(conjugate_value(s, z[:m]) for s, z, m in zip(self.specs, Z, self.sizes)))
