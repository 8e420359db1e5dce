"""
EM / soft k-means clustering

Centers are K x D matrices, data X is N x D, assignments are K x N with one
column per data point. Similarity is the raw dot product C X^T.
"""

from dataclasses import dataclass, field
from datetime import datetime

import numpy as np

from clustseg.config import ASSIGNMENT_MODES, CENTER_MODES, T_MAX, TOL
from clustseg.exceptions import (
    ConfigurationError,
    ContractViolationError,
    EmptyClusterError,
    InsufficientPointsError,
    RangeError,
    ShapeError,
)
from clustseg.linalg import as_matrix, matmul, softmax_axis
from clustseg.logs import elapsed, get_logger

log = get_logger("EM")


@dataclass
class ClusterResult:
    centers: np.ndarray
    soft: np.ndarray
    hard: np.ndarray
    objective_trace: list = field(default_factory=list)
    iterations_run: int = 0
    converged: bool = False

    @property
    def labels(self):
        return np.argmax(self.hard, axis=0)


def _check_mode(mode):
    if mode not in CENTER_MODES:
        raise ConfigurationError(f"mode must be one of {CENTER_MODES}, got {mode!r}")


def forgy_init(x, k, seed):
    """K distinct data rows drawn without replacement from a seeded RNG"""
    x = as_matrix(x, "points")
    n = x.shape[0]
    if k > n:
        raise InsufficientPointsError(f"cannot pick {k} centers from {n} points")
    if k < 1:
        raise RangeError(f"k must be positive, got {k}")
    rng = np.random.default_rng(seed)
    idx = rng.choice(n, size=k, replace=False)
    return x[idx].copy()


def e_step(c, x):
    """Soft assignment: softmax over the K axis of C X^T"""
    c = as_matrix(c, "centers")
    x = as_matrix(x, "points")
    if c.shape[1] != x.shape[1]:
        raise ShapeError("center/point dimension mismatch", c.shape, x.shape)
    return softmax_axis(matmul(c, x.T), "cols")


def m_step(m, x, mode="paper_sum"):
    """
    Recompute centers from assignments

    paper_sum returns M X as written; weighted_mean divides row k by the
    assignment mass of cluster k.
    """
    _check_mode(mode)
    m = as_matrix(m, "assignments")
    x = as_matrix(x, "points")
    if m.shape[1] != x.shape[0]:
        raise ShapeError("assignment/point count mismatch", m.shape, x.shape)
    sums = matmul(m, x)
    if mode == "paper_sum":
        return sums
    masses = m.sum(axis=1)
    empty = np.flatnonzero(masses == 0)
    if empty.size:
        raise EmptyClusterError(int(empty[0]))
    return sums / masses[:, None]


def hard_assign(m):
    """Column-wise argmax as one-hot; ties go to the lowest cluster index"""
    m = as_matrix(m, "assignments")
    out = np.zeros_like(m)
    if m.shape[1]:
        out[np.argmax(m, axis=0), np.arange(m.shape[1])] = 1.0
    return out


def is_hard(m):
    m = np.asarray(m)
    return bool(np.all((m == 0.0) | (m == 1.0)) and np.all(m.sum(axis=0) == 1.0))


def objective(m_hard, c, x):
    """Tr(M^T C X^T) for a hard assignment"""
    if not is_hard(m_hard):
        raise ContractViolationError("objective needs a one-hot (hard) assignment")
    c = as_matrix(c, "centers")
    x = as_matrix(x, "points")
    scores = matmul(c, x.T)
    if scores.shape != np.shape(m_hard):
        raise ShapeError("assignment does not match centers x points", np.shape(m_hard), scores.shape)
    return float(np.sum(m_hard * scores))


def nearest_assign(c, x):
    """One-hot nearest-center assignment (argmax of c.x - |c|^2 / 2)"""
    c = as_matrix(c, "centers")
    scores = matmul(c, as_matrix(x, "points").T) - 0.5 * np.sum(c * c, axis=1)[:, None]
    return hard_assign(scores)


def kmeans_objective(m_hard, c, x):
    """
    Trace objective with the center-norm term

    Tr(M^T C X^T) - 1/2 sum_k mass_k |c_k|^2, which equals
    -1/2 * (sum of squared distances) + 1/2 * sum |x|^2, so nearest-center
    assignment and mean updates both maximize it.
    """
    c = as_matrix(c, "centers")
    masses = np.asarray(m_hard).sum(axis=1)
    return objective(m_hard, c, x) - 0.5 * float(np.sum(masses * np.sum(c * c, axis=1)))


def _update_centers(resp, x, mode, soft, previous):
    if mode == "paper_sum":
        return m_step(resp, x, mode)

    masses = resp.sum(axis=1)
    empty = np.flatnonzero(masses == 0)
    if not empty.size:
        return m_step(resp, x, mode)

    centers = previous.copy()
    filled = np.flatnonzero(masses > 0)
    if filled.size:
        centers[filled] = m_step(resp[filled], x, mode)

    # least-well-explained points first
    if is_hard(resp):
        assigned = centers[np.argmax(resp, axis=0)]
        badness = np.sum((x - assigned) ** 2, axis=1)
    else:
        badness = -soft.max(axis=0)
    order = np.argsort(-badness, kind="stable")
    for cluster, point in zip(empty, order):
        log.debug(f"re-seeding empty cluster {cluster} at point {point}")
        centers[cluster] = x[point]
    return centers


def em_cluster(x, k, init, t_max=T_MAX, tol=TOL, mode="weighted_mean", assignment="soft"):
    """
    Alternate E and M steps up to t_max times

    Args:
        x: N x D points
        k: Number of clusters (must match init)
        init: K x D initial centers
        t_max: Iteration cap (>= 1)
        tol: Stop once the largest center coordinate moves less than this
        mode: 'paper_sum' or 'weighted_mean' center update
        assignment: 'soft' (softmax E-step) or 'hard' (Lloyd: nearest center)

    Returns:
        ClusterResult with one objective value per iteration
    """
    _check_mode(mode)
    if assignment not in ASSIGNMENT_MODES:
        raise ConfigurationError(f"assignment must be one of {ASSIGNMENT_MODES}, got {assignment!r}")
    if t_max < 1:
        raise RangeError(f"t_max must be >= 1, got {t_max}")
    x = as_matrix(x, "points")
    c = as_matrix(init, "initial centers").copy()
    if c.shape != (k, x.shape[1]):
        raise ShapeError(f"initial centers must be {k} x {x.shape[1]}", c.shape)

    start = datetime.now()
    trace = []
    converged = False
    iterations = 0
    for iterations in range(1, t_max + 1):
        soft = e_step(c, x)
        resp = nearest_assign(c, x) if assignment == "hard" else soft
        new_c = _update_centers(resp, x, mode, soft, c)
        shift = float(np.max(np.abs(new_c - c))) if new_c.size else 0.0
        c = new_c
        if assignment == "hard":
            trace.append(kmeans_objective(resp, c, x))
        else:
            trace.append(objective(hard_assign(e_step(c, x)), c, x))
        if shift < tol:
            converged = True
            break

    soft = e_step(c, x)
    hard = nearest_assign(c, x) if assignment == "hard" else hard_assign(soft)
    log.debug(
        f"em_cluster k={k} mode={mode} assignment={assignment}: "
        f"{iterations} iterations, converged={converged} in {elapsed(start):.2f}s"
    )
    return ClusterResult(
        centers=c,
        soft=soft,
        hard=hard,
        objective_trace=trace,
        iterations_run=iterations,
        converged=converged,
    )
