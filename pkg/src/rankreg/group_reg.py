"""Group lasso regularizer: value, dual norm, prox, and Jacobian.

Psi(beta) = sum_l w_l ||beta_{G_l}||_2 over the disjoint groups of a
GroupStructure. All operations are groupwise separable and run as
vectorized passes over the concatenated group layout.
"""

import numpy as np


class ActiveGroups:
    """Groups whose norm strictly exceeds their threshold, with norms.

    Attributes
    ----------
    indices : int array
        Ids of the strictly active groups.
    norms : float array
        ||beta_{G_l}||_2 for each active group, aligned with indices.
    """

    def __init__(self, indices, norms):
        self.indices = np.asarray(indices, dtype=np.intp)
        self.norms = np.asarray(norms, dtype=float)


def eval_group_norm(beta, G):
    """Psi(beta) = sum of weighted group norms."""
    return float(np.dot(G.weights, G.norms(beta)))


def dual_norm(y, G):
    """The polar of Psi: max_l ||y_{G_l}||_2 / w_l."""
    return float(np.max(G.norms(y) / G.weights))


def project_l2_ball(v, radius):
    """Euclidean projection onto the centered ball of the given radius."""
    if not radius > 0:
        raise ValueError("radius must be positive")
    v = np.asarray(v, dtype=float)
    nrm = np.linalg.norm(v)
    if nrm <= radius:
        return v.copy()
    return v * (radius / nrm)


def prox_group(beta, G, scale=1.0):
    """Groupwise block soft-thresholding: the prox of scale * Psi.

    Each group is shrunk toward zero by scale * w_l in norm; groups at
    or below the threshold map to exact zeros. Returns the thresholded
    vector together with the strictly active groups (reused by the
    Jacobian and the Newton system factors).
    """
    if not scale > 0:
        raise ValueError("scale must be positive")
    beta = np.asarray(beta, dtype=float)
    norms = G.norms(beta)
    thresh = scale * G.weights
    active = norms > thresh
    safe = np.where(active, norms, 1.0)
    factor = np.where(active, 1.0 - thresh / safe, 0.0)
    value = beta * factor[G.group_id]
    idx = np.nonzero(active)[0]
    return value, ActiveGroups(idx, norms[idx])


def jacobian_group_apply(beta, active, G, d, scale=1.0):
    """Apply the prox-of-(scale * Psi) Jacobian at ``beta`` to ``d``.

    Per strictly active group the map is
    (1 - t_l/||b||) d_G + (t_l/||b||^3) <b, d_G> b with b = beta_{G_l}
    and t_l = scale * w_l; inactive groups map to zero. Symmetric with
    spectrum in [0, 1]. O(p).
    """
    beta = np.asarray(beta, dtype=float)
    d = np.asarray(d, dtype=float)
    if beta.size != G.p or d.size != G.p:
        raise ValueError("stale active set: dimension mismatch")
    a = np.zeros(G.g)
    b = np.zeros(G.g)
    idx = active.indices
    if idx.size:
        thresh = scale * G.weights[idx]
        a[idx] = 1.0 - thresh / active.norms
        b[idx] = thresh / active.norms ** 3
    ip = np.add.reduceat((beta * d)[G.order], G.seg_starts[:-1])
    return a[G.group_id] * d + (b * ip)[G.group_id] * beta
