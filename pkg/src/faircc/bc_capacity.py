"""
Degraded Gaussian broadcast channel: weighted sum rate over subset messages.

Users are put in *layer order* (decreasing fading gain, ties by user
index). A message for subset ``J`` is carried by the layer of its weakest
member, so the ``2**K - 1`` subset weights collapse to one weight per
layer. The per-layer powers then follow from the upper envelope of the
marginal utilities ``w_k / (1/h_k + z)`` over the interference level
``z in [0, P]``.

Rates are in bits per channel use (log base 2).
"""

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError

_TIE_RTOL = 1e-12


@dataclass(frozen=True)
class ReducedWeights:
    """Per-layer weights.

    Attributes
    ----------
    order : ndarray of int, shape (K,)
        User indices by decreasing gain; ``order[0]`` is the strongest.
    theta_tilde : ndarray, shape (K,)
        Largest subset weight whose weakest member is the layer's user.
    argsubset : ndarray of int, shape (K,)
        Bitmask of the subset attaining ``theta_tilde`` for each layer.
    """

    order: np.ndarray
    theta_tilde: np.ndarray
    argsubset: np.ndarray


@dataclass(frozen=True)
class RateAllocation:
    order: np.ndarray
    p: np.ndarray  # layer order
    p_user: np.ndarray  # indexed by user
    layer_rates: np.ndarray  # layer order
    mu: np.ndarray  # indexed by mask - 1
    theta_tilde: np.ndarray
    argsubset: np.ndarray
    wsr: float


@lru_cache(maxsize=32)
def _subset_arrays(K):
    masks = np.arange(1, 1 << K, dtype=np.int64)
    membership = ((masks[:, None] >> np.arange(K)) & 1).astype(bool)
    return masks, membership, membership.sum(axis=1)


def _as_subset_vector(theta, K):
    n = (1 << K) - 1
    if isinstance(theta, dict):
        out = np.zeros(n)
        for mask, w in theta.items():
            if not 1 <= mask <= n:
                raise DomainError(f"subset mask {mask} invalid for K={K}")
            out[mask - 1] = w
        return out
    out = np.asarray(theta, dtype=float)
    if out.shape != (n,):
        raise DomainError(f"expected {n} subset weights, got shape {out.shape}")
    return out


def layer_order(h):
    """Users sorted by decreasing gain, stable in the user index."""
    h = np.asarray(h, dtype=float)
    return np.argsort(-h, kind="stable")


def reduce_weights(theta, h):
    """Collapse subset weights to one weight per layer.

    Parameters
    ----------
    theta : array_like of shape (2**K - 1,) or dict
        Nonnegative weight per subset, indexed by ``mask - 1`` (or a
        ``{mask: weight}`` mapping, missing subsets weigh zero).
    h : array_like, shape (K,)
        Fading power gains.

    Returns
    -------
    ReducedWeights
        Ties among maximizing subsets go to the largest subset, then to
        the smallest mask.
    """
    h = np.asarray(h, dtype=float)
    K = h.size
    theta = _as_subset_vector(theta, K)
    order = layer_order(h)
    pos = np.empty(K, dtype=np.int64)
    pos[order] = np.arange(K)
    masks, membership, sizes = _subset_arrays(K)
    layer = np.where(membership, pos[None, :], -1).max(axis=1)
    idx = np.lexsort((masks, -sizes, -theta, layer))
    first = np.ones(idx.size, dtype=bool)
    first[1:] = layer[idx[1:]] != layer[idx[:-1]]
    best = idx[first]
    return ReducedWeights(order=order, theta_tilde=theta[best], argsubset=masks[best])


def _envelope_intervals(weights, c, P):
    """Breakpoints of the upper envelope of ``weights[k] / (c[k] + z)``.

    ``c`` holds ``1/h`` in layer order (``inf`` for a zero gain). Returns a
    list of ``(layer, z_start, z_end)`` covering ``[0, P]``; empty when
    every weight is zero.
    """
    weights = list(weights)
    c = list(c)
    live = [k for k in range(len(weights)) if weights[k] > 0 and c[k] < math.inf]
    if not live or P <= 0:
        return []
    w = [weights[k] for k in live]
    cc = [c[k] for k in live]
    # winner just after z = 0: largest value, ties to the strongest layer
    v0 = [wk / ck for wk, ck in zip(w, cc)]
    top = max(v0)
    cur = next(i for i, v in enumerate(v0) if v >= top * (1 - _TIE_RTOL))
    z = 0.0
    out = []
    ztol = _TIE_RTOL * max(1.0, P)
    while True:
        wc, cc_cur = w[cur], cc[cur]
        nxt, best = math.inf, -1
        for j in range(len(w)):
            if w[j] <= wc * (1 + _TIE_RTOL):
                continue
            zc = max((wc * cc[j] - w[j] * cc_cur) / (w[j] - wc), z)
            # simultaneous crossings: the largest weight dominates afterwards
            if zc < nxt - ztol or (zc <= nxt + ztol and w[j] > w[best]):
                nxt, best = min(zc, nxt), j
        if best < 0 or nxt >= P:
            out.append((live[cur], z, P))
            return out
        if nxt > z:
            out.append((live[cur], z, nxt))
        cur, z = best, nxt


def allocate_power(r, h, P):
    """Power per layer maximizing the reduced weighted sum rate.

    Layer ``k`` receives the length of the set of interference levels
    ``z in [0, P]`` where its marginal utility ``theta_k / (1/h_k + z)``
    is the largest. The whole budget is spent as soon as any layer has a
    positive weight and a positive gain.

    Parameters
    ----------
    r : ReducedWeights
    h : array_like, shape (K,)
        Gains indexed by user (reordered internally with ``r.order``).
    P : float
        Total power budget (linear).

    Returns
    -------
    ndarray, shape (K,)
        Powers in layer order.
    """
    if P < 0:
        raise DomainError(f"power budget must be nonnegative, got {P}")
    hs = np.asarray(h, dtype=float)[r.order]
    with np.errstate(divide="ignore"):
        c = 1.0 / hs
    p = np.zeros(hs.size)
    for k, z0, z1 in _envelope_intervals(np.asarray(r.theta_tilde, float).tolist(), c.tolist(), P):
        p[k] += z1 - z0
    return p


def envelope_owner(r, h, P, z):
    """Layer owning interference level ``z`` (``-1`` when nobody does)."""
    hs = np.asarray(h, dtype=float)[r.order]
    with np.errstate(divide="ignore"):
        c = 1.0 / hs
    for k, z0, z1 in _envelope_intervals(np.asarray(r.theta_tilde, float).tolist(), c.tolist(), P):
        if z0 <= z <= z1:
            return k
    return -1


def rates_from_power(p, h):
    """Superposition layer rates for powers and gains given in layer order.

    ``R_k = log2(1 + h_k Z_k) - log2(1 + h_k Z_{k-1})`` with ``Z_k`` the
    cumulative power of layers ``0..k``.
    """
    p = np.asarray(p, dtype=float)
    h = np.asarray(h, dtype=float)
    Z = np.cumsum(p)
    Zprev = Z - p
    return (np.log1p(h * Z) - np.log1p(h * Zprev)) / np.log(2.0)


def solve_wsr(theta, h, P):
    """Maximize ``sum_J theta_J mu_J`` over the capacity region for gains ``h``.

    Each layer's rate is credited entirely to the subset attaining its
    reduced weight, so at most ``K`` subsets get a positive rate.
    """
    h = np.asarray(h, dtype=float)
    K = h.size
    r = reduce_weights(theta, h)
    p = allocate_power(r, h, P)
    rates = rates_from_power(p, h[r.order])
    mu = np.zeros((1 << K) - 1)
    mu[r.argsubset - 1] = rates
    p_user = np.empty(K)
    p_user[r.order] = p
    return RateAllocation(
        order=r.order,
        p=p,
        p_user=p_user,
        layer_rates=rates,
        mu=mu,
        theta_tilde=r.theta_tilde,
        argsubset=r.argsubset,
        wsr=float(np.dot(r.theta_tilde, rates)),
    )


def capacity_slack(mu, p_user, h):
    """Largest violation of the capacity-region inequalities (<= 0 when inside).

    For every layer ``k`` (in decreasing-gain order) the total rate of
    messages whose weakest member is ``k`` must not exceed the layer's
    superposition rate under ``p_user``.
    """
    h = np.asarray(h, dtype=float)
    K = h.size
    order = layer_order(h)
    pos = np.empty(K, dtype=np.int64)
    pos[order] = np.arange(K)
    _, membership, _ = _subset_arrays(K)
    layer = np.where(membership, pos[None, :], -1).max(axis=1)
    load = np.bincount(layer, weights=np.asarray(mu, float), minlength=K)
    cap = rates_from_power(np.asarray(p_user, float)[order], h[order])
    return float(np.max(load - cap))


def wsr_bruteforce(theta, h, P, grid_step=None):
    """Grid search of the weighted sum rate, for testing.

    The layer weights are recomputed by plain enumeration. Powers range
    over the simplex through cumulative levels ``0 <= Z_1 <= ... <= Z_K <= P``
    on a uniform grid of spacing ``grid_step`` (default ``P * 1e-5``). The
    objective separates over the cumulative levels, so a running maximum
    visits every grid point of the simplex exactly.
    """
    h = np.asarray(h, dtype=float)
    K = h.size
    if K > 4:
        raise DomainError("brute force limited to K <= 4")
    theta = _as_subset_vector(theta, K)
    if P == 0:
        return 0.0
    order = sorted(range(K), key=lambda k: (-h[k], k))
    wt = np.zeros(K)
    for k in range(K):
        top = order[: k + 1]
        for size in range(1, k + 2):
            for sub in itertools.combinations(top, size):
                if order[k] not in sub:
                    continue
                mask = sum(1 << u for u in sub)
                wt[k] = max(wt[k], theta[mask - 1])
    hs = h[order]
    wt[hs <= 0] = 0.0
    c = np.where(hs > 0, 1.0 / np.where(hs > 0, hs, 1.0), 1.0)
    step = P * 1e-5 if grid_step is None else grid_step
    n = int(round(P / step))
    z = np.linspace(0.0, P, n + 1)
    wnext = np.append(wt[1:], 0.0)
    cnext = np.append(c[1:], 1.0)
    best = None
    for k in range(K):
        phi = wt[k] * np.log(c[k] + z) - wnext[k] * np.log(cnext[k] + z)
        best = np.maximum.accumulate(phi if best is None else phi + best)
    return float((best[-1] - wt[0] * np.log(c[0])) / np.log(2.0))
