"""
Decentralized coded-caching bookkeeping.

User subsets are encoded as integer bitmasks: bit ``k`` is set when user
``k`` (zero based) belongs to the subset. Arrays indexed "by subset" have
length ``2**K - 1`` and position ``mask - 1``.

All sizes are real valued (large file limit), nothing is rounded to bits.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConfigError, DomainError

K_MAX = 16
DENSE_K = 8  # below this the 3**K pair sum is cheaper as a dense matrix


@dataclass(frozen=True)
class CacheParams:
    """Number of users ``K``, normalized cache size ``m`` and file size ``F`` (bits)."""

    K: int
    m: float
    F: float

    def __post_init__(self):
        if self.K < 1:
            raise DomainError(f"K must be >= 1, got {self.K}")
        if not 0.0 <= self.m <= 1.0:
            raise DomainError(f"m must lie in [0, 1], got {self.m}")
        if not self.F > 0:
            raise DomainError(f"F must be positive, got {self.F}")


def subfile_size(s, params):
    """Bits of a file cached exactly by a given set of ``s`` users.

    Parameters
    ----------
    s : int
        Cardinality of the caching set, ``0 <= s <= K``.
    params : CacheParams

    Returns
    -------
    float
        ``m**s * (1 - m)**(K - s) * F``.
    """
    if not 0 <= s <= params.K:
        raise DomainError(f"subset size {s} outside [0, {params.K}]")
    m = params.m
    return m**s * (1.0 - m) ** (params.K - s) * params.F


def codeword_bits(j, i, params):
    """Bits entering codeword queue ``I`` when one demand set ``J`` is combined.

    ``j = |J|`` and ``i = |I|`` with ``I`` a nonempty subset of ``J``. The
    sub-files known by users outside ``J`` are aggregated into the same
    queue, which gives ``m**(i-1) * (1-m)**(j-i+1) * F``. Summed over all
    ``I`` containing a fixed member of ``J`` this is ``(1 - m) F``, the
    uncached part of one file.
    """
    if i < 1 or i > j:
        raise DomainError(f"need 1 <= i <= j, got i={i}, j={j}")
    m = params.m
    return m ** (i - 1) * (1.0 - m) ** (j - i + 1) * params.F


def standard_cc_load(K, m):
    """Multicast load, in files, of one decentralized coded-caching round.

    Every user is served one file. For ``m -> 0`` the limit ``K`` is
    returned (plain unicast of every file).
    """
    if K < 1:
        raise DomainError(f"K must be >= 1, got {K}")
    if not 0.0 <= m <= 1.0:
        raise DomainError(f"m must lie in [0, 1], got {m}")
    if m == 0.0:
        return float(K)
    if m == 1.0:
        return 0.0
    # 1 - (1-m)**K without cancellation for small m
    return (1.0 - m) * (-math.expm1(K * math.log1p(-m)) / m)


def enumerate_subsets(K):
    """All nonempty subsets of ``K`` users as ascending bitmasks."""
    _check_k(K)
    return list(range(1, 1 << K))


def popcount(mask):
    return bin(mask).count("1")


def members(mask):
    """Zero-based user indices contained in ``mask``."""
    out = []
    k = 0
    while mask:
        if mask & 1:
            out.append(k)
        mask >>= 1
        k += 1
    return out


def _check_k(K):
    if not 1 <= K <= K_MAX:
        raise ConfigError(f"K must lie in [1, {K_MAX}], got {K}")


class SubsetTables:
    """Precomputed per-``K`` arrays used by the vectorized slot loop.

    Attributes
    ----------
    masks : ndarray, shape (N,)
        ``1 .. 2**K - 1``.
    sizes : ndarray, shape (N,)
        Cardinality of every subset.
    membership : ndarray, shape (N, K), bool
        ``membership[J - 1, k]`` is True when ``k`` belongs to ``J``.
    bits : ndarray, shape (K + 1, K + 1)
        ``bits[j, i] = codeword_bits(j, i)``, zero where undefined.
    """

    def __init__(self, params, dense=None):
        _check_k(params.K)
        K = params.K
        self.K = K
        self.params = params
        self.n = (1 << K) - 1
        self.masks = np.arange(1, 1 << K, dtype=np.int64)
        self.membership = ((self.masks[:, None] >> np.arange(K)) & 1).astype(bool)
        self.membership_f = self.membership.astype(float)
        self.sizes = self.membership.sum(axis=1)
        bits = np.zeros((K + 1, K + 1))
        for j in range(1, K + 1):
            for i in range(1, j + 1):
                bits[j, i] = codeword_bits(j, i, params)
        self.bits = bits
        # full-length (2**K) cardinality, index 0 is the empty set
        self._card = np.concatenate(([0], self.sizes))
        self._cols = np.arange(1 << K)
        # pair weights b(|J|, i) looked up per J
        self._bits_by_J = bits[self._card]  # (2**K, K + 1)
        self._dense = None
        if dense if dense is not None else K <= DENSE_K:
            sub = (self.masks[:, None] & self.masks[None, :]) == self.masks[None, :]
            self._dense = np.where(sub, bits[self.sizes[:, None], self.sizes[None, :]], 0.0)

    def _ranked(self, values):
        f = np.zeros((self.K + 1, 1 << self.K))
        f[self._card[1:], self._cols[1:]] = values
        return f

    def subset_bit_load(self, Q):
        """``sum_{I subset of J} b(|J|, |I|) * Q_I`` for every ``J``.

        A subset-sum transform stratified by ``|I|`` keeps the cost at
        ``O(K^2 2^K)`` rather than ``3^K``.
        """
        if self._dense is not None:
            return self._dense @ Q
        f = self._ranked(Q)
        K = self.K
        for b in range(K):
            v = f.reshape(K + 1, -1, 2, 1 << b)
            v[:, :, 1, :] += v[:, :, 0, :]
        return np.einsum("ji,ij->j", self._bits_by_J, f)[1:]

    def codeword_arrivals(self, sigma):
        """Bits entering every codeword queue for combination counts ``sigma``.

        ``sum_{J superset of I} b(|J|, |I|) * sigma_J`` for every ``I``.
        """
        if self._dense is not None:
            return sigma @ self._dense
        K = self.K
        # weight each J's count by b(|J|, i) for every target size i
        w = np.concatenate(([0.0], sigma))[None, :] * self._bits_by_J.T
        for b in range(K):
            v = w.reshape(K + 1, -1, 2, 1 << b)
            v[:, :, 0, :] += v[:, :, 1, :]
        return w[self._card[1:], self._cols[1:]]

    def files_used(self, sigma):
        """Files removed from every user queue: ``sum_{J containing k} sigma_J``."""
        return sigma @ self.membership_f


@lru_cache(maxsize=64)
def subset_tables(K, m, F):
    return SubsetTables(CacheParams(K, m, F))
