"""
Queue state of the delivery network and its slot update.

Three tiers: user queues ``S`` (admitted files not yet combined),
codeword queues ``Q`` (bits waiting for transmission, one per nonempty
subset) and virtual queues ``U`` (files) that steer admission.
"""

from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .errors import ContractViolation

_EPS = 1e-12


@dataclass
class QueueState:
    S: np.ndarray
    Q: np.ndarray
    U: np.ndarray

    @classmethod
    def empty(cls, K):
        return cls(np.zeros(K), np.zeros((1 << K) - 1), np.zeros(K))

    def copy(self):
        return QueueState(self.S.copy(), self.Q.copy(), self.U.copy())

    def lyapunov_backlog(self, F):
        """``sum U + sum S + sum Q / F**2``, the quantity bounded by the drift analysis."""
        return float(self.U.sum() + self.S.sum() + self.Q.sum() / F**2)


@dataclass
class SlotDecision:
    """Control variables for one slot.

    ``sigma`` and ``mu`` are indexed by ``mask - 1``. ``priority`` (same
    indexing, optional) orders subsets when available files cannot cover
    every requested combination; higher goes first.
    """

    a: np.ndarray
    gamma: np.ndarray
    sigma: np.ndarray
    mu: np.ndarray
    p: Optional[np.ndarray] = None
    priority: Optional[np.ndarray] = None


class SlotResult(NamedTuple):
    state: QueueState
    served: np.ndarray  # bits drained from each codeword queue
    combined: np.ndarray  # effective combination counts


@dataclass
class DeliveryLedger:
    """Cumulative per-user counters.

    ``drained_bits[k]`` adds up every bit drained from a codeword queue
    whose subset contains ``k``.
    """

    K: int
    bits_per_file: float
    drained_bits: np.ndarray = field(default=None)
    admitted_files: np.ndarray = field(default=None)
    combined_files: np.ndarray = field(default=None)
    t: int = 0

    def __post_init__(self):
        for name in ("drained_bits", "admitted_files", "combined_files"):
            if getattr(self, name) is None:
                setattr(self, name, np.zeros(self.K))

    @property
    def delivered_files(self):
        return self.drained_bits / self.bits_per_file


def _check_decision(state, d, n, K, sigma_max):
    shapes = {"a": (d.a, K), "gamma": (d.gamma, K), "sigma": (d.sigma, n), "mu": (d.mu, n)}
    for name, (arr, size) in shapes.items():
        if np.shape(arr) != (size,):
            raise ContractViolation(f"{name} must have shape ({size},), got {np.shape(arr)}")
        if np.any(~np.isfinite(arr)) or np.any(np.asarray(arr) < 0):
            raise ContractViolation(f"{name} must be finite and nonnegative")
    if sigma_max is not None and np.any(d.sigma > sigma_max + _EPS):
        raise ContractViolation(f"sigma exceeds sigma_max={sigma_max}")
    if state.S.shape != (K,) or state.Q.shape != (n,) or state.U.shape != (K,):
        raise ContractViolation("queue state does not match K")


def cap_combinations(sigma, S, tables, priority=None):
    """Limit requested combinations to the files actually waiting.

    When some user cannot cover all combinations that involve it, subsets
    are granted greedily by decreasing ``priority`` (ties and the default
    by ascending mask), each taking as many combinations as all of its
    members can still supply.
    """
    need = tables.files_used(sigma)
    if np.all(need <= S + _EPS):
        return sigma.copy()
    requested = np.flatnonzero(sigma > 0)
    if priority is not None:
        requested = requested[np.argsort(-priority[requested], kind="stable")]
    avail = S.tolist()
    out = np.zeros_like(sigma)
    exhausted = 0
    for k, s in enumerate(avail):
        if s <= 0:
            exhausted |= 1 << k
    member_lists = _member_lists(tables)
    for j in requested.tolist():
        if (j + 1) & exhausted:
            continue
        mem = member_lists[j]
        x = min(sigma[j], min(avail[k] for k in mem))
        if x <= 0:
            continue
        out[j] = x
        for k in mem:
            avail[k] -= x
            if avail[k] <= _EPS:
                avail[k] = 0.0
                exhausted |= 1 << k
    return out


def _member_lists(tables):
    cached = getattr(tables, "_member_lists", None)
    if cached is None:
        cached = [tuple(np.flatnonzero(row).tolist()) for row in tables.membership]
        tables._member_lists = cached
    return cached


def apply_slot(state, decision, params, sigma_max=None, cap=True, check=True):
    """Advance the queues by one slot.

    Steps, all driven by the slot's decision:

    1. combinations (capped by available files unless ``cap`` is False)
       leave the user queues, then admissions join them;
    2. every codeword queue drains ``min(Q, T_slot * mu)`` bits and
       receives the bits created by the combinations;
    3. virtual queues lose the admissions and gain ``gamma``.

    Returns
    -------
    SlotResult
        New state, drained bits per subset and the effective combination
        counts.
    """
    tables = params.tables()
    K, n = params.K, tables.n
    if check:
        _check_decision(state, decision, n, K, sigma_max)
    S, Q, U = state.S, state.Q, state.U
    sigma = np.asarray(decision.sigma, dtype=float)
    sig = cap_combinations(sigma, S, tables, decision.priority) if cap else sigma
    S_new = np.maximum(S - tables.files_used(sig), 0.0) + decision.a
    served = np.minimum(Q, params.T_slot * np.asarray(decision.mu, dtype=float))
    Q_new = Q - served + tables.codeword_arrivals(sig)
    np.maximum(Q_new, 0.0, out=Q_new)
    U_new = np.maximum(U - decision.a, 0.0) + decision.gamma
    return SlotResult(QueueState(S_new, Q_new, U_new), served, sig)


def ledger_update(ledger, served, admissions, combined=None, tables=None):
    """Credit drained bits to every member of each served subset.

    Updates ``ledger`` in place and returns it.
    """
    served = np.asarray(served, dtype=float)
    if np.any(served < 0):
        raise ContractViolation("served bits must be nonnegative")
    if tables is None:
        membership = _membership(ledger.K)
    else:
        membership = tables.membership_f
    ledger.drained_bits += served @ membership
    ledger.admitted_files += admissions
    if combined is not None:
        ledger.combined_files += combined @ membership
    ledger.t += 1
    return ledger


_MEMBERSHIP = {}


def _membership(K):
    if K not in _MEMBERSHIP:
        masks = np.arange(1, 1 << K)
        _MEMBERSHIP[K] = ((masks[:, None] >> np.arange(K)) & 1).astype(float)
    return _MEMBERSHIP[K]
