"""
Control laws.

The proposed scheme picks, every slot and in this order, virtual
arrivals ``gamma`` (utility maximization against the virtual queues),
on-off admissions ``a``, combination counts ``sigma`` (backpressure
between user queues and codeword queues) and multicast rates ``mu``
(codeword-queue-weighted sum rate on the broadcast channel).

Two baselines are provided: opportunistic unicast with alpha-fair
priorities and standard coded caching at the weakest user's rate. Static
randomized policies, which ignore queue lengths, serve as a test
instrument for the stability region.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .bc_capacity import solve_wsr
from .channel import DETERMINISTIC, uniform_block
from .combinatorics import standard_cc_load, subfile_size
from .errors import ConfigError
from .queues import SlotDecision

INFINITE_BACKLOG = "infinite_backlog"
STOCHASTIC = "stochastic"

ARRIVAL_STREAM = 1
STATIC_STREAM = 2


@dataclass(frozen=True)
class FairnessConfig:
    """Utility and control constants.

    Attributes
    ----------
    alpha : float
        Fairness exponent (0 sum rate, 1 proportional fair, large max-min).
    d : float
        Domain shift of the utility, keeps it finite at zero rate.
    V : float
        Utility weight against queue backlog.
    gamma_max : float
        Cap on virtual arrivals and on-off admissions (files/slot).
    sigma_max : int
        Cap on combinations per subset and slot.
    """

    alpha: float = 0.0
    d: float = 0.01
    V: float = 1000.0
    gamma_max: float = 2.0
    sigma_max: int = 2

    def __post_init__(self):
        if self.alpha < 0:
            raise ConfigError(f"alpha must be >= 0, got {self.alpha}")
        if self.d <= 0:
            raise ConfigError(f"d must be > 0, got {self.d}")
        if self.V <= 0:
            raise ConfigError(f"V must be > 0, got {self.V}")
        if self.gamma_max < 0:
            raise ConfigError(f"gamma_max must be >= 0, got {self.gamma_max}")
        if self.sigma_max < 0 or int(self.sigma_max) != self.sigma_max:
            raise ConfigError(f"sigma_max must be a nonnegative integer, got {self.sigma_max}")


@dataclass(frozen=True)
class ArrivalModel:
    """File demands.

    ``infinite_backlog``: every user always has demands waiting.
    ``stochastic``: user ``k`` requests ``min(Poisson(lam[k]), A_max)``
    files at the start of each slot; demands not admitted are dropped.
    """

    kind: str = INFINITE_BACKLOG
    lam: Optional[tuple] = None
    A_max: float = 0.0

    def __post_init__(self):
        if self.kind not in (INFINITE_BACKLOG, STOCHASTIC):
            raise ConfigError(f"unknown arrival kind {self.kind!r}")
        if self.kind == STOCHASTIC:
            if self.lam is None or any(x < 0 for x in self.lam):
                raise ConfigError("stochastic arrivals need nonnegative means")
            if self.A_max <= 0:
                raise ConfigError("stochastic arrivals need A_max > 0")
            object.__setattr__(self, "lam", tuple(float(x) for x in self.lam))

    def sample_block(self, seed, t0, n):
        """Demands of slots ``t0 .. t0+n-1``, shape ``(n, K)``."""
        lam = np.asarray(self.lam)
        u = uniform_block(seed, ARRIVAL_STREAM, t0, n, lam.size)
        # inverse-CDF Poisson draw, truncated at A_max
        kmax = int(np.floor(self.A_max))
        out = np.zeros(u.shape)
        pmf = np.exp(-lam)
        cdf = pmf.copy()
        for k in range(kmax):
            out += u > cdf
            pmf = pmf * lam / (k + 1)
            cdf = cdf + pmf
        return out


def g_utility(x, alpha, d):
    """Alpha-fair utility ``(d+x)**(1-alpha)/(1-alpha)``, ``log(1+x/d)`` at ``alpha=1``."""
    x = np.asarray(x, dtype=float)
    if alpha == 1:
        return np.log1p(x / d)
    return (d + x) ** (1.0 - alpha) / (1.0 - alpha)


def g_prime(x, alpha, d):
    return (d + np.asarray(x, dtype=float)) ** (-alpha)


def gamma_opt(U, cfg):
    """Maximizer of ``V g(x) - U x`` over ``[0, gamma_max]``, elementwise in ``U``."""
    U = np.asarray(U, dtype=float)
    gmax = cfg.gamma_max
    if cfg.alpha == 0:
        # strict: at U = V both ends are optimal, and 0 keeps U below V + gamma_max
        return np.where(U < cfg.V, gmax, 0.0)
    with np.errstate(divide="ignore"):
        ratio = cfg.V / U
    if cfg.alpha == 1:
        x = ratio - cfg.d
    else:
        x = ratio ** (1.0 / cfg.alpha) - cfg.d
    return np.where(U > 0, np.clip(x, 0.0, gmax), gmax)


def admission_rule(U, S, cfg, demands=None):
    """On-off admission: admit when the virtual queue is at least the user queue.

    With ``demands`` (stochastic arrivals) the fresh demands are admitted
    instead of ``gamma_max`` and the rest are rejected.
    """
    on = np.asarray(U) >= np.asarray(S)
    if demands is None:
        return np.where(on, cfg.gamma_max, 0.0)
    return np.where(on, demands, 0.0)


def routing_scores(S, Q, params):
    """Backpressure ``sum_{k in J} S_k - sum_{I subset J} b_{J,I} Q_I / F**2`` per subset."""
    tables = params.tables()
    return S @ tables.membership_f.T - tables.subset_bit_load(Q) / params.F**2


def routing_rule(S, Q, cfg, params):
    """Requested combination counts: ``sigma_max`` wherever the backpressure is positive."""
    return np.where(routing_scores(S, Q, params) > 0, float(cfg.sigma_max), 0.0)


def scheduling_rule(Q, h, params):
    """Rates and powers maximizing the codeword-queue-weighted sum rate.

    Returns
    -------
    mu : ndarray
        Bits per channel use for every subset.
    p : ndarray
        Power per user.
    """
    alloc = solve_wsr(Q, h, params.P)
    return alloc.mu, alloc.p_user


class ProposedPolicy:
    """Queue-driven admission, routing and scheduling."""

    name = "proposed"

    def __init__(self, params, cfg, arrivals=None):
        self.params = params
        self.cfg = cfg
        self.arrivals = arrivals or ArrivalModel()
        if self.arrivals.kind == STOCHASTIC:
            if cfg.gamma_max < self.arrivals.A_max or cfg.sigma_max < self.arrivals.A_max:
                raise ConfigError("gamma_max and sigma_max must be at least A_max")

    def decide(self, state, h, demands=None):
        cfg, params = self.cfg, self.params
        gamma = gamma_opt(state.U, cfg)
        a = admission_rule(state.U, state.S, cfg, demands)
        scores = routing_scores(state.S, state.Q, params)
        sigma = np.where(scores > 0, float(cfg.sigma_max), 0.0)
        mu, p = scheduling_rule(state.Q, h, params)
        return SlotDecision(a=a, gamma=gamma, sigma=sigma, mu=mu, p=p, priority=scores)


@dataclass
class UnicastOpportunistic:
    """Full-power unicast to ``argmax log(1 + h_k P) / T_k**alpha``.

    ``T_k`` is the running average of the rate given to user ``k`` over
    all past slots, floored at ``eps``.
    """

    K: int
    alpha: float
    P: float
    eps: float = 1e-6
    name: str = "unicast_opp"
    total: np.ndarray = field(default=None)
    t: int = 0

    def __post_init__(self):
        if self.total is None:
            self.total = np.zeros(self.K)

    @property
    def T(self):
        if self.t == 0:
            return np.full(self.K, self.eps)
        return np.maximum(self.total / self.t, self.eps)

    def step(self, h):
        """Serve one slot; returns ``(user, rate in bits per channel use)``."""
        rate = np.log2(1.0 + np.asarray(h) * self.P)
        k = int(np.argmax(rate / self.T**self.alpha))
        self.total[k] += rate[k]
        self.t += 1
        return k, float(rate[k])


def unicast_opportunistic_step(h, T, alpha, params):
    """Pick the unicast user for gains ``h`` and running averages ``T``.

    Returns ``(user, bits)`` with ``bits = T_slot * log2(1 + h_user P)``.
    """
    rate = np.log2(1.0 + np.asarray(h) * params.P)
    k = int(np.argmax(rate / np.asarray(T, dtype=float) ** alpha))
    return k, params.T_slot * float(rate[k])


@dataclass(frozen=True)
class StandardCCRate:
    rate: float  # files/slot per user
    stderr: float


def standard_cc_rate(params, channel, n_draws=10**6):
    """Per-user rate of standard coded caching sent at the weakest user's rate.

    Exact for a deterministic channel, Monte Carlo over ``n_draws`` slots
    otherwise. Returns infinity when everything is cached.
    """
    load = standard_cc_load(params.K, params.m)
    if load == 0:
        return StandardCCRate(float("inf"), 0.0)
    if channel.kind == DETERMINISTIC:
        mean, se = np.log2(1.0 + params.P * min(channel.beta)), 0.0
    else:
        h = channel.sample_block(0, n_draws)
        x = np.log2(1.0 + params.P * h.min(axis=1))
        mean, se = x.mean(), x.std(ddof=1) / np.sqrt(n_draws)
    scale = params.T_slot / (load * params.F)
    return StandardCCRate(float(scale * mean), float(scale * se))


class StandardCCRoundRobin:
    """Fluid round-robin over the codewords of one coded-caching round.

    Each slot sends ``T_slot * log2(1 + P min_k h_k)`` bits. Every bit of a
    codeword for subset ``J`` counts for all members of ``J``; one full
    round gives each user ``(1 - m) F`` bits, i.e. one file.
    """

    name = "standard_cc"

    def __init__(self, params):
        self.params = params
        tables = params.tables()
        sizes = np.array([subfile_size(int(s) - 1, params.cache) for s in tables.sizes])
        self._bounds = np.concatenate(([0.0], np.cumsum(sizes)))
        self.round_bits = self._bounds[-1]
        credit = sizes[:, None] * tables.membership_f
        self._credit = np.vstack([np.zeros(params.K), np.cumsum(credit, axis=0)])
        self._sizes = sizes
        self._membership = tables.membership_f
        self.sent = 0.0

    def credit(self, bits):
        """Per-user bits credited after ``bits`` have been sent in total."""
        rounds, rest = divmod(bits, self.round_bits)
        i = min(int(np.searchsorted(self._bounds, rest, side="right")) - 1, self._sizes.size - 1)
        frac = (rest - self._bounds[i]) / self._sizes[i]
        partial = self._credit[i] + frac * self._sizes[i] * self._membership[i]
        return rounds * self.params.bits_per_file + partial

    def step(self, h):
        """Serve one slot; returns the bits credited to every user."""
        before = self.credit(self.sent)
        self.sent += self.params.T_slot * np.log2(1.0 + self.params.P * np.min(h))
        return self.credit(self.sent) - before


@dataclass
class StaticEntry:
    """Decisions of a static policy for one channel state."""

    a: np.ndarray
    sigma: np.ndarray
    rates: list
    probs: np.ndarray


class StaticPolicy:
    """Randomized policy whose decisions depend only on the channel state.

    ``table`` maps a channel state (tuple of gains) to a ``StaticEntry``.
    Admissions and combinations are taken at their means; one of the
    listed rate vectors is drawn with the listed probabilities.
    """

    name = "static"

    def __init__(self, table, seed=0):
        self.table = {self._key(h): e for h, e in table.items()}
        self.seed = seed

    @staticmethod
    def _key(h):
        return tuple(np.round(np.asarray(h, dtype=float), 12).tolist())

    def decide(self, h, t):
        return static_policy_step(self, h, t)


def static_policy_step(policy, h, t):
    """Draw the slot decision of a static policy for gains ``h`` at slot ``t``."""
    entry = policy.table.get(policy._key(h))
    if entry is None:
        raise ConfigError(f"channel state {tuple(h)} not in static policy table")
    u = uniform_block(policy.seed, STATIC_STREAM, t, 1, 1)[0, 0]
    l = min(int(np.searchsorted(np.cumsum(entry.probs), u)), len(entry.rates) - 1)
    return SlotDecision(
        a=np.array(entry.a, dtype=float),
        gamma=np.array(entry.a, dtype=float),
        sigma=np.array(entry.sigma, dtype=float),
        mu=np.array(entry.rates[l], dtype=float),
    )


@dataclass(frozen=True)
class RegionPoint:
    """Largest admission scale along a direction and the allocation reaching it."""

    scale: float
    sigma: np.ndarray
    probs: np.ndarray
    rates: list


def max_admission_scale(params, h, direction, sigma_max, n_weights=400, seed=0):
    """Largest ``s`` with ``s * direction`` admissible for a fixed channel state.

    The capacity region is approximated by the convex hull of weighted
    sum rate maximizers for ``n_weights`` weight vectors (all unit vectors
    included); a linear program then requires combinations to use up the
    admissions and multicast rates to carry the codeword bits.
    """
    from scipy.optimize import linprog

    K = params.K
    tables = params.tables()
    n = tables.n
    rng = np.random.default_rng(seed)
    weights = [np.eye(n)[j] for j in range(n)]
    weights += list(rng.dirichlet(np.ones(n), size=max(0, n_weights - n)))
    rates = []
    seen = set()
    for w in weights:
        mu = solve_wsr(w, h, params.P).mu
        key = tuple(np.round(mu, 12))
        if key not in seen:
            seen.add(key)
            rates.append(mu)
    L = len(rates)
    R = np.array(rates).T  # (n, L)
    # variables: s, sigma (n), psi (L)
    nv = 1 + n + L
    c = np.zeros(nv)
    c[0] = -1.0
    direction = np.asarray(direction, dtype=float)
    # combinations use exactly the admitted files of every user
    A_eq = np.zeros((K + 1, nv))
    A_eq[:K, 0] = direction
    A_eq[:K, 1 : 1 + n] = -tables.membership_f.T
    A_eq[K, 1 + n :] = 1.0
    b_eq = np.zeros(K + 1)
    b_eq[K] = 1.0
    # bits created for each queue I must not exceed what the time-shared rates carry
    bits_matrix = np.array([tables.codeword_arrivals(e) for e in np.eye(n)]).T  # (I, J)
    A = np.hstack([np.zeros((n, 1)), bits_matrix, -params.T_slot * R])
    b = np.zeros(n)
    bounds = [(0, None)] + [(0, sigma_max)] * n + [(0, None)] * L
    res = linprog(c, A_ub=A, b_ub=b, A_eq=A_eq, b_eq=b_eq, bounds=bounds, method="highs")
    if not res.success:
        raise RuntimeError(f"region LP failed: {res.message}")
    x = res.x
    probs = np.clip(x[1 + n :], 0, None)
    probs /= probs.sum()
    keep = probs > 1e-12
    return RegionPoint(
        scale=float(x[0]),
        sigma=x[1 : 1 + n],
        probs=probs[keep],
        rates=[r for r, k in zip(rates, keep) if k],
    )


def static_table(point, h, direction, factor):
    """One-state static policy table running ``point`` at ``factor`` times its scale.

    Admissions and combinations are both multiplied by ``factor``; the
    transmission mix is kept. ``factor < 1`` lies strictly inside the
    approximated region, ``factor > 1`` outside it.
    """
    a = factor * point.scale * np.asarray(direction, dtype=float)
    entry = StaticEntry(a=a, sigma=factor * point.sigma, rates=point.rates, probs=point.probs)
    return {tuple(np.asarray(h, dtype=float).tolist()): entry}
