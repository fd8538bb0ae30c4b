"""
Slot loop and reported metrics.

A run draws the channel (and demands) slot by slot, lets the selected
policy decide, updates the queues and accumulates delivered bits. Time
averages skip the first ``warmup_fraction`` of the horizon.
"""

import dataclasses
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np

from .channel import DETERMINISTIC, ChannelModel, two_class_gains
from .errors import ConfigError
from .params import SystemParams
from .policies import (
    STOCHASTIC,
    ArrivalModel,
    FairnessConfig,
    ProposedPolicy,
    StandardCCRoundRobin,
    StaticPolicy,
    UnicastOpportunistic,
    g_utility,
)
from .queues import DeliveryLedger, QueueState, apply_slot, ledger_update

POLICIES = ("proposed", "unicast_opp", "standard_cc", "static")
GAIN_PROFILES = ("uniform", "two_class")
SWEEP_AXES = ("K", "V", "alpha")

_BLOCK = 4096


@dataclass(frozen=True)
class RunConfig:
    """Everything one simulation run depends on.

    ``gain_profile`` (``"uniform"`` or ``"two_class"``) lets the mean gains
    be rebuilt when ``K`` changes; leave it ``None`` for custom gains.
    ``static_table`` is only used by the ``static`` policy.
    """

    params: SystemParams
    channel_kind: str
    beta: tuple
    fairness: FairnessConfig = FairnessConfig()
    arrivals: ArrivalModel = ArrivalModel()
    policy: str = "proposed"
    horizon: int = 100_000
    sample_every: int = 0
    seed: int = 0
    warmup_fraction: float = 0.1
    gain_profile: Optional[str] = None
    static_table: Optional[dict] = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "beta", tuple(float(b) for b in self.beta))

    @property
    def channel(self):
        return ChannelModel(self.channel_kind, self.beta, self.seed)

    def validate(self):
        K = self.params.K
        if len(self.beta) != K:
            raise ConfigError(f"{len(self.beta)} mean gains given for K={K}")
        self.channel  # noqa: B018 - validates kind and gains
        if self.arrivals.kind == STOCHASTIC and len(self.arrivals.lam) != K:
            raise ConfigError(f"{len(self.arrivals.lam)} arrival means given for K={K}")
        if self.policy not in POLICIES:
            raise ConfigError(f"unknown policy {self.policy!r}")
        if self.policy == "static" and not self.static_table:
            raise ConfigError("static policy needs a static_table")
        if self.policy in ("unicast_opp", "standard_cc") and self.arrivals.kind != "infinite_backlog":
            raise ConfigError(f"{self.policy} assumes infinitely backlogged users")
        if int(self.horizon) != self.horizon or self.horizon < 1:
            raise ConfigError(f"horizon must be a positive integer, got {self.horizon}")
        if self.sample_every < 0:
            raise ConfigError("sample_every must be >= 0")
        if not 0 <= self.warmup_fraction < 1:
            raise ConfigError("warmup_fraction must lie in [0, 1)")
        if self.gain_profile not in (None,) + GAIN_PROFILES:
            raise ConfigError(f"unknown gain profile {self.gain_profile!r}")
        if self.seed < 0:
            raise ConfigError("seed must be nonnegative")
        if self.arrivals.kind == STOCHASTIC:
            ProposedPolicy(self.params, self.fairness, self.arrivals)
        return self

    def with_K(self, K):
        """Same scenario with ``K`` users."""
        if self.gain_profile == "uniform":
            beta = (self.beta[0],) * K
        elif self.gain_profile == "two_class":
            beta = tuple(two_class_gains(K))
        else:
            raise ConfigError("changing K needs a gain profile")
        arrivals = self.arrivals
        if arrivals.kind == STOCHASTIC:
            if len(set(arrivals.lam)) != 1:
                raise ConfigError("changing K needs identical arrival means")
            arrivals = dataclasses.replace(arrivals, lam=(arrivals.lam[0],) * K)
        return dataclasses.replace(
            self, params=dataclasses.replace(self.params, K=K), beta=beta, arrivals=arrivals
        )

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


@dataclass
class RunMetrics:
    """Outcome of one run. Rates are in files per slot."""

    scheme: str
    K: int
    alpha: float
    V: float
    seed: int
    rates: np.ndarray
    offered_rates: np.ndarray
    utility: float
    avg_S: float
    avg_Q_total: float
    avg_U: float
    avg_backlog: float
    B_est: float
    admitted: np.ndarray
    combined: np.ndarray
    delivered: np.ndarray
    slots: int
    measured_slots: int
    trajectories: dict = field(default_factory=dict)
    final_state: Optional[QueueState] = None

    @property
    def sum_rate(self):
        return float(self.rates.sum())

    @property
    def rate_gap(self):
        """Largest gap between offered-rate and drained-bit rate estimates."""
        return float(np.max(np.abs(self.offered_rates - self.rates)))


@dataclass(frozen=True)
class BEstimate:
    value: float
    stderr: float
    channel_term: float


def estimate_B(config, n_draws=10**6):
    """Constant of the drift bound for the configured system.

    Sums the squared per-slot increments of the virtual, user and
    codeword queues; the channel part uses ``E[log2(1 + P h_k)**2]``,
    exact for deterministic gains and Monte Carlo otherwise.
    """
    return _estimate_B(config.params, config.fairness.gamma_max, config.fairness.sigma_max,
                       config.channel_kind, config.beta, config.seed, n_draws)


@lru_cache(maxsize=128)
def _estimate_B(params, gamma_max, sigma_max, kind, beta, seed, n_draws):
    K, F = params.K, params.F
    tables = params.tables()
    n_sub = 1 << (K - 1)  # subsets containing a given user
    term_users = K * (gamma_max**2 + 0.5 * (n_sub * sigma_max) ** 2)
    pair = 0.0
    for j in range(1, K + 1):
        n_J = _comb(K, j)
        for i in range(1, j + 1):
            pair += n_J * _comb(j, i) * (sigma_max * tables.bits[j, i]) ** 2
    term_codewords = pair / (2 * F**2)
    scale = params.T_slot**2 / (2 * F**2) * n_sub
    model = ChannelModel(kind, beta, seed)
    if kind == DETERMINISTIC:
        sq = np.log2(1 + params.P * np.asarray(beta)) ** 2
        channel_term, se = scale * sq.sum(), 0.0
    else:
        h = model.sample_block(0, n_draws)
        x = (np.log2(1 + params.P * h) ** 2).sum(axis=1)
        channel_term = scale * x.mean()
        se = scale * x.std(ddof=1) / np.sqrt(n_draws)
    value = term_users + term_codewords + channel_term
    return BEstimate(float(value), float(se), float(channel_term))


def _comb(n, k):
    from math import comb

    return comb(n, k)


def _windows(config):
    H = int(config.horizon)
    warm = int(np.floor(config.warmup_fraction * H))
    return H, warm


def run(config, drain=False, max_drain_slots=1_000_000, reference=False):
    """Simulate ``config.horizon`` slots and report time averages.

    With ``drain=True`` (queue-based policies only) admissions stop after
    the horizon and the policy keeps running until every queue is empty;
    ``admitted``, ``combined`` and ``delivered`` then cover the whole run.
    The proposed policy runs on the compiled slot loop unless ``reference``
    is set or a drain is requested.
    """
    config.validate()
    if config.policy == "unicast_opp":
        metrics = _run_unicast(config)
    elif config.policy == "standard_cc":
        metrics = _run_standard_cc(config)
    elif config.policy == "proposed" and not (drain or reference):
        metrics = _run_compiled(config)
    else:
        metrics = _run_queued(config, drain, max_drain_slots)
    metrics.B_est = estimate_B(config).value
    return metrics


def _empty_metrics(config, rates, offered, admitted, delivered, measured):
    fair = config.fairness
    return RunMetrics(
        scheme=config.policy,
        K=config.params.K,
        alpha=fair.alpha,
        V=fair.V,
        seed=config.seed,
        rates=rates,
        offered_rates=offered,
        utility=float(np.sum(g_utility(rates, fair.alpha, fair.d))),
        avg_S=0.0,
        avg_Q_total=0.0,
        avg_U=0.0,
        avg_backlog=0.0,
        B_est=float("nan"),
        admitted=admitted,
        combined=admitted.copy(),
        delivered=delivered,
        slots=int(config.horizon),
        measured_slots=measured,
    )


def _run_unicast(config):
    params = config.params
    H, warm = _windows(config)
    sched = UnicastOpportunistic(params.K, config.fairness.alpha, params.P)
    bits = np.zeros(params.K)
    total = np.zeros(params.K)
    traj_t, traj_bits = [], []
    channel = config.channel
    for t0 in range(0, H, _BLOCK):
        hb = channel.sample_block(t0, min(_BLOCK, H - t0))
        for i, h in enumerate(hb):
            k, rate = sched.step(h)
            b = params.T_slot * rate
            total[k] += b
            if t0 + i >= warm:
                bits[k] += b
            if config.sample_every and (t0 + i) % config.sample_every == 0:
                traj_t.append(t0 + i)
                traj_bits.append(total.copy())
    measured = H - warm
    rates = bits / (measured * params.bits_per_file)
    delivered = total / params.bits_per_file
    m = _empty_metrics(config, rates, rates.copy(), delivered.copy(), delivered, measured)
    if config.sample_every:
        m.trajectories = {"t": np.array(traj_t), "delivered_files": np.array(traj_bits) / params.bits_per_file}
    return m


def _run_standard_cc(config):
    params = config.params
    H, warm = _windows(config)
    sched = StandardCCRoundRobin(params)
    channel = config.channel
    sent_at_warm = 0.0
    traj_t, traj_del = [], []
    for t0 in range(0, H, _BLOCK):
        hb = channel.sample_block(t0, min(_BLOCK, H - t0))
        per_slot = params.T_slot * np.log2(1.0 + params.P * hb.min(axis=1))
        cum = sched.sent + np.cumsum(per_slot)
        if t0 <= warm < t0 + hb.shape[0]:
            sent_at_warm = sched.sent if warm == t0 else cum[warm - t0 - 1]
        if config.sample_every:
            for i in range(hb.shape[0]):
                if (t0 + i) % config.sample_every == 0:
                    traj_t.append(t0 + i)
                    traj_del.append(sched.credit(cum[i]) / params.bits_per_file)
        sched.sent = float(cum[-1])
    measured = H - warm
    bits = sched.credit(sched.sent) - sched.credit(sent_at_warm)
    rates = bits / (measured * params.bits_per_file)
    delivered = sched.credit(sched.sent) / params.bits_per_file
    m = _empty_metrics(config, rates, rates.copy(), delivered.copy(), delivered, measured)
    if config.sample_every:
        m.trajectories = {"t": np.array(traj_t), "delivered_files": np.array(traj_del)}
    return m


def _run_queued(config, drain, max_drain_slots):
    params = config.params
    K, F = params.K, params.F
    tables = params.tables()
    H, warm = _windows(config)
    fair = config.fairness
    stochastic = config.arrivals.kind == STOCHASTIC
    if config.policy == "proposed":
        policy = ProposedPolicy(params, fair, config.arrivals)
        decide = lambda state, h, t, dem: policy.decide(state, h, dem)  # noqa: E731
    else:
        policy = StaticPolicy(config.static_table, seed=config.seed)
        decide = lambda state, h, t, dem: policy.decide(h, t)  # noqa: E731
    state = QueueState.empty(K)
    ledger = DeliveryLedger(K, params.bits_per_file)
    member = tables.membership_f
    mu_w = np.zeros(tables.n)
    S_w, Q_w, U_w = np.zeros(K), np.zeros(tables.n), np.zeros(K)
    drained_at_warm = np.zeros(K)
    traj = {"t": [], "S": [], "Q": [], "Q_total": [], "U": [], "backlog": []}
    channel = config.channel
    for t0 in range(0, H, _BLOCK):
        n = min(_BLOCK, H - t0)
        hb = channel.sample_block(t0, n)
        db = config.arrivals.sample_block(config.seed, t0, n) if stochastic else None
        for i in range(n):
            t = t0 + i
            if t == warm:
                drained_at_warm = ledger.drained_bits.copy()
            dec = decide(state, hb[i], t, db[i] if stochastic else None)
            res = apply_slot(state, dec, params, check=False)
            ledger_update(ledger, res.served, dec.a, res.combined, tables)
            if t >= warm:
                mu_w += dec.mu
                S_w += state.S
                Q_w += state.Q
                U_w += state.U
            if config.sample_every and t % config.sample_every == 0:
                traj["t"].append(t)
                traj["S"].append(state.S.copy())
                traj["Q"].append(state.Q.copy())
                traj["Q_total"].append(state.Q.sum())
                traj["U"].append(state.U.copy())
                traj["backlog"].append(state.lyapunov_backlog(F))
            state = res.state
    measured = H - warm
    drained_w = ledger.drained_bits - drained_at_warm
    if drain:
        state = _drain(config, policy, decide, state, ledger, tables, max_drain_slots)
    rates = drained_w / (measured * params.bits_per_file)
    avg_S, avg_Q, avg_U = S_w.sum() / measured, Q_w.sum() / measured, U_w.sum() / measured
    m = RunMetrics(
        scheme=config.policy,
        K=K,
        alpha=fair.alpha,
        V=fair.V,
        seed=config.seed,
        rates=rates,
        offered_rates=params.T_slot * (mu_w @ member) / (measured * params.bits_per_file),
        utility=float(np.sum(g_utility(rates, fair.alpha, fair.d))),
        avg_S=avg_S,
        avg_Q_total=avg_Q,
        avg_U=avg_U,
        avg_backlog=avg_S + avg_U + avg_Q / F**2,
        B_est=float("nan"),
        admitted=ledger.admitted_files.copy(),
        combined=ledger.combined_files.copy(),
        delivered=ledger.delivered_files,
        slots=ledger.t,
        measured_slots=measured,
        final_state=state,
    )
    if config.sample_every:
        m.trajectories = {k: np.array(v) for k, v in traj.items()}
    return m


def _run_compiled(config):
    from ._kernel import proposed_block

    params = config.params
    K, F = params.K, params.F
    tables = params.tables()
    n = tables.n
    H, warm = _windows(config)
    fair = config.fairness
    stochastic = config.arrivals.kind == STOCHASTIC
    ProposedPolicy(params, fair, config.arrivals)  # argument checks
    S, Q, U = np.zeros(K), np.zeros(n), np.zeros(K)
    drained, admitted, combined, drained_warm = (np.zeros(K) for _ in range(4))
    mu_w, S_w, Q_w, U_w = np.zeros(n), np.zeros(K), np.zeros(n), np.zeros(K)
    every = int(config.sample_every)
    n_tr = (H + every - 1) // every if every else 0
    tr_t = np.zeros(n_tr, dtype=np.int64)
    tr_S, tr_U = np.zeros((n_tr, K)), np.zeros((n_tr, K))
    tr_Q, tr_B = np.zeros((n_tr, n)), np.zeros(n_tr)
    tr_n = np.zeros(1, dtype=np.int64)
    pop = np.ascontiguousarray(tables._card, dtype=np.int64)
    bits = np.ascontiguousarray(tables.bits, dtype=float)
    no_dem = np.zeros((0, K))
    channel = config.channel
    for t0 in range(0, H, _BLOCK):
        nb = min(_BLOCK, H - t0)
        hb = channel.sample_block(t0, nb)
        db = config.arrivals.sample_block(config.seed, t0, nb) if stochastic else no_dem
        proposed_block(S, Q, U, hb, db, stochastic, t0, warm, every,
                       bits, pop, float(F), float(params.T_slot), float(params.P),
                       float(fair.alpha), float(fair.d), float(fair.V),
                       float(fair.gamma_max), float(fair.sigma_max),
                       drained, admitted, combined, drained_warm,
                       mu_w, S_w, Q_w, U_w, tr_t, tr_S, tr_Q, tr_U, tr_B, tr_n)
    if warm == 0:
        drained_warm[:] = 0.0
    measured = H - warm
    rates = (drained - drained_warm) / (measured * params.bits_per_file)
    avg_S, avg_Q, avg_U = S_w.sum() / measured, Q_w.sum() / measured, U_w.sum() / measured
    m = RunMetrics(
        scheme=config.policy,
        K=K,
        alpha=fair.alpha,
        V=fair.V,
        seed=config.seed,
        rates=rates,
        offered_rates=params.T_slot * (mu_w @ tables.membership_f) / (measured * params.bits_per_file),
        utility=float(np.sum(g_utility(rates, fair.alpha, fair.d))),
        avg_S=avg_S,
        avg_Q_total=avg_Q,
        avg_U=avg_U,
        avg_backlog=avg_S + avg_U + avg_Q / F**2,
        B_est=float("nan"),
        admitted=admitted,
        combined=combined,
        delivered=drained / params.bits_per_file,
        slots=H,
        measured_slots=measured,
        final_state=QueueState(S, Q, U),
    )
    if every:
        m.trajectories = {"t": tr_t, "S": tr_S, "Q": tr_Q, "Q_total": tr_Q.sum(axis=1), "U": tr_U, "backlog": tr_B}
    return m


def _drain(config, policy, decide, state, ledger, tables, max_slots):
    params = config.params
    K = params.K
    channel = config.channel
    t = int(config.horizon)
    tol = 1e-9
    zero = np.zeros(K)
    while state.S.sum() + state.Q.sum() / params.F > tol:
        if t - config.horizon > max_slots:
            raise RuntimeError("queues did not drain")
        h = channel.sample(t)
        dec = decide(state, h, t, zero)
        dec.a = zero
        dec.gamma = zero
        res = apply_slot(state, dec, params, check=False)
        ledger_update(ledger, res.served, dec.a, res.combined, tables)
        state = res.state
        t += 1
    return state


def derive_seed(base_seed, axis, value):
    """Seed for one sweep point; depends on the point, not on its position."""
    tag = zlib.crc32(f"{axis}={value!r}".encode())
    return int(np.random.SeedSequence([base_seed, tag]).generate_state(1, np.uint64)[0] >> np.uint64(1))


def sweep_configs(base, axis, values):
    if axis not in SWEEP_AXES:
        raise ConfigError(f"unknown sweep axis {axis!r}")
    values = list(values)
    if not values:
        raise ConfigError("sweep needs at least one value")
    out = []
    for v in values:
        if axis == "K":
            cfg = base.with_K(int(v))
        elif axis == "V":
            cfg = base.replace(fairness=dataclasses.replace(base.fairness, V=float(v)))
        else:
            cfg = base.replace(fairness=dataclasses.replace(base.fairness, alpha=float(v)))
        out.append(cfg.replace(seed=derive_seed(base.seed, axis, v)).validate())
    return out


def sweep(base, axis, values, workers=1):
    """Independent runs along one axis (``"K"``, ``"V"`` or ``"alpha"``)."""
    configs = sweep_configs(base, axis, values)
    return run_many(configs, workers)


def run_many(configs, workers=1):
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run, configs))
    return [run(c) for c in configs]
