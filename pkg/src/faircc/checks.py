"""
Self-checks run by ``faircc check``: closed-form identities, the weighted
sum rate solver against a grid search, and the compiled slot loop
against the numpy reference.
"""

import math
from dataclasses import dataclass

import numpy as np

from .bc_capacity import capacity_slack, reduce_weights, solve_wsr, wsr_bruteforce
from .combinatorics import CacheParams, SubsetTables, standard_cc_load, subfile_size
from .policies import FairnessConfig, gamma_opt

M_GRID = tuple(round(0.1 * i, 1) for i in range(1, 10))


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str

    def line(self):
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.detail}"


def normalization_errors(K_values=range(1, 13), m_values=M_GRID):
    """Worst absolute errors of the three sum identities, relative to ``F``.

    Returns
    -------
    dict
        ``subfiles``: sum of all sub-file sizes vs ``F``;
        ``codewords``: per-user bits of one combination vs ``(1 - m) F``;
        ``load``: binomial sum of the round vs the closed-form load.
    """
    worst = {"subfiles": 0.0, "codewords": 0.0, "load": 0.0}
    F = 1000.0
    for K in K_values:
        for m in m_values:
            p = CacheParams(K, m, F)
            total = sum(math.comb(K, s) * subfile_size(s, p) for s in range(K + 1))
            worst["subfiles"] = max(worst["subfiles"], abs(total - F) / F)
            rnd = sum(math.comb(K, j) * subfile_size(j - 1, p) for j in range(1, K + 1)) / F
            worst["load"] = max(worst["load"], abs(rnd - standard_cc_load(K, m)))
            tables = SubsetTables(p)
            target = (1.0 - m) * F
            for k in range(K):
                got = tables.subset_bit_load(tables.membership_f[:, k])
                err = np.abs(got[tables.membership[:, k]] - target).max() / F
                worst["codewords"] = max(worst["codewords"], float(err))
    return worst


def random_wsr_instance(rng):
    K = int(rng.integers(2, 5))
    n = (1 << K) - 1
    theta = rng.exponential(1.0, n) * (rng.random(n) < 0.7)
    h = rng.exponential(1.0, K)
    P = float(rng.uniform(0.5, 20.0))
    return theta, h, P


def wsr_oracle_errors(n_instances=1000, seed=0):
    """Relative errors of ``solve_wsr`` against ``wsr_bruteforce`` and worst capacity slack."""
    rng = np.random.default_rng(seed)
    errs, slack = [], -np.inf
    for _ in range(n_instances):
        theta, h, P = random_wsr_instance(rng)
        alloc = solve_wsr(theta, h, P)
        ref = wsr_bruteforce(theta, h, P)
        errs.append(abs(alloc.wsr - ref) / ref if ref > 0 else abs(alloc.wsr))
        slack = max(slack, capacity_slack(alloc.mu, alloc.p_user, h))
    return np.array(errs), slack


def kernel_agreement(K=3, horizon=2000, seed=5):
    """Largest relative difference between compiled and reference runs of the proposed policy."""
    from .config import preset
    from .engine import run

    cfg = preset("sym_fading", K, fairness=FairnessConfig(alpha=1.0, V=100.0), horizon=horizon, seed=seed)
    a, b = run(cfg), run(cfg, reference=True)
    worst = 0.0
    for f in ("rates", "avg_S", "avg_Q_total", "avg_U", "admitted", "combined"):
        x, y = np.asarray(getattr(a, f), float), np.asarray(getattr(b, f), float)
        worst = max(worst, float(np.max(np.abs(x - y) / np.maximum(np.abs(y), 1e-9))))
    return worst


def run_checks(quick=False):
    """All self-checks; ``quick`` shrinks the random suites."""
    out = []
    norm = normalization_errors()
    for key, label in (("subfiles", "sub-file sizes sum to F"),
                       ("codewords", "combination bits per member sum to (1-m)F"),
                       ("load", "round load matches closed form")):
        out.append(CheckResult(label, norm[key] <= 1e-12, f"worst error {norm[key]:.2e} (K<=12, m=0.1..0.9)"))

    r = reduce_weights({1: 1.0, 2: 3.0, 3: 2.0}, [1.0, 0.5])
    ok = np.allclose(r.theta_tilde, [1, 3]) and list(r.argsubset) == [1, 2]
    out.append(CheckResult("layer weights, worked example", ok, f"theta~={r.theta_tilde.tolist()}"))

    n = 200 if quick else 1000
    errs, slack = wsr_oracle_errors(n)
    out.append(CheckResult("weighted sum rate vs grid search", errs.max() <= 1e-3,
                           f"max rel. error {errs.max():.2e} over {n} instances"))
    out.append(CheckResult("solver output inside capacity region", slack <= 1e-9, f"max slack {slack:.2e}"))

    cfg = FairnessConfig(alpha=1.0, d=0.1, V=10.0, gamma_max=5.0)
    x = np.arange(0.0, 5.0 + 1e-12, 1e-4)
    grid = x[np.argmax(10.0 * np.log1p(x / 0.1) - 5.0 * x)]
    g = float(gamma_opt(5.0, cfg))
    out.append(CheckResult("virtual arrival maximizer vs grid", abs(g - grid) <= 1e-4, f"{g:.6f} vs {grid:.6f}"))

    diff = kernel_agreement(horizon=500 if quick else 2000)
    out.append(CheckResult("compiled slot loop matches reference", diff <= 1e-9, f"max rel. diff {diff:.2e}"))
    return out
