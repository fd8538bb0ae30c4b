"""
End-to-end acceptance checks, one test per criterion.

Every test records a single ``PASS``/``FAIL`` line through the
``criterion`` fixture; the lines are printed at the end of the session.
Run alone with::

    pytest tests/test_acceptance.py
"""

import time

import numpy as np
import pytest

from faircc.channel import DETERMINISTIC, ChannelModel, two_class_gains
from faircc.checks import normalization_errors, wsr_oracle_errors
from faircc.cli import main
from faircc.combinatorics import standard_cc_load
from faircc.config import preset
from faircc.engine import RunConfig, run
from faircc.params import SystemParams
from faircc.policies import FairnessConfig, max_admission_scale, standard_cc_rate, static_table

def _slope(y):
    return np.polyfit(np.arange(len(y), dtype=float), y, 1)[0]


def test_c1_unicast_anchor(criterion):
    t0 = time.perf_counter()
    got = {}
    for K in (2, 6, 10):
        cfg = preset("det_two_class", K, fairness=FairnessConfig(alpha=0.0), policy="unicast_opp", horizon=100_000)
        got[K] = run(cfg).sum_rate
    dt = time.perf_counter() - t0
    err = max(abs(r - 0.865) / 0.865 for r in got.values())
    rates = ", ".join(f"K={K} {r:.4f}" for K, r in got.items())
    criterion("C1 unicast anchor 0.865 file/slot +-1%", err <= 0.01 and dt < 10,
           f"{rates}; worst rel. error {err:.2%}; {dt:.1f} s")


def test_c2_standard_cc_linear(criterion):
    t0 = time.perf_counter()
    Ks = np.arange(2, 11)
    analytic, simulated = [], []
    for K in Ks:
        p = SystemParams(int(K))
        # the common message goes at the weakest user's rate
        per_user = p.T_slot * np.log2(3.0) / (standard_cc_load(int(K), 0.6) * p.F)
        ch = ChannelModel(DETERMINISTIC, two_class_gains(int(K)))
        assert standard_cc_rate(p, ch).rate == pytest.approx(per_user, rel=1e-12)
        analytic.append(K * per_user)
        cfg = preset("det_two_class", int(K), policy="standard_cc", horizon=100_000)
        simulated.append(run(cfg).sum_rate)
    dt = time.perf_counter() - t0
    analytic, simulated = np.array(analytic), np.array(simulated)
    err = np.max(np.abs(simulated - analytic) / analytic)
    fit = np.polyfit(Ks, simulated, 1)
    resid = simulated - np.polyval(fit, Ks)
    r2 = 1 - resid @ resid / np.sum((simulated - simulated.mean()) ** 2)
    ok = err <= 0.02 and r2 >= 0.99 and fit[0] > 0 and dt < 30
    criterion("C2 standard CC sum rate linear in K", ok,
           f"K=2..10 sim vs analytic worst {err:.2%}; slope {fit[0]:.4f}/user, R^2 {r2:.4f}; {dt:.1f} s")


def test_c3_wsr_oracle(criterion):
    t0 = time.perf_counter()
    errs, slack = wsr_oracle_errors(1000, seed=0)
    dt = time.perf_counter() - t0
    ok = errs.max() <= 1e-3 and slack <= 1e-9 and dt < 60
    criterion("C3 weighted sum rate vs grid oracle", ok,
           f"1000 instances K=2..4, max rel. error {errs.max():.2e}, max slack {slack:.1e}; {dt:.1f} s")


def test_c4_normalization(criterion):
    worst = normalization_errors()
    ok = max(worst.values()) <= 1e-12
    criterion("C4 normalization identities", ok,
           ", ".join(f"{k} {v:.1e}" for k, v in worst.items()) + " (K<=12, m=0.1..0.9)")


def test_c5_V_sweep_trend(criterion):
    t0 = time.perf_counter()
    Vs = (10.0, 100.0, 1000.0, 10_000.0)
    F = SystemParams(4).F
    util, util_se, queue = [], [], []
    for V in Vs:
        ms = [run(preset("sym_fading", 4, fairness=FairnessConfig(alpha=1.0, V=V), horizon=1_000_000, seed=s))
              for s in range(5)]
        u = np.array([m.utility for m in ms])
        util.append(u.mean())
        util_se.append(u.std(ddof=1) / np.sqrt(u.size))
        # actual queues in files: user queues plus codeword queues
        queue.append(np.mean([m.avg_S + m.avg_Q_total / F for m in ms]))
    dt = time.perf_counter() - t0
    u_ok = all(util[i + 1] >= util[i] - max(util_se[i], util_se[i + 1]) for i in range(3))
    q_ok = all(queue[i + 1] > queue[i] for i in range(3))
    ratio = queue[3] / queue[1]
    ok = u_ok and q_ok and 10 <= ratio <= 1000 and dt < 300
    criterion("C5 V sweep: utility up, queues O(V)", ok,
           "utility " + ", ".join(f"{u:.4f}" for u in util)
           + f"; queue {', '.join(f'{q:.3g}' for q in queue)} files; ratio(1e4/1e2) {ratio:.1f}; {dt:.0f} s")


def test_c6_dominance(criterion):
    t0 = time.perf_counter()
    bad = []
    for scenario in ("sym_fading", "two_class_fading"):
        for K in (4, 6, 8):
            for alpha in (0.0, 1.0):
                vals = []
                for policy in ("proposed", "unicast_opp", "standard_cc"):
                    cfg = preset(scenario, K, fairness=FairnessConfig(alpha=alpha), policy=policy,
                                 horizon=100_000, seed=1)
                    m = run(cfg)
                    vals.append(m.sum_rate if alpha == 0 else m.utility)
                if vals[0] < max(vals[1:]):
                    bad.append(f"{scenario} K={K} alpha={alpha:g}: {np.round(vals, 4).tolist()}")
    dt = time.perf_counter() - t0
    criterion("C6 proposed dominates both baselines", not bad and dt < 300,
           ("12/12 cells" if not bad else "; ".join(bad)) + f"; {dt:.0f} s")


def test_c7_stability_witness(criterion):
    p = SystemParams(2)
    h, direction = (1.0, 0.2), (1.0, 1.0)
    point = max_admission_scale(p, h, direction, sigma_max=10)
    slopes = {}
    for factor in (0.8, 1.2):
        cfg = RunConfig(p, DETERMINISTIC, h, policy="static", static_table=static_table(point, h, direction, factor),
                        horizon=40_000, sample_every=1, seed=0)
        tr = run(cfg).trajectories
        half = tr["t"].size // 2
        # user queues in files and codeword queues converted to files
        ys = np.column_stack([tr["S"][half:], tr["Q"][half:] / p.F])
        slopes[factor] = max(_slope(ys[:, j]) for j in range(ys.shape[1]))
    ok = slopes[0.8] < 1e-4 and slopes[1.2] > 1e-2
    criterion("C7 stability region witness", ok,
           f"boundary {point.scale:.4f} file/slot/user; max second-half slope 0.8x {slopes[0.8]:.1e}, "
           f"1.2x {slopes[1.2]:.1e} per slot")


def test_c8_symmetry(criterion):
    m = run(preset("sym_fading", 4, fairness=FairnessConfig(alpha=10.0), horizon=100_000, seed=0))
    spread = (m.rates.max() - m.rates.min()) / m.rates.mean()
    criterion("C8 max-min symmetry", spread <= 0.03,
           f"rates {np.round(m.rates, 4).tolist()}, spread {spread:.2%}")


def test_c9_determinism(criterion, tmp_path):
    args = ["compare", "--scenario", "sym_fading", "--K", "4", "--alpha", "1", "--horizon", "5000", "--seed", "42"]
    for d in ("a", "b"):
        assert main([*args, "--output-dir", str(tmp_path / d)]) == 0
    names = ("compare.csv", "compare_summary.csv")
    same = all((tmp_path / "a" / n).read_bytes() == (tmp_path / "b" / n).read_bytes() for n in names)
    criterion("C9 bit-identical compare output", same, f"{', '.join(names)} {'identical' if same else 'differ'}")
