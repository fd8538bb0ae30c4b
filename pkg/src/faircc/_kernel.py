"""
Compiled slot loop for the proposed policy.

Implements the same decisions and queue update as ``ProposedPolicy.decide``
followed by ``apply_slot`` and ``ledger_update``; the numpy path stays the
reference and the test-suite checks the two against each other. Subsets
are walked with submask enumeration, so the cost per slot is ``O(3**K)``.
"""

import math

import numpy as np
from numba import njit

_EPS = 1e-12
_TIE_RTOL = 1e-12
_LN2 = math.log(2.0)


@njit(cache=True)
def _gamma(u, alpha, d, V, gmax):
    if u <= 0.0:
        return gmax
    if alpha == 0.0:
        return gmax if u < V else 0.0
    if alpha == 1.0:
        x = V / u - d
    else:
        x = (V / u) ** (1.0 / alpha) - d
    return min(max(x, 0.0), gmax)


@njit(cache=True)
def _wsr(Q, h, P, K, pop, mu, order, pos, theta_t, arg, c, p, live):
    n = Q.size
    # stable insertion sort by decreasing gain
    for k in range(K):
        order[k] = k
    for i in range(1, K):
        x = order[i]
        j = i - 1
        while j >= 0 and h[order[j]] < h[x]:
            order[j + 1] = order[j]
            j -= 1
        order[j + 1] = x
    for i in range(K):
        pos[order[i]] = i
        theta_t[i] = -1.0
        arg[i] = 0
    for mask in range(1, n + 1):
        lay = -1
        for k in range(K):
            if (mask >> k) & 1 and pos[k] > lay:
                lay = pos[k]
        th = Q[mask - 1]
        if th > theta_t[lay] or (th == theta_t[lay] and pop[mask] > pop[arg[lay]]):
            theta_t[lay] = th
            arg[lay] = mask
    for i in range(K):
        hk = h[order[i]]
        c[i] = 1.0 / hk if hk > 0.0 else math.inf
        p[i] = 0.0
    nl = 0
    for i in range(K):
        if theta_t[i] > 0.0 and c[i] < math.inf:
            live[nl] = i
            nl += 1
    if nl > 0 and P > 0.0:
        top = -1.0
        for i in range(nl):
            v = theta_t[live[i]] / c[live[i]]
            if v > top:
                top = v
        cur = 0
        for i in range(nl):
            if theta_t[live[i]] / c[live[i]] >= top * (1.0 - _TIE_RTOL):
                cur = i
                break
        z = 0.0
        ztol = _TIE_RTOL * max(1.0, P)
        while True:
            wc = theta_t[live[cur]]
            cc = c[live[cur]]
            nxt = math.inf
            best = -1
            for j in range(nl):
                wj = theta_t[live[j]]
                if wj <= wc * (1.0 + _TIE_RTOL):
                    continue
                zc = max((wc * c[live[j]] - wj * cc) / (wj - wc), z)
                if zc < nxt - ztol or (zc <= nxt + ztol and wj > theta_t[live[best]]):
                    nxt = min(zc, nxt)
                    best = j
            if best < 0 or nxt >= P:
                p[live[cur]] += P - z
                break
            if nxt > z:
                p[live[cur]] += nxt - z
            cur = best
            z = nxt
    for i in range(n):
        mu[i] = 0.0
    Z = 0.0
    for i in range(K):
        hk = h[order[i]]
        Zp = Z
        Z = Z + p[i]
        mu[arg[i] - 1] = (math.log1p(hk * Z) - math.log1p(hk * Zp)) / _LN2


@njit(cache=True)
def proposed_block(S, Q, U, hb, db, use_dem, t0, warm, sample_every,
                   bits, pop, F, T, P, alpha, d, V, gmax, smax,
                   drained, admitted, combined, drained_warm,
                   mu_w, S_w, Q_w, U_w,
                   tr_t, tr_S, tr_Q, tr_U, tr_B, tr_n):
    """Advance the state arrays (modified in place) through ``hb.shape[0]`` slots."""
    K = S.size
    n = Q.size
    F2 = F * F
    a = np.zeros(K)
    gam = np.zeros(K)
    score = np.zeros(n)
    sig = np.zeros(n)
    mu = np.zeros(n)
    arr = np.zeros(n)
    avail = np.zeros(K)
    used = np.zeros(K)
    req = np.zeros(n, dtype=np.int64)
    order = np.zeros(K, dtype=np.int64)
    pos = np.zeros(K, dtype=np.int64)
    theta_t = np.zeros(K)
    arg = np.zeros(K, dtype=np.int64)
    c = np.zeros(K)
    p = np.zeros(K)
    live = np.zeros(K, dtype=np.int64)
    for i in range(hb.shape[0]):
        t = t0 + i
        if t == warm:
            drained_warm[:] = drained
        if sample_every > 0 and t % sample_every == 0:
            j = tr_n[0]
            tr_t[j] = t
            qs = 0.0
            for x in range(n):
                qs += Q[x]
                tr_Q[j, x] = Q[x]
            bl = qs / F2
            for k in range(K):
                tr_S[j, k] = S[k]
                tr_U[j, k] = U[k]
                bl += S[k] + U[k]
            tr_B[j] = bl
            tr_n[0] = j + 1
        h = hb[i]
        # admission and virtual arrivals
        for k in range(K):
            gam[k] = _gamma(U[k], alpha, d, V, gmax)
            if U[k] >= S[k]:
                a[k] = db[i, k] if use_dem else gmax
            else:
                a[k] = 0.0
        # routing backpressure
        nreq = 0
        for J in range(1, n + 1):
            s = 0.0
            for k in range(K):
                if (J >> k) & 1:
                    s += S[k]
            load = 0.0
            bj = pop[J]
            I = J
            while I > 0:
                load += bits[bj, pop[I]] * Q[I - 1]
                I = (I - 1) & J
            score[J - 1] = s - load / F2
            if score[J - 1] > 0.0:
                sig[J - 1] = smax
                req[nreq] = J - 1
                nreq += 1
            else:
                sig[J - 1] = 0.0
        # cap combinations by waiting files
        short = False
        for k in range(K):
            used[k] = 0.0
        for r in range(nreq):
            J = req[r] + 1
            for k in range(K):
                if (J >> k) & 1:
                    used[k] += smax
        for k in range(K):
            if used[k] > S[k] + _EPS:
                short = True
        if short:
            ids = req[:nreq]
            ids = ids[np.argsort(-score[ids], kind="mergesort")]
            exhausted = 0
            for k in range(K):
                avail[k] = S[k]
                if S[k] <= 0.0:
                    exhausted |= 1 << k
            for r in range(n):
                sig[r] = 0.0
            for r in range(nreq):
                j = ids[r]
                J = j + 1
                if J & exhausted:
                    continue
                x = smax
                for k in range(K):
                    if (J >> k) & 1 and avail[k] < x:
                        x = avail[k]
                if x <= 0.0:
                    continue
                sig[j] = x
                for k in range(K):
                    if (J >> k) & 1:
                        avail[k] -= x
                        if avail[k] <= _EPS:
                            avail[k] = 0.0
                            exhausted |= 1 << k
        # scheduling
        _wsr(Q, h, P, K, pop, mu, order, pos, theta_t, arg, c, p, live)
        # queue update
        for k in range(K):
            used[k] = 0.0
        for I in range(1, n + 1):
            arr[I - 1] = 0.0
        for J in range(1, n + 1):
            x = sig[J - 1]
            if x <= 0.0:
                continue
            bj = pop[J]
            for k in range(K):
                if (J >> k) & 1:
                    used[k] += x
            I = J
            while I > 0:
                arr[I - 1] += x * bits[bj, pop[I]]
                I = (I - 1) & J
        measure = t >= warm
        for k in range(K):
            if measure:
                S_w[k] += S[k]
                U_w[k] += U[k]
            combined[k] += used[k]
            admitted[k] += a[k]
            S[k] = max(S[k] - used[k], 0.0) + a[k]
            U[k] = max(U[k] - a[k], 0.0) + gam[k]
        for I in range(1, n + 1):
            q = Q[I - 1]
            if measure:
                Q_w[I - 1] += q
                mu_w[I - 1] += mu[I - 1]
            served = min(q, T * mu[I - 1])
            if served > 0.0:
                for k in range(K):
                    if (I >> k) & 1:
                        drained[k] += served
            Q[I - 1] = max(q - served + arr[I - 1], 0.0)
