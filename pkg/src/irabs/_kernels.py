"""Numba kernels over the flat preorder tree arrays."""
from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def aggregate_errors(roots, ends, owner, ptr, cidx, echance, leaf_r, leaf_0, leaf_ub, R, S0, UB):
    """Per-root (reward error, summed leaf-probability error, ū) over each subtree.

    Reward error: σ₀-weighted sum at nature, max at player nodes. Probability
    error: plain sum over nature branches, max at player nodes. ū: max.
    """
    out = np.empty((len(roots), 3))
    for k in range(len(roots)):
        s = roots[k]
        for n in range(ends[k] - 1, s - 1, -1):
            o = owner[n]
            if o == -1:
                R[n] = leaf_r[n]
                S0[n] = leaf_0[n]
                UB[n] = leaf_ub[n]
            elif o == 0:
                r = 0.0
                t = 0.0
                u = -np.inf
                for j in range(ptr[n], ptr[n + 1]):
                    c = cidx[j]
                    r += echance[c] * R[c]
                    t += S0[c]
                    if UB[c] > u:
                        u = UB[c]
                R[n] = r
                S0[n] = t
                UB[n] = u
            else:
                r = -np.inf
                t = -np.inf
                u = -np.inf
                for j in range(ptr[n], ptr[n + 1]):
                    c = cidx[j]
                    if R[c] > r:
                        r = R[c]
                    if S0[c] > t:
                        t = S0[c]
                    if UB[c] > u:
                        u = UB[c]
                R[n] = r
                S0[n] = t
                UB[n] = u
        out[k, 0] = R[s]
        out[k, 1] = S0[s]
        out[k, 2] = UB[s]
    return out


@njit(cache=True)
def cfr_pass(player, owner, ptr, cidx, echance, node_iset, offset, utils, sigma,
             regret, strat_sum, reach_own, reach_opp, value, weight):
    """One vanilla CFR traversal updating ``player``'s regrets and average weights.

    ``weight`` scales the contribution to the average strategy (1 for plain CFR).
    """
    n_nodes = len(owner)
    reach_own[0] = 1.0
    reach_opp[0] = 1.0
    for n in range(n_nodes):
        o = owner[n]
        if o == -1:
            continue
        for j in range(ptr[n], ptr[n + 1]):
            c = cidx[j]
            if o == 0:
                reach_own[c] = reach_own[n]
                reach_opp[c] = reach_opp[n] * echance[c]
            else:
                p = sigma[offset[node_iset[n]] + j - ptr[n]]
                if o == player:
                    reach_own[c] = reach_own[n] * p
                    reach_opp[c] = reach_opp[n]
                else:
                    reach_own[c] = reach_own[n]
                    reach_opp[c] = reach_opp[n] * p
    for n in range(n_nodes - 1, -1, -1):
        o = owner[n]
        if o == -1:
            value[n] = utils[n, player - 1]
        elif o == 0:
            v = 0.0
            for j in range(ptr[n], ptr[n + 1]):
                c = cidx[j]
                v += echance[c] * value[c]
            value[n] = v
        else:
            base = offset[node_iset[n]]
            v = 0.0
            for j in range(ptr[n], ptr[n + 1]):
                v += sigma[base + j - ptr[n]] * value[cidx[j]]
            value[n] = v
            if o == player:
                ro = reach_opp[n]
                rw = reach_own[n] * weight
                for j in range(ptr[n], ptr[n + 1]):
                    a = base + j - ptr[n]
                    regret[a] += ro * (value[cidx[j]] - v)
                    strat_sum[a] += rw * sigma[a]


@njit(cache=True)
def regret_matching(regret, sigma, offset, iset_owner, player):
    for k in range(len(offset) - 1):
        if iset_owner[k] != player:
            continue
        lo = offset[k]
        hi = offset[k + 1]
        tot = 0.0
        for a in range(lo, hi):
            if regret[a] > 0:
                tot += regret[a]
        if tot > 0:
            for a in range(lo, hi):
                sigma[a] = regret[a] / tot if regret[a] > 0 else 0.0
        else:
            for a in range(lo, hi):
                sigma[a] = 1.0 / (hi - lo)


@njit(cache=True)
def agnostic_dp(owner, ptr, cidx, echance, costs):
    """Value at the root of: nature averages, players maximize, costs add per node."""
    n_nodes = len(owner)
    L = np.zeros(n_nodes)
    for n in range(n_nodes - 1, -1, -1):
        o = owner[n]
        if o == -1:
            L[n] = costs[n]
            continue
        if o == 0:
            v = 0.0
            for j in range(ptr[n], ptr[n + 1]):
                v += echance[cidx[j]] * L[cidx[j]]
        else:
            v = -np.inf
            for j in range(ptr[n], ptr[n + 1]):
                if L[cidx[j]] > v:
                    v = L[cidx[j]]
        L[n] = v + costs[n]
    return L[0]


@njit(cache=True)
def _partial_lb(kind, D, W, assign, j0, used, k, cost_x):
    """Lower bound on the cost still to be added by items j0.. (weighted kind)."""
    n = D.shape[0]
    if kind != 1:
        return 0.0
    rem = n - j0
    free = k - used
    forced = rem - free
    if forced <= 0:
        return 0.0
    vals = np.empty(rem)
    for u in range(j0, n):
        best = np.inf
        for c in range(used):
            m = 0.0
            for x in range(j0):
                if assign[x] == c and D[u, x] > m:
                    m = D[u, x]
            if m < best:
                best = m
        for v in range(j0, n):
            if v != u and D[u, v] < best:
                best = D[u, v]
        vals[u - j0] = W[u] * best
    vals.sort()
    return vals[:forced].sum()


@njit(cache=True)
def branch_and_bound(kind, D, W, k, incumbent, inc_assign):
    """Exact partition of items into at most k clusters.

    kind 0: minimize the maximum cluster diameter (D symmetric).
    kind 1: minimize Σ_x W[x]·max_{y∈C(x)} D[x, y] (D may be asymmetric).
    Items are assigned in index order; cluster ids are canonical (a new
    cluster gets the next id) so each partition is visited once.
    """
    n = D.shape[0]
    best = incumbent
    best_assign = inc_assign.copy()
    assign = -np.ones(n, dtype=np.int64)
    choice = np.zeros(n + 1, dtype=np.int64)
    used = np.zeros(n + 1, dtype=np.int64)
    obj = np.zeros(n + 1)
    cost = np.zeros((n + 1, n))      # per-item current cost (weighted)
    diam = np.zeros((n + 1, k))      # per-cluster diameter (diameter)
    depth = 0
    while depth >= 0:
        if depth == n:
            if obj[n] < best - 1e-12:
                best = obj[n]
                best_assign[:] = assign
            depth -= 1
            continue
        opt = choice[depth]
        limit = used[depth] + 1 if used[depth] < k else used[depth]
        if opt >= limit:
            choice[depth] = 0
            assign[depth] = -1
            depth -= 1
            continue
        choice[depth] = opt + 1
        j = depth
        c = opt
        # evaluate placing item j in cluster c
        if kind == 0:
            m = diam[depth, c] if c < used[depth] else 0.0
            for x in range(j):
                if assign[x] == c and D[j, x] > m:
                    m = D[j, x]
            new_obj = obj[depth] if obj[depth] > m else m
            if new_obj >= best - 1e-12:
                continue
            diam[depth + 1, :] = diam[depth, :]
            diam[depth + 1, c] = m
        else:
            cost[depth + 1, :] = cost[depth, :]
            own = 0.0
            add = 0.0
            for x in range(j):
                if assign[x] == c:
                    if D[j, x] > own:
                        own = D[j, x]
                    if D[x, j] > cost[depth, x]:
                        add += W[x] * (D[x, j] - cost[depth, x])
                        cost[depth + 1, x] = D[x, j]
            cost[depth + 1, j] = own
            new_obj = obj[depth] + add + W[j] * own
            if new_obj >= best - 1e-12:
                continue
        assign[j] = c
        nu = used[depth] + 1 if c == used[depth] else used[depth]
        if kind == 1:
            lb = _partial_lb(kind, D, W, assign, j + 1, nu, k, cost[depth + 1])
            if new_obj + lb >= best - 1e-12:
                assign[j] = -1
                continue
        obj[depth + 1] = new_obj
        used[depth + 1] = nu
        depth += 1
        choice[depth] = 0
    return best, best_assign
