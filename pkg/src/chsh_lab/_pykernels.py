"""Pure-Python kernels: reference implementation of the hot loops.

Mirrors chsh_lab._core exactly. Every kernel consumes pre-drawn uniform
variates in a fixed column order (documented in chsh_lab.trials.simulate)
so the compiled and pure-Python backends produce bit-identical output for
the same inputs. Keep the arithmetic in the two implementations in
lockstep: same operations, same order.
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "pure-python"


def sim_deterministic(u, r1a, r1ap, r2b, r2bp):
    """Trials for a deterministic responder. u columns: (a, b)."""
    a_out, b_out, d1_out, d2_out = [], [], [], []
    for ua, ub in u.tolist():
        ac = 0 if ua < 0.5 else 1
        bc = 0 if ub < 0.5 else 1
        a_out.append(ac)
        b_out.append(bc)
        d1_out.append(r1a if ac == 0 else r1ap)
        d2_out.append(r2b if bc == 0 else r2bp)
    return _pack(a_out, b_out, d1_out, d2_out)


def sim_quantum(u, e_ab, e_apb, e_abp, e_apbp):
    """Trials from the four-correlator sampler. u columns: (a, b, d1, flip)."""
    corr = ((e_ab, e_abp), (e_apb, e_apbp))  # corr[acode][bcode]
    a_out, b_out, d1_out, d2_out = [], [], [], []
    for ua, ub, ud1, uflip in u.tolist():
        ac = 0 if ua < 0.5 else 1
        bc = 0 if ub < 0.5 else 1
        d1 = 1 if ud1 < 0.5 else -1
        p_same = (1.0 + corr[ac][bc]) / 2.0
        d2 = d1 if uflip < p_same else -d1
        a_out.append(ac)
        b_out.append(bc)
        d1_out.append(d1)
        d2_out.append(d2)
    return _pack(a_out, b_out, d1_out, d2_out)


def sim_finite_local(u, cumw, p1, p2):
    """Trials from a finite hidden-value mixture.

    u columns: (a, b, lambda, d1, d2). cumw is the cumulative weight
    vector; p1[l][s] / p2[l][s] give P(outcome=+1 | value l, setting s).
    """
    cumw_l = cumw.tolist()
    p1_l = p1.tolist()
    p2_l = p2.tolist()
    m = len(cumw_l)
    a_out, b_out, d1_out, d2_out = [], [], [], []
    for ua, ub, ul, ud1, ud2 in u.tolist():
        ac = 0 if ua < 0.5 else 1
        bc = 0 if ub < 0.5 else 1
        lam = 0
        while lam < m - 1 and ul >= cumw_l[lam]:
            lam += 1
        d1 = 1 if ud1 < p1_l[lam][ac] else -1
        d2 = 1 if ud2 < p2_l[lam][bc] else -1
        a_out.append(ac)
        b_out.append(bc)
        d1_out.append(d1)
        d2_out.append(d2)
    return _pack(a_out, b_out, d1_out, d2_out)


def sim_memory_table(u, table):
    """Trials under a history-keyed success-probability table.

    u columns: (a, b, d1, success). table is heap-ordered: the entry for
    a length-L history with success bits `bits` sits at (1<<L) - 1 + bits.
    """
    table_l = table.tolist()
    bits = 0
    a_out, b_out, d1_out, d2_out = [], [], [], []
    for i, (ua, ub, ud1, uc) in enumerate(u.tolist()):
        ac = 0 if ua < 0.5 else 1
        bc = 0 if ub < 0.5 else 1
        p = table_l[(1 << i) - 1 + bits]
        success = 1 if uc < p else 0
        bits = (bits << 1) | success
        c = 1 if success else -1
        prod = -c if (ac == 1 and bc == 0) else c
        d1 = 1 if ud1 < 0.5 else -1
        a_out.append(ac)
        b_out.append(bc)
        d1_out.append(d1)
        d2_out.append(prod * d1)
    return _pack(a_out, b_out, d1_out, d2_out)


def sim_memory_count(u, ptab):
    """Trials under a (trial index, success count) probability table.

    u columns: (a, b, d1, success). ptab[i][k] is the success probability
    at trial i (0-based) given k prior successes.
    """
    ptab_l = ptab.tolist()
    k = 0
    a_out, b_out, d1_out, d2_out = [], [], [], []
    for i, (ua, ub, ud1, uc) in enumerate(u.tolist()):
        ac = 0 if ua < 0.5 else 1
        bc = 0 if ub < 0.5 else 1
        success = 1 if uc < ptab_l[i][k] else 0
        k += success
        c = 1 if success else -1
        prod = -c if (ac == 1 and bc == 0) else c
        d1 = 1 if ud1 < 0.5 else -1
        a_out.append(ac)
        b_out.append(bc)
        d1_out.append(d1)
        d2_out.append(prod * d1)
    return _pack(a_out, b_out, d1_out, d2_out)


def count_distribution_tree(table, n):
    """Exact success-count distribution by sweeping the full history tree.

    table is heap-ordered as in sim_memory_table and must cover all
    histories of length < n. Returns an array of n+1 probabilities.
    """
    size = 1 << n
    table_l = table.tolist()
    reach = [0.0] * size
    reach[0] = 1.0
    for level in range(n):
        width = 1 << level
        base = width - 1
        nxt = [0.0] * (width << 1)
        for b in range(width):
            r = reach[b]
            p = table_l[base + b]
            nxt[(b << 1) | 1] = r * p
            nxt[b << 1] = r * (1.0 - p)
        reach[: width << 1] = nxt
    probs = [0.0] * (n + 1)
    for b in range(size):
        probs[b.bit_count()] += reach[b]
    return np.asarray(probs, dtype=np.float64)


def _pack(a, b, d1, d2):
    return (
        np.asarray(a, dtype=np.uint8),
        np.asarray(b, dtype=np.uint8),
        np.asarray(d1, dtype=np.int8),
        np.asarray(d2, dtype=np.int8),
    )
