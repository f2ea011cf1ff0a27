"""Iterative dancing-links kernel over flat integer arrays.

The search is Knuth's Algorithm X in its iterative form.  All state lives in
arrays owned by the caller so a run can stop at a node boundary and resume,
either in the same process or after a checkpoint round trip.

Node 0 is the root, nodes ``1..ncols`` are column headers, row nodes follow.
"""

from __future__ import annotations

import numpy as np
from numba import njit

DONE = 0
SOLUTION = 1
PAUSED = 2
FRONTIER = 3

ENTER = 0      # next step: examine the partial solution at level l
BACKTRACK = 1  # next step: level l is finished, undo level l - 1

N_RULES = 3
RULE_NAMES = ("point-degree", "hyperplane-45", "fivespace-5")
POINT_CAP = 21
POINT_IN_HYPERPLANE_CAP = 5
HYPERPLANE_CAP = 45
FIVESPACE_CAP = 5


def build_links(ncols, rows):
    """Link arrays for an exact-cover matrix; ``rows[i]`` lists column indices."""
    nnodes = 1 + ncols + sum(len(r) for r in rows)
    L = np.empty(nnodes, np.int32)
    R = np.empty(nnodes, np.int32)
    U = np.empty(nnodes, np.int32)
    D = np.empty(nnodes, np.int32)
    C = np.zeros(nnodes, np.int32)
    ROW = np.full(nnodes, -1, np.int32)
    S = np.zeros(ncols + 1, np.int32)
    for i in range(ncols + 1):
        L[i] = i - 1 if i else ncols
        R[i] = i + 1 if i < ncols else 0
        U[i] = D[i] = i
        C[i] = i
    x = ncols + 1
    for r, cols in enumerate(rows):
        first = x
        for c in sorted(cols):
            col = c + 1
            C[x] = col
            ROW[x] = r
            U[x] = U[col]
            D[x] = col
            D[U[col]] = x
            U[col] = x
            S[col] += 1
            L[x] = x - 1
            R[x] = x + 1
            x += 1
        if x > first:
            L[first] = x - 1
            R[x - 1] = first
    return L, R, U, D, C, ROW, S


@njit(cache=True)
def _cover(c, L, R, U, D, C, S):
    L[R[c]] = L[c]
    R[L[c]] = R[c]
    i = D[c]
    while i != c:
        j = R[i]
        while j != i:
            U[D[j]] = U[j]
            D[U[j]] = D[j]
            S[C[j]] -= 1
            j = R[j]
        i = D[i]


@njit(cache=True)
def _uncover(c, L, R, U, D, C, S):
    i = U[c]
    while i != c:
        j = L[i]
        while j != i:
            S[C[j]] += 1
            U[D[j]] = j
            D[U[j]] = j
            j = L[j]
        i = U[i]
    L[R[c]] = c
    R[L[c]] = c


@njit(cache=True)
def _apply(row, sign, pts, ptsix, sixes, fives, cnt_pt, cnt_ptsix, cnt_six, cnt_five):
    for k in range(pts.shape[1]):
        cnt_pt[pts[row, k]] += sign
    for k in range(ptsix.shape[1]):
        cnt_ptsix[ptsix[row, k]] += sign
    for k in range(sixes.shape[1]):
        cnt_six[sixes[row, k]] += sign
    for k in range(fives.shape[1]):
        cnt_five[fives[row, k]] += sign


@njit(cache=True)
def _cut_rule(row, toggles, pts, ptsix, sixes, fives, cnt_pt, cnt_ptsix, cnt_six, cnt_five):
    if toggles[0]:
        for k in range(pts.shape[1]):
            if cnt_pt[pts[row, k]] > POINT_CAP:
                return 0
        for k in range(ptsix.shape[1]):
            if cnt_ptsix[ptsix[row, k]] > POINT_IN_HYPERPLANE_CAP:
                return 0
    if toggles[1]:
        for k in range(sixes.shape[1]):
            if cnt_six[sixes[row, k]] > HYPERPLANE_CAP:
                return 1
    if toggles[2]:
        for k in range(fives.shape[1]):
            if cnt_five[fives[row, k]] > FIVESPACE_CAP:
                return 2
    return -1


@njit(cache=True)
def replay(prefix, L, R, U, D, C, S, ROW, COL, use_prune,
           pts, ptsix, sixes, fives, cnt_pt, cnt_ptsix, cnt_six, cnt_five):
    """Re-cover the columns of an already chosen node sequence."""
    for lev in range(prefix.shape[0]):
        x = prefix[lev]
        COL[lev] = C[x]
        _cover(C[x], L, R, U, D, C, S)
        j = R[x]
        while j != x:
            _cover(C[j], L, R, U, D, C, S)
            j = R[j]
        if use_prune:
            _apply(ROW[x], 1, pts, ptsix, sixes, fives, cnt_pt, cnt_ptsix, cnt_six, cnt_five)


@njit(cache=True)
def run(L, R, U, D, C, S, ROW, X, COL, state, counters, prunes, hist,
        floor, budget, depth_limit, frontier, use_prune, toggles,
        pts, ptsix, sixes, fives, cnt_pt, cnt_ptsix, cnt_six, cnt_five):
    """Advance the search until it finishes, pauses or has something to report.

    ``state = [level, step]``; ``counters = [nodes, max_depth, depth_cutoffs]``.
    On SOLUTION or FRONTIER, ``X[:level]`` holds the chosen row nodes and the
    state is set to resume with BACKTRACK.
    """
    l = state[0]
    step = state[1]
    while True:
        if step == ENTER:
            if frontier > 0 and l == frontier:
                state[0] = l
                state[1] = BACKTRACK
                return FRONTIER
            if budget >= 0 and counters[0] >= budget:
                state[0] = l
                state[1] = ENTER
                return PAUSED
            cut = False
            if l > 0:
                counters[0] += 1
                hist[l] += 1
                if l > counters[1]:
                    counters[1] = l
                if use_prune:
                    rule = _cut_rule(ROW[X[l - 1]], toggles, pts, ptsix, sixes, fives,
                                     cnt_pt, cnt_ptsix, cnt_six, cnt_five)
                    if rule >= 0:
                        prunes[rule] += 1
                        cut = True
            if not cut:
                if R[0] == 0:
                    state[0] = l
                    state[1] = BACKTRACK
                    return SOLUTION
                if depth_limit >= 0 and l >= depth_limit:
                    counters[2] += 1
                    cut = True
            if cut:
                step = BACKTRACK
                continue
            # choose the column with fewest rows, lowest id on ties
            c = R[0]
            best = S[c]
            j = R[c]
            while j != 0 and best > 0:
                if S[j] < best:
                    c = j
                    best = S[j]
                j = R[j]
            _cover(c, L, R, U, D, C, S)
            COL[l] = c
            x = D[c]
        else:
            # BACKTRACK: level l is exhausted, undo the choice at level l - 1
            if l == floor:
                state[0] = l
                state[1] = BACKTRACK
                return DONE
            l -= 1
            x = X[l]
            j = L[x]
            while j != x:
                _uncover(C[j], L, R, U, D, C, S)
                j = L[j]
            if use_prune:
                _apply(ROW[x], -1, pts, ptsix, sixes, fives, cnt_pt, cnt_ptsix, cnt_six, cnt_five)
            c = COL[l]
            x = D[x]
        # try row node x in column c at level l
        if x == c:
            _uncover(c, L, R, U, D, C, S)
            step = BACKTRACK
            continue
        X[l] = x
        j = R[x]
        while j != x:
            _cover(C[j], L, R, U, D, C, S)
            j = R[j]
        if use_prune:
            _apply(ROW[x], 1, pts, ptsix, sixes, fives, cnt_pt, cnt_ptsix, cnt_six, cnt_five)
        l += 1
        step = ENTER
