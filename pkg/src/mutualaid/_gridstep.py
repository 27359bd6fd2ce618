"""Compiled inner loop for the community grid simulation.

One call advances the grid by a single step: service delivery, neighbor
matching, then role churn. All randomness comes in as pre-drawn uniforms
indexed by cell, so the trajectory depends only on the seed.

Role codes: 0 professional caregiver, 1 informal caregiver, 2 neutral,
3 alarm requester, 4 normal requester, 5 participant requester.
"""

from __future__ import annotations

import numba
import numpy as np

PROFESSIONAL = 0
INFORMAL = 1
NEUTRAL = 2
ALARM = 3
NORMAL = 4
PARTICIPANT = 5
N_ROLES = 6
REQUESTER_BASE = ALARM

# counters layout
C_SERVED = 0      # 0..2 per requester kind
C_TIMELY = 3      # 3..5
C_LATENCY_SUM = 6
C_FAILED = 7      # 7..9
C_BORN = 10       # 10..12
C_COMPLETED = 13
N_COUNTERS = 14


@numba.njit(cache=True)
def _first_free_neighbor(role, link, nbrs, p, wanted_role):
    for j in range(nbrs.shape[1]):
        q = nbrs[p, j]
        if q >= 0 and role[q] == wanted_role and link[q] == -1:
            return q
    return -1


@numba.njit(cache=True)
def step_kernel(role, link, work, birth, nbrs, cum_rows, wmin, wmax, timely,
                step_index, u_churn, u_work, scan_order, counters):
    ncells = role.shape[0]

    # phase 1: service delivery on linked pairs
    for p in range(ncells):
        q = link[p]
        if q > p:
            w = work[p] - 1
            work[p] = w
            work[q] = w
            if w == 0:
                if role[p] >= REQUESTER_BASE:
                    role[p] = NEUTRAL
                    birth[p] = -1
                if role[q] >= REQUESTER_BASE:
                    role[q] = NEUTRAL
                    birth[q] = -1
                link[p] = -1
                link[q] = -1
                counters[C_COMPLETED] += 1

    # phase 2: requesters scan their neighborhood for a free partner
    for si in range(ncells):
        p = scan_order[si]
        r = role[p]
        if r < REQUESTER_BASE or link[p] != -1:
            continue
        if r == ALARM:
            partner = _first_free_neighbor(role, link, nbrs, p, PROFESSIONAL)
        elif r == NORMAL:
            partner = _first_free_neighbor(role, link, nbrs, p, INFORMAL)
            if partner == -1:
                partner = _first_free_neighbor(role, link, nbrs, p, PROFESSIONAL)
        else:
            partner = _first_free_neighbor(role, link, nbrs, p, PARTICIPANT)
        if partner == -1:
            continue
        if work[p] == 0:
            work[p] = wmin + np.int64(u_work[p] * (wmax - wmin + 1))
        work[partner] = work[p]
        link[p] = partner
        link[partner] = p
        kind = r - REQUESTER_BASE
        lat = step_index - birth[p]
        counters[C_SERVED + kind] += 1
        if lat <= timely:
            counters[C_TIMELY + kind] += 1
        counters[C_LATENCY_SUM] += lat
        if r == PARTICIPANT:
            lat2 = step_index - birth[partner]
            counters[C_SERVED + kind] += 1
            if lat2 <= timely:
                counters[C_TIMELY + kind] += 1
            counters[C_LATENCY_SUM] += lat2

    # phase 3: unlinked cells churn roles
    for p in range(ncells):
        if link[p] != -1:
            continue
        r = role[p]
        u = u_churn[p]
        new_r = N_ROLES - 1
        for s in range(N_ROLES):
            if u < cum_rows[r, s]:
                new_r = s
                break
        if new_r == r:
            continue
        if r >= REQUESTER_BASE:
            counters[C_FAILED + (r - REQUESTER_BASE)] += 1
            work[p] = 0
            birth[p] = -1
        role[p] = new_r
        if new_r >= REQUESTER_BASE:
            birth[p] = step_index + 1
            counters[C_BORN + (new_r - REQUESTER_BASE)] += 1
