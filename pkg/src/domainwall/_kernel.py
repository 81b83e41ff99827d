"""Compiled single-bit-flip Metropolis chain.

The chain state lives in caller-owned arrays so that a run can be split
into chunks of pre-drawn random numbers without changing the result.
Feasibility is tracked incrementally: per discrete variable we keep the
number of set bits, the number of domain walls and the sum of set
positions, from which the decoded value follows in O(1); active
constraint terms are counted through a per-variable adjacency list.
"""

import numba as nb
import numpy as np

SCHEME_ONE_HOT = 0
SCHEME_DOMAIN_WALL = 1
SCHEME_K_HOT = 2


@nb.njit(cache=True, nogil=True)
def _decoded_value(v, scheme, k, ones, walls, possum, order):
    if scheme == SCHEME_DOMAIN_WALL:
        if walls[v] == 1:
            return order[v, ones[v]]
        return -1
    if ones[v] == k:
        if scheme == SCHEME_ONE_HOT:
            return order[v, possum[v]]
        return 0
    return -1


@nb.njit(cache=True, nogil=True)
def init_tracking(bits, var_of_bit, pos_of_bit, var_start, var_len, scheme, k, order,
                  ones, walls, possum, value):
    nv = var_len.shape[0]
    for v in range(nv):
        ones[v] = 0
        possum[v] = 0
        walls[v] = 0
    for p in range(bits.shape[0]):
        v = var_of_bit[p]
        if v >= 0 and bits[p]:
            ones[v] += 1
            possum[v] += pos_of_bit[p]
    if scheme == SCHEME_DOMAIN_WALL:
        for v in range(nv):
            prev = 1
            for t in range(var_len[v]):
                cur = bits[var_start[v] + t]
                if cur != prev:
                    walls[v] += 1
                prev = cur
            if prev != 0:
                walls[v] += 1
    n_invalid = 0
    for v in range(nv):
        value[v] = _decoded_value(v, scheme, k, ones, walls, possum, order)
        if value[v] < 0:
            n_invalid += 1
    return n_invalid


@nb.njit(cache=True, nogil=True)
def count_active(value, c_ptr, c_other, c_mine, c_theirs):
    n = 0
    for v in range(value.shape[0]):
        for t in range(c_ptr[v], c_ptr[v + 1]):
            if value[v] == c_mine[t] and value[c_other[t]] == c_theirs[t]:
                n += 1
    return n // 2


@nb.njit(cache=True, nogil=True)
def run_chunk(
    bits, lin, nbr_ptr, nbr_idx, nbr_w, inv_t,
    flips, uniforms,
    track, var_of_bit, pos_of_bit, var_start, var_len, scheme, k, order,
    ones, walls, possum, value,
    c_ptr, c_other, c_mine, c_theirs,
    scal, step0, checkpoints, trace, cp_ptr,
    e_ref, state_counts, state_index,
    batch_feas, batch_len,
):
    """Advance the chain by ``flips.shape[0]`` attempted updates.

    ``scal`` holds the running scalars ``[energy, feasible_count,
    excess_sum, accepted, n_invalid, n_active]`` and is updated in place.
    Returns the updated checkpoint pointer and state index.
    """
    energy = scal[0]
    feas_count = scal[1]
    excess_sum = scal[2]
    accepted = scal[3]
    n_invalid = int(scal[4])
    n_active = int(scal[5])
    record = state_counts.shape[0] > 0
    ncp = checkpoints.shape[0]
    for t in range(flips.shape[0]):
        p = flips[t]
        field = lin[p]
        for e in range(nbr_ptr[p], nbr_ptr[p + 1]):
            if bits[nbr_idx[e]]:
                field += nbr_w[e]
        delta = field if bits[p] == 0 else -field
        if delta <= 0.0 or uniforms[t] < np.exp(-delta * inv_t):
            old = bits[p]
            bits[p] = 1 - old
            energy += delta
            accepted += 1.0
            if record:
                state_index ^= np.int64(1) << p
            if track:
                v = var_of_bit[p]
                if v >= 0:
                    if old == 0:
                        ones[v] += 1
                        possum[v] += pos_of_bit[p]
                    else:
                        ones[v] -= 1
                        possum[v] -= pos_of_bit[p]
                    if scheme == SCHEME_DOMAIN_WALL:
                        pos = pos_of_bit[p]
                        left = 1 if pos == 0 else bits[p - 1]
                        right = 0 if pos == var_len[v] - 1 else bits[p + 1]
                        # walls on the two bonds touching p, before and after the flip
                        before = (left != old) + (right != old)
                        after = (left != bits[p]) + (right != bits[p])
                        walls[v] += after - before
                    old_val = value[v]
                    new_val = _decoded_value(v, scheme, k, ones, walls, possum, order)
                    if new_val != old_val:
                        if old_val < 0:
                            n_invalid -= 1
                        if new_val < 0:
                            n_invalid += 1
                        for c in range(c_ptr[v], c_ptr[v + 1]):
                            if value[c_other[c]] == c_theirs[c]:
                                if old_val == c_mine[c]:
                                    n_active -= 1
                                if new_val == c_mine[c]:
                                    n_active += 1
                        value[v] = new_val
        step = step0 + t + 1
        if track and n_invalid == 0 and n_active == 0:
            feas_count += 1.0
            bi = (step - 1) // batch_len
            if bi >= batch_feas.shape[0]:
                bi = batch_feas.shape[0] - 1
            batch_feas[bi] += 1.0
        excess_sum += energy - e_ref
        if record:
            state_counts[state_index] += 1
        while cp_ptr < ncp and checkpoints[cp_ptr] == step:
            trace[cp_ptr] = excess_sum / step
            cp_ptr += 1
    scal[0] = energy
    scal[1] = feas_count
    scal[2] = excess_sum
    scal[3] = accepted
    scal[4] = n_invalid
    scal[5] = n_active
    return cp_ptr, state_index
