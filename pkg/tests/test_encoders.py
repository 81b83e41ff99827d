import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from domainwall.encoders import (
    DOMAIN_WALL,
    MULTI_WALL,
    ONE_HOT,
    VALID,
    WRONG_HOT_COUNT,
    binary_encoding_bit_count,
    convert_one_hot_to_domain_wall,
    decode,
    encode,
    encode_domain_wall,
    encode_k_hot,
    encode_one_hot,
    k_hot_map,
    recover_dqm_from_one_hot,
)
from domainwall.errors import DomainError, ParameterError, StructureError
from domainwall.model import Dqm, Qubo, dqm_energy, qubo_energy
from domainwall.problems import unweighted_assignment


def single_var(m):
    return Dqm.from_terms(1, m, {})


def all_bits(n):
    return np.array(list(itertools.product((0, 1), repeat=n)), dtype=np.int8)


def random_dqm(n, m, seed):
    rng = np.random.default_rng(seed)
    terms = {}
    for i in range(n):
        for a in range(m):
            if rng.random() < 0.5:
                terms[(i, i, a, a)] = float(rng.integers(-3, 4))
        for j in range(i):
            for a in range(m):
                for b in range(m):
                    if rng.random() < 0.6:
                        terms[(i, j, a, b)] = float(rng.integers(-3, 4))
    return Dqm.from_terms(n, m, terms)


# -- independent oracles ----------------------------------------------------------
# These evaluate the encoded polynomials straight from their definitions,
# without going through the QUBO builder.


def dw_chain_energy(bits, kappa):
    """-kappa * sum of neighbouring spin products on the pinned chain."""
    padded = np.concatenate([[1], bits, [0]])
    spins = 1 - 2 * padded
    return -kappa * float(np.sum(spins[:-1] * spins[1:]))


def dw_indicators(bits, order):
    padded = np.concatenate([[1], bits, [0]])
    x = np.zeros(len(order))
    for p, v in enumerate(order):
        x[v] = padded[p] - padded[p + 1]
    return x


def dw_oracle(d, bits, kappa, orders):
    w = d.size - 1
    e = 0.0
    xs = []
    for i in range(d.num_vars):
        block = bits[i * w:(i + 1) * w]
        e += dw_chain_energy(block, kappa)
        xs.append(dw_indicators(block, orders[i]))
    for (i, j, a, b), wt in d.terms.items():
        e += wt * (xs[i][a] if i == j else xs[i][a] * xs[j][b])
    return e


def one_hot_oracle(d, bits, kappa):
    m = d.size
    e = 0.0
    for i in range(d.num_vars):
        e += kappa * (bits[i * m:(i + 1) * m].sum() - 1) ** 2
    for (i, j, a, b), wt in d.terms.items():
        e += wt * bits[i * m + a] * bits[j * m + b]
    return e


# -- one-hot ------------------------------------------------------------------------


def test_one_hot_single_block():
    q, emap = encode_one_hot(single_var(3), 1.0)
    assert q.linear == {0: -1.0, 1: -1.0, 2: -1.0}
    assert q.quadratic == {(0, 1): 2.0, (0, 2): 2.0, (1, 2): 2.0}
    assert q.offset == 1.0
    assert qubo_energy(q, [0, 1, 0]) == 0
    assert qubo_energy(q, [0, 0, 0]) == 1
    assert emap.num_bits == 3


def test_one_hot_rejects_bad_kappa():
    with pytest.raises(ParameterError):
        encode_one_hot(single_var(3), 0.0)


@pytest.mark.parametrize("m", range(2, 9))
def test_one_hot_constraint_spectrum(m):
    kappa = 1.5
    q, _ = encode_one_hot(single_var(m), kappa)
    B = all_bits(m)
    h = B.sum(axis=1)
    np.testing.assert_allclose(q.energies(B), kappa * (h - 1) ** 2)


# -- domain wall --------------------------------------------------------------------


def test_domain_wall_single_chain_m3():
    q, emap = encode_domain_wall(single_var(3), 1.0)
    assert q.offset == -1.0
    assert q.linear == {1: 4.0}
    assert q.quadratic == {(0, 1): -4.0}
    for valid in ([1, 1], [1, 0], [0, 0]):
        assert qubo_energy(q, valid) == -1.0
    assert qubo_energy(q, [0, 1]) == 3.0
    assert decode([1, 0], emap).values == (1,)


@pytest.mark.parametrize("m", range(2, 9))
def test_domain_wall_constraint_spectrum(m):
    kappa = 0.75
    q, emap = encode_domain_wall(single_var(m), kappa)
    B = all_bits(m - 1)
    padded = np.hstack([np.ones((len(B), 1)), B, np.zeros((len(B), 1))])
    walls = np.sum(padded[:, :-1] != padded[:, 1:], axis=1)
    expected = emap.constraint_offset + 2 * kappa * (walls - 1)
    np.testing.assert_allclose(q.energies(B), expected)
    np.testing.assert_allclose(q.energies(B), [dw_chain_energy(b, kappa) for b in B])


def test_domain_wall_rejects_bad_order():
    with pytest.raises(DomainError):
        encode_domain_wall(single_var(3), 1.0, [0, 0, 1])
    with pytest.raises(ParameterError):
        encode_domain_wall(single_var(3), -1.0)


SHAPES = [(1, 2), (2, 2), (3, 2), (4, 2), (6, 2), (2, 3), (3, 3), (4, 3), (2, 4), (3, 4), (2, 5), (2, 6)]


@pytest.mark.parametrize("n, m", SHAPES)
def test_domain_wall_matches_oracle_on_every_bitstring(n, m):
    d = random_dqm(n, m, seed=10 * n + m)
    rng = np.random.default_rng(n * m)
    orders = [tuple(rng.permutation(m)) for _ in range(n)]
    q, emap = encode_domain_wall(d, 1.25, orders)
    B = all_bits(n * (m - 1))
    np.testing.assert_allclose(q.energies(B), [dw_oracle(d, b, 1.25, orders) for b in B], atol=1e-9)


@pytest.mark.parametrize("n, m", [s for s in SHAPES if s[0] * s[1] <= 12])
def test_one_hot_matches_oracle_on_every_bitstring(n, m):
    d = random_dqm(n, m, seed=10 * n + m)
    q, _ = encode_one_hot(d, 2.0)
    B = all_bits(n * m)
    np.testing.assert_allclose(q.energies(B), [one_hot_oracle(d, b, 2.0) for b in B], atol=1e-9)


@pytest.mark.parametrize("scheme", [ONE_HOT, DOMAIN_WALL])
@pytest.mark.parametrize("n, m", [s for s in SHAPES if s[0] * s[1] <= 12])
def test_energy_equivalence_on_valid_codes(scheme, n, m):
    d = random_dqm(n, m, seed=n + 7 * m)
    q, emap = encode(d, scheme, 1.0)
    for a in itertools.product(range(m), repeat=n):
        assert qubo_energy(q, emap.code(a)) - emap.constraint_offset == pytest.approx(dqm_energy(d, a))


# -- decode ---------------------------------------------------------------------------


def test_decode_examples():
    _, dw4 = encode_domain_wall(single_var(4))
    assert decode([1, 1, 0], dw4).values == (2,)
    _, oh4 = encode_one_hot(single_var(4))
    r = decode([0, 0, 0, 0], oh4)
    assert not r.feasible and r.values is None and r.violation == (WRONG_HOT_COUNT,)
    _, dw3 = encode_domain_wall(single_var(3))
    r = decode([0, 1], dw3)
    assert not r.feasible and r.violation == (MULTI_WALL,)


def test_decode_with_context_flags_collisions():
    d = unweighted_assignment(3)
    _, emap = encode(d, DOMAIN_WALL)
    ok = decode(emap.code((2, 0, 1)), emap, d)
    clash = decode(emap.code((0, 0, 1)), emap, d)
    assert ok.feasible and ok.values == (2, 0, 1)
    assert not clash.feasible and clash.values == (0, 0, 1)
    assert clash.violation == (VALID, VALID, VALID)


@settings(max_examples=80, deadline=None)
@given(st.data())
def test_round_trip(data):
    n = data.draw(st.integers(1, 4))
    m = data.draw(st.integers(2, 6))
    scheme = data.draw(st.sampled_from([ONE_HOT, DOMAIN_WALL]))
    d = Dqm.from_terms(n, m, {})
    orders = [tuple(data.draw(st.permutations(range(m)))) for _ in range(n)]
    if scheme == ONE_HOT:
        _, emap = encode_one_hot(d)
    else:
        _, emap = encode_domain_wall(d, 1.0, orders)
    a = tuple(data.draw(st.lists(st.integers(0, m - 1), min_size=n, max_size=n)))
    assert decode(emap.code(a), emap).values == a


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 9), st.data())
def test_domain_wall_indicators_sum_to_one(m, data):
    order = tuple(data.draw(st.permutations(range(m))))
    ones = data.draw(st.integers(0, m - 1))
    bits = np.array([1] * ones + [0] * (m - 1 - ones))
    x = dw_indicators(bits, order)
    assert x.sum() == 1 and set(x) <= {0.0, 1.0}
    assert x[order[ones]] == 1


# -- k-hot ------------------------------------------------------------------------------


def test_k_hot():
    q1 = encode_k_hot(3, 1, 1.0)
    q_oh, _ = encode_one_hot(single_var(3), 1.0)
    assert (q1.linear, q1.quadratic, q1.offset) == (q_oh.linear, q_oh.quadratic, q_oh.offset)
    q = encode_k_hot(4, 2, 1.0)
    assert qubo_energy(q, [1, 1, 0, 0]) == 0
    assert qubo_energy(q, [1, 1, 1, 0]) == 1
    assert q.linear[0] == -3.0 and q.quadratic[(0, 1)] == 2.0 and q.offset == 4.0
    emap = k_hot_map(4, 2)
    assert decode([0, 1, 0, 1], emap).values == ((1, 3),)
    assert decode([0, 1, 1, 1], emap).violation == (WRONG_HOT_COUNT,)


@pytest.mark.parametrize("k", [0, 4, -1])
def test_k_hot_range(k):
    with pytest.raises(ParameterError):
        encode_k_hot(4, k)


@pytest.mark.parametrize("m, bits", [(2, 1), (4, 2), (5, 3), (1000, 10), (1024, 10), (1025, 11)])
def test_binary_bit_count(m, bits):
    assert binary_encoding_bit_count(m) == bits


def test_binary_bit_count_domain():
    with pytest.raises(DomainError):
        binary_encoding_bit_count(1)


# -- one-hot to domain-wall conversion --------------------------------------------------------


def test_convert_assignment_m3():
    d = unweighted_assignment(3)
    q_oh, map_oh = encode_one_hot(d)
    q_dw, map_dw = convert_one_hot_to_domain_wall(q_oh, map_oh)
    assert q_oh.num_bits == 9 and q_dw.num_bits == 6
    # relative energies agree on every assignment
    diffs = {
        round(qubo_energy(q_oh, map_oh.code(a)) - qubo_energy(q_dw, map_dw.code(a)), 12)
        for a in itertools.product(range(3), repeat=3)
    }
    assert len(diffs) == 1
    # same ground-state image
    oh_min = min(qubo_energy(q_oh, b) for b in all_bits(9))
    dw_min = min(qubo_energy(q_dw, b) for b in all_bits(6))
    assert oh_min - dw_min == pytest.approx(diffs.pop())


def test_converted_penalties_act_like_colouring():
    d = unweighted_assignment(3)
    q_dw, map_dw = convert_one_hot_to_domain_wall(*encode_one_hot(d))
    for b in all_bits(6):
        r = decode(b, map_dw)
        if r.values is None:
            continue
        collisions = sum(r.values[i] == r.values[j] for i in range(3) for j in range(i))
        assert qubo_energy(q_dw, b) - map_dw.constraint_offset == pytest.approx(collisions)


def test_convert_keeps_extra_constant():
    d = random_dqm(3, 3, seed=5)
    q_oh, map_oh = encode_one_hot(d)
    shifted = Qubo.from_terms(q_oh.num_bits, q_oh.linear, q_oh.quadratic, q_oh.offset + 2.5, q_oh.labels)
    q_dw, map_dw = convert_one_hot_to_domain_wall(shifted, map_oh)
    for a in itertools.product(range(3), repeat=3):
        assert qubo_energy(q_dw, map_dw.code(a)) - map_dw.constraint_offset == pytest.approx(dqm_energy(d, a) + 2.5)


def test_recover_uses_structure_not_just_labels():
    d = random_dqm(2, 4, seed=3)
    q_oh, map_oh = encode_one_hot(d, 3.0)
    recovered, kappa, const = recover_dqm_from_one_hot(q_oh)
    assert kappa == 3.0 and const == pytest.approx(0.0)
    assert dict(recovered.terms) == pytest.approx(dict(d.terms))


def test_convert_rejects_non_one_hot():
    q_dw, map_dw = encode_domain_wall(unweighted_assignment(3))
    with pytest.raises(StructureError):
        convert_one_hot_to_domain_wall(q_dw, map_dw)
    with pytest.raises(StructureError):
        convert_one_hot_to_domain_wall(q_dw)
    q_oh, map_oh = encode_one_hot(unweighted_assignment(3))
    broken = dict(q_oh.quadratic)
    broken[(0, 1)] = 5.0
    q_bad = Qubo.from_terms(q_oh.num_bits, q_oh.linear, broken, q_oh.offset, q_oh.labels)
    with pytest.raises(StructureError):
        convert_one_hot_to_domain_wall(q_bad, map_oh)
