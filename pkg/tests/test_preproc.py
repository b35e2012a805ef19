from dataclasses import replace

import pytest

from lib.cover import Cover, assign_cover
from lib.preproc import (
    bdoz_authenticate,
    bdoz_check,
    bdoz_share,
    bdoz_xor,
    dump_shares,
    load_shares,
    reshare,
    spdz_add,
    spdz_add_public,
    spdz_key_shares,
    spdz_open_check,
    spdz_scale,
    spdz_share,
)
from utils.constants import KAPPA, SPDZ_PRIME
from utils.exceptions import IncompleteCoverError, MacCheckError, PreprocError, UsageError


@pytest.mark.parametrize("x", [0, 1])
def test_bdoz_sharing_checks(x, rng):
    sharing = bdoz_share(x, 4, rng)
    assert sharing.value == x
    assert bdoz_check(sharing)


def test_bdoz_flipped_bit_fails(rng):
    sharing = bdoz_share(1, 3, rng)
    forged = replace(sharing.bits[0], bit=sharing.bits[0].bit ^ 1)
    assert not bdoz_check(replace(sharing, bits=(forged, *sharing.bits[1:])))


def test_bdoz_single_holder(rng):
    sharing = bdoz_authenticate(1, 3, rng, holder=2)
    (bit,) = sharing.bits
    assert bit.holder == 2 and set(bit.keys) == {0, 1}
    assert bdoz_check(sharing)
    with pytest.raises(UsageError):
        bdoz_authenticate(2, 3, rng)


def test_bdoz_xor_is_linear(rng):
    a = bdoz_share(1, 3, rng)
    b = bdoz_share(1, 3, rng, deltas=a.deltas)
    c = bdoz_xor(a, b)
    assert c.value == 0
    assert bdoz_check(c)
    with pytest.raises(PreprocError):
        bdoz_xor(a, bdoz_share(1, 3, rng))


def test_spdz_open(rng):
    s = spdz_share(123456789, 3, rng)
    assert spdz_open_check(s) == 123456789
    assert len(s.macs) == 3


def test_spdz_tampered_share_is_caught(rng):
    s = spdz_share(42, 3, rng)
    tampered = replace(s, shares=((s.shares[0] + 1) % SPDZ_PRIME, *s.shares[1:]))
    with pytest.raises(MacCheckError):
        spdz_open_check(tampered)


def test_spdz_linear_operations(rng):
    keys = spdz_key_shares(3, rng)
    a, b = spdz_share(10, 3, rng, keys), spdz_share(32, 3, rng, keys)
    assert spdz_open_check(spdz_add(a, b)) == 42
    assert spdz_open_check(spdz_scale(a, 5)) == 50
    assert spdz_open_check(spdz_add_public(a, SPDZ_PRIME - 11)) == SPDZ_PRIME - 1
    with pytest.raises(PreprocError):
        spdz_add(a, spdz_share(1, 3, rng))


@pytest.mark.parametrize("x, parties", [(SPDZ_PRIME, 3), (-1, 3), (5, 1)])
def test_spdz_rejects(x, parties, rng):
    with pytest.raises(UsageError):
        spdz_share(x, parties, rng)


def test_reshare_moves_shares_onto_the_e_parties(rng):
    held = spdz_share(777, 3, rng)
    cover = assign_cover(6, 3, 2, seed=5)
    moved = reshare(held, cover, rng)
    assert moved.parties == 6
    assert moved.alpha == held.alpha
    assert spdz_open_check(moved) == 777


def test_reshare_needs_a_full_cover(rng):
    held = spdz_share(9, 2, rng)
    partial = Cover(4, 2, 1, (frozenset({0}), frozenset({1})))
    with pytest.raises(IncompleteCoverError):
        reshare(held, partial, rng)
    with pytest.raises(UsageError):
        reshare(spdz_share(9, 3, rng), partial, rng)


def test_share_bundles(rng):
    s = spdz_share(5, 4, rng)
    assert load_shares(dump_shares(s)) == s
    with pytest.raises(PreprocError):
        load_shares('{"format": "something-else"}')
    with pytest.raises(PreprocError):
        load_shares(dump_shares(s).replace('"parties": 4', '"parties": 3'))


def tamper_one_bit(sharing, py_rng):
    index = py_rng.randrange(len(sharing.bits))
    target = sharing.bits[index]
    if py_rng.random() < 0.5:
        forged = replace(target, bit=target.bit ^ 1)
    else:
        j = py_rng.choice(sorted(target.macs))
        forged = replace(target, macs={**target.macs, j: target.macs[j] ^ (1 << py_rng.randrange(KAPPA))})
    bits = list(sharing.bits)
    bits[index] = forged
    return replace(sharing, bits=tuple(bits))


def test_bdoz_single_bit_tampering_is_always_caught(rng, py_rng):
    for _ in range(1000):
        sharing = bdoz_share(py_rng.randrange(2), py_rng.randint(2, 5), rng)
        assert bdoz_check(sharing)
        assert not bdoz_check(tamper_one_bit(sharing, py_rng))


def test_bdoz_xor_of_random_pairs(rng, py_rng):
    for _ in range(1000):
        x, y, parties = py_rng.randrange(2), py_rng.randrange(2), py_rng.randint(2, 5)
        a = bdoz_share(x, parties, rng)
        c = bdoz_xor(a, bdoz_share(y, parties, rng, deltas=a.deltas))
        assert c.value == x ^ y
        assert bdoz_check(c)


@pytest.mark.parametrize("parties", [2, 3, 6])
def test_spdz_zero(parties, rng):
    s = spdz_share(0, parties, rng)
    assert spdz_open_check(s) == 0
    assert sum(s.macs) % SPDZ_PRIME == 0


def test_spdz_seven_in_the_mersenne_field(rng):
    assert SPDZ_PRIME == 2**61 - 1
    s = spdz_share(7, 3, rng)
    assert sum(s.shares) % SPDZ_PRIME == 7
    assert spdz_open_check(s) == 7


@pytest.mark.slow
def test_spdz_increment_is_always_caught(rng, py_rng):
    for _ in range(10_000):
        s = spdz_share(py_rng.randrange(SPDZ_PRIME), py_rng.randint(2, 5), rng)
        i = py_rng.randrange(s.parties)
        shares = list(s.shares)
        shares[i] = (shares[i] + 1) % SPDZ_PRIME
        with pytest.raises(MacCheckError):
            spdz_open_check(replace(s, shares=tuple(shares)))


@pytest.mark.slow
def test_reshare_preserves_random_values(rng, py_rng):
    for trial in range(1000):
        n_o = py_rng.randint(2, 4)
        n_e = py_rng.randint(n_o, 8)
        l = py_rng.randint(-(-n_e // n_o), n_e)
        v = py_rng.randrange(SPDZ_PRIME)
        held = spdz_share(v, n_o, rng)
        moved = reshare(held, assign_cover(n_e, n_o, l, seed=trial), rng)
        assert moved.parties == n_e
        assert moved.alpha == held.alpha
        assert spdz_open_check(moved) == v
