import pytest

from binomtv.rng import Rng, SEED_ENV, default_rng, resolve_seed


def test_reproducible_and_split():
    a, b = Rng(5), Rng(5)
    assert [a.next64() for _ in range(600)] == [b.next64() for _ in range(600)]
    c0, c1 = Rng(5).split(0), Rng(5).split(1)
    s0 = [c0.next64() for _ in range(50)]
    assert s0 != [c1.next64() for _ in range(50)]
    d = Rng(5, (0,))
    assert s0 == [d.next64() for _ in range(50)]
    assert Rng(5).split(0).split(3).path == (0, 3)


def test_bits_ranges_and_accounting():
    r = Rng(1)
    for k in (1, 7, 63, 64, 65, 200):
        for _ in range(50):
            assert 0 <= r.bits(k) < 2 ** k
    r = Rng(2)
    r.bits(64)
    r.bits(130)  # three words
    assert r.words_used == 4
    for _ in range(64):
        r.coin()
    assert r.words_used == 5


def test_randbelow_and_random():
    r = Rng(3)
    xs = [r.randbelow(6) for _ in range(6000)]
    assert set(xs) == set(range(6))
    assert all(0 <= r.random() < 1 for _ in range(100))
    with pytest.raises(ValueError):
        r.randbelow(0)


def test_seed_priority(monkeypatch):
    monkeypatch.delenv(SEED_ENV, raising=False)
    assert resolve_seed() == 0
    monkeypatch.setenv(SEED_ENV, "123")
    assert resolve_seed() == 123
    assert resolve_seed(9) == 9
    assert default_rng().seed == 123
    monkeypatch.setenv(SEED_ENV, "abc")
    with pytest.raises(ValueError):
        resolve_seed()
    with pytest.raises(ValueError):
        Rng(-1)


def test_coin_is_fair_enough():
    r = Rng(4)
    s = sum(r.coin() for _ in range(100000))
    assert abs(s - 50000) < 5 * 158
