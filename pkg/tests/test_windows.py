import pytest

from modinv.model import ProblemInstance
from modinv.numtheory import growth_front, primes_up_to, step_budget
from modinv.windows import (
    active_windows,
    min_t_bitlength,
    probe_instance,
    sound_windows,
    window_table,
)


def _min_t_brute(units):
    """Least t over every quotient sequence (any q >= 1) whose bit lengths sum to units."""
    best = None

    def walk(prev, cur, left):
        nonlocal best
        if left == 0:
            best = cur if best is None else min(best, cur)
            return
        for b in range(1, left + 1):
            for q in range(1 << (b - 1), 1 << b):
                walk(cur, q * cur + prev, left - b)

    walk(0, 1, units)
    return best


@pytest.mark.parametrize("units", range(0, 10))
def test_min_t_matches_enumeration(units):
    assert min_t_bitlength(units) == _min_t_brute(units).bit_length()


def test_growth_front_is_pareto():
    for u in range(1, 12):
        front = growth_front(u)
        for (a1, c1) in front:
            for (a2, c2) in front:
                if (a1, c1) != (a2, c2):
                    assert not (c2 <= c1 and a2 + c2 <= a1 + c1)


def test_published_window_values():
    w = active_windows(6, 1)
    assert (w.k1, w.K1) == (3, 9)
    w = active_windows(6, 8)
    assert (w.k2, w.K2) == (2, 6)


def test_sound_windows_are_ordered():
    for n in (3, 6, 9, 16, 64):
        table = window_table(n)
        assert len(table) == step_budget(n)
        for w in table:
            assert 1 <= w.k1 <= w.K1 == n + 3
            assert w.k2 <= w.K2 and w.k4 <= w.K4 and w.k5 <= w.K5 == n + 3
            assert 1 <= w.K3 <= n + 1


def test_window_step_range():
    with pytest.raises(ValueError):
        sound_windows(6, 0)
    with pytest.raises(ValueError):
        active_windows(6, step_budget(6) + 1)


@pytest.mark.parametrize("p,x,T,kind", [(19, 8, 22, "r-lo"), (11, 5, 8, "len-r-hi")])
def test_published_windows_counterexamples(p, x, T, kind):
    v = probe_instance(ProblemInstance(p, x), published=True).violations
    assert any(t == T and k == kind for t, k, *_ in v)


@pytest.mark.parametrize("p", primes_up_to(256)[2:])
def test_sound_windows_cover_every_operand(p):
    for x in range(1, p):
        pr = probe_instance(ProblemInstance(p, x), published=False)
        assert pr.checked > 0
        assert pr.violations == []
