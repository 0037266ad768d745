"""Integer helpers: primality, inverses, Fibonacci/Lucas numbers and exact golden-ratio comparisons."""

from __future__ import annotations

from functools import lru_cache

GOLDEN_RATIO_LOG2 = 0.6942419136306174  # log2((1 + sqrt 5) / 2)
C_CONSTANT = 1.0 / GOLDEN_RATIO_LOG2


def is_probable_prime(p: int) -> bool:
    if p < 2:
        return False
    small = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)
    for q in small:
        if p % q == 0:
            return p == q
    d, s = p - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in small:
        y = pow(a, d, p)
        if y in (1, p - 1):
            continue
        for _ in range(s - 1):
            y = y * y % p
            if y == p - 1:
                break
        else:
            return False
    return True


def primes_up_to(limit: int) -> list[int]:
    return [p for p in range(3, limit + 1, 2) if is_probable_prime(p)]


def largest_prime_below(limit: int) -> int:
    p = limit - 1
    while p >= 2 and not is_probable_prime(p):
        p -= 1
    if p < 2:
        raise ValueError(f"no prime below {limit}")
    return p


def bit_length_of_modulus(p: int) -> int:
    return p.bit_length()


def mod_inverse(x: int, p: int) -> int:
    return pow(x, -1, p)


@lru_cache(maxsize=None)
def fib_lucas(k: int) -> tuple[int, int]:
    """(F_k, L_k) for k >= 0."""
    f0, f1 = 0, 1
    for _ in range(k):
        f0, f1 = f1, f0 + f1
    return f0, f0 + 2 * (f1 - f0) if k else 2


def fibonacci(k: int) -> int:
    return fib_lucas(k)[0]


def phi_pow_ge_pow2(k: int, e: int) -> bool:
    """Exact test of phi**k >= 2**e for integers k, e."""
    if k >= 0 and e < 0:
        return True
    if k < 0:
        return e < 0 and not phi_pow_ge_pow2(-k, -e)
    f, lucas = fib_lucas(k)
    # phi**k = (L_k + F_k sqrt5) / 2
    rhs = (1 << (e + 1)) - lucas
    if rhs <= 0:
        return True
    return 5 * f * f >= rhs * rhs


def _least(predicate, start: int) -> int:
    m = start
    while not predicate(m):
        m += 1
    return m


def ceil_c_times(n: int) -> int:
    """Smallest integer m with m >= c*n, c = 1/log2(phi)."""
    return _least(lambda m: phi_pow_ge_pow2(m, n), 0)


def golden_step_bound(n: int) -> int:
    """4*ceil(c*n): the step bound derived from Fibonacci growth of t."""
    return 4 * ceil_c_times(n)


_FRONTS: dict[int, list[tuple[tuple[int, int], ...]]] = {}


def growth_front(units: int, first_min_bits: int = 0) -> tuple[tuple[int, int], ...]:
    """Pareto frontier of (t_prev, t_cur) reachable with quotient prefixes costing `units`.

    A quotient in [2^b, 2^(b+1)) costs b+1 units and 2^b is its cheapest member. Later
    values are A*t_cur + B*t_prev with A >= B >= 0, so (a', c') dominates (a, c) when
    c' <= c and a'+c' <= a+c. The first quotient has at least `first_min_bits` extra bits.
    """
    fronts = _FRONTS.setdefault(first_min_bits, [((0, 1),)])
    while len(fronts) <= units:
        u = len(fronts)
        cand = []
        for b in range(u):
            rest = u - b - 1
            if rest == 0 and b < first_min_bits:
                continue
            q = 1 << b
            cand.extend((q * c + a, c) for a, c in fronts[rest])
        cand.sort()
        front, best = [], None
        for c, a in cand:
            if best is None or c + a < best:
                front.append((a, c))
                best = c + a
        fronts.append(tuple(front))
    return fronts[units]


@lru_cache(maxsize=None)
def worst_case_units(n: int) -> int:
    """Most quotient-cost units any p < 2^n can consume.

    The first quotient is at least 2 (x <= p/2 after the flip) and so is the last
    (it divides r = 1 out of r >= 2), and the final t equals p.
    """
    limit = 1 << n
    for U in range(2 * n + 4, 1, -1):  # t at least doubles every two units
        for b in range(1, min(U, n + 1)):
            if any((c << b) + a < limit for a, c in growth_front(U - b - 1, 1)):
                return U
    return 0


def step_budget(n: int) -> int:
    """Fixed schedule length: enough steps for every input of an n-bit modulus."""
    return max(golden_step_bound(n), 4 * worst_case_units(n))


def ceil_scaled(offset: int, slope: int, start: int = 1) -> int:
    """Smallest m >= start with 16**m >= phi**(offset + slope*m).

    This is max(ceil(offset / (4c - slope)), start) for slope in {0, 1, 3, 4}.
    """
    def fits(m: int) -> bool:
        k = offset + slope * m
        return (k == 0 and m == 0) or not phi_pow_ge_pow2(k, 4 * m)

    return _least(fits, start)
