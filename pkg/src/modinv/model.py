"""Bit-exact classical reference for the register-sharing extended Euclidean step machine.

Registers are Python ints. Position ``i`` of a register (0-based, counted from the
left as printed) is stored as bit ``i`` of the int. Work registers are ``n + 3``
positions wide.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, replace
from typing import Callable, Iterable

from .numtheory import bit_length_of_modulus, is_probable_prime, step_budget


class DomainError(ValueError):
    """Raised for inputs outside the supported domain."""


@dataclass(frozen=True)
class ProblemInstance:
    p: int
    x: int

    def __post_init__(self) -> None:
        if self.p < 3 or self.p % 2 == 0 or not is_probable_prime(self.p):
            raise DomainError(f"p={self.p} is not an odd prime")
        if not 1 <= self.x <= self.p - 1:
            raise DomainError(f"x={self.x} not in [1, p-1]")

    @property
    def n(self) -> int:
        return bit_length_of_modulus(self.p)


@dataclass(frozen=True)
class MachineState:
    n: int
    work1: int
    work2: int
    lt: int
    lq: int
    lrp: int
    ls: int
    phase1: int = 0
    phase2: int = 0
    sign: int = 0
    iter: int = 0
    ctrl: int = 0

    @property
    def width(self) -> int:
        return self.n + 3

    # decoded view
    @property
    def t(self) -> int:
        return seg_le(self.work1, 0, self.lt)

    @property
    def q_field(self) -> int:
        return seg_be(self.work1, self.lt + 1, self.lt + self.lq)

    @property
    def q(self) -> int:
        """Partial quotient aligned to its final weight."""
        return self.q_field << self.ls

    @property
    def r(self) -> int:
        return seg_be(self.work1, self.lt + self.lq + 1, self.width - 1)

    @property
    def r_prime(self) -> int:
        w = self.width
        return seg_be(self.work2, w - self.lrp - self.ls, w - 1 - self.ls, w)

    @property
    def t_prime(self) -> int:
        w = self.width
        unrot = rotate_right(self.work2, self.ls, w)
        return seg_le(unrot, 0, w - 1 - self.lrp)

    def decoded(self) -> dict:
        return {
            "t": self.t,
            "q": self.q,
            "r": self.r,
            "t_prime": self.t_prime,
            "r_prime": self.r_prime,
        }


# bit-string helpers


def _mask(width: int) -> int:
    return (1 << width) - 1 if width > 0 else 0


def reverse_bits(value: int, width: int) -> int:
    if width <= 0:
        return 0
    return int(format(value, f"0{width}b")[::-1], 2)


def seg_le(reg: int, lo: int, hi: int, width: int | None = None) -> int:
    """Positions lo..hi read with lo as least significant."""
    if hi < lo:
        return 0
    if width is not None:
        return seg_le(rotate_left(reg, lo % width, width), 0, hi - lo)
    return (reg >> lo) & _mask(hi - lo + 1)


def seg_be(reg: int, lo: int, hi: int, width: int | None = None) -> int:
    """Positions lo..hi read with hi as least significant."""
    if hi < lo:
        return 0
    return reverse_bits(seg_le(reg, lo, hi, width), hi - lo + 1)


def put_le(reg: int, lo: int, hi: int, value: int) -> int:
    if hi < lo:
        return reg
    m = _mask(hi - lo + 1) << lo
    return (reg & ~m) | ((value << lo) & m)


def put_be(reg: int, lo: int, hi: int, value: int) -> int:
    return put_le(reg, lo, hi, reverse_bits(value, hi - lo + 1))


def rotate_left(reg: int, k: int, width: int) -> int:
    """Cyclic shift toward position 0 by k positions."""
    k %= width
    return ((reg >> k) | (reg << (width - k))) & _mask(width)


def rotate_right(reg: int, k: int, width: int) -> int:
    return rotate_left(reg, -k % width, width)


def bits_string(reg: int, width: int) -> str:
    return "".join("1" if (reg >> i) & 1 else "0" for i in range(width))


def from_bits_string(s: str) -> int:
    return sum(1 << i for i, ch in enumerate(s) if ch == "1")


# initialization


def init_state(inst: ProblemInstance) -> MachineState:
    n = inst.n
    w = n + 3
    flip = 1 if inst.x > inst.p // 2 else 0
    xr = inst.p - inst.x if flip else inst.x
    work1 = put_be(1, 3, w - 1, inst.p)
    work2 = put_be(0, 3, w - 1, xr)
    return MachineState(n=n, work1=work1, work2=work2, lt=1, lq=0, lrp=xr.bit_length(), ls=0, iter=flip)


# individual operations; each returns the new state and has an inverse


def _rot_work2(s: MachineState, k: int) -> MachineState:
    return replace(s, work2=rotate_left(s.work2, k, s.width), ls=s.ls + k)


def _r_window(s: MachineState) -> tuple[int, int]:
    return s.lt + s.lq + 1, s.width - 1 - s.ls


def _r_sub(s: MachineState, capture: bool, inverse: bool = False) -> MachineState:
    a, b = _r_window(s)
    if s.lrp == 0 or b < a:
        return s
    w = b - a + 1
    u = seg_be(s.work1, a, b)
    v = seg_be(s.work2, a, b)
    sign = s.sign
    if not inverse:
        d = u - v
        if capture:
            sign ^= 1 if d < 0 else 0
        u = d % (1 << w)
    else:
        tot = u + v
        if capture:
            sign ^= tot >> w
        u = tot % (1 << w)
    return replace(s, work1=put_be(s.work1, a, b, u), sign=sign)


def _r_add(s: MachineState, inverse: bool = False) -> MachineState:
    a, b = _r_window(s)
    if s.lrp == 0 or b < a:
        return s
    w = b - a + 1
    u = seg_be(s.work1, a, b)
    v = seg_be(s.work2, a, b)
    if not inverse:
        # a carry here only undoes the wrap of the preceding subtraction
        u = (u + v) % (1 << w)
    else:
        u = (u - v) % (1 << w)
    return replace(s, work1=put_be(s.work1, a, b, u))


def _t_window(s: MachineState) -> int:
    """Top position of the integer part of t' in work2."""
    top = s.width - 1 - s.lrp - s.ls
    assert s.t < (1 << (top + 1)), "t does not fit the integer part of t'"
    return top


def _t_sub(s: MachineState, inverse: bool = False) -> MachineState:
    top = _t_window(s)
    m = 1 << (top + 1)
    v = seg_le(s.work2, 0, top)
    v = (v + s.t) % m if inverse else (v - s.t) % m
    return replace(s, work2=put_le(s.work2, 0, top, v))


def _t_add_capture(s: MachineState, inverse: bool = False) -> MachineState:
    top = _t_window(s)
    m = 1 << (top + 1)
    v = seg_le(s.work2, 0, top)
    if not inverse:
        tot = v + s.t
        sign = s.sign ^ (1 if tot >= m else 0)
    else:
        tot = v - s.t
        sign = s.sign ^ (1 if tot < 0 else 0)
    return replace(s, work2=put_le(s.work2, 0, top, tot % m), sign=sign)


def _swap_sign(s: MachineState, pos: int) -> MachineState:
    bit = (s.work1 >> pos) & 1
    work1 = (s.work1 & ~(1 << pos)) | (s.sign << pos)
    return replace(s, work1=work1, sign=bit)


def _block2(s: MachineState, inverse: bool = False) -> MachineState:
    if not (s.phase1 ^ s.phase2):
        return s
    if s.phase1 == 0:
        # q grows: bump the count, then place the bit
        if not inverse:
            s = replace(s, lq=s.lq + 1)
            return _swap_sign(s, s.lt + s.lq)
        s = _swap_sign(s, s.lt + s.lq)
        return replace(s, lq=s.lq - 1)
    # q shrinks: take the bit, then drop the count
    if not inverse:
        s = _swap_sign(s, s.lt + s.lq)
        return replace(s, lq=s.lq - 1)
    s = replace(s, lq=s.lq + 1)
    return _swap_sign(s, s.lt + s.lq)


def _phase_update(s: MachineState, inverse: bool = False) -> MachineState:
    if not (s.lq == 0 and s.lrp > 0):
        return s
    p1, p2, sg = s.phase1, s.phase2, s.sign
    if not inverse:
        p2 ^= sg ^ p1
        sg ^= p2
    else:
        sg ^= p2
        p2 ^= sg ^ p1
    return replace(s, phase2=p2, sign=sg)


def _phase_flip(s: MachineState) -> MachineState:
    if s.ls != 0:
        return s
    return replace(s, phase1=s.phase1 ^ 1, phase2=s.phase2 ^ 1)


def _end_of_iteration(s: MachineState) -> MachineState:
    """Swap work registers and recompute lengths; an involution."""
    if not (s.lq == 0 and s.ls == 0):
        return s
    w = s.width
    new1, new2 = s.work2, s.work1
    lt = seg_le(new1, 0, w - 1 - s.lrp).bit_length()
    lrp = seg_be(new2, s.lt + 1, w - 1).bit_length()
    return replace(s, work1=new1, work2=new2, lt=lt, lrp=lrp, iter=s.iter ^ 1)


Observer = Callable[[str, MachineState], None]


def _ops() -> list[tuple[str, Callable[[MachineState], bool], Callable, Callable]]:
    """(name, condition, forward, inverse); no op changes its own condition."""
    return [
        ("preshift", lambda z: z.phase1 == 0, lambda z: _rot_work2(z, 1), lambda z: _rot_work2(z, -1)),
        ("preshift2", lambda z: z.phase1 == 0 and z.phase2 == 1, lambda z: _rot_work2(z, -2), lambda z: _rot_work2(z, 2)),
        ("r_sub", lambda z: z.phase1 == 0, lambda z: _r_sub(z, True), lambda z: _r_sub(z, True, True)),
        ("sign_flip1", lambda z: z.phase1 == 0 and z.phase2 == 1, lambda z: replace(z, sign=z.sign ^ 1), lambda z: replace(z, sign=z.sign ^ 1)),
        ("r_add", lambda z: z.phase1 == 0 and (z.phase2 == 0 or z.sign == 0), _r_add, lambda z: _r_add(z, True)),
        ("swap", lambda z: True, _block2, lambda z: _block2(z, True)),
        ("t_sub", lambda z: z.phase1 == 1 and (z.phase2 == 1 or z.sign == 0), _t_sub, lambda z: _t_sub(z, True)),
        ("sign_flip3", lambda z: z.phase1 == 1, lambda z: replace(z, sign=z.sign ^ 1), lambda z: replace(z, sign=z.sign ^ 1)),
        ("t_add", lambda z: z.phase1 == 1, _t_add_capture, lambda z: _t_add_capture(z, True)),
        ("postshift", lambda z: z.phase1 == 1, lambda z: _rot_work2(z, 1), lambda z: _rot_work2(z, -1)),
        ("postshift2", lambda z: z.phase1 == 1 and z.phase2 == 1, lambda z: _rot_work2(z, -2), lambda z: _rot_work2(z, 2)),
        ("phase_update", lambda z: True, _phase_update, lambda z: _phase_update(z, True)),
        ("phase_flip", lambda z: True, _phase_flip, _phase_flip),
        ("end_iteration", lambda z: True, _end_of_iteration, _end_of_iteration),
    ]


_OPS = _ops()


def step(s: MachineState, observer: Observer | None = None) -> MachineState:
    for name, cond, fwd, _ in _OPS:
        if cond(s):
            if observer is not None:
                observer(name, s)
            s = fwd(s)
    return s


def step_inverse(s: MachineState) -> MachineState:
    for _, cond, _, inv in reversed(_OPS):
        if cond(s):
            s = inv(s)
    return s


def run_steps(s: MachineState, count: int) -> list[MachineState]:
    states = [s]
    for _ in range(count):
        s = step(s)
        states.append(s)
    return states


def run_inversion(inst: ProblemInstance) -> int:
    budget = step_budget(inst.n)
    s0 = init_state(inst)
    s = s0
    for _ in range(budget):
        s = step(s)
    out = s.t_prime
    if s.iter == 0:
        out = inst.p - out
    for _ in range(budget):
        s = step_inverse(s)
    if s != s0:
        raise AssertionError("inverse steps did not restore the initial state")
    return out


# quotient bookkeeping


@dataclass(frozen=True)
class EEATrace:
    quotients: tuple[int, ...]
    remainders: tuple[int, ...]

    @property
    def bit_lengths(self) -> tuple[int, ...]:
        return tuple(q.bit_length() - 1 for q in self.quotients)

    @property
    def iterations(self) -> int:
        return len(self.quotients) + 1

    @property
    def active_steps(self) -> int:
        return 4 * sum(b + 1 for b in self.bit_lengths)


def euclid_trace(a: int, b: int) -> EEATrace:
    """Quotients of the folded Euclid run on (a, b); a need not be prime."""
    if not 0 < b < a:
        raise DomainError("need 0 < b < a")
    if b > a // 2:
        b = a - b
    rems = [a, b]
    qs = []
    while b:
        qs.append(a // b)
        a, b = b, a % b
        rems.append(b)
    return EEATrace(tuple(qs), tuple(rems))


def eea_trace(inst: ProblemInstance) -> EEATrace:
    return euclid_trace(inst.p, inst.x)


def active_step_count(inst: ProblemInstance) -> int:
    return eea_trace(inst).active_steps


# trace rendering


@dataclass(frozen=True)
class StepTrace:
    step: int
    work1: str
    work2: str
    t: int
    q: int
    r: int
    t_prime: int
    r_prime: int
    lt: int
    lq: int
    lrp: int
    ls: int
    phase1: int
    phase2: int
    iter: int
    sign: int


TSV_COLUMNS = [
    "step", "work1", "work2", "t", "q", "r", "t_prime", "r_prime",
    "lt", "lq", "lrp", "ls", "phase1", "phase2", "iter", "sign",
]


def render_work1(s: MachineState) -> str:
    bits = bits_string(s.work1, s.width)
    a = s.lt + 1
    b = a + s.lq
    return bits[:a] + "|" + bits[a:b] + "|" + bits[b:]


def render_work2(s: MachineState) -> str:
    w = s.width
    bits = bits_string(s.work2, w)
    lo = w - s.lrp - s.ls
    hi = w - s.ls
    return bits[:lo] + "|" + bits[lo:hi] + "|" + bits[hi:]


def trace_row(index: int, s: MachineState) -> StepTrace:
    if s.lrp == 0:
        w1 = w2 = "Terminated"
    else:
        w1, w2 = render_work1(s), render_work2(s)
    return StepTrace(
        step=index, work1=w1, work2=w2, t=s.t, q=s.q, r=s.r, t_prime=s.t_prime,
        r_prime=s.r_prime, lt=s.lt, lq=s.lq, lrp=s.lrp, ls=s.ls, phase1=s.phase1,
        phase2=s.phase2, iter=s.iter, sign=s.sign,
    )


def classical_trace(inst: ProblemInstance, steps: int | None = None) -> list[StepTrace]:
    count = step_budget(inst.n) if steps is None else steps
    return [trace_row(i, s) for i, s in enumerate(run_steps(init_state(inst), count))]


def trace_tsv(rows: Iterable[StepTrace]) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, delimiter="\t", lineterminator="\n")
    wr.writerow(TSV_COLUMNS)
    for row in rows:
        wr.writerow([getattr(row, c) for c in TSV_COLUMNS])
    return buf.getvalue()

