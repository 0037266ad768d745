"""Reversible building blocks emitted into a Sink.

Registers are lists of wires, least significant first, unless stated otherwise.
Length-style registers hold a two's-complement value whose last wire is the sign.
Scratch wires come from a Pool and are always returned clean.
"""

from __future__ import annotations

from contextlib import contextmanager
from math import gcd
from typing import Callable, Iterator, Sequence

from .ir import Sink


class PoolExhausted(RuntimeError):
    pass


class Pool:
    """Allocator for clean scratch wires."""

    def __init__(self, wires: Sequence[int]) -> None:
        self._free = list(reversed(wires))
        self.size = len(self._free)
        self.peak = 0

    @property
    def in_use(self) -> int:
        return self.size - len(self._free)

    def take(self, k: int = 1) -> list[int]:
        if k > len(self._free):
            raise PoolExhausted(f"need {k} scratch wires, {len(self._free)} free of {self.size}")
        out = [self._free.pop() for _ in range(k)]
        self.peak = max(self.peak, self.in_use)
        return out

    def give(self, wires: Sequence[int]) -> None:
        self._free.extend(reversed(list(wires)))

    @contextmanager
    def borrowed(self, k: int = 1) -> Iterator[list[int]]:
        ws = self.take(k)
        try:
            yield ws
        finally:
            self.give(ws)


def emit(s: Sink, key, fn: Callable[[Sink], None]) -> None:
    """Run ``fn``; counting sinks replay a cached tally per structural key."""
    if s.counting:
        s.memo(key, fn)
    else:
        fn(s)


# ripple-carry adder


def maj(s: Sink, x: int, y: int, z: int) -> None:
    s.x(y, z)
    s.x(x, z)
    s.x(z, x, y)


def uma(s: Sink, x: int, y: int, z: int, ctrl: int | None = None) -> None:
    s.x(z, x, y)
    s.x(x, z)
    if ctrl is None:
        s.x(y, x)
    else:
        s.x(y, z)
        s.x(y, ctrl, z)
        s.x(y, ctrl, x)


def add(s: Sink, a: Sequence[int], b: Sequence[int], c0: int, cout: int | None = None,
        ctrl: int | None = None) -> None:
    """b += a (mod 2^w unless ``cout`` takes the carry). ``c0`` is clean scratch."""
    w = len(a)
    if w != len(b) or w == 0:
        raise ValueError("adder operands must have equal nonzero width")
    holders = [c0] + list(a[:-1])
    top = w if cout is not None else w - 1
    for i in range(top):
        maj(s, holders[i], b[i], a[i])
    if cout is not None:
        s.x(cout, a[-1]) if ctrl is None else s.x(cout, ctrl, a[-1])
    else:
        for src in (a[-1], holders[-1]):
            s.x(b[-1], src) if ctrl is None else s.x(b[-1], ctrl, src)
    for i in reversed(range(top)):
        uma(s, holders[i], b[i], a[i], ctrl)


def sub(s: Sink, a: Sequence[int], b: Sequence[int], c0: int, cout: int | None = None,
        ctrl: int | None = None) -> None:
    """b -= a; ``cout`` receives the borrow."""
    for w in b:
        s.x(w)
    add(s, a, b, c0, cout, ctrl)
    for w in b:
        s.x(w)


# incrementer


def increment(s: Sink, bits: Sequence[int], anc: Sequence[int], cout: int | None = None,
              ctrl: int | None = None) -> None:
    """bits += 1; without ``cout`` the top wire absorbs the carry (mod 2^w).

    Uses len(bits) clean ancillas (one fewer without ``cout``).
    """
    if cout is None:
        if len(bits) == 1:
            s.x(bits[0]) if ctrl is None else s.x(bits[0], ctrl)
            return
        increment(s, bits[:-1], anc, bits[-1], ctrl)
        return
    w = len(bits)
    h = list(anc[:w])
    if len(h) < w:
        raise ValueError("incrementer needs one ancilla per bit")
    s.x(h[0], bits[0]) if ctrl is None else s.x(h[0], ctrl, bits[0])
    for i in range(1, w):
        s.x(h[i], h[i - 1], bits[i])
    s.x(cout, h[w - 1])
    for i in range(w - 1, 0, -1):
        s.x(h[i], h[i - 1], bits[i])
        s.x(bits[i], h[i - 1])
    s.x(h[0], bits[0]) if ctrl is None else s.x(h[0], ctrl, bits[0])
    s.x(bits[0]) if ctrl is None else s.x(bits[0], ctrl)


def decrement(s: Sink, bits: Sequence[int], anc: Sequence[int], cout: int | None = None,
              ctrl: int | None = None) -> None:
    s.inverse(lambda t: increment(t, bits, anc, cout, ctrl))


# constant adder


class _Tracker:
    """Partial evaluator: wires with classically known values emit no gates."""

    VIRTUAL = "c0"

    def __init__(self, s: Sink) -> None:
        self.s = s
        self.known: dict = {}

    def set_known(self, w, value: int, physical: int) -> None:
        self.known[w] = [value, physical]

    def value(self, w) -> int | None:
        k = self.known.get(w)
        return None if k is None else k[0]

    def materialize(self, w) -> None:
        k = self.known.pop(w, None)
        if k is None:
            return
        if w == self.VIRTUAL:
            raise AssertionError("virtual carry cannot be materialized")
        if k[0] != k[1]:
            self.s.x(w)

    def flip(self, t) -> None:
        if t in self.known:
            self.known[t][0] ^= 1
        else:
            self.s.x(t)

    def cx(self, c, t) -> None:
        v = self.value(c)
        if v is not None:
            if v:
                self.flip(t)
            return
        self.materialize(t)
        self.s.x(t, c)

    def ccx(self, c1, c2, t) -> None:
        live = []
        for c in (c1, c2):
            v = self.value(c)
            if v == 0:
                return
            if v is None:
                live.append(c)
        if not live:
            self.flip(t)
        elif len(live) == 1:
            self.cx(live[0], t)
        else:
            self.materialize(t)
            self.s.x(t, c1, c2)

    def restore(self, w, value: int) -> None:
        if w in self.known:
            assert self.known[w][0] == value
        else:
            self.known[w] = [value, value]


def constant_add(s: Sink, bits: Sequence[int], k: int, anc: Sequence[int], cout: int | None = None) -> None:
    """bits += k (mod 2^w unless ``cout`` takes the carry). Needs len(bits) clean ancillas."""
    w = len(bits)
    if cout is None:
        k %= 1 << w
        if k == 0:
            return
        if k == 1:
            increment(s, bits, anc)
            return
        if k == (1 << w) - 1:
            decrement(s, bits, anc)
            return
    elif not 0 <= k < (1 << w):
        raise ValueError("constant out of range for a carry-out adder")
    a = list(anc[:w])
    if len(a) < w:
        raise ValueError("constant adder needs one ancilla per bit")
    tr = _Tracker(s)
    kb = [(k >> i) & 1 for i in range(w)]
    for i, wire in enumerate(a):
        tr.set_known(wire, kb[i], 0)
    tr.set_known(tr.VIRTUAL, 0, 0)
    holders = [tr.VIRTUAL] + a[:-1]
    top = w if cout is not None else w - 1

    def tmaj(i: int) -> None:
        tr.cx(a[i], bits[i])
        tr.cx(a[i], holders[i])
        tr.ccx(holders[i], bits[i], a[i])

    def tuma(i: int) -> None:
        tr.ccx(holders[i], bits[i], a[i])
        tr.restore(a[i], kb[i])
        tr.cx(a[i], holders[i])
        tr.cx(holders[i], bits[i])

    for i in range(top):
        tmaj(i)
    if cout is not None:
        tr.cx(a[-1], cout)
    else:
        tr.cx(a[-1], bits[-1])
        tr.cx(holders[-1], bits[-1])
    for i in reversed(range(top)):
        tuma(i)
    for wire in a:
        state = tr.known.get(wire)
        assert state is not None and state[0] == kb[a.index(wire)]
        if state[1]:
            s.x(wire)


# cyclic shifts


def rotate(s: Sink, wires: Sequence[int], k: int, *ctrls: int) -> None:
    """Move the content of position i to position i - k (mod len) using cycle swaps."""
    m = len(wires)
    k %= m
    if k == 0:
        return
    for start in range(gcd(m, k)):
        cycle = []
        j = start
        while True:
            cycle.append(j)
            j = (j + k) % m
            if j == start:
                break
        for u, v in zip(cycle, cycle[1:]):
            s.swap(wires[u], wires[v], *ctrls)


def rotate_left(s: Sink, wires: Sequence[int], k: int = 1, *ctrls: int) -> None:
    rotate(s, wires, k, *ctrls)


def rotate_right(s: Sink, wires: Sequence[int], k: int = 1, *ctrls: int) -> None:
    rotate(s, wires, -k, *ctrls)


# walkers


def _fits(lo: int, hi: int, w: int) -> bool:
    return -(1 << (w - 1)) <= lo and hi <= (1 << (w - 1)) - 1


class Walker:
    """A length register walked by constants; its sign wire tracks a moving comparison.

    Values outside the register's range are handled by borrowing sign-extension wires.
    """

    def __init__(self, s: Sink, pool: Pool, reg: Sequence[int], lo: int, hi: int) -> None:
        self.s = s
        self.pool = pool
        self.reg = list(reg)
        e = 0
        while not _fits(lo, hi, len(self.reg) + e):
            e += 1
        self.ext = pool.take(e)
        for x in self.ext:
            s.x(x, self.reg[-1])
        self.bits = self.reg + self.ext

    @property
    def sign(self) -> int:
        return self.bits[-1]

    @property
    def width(self) -> int:
        return len(self.bits)

    def add(self, k: int, ctrl: int | None = None) -> None:
        k %= 1 << self.width
        if k == 0:
            return
        with self.pool.borrowed(self.width) as anc:
            if ctrl is not None:
                key = (self.width, _ctrl_kind(ctrl))
                if k == 1:
                    emit(self.s, ("inc",) + key, lambda t: increment(t, self.bits, anc, ctrl=ctrl))
                elif k == (1 << self.width) - 1:
                    emit(self.s, ("dec",) + key, lambda t: decrement(t, self.bits, anc, ctrl=ctrl))
                else:
                    raise ValueError("controlled walker steps are +-1")
                return
            key = ("cadd", self.width, k)
            emit(self.s, key, lambda t: constant_add(t, self.bits, k, anc))

    def close(self) -> None:
        for x in self.ext:
            self.s.x(x, self.reg[-1])
        self.pool.give(self.ext)
        self.ext = []


def _ctrl_kind(ctrl: int | None) -> int:
    return 0 if ctrl is None else (1 if ctrl >= 0 else -1)


def reg_increment(s: Sink, pool: Pool, reg: Sequence[int], ctrl: int | None = None) -> None:
    with pool.borrowed(len(reg)) as anc:
        emit(s, ("inc", len(reg), _ctrl_kind(ctrl)), lambda t: increment(t, reg, anc, ctrl=ctrl))


def reg_decrement(s: Sink, pool: Pool, reg: Sequence[int], ctrl: int | None = None) -> None:
    with pool.borrowed(len(reg)) as anc:
        emit(s, ("dec", len(reg), _ctrl_kind(ctrl)), lambda t: decrement(t, reg, anc, ctrl=ctrl))


def reg_add(s: Sink, pool: Pool, a: Sequence[int], b: Sequence[int], ctrl: int | None = None,
            subtract: bool = False) -> None:
    """b (+/-)= a modulo 2^len(b); a is zero-extended to len(b)."""
    a = list(a)
    pad = max(0, len(b) - len(a))
    with pool.borrowed(pad + 1) as sc:
        ext = a + sc[:pad]
        if subtract:
            sub(s, ext[: len(b)], b, sc[pad], ctrl=ctrl)
        else:
            add(s, ext[: len(b)], b, sc[pad], ctrl=ctrl)


# location-controlled ripple


class Mask:
    """Per-stage enable bit of a windowed ripple; ``open`` yields a wire holding the enable."""

    def start(self) -> None: ...

    def open(self) -> int: ...

    def close(self) -> None: ...

    def advance(self, direction: int) -> None: ...

    def finish(self) -> None: ...


def masked_maj(s: Sink, x: int, b: int, a: int, g: int) -> None:
    s.x(b, g, a)
    s.x(x, g, a)
    s.x(a, x, b)
    s.swap(x, a, ~g)


def masked_uma(s: Sink, x: int, b: int, a: int, g: int) -> None:
    s.swap(x, a, ~g)
    s.x(a, x, b)
    s.x(x, g, a)
    s.x(b, g, x)


def loc_ripple(s: Sink, pool: Pool, stages: Sequence[tuple[int, int]], mask: Mask,
               subtract: bool, capture: int | None = None) -> None:
    """Add (or subtract) the ``a`` wires into the ``b`` wires of the enabled stages.

    Stages run least significant first; the enabled stages must be contiguous.
    ``capture`` receives the carry (borrow) out of the enabled range.
    """
    if not stages:
        return
    m = len(stages)
    with pool.borrowed(1) as (c0,):
        holders = [c0] + [a for _, a in stages[:-1]]
        mask.start()
        for k, (b, a) in enumerate(stages):
            g = mask.open()
            if subtract:
                s.x(b, g)
            masked_maj(s, holders[k], b, a, g)
            mask.close()
            if k < m - 1:
                mask.advance(1)
        if capture is not None:
            s.x(capture, stages[-1][1])
        for k in range(m - 1, -1, -1):
            b, a = stages[k]
            g = mask.open()
            masked_uma(s, holders[k], b, a, g)
            if subtract:
                s.x(b, g)
            mask.close()
            if k > 0:
                mask.advance(-1)
        mask.finish()


class WindowMask(Mask):
    """Enable = ctrl AND the signs (or inverted signs) of one or two walkers.

    Each walker is (walker, start_offset, step_per_stage, negate).
    """

    def __init__(self, s: Sink, pool: Pool, ctrl: int, walkers: list[tuple[Walker, int, int, bool]]) -> None:
        self.s = s
        self.pool = pool
        self.ctrl = ctrl
        self.walkers = walkers
        self._temps: list[int] = []

    def start(self) -> None:
        for w, off, _, _ in self.walkers:
            w.add(off)

    def _lit(self, w: Walker, negate: bool) -> int:
        return ~w.sign if negate else w.sign

    def open(self) -> int:
        s = self.s
        lits = [self._lit(w, neg) for w, _, _, neg in self.walkers]
        if len(lits) == 1:
            (g,) = self.pool.take(1)
            s.x(g, self.ctrl, lits[0])
            self._temps = [g]
            return g
        z, g = self.pool.take(2)
        s.x(z, self.ctrl, lits[0])
        s.x(g, z, lits[1])
        self._temps = [z, g]
        return g

    def close(self) -> None:
        s = self.s
        lits = [self._lit(w, neg) for w, _, _, neg in self.walkers]
        if len(self._temps) == 1:
            (g,) = self._temps
            s.x(g, self.ctrl, lits[0])
        else:
            z, g = self._temps
            s.x(g, z, lits[1])
            s.x(z, self.ctrl, lits[0])
        self.pool.give(list(reversed(self._temps)))
        self._temps = []

    def advance(self, direction: int) -> None:
        for w, _, step, _ in self.walkers:
            w.add(step * direction)

    def finish(self) -> None:
        pass


class SelectMask(Mask):
    """Enable = ctrl AND (sel ? lit_a : lit_b) for two walkers stepping together."""

    def __init__(self, s: Sink, pool: Pool, ctrl: int, sel: int,
                 a: tuple[Walker, int, int, bool], b: tuple[Walker, int, int, bool]) -> None:
        self.s = s
        self.pool = pool
        self.ctrl = ctrl
        self.sel = sel
        self.walkers = [a, b]
        self._temps: list[int] = []

    def start(self) -> None:
        for w, off, _, _ in self.walkers:
            w.add(off)

    def _select(self, z: int) -> None:
        (wa, _, _, na), (wb, _, _, nb) = self.walkers
        self.s.x(z, self.sel, ~wa.sign if na else wa.sign)
        self.s.x(z, ~self.sel, ~wb.sign if nb else wb.sign)

    def open(self) -> int:
        z, g = self.pool.take(2)
        self._select(z)
        self.s.x(g, self.ctrl, z)
        self._temps = [z, g]
        return g

    def close(self) -> None:
        z, g = self._temps
        self.s.x(g, self.ctrl, z)
        self._select(z)
        self.pool.give([g, z])
        self._temps = []

    def advance(self, direction: int) -> None:
        for w, _, step, _ in self.walkers:
            w.add(step * direction)

    def finish(self) -> None:
        pass


def controlled_swap_at(s: Sink, pool: Pool, a: int, b: int, ctrl: int, lit: int) -> None:
    """Swap a and b when ctrl AND lit."""
    with pool.borrowed(1) as (z,):
        s.x(z, ctrl, lit)
        s.swap(a, b, z)
        s.x(z, ctrl, lit)


def latch_scan_step(s: Sink, pool: Pool, latch: int, mask_lit: int, data: int, counter_sign: int) -> None:
    """latch ^= mask AND data AND (counter still negative)."""
    with pool.borrowed(1) as (z,):
        s.x(z, mask_lit, data)
        s.x(latch, z, counter_sign)
        s.x(z, mask_lit, data)


# standalone circuits with fixed wire layouts, for inspection and counting


def cuccaro_adder(width: int, mode: str = "add", sign_capture: bool = False):
    """a on wires [0, w), b on [w, 2w), carry scratch 2w, optional carry/borrow 2w+1."""
    from .ir import ListSink

    if mode not in ("add", "sub"):
        raise ValueError("mode must be 'add' or 'sub'")
    a, b = list(range(width)), list(range(width, 2 * width))
    c0, cout = 2 * width, (2 * width + 1 if sign_capture else None)
    s = ListSink()
    (add if mode == "add" else sub)(s, a, b, c0, cout)
    regs = {"a": a, "b": b, "carry": [c0]} | ({"sign": [cout]} if sign_capture else {})
    return s.circuit(2 * width + 1 + int(sign_capture), regs)


def _counter(width: int, down: bool):
    from .ir import ListSink

    bits, anc, cout = list(range(width)), list(range(width, 2 * width)), 2 * width
    s = ListSink()
    (decrement if down else increment)(s, bits, anc, cout)
    return s.circuit(2 * width + 1, {"bits": bits, "ancilla": anc, "carry": [cout]})


def incrementer(width: int):
    """bits on [0, w) plus carry-out 2w; ancillas [w, 2w) return clean."""
    return _counter(width, down=False)


def decrementer(width: int):
    return _counter(width, down=True)


def constant_adder(width: int, constant: int):
    """bits += constant (mod 2^w); bits on [0, w), ancillas [w, 2w)."""
    from .ir import ListSink

    if width < 1:
        raise ValueError("width must be positive")
    bits, anc = list(range(width)), list(range(width, 2 * width))
    s = ListSink()
    constant_add(s, bits, constant, anc)
    return s.circuit(2 * width, {"bits": bits, "ancilla": anc})


def cyclic_shift(width: int, direction: str = "left", amount: int = 1, controlled: bool = True):
    """Rotate wires [0, w) by ``amount``; the control, if any, is wire w."""
    from .ir import ListSink

    if direction not in ("left", "right"):
        raise ValueError("direction must be 'left' or 'right'")
    wires = list(range(width))
    ctrls = (width,) if controlled else ()
    s = ListSink()
    (rotate_left if direction == "left" else rotate_right)(s, wires, amount, *ctrls)
    return s.circuit(width + len(ctrls), {"data": wires} | ({"ctrl": [width]} if controlled else {}))
