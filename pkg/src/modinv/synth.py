"""Assemble the per-step circuit and the full modular-inversion circuit."""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

from . import blocks as B
from .ir import CountSink, OpSink, Sink
from .model import MachineState
from .numtheory import step_budget
from .windows import ActiveWindow, sound_windows


@dataclass
class QubitLayout:
    n: int
    work2: list[int]
    work1: list[int]
    lt: list[int]
    lq: list[int]
    lrp: list[int]
    ls: list[int]
    phase1: int
    phase2: int
    sign: int
    iter: int
    ctrl: int
    pool: list[int]
    out: list[int]
    extra_scratch: int = 0

    @property
    def L(self) -> int:
        return self.n.bit_length() - 1

    @property
    def width(self) -> int:
        return self.inversion_width + len(self.out)

    @property
    def inversion_width(self) -> int:
        return len(self.pool) + 2 * (self.n + 3) + len(self.lt) + len(self.lq) + len(self.lrp) + len(self.ls) + 5

    @property
    def x_wires(self) -> list[int]:
        """Input x, least significant first (fused into work2 positions 3..n+2)."""
        return [self.work2[self.n + 2 - j] for j in range(self.n)]

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "width": self.width,
            "inversion_width": self.inversion_width,
            "extra_scratch": self.extra_scratch,
            "registers": {
                "work2": self.work2,
                "work1": self.work1,
                "len_t": self.lt,
                "len_q": self.lq,
                "len_rp": self.lrp,
                "len_s": self.ls,
                "phase1": self.phase1,
                "phase2": self.phase2,
                "sign": self.sign,
                "iter": self.iter,
                "ctrl": self.ctrl,
                "scratch": self.pool,
                "out": self.out,
                "x": self.x_wires,
            },
        }


def shift_register_bits(n: int) -> int:
    """len_s counts padding steps from 0 after termination (at least 4n steps in), so it
    peaks at step_budget(n) - 4n; one more bit is added when that passes 2^(L+2)."""
    L = n.bit_length() - 1
    return L + 3 if step_budget(n) - 4 * n <= 1 << (L + 2) else L + 4


def _build_layout(n: int, scratch: int) -> QubitLayout:
    L = n.bit_length() - 1
    nxt = 0

    def take(k: int) -> list[int]:
        nonlocal nxt
        ws = list(range(nxt, nxt + k))
        nxt += k
        return ws

    work2 = take(n + 3)
    work1 = take(n + 3)
    lt, lq, lrp = take(L + 2), take(L + 2), take(L + 2)
    ls = take(shift_register_bits(n))
    p1, p2, sg, it, ct = take(5)
    pool = take(scratch)
    out = take(n)
    return QubitLayout(n, work2, work1, lt, lq, lrp, ls, p1, p2, sg, it, ct, pool, out, scratch - n)


@lru_cache(maxsize=None)
def scratch_need(n: int) -> int:
    """Peak scratch use of one full inversion, found by a counting dry run."""
    lay = _build_layout(n, 4 * n + 64)
    pool = B.Pool(lay.pool)
    sink = CountSink()
    _inversion(sink, lay, pool, _Prime.dry(n))
    return pool.peak


@lru_cache(maxsize=None)
def layout(n: int) -> QubitLayout:
    if n < 3:
        raise ValueError("n must be at least 3")
    return _build_layout(n, max(n, scratch_need(n)))


# helpers


def _ctrl_and(s: Sink, ct: int, a: int, b: int) -> None:
    s.x(ct, a, b)


def _walker_range(base_lo: int, base_hi: int, offs: Sequence[int]) -> tuple[int, int]:
    lo = base_lo + min(0, *offs)
    hi = base_hi + max(0, *offs)
    return lo, hi


# step blocks


def _shift(s: Sink, lay: QubitLayout, pool: B.Pool, pre: bool) -> None:
    p1, p2, ct = lay.phase1, lay.phase2, lay.ctrl
    lit = ~p1 if pre else p1
    B.rotate_left(s, lay.work2, 1, lit)
    B.reg_increment(s, pool, lay.ls, ctrl=lit)
    _ctrl_and(s, ct, lit, p2)
    B.rotate_right(s, lay.work2, 2, ct)
    B.reg_decrement(s, pool, lay.ls[1:], ctrl=ct)
    _ctrl_and(s, ct, lit, p2)


def _r_ripple(s: Sink, lay: QubitLayout, pool: B.Pool, w: ActiveWindow, subtract: bool,
              capture: int | None) -> None:
    """Windowed work1 -/+ work2 over positions [len_t+len_q+2, n+3-len_s] (len_q holds Q)."""
    n = lay.n
    k, K = w.k1, w.K1
    if k > K:
        return
    stages = [(lay.work1[i - 1], lay.work2[i - 1]) for i in range(K, k - 1, -1)]
    s_off = K - n - 3
    q_off = 3 - K
    span = K - k
    ws = B.Walker(s, pool, lay.ls, *_walker_range(-1, n + 1, [s_off, s_off - span]))
    wq = B.Walker(s, pool, lay.lq, *_walker_range(-1, n, [q_off, q_off + span]))
    mask = B.WindowMask(s, pool, lay.ctrl, [(ws, s_off, -1, False), (wq, q_off, 1, False)])
    B.loc_ripple(s, pool, stages, mask, subtract, capture)
    ws.add(-s_off)
    wq.add(-q_off)
    wq.close()
    ws.close()


def _block_r(s: Sink, lay: QubitLayout, pool: B.Pool, w: ActiveWindow) -> None:
    p1, p2, sg, ct = lay.phase1, lay.phase2, lay.sign, lay.ctrl
    slr = lay.lrp[-1]
    key = (lay.n, w.k1, w.K1, len(lay.ls), len(lay.lq))
    _ctrl_and(s, ct, ~p1, ~slr)
    B.emit(s, ("r-sub",) + key, lambda t: _r_ripple(t, lay, pool, w, True, sg))
    _ctrl_and(s, ct, ~p1, ~slr)
    s.x(sg, ~p1, p2)
    z1, z2 = pool.take(2)

    def gate(t: Sink) -> None:
        t.x(z1, p2, sg)
        t.x(z2, ~p1, ~z1)
        t.x(ct, z2, ~slr)
        t.x(z2, ~p1, ~z1)
        t.x(z1, p2, sg)

    gate(s)
    pool.give([z2, z1])
    B.emit(s, ("r-add",) + key, lambda t: _r_ripple(t, lay, pool, w, False, None))
    z1, z2 = pool.take(2)
    gate(s)
    pool.give([z2, z1])


def _loc_swap(s: Sink, lay: QubitLayout, pool: B.Pool, w: ActiveWindow) -> None:
    """Swap Sign with work1 position len_t+len_q+1 (len_q holds Q = stored len_q + stored len_t)."""
    n, ct, sg = lay.n, lay.ctrl, lay.sign
    k, K = w.k2, w.K2
    if k > K:
        return
    if k == K:
        s.swap(sg, lay.work1[K - 1], ct)
        return
    off = 3 - K
    wq = B.Walker(s, pool, lay.lq, *_walker_range(-1, n, [off, off + K - k - 1]))
    wq.add(off)
    B.controlled_swap_at(s, pool, sg, lay.work1[K - 1], ct, ~wq.sign)
    for i in range(K - 1, k, -1):
        B.controlled_swap_at(s, pool, sg, lay.work1[i - 1], ct, wq.sign)
        wq.add(1)
        B.controlled_swap_at(s, pool, sg, lay.work1[i - 1], ct, wq.sign)
    B.controlled_swap_at(s, pool, sg, lay.work1[k - 1], ct, wq.sign)
    wq.add(-(off + K - k - 1))
    wq.close()


def _block_swap(s: Sink, lay: QubitLayout, pool: B.Pool, w: ActiveWindow) -> None:
    p1, p2, ct = lay.phase1, lay.phase2, lay.ctrl
    _ctrl_and(s, ct, ~p1, p2)
    B.reg_increment(s, pool, lay.lq, ctrl=ct)
    _ctrl_and(s, ct, ~p1, p2)
    s.x(ct, p1)
    s.x(ct, p2)
    B.emit(s, ("loc-swap", lay.n, w.k2, w.K2, len(lay.lq)), lambda t: _loc_swap(t, lay, pool, w))
    s.x(ct, p2)
    s.x(ct, p1)
    _ctrl_and(s, ct, p1, ~p2)
    B.reg_decrement(s, pool, lay.lq, ctrl=ct)
    _ctrl_and(s, ct, p1, ~p2)


def _t_ripple(s: Sink, lay: QubitLayout, pool: B.Pool, w: ActiveWindow, subtract: bool,
              capture: int | None) -> None:
    """Windowed work2 -/+ work1 from position 1, cut at K3. The top is n+3-len_r'-len_s
    (len_s holds their sum) when len_q = 0, else len_t+1."""
    n, K = lay.n, w.K3
    stages = [(lay.work2[i - 1], lay.work1[i - 1]) for i in range(1, K + 1)]
    u_off = 1 - n - 2
    t_off = 1
    wu = B.Walker(s, pool, lay.ls, *_walker_range(-1, n + 1, [u_off, u_off + K - 1]))
    wt = B.Walker(s, pool, lay.lt, *_walker_range(0, n - 1, [t_off, t_off - K + 1]))
    mask = B.SelectMask(s, pool, lay.ctrl, lay.lq[-1], (wu, u_off, 1, False), (wt, t_off, -1, True))
    B.loc_ripple(s, pool, stages, mask, subtract, capture)
    wt.add(-t_off)
    wu.add(-u_off)
    wt.close()
    wu.close()


def _block_t(s: Sink, lay: QubitLayout, pool: B.Pool, w: ActiveWindow) -> None:
    p1, p2, sg, ct = lay.phase1, lay.phase2, lay.sign, lay.ctrl
    key = (lay.n, w.K3, len(lay.ls), len(lay.lt))
    B.reg_add(s, pool, lay.lrp, lay.ls)
    (z,) = pool.take(1)
    s.x(z, ~p2, sg)
    s.x(ct, p1, ~z)
    s.x(z, ~p2, sg)
    pool.give([z])
    B.emit(s, ("t-sub",) + key, lambda t: _t_ripple(t, lay, pool, w, True, None))
    (z,) = pool.take(1)
    s.x(z, ~p2, sg)
    s.x(ct, p1, ~z)
    s.x(z, ~p2, sg)
    pool.give([z])
    s.x(sg, p1)
    s.x(ct, p1)
    B.emit(s, ("t-add",) + key, lambda t: _t_ripple(t, lay, pool, w, False, sg))
    s.x(ct, p1)
    B.reg_add(s, pool, lay.lrp, lay.ls, subtract=True)


def _phase(s: Sink, lay: QubitLayout, pool: B.Pool) -> None:
    p1, p2, sg = lay.phase1, lay.phase2, lay.sign
    slq, slr, sls = lay.lq[-1], lay.lrp[-1], lay.ls[-1]
    with pool.borrowed(1) as (z,):
        s.x(z, slq, ~slr)
        s.x(p2, z, sg)
        s.x(p2, z, p1)
        s.x(sg, z, p2)
        s.x(z, slq, ~slr)
    s.x(p1, sls)
    s.x(p2, sls)


def _scan(s: Sink, pool: B.Pool, positions: Sequence[int], walker: B.Walker, step: int,
          pairs: Sequence[tuple[Sequence[int], Sequence[int], int]]) -> None:
    """Latch-and-count scan: each (data, counter, latch) counts positions from the first
    masked set bit to the end of the scan. The walker sign is the mask."""
    for idx, i in enumerate(positions):
        for data, counter, latch in pairs:
            B.latch_scan_step(s, pool, latch, walker.sign, data[i - 1], counter[-1])
        for data, counter, latch in pairs:
            B.reg_increment(s, pool, counter, ctrl=latch)
        if idx < len(positions) - 1:
            walker.add(step)


def _length_update_t(s: Sink, lay: QubitLayout, pool: B.Pool, w: ActiveWindow) -> None:
    n = lay.n
    k, K = w.k4, w.K4
    C, D = lay.ls, lay.lq
    positions = list(range(K, k - 1, -1))
    off = K - n - 3
    span = K - k

    def scan(t: Sink) -> None:
        wr = B.Walker(t, pool, lay.lrp, *_walker_range(-1, n - 1, [off, off - span]))
        wr.add(off)
        _scan(t, pool, positions, wr, -1, [(lay.work1, C, latches[0]), (lay.work2, D, latches[1])])
        wr.add(-(off - span))
        wr.close()

    latches = pool.take(2)
    scan(s)
    B.reg_add(s, pool, D, C, subtract=True)
    with pool.borrowed(1) as (c0,):
        B.add(s, C[: len(lay.lt)], lay.lt, c0, ctrl=lay.ctrl)
    B.reg_add(s, pool, D, C)
    s.inverse(scan)
    pool.give(latches[::-1])


def _length_update_r(s: Sink, lay: QubitLayout, pool: B.Pool, w: ActiveWindow) -> None:
    n = lay.n
    k, K = w.k5, w.K5
    C, D = lay.ls, lay.lq
    positions = list(range(k, K + 1))
    off = 2 - k
    span = K - k

    def scan(t: Sink) -> None:
        wt = B.Walker(t, pool, lay.lt, *_walker_range(0, n - 1, [off, off - span]))
        wt.add(off)
        _scan(t, pool, positions, wt, -1, [(lay.work2, C, latches[0]), (lay.work1, D, latches[1])])
        wt.add(-(off - span))
        wt.close()

    latches = pool.take(2)
    scan(s)
    B.reg_add(s, pool, D, C, subtract=True)
    with pool.borrowed(1) as (c0,):
        B.add(s, C[: len(lay.lrp)], lay.lrp, c0, ctrl=lay.ctrl)
    B.reg_add(s, pool, D, C)
    s.inverse(scan)
    pool.give(latches[::-1])


def _length_update(s: Sink, lay: QubitLayout, pool: B.Pool, w: ActiveWindow, T: int) -> None:
    ct = lay.ctrl
    slq, sls = lay.lq[-1], lay.ls[-1]
    s.mark(f"begin swap-work@T={T}")
    _ctrl_and(s, ct, slq, sls)
    for a, b in zip(lay.work1, lay.work2):
        s.swap(a, b, ct)
    s.mark("end")
    s.mark(f"begin len-lt@T={T}")
    B.emit(s, ("len-lt", lay.n, w.k4, w.K4), lambda t: _length_update_t(t, lay, pool, w))
    s.mark("end")
    s.mark(f"begin len-lrp@T={T}")
    B.emit(s, ("len-lrp", lay.n, w.k5, w.K5), lambda t: _length_update_r(t, lay, pool, w))
    s.mark("end")
    s.mark(f"begin swap-work@T={T}")
    s.x(lay.iter, ct)
    _ctrl_and(s, ct, slq, sls)
    s.mark("end")


def synth_step(s: Sink, lay: QubitLayout, pool: B.Pool, T: int, w: ActiveWindow | None = None) -> None:
    """One step of the machine at global index T."""
    w = w or sound_windows(lay.n, T)
    s.block(f"shift@T={T}", lambda t: _shift(t, lay, pool, True))
    B.reg_add(s, pool, lay.lt, lay.lq)
    s.block(f"r-addsub@T={T}", lambda t: _block_r(t, lay, pool, w))
    s.block(f"loc-swap@T={T}", lambda t: _block_swap(t, lay, pool, w))
    B.reg_add(s, pool, lay.lt, lay.lq, subtract=True)
    s.block(f"t-addsub@T={T}", lambda t: _block_t(t, lay, pool, w))
    s.block(f"shift@T={T}", lambda t: _shift(t, lay, pool, False))
    s.block(f"phase@T={T}", lambda t: _phase(t, lay, pool))
    if T % 4 == 0:
        _length_update(s, lay, pool, w, T)


# preamble, copy, driver


@dataclass(frozen=True)
class _Prime:
    p: int
    n: int

    @staticmethod
    def dry(n: int) -> "_Prime":
        return _Prime((1 << n) - 1, n)


def _x_consts(s: Sink, wires: Sequence[int], value: int, *ctrls: int) -> None:
    for j, w in enumerate(wires):
        if (value >> j) & 1:
            s.x(w, *ctrls)


def _preamble(s: Sink, lay: QubitLayout, pool: B.Pool, prime: _Prime) -> None:
    n, p = lay.n, prime.p
    x = lay.x_wires
    half = p // 2
    it, ct = lay.iter, lay.ctrl
    # Iter = [x > p // 2]
    with pool.borrowed(n) as anc:
        B.constant_add(s, x, (1 << n) - (half + 1), anc, cout=it)
        B.constant_add(s, x, -((1 << n) - (half + 1)), anc)
    # x <- p - x when Iter: ~x + (p + 1)
    for w in x:
        s.x(w, it)
    with pool.borrowed(n) as sc:
        _x_consts(s, sc, p + 1, it)
        B.add(s, sc, x, lay.work1[0])
        _x_consts(s, sc, p + 1, it)
    # work1 = "100" + p (big-endian p)
    s.x(lay.work1[0])
    _x_consts(s, [lay.work1[n + 2 - j] for j in range(n)], p)
    for w in lay.lq + lay.ls:
        s.x(w)
    # len_r' = bit length of x
    for w in lay.lrp:
        s.x(w)
    with pool.borrowed(1) as (latch,):
        for j in range(n - 1, -1, -1):
            s.x(latch, x[j], lay.lrp[-1])
            B.reg_increment(s, pool, lay.lrp, ctrl=latch)
        s.x(latch)
    del ct


def _barrel(s: Sink, lay: QubitLayout, direction: int) -> None:
    """Rotate work2 right (direction=+1) by len_s = stored + 1, or back (direction=-1)."""
    wires = lay.work2
    bits = lay.ls
    ops = [(1, None)]
    ops += [(1 << j, bits[j]) for j in range(len(bits) - 1)]
    ops += [(-(1 << (len(bits) - 1)), bits[-1])]
    if direction < 0:
        ops = list(reversed(ops))
    for amount, c in ops:
        k = -amount * direction
        if c is None:
            B.rotate(s, wires, k)
        else:
            B.rotate(s, wires, k, c)


def _copy_out(s: Sink, lay: QubitLayout, pool: B.Pool, prime: _Prime) -> None:
    n, p = lay.n, prime.p
    _barrel(s, lay, 1)
    for j in range(n):
        s.x(lay.out[j], lay.work2[j])
    _barrel(s, lay, -1)
    # out <- p - out unless Iter, using the known final work1 as scratch
    final1 = _final_work1(n, p)
    scratch = lay.work1[:n]
    _x_consts(s, lay.work1, final1)
    for w in lay.out:
        s.x(w, ~lay.iter)
    _x_consts(s, scratch, p + 1, ~lay.iter)
    B.add(s, scratch, lay.out, lay.ctrl)
    _x_consts(s, scratch, p + 1, ~lay.iter)
    _x_consts(s, lay.work1, final1)


def _final_work1(n: int, p: int) -> int:
    """Work1 after the last iteration: t = p little-endian, then r = 1."""
    w = n + 3
    return p | (1 << (w - 1))


def _inversion(s: Sink, lay: QubitLayout, pool: B.Pool, prime: _Prime) -> None:
    S = step_budget(lay.n)
    s.block("preamble", lambda t: _preamble(t, lay, pool, prime))
    for T in range(1, S + 1):
        synth_step(s, lay, pool, T)
    s.block("copy", lambda t: _copy_out(t, lay, pool, prime))
    for T in range(S, 0, -1):
        s.inverse(lambda t, T=T: synth_step(t, lay, pool, T))
    s.inverse(lambda t: t.block("preamble", lambda u: _preamble(u, lay, pool, prime)))


def synth_inversion(p: int, s: Sink) -> QubitLayout:
    """Emit the full circuit computing out = x^-1 mod p into ``s``."""
    from .numtheory import bit_length_of_modulus, is_probable_prime

    if p < 5 or not is_probable_prime(p):
        raise ValueError(f"p={p} must be an odd prime >= 5")
    n = bit_length_of_modulus(p)
    lay = layout(n)
    pool = B.Pool(lay.pool)
    _inversion(s, lay, pool, _Prime(p, n))
    return lay


def synth_steps(lay: QubitLayout, T_from: int, T_to: int, sink: Sink | None = None) -> Sink:
    sink = sink or OpSink()
    pool = B.Pool(lay.pool)
    for T in range(T_from, T_to + 1):
        synth_step(sink, lay, pool, T)
    return sink


def preamble_ops(lay: QubitLayout, p: int) -> OpSink:
    s = OpSink()
    _preamble(s, lay, B.Pool(lay.pool), _Prime(p, lay.n))
    return s


def decode_state(lay: QubitLayout, bits) -> MachineState:
    """Read a MachineState from one sample's wire values (indexable by wire)."""

    def reg(ws: Sequence[int]) -> int:
        return sum(int(bits[w]) << i for i, w in enumerate(ws))

    def length(ws: Sequence[int]) -> int:
        v = reg(ws)
        if v >> (len(ws) - 1):
            v -= 1 << len(ws)
        return v + 1

    return MachineState(
        n=lay.n,
        work1=reg(lay.work1),
        work2=reg(lay.work2),
        lt=length(lay.lt),
        lq=length(lay.lq),
        lrp=length(lay.lrp),
        ls=length(lay.ls),
        phase1=int(bits[lay.phase1]),
        phase2=int(bits[lay.phase2]),
        sign=int(bits[lay.sign]),
        iter=int(bits[lay.iter]),
        ctrl=int(bits[lay.ctrl]),
    )


def encode_state(lay: QubitLayout, st: MachineState) -> dict[int, int]:
    """Wire values holding ``st``; the inverse of decode_state on the data registers."""
    out: dict[int, int] = {}

    def reg(ws: Sequence[int], v: int) -> None:
        for i, w in enumerate(ws):
            out[w] = (v >> i) & 1

    def length(ws: Sequence[int], v: int) -> None:
        reg(ws, (v - 1) % (1 << len(ws)))

    reg(lay.work1, st.work1)
    reg(lay.work2, st.work2)
    for ws, v in ((lay.lt, st.lt), (lay.lq, st.lq), (lay.lrp, st.lrp), (lay.ls, st.ls)):
        length(ws, v)
    for w, v in ((lay.phase1, st.phase1), (lay.phase2, st.phase2), (lay.sign, st.sign),
                 (lay.iter, st.iter), (lay.ctrl, st.ctrl)):
        out[w] = v
    return out


def manifest(lay: QubitLayout, p: int | None = None) -> dict:
    S = step_budget(lay.n)
    return {
        "p": p,
        "layout": lay.as_dict(),
        "schedule": {"steps": S, "length_update_steps": [T for T in range(1, S + 1) if T % 4 == 0]},
        "windows": [sound_windows(lay.n, T).as_dict() for T in range(1, S + 1)],
    }


def manifest_json(lay: QubitLayout, p: int | None = None) -> str:
    return json.dumps(manifest(lay, p), indent=2)


__all__ = [
    "QubitLayout",
    "decode_state",
    "encode_state",
    "layout",
    "manifest",
    "manifest_json",
    "preamble_ops",
    "scratch_need",
    "shift_register_bits",
    "synth_inversion",
    "synth_step",
    "synth_steps",
]
