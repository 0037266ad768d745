import json
import random

import numpy as np
import pytest

from modinv import blocks as B
from modinv.estimate import inversion_width
from modinv.ir import CountSink, ListSink, OpSink, invert
from modinv.model import ProblemInstance, init_state, run_steps, step
from modinv.numtheory import largest_prime_below, primes_up_to, step_budget
from modinv.sim import BatchState, compile_circuit, op_matrix
from modinv.synth import (
    decode_state,
    encode_state,
    layout,
    manifest,
    shift_register_bits,
    synth_inversion,
    synth_step,
)
from modinv.verify import check_inversion, lockstep


def _load(lay, states):
    st = BatchState(lay.width, len(states))
    enc = [encode_state(lay, s) for s in states]
    for w in enc[0]:
        st.set_wire_values(w, np.array([e[w] for e in enc], dtype=np.uint8))
    return st


def _reachable(n, count, rng):
    ps = [p for p in primes_up_to(1 << n) if p >= max(5, 1 << (n - 1))]
    S = step_budget(n)
    by_T = {}
    for _ in range(count):
        p = rng.choice(ps)
        x = rng.randrange(1, p)
        T = rng.randrange(1, S + 1)
        by_T.setdefault(T, []).append(run_steps(init_state(ProblemInstance(p, x)), T - 1)[-1])
    return by_T


# layout


@pytest.mark.parametrize("n", [8, 16, 32])
def test_layout_width_formula(n):
    lay = layout(n)
    assert lay.inversion_width == 3 * n + 4 * (n.bit_length() - 1) + 20 == inversion_width(n)
    assert lay.width == lay.inversion_width + n
    wires = (lay.work1 + lay.work2 + lay.lt + lay.lq + lay.lrp + lay.ls + lay.pool + lay.out
             + [lay.phase1, lay.phase2, lay.sign, lay.iter, lay.ctrl])
    assert sorted(wires) == list(range(lay.width))


def test_length_registers_n16():
    lay = layout(16)
    assert len(lay.lt) + len(lay.lq) + len(lay.lrp) + len(lay.ls) == 25


def test_shift_register_extra_bit():
    assert shift_register_bits(16) == 7
    assert shift_register_bits(15) == 7 == 15 .bit_length() - 1 + 4
    for n in (8, 16, 32, 64, 128, 256):
        assert shift_register_bits(n) == n.bit_length() - 1 + 3


def test_small_n_uses_extra_scratch():
    assert layout(6).inversion_width == 48 > inversion_width(6)


def test_layout_rejects_tiny_n():
    with pytest.raises(ValueError):
        layout(2)


def test_encode_decode_round_trip():
    lay = layout(6)
    for T in (0, 5, 17, 36):
        s = run_steps(init_state(ProblemInstance(37, 13)), T)[-1]
        bits = [0] * lay.width
        for w, v in encode_state(lay, s).items():
            bits[w] = v
        assert decode_state(lay, bits) == s


def test_manifest_contents():
    lay = layout(6)
    m = manifest(lay, 37)
    assert m["schedule"]["steps"] == step_budget(6) == len(m["windows"])
    assert m["layout"]["registers"]["x"] == lay.x_wires
    json.dumps(m)


# behaviour


@pytest.mark.parametrize("p", [37, 101])
def test_lockstep_with_model(p):
    res = lockstep(p)
    assert res.steps == step_budget(ProblemInstance(p, 1).n)
    assert res.compared == (p - 1) * (res.steps + 1)
    assert res.mismatches == [] and res.dirty_steps == []


@pytest.mark.parametrize("p", [5, 7, 11, 13, 31, 37, 61, 127, 131, 251])
def test_full_inversion_small(p):
    res = check_inversion(p)
    assert res.failures == []
    assert res.passed == p - 1


def test_step_circuits_match_model_and_invert():
    rng = random.Random(11)
    lay = layout(6)
    for T, states in _reachable(6, 600, rng).items():
        sink = ListSink()
        synth_step(sink, lay, B.Pool(lay.pool), T)
        c = sink.circuit(lay.width)
        st = _load(lay, states)
        before = st.bits()
        st.run(compile_circuit(c))
        bits = st.bits()
        for j, s in enumerate(states):
            assert decode_state(lay, bits[:, j]) == step(s)
        assert not bits[lay.pool].any()
        st.run(compile_circuit(invert(c)))
        assert np.array_equal(st.bits(), before)


def test_sinks_agree_on_full_circuit():
    p = 13
    ops, cnt, lst = OpSink(), CountSink(), ListSink()
    for s in (ops, cnt, lst):
        lay = synth_inversion(p, s)
    c = lst.circuit(lay.width)
    assert len(ops) == cnt.report.toffoli + cnt.report.cnot + cnt.report.x
    # reversed negative-control flips may come out in another (commuting) order
    a, b = BatchState(lay.width, 256), BatchState(lay.width, 256)
    rng = np.random.default_rng(5)
    for w in range(lay.width):
        v = rng.integers(0, 2, 256)
        a.set_wire_values(w, v)
        b.set_wire_values(w, v)
    a.run(compile_circuit(c))
    b.run(op_matrix(ops.ops))
    assert np.array_equal(a.bits(), b.bits())


def test_synth_rejects_composite():
    with pytest.raises(ValueError):
        synth_inversion(35, CountSink())


def test_count_grows_with_n():
    tof = []
    for n in (5, 6, 7):
        s = CountSink()
        synth_inversion(largest_prime_below(1 << n), s)
        tof.append(s.report.toffoli)
    assert tof[0] < tof[1] < tof[2]
