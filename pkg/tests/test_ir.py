import io
import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from modinv.ir import (
    CCX,
    CX,
    SWAP_,
    Circuit,
    CircuitError,
    CountSink,
    Gate,
    ListSink,
    OpSink,
    TextSink,
    X,
    apply,
    count,
    from_json,
    invert,
    lower,
    neg,
    parse,
    reversed_items,
    serialize,
    to_json,
)
from modinv.sim import compile_circuit, simulate

WIDTH = 5


@st.composite
def gates(draw, width=WIDTH):
    kind = draw(st.sampled_from(["x", "cx", "ccx", "swap", "cswap"]))
    need = {"x": 1, "cx": 2, "ccx": 3, "swap": 2, "cswap": 3}[kind]
    wires = draw(st.permutations(range(width)))[:need]
    pols = draw(st.lists(st.booleans(), min_size=2, max_size=2))

    def c(i, pol):
        return wires[i] if pol else neg(wires[i])

    if kind == "x":
        return X(wires[0])
    if kind == "cx":
        return CX(c(0, pols[0]), wires[1])
    if kind == "ccx":
        return CCX(c(0, pols[0]), c(1, pols[1]), wires[2])
    if kind == "swap":
        return SWAP_(wires[0], wires[1])
    return SWAP_(wires[1], wires[2], c(0, pols[0]))


circuits = st.lists(gates(), max_size=25).map(lambda gs: Circuit(WIDTH, gs))
ALL_INPUTS = [list(b) for b in itertools.product((0, 1), repeat=WIDTH)]


# semantics


def test_polarity():
    c = Circuit(2, [CX(neg(0), 1)])
    assert apply(c, [0, 0]) == [0, 1]
    assert apply(c, [1, 0]) == [1, 0]


def test_controlled_swap():
    c = Circuit(3, [SWAP_(1, 2, 0)])
    assert apply(c, [0, 1, 0]) == [0, 1, 0]
    assert apply(c, [1, 1, 0]) == [1, 0, 1]


@settings(max_examples=200, deadline=None)
@given(circuits)
def test_invert_is_identity(c):
    both = Circuit(WIDTH, c.items + invert(c).items)
    for bits in ALL_INPUTS:
        assert apply(both, bits) == bits


@settings(max_examples=200, deadline=None)
@given(circuits)
def test_lowering_preserves_semantics(c):
    low = lower(c)
    assert all(g.kind == "not" and len(g.controls) <= 2 and all(p for _, p in g.controls) for g in low.gates)
    for bits in ALL_INPUTS:
        assert apply(low, bits) == apply(c, bits)


@settings(max_examples=100, deadline=None)
@given(circuits)
def test_bitsliced_simulator_matches_reference(c):
    inputs = np.array(ALL_INPUTS, dtype=np.uint8)
    out = simulate(c, inputs)
    for row_in, row_out in zip(ALL_INPUTS, out):
        assert list(row_out) == apply(c, row_in)


@settings(max_examples=100, deadline=None)
@given(circuits)
def test_count_matches_lowered_gates(c):
    rep = count(c)
    low = lower(c).gates
    assert rep.toffoli == sum(len(g.controls) == 2 for g in low)
    assert rep.cnot == sum(len(g.controls) == 1 for g in low)
    assert rep.x == sum(len(g.controls) == 0 for g in low)
    assert len(compile_circuit(c)) == len(low)


@settings(max_examples=100, deadline=None)
@given(circuits, circuits)
def test_count_is_additive(a, b):
    ra, rb = count(a), count(b)
    rab = count(Circuit(WIDTH, a.items + b.items))
    assert (rab.toffoli, rab.cnot, rab.x) == (ra.toffoli + rb.toffoli, ra.cnot + rb.cnot, ra.x + rb.x)


def test_swap_costs():
    assert (count(Circuit(2, [SWAP_(0, 1)])).cnot, count(Circuit(2, [SWAP_(0, 1)])).toffoli) == (3, 0)
    rep = count(Circuit(3, [SWAP_(1, 2, 0)]))
    assert (rep.toffoli, rep.cnot) == (1, 2)


# validation


@pytest.mark.parametrize("make", [
    lambda: CCX(0, 0, 1),
    lambda: Gate("not", (0, 1)),
    lambda: Gate("swap", (0,)),
])
def test_malformed_gates(make):
    with pytest.raises(CircuitError):
        make()


def test_wire_out_of_range():
    with pytest.raises(CircuitError):
        Circuit(2, [CX(0, 2)])


def test_apply_rejects_wrong_length():
    with pytest.raises(CircuitError):
        apply(Circuit(2, []), [0])


def test_layout_overlap_rejected():
    with pytest.raises(CircuitError):
        Circuit(3, [], {"a": [0, 1], "b": [1, 2]})


# serialization


@settings(max_examples=100, deadline=None)
@given(circuits)
def test_text_round_trip(c):
    assert parse(serialize(c)) == c


@settings(max_examples=100, deadline=None)
@given(circuits)
def test_json_round_trip(c):
    assert from_json(to_json(c)) == c


@pytest.mark.parametrize("text", [
    "ccx 0 1 2\n",
    "width=3\nccx 0 0 1\n",
    "width=3\nccx 0 1\n",
    "width=3\nfoo 1\n",
    "width=3\ncx 0 3\n",
    "width=x\n",
    "",
])
def test_parse_errors(text):
    with pytest.raises(CircuitError):
        parse(text)


def test_parse_negative_control():
    c = parse("width=2\n# note\ncx ~0 1\n")
    assert c.gates == [CX(neg(0), 1)]
    assert c.items[0] == "note"


# sinks


def _emit_sample(s):
    s.block("outer", lambda t: (t.x(0), t.block("inner", lambda u: u.x(1, 0)), t.x(2, 0, 1)))
    s.x(2)


def test_count_sink_labels_nested_blocks():
    s = CountSink()
    _emit_sample(s)
    blocks = s.report.blocks
    assert blocks["outer"] == [1, 0, 1]
    assert blocks["inner"] == [0, 1, 0]
    assert blocks["other"] == [0, 0, 1]


def test_count_sink_matches_list_count():
    a, b = CountSink(), ListSink()
    for s in (a, b):
        _emit_sample(s)
        s.inverse(_emit_sample)
    rep = count(b.circuit(3))
    assert (a.report.toffoli, a.report.cnot, a.report.x) == (rep.toffoli, rep.cnot, rep.x)
    assert a.report.blocks == rep.blocks


def test_reversed_blocks_still_open_with_begin():
    items = ["begin a", X(0), "begin b", X(1), "end", "end"]
    rev = reversed_items(items)
    assert rev == ["begin a", "begin b", X(1), "end", X(0), "end"]


def test_inverse_sinks_agree():
    ls, ops, buf = ListSink(), OpSink(), io.StringIO()
    ts = TextSink(buf)
    for s in (ls, ops, ts):
        s.inverse(_emit_sample)
    c = ls.circuit(3)
    assert len(ops) == ts.gates == len(lower(c).gates)
    text = "width=3\n" + buf.getvalue()
    assert parse(text).gates == lower(c).gates
    assert np.array_equal(compile_circuit(c), np.asarray(ops.ops).reshape(-1, 4))
