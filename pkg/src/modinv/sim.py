"""Bitsliced basis-state simulation: wire w of sample j lives in bit j%64 of word j//64."""

from __future__ import annotations

import numpy as np
from numba import njit

from .ir import Circuit, OpSink


@njit(cache=True)
def _run(ops: np.ndarray, state: np.ndarray, start: int, stop: int) -> None:
    for i in range(start, stop):
        kind = ops[i, 0]
        t = ops[i, 3]
        if kind == 0:
            state[t, :] ^= np.uint64(0xFFFFFFFFFFFFFFFF)
        elif kind == 1:
            state[t, :] ^= state[ops[i, 1], :]
        else:
            state[t, :] ^= state[ops[i, 1], :] & state[ops[i, 2], :]


def op_matrix(ops) -> np.ndarray:
    arr = np.frombuffer(ops, dtype=np.int32) if not isinstance(ops, np.ndarray) else ops
    return np.ascontiguousarray(arr.reshape(-1, 4).astype(np.int64))


def compile_circuit(c: Circuit) -> np.ndarray:
    sink = OpSink()
    for g in c.gates:
        sink.gate(g)
    return op_matrix(sink.ops)


class BatchState:
    """A batch of classical basis states, one per sample."""

    def __init__(self, width: int, samples: int) -> None:
        self.width = width
        self.samples = samples
        self.words = (samples + 63) // 64
        self.data = np.zeros((width, self.words), dtype=np.uint64)

    def set_wire_values(self, wire: int, values: np.ndarray) -> None:
        bits = np.zeros(self.words * 64, dtype=np.uint8)
        bits[: self.samples] = values.astype(np.uint8) & 1
        self.data[wire] = _pack(bits)

    def set_register(self, wires, values) -> None:
        """Load integer values (LE: wires[0] is bit 0)."""
        vals = np.asarray(values, dtype=object)
        for i, w in enumerate(wires):
            self.set_wire_values(w, np.array([(int(v) >> i) & 1 for v in vals], dtype=np.uint8))

    def wire_values(self, wire: int) -> np.ndarray:
        return _unpack(self.data[wire])[: self.samples]

    def bits(self) -> np.ndarray:
        """(width, samples) uint8 matrix."""
        return np.stack([self.wire_values(w) for w in range(self.width)])

    def register(self, wires) -> list[int]:
        out = [0] * self.samples
        for i, w in enumerate(wires):
            col = self.wire_values(w)
            for j in np.nonzero(col)[0]:
                out[j] |= 1 << i
        return out

    def run(self, ops: np.ndarray, start: int = 0, stop: int | None = None) -> None:
        _run(ops, self.data, start, len(ops) if stop is None else stop)


def _pack(bits: np.ndarray) -> np.ndarray:
    b = bits.reshape(-1, 64).astype(np.uint64)
    weights = np.left_shift(np.uint64(1), np.arange(64, dtype=np.uint64))
    return (b * weights).sum(axis=1, dtype=np.uint64)


def _unpack(words: np.ndarray) -> np.ndarray:
    shifts = np.arange(64, dtype=np.uint64)
    return ((words[:, None] >> shifts) & np.uint64(1)).astype(np.uint8).ravel()


def simulate(c: Circuit, inputs: np.ndarray) -> np.ndarray:
    """inputs: (samples, width) 0/1 array; returns the outputs in the same shape."""
    inputs = np.asarray(inputs, dtype=np.uint8)
    st = BatchState(c.width, inputs.shape[0])
    for w in range(c.width):
        st.set_wire_values(w, inputs[:, w])
    st.run(compile_circuit(c))
    return st.bits().T.copy()
