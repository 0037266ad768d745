"""Shared helpers: build small circuits and run them on batches of register values."""

from __future__ import annotations

import numpy as np

from modinv.ir import ListSink
from modinv.sim import BatchState, compile_circuit


def build(width: int, fn) -> "Circuit":  # noqa: F821
    s = ListSink()
    fn(s)
    return s.circuit(width)


def run_registers(circuit, inputs: dict, samples: int) -> BatchState:
    """inputs maps a tuple of wires (LE) to a sequence of integer values."""
    st = BatchState(circuit.width, samples)
    for wires, values in inputs.items():
        st.set_register(list(wires), values)
    st.run(compile_circuit(circuit))
    return st


def grid(*sizes: int) -> list[np.ndarray]:
    mesh = np.meshgrid(*[np.arange(s) for s in sizes], indexing="ij")
    return [m.ravel() for m in mesh]
