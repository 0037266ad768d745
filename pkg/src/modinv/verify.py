"""Simulation-driven checks of synthesized circuits against the reference model."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence

from . import blocks as B
from .ir import OpSink
from .model import MachineState, ProblemInstance, init_state, run_inversion, step
from .numtheory import bit_length_of_modulus, is_probable_prime, step_budget
from .sim import BatchState, op_matrix
from .synth import QubitLayout, decode_state, layout, preamble_ops, synth_inversion, synth_step


def require_prime(p: int) -> None:
    if p < 5 or not is_probable_prime(p):
        raise ValueError(f"p={p} must be an odd prime >= 5")


@dataclass
class InversionCheck:
    p: int
    xs: list[int]
    outputs: list[int]
    expected: list[int]
    x_restored: list[bool]
    dirty: list[bool]
    oracle: list[int] | None = None
    width: int = 0
    gates: int = 0

    @property
    def failures(self) -> list[int]:
        bad = []
        for i, x in enumerate(self.xs):
            ok = self.outputs[i] == self.expected[i] and self.x_restored[i] and not self.dirty[i]
            if self.oracle is not None:
                ok = ok and self.oracle[i] == self.expected[i]
            if not ok:
                bad.append(x)
        return bad

    @property
    def passed(self) -> int:
        return len(self.xs) - len(self.failures)


def check_inversion(p: int, xs: Sequence[int] | None = None, oracle: bool = False) -> InversionCheck:
    """Simulate the full circuit on every x and compare with pow(x, -1, p)."""
    require_prime(p)
    xs = list(range(1, p)) if xs is None else [int(x) for x in xs]
    for x in xs:
        if not 1 <= x < p:
            raise ValueError(f"x={x} not in [1, p-1]")
    sink = OpSink()
    lay = synth_inversion(p, sink)
    st = BatchState(lay.width, len(xs))
    st.set_register(lay.x_wires, xs)
    st.run(op_matrix(sink.ops))
    outputs = st.register(lay.out)
    x_after = st.register(lay.x_wires)
    x_set = set(lay.x_wires) | set(lay.out)
    rest = [w for w in range(lay.width) if w not in x_set]
    bits = st.bits()
    dirty = [bool(v) for v in bits[rest].any(axis=0)] if rest else [False] * len(xs)
    return InversionCheck(
        p=p,
        xs=xs,
        outputs=outputs,
        expected=[pow(x, -1, p) for x in xs],
        x_restored=[a == b for a, b in zip(x_after, xs)],
        dirty=dirty,
        oracle=[run_inversion(ProblemInstance(p, x)) for x in xs] if oracle else None,
        width=lay.width,
        gates=len(sink),
    )


@dataclass
class StepSnapshot:
    T: int
    states: list[MachineState]
    pool_clean: bool
    out_clean: bool = True


def circuit_steps(p: int, xs: Sequence[int]) -> Iterator[StepSnapshot]:
    """Decoded circuit state after the preamble (T = 0) and after each step."""
    require_prime(p)
    n = bit_length_of_modulus(p)
    lay = layout(n)
    st = BatchState(lay.width, len(xs))
    st.set_register(lay.x_wires, list(xs))
    st.run(op_matrix(preamble_ops(lay, p).ops))
    pool = B.Pool(lay.pool)
    yield _snapshot(lay, st, 0)
    for T in range(1, step_budget(n) + 1):
        sink = OpSink()
        synth_step(sink, lay, pool, T)
        st.run(op_matrix(sink.ops))
        yield _snapshot(lay, st, T)


def _snapshot(lay: QubitLayout, st: BatchState, T: int) -> StepSnapshot:
    bits = st.bits()
    states = [decode_state(lay, bits[:, j]) for j in range(st.samples)]
    pool_clean = not bits[lay.pool].any()
    out_clean = not bits[lay.out].any()
    return StepSnapshot(T, states, bool(pool_clean), bool(out_clean))


@dataclass
class LockstepResult:
    p: int
    steps: int = 0
    compared: int = 0
    mismatches: list[tuple[int, int]] = field(default_factory=list)  # (T, x)
    dirty_steps: list[int] = field(default_factory=list)


def lockstep(p: int, xs: Sequence[int] | None = None) -> LockstepResult:
    """Compare decoded circuit state with the model after every step."""
    xs = list(range(1, p)) if xs is None else list(xs)
    res = LockstepResult(p)
    models = [init_state(ProblemInstance(p, x)) for x in xs]
    for snap in circuit_steps(p, xs):
        if snap.T:
            models = [step(m) for m in models]
        res.steps = snap.T
        for x, got, want in zip(xs, snap.states, models):
            res.compared += 1
            if got != want:
                res.mismatches.append((snap.T, x))
        if not (snap.pool_clean and snap.out_clean):
            res.dirty_steps.append(snap.T)
    return res
