"""Gate-level IR for Toffoli networks: gates, circuits, sinks, lowering, counting, text/JSON.

Controls are passed to builders as ints: ``w`` is a positive control on wire ``w``
and ``~w`` (a negative int) is a negative control on wire ``w``.
"""

from __future__ import annotations

import json
from array import array
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Sequence

NOT = "not"
SWAP = "swap"


class CircuitError(ValueError):
    pass


def neg(wire: int) -> int:
    return ~wire


def _ctrl(spec: int) -> tuple[int, bool]:
    return (spec, True) if spec >= 0 else (~spec, False)


@dataclass(frozen=True, slots=True)
class Gate:
    kind: str
    targets: tuple[int, ...]
    controls: tuple[tuple[int, bool], ...] = ()

    def __post_init__(self) -> None:
        wires = list(self.targets) + [w for w, _ in self.controls]
        if len(set(wires)) != len(wires):
            raise CircuitError(f"duplicate wire in {self}")
        if self.kind == NOT and len(self.targets) != 1:
            raise CircuitError("NOT takes one target")
        if self.kind == SWAP and len(self.targets) != 2:
            raise CircuitError("SWAP takes two targets")
        if len(self.controls) > 3:
            raise CircuitError("at most three controls")

    @property
    def wires(self) -> tuple[int, ...]:
        return self.targets + tuple(w for w, _ in self.controls)


def X(t: int) -> Gate:
    return Gate(NOT, (t,))


def CX(c: int, t: int) -> Gate:
    return Gate(NOT, (t,), (_ctrl(c),))


def CCX(c1: int, c2: int, t: int) -> Gate:
    return Gate(NOT, (t,), (_ctrl(c1), _ctrl(c2)))


def SWAP_(a: int, b: int, *ctrls: int) -> Gate:
    return Gate(SWAP, (a, b), tuple(_ctrl(c) for c in ctrls))


@dataclass
class Circuit:
    width: int
    items: list = field(default_factory=list)  # Gate or str comment
    layout: dict[str, list[int]] = field(default_factory=dict)

    @property
    def gates(self) -> list[Gate]:
        return [g for g in self.items if isinstance(g, Gate)]

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        for g in self.items:
            if isinstance(g, Gate) and any(w < 0 or w >= self.width for w in g.wires):
                raise CircuitError(f"gate {g} outside width {self.width}")
        seen: set[int] = set()
        for name, wires in self.layout.items():
            if seen & set(wires):
                raise CircuitError(f"layout region {name} overlaps")
            seen |= set(wires)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Circuit) and self.width == other.width and self.gates == other.gates


# reference semantics


def gate_fires(g: Gate, bits: Sequence[int]) -> bool:
    return all(bool(bits[w]) == pol for w, pol in g.controls)


def apply(c: Circuit, bits: Sequence[int]) -> list[int]:
    if len(bits) != c.width:
        raise CircuitError(f"expected {c.width} bits, got {len(bits)}")
    out = [int(b) & 1 for b in bits]
    for g in c.gates:
        if not gate_fires(g, out):
            continue
        if g.kind == NOT:
            out[g.targets[0]] ^= 1
        else:
            a, b = g.targets
            out[a], out[b] = out[b], out[a]
    return out


def invert(c: Circuit) -> Circuit:
    return Circuit(c.width, reversed_items(c.items), dict(c.layout))


def reversed_items(items: Sequence) -> list:
    """Items in reverse order; each "begin <label>" ... "end" pair still opens with begin."""
    pairs = _marker_pairs([it if isinstance(it, str) else None for it in items])
    return [items[pairs.get(i, i)] for i in range(len(items) - 1, -1, -1)]


def _marker_pairs(texts: Sequence[str | None]) -> dict[int, int]:
    stack: list[int] = []
    pair: dict[int, int] = {}
    for i, t in enumerate(texts):
        if t is None:
            continue
        if t.startswith("begin "):
            stack.append(i)
        elif t == "end" and stack:
            j = stack.pop()
            pair[i] = j
            pair[j] = i
    return pair


def lower_gate(g: Gate) -> list[Gate]:
    negs = [w for w, pol in g.controls if not pol]
    pos = tuple((w, True) for w, _ in g.controls)
    if g.kind == NOT:
        if len(g.controls) > 2:
            raise CircuitError(f"cannot lower {len(g.controls)}-control NOT")
        core = [Gate(NOT, g.targets, pos)]
    else:
        a, b = g.targets
        if len(g.controls) == 0:
            core = [CX(a, b), CX(b, a), CX(a, b)]
        elif len(g.controls) == 1:
            c = g.controls[0][0]
            core = [CX(b, a), CCX(c, a, b), CX(b, a)]
        else:
            raise CircuitError("cannot lower a swap with more than one control")
    flips = [X(w) for w in negs]
    return flips + core + flips


def lower(c: Circuit) -> Circuit:
    items: list = []
    for it in c.items:
        if isinstance(it, Gate):
            items.extend(lower_gate(it))
        else:
            items.append(it)
    return Circuit(c.width, items, dict(c.layout))


def lowered_cost(g: Gate) -> tuple[int, int, int]:
    """(ccx, cx, x) after lowering."""
    nneg = sum(1 for _, pol in g.controls if not pol)
    k = len(g.controls)
    if g.kind == NOT:
        if k > 2:
            raise CircuitError(f"cannot lower {k}-control NOT")
        base = ((0, 0, 1), (0, 1, 0), (1, 0, 0))[k]
    else:
        if k > 1:
            raise CircuitError("cannot lower a swap with more than one control")
        base = (0, 3, 0) if k == 0 else (1, 2, 0)
    return base[0], base[1], base[2] + 2 * nneg


@dataclass
class ResourceReport:
    toffoli: int = 0
    cnot: int = 0
    x: int = 0
    width: int = 0
    swap_lowered: bool = True
    blocks: dict[str, list[int]] = field(default_factory=dict)

    def add(self, ccx: int, cx: int, nx: int, label: str | None = None) -> None:
        self.toffoli += ccx
        self.cnot += cx
        self.x += nx
        if label is not None:
            tally = self.blocks.setdefault(label, [0, 0, 0])
            tally[0] += ccx
            tally[1] += cx
            tally[2] += nx

    def as_dict(self) -> dict:
        return {
            "toffoli": self.toffoli,
            "cnot": self.cnot,
            "x": self.x,
            "width": self.width,
            "swap_lowered": self.swap_lowered,
            "blocks": {k: {"toffoli": v[0], "cnot": v[1], "x": v[2]} for k, v in sorted(self.blocks.items())},
        }


def count(c: Circuit | Iterable[Gate], width: int | None = None) -> ResourceReport:
    """Counts in the lowered {X, CX, CCX} basis; accepts any gate stream."""
    rep = ResourceReport(width=width if width is not None else getattr(c, "width", 0))
    labels = _LabelStack()
    stream = c.items if isinstance(c, Circuit) else c
    for it in stream:
        if isinstance(it, str):
            labels.mark(it)
            continue
        rep.add(*lowered_cost(it), label=labels.current)
    return rep


OTHER = "other"


class _LabelStack:
    """Tracks the innermost open "begin <label>@..." marker; gates outside blocks are "other"."""

    def __init__(self) -> None:
        self.stack: list[str] = []

    @property
    def current(self) -> str:
        return self.stack[-1] if self.stack else OTHER

    def mark(self, text: str) -> None:
        if text.startswith("begin "):
            self.stack.append(text[6:].split("@", 1)[0])
        elif text == "end" and self.stack:
            self.stack.pop()


# sinks: synthesis writes into a sink, which may store, count, or compile


class Sink:
    counting = False

    def gate(self, g: Gate) -> None:
        raise NotImplementedError

    def mark(self, text: str) -> None:
        pass

    def fresh(self) -> "Sink":
        raise NotImplementedError

    def extend_reversed(self, other: "Sink") -> None:
        raise NotImplementedError

    # builders
    def x(self, t: int, *ctrls: int) -> None:
        self.gate(Gate(NOT, (t,), tuple(_ctrl(c) for c in ctrls)))

    def swap(self, a: int, b: int, *ctrls: int) -> None:
        self.gate(Gate(SWAP, (a, b), tuple(_ctrl(c) for c in ctrls)))

    def inverse(self, fn: Callable[["Sink"], None]) -> None:
        """Emit the inverse of whatever ``fn`` emits."""
        tmp = self.fresh()
        fn(tmp)
        self.extend_reversed(tmp)

    def block(self, label: str, fn: Callable[["Sink"], None]) -> None:
        self.mark(f"begin {label}")
        fn(self)
        self.mark("end")


class ListSink(Sink):
    def __init__(self) -> None:
        self.items: list = []

    def gate(self, g: Gate) -> None:
        self.items.append(g)

    def mark(self, text: str) -> None:
        self.items.append(text)

    def fresh(self) -> "ListSink":
        return ListSink()

    def extend_reversed(self, other: Sink) -> None:
        assert isinstance(other, ListSink)
        self.items.extend(reversed_items(other.items))

    def circuit(self, width: int, layout: dict | None = None) -> Circuit:
        return Circuit(width, list(self.items), dict(layout or {}))


class CountSink(Sink):
    """Tallies lowered counts without storing gates; inverses cost the same."""

    counting = True

    def __init__(self, width: int = 0) -> None:
        self.report = ResourceReport(width=width)
        self.labels = _LabelStack()
        self._memo: dict = {}

    def gate(self, g: Gate) -> None:
        self.report.add(*lowered_cost(g), label=self.labels.current)

    def x(self, t: int, *ctrls: int) -> None:
        k = len(ctrls)
        if k > 2:
            raise CircuitError(f"cannot lower {k}-control NOT")
        nneg = 2 * sum(1 for c in ctrls if c < 0)
        self.add((1 if k == 2 else 0, 1 if k == 1 else 0, (1 if k == 0 else 0) + nneg))

    def swap(self, a: int, b: int, *ctrls: int) -> None:
        k = len(ctrls)
        if k > 1:
            raise CircuitError("cannot lower a swap with more than one control")
        nneg = 2 * sum(1 for c in ctrls if c < 0)
        self.add((0, 3, 0) if k == 0 else (1, 2, nneg))

    def add(self, counts: tuple[int, int, int]) -> None:
        self.report.add(counts[0], counts[1], counts[2], label=self.labels.current)

    def mark(self, text: str) -> None:
        self.labels.mark(text)

    def inverse(self, fn: Callable[[Sink], None]) -> None:
        fn(self)

    def memo(self, key, fn: Callable[[Sink], None]) -> None:
        """Count ``fn`` once per structural key and replay the tally."""
        hit = self._memo.get(key)
        if hit is None:
            sub = CountSink()
            sub._memo = self._memo
            fn(sub)
            hit = (sub.report.toffoli, sub.report.cnot, sub.report.x)
            self._memo[key] = hit
        self.add(hit)


class OpSink(Sink):
    """Compiles straight to lowered integer ops for the bitsliced simulator.

    Each op is (kind, a, b, t) with kind 0 = X, 1 = CX (a), 2 = CCX (a, b).
    """

    def __init__(self) -> None:
        self.ops = array("i")
        self.marks: list[tuple[int, str]] = []

    def _emit(self, kind: int, a: int, b: int, t: int) -> None:
        self.ops.extend((kind, a, b, t))

    def gate(self, g: Gate) -> None:
        for lg in lower_gate(g):
            cs = [w for w, _ in lg.controls]
            t = lg.targets[0]
            if not cs:
                self._emit(0, 0, 0, t)
            elif len(cs) == 1:
                self._emit(1, cs[0], 0, t)
            else:
                self._emit(2, cs[0], cs[1], t)

    def x(self, t: int, *ctrls: int) -> None:
        negs = [~c for c in ctrls if c < 0]
        for w in negs:
            self._emit(0, 0, 0, w)
        cs = [c if c >= 0 else ~c for c in ctrls]
        if not cs:
            self._emit(0, 0, 0, t)
        elif len(cs) == 1:
            self._emit(1, cs[0], 0, t)
        elif len(cs) == 2:
            self._emit(2, cs[0], cs[1], t)
        else:
            raise CircuitError(f"cannot lower {len(cs)}-control NOT")
        for w in negs:
            self._emit(0, 0, 0, w)

    def mark(self, text: str) -> None:
        self.marks.append((len(self.ops) // 4, text))

    def fresh(self) -> "OpSink":
        return OpSink()

    def extend_reversed(self, other: Sink) -> None:
        assert isinstance(other, OpSink)
        n = len(other.ops) // 4
        base = len(self.ops) // 4
        for i in range(n - 1, -1, -1):
            self.ops.extend(other.ops[4 * i: 4 * i + 4])
        texts = [t for _, t in other.marks]
        pairs = _marker_pairs(texts)
        for k in range(len(texts) - 1, -1, -1):
            self.marks.append((base + n - other.marks[k][0], texts[pairs.get(k, k)]))

    def __len__(self) -> int:
        return len(self.ops) // 4


class TextSink(Sink):
    """Streams lowered gates as text lines; inverses are buffered then written reversed."""

    def __init__(self, fh) -> None:
        self.fh = fh
        self.gates = 0

    def gate(self, g: Gate) -> None:
        for lg in lower_gate(g):
            self.fh.write(_gate_line(lg) + "\n")
            self.gates += 1

    def mark(self, text: str) -> None:
        self.fh.write("# " + text + "\n")

    def fresh(self) -> ListSink:
        return ListSink()

    def extend_reversed(self, other: Sink) -> None:
        assert isinstance(other, ListSink)
        for it in reversed_items(other.items):
            if isinstance(it, str):
                self.mark(it)
            else:
                self.gate(it)


# text and JSON formats


def _gate_line(g: Gate) -> str:
    ctrl = " ".join(("" if pol else "~") + str(w) for w, pol in g.controls)
    k = len(g.controls)
    if g.kind == NOT:
        name = ("x", "cx", "ccx", "cccx")[k]
    else:
        name = ("swap", "cswap", "ccswap", "cccswap")[k]
    tgt = " ".join(str(t) for t in g.targets)
    return f"{name} {ctrl} {tgt}".replace("  ", " ").strip()


_KINDS = {
    "x": (NOT, 0), "cx": (NOT, 1), "ccx": (NOT, 2), "cccx": (NOT, 3),
    "swap": (SWAP, 0), "cswap": (SWAP, 1), "ccswap": (SWAP, 2), "cccswap": (SWAP, 3),
}


def serialize(c: Circuit) -> str:
    lines = [f"width={c.width}"]
    for it in c.items:
        lines.append("# " + it if isinstance(it, str) else _gate_line(it))
    return "\n".join(lines) + "\n"


def iter_text(gates: Iterable, width: int) -> Iterator[str]:
    yield f"width={width}\n"
    for it in gates:
        yield ("# " + it if isinstance(it, str) else _gate_line(it)) + "\n"


def parse(text: str) -> Circuit:
    lines = text.splitlines()
    width = None
    items: list = []
    for no, raw in enumerate(lines, 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            if width is not None:
                items.append(line[1:].strip())
            continue
        if width is None:
            if not line.startswith("width="):
                raise CircuitError(f"line {no}: expected width=<W>")
            try:
                width = int(line[6:])
            except ValueError as exc:
                raise CircuitError(f"line {no}: bad width") from exc
            continue
        parts = line.split()
        if parts[0] not in _KINDS:
            raise CircuitError(f"line {no}: unknown gate {parts[0]!r}")
        kind, k = _KINDS[parts[0]]
        ntgt = 1 if kind == NOT else 2
        if len(parts) != 1 + k + ntgt:
            raise CircuitError(f"line {no}: wrong operand count")
        try:
            ctrls = tuple((int(p.lstrip("~")), not p.startswith("~")) for p in parts[1:1 + k])
            tgts = tuple(int(p) for p in parts[1 + k:])
            g = Gate(kind, tgts, ctrls)
        except (ValueError, CircuitError) as exc:
            raise CircuitError(f"line {no}: {exc}") from exc
        if any(w >= width or w < 0 for w in g.wires):
            raise CircuitError(f"line {no}: wire outside width")
        items.append(g)
    if width is None:
        raise CircuitError("missing width line")
    return Circuit(width, items)


def to_json(c: Circuit) -> str:
    gates = []
    for it in c.items:
        if isinstance(it, str):
            gates.append({"comment": it})
        else:
            gates.append({
                "kind": it.kind,
                "targets": list(it.targets),
                "controls": [[w, pol] for w, pol in it.controls],
            })
    return json.dumps({"width": c.width, "layout": c.layout, "gates": gates})


def from_json(text: str) -> Circuit:
    data = json.loads(text)
    items: list = []
    for g in data["gates"]:
        if "comment" in g:
            items.append(g["comment"])
        else:
            items.append(Gate(g["kind"], tuple(g["targets"]), tuple((w, bool(p)) for w, p in g["controls"])))
    return Circuit(data["width"], items, {k: list(v) for k, v in data.get("layout", {}).items()})
