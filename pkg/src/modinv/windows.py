"""Per-step active windows for the location-controlled operations (1-based work positions).

Two tables are provided. `active_windows` evaluates the published closed forms.
`sound_windows` replaces the lower bounds (and K5) with bounds derived from the
exact minimum growth of t over all quotient sequences; the circuit uses these.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from functools import lru_cache

from .model import MachineState, ProblemInstance, _end_of_iteration, init_state, seg_le, step
from .numtheory import ceil_scaled, growth_front, step_budget


@dataclass(frozen=True)
class ActiveWindow:
    T: int
    k1: int
    K1: int
    k2: int
    K2: int
    K3: int
    k4: int
    K4: int
    k5: int
    K5: int

    def as_dict(self) -> dict:
        return asdict(self)


def _check_T(n: int, T: int) -> None:
    budget = step_budget(n)
    if not 1 <= T <= budget:
        raise ValueError(f"T={T} outside 1..{budget}")


def _upper(n: int, T: int) -> tuple[int, int, int]:
    K2 = min(T // 2 + 2, n + 2)
    K3 = min(-(-T // 4) + 1, n + 1)
    K4 = min(T // 4 + 3, n + 3)
    return K2, K3, K4


@lru_cache(maxsize=None)
def active_windows(n: int, T: int) -> ActiveWindow:
    _check_T(n, T)
    K2, K3, K4 = _upper(n, T)
    k1 = ceil_scaled(T - n - 2, 1) + 2
    k2 = ceil_scaled(T - 3 * (n + 2), 3) + 1
    k4 = ceil_scaled(T - 4 * (n + 2), 4)
    k5 = ceil_scaled(T, 0)
    K5 = min(T // 4 + 4, n + 3)
    return ActiveWindow(T, k1, n + 3, k2, K2, K3, k4, K4, k5, K5)


def min_t_bitlength(units: int) -> int:
    """Least bit length of t_j over all quotient prefixes costing `units` (= N_j / 4)."""
    return min(c for _, c in growth_front(units)).bit_length()


def _min_lt(n: int, T: int, spread: int) -> int | None:
    # least bitlen(t_j) over prefixes ending before T, when step T sits at offset
    # u = T - 4U <= spread * (b_j + 1) and b_j <= n + 1 - bitlen(t_j)
    best = None
    for U in range((T - 1) // 4 + 1):
        u = T - 4 * U
        lt = min_t_bitlength(U)
        if -(-u // spread) - 1 <= n + 1 - lt:
            best = lt if best is None else min(best, lt)
    return best


@lru_cache(maxsize=None)
def sound_windows(n: int, T: int) -> ActiveWindow:
    _check_T(n, T)
    K2, K3, K4 = _upper(n, T)
    r_lt = _min_lt(n, T, 2)
    s_lt = _min_lt(n, T, 3)
    e_lt = _min_lt(n, T, 4) if T % 4 == 0 else None
    k1 = (r_lt if r_lt is not None else n + 1) + 2
    k2 = min((s_lt if s_lt is not None else K2) + 2, K2)
    k4 = min(e_lt if e_lt is not None else 1, K4)
    k5 = min_t_bitlength(T // 4) + 2 if T % 4 == 0 else 1
    return ActiveWindow(T, min(k1, n + 3), n + 3, k2, K2, K3, k4, K4, min(k5, n + 3), n + 3)


def window_table(n: int, sound: bool = True) -> list[ActiveWindow]:
    fn = sound_windows if sound else active_windows
    return [fn(n, T) for T in range(1, step_budget(n) + 1)]


@dataclass
class WindowProbe:
    """Records operand positions of activated location-controlled operations.

    `published=True` checks the quantities named by the closed-form windows;
    otherwise the positions the circuit actually touches are checked against the sound table.
    """

    n: int
    published: bool = True
    T: int = 0
    checked: int = 0
    violations: list = field(default_factory=list)
    _subbed: bool = False

    def _check(self, kind: str, pos: int, lo: int, hi: int) -> None:
        self.checked += 1
        if not lo <= pos <= hi:
            self.violations.append((self.T, kind, pos, lo, hi))

    def __call__(self, name: str, s: MachineState) -> None:
        w = active_windows(self.n, self.T) if self.published else sound_windows(self.n, self.T)
        n = self.n
        if name in ("r_sub", "r_add") and s.lrp > 0:
            lo, hi = s.lt + s.lq + 2, n + 3 - s.ls
            if lo <= hi:
                self._check("r-lo", lo, w.k1, w.K1)
                self._check("r-hi", hi, w.k1, w.K1)
        elif name == "swap" and s.phase1 ^ s.phase2:
            lq = s.lq + 1 if s.phase1 == 0 else s.lq
            self._check("swap", s.lt + lq + 1, w.k2, w.K2)
        elif name in ("t_sub", "t_add"):
            self._check("t-addend", s.lt + 1, 1, w.K3)
            if not self.published and s.lq == 0:
                tint = seg_le(s.work2, 0, s.width - 1 - s.lrp - s.ls)
                if name == "t_sub":
                    self._check("t-target", tint.bit_length(), 0, w.K3)
                elif not self._subbed:
                    self._check("t-target", max(tint.bit_length(), (tint + s.t).bit_length()), 0, w.K3)
            self._subbed = name == "t_sub"
        elif name == "end_iteration" and s.lq == 0 and s.ls == 0:
            after = _end_of_iteration(s)
            if self.published:
                self._check("len-t-lo", s.lt, w.k4, w.K4)
                self._check("len-t-hi", n + 3 - s.lrp, w.k4, w.K4)
                self._check("len-r-lo", after.lt + 2, w.k5, w.K5)
                if after.lrp:  # an empty r' has no boundary to place
                    self._check("len-r-hi", n + 4 - after.lrp, w.k5, w.K5)
            else:
                self._check("len-t-lo", s.lt, w.k4, w.K4)
                self._check("len-t-hi", after.lt, w.k4, w.K4)
                self._check("len-r-lo", after.lt + 2, w.k5, w.K5)
                for lrp in (s.lrp, after.lrp):
                    if lrp:
                        self._check("len-r-hi", n + 4 - lrp, w.k5, w.K5)

    def begin_step(self, T: int) -> None:
        self.T = T
        self._subbed = False


def probe_instance(inst: ProblemInstance, published: bool = True) -> WindowProbe:
    probe = WindowProbe(inst.n, published)
    s = init_state(inst)
    for T in range(1, step_budget(inst.n) + 1):
        probe.begin_step(T)
        s = step(s, probe)
    return probe
