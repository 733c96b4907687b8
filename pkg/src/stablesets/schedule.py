"""Parameter schedules: epochs (eps_k, D_k, J_k, T_k, t_k, N_{k,0..J_k}).

Separation rule
---------------
Every "X << Y" between consecutive frequencies of epoch k is realised as

    Y >= max(growth * X, X * ln X / r_k)

where ``r_k`` is a per-epoch ratio budget.  r_1 = eps_1 / growth; for later
epochs r_k is also capped by the budgets already spent in epoch k-1, which
makes both ``error_budget`` and ``union_budget`` strictly decreasing by
construction.  Block boundaries use the smallest integers allowed by
N_{k,j+1} > max(D_k, 2) * N_{k,j}.
"""
from __future__ import annotations

import bisect
import json
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

from .arith import DirichletCharacter, character_mod_q, primes_up_to
from .search import TargetMode, TargetSpec, find_T, target_distances, targets_for_mode

log = logging.getLogger(__name__)

SCHEMA = "stablesets.schedule/1"


class InfeasibleScheduleError(ValueError):
    pass


class Cell(NamedTuple):
    k: int
    j: int


PRE_EPOCH = Cell(0, 0)
"""Cell label for [1, N_{1,0}); k = 0 mirrors the convention N_0 = 1."""


@dataclass(frozen=True)
class Epoch:
    k: int
    eps: float
    D: int
    J: int
    T: float
    t: float
    N: tuple[int, ...]


@dataclass(frozen=True)
class Schedule:
    q: int
    mode: TargetMode
    epochs: tuple[Epoch, ...]
    terminal: int
    T_terminal: float
    terminal_eps: float
    terminal_D: int
    growth_factor: float = 4.0

    @property
    def K(self) -> int:
        return len(self.epochs)

    @property
    def char(self) -> DirichletCharacter:
        return character_mod_q(self.q)

    def epoch(self, k: int) -> Epoch:
        return self.epochs[k - 1]

    def T(self, ell: int) -> float:
        """T_ell for 1 <= ell <= K+1."""
        if ell == self.K + 1:
            return self.T_terminal
        return self.epochs[ell - 1].T

    def frequencies(self) -> list[float]:
        """[T_1, ..., T_{K+1}, t_1, ..., t_K]."""
        return [e.T for e in self.epochs] + [self.T_terminal] + [e.t for e in self.epochs]

    def boundaries(self) -> list[int]:
        out = [n for e in self.epochs for n in e.N]
        out.append(self.terminal)
        return out

    def cells(self) -> list[Cell]:
        return [Cell(e.k, j) for e in self.epochs for j in range(len(e.N))]

    @property
    def start(self) -> int:
        return self.epochs[0].N[0]

    def error_budget(self, k: int) -> float:
        e = self.epoch(k)
        T_next = self.T(k + 1)
        return 1 / e.T + e.T * math.log(e.T) / e.t + e.T * math.log(T_next) / e.N[0]

    def union_budget(self, k: int) -> float:
        """error_budget plus the terms appearing in the density argument."""
        e = self.epoch(k)
        Tn = self.T(k + 1)
        lt = math.log(e.t)
        return (
            self.error_budget(k)
            + 1 / e.t
            + e.t * lt / Tn
            + e.t * lt / e.N[0]
            + Tn * lt / e.N[0]
        )

    # -- serialisation ---------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA,
            "q": str(self.q),
            "mode": self.mode.value,
            "growth_factor": repr(float(self.growth_factor)),
            "epochs": [
                {
                    "k": str(e.k),
                    "eps": repr(e.eps),
                    "D": str(e.D),
                    "J": str(e.J),
                    "T": repr(e.T),
                    "t": repr(e.t),
                    "N": [str(n) for n in e.N],
                }
                for e in self.epochs
            ],
            "terminal": str(self.terminal),
            "T_terminal": repr(self.T_terminal),
            "terminal_eps": repr(self.terminal_eps),
            "terminal_D": str(self.terminal_D),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "Schedule":
        if d.get("schema") != SCHEMA:
            raise ValueError(f"unknown schedule schema {d.get('schema')!r}")
        epochs = tuple(
            Epoch(
                k=int(e["k"]),
                eps=float(e["eps"]),
                D=int(e["D"]),
                J=int(e["J"]),
                T=float(e["T"]),
                t=float(e["t"]),
                N=tuple(int(n) for n in e["N"]),
            )
            for e in d["epochs"]
        )
        return cls(
            q=int(d["q"]),
            mode=TargetMode(d["mode"]),
            epochs=epochs,
            terminal=int(d["terminal"]),
            T_terminal=float(d["T_terminal"]),
            terminal_eps=float(d["terminal_eps"]),
            terminal_D=int(d["terminal_D"]),
            growth_factor=float(d["growth_factor"]),
        )

    @classmethod
    def from_json(cls, text: str) -> "Schedule":
        return cls.from_dict(json.loads(text))


def J_for(eps: float) -> int:
    # the small slack keeps ceil(2/0.3) at 7 despite 2/0.3 = 6.666...7 rounding
    return math.ceil(2 / eps - 1e-12) + 1


def _rule(rule, k: int):
    if callable(rule):
        return rule(k)
    return rule[k - 1]


def _rule_has(rule, k: int) -> bool:
    return callable(rule) or len(rule) >= k


def _after(X: float, r: float, growth: float) -> float:
    return max(growth * X, X * max(1.0, math.log(X)) / r)


def epoch_primes(q: int, D: int) -> tuple[int, ...]:
    return tuple(p for p in primes_up_to(D) if p != q)


def target_spec(char: DirichletCharacter, D: int, eps: float, mode: TargetMode, T0: float) -> TargetSpec:
    primes = epoch_primes(char.q, D)
    return TargetSpec(primes, tuple(targets_for_mode(char, primes, mode)), eps, T0)


def build_schedule(
    q: int = 3,
    mode: TargetMode = TargetMode.CONJ_CHI,
    K: int = 2,
    eps_rule: Sequence[float] | Callable[[int], float] = (0.5, 0.3),
    D_rule: Sequence[int] | Callable[[int], int] = (7, 11),
    growth_factor: float = 4.0,
    T0: float = 0.0,
    search_budget: int = 10**9,
) -> Schedule:
    """Find T_k, t_k, T_{K+1} by chained searches and lay out the N_{k,j}.

    The frequency T_{K+1} used by the last epoch is searched against
    eps_{K+1}, D_{K+1} when the rules provide them, else against eps_K, D_K.
    """
    mode = TargetMode(mode)
    if K < 1:
        raise InfeasibleScheduleError("K must be at least 1")
    if growth_factor < 2:
        raise InfeasibleScheduleError("growth_factor must be at least 2")
    if not _rule_has(eps_rule, K) or not _rule_has(D_rule, K):
        raise InfeasibleScheduleError(f"eps/D rules must cover {K} epochs")
    char = character_mod_q(q)
    g = float(growth_factor)
    eps = [float(_rule(eps_rule, k)) for k in range(1, K + 1)]
    D = [int(_rule(D_rule, k)) for k in range(1, K + 1)]
    if _rule_has(eps_rule, K + 1) and _rule_has(D_rule, K + 1):
        eps_next, D_next = float(_rule(eps_rule, K + 1)), int(_rule(D_rule, K + 1))
    else:
        eps_next, D_next = eps[-1], D[-1]
    all_eps, all_D = eps + [eps_next], D + [D_next]
    if any(not 0 < e <= 1 for e in all_eps):
        raise InfeasibleScheduleError("eps_k must lie in (0, 1]")
    if any(b >= a for a, b in zip(eps, eps[1:])) or eps_next > eps[-1]:
        raise InfeasibleScheduleError("eps rule must be decreasing")
    if any(d < 2 for d in all_D) or any(b < a for a, b in zip(all_D, all_D[1:])):
        raise InfeasibleScheduleError("D rule must be nondecreasing and at least 2")

    Ts: list[float] = []
    ts: list[float] = []
    ratio: list[float] = []
    for k in range(1, K + 2):
        e_k, D_k = all_eps[k - 1], all_D[k - 1]
        lower = g * max(D_k, 1 / e_k)
        if k == 1:
            lower = max(lower, T0)
        else:
            lower = max(lower, _after(ts[-1], ratio[-1], g))
        T_k = find_T(target_spec(char, D_k, e_k, mode, lower), max_steps=search_budget)
        Ts.append(T_k)
        log.info("epoch %d: T = %r", k, T_k)
        if k == K + 1:
            break
        r = e_k / g
        if k > 1:
            Tp, tp = Ts[-2], ts[-1]
            W = 1 / Tp + Tp * math.log(Tp) / tp
            V = W + 1 / tp + tp * math.log(tp) / T_k
            r = min(r, (V - 2 / T_k) / 4.5, (W - 1 / T_k) / 3)
            if r <= 0:
                raise InfeasibleScheduleError(f"epoch {k}: no room left in the error budget")
        ratio.append(r)
        t_k = find_T(target_spec(char, D_k, e_k, TargetMode.ONE, _after(T_k, r, g)), max_steps=search_budget)
        ts.append(t_k)
        log.info("epoch %d: t = %r", k, t_k)

    epochs = []
    prev_top = None
    for k in range(1, K + 1):
        Tn = Ts[k]
        n0 = max(g * Tn, 3 * Tn * math.log(Tn) / ratio[k - 1])
        N0 = math.floor(n0) + 1
        if prev_top is not None:
            N0 = max(N0, prev_top)
        factor = max(D[k - 1], 2)
        J = J_for(eps[k - 1])
        N = [N0]
        for _ in range(J):
            N.append(factor * N[-1] + 1)
        prev_top = factor * N[-1] + 1
        epochs.append(Epoch(k, eps[k - 1], D[k - 1], J, Ts[k - 1], ts[k - 1], tuple(N)))
    return Schedule(q, mode, tuple(epochs), prev_top, Ts[K], eps_next, D_next, g)


@dataclass
class Check:
    name: str
    passed: bool
    measured: str = ""


def validate(s: Schedule) -> list[Check]:
    """Re-derive every schedule invariant; failures are reported, never raised."""
    out: list[Check] = []
    g = s.growth_factor
    char = s.char

    def add(name, ok, measured=""):
        out.append(Check(name, bool(ok), measured))

    for e in s.epochs:
        add(f"J[{e.k}] = ceil(2/eps)+1", e.J == J_for(e.eps) and len(e.N) == e.J + 1, f"J={e.J}, len(N)={len(e.N)}")
        spec = target_spec(char, e.D, e.eps, s.mode, 0.0)
        d = target_distances(spec, e.T)
        add(f"T[{e.k}] targets ({s.mode.value})", max(d, default=0) <= e.eps, f"max dist {max(d, default=0):.6g} <= {e.eps}")
        spec = target_spec(char, e.D, e.eps, TargetMode.ONE, 0.0)
        d = target_distances(spec, e.t)
        add(f"t[{e.k}] targets (one)", max(d, default=0) <= e.eps, f"max dist {max(d, default=0):.6g} <= {e.eps}")
        add(f"t[{e.k}] >= T[{e.k}]", e.t >= e.T, f"t={e.t!r}, T={e.T!r}")
        grow = all(b > a and b > e.D * a and b > 2 * a for a, b in zip(e.N, e.N[1:]))
        add(f"N[{e.k},j] separation", grow, f"N={list(e.N)}")
        nxt = s.epochs[e.k].N[0] if e.k < s.K else s.terminal
        add(f"N[{e.k+1},0] > D[{e.k}] N[{e.k},J]", nxt > e.D * e.N[-1], f"{nxt} vs {e.D * e.N[-1]}")
        Tn = s.T(e.k + 1)
        chain = (
            e.T >= g * max(e.D, 1 / e.eps)
            and e.t >= g * e.T
            and Tn >= g * e.t
            and e.N[0] >= g * Tn
        )
        add(f"chain D,1/eps << T << t << T' << N at k={e.k}", chain,
            f"D={e.D}, 1/eps={1/e.eps:.4g}, T={e.T:.6g}, t={e.t:.6g}, T'={Tn:.6g}, N0={e.N[0]}")
    spec = target_spec(char, s.terminal_D, s.terminal_eps, s.mode, 0.0)
    d = target_distances(spec, s.T_terminal)
    add(f"T[{s.K+1}] targets ({s.mode.value})", max(d, default=0) <= s.terminal_eps,
        f"max dist {max(d, default=0):.6g} <= {s.terminal_eps}")
    eps = [e.eps for e in s.epochs]
    Ds = [e.D for e in s.epochs]
    add("eps decreasing", all(b < a for a, b in zip(eps, eps[1:])), f"{eps}")
    add("D nondecreasing", all(b >= a for a, b in zip(Ds, Ds[1:])), f"{Ds}")
    bounds = s.boundaries()
    add("boundaries increasing", all(b > a for a, b in zip(bounds, bounds[1:])), f"{len(bounds)} boundaries")
    B = [s.error_budget(k) for k in range(1, s.K + 1)]
    add("error budget B_k decreasing", all(b < a for a, b in zip(B, B[1:])), ", ".join(f"{b:.6g}" for b in B))
    U = [s.union_budget(k) for k in range(1, s.K + 1)]
    add("union budget decreasing", all(b < a for a, b in zip(U, U[1:])), ", ".join(f"{u:.6g}" for u in U))
    return out


def locate(s: Schedule, n: int) -> Cell:
    """Cell (k, j) with N_{k,j} <= n < N_{k,j+1}; PRE_EPOCH below N_{1,0}."""
    if n < 1:
        raise ValueError("n must be positive")
    if n >= s.terminal:
        raise ValueError(f"n = {n} is beyond the schedule terminal {s.terminal}")
    bounds = s.boundaries()
    c = bisect.bisect_right(bounds, n) - 1
    if c < 0:
        return PRE_EPOCH
    return s.cells()[c]


def alpha_of_cell(s: Schedule, cell: Cell) -> float:
    if cell == PRE_EPOCH:
        return -1.0
    return s.epoch(cell.k).eps * cell.j - 1


def alpha(s: Schedule, n: int) -> float:
    return alpha_of_cell(s, locate(s, n))
