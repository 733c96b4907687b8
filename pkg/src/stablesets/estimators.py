"""Finite-range measurements over deterministic arithmetic progressions.

Every estimator reduces to integer counts over index chunks of the progression
lo, lo + stride, ...  (below hi).  Chunks are independent, so they can be
farmed out to worker processes; the merge is an integer sum in chunk order,
which makes serial and parallel runs identical.

Set-like objects expose ``member_array(start, stride, count)`` (bool) and
+-1 functions ``value_array(start, stride, count)`` (int8); both expose
``upper``, the exclusive bound of supported arguments.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from typing import Callable, Iterable, Sequence

import numpy as np

from .phase import Arc, progression_turns

CHUNK = 1 << 18
"""Indices per work unit; also bounds the memory of one evaluation."""


@dataclass(frozen=True)
class DensityReport:
    """numerator / denominator over the sampled n.  Averages of +-1 values use
    a signed integer numerator."""

    numerator: int
    denominator: int
    range: tuple[int, int]
    stride: int = 1
    context: str = ""
    label: str = ""

    @property
    def frequency(self) -> float:
        return self.numerator / self.denominator if self.denominator else math.nan

    @property
    def exhaustive(self) -> bool:
        return self.stride == 1

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "numerator": str(self.numerator),
            "denominator": str(self.denominator),
            "frequency": f"{self.frequency:.12g}",
            "lo": str(self.range[0]),
            "hi": str(self.range[1]),
            "stride": str(self.stride),
            "context": self.context,
        }


class FunctionPredicate:
    """Adapter turning a plain Python callable into a set-like object."""

    def __init__(self, fn: Callable[[int], object], upper: int | None = None, signed: bool = False):
        self.fn = fn
        self.upper = upper if upper is not None else 1 << 62
        self.signed = signed

    def member_array(self, start, stride, count):
        return np.fromiter((bool(self.fn(start + i * stride)) for i in range(count)), dtype=bool, count=count)

    def value_array(self, start, stride, count):
        return np.fromiter((int(self.fn(start + i * stride)) for i in range(count)), dtype=np.int8, count=count)


def _as_setlike(obj):
    if hasattr(obj, "member_array") or hasattr(obj, "value_array"):
        return obj
    if callable(obj):
        return FunctionPredicate(obj)
    raise TypeError(f"{obj!r} is neither set-like nor callable")


def _members(obj, start, stride, count):
    return obj.member_array(start, stride, count)


def _values(obj, start, stride, count):
    if hasattr(obj, "value_array"):
        return obj.value_array(start, stride, count)
    return np.where(obj.member_array(start, stride, count), 1, -1).astype(np.int8)


def _window(fetch, obj, start, stride, count, offsets):
    """Shape (count, len(offsets)) evaluation of start + i*stride + offsets[h]."""
    if getattr(obj, "schedule", None) is not None:
        return fetch(obj, start, stride, count, offsets)
    return np.stack([fetch(obj, start + o, stride, count) for o in offsets], axis=1)


def _fetch_members(obj, start, stride, count, offsets=None):
    if offsets is None:
        return obj.member_array(start, stride, count)
    return obj.member_array(start, stride, count, offsets)


def _fetch_values(obj, start, stride, count, offsets=None):
    if hasattr(obj, "value_array"):
        if offsets is None:
            return obj.value_array(start, stride, count)
        return obj.value_array(start, stride, count, offsets)
    m = _fetch_members(obj, start, stride, count, offsets)
    return np.where(m, 1, -1).astype(np.int8)


def upper_for(obj, p: int = 1) -> int:
    """Exclusive bound on n for which p*n may be evaluated."""
    sched = getattr(obj, "schedule", None)
    if sched is not None:
        # n / q^m must stay below the terminal, so only multiples by q reach q*terminal
        return sched.q * sched.terminal if p == sched.q else sched.terminal
    return obj.upper


def digest(obj) -> str:
    sched = getattr(obj, "schedule", None)
    if sched is None:
        return ""
    extra = {"kind": type(obj).__name__, "path": getattr(obj, "path", None)}
    text = sched.to_json() + json.dumps(extra, sort_keys=True)
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def sample_count(lo: int, hi: int, stride: int) -> int:
    if hi <= lo:
        return 0
    return (hi - lo + stride - 1) // stride


def coprime_stride(lo: int, hi: int, samples: int, avoid: Iterable[int] = (2, 3, 5, 7, 11, 13)) -> int:
    """Smallest stride >= (hi-lo)/samples sharing no factor with ``avoid``.

    Coprimality keeps residues mod small primes (and mod q^m) equidistributed
    along the sample.
    """
    s = max(1, (hi - lo) // max(1, samples))
    prod = math.prod(avoid)
    while s > 1 and math.gcd(s, prod) != 1:
        s += 1
    return s


def default_workers() -> int:
    return os.cpu_count() or 1


# -- reduction machinery -------------------------------------------------------


def _chunks(count: int, chunk: int = CHUNK):
    return [(i0, min(count, i0 + chunk)) for i0 in range(0, count, chunk)]


def _reduce(task, args: tuple, count: int, workers: int = 1, chunk: int = CHUNK):
    """Sum integer results of ``task(*args, i0, i1)`` over index chunks."""
    pieces = _chunks(count, chunk)
    if workers <= 1 or len(pieces) <= 1:
        results = [task(*args, i0, i1) for i0, i1 in pieces]
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            futs = [ex.submit(task, *args, i0, i1) for i0, i1 in pieces]
            results = [f.result() for f in futs]
    total = None
    for r in results:
        r = np.asarray(r, dtype=object)
        total = r if total is None else total + r
    if total is None:
        return None
    return total


def _keep(exclude, n0, stride, c):
    if exclude is None:
        return None
    return ~np.asarray(exclude(n0, stride, c), dtype=bool)


def _tally(hit, keep):
    if keep is None:
        return [int(np.count_nonzero(hit)), hit.size]
    return [int(np.count_nonzero(hit & keep)), int(np.count_nonzero(keep))]


def _density_task(obj, lo, stride, exclude, i0, i1):
    n0, c = lo + i0 * stride, i1 - i0
    return _tally(_members(obj, n0, stride, c), _keep(exclude, n0, stride, c))


def _defect_task(obj, p, lo, stride, exclude, i0, i1):
    n0, c = lo + i0 * stride, i1 - i0
    a = _members(obj, n0, stride, c)
    b = _members(obj, p * n0, p * stride, c)
    return _tally(a != b, _keep(exclude, n0, stride, c))


def _intersection_task(obj, shifts, lo, stride, exclude, i0, i1):
    n0, c = lo + i0 * stride, i1 - i0
    if stride == 1:
        hmax = max(shifts)
        base = _members(obj, n0 - hmax, 1, c + hmax)
        acc = np.ones(c, dtype=bool)
        for h in shifts:
            acc &= base[hmax - h:hmax - h + c]
    else:
        hmax = max(shifts)
        win = _window(_fetch_members, obj, n0 - hmax, stride, c, [hmax - h for h in shifts])
        acc = win.all(axis=1)
    return _tally(acc, _keep(exclude, n0, stride, c))


def _pair_task(obj, lo, stride, i0, i1):
    n0, c = lo + i0 * stride, i1 - i0
    if stride == 1:
        v = _values(obj, n0, 1, c + 1).astype(np.int64)
        prod = v[:-1] * v[1:]
    else:
        win = _window(_fetch_values, obj, n0, stride, c, [0, 1]).astype(np.int64)
        prod = win[:, 0] * win[:, 1]
    return [int(prod.sum()), c]


def _local_task(obj, H, lo, stride, i0, i1):
    n0, c = lo + i0 * stride, i1 - i0
    if stride == 1:
        v = _values(obj, n0 + 1, 1, c + H).astype(np.int64)
        res = ((n0 + 1) % 3 + np.arange(c + H, dtype=np.int64)) % 3
        v = np.where(res == 1, v, 0)
        cs = np.concatenate(([0], np.cumsum(v)))
        S = cs[H:H + c] - cs[:c]
    else:
        # only offsets landing on n + h = 1 mod 3 for some sample are needed
        hs = [h for h in range(1, H + 1) if stride % 3 or (n0 + h) % 3 == 1]
        win = _window(_fetch_values, obj, n0 + 1, stride, c, [h - 1 for h in hs]).astype(np.int64)
        i = np.arange(c, dtype=np.int64)[:, None]
        res = ((n0 % 3) + i * (stride % 3) + np.asarray(hs)[None, :]) % 3
        S = np.where(res == 1, win, 0).sum(axis=1)
    return [int(np.abs(S).sum()), c * H]


# -- public estimators ---------------------------------------------------------


def _check_window(lo: int, hi: int, stride: int) -> None:
    if not 1 <= lo < hi:
        raise ValueError(f"need 1 <= lo < hi, got [{lo}, {hi})")
    if stride < 1:
        raise ValueError("stride must be at least 1")


def density(pred, lo: int, hi: int, stride: int = 1, workers: int = 1, label: str = "density",
            exclude=None) -> DensityReport:
    """Frequency of ``pred`` over lo, lo+stride, ... below hi.

    ``exclude(start, stride, count)``, if given, returns a mask of sample
    points dropped from numerator and denominator alike.
    """
    obj = _as_setlike(pred)
    _check_window(lo, hi, stride)
    count = sample_count(lo, hi, stride)
    num, den = _reduce(_density_task, (obj, lo, stride, exclude), count, workers)
    return DensityReport(int(num), int(den), (lo, hi), stride, digest(obj), label)


def stability_defect(setlike, p: int, lo: int, hi: int, stride: int = 1, workers: int = 1,
                     exclude=None) -> DensityReport:
    """Frequency of 1_{n in S} != 1_{pn in S}."""
    obj = _as_setlike(setlike)
    _check_window(lo, hi, stride)
    if p < 2:
        raise ValueError("p must be at least 2")
    count = sample_count(lo, hi, stride)
    last = lo + (count - 1) * stride
    if p * last >= upper_for(obj, p):
        raise ValueError(f"p*n reaches {p * last}, beyond the supported bound {upper_for(obj, p)}")
    num, den = _reduce(_defect_task, (obj, p, lo, stride, exclude), count, workers)
    return DensityReport(int(num), int(den), (lo, hi), stride, digest(obj), f"defect p={p}")


def shifted_intersection_density(setlike, shifts: Sequence[int], lo: int, hi: int, stride: int = 1,
                                 workers: int = 1, exclude=None) -> DensityReport:
    """Frequency of n with n - h in S for every shift h."""
    obj = _as_setlike(setlike)
    _check_window(lo, hi, stride)
    shifts = tuple(int(h) for h in shifts)
    if not shifts or len(set(shifts)) != len(shifts) or min(shifts) < 0:
        raise ValueError("shifts must be distinct and non-negative")
    if lo - max(shifts) < 1:
        raise ValueError("lo - max(shifts) must be at least 1")
    count = sample_count(lo, hi, stride)
    num, den = _reduce(_intersection_task, (obj, shifts, lo, stride, exclude), count, workers)
    return DensityReport(int(num), int(den), (lo, hi), stride, digest(obj), f"intersection {list(shifts)}")


def pair_correlation(fn, lo: int, hi: int, stride: int = 1, workers: int = 1) -> DensityReport:
    """Average of f(n) f(n+1); ``frequency`` holds the average."""
    obj = _as_setlike(fn)
    _check_window(lo, hi, stride)
    count = sample_count(lo, hi, stride)
    num, den = _reduce(_pair_task, (obj, lo, stride), count, workers)
    return DensityReport(int(num), int(den), (lo, hi), stride, digest(obj), "pair correlation")


def local_average(fn, lo: int, hi: int, H: int, stride: int = 1, workers: int = 1) -> DensityReport:
    """Average over n of |(1/H) sum_{h=1..H} f(n+h) 1_{n+h = 1 mod 3}|."""
    obj = _as_setlike(fn)
    _check_window(lo, hi, stride)
    if H < 1:
        raise ValueError("H must be at least 1")
    count = sample_count(lo, hi, stride)
    num, den = _reduce(_local_task, (obj, int(H), lo, stride), count, workers)
    return DensityReport(int(num), int(den), (lo, hi), stride, digest(obj), f"local average H={H}")


# -- two-frequency equidistribution --------------------------------------------


def _grid_task(T1, T2, m, lo, stride, i0, i1):
    ph = progression_turns(lo + i0 * stride, stride, i1 - i0, [T1, T2])
    a = np.minimum((ph[0] * m).astype(np.int64), m - 1)
    b = np.minimum((ph[1] * m).astype(np.int64), m - 1)
    return np.bincount(a * m + b, minlength=m * m).astype(np.int64)


def arc_pair_grid(T1: float, T2: float, m: int, N: int, stride: int = 1, workers: int = 1) -> np.ndarray:
    """Integer counts c[a1, a2] of n <= N with phase(n,T1) in cell a1 and phase(n,T2) in cell a2."""
    _check_lemma_args(T1, T2, N)
    if m < 1:
        raise ValueError("m must be at least 1")
    count = sample_count(1, N + 1, stride)
    tot = _reduce(_grid_task, (T1, T2, m, 1, stride), count, workers, chunk=1 << 20)
    return np.array([int(x) for x in tot], dtype=np.int64).reshape(m, m)


def arc_pair_frequency(T1: float, T2: float, m: int, a1: int, a2: int, N: int, stride: int = 1,
                       workers: int = 1) -> DensityReport:
    if not (0 <= a1 < m and 0 <= a2 < m):
        raise ValueError("cell indices must lie in [0, m)")
    grid = arc_pair_grid(T1, T2, m, N, stride, workers)
    return DensityReport(int(grid[a1, a2]), int(grid.sum()), (1, N + 1), stride, "",
                         f"arc pair m={m} ({a1},{a2})")


def _arc_task(T1, T2, I1, I2, lo, stride, i0, i1):
    ph = progression_turns(lo + i0 * stride, stride, i1 - i0, [T1, T2])
    hit = I1.contains_turns(ph[0]) & I2.contains_turns(ph[1])
    return [int(np.count_nonzero(hit)), i1 - i0]


def arc_pair_frequency_real(T1: float, T2: float, I1: Arc, I2: Arc, N: int, stride: int = 1,
                            workers: int = 1) -> DensityReport:
    _check_lemma_args(T1, T2, N)
    count = sample_count(1, N + 1, stride)
    num, den = _reduce(_arc_task, (T1, T2, I1, I2, 1, stride), count, workers, chunk=1 << 20)
    return DensityReport(int(num), int(den), (1, N + 1), stride, "",
                         f"arcs [{I1.lo},{I1.hi}) x [{I2.lo},{I2.hi})")


def _check_lemma_args(T1, T2, N):
    if not (T1 > 2 and T2 > 2):
        raise ValueError("T1 and T2 must exceed 2")
    if N < 2:
        raise ValueError("N must be at least 2")


FIXED_T = math.pi / math.log(2)


def fixed_T_oscillation(N_list: Sequence[int] | None = None, T: float = FIXED_T) -> list[tuple[int, int, float]]:
    """(N, count, frequency) of phase(n, T) in [0, 1/2) over n <= N.

    The default list is N = 2^k, i.e. 4^k N0 for N0 in {1, 2}; with T = pi/ln 2
    the frequency swings between about 1/3 and 2/3 instead of converging.
    """
    if N_list is None:
        N_list = [2**k for k in range(2, 25)]
    N_list = [int(N) for N in N_list]
    if any(b <= a for a, b in zip(N_list, N_list[1:])) or not N_list or N_list[0] < 1:
        raise ValueError("N_list must be ascending positive integers")
    out = []
    done, hits = 0, 0
    for N in N_list:
        while done < N:
            c = min(CHUNK * 4, N - done)
            ph = progression_turns(done + 1, 1, c, [T])[0]
            hits += int(np.count_nonzero(ph < 0.5))
            done += c
        out.append((N, hits, hits / N))
    return out


def lemma_error_bound(T1: float, T2: float, N: float) -> float:
    """1/T1 + T1 ln T1 / T2 + T2 ln T1 / N, without the unknown constant."""
    _check_lemma_args(T1, T2, N)
    L = math.log(T1)
    return 1 / T1 + T1 * L / T2 + T2 * L / N


# -- output ---------------------------------------------------------------------


CSV_FIELDS = ["label", "numerator", "denominator", "frequency", "lo", "hi", "stride", "context"]


def format_real(x: float) -> str:
    return f"{x + 0.0:.12g}"  # + 0.0 folds -0 into 0


def reports_to_csv(rows: Sequence[dict], timestamp: bool = True, fields: Sequence[str] | None = None) -> str:
    """RFC 4180 CSV text; an optional first comment line carries the UTC time."""
    fields = list(fields or CSV_FIELDS)
    buf = io.StringIO()
    if timestamp:
        buf.write(f"# generated {datetime.now(timezone.utc).isoformat(timespec='seconds')}\r\n")
    w = csv.DictWriter(buf, fieldnames=fields, extrasaction="ignore", lineterminator="\r\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (format_real(v) if isinstance(v, float) else v) for k, v in r.items()})
    return buf.getvalue()


def reports_to_json(rows: Sequence[dict], context: dict | None = None) -> str:
    return json.dumps({"context": context or {}, "rows": list(rows)}, indent=2, sort_keys=True)
