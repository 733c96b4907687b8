"""Command-line driver: ``stablesets <subcommand> [options]``.

Schedules come from ``--schedule FILE`` or are built from inline parameters;
inline builds are cached on disk under a hash of their inputs.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import os
import sys
from decimal import Decimal
from pathlib import Path

from . import estimators as est
from .arith import character_mod_q, primes_up_to
from .phase import chordal_distance, phase
from .schedule import PRE_EPOCH, Schedule, alpha, build_schedule, locate, validate
from .search import (
    SearchBudgetExhausted,
    TargetMode,
    TargetSpec,
    find_T,
    search_cost_estimate,
    targets_for_mode,
)
from .signed import SignedParams
from .signed import f as signed_f
from .signed import margin as signed_margin
from .stable_set import StableSetParams, contains, margin, near_boundary, selected_T

log = logging.getLogger("stablesets")

EXIT_ERROR = 2
EXIT_BUDGET = 3
EXIT_CHECK_FAILED = 4

DEFAULT_SAMPLES = 200_000


def _int(text: str) -> int:
    """Integer from '123', '1e9' or '4_000'; exact for big values."""
    d = Decimal(str(text).replace("_", ""))
    if d != d.to_integral_value():
        raise argparse.ArgumentTypeError(f"not an integer: {text}")
    return int(d)


def _floats(text: str) -> list[float]:
    return [float(x) for x in str(text).split(",") if x]


def _ints(text: str) -> list[int]:
    return [_int(x) for x in str(text).split(",") if x]


def _range(text: str) -> tuple[int, int]:
    lo, _, hi = str(text).partition(":")
    return _int(lo), _int(hi)


# -- schedule acquisition --------------------------------------------------------


def _build_params(args, mode: TargetMode) -> dict:
    eps = args.eps if args.eps is not None else [0.5, 0.3]
    D = args.d_max if args.d_max is not None else [7, 11]
    K = args.epochs if args.epochs is not None else len(eps)
    return {
        "q": args.q,
        "mode": mode.value,
        "K": K,
        "eps_rule": list(eps),
        "D_rule": list(D),
        "growth_factor": args.growth,
        "T0": args.t0,
        "search_budget": args.max_steps,
    }


def cache_dir(args) -> Path:
    if args.cache_dir:
        return Path(args.cache_dir)
    return Path(os.environ.get("STABLESETS_CACHE", Path.home() / ".cache" / "stablesets"))


def get_schedule(args, mode: TargetMode) -> Schedule:
    if args.schedule:
        inline = any(getattr(args, k) is not None for k in ("eps", "d_max", "epochs"))
        if inline:
            raise ValueError("give either --schedule or inline build parameters, not both")
        s = Schedule.from_json(Path(args.schedule).read_text())
        if s.mode is not mode:
            raise ValueError(f"schedule mode is {s.mode.value}, this command needs {mode.value}")
        return s
    params = _build_params(args, mode)
    key = hashlib.sha256(json.dumps(params, sort_keys=True).encode()).hexdigest()[:20]
    path = cache_dir(args) / f"schedule-{key}.json"
    if path.exists():
        log.info("schedule cache hit %s", path)
        return Schedule.from_json(path.read_text())
    s = build_schedule(
        q=params["q"], mode=mode, K=params["K"], eps_rule=params["eps_rule"], D_rule=params["D_rule"],
        growth_factor=params["growth_factor"], T0=params["T0"], search_budget=params["search_budget"],
    )
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(s.to_json())
    except OSError as exc:  # cache is an optimisation only
        log.warning("could not write schedule cache: %s", exc)
    return s


def _window(args, s: Schedule, lo_min: int = 1) -> tuple[int, int]:
    if args.range:
        lo, hi = args.range
    else:
        lo = 1 if args.include_pre_epoch else s.start
        hi = s.terminal
    return max(lo, lo_min), hi


def _stride(args, lo: int, hi: int) -> int:
    if args.stride is not None:
        return args.stride
    return est.coprime_stride(lo, hi, args.samples)


def _exclude(args, s: Schedule):
    if not args.exclude_boundaries:
        return None
    return _BoundaryMask(s)


class _BoundaryMask:
    # a class rather than a closure so that worker processes can unpickle it
    def __init__(self, s: Schedule):
        self.s = s

    def __call__(self, start, stride, count):
        return near_boundary(self.s, start, stride, count)


# -- output ---------------------------------------------------------------------


def emit(args, rows: list[dict], context: dict, fields=None) -> None:
    if args.format == "json":
        text = est.reports_to_json(rows, context)
    else:
        text = est.reports_to_csv(rows, timestamp=not args.no_timestamp, fields=fields)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _row(report: est.DensityReport, **extra) -> dict:
    d = report.to_dict()
    d["value"] = d["frequency"]
    d.update(extra)
    return d


def _value_row(label: str, value: float) -> dict:
    return {"label": label, "numerator": "", "denominator": "", "frequency": "",
            "lo": "", "hi": "", "stride": "", "context": "", "value": est.format_real(value)}


FIELDS = est.CSV_FIELDS + ["value"]


# -- subcommands ----------------------------------------------------------------


def cmd_find_t(args) -> int:
    char = character_mod_q(args.q)
    eps = args.eps[0] if args.eps else 0.3
    D = args.d_max[0] if args.d_max else 11
    primes = tuple(p for p in primes_up_to(D) if p != args.q)
    mode = TargetMode(args.mode or "conj_chi")
    targets = tuple(targets_for_mode(char, primes, mode))
    spec = TargetSpec(primes, targets, eps, args.t0)
    log.info("about %.3g target windows to traverse", search_cost_estimate(len(primes), eps))
    T = find_T(spec, max_steps=args.max_steps)
    rows = []
    for p, tgt in zip(primes, targets):
        ph = phase(p, T)
        d = chordal_distance(ph, tgt)
        rows.append({"prime": p, "target_turns": est.format_real(tgt.turns), "phase_turns": est.format_real(ph.turns),
                     "chord_distance": est.format_real(d), "ok": str(d <= eps).lower()})
    context = {"q": args.q, "mode": mode.value, "eps": eps, "D": D, "T0": args.t0, "T": repr(T)}
    if args.format == "json":
        text = est.reports_to_json(rows, context)
    else:
        text = f"T = {T!r}\n" + est.reports_to_csv(
            rows, timestamp=not args.no_timestamp,
            fields=["prime", "target_turns", "phase_turns", "chord_distance", "ok"])
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_build_schedule(args) -> int:
    mode = TargetMode(args.mode or "conj_chi")
    s = get_schedule(args, mode)
    checks = validate(s)
    target = args.out or None
    if target:
        Path(target).write_text(s.to_json())
    else:
        sys.stdout.write(s.to_json() + "\n")
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name}  [{c.measured}]", file=sys.stderr)
    return 0 if all(c.passed for c in checks) else EXIT_CHECK_FAILED


def cmd_verify(args) -> int:
    s = get_schedule(args, TargetMode.CONJ_CHI)
    P = StableSetParams(s)
    q = s.q
    w, excl = args.workers, _exclude(args, s)
    lo, hi = _window(args, s, lo_min=q)
    rows = []
    st = _stride(args, lo, hi)
    rows.append(_row(est.density(P, lo, hi, st, w, exclude=excl)))
    for p in sorted(set(primes_up_to(s.epochs[0].D)) | {q}):
        h = hi if p == q else min(hi, est.upper_for(P, p) // p)
        rows.append(_row(est.stability_defect(P, p, lo, h, _stride(args, lo, h), w, exclude=excl)))
    rows.append(_row(est.shifted_intersection_density(P, range(q), lo, hi, st, w, exclude=excl)))
    for k in range(1, s.K + 1):
        rows.append(_value_row(f"error budget B_{k}", s.error_budget(k)))
        rows.append(_value_row(f"union budget U_{k}", s.union_budget(k)))
    emit(args, rows, {"schedule": s.to_dict(), "samples": args.samples}, FIELDS)
    return 0


def _h_values(h_max: int) -> list[int]:
    out, H = [], 3
    while H <= h_max:
        out.append(H)
        H *= 10
    return out or [h_max]


def cmd_liouville(args) -> int:
    args.q = 3
    s = get_schedule(args, TargetMode.NEG_CHI)
    F = SignedParams(s)
    lo, hi = _window(args, s)
    w = args.workers
    rows = [_row(est.pair_correlation(F, lo, hi, _stride(args, lo, hi), w))]
    for H in _h_values(args.h_max):
        st = args.stride if args.stride is not None else est.coprime_stride(lo, hi, max(1000, args.samples // H))
        rows.append(_row(est.local_average(F, lo, hi, H, st, w)))
    emit(args, rows, {"schedule": s.to_dict()}, FIELDS)
    return 0


def cmd_lemma(args) -> int:
    T1, T2, N, m = args.t1, args.t2, args.n, args.m
    stride = args.stride or 1
    grid = est.arc_pair_grid(T1, T2, m, N, stride, args.workers)
    total = int(grid.sum())
    rows = []
    for a1 in range(m):
        for a2 in range(m):
            r = est.DensityReport(int(grid[a1, a2]), total, (1, N + 1), stride, "", f"cell ({a1},{a2}) m={m}")
            rows.append(_row(r, value=est.format_real(r.frequency - 1 / m**2)))
    rows.append(_value_row("lemma error bound", est.lemma_error_bound(T1, T2, N)))
    for n_, hits, freq in est.fixed_T_oscillation():
        r = est.DensityReport(hits, n_, (1, n_ + 1), 1, "", "fixed T upper half")
        rows.append(_row(r))
    emit(args, rows, {"T1": T1, "T2": T2, "N": N, "m": m}, FIELDS)
    return 0


def cmd_locate(args) -> int:
    s = get_schedule(args, TargetMode(args.mode or "conj_chi"))
    cell = locate(s, args.n)
    label = "pre-epoch" if cell == PRE_EPOCH else f"k={cell.k} j={cell.j}"
    print(f"n = {args.n}: {label}, alpha = {est.format_real(alpha(s, args.n))}")
    return 0


def cmd_member(args) -> int:
    mode = TargetMode(args.mode or "conj_chi")
    s = get_schedule(args, mode)
    n = args.n
    m_, n1 = 0, n
    while n1 % s.q == 0:
        n1 //= s.q
        m_ += 1
    if mode is TargetMode.NEG_CHI:
        F = SignedParams(s)
        value, mg = signed_f(F, n), signed_margin(F, n)
        print(f"f({n}) = {value:+d}, margin = {mg:.6g} turns")
    else:
        P = StableSetParams(s)
        value, mg = contains(P, n), margin(P, n)
        print(f"{n} in S: {str(value).lower()}, margin = {mg:.6g} turns")
    if n1 > 1:
        ell, T = selected_T(StableSetParams(s) if mode is TargetMode.CONJ_CHI else F, n1)
        print(f"n = {s.q}^{m_} * {n1}; frequency T_{ell} = {T!r}")
    return 0


COMMANDS = {
    "find-t": cmd_find_t,
    "build-schedule": cmd_build_schedule,
    "verify": cmd_verify,
    "liouville": cmd_liouville,
    "lemma": cmd_lemma,
    "locate": cmd_locate,
    "member": cmd_member,
}


def _common(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("schedule")
    g.add_argument("--schedule", help="schedule JSON file (excludes inline parameters)")
    g.add_argument("--q", type=int, default=3)
    g.add_argument("--mode", choices=[m.value for m in TargetMode])
    g.add_argument("--epochs", type=int, help="number of epochs K")
    g.add_argument("--eps", type=_floats, help="comma-separated eps_k")
    g.add_argument("--d-max", type=_ints, help="comma-separated D_k")
    g.add_argument("--growth", type=float, default=4.0)
    g.add_argument("--t0", type=float, default=0.0)
    g.add_argument("--max-steps", type=_int, default=10**9)
    g.add_argument("--cache-dir")
    m = p.add_argument_group("measurement")
    m.add_argument("--range", type=_range, help="LO:HI, half open")
    m.add_argument("--stride", type=_int, help="sampling stride; 1 scans exhaustively")
    m.add_argument("--samples", type=_int, default=DEFAULT_SAMPLES, help="sample count when --stride is absent")
    m.add_argument("--h-max", type=_int, default=300)
    m.add_argument("--workers", type=int, default=est.default_workers())
    m.add_argument("--include-pre-epoch", action="store_true")
    m.add_argument("--exclude-boundaries", action="store_true")
    o = p.add_argument_group("output")
    o.add_argument("--format", choices=["csv", "json"], default="csv")
    o.add_argument("--out")
    o.add_argument("--no-timestamp", action="store_true")
    o.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stablesets", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="JSON file whose keys mirror the long options")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        _common(p)
        if name == "lemma":
            p.add_argument("--t1", type=float, default=100.0)
            p.add_argument("--t2", type=float, default=1e5)
            p.add_argument("--n", type=_int, default=10**8)
            p.add_argument("--m", type=int, default=4)
        if name in ("locate", "member"):
            p.add_argument("--n", type=_int, help="required")
    return parser


_CONVERTERS = {"eps": _floats, "d_max": _ints, "range": _range, "stride": _int, "samples": _int,
               "h_max": _int, "max_steps": _int, "n": _int}


def load_config(path: str) -> dict:
    raw = json.loads(Path(path).read_text())
    if not isinstance(raw, dict):
        raise ValueError("config must be a JSON object")
    out = {}
    for key, val in raw.items():
        key = key.replace("-", "_")
        if key in _CONVERTERS and val is not None and not isinstance(val, bool):
            val = _CONVERTERS[key](",".join(map(str, val)) if isinstance(val, list) else val)
        out[key] = val
    return out


def parse_args(argv=None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        # config values act as defaults; explicit flags on the command line win
        cfg = load_config(args.config)
        cfg.pop("command", None)
        sub = parser._subparsers._group_actions[0].choices[args.command]  # type: ignore[union-attr]
        sub.set_defaults(**cfg)
        args = parser.parse_args(argv)
    return args


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command in ("locate", "member") and args.n is None:
            raise ValueError("--n is required")
        return COMMANDS[args.command](args)
    except SearchBudgetExhausted as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
