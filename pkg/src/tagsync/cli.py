"""Command-line entry point: run scenarios, sweep timer periods, compare traces."""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

from .checker import check_dnet_consistency, check_equivalence, check_safety, first_divergence
from .harness import LatencyModel, Trace, count_signals, run
from .scenarios import SCENARIOS, make
from .signals import SignalKind
from .tags import parse_duration

CSV_COLUMNS = [
    "scenario",
    "period_ns",
    "dnet",
    "net_count",
    "ltc_count",
    "tag_count",
    "dnet_count",
    "msg_count",
    "reduction_ratio",
]


def summarize(trace: Trace, scenario: str, period: int, dnet: bool) -> dict:
    """One summary row; ``msg_count`` counts messages sent by federates."""
    msgs = count_signals(trace, SignalKind.MSG)
    return {
        "scenario": scenario,
        "period_ns": period,
        "dnet": "on" if dnet else "off",
        "net_count": count_signals(trace, SignalKind.NET)["total"],
        "ltc_count": count_signals(trace, SignalKind.LTC)["total"],
        "tag_count": count_signals(trace, SignalKind.TAG)["total"],
        "dnet_count": count_signals(trace, SignalKind.DNET)["total"],
        "msg_count": msgs["total"] - msgs.get("RTI", 0),
        "reduction_ratio": "",
    }


def _csv_text(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def _human_table(rows: list[dict]) -> str:
    widths = {c: max(len(c), *(len(str(r[c])) for r in rows)) for c in CSV_COLUMNS}
    lines = ["  ".join(c.ljust(widths[c]) for c in CSV_COLUMNS)]
    for r in rows:
        lines.append("  ".join(str(r[c]).rjust(widths[c]) for c in CSV_COLUMNS))
    return "\n".join(lines)


def _on_off(text: str) -> bool:
    if text not in ("on", "off"):
        raise argparse.ArgumentTypeError("expected on or off")
    return text == "on"


def _latency(text: str) -> LatencyModel:
    try:
        return LatencyModel.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _duration(text: str) -> int:
    try:
        return parse_duration(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _durations(text: str) -> list[int]:
    return [_duration(p) for p in text.split(",") if p.strip()]


def _run_one(scenario_name, period, detection, duration, dnet, latency):
    sc = make(scenario_name, period, detection, duration)
    return sc, run(sc.topology, sc, latency, dnet=dnet)


def _report_run_problems(trace: Trace) -> int:
    if trace.aborted:
        print(f"run aborted: {trace.fault}", file=sys.stderr)
        return 1
    if trace.stalled:
        print(f"run stalled with pending events: {trace.stalled}", file=sys.stderr)
        return 1
    return 0


def cmd_run(args) -> int:
    if args.config:
        cfg = json.loads(Path(args.config).read_text())
        args.scenario = cfg.get("scenario", args.scenario)
        args.period = cfg.get("period_ns", args.period)
        args.detection = cfg.get("detection_period_ns", args.detection)
        args.duration = cfg.get("duration_ns", args.duration)
        if "dnet" in cfg:
            dnet = cfg["dnet"]
            args.dnet = dnet if isinstance(dnet, bool) else _on_off(dnet)
        if "latency" in cfg:
            args.latency = _latency(cfg["latency"])
    sc, trace = _run_one(args.scenario, args.period, args.detection, args.duration,
                         args.dnet, args.latency)
    if args.trace:
        trace.write(args.trace)
    rows = [summarize(trace, args.scenario, args.period, args.dnet)]
    print(_human_table(rows))
    if args.summary:
        Path(args.summary).write_text(_csv_text(rows))
    return _report_run_problems(trace)


def cmd_sweep(args) -> int:
    rows = []
    status = 0
    for period in args.periods:
        pair = []
        for dnet in (False, True):
            _, trace = _run_one(args.scenario, period, args.detection, args.duration, dnet, args.latency)
            status |= _report_run_problems(trace)
            pair.append(summarize(trace, args.scenario, period, dnet))
        base, opt = pair
        base["reduction_ratio"] = "1.00"
        if opt["net_count"]:
            opt["reduction_ratio"] = f"{base['net_count'] / opt['net_count']:.2f}"
        rows += pair
    print(_period_table(rows, args.periods))
    if args.summary:
        Path(args.summary).write_text(_csv_text(rows))
    return status


def _fmt_period(ns: int) -> str:
    for unit, scale in (("s", 10**9), ("ms", 10**6), ("us", 10**3)):
        if ns % scale == 0:
            return f"{ns // scale} {unit}"
    return f"{ns} ns"


def _period_table(rows: list[dict], periods: list[int]) -> str:
    by = {(r["period_ns"], r["dnet"]): r for r in rows}
    header = ["Timer Period"] + [_fmt_period(p) for p in periods]
    body = [
        ["Baseline"] + [f"{by[(p, 'off')]['net_count']:,}" for p in periods],
        ["DNET"] + [f"{by[(p, 'on')]['net_count']:,}" for p in periods],
        ["Reduction"] + [f"{by[(p, 'on')]['reduction_ratio']}x" for p in periods],
    ]
    widths = [max(len(r[c]) for r in [header] + body) for c in range(len(header))]
    return "\n".join(
        " | ".join(cell.rjust(w) if i else cell.ljust(w) for i, (cell, w) in enumerate(zip(r, widths)))
        for r in [header] + body
    )


def _load(path: str) -> Trace | None:
    try:
        return Trace.load(path)
    except OSError as exc:
        print(f"cannot read {path}: {exc}", file=sys.stderr)
        return None


def cmd_compare(args) -> int:
    a, b = _load(args.trace_a), _load(args.trace_b)
    if a is None or b is None:
        return 2
    verdict = check_equivalence(a, b)
    if verdict.ok:
        print("equivalent")
        return 0
    div = first_divergence(a, b)
    for v in verdict.violations:
        print(v)
    if div is not None:
        fed, idx, x, y = div
        print(f"first divergence: federate {fed}, tag group {idx}")
        print(f"  a: {x}")
        print(f"  b: {y}")
    return 1


def cmd_check(args) -> int:
    trace = _load(args.trace)
    if trace is None:
        return 2
    verdict = check_safety(trace)
    if args.topology:
        from .topology import load as load_topology

        verdict.extend(check_dnet_consistency(trace, load_topology(args.topology)))
    for v in verdict.violations:
        print(v)
    if verdict.ok:
        print("ok")
    return 0 if verdict.ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tagsync", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--scenario", choices=sorted(SCENARIOS), default="sparse")
        p.add_argument("--detection", type=_duration, default=parse_duration("5s"),
                       help="detection period (ns/us/ms/s suffix)")
        p.add_argument("--duration", type=_duration, default=parse_duration("500s"),
                       help="logical duration of the run")
        p.add_argument("--latency", type=_latency, default=LatencyModel(),
                       help="zero or fixed:K (transport steps)")
        p.add_argument("--summary", help="write CSV summary here")

    p = sub.add_parser("run", help="run one scenario")
    common(p)
    p.add_argument("--period", type=_duration, default=parse_duration("20ms"))
    p.add_argument("--dnet", type=_on_off, default=False, help="on or off")
    p.add_argument("--trace", help="write JSON Lines trace here")
    p.add_argument("--config", help="JSON scenario config (overrides flags)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="baseline vs DNET over several timer periods")
    common(p)
    p.add_argument("--periods", type=_durations,
                   default=_durations("5ms,10ms,20ms,50ms,100ms"))
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compare", help="check two traces for observational equivalence")
    p.add_argument("trace_a")
    p.add_argument("trace_b")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("check", help="check a trace for safety violations")
    p.add_argument("trace")
    p.add_argument("--topology", help="topology JSON; enables DNET value checks")
    p.set_defaults(func=cmd_check)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
