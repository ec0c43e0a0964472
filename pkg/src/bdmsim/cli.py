"""Command line front end: ``sim run``, ``sim compare``, ``sim sweep`` and ``sim calc``."""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
import tempfile
from pathlib import Path

from . import __version__
from .report import compare, emit_csv, run_batch, sweep_calls
from .scenario import ScenarioConfig, load_scenario
from .voip import (CapacityInputs, HeaderMode, HeaderStack, VoipFlow, codec_by_name, erlang_b,
                   number_of_calls, per_call_bandwidth)


class CliError(Exception):
    pass


def _write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as f:
            f.write(text)
        # mkstemp creates 0600; give the file the permissions open() would have
        umask = os.umask(0)
        os.umask(umask)
        os.chmod(tmp, 0o666 & ~umask)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def _commit(outputs: list[tuple[Path, str]]) -> None:
    # everything is rendered before the first file is touched
    for path, text in outputs:
        _write_atomic(path, text)


def _load(path: str, seed: int | None) -> ScenarioConfig:
    cfg = load_scenario(path)
    return cfg if seed is None else cfg.replace(seed=seed)


def _calls_range(text: str) -> list[int]:
    lo, sep, hi = text.partition("..")
    try:
        counts = list(range(int(lo), int(hi) + 1)) if sep else [int(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected A..B or a comma list, got {text!r}") from None
    if not counts or min(counts) < 1:
        raise argparse.ArgumentTypeError("call counts must be >= 1")
    return counts


# -- subcommands ------------------------------------------------------------------

def cmd_run(args) -> int:
    cfg = _load(args.scenario, args.seed)
    if args.seeds:
        configs = [cfg.replace(seed=s) for s in range(1, args.seeds + 1)]
    else:
        configs = [cfg]
    reports = run_batch(configs, args.jobs)
    texts = [emit_csv(r) for r in reports]
    outputs: list[tuple[Path, str]] = []
    if args.out is None:
        if len(texts) > 1:
            raise CliError("--seeds needs --out")
        sys.stdout.write(texts[0])
    elif len(texts) == 1:
        outputs.append((Path(args.out), texts[0]))
    else:
        out = Path(args.out)
        for c, text in zip(configs, texts):
            outputs.append((out.with_name(f"{out.stem}_seed{c.seed}{out.suffix or '.csv'}"), text))
    _commit(outputs)
    if args.figures:
        from .plotting import plot_timeseries
        stem = Path(args.scenario).stem
        plot_timeseries(reports, [f"seed {c.seed}" for c in configs],
                        Path(args.figures) / f"{stem}_timeseries.png")
    return 0


def cmd_compare(args) -> int:
    configs = [_load(p, args.seed) for p in args.scenarios]
    table = compare(configs, args.jobs)
    outputs = []
    if args.out:
        outputs.append((Path(args.out), table.to_csv()))
    _commit(outputs)
    sys.stdout.write(table.to_text())
    if args.figures:
        from .plotting import plot_comparison, plot_timeseries
        fig_dir = Path(args.figures)
        plot_comparison(table.labels, table.reports, fig_dir / "comparison.png")
        plot_timeseries(table.reports, table.labels, fig_dir / "comparison_timeseries.png")
    return 0


def cmd_sweep(args) -> int:
    cfg = _load(args.scenario, args.seed)
    points = sweep_calls(cfg, args.calls, args.jobs)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("calls", "steady_free_bw_pct", "utilization_pct", "throughput_bps",
                "loss_ratio", "delay_ms"))
    for p in points:
        r = p.report
        w.writerow([p.calls, *(repr(float(x)) for x in (
            p.steady_free_pct, r.utilization_pct, r.throughput_bps,
            r.frame_loss_ratio, r.mean_access_delay_ms))])
    if args.out:
        _commit([(Path(args.out), buf.getvalue())])
    else:
        sys.stdout.write(buf.getvalue())
    if args.figures:
        from .plotting import plot_sweep
        plot_sweep([p.calls for p in points], [p.steady_free_pct for p in points],
                   Path(args.figures) / f"{Path(args.scenario).stem}_sweep.png",
                   [100.0 - p.steady_free_pct for p in points])
    return 0


def _number(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def cmd_calc(args) -> int:
    if args.what == "bandwidth":
        flow = VoipFlow(codec_by_name(args.codec), args.ptime,
                        HeaderStack(mode=HeaderMode(args.header)))
        print(_number(per_call_bandwidth(flow)))
    elif args.what == "calls":
        print(number_of_calls(CapacityInputs(args.correc_fac, args.rb, args.rbt, args.codec_bw)))
    else:
        print(f"{erlang_b(args.servers, args.erlangs):.6f}")
    return 0


# -- parser -------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sim", description="802.11b VoIP simulator with BDM rate control")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one scenario and emit per-window CSV")
    r.add_argument("scenario")
    r.add_argument("--seed", type=int)
    r.add_argument("--seeds", type=int, metavar="N", help="run seeds 1..N, one CSV each")
    r.add_argument("--jobs", type=int, default=1)
    r.add_argument("--out", help="CSV path (stdout when omitted)")
    r.add_argument("--figures", metavar="DIR", help="also write PNG figures to DIR")
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("compare", help="run scenarios that differ only in controller")
    c.add_argument("scenarios", nargs="+")
    c.add_argument("--seed", type=int)
    c.add_argument("--jobs", type=int, default=1)
    c.add_argument("--out", help="write the comparison table as CSV")
    c.add_argument("--figures", metavar="DIR")
    c.set_defaults(func=cmd_compare)

    s = sub.add_parser("sweep", help="steady-state free bandwidth against the number of calls")
    s.add_argument("scenario")
    s.add_argument("--calls", type=_calls_range, required=True, help="A..B or a comma list")
    s.add_argument("--seed", type=int)
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--out")
    s.add_argument("--figures", metavar="DIR")
    s.set_defaults(func=cmd_sweep)

    k = sub.add_parser("calc", help="VoIP bandwidth, call capacity and Erlang-B calculators")
    ks = k.add_subparsers(dest="what", required=True)
    b = ks.add_parser("bandwidth", help="per-direction call bandwidth in bit/s")
    b.add_argument("codec")
    b.add_argument("ptime", type=int, help="packetization interval, ms")
    b.add_argument("header", choices=[m.value for m in HeaderMode])
    n = ks.add_parser("calls", help="number of calls a link carries")
    n.add_argument("correc_fac", type=float)
    n.add_argument("rb", type=float, help="link rate, bit/s")
    n.add_argument("rbt", type=float, help="rate reserved for other traffic, bit/s")
    n.add_argument("codec_bw", type=float, help="per-call bandwidth, bit/s")
    e = ks.add_parser("erlang", help="Erlang-B blocking probability")
    e.add_argument("servers", type=int)
    e.add_argument("erlangs", type=float)
    k.set_defaults(func=cmd_calc)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "jobs", 1) < 1:
        parser.error("--jobs must be >= 1")
    if getattr(args, "seeds", None) is not None and args.seeds < 1:
        parser.error("--seeds must be >= 1")
    try:
        return args.func(args)
    except (CliError, ValueError, OSError, KeyError) as e:
        msg = e.args[0] if isinstance(e, KeyError) and e.args else e
        print(f"sim: error: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
