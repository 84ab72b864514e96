"""Command-line entry point.

Subcommands::

    twinfuse gen    --config cfg.json --out rundir
    twinfuse run    --frames rundir --target 1 --mode fused --out results.csv
    twinfuse eval   --results base.csv fused.csv --taus 0.5:0.9:0.1 --out curve.csv
    twinfuse safety --scenario cutin.json --lead-time 2.0 --out safety.json

Exit codes: 0 success, 1 usage or configuration error, 2 data or I/O
error.  Every output records the flags that produced it (``#`` comment
lines in CSVs, fields in JSON) so experiments can be traced and rerun.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

from .errors import (ConfigInvalid, EmptyInput, InvalidBox, NoEvent,
                     ParseError, RunDirectoryError, UnknownTarget)
from .fusion import DepthParams, MatchOutcome, NoMatchReason, fuse_frame
from .metrics import (EvalRecord, accuracy_at, average_ttc, iou, min_ttc,
                      scripted_reaction_experiment, speed_variance)
from .runio import RunReader, write_run
from .scenesim.config import ScenarioConfig
from .scenesim.sensors import simulate

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2

RESULTS_HEADER = ("frame", "mode", "matched", "box_index", "delta_d",
                  "iou_with_truth", "reason")


def _load_config(path) -> ScenarioConfig:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigInvalid("config", f"{path}: invalid JSON: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise ConfigInvalid("config", f"{path}: top level must be an object")
    return ScenarioConfig.from_dict(raw)


def _cmd_gen(args) -> int:
    config = _load_config(args.config)
    n = write_run(config, simulate(config), args.out)
    print(f"wrote {n} frames to {args.out}")
    return EXIT_OK


def _cmd_run(args) -> int:
    try:
        params = DepthParams(th=args.th, n=args.n, seed=args.seed)
    except ValueError as exc:
        raise ConfigInvalid("th/n", str(exc)) from exc
    reader = RunReader(args.frames)
    with_depth = args.mode == "fused"

    rows = []
    matched = 0
    for frame in reader.frames(with_depth=with_depth):
        outcome = fuse_frame(frame, args.target, args.mode, params)
        truth = frame.gt_boxes.get(args.target)
        if outcome.matched and truth is not None:
            score = iou(frame.detections[outcome.box_index], truth)
        else:
            score = 0.0
        matched += outcome.matched
        rows.append((
            frame.index,
            args.mode,
            "true" if outcome.matched else "false",
            "" if outcome.box_index is None else outcome.box_index,
            repr(float(outcome.delta_d)),
            repr(float(score)),
            "" if outcome.reason is None else outcome.reason.value,
        ))

    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# twinfuse run: frames={args.frames} target={args.target} "
                 f"mode={args.mode} th={args.th} n={args.n} seed={args.seed}\n")
        writer = csv.writer(fh)
        writer.writerow(RESULTS_HEADER)
        writer.writerows(rows)
    print(f"{args.mode}: matched {matched}/{len(rows)} frames -> {args.out}")
    return EXIT_OK


def _parse_taus(spec: str) -> list[float]:
    parts = spec.split(":")
    if len(parts) != 3:
        raise ConfigInvalid("taus", f"expected start:stop:step, got {spec!r}")
    try:
        start, stop, step = (float(p) for p in parts)
    except ValueError:
        raise ConfigInvalid("taus", f"non-numeric bound in {spec!r}") from None
    if step <= 0 or stop < start:
        raise ConfigInvalid("taus", f"need step > 0 and stop >= start, got {spec!r}")
    taus = []
    k = 0
    while True:
        tau = round(start + k * step, 10)
        if tau > stop + 1e-9:
            break
        taus.append(tau)
        k += 1
    return taus


def _load_results(path) -> tuple[str, list[EvalRecord]]:
    """Parse a results CSV back into records; returns (mode, records)."""
    records: list[EvalRecord] = []
    mode = ""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        data_lines = (line for line in fh if not line.startswith("#"))
        reader = csv.reader(data_lines)
        header = next(reader, None)
        if header != list(RESULTS_HEADER):
            raise ParseError(1, f"{path}: unexpected results header {header!r}")
        for row in reader:
            if not row:
                continue
            if len(row) != len(RESULTS_HEADER):
                raise ParseError(reader.line_num,
                                 f"{path}: expected {len(RESULTS_HEADER)} fields, "
                                 f"got {len(row)}")
            try:
                frame = int(row[0])
                mode = row[1]
                is_matched = {"true": True, "false": False}[row[2]]
                delta_d = float(row[4])
                score = float(row[5])
                if is_matched:
                    outcome = MatchOutcome.hit(int(row[3]), delta_d)
                else:
                    outcome = MatchOutcome.miss(NoMatchReason(row[6]))
                records.append(EvalRecord(frame=frame, mode=mode,
                                          outcome=outcome, iou_with_truth=score))
            except (KeyError, ValueError) as exc:
                raise ParseError(reader.line_num, f"{path}: {exc}") from exc
    if not records:
        raise EmptyInput(f"{path}: no result rows")
    return mode, records


def _cmd_eval(args) -> int:
    taus = _parse_taus(args.taus)
    columns: list[tuple[str, list[float]]] = []
    for path in args.results:
        mode, records = _load_results(path)
        name = f"accuracy_{mode}"
        if any(existing == name for existing, _ in columns):
            name = f"{name}_{len(columns) + 1}"
        columns.append((name, [accuracy_at(records, tau) for tau in taus]))

    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# twinfuse eval: taus={args.taus} "
                 f"results={','.join(map(str, args.results))}\n")
        writer = csv.writer(fh)
        writer.writerow(["tau"] + [name for name, _ in columns])
        for i, tau in enumerate(taus):
            writer.writerow([repr(tau)] + [repr(accs[i]) for _, accs in columns])
    print(f"wrote {len(taus)}-row curve -> {args.out}")
    return EXIT_OK


def _cmd_safety(args) -> int:
    config = _load_config(args.scenario)
    no_adv, adv = scripted_reaction_experiment(config, args.lead_time)

    def summarize(log):
        return {
            "speed_variance": speed_variance(log),
            "avg_ttc": average_ttc(log),
            "min_ttc": min_ttc(log),
        }

    payload = {
        "scenario": str(args.scenario),
        "lead_time": args.lead_time,
        "no_advisory": summarize(no_adv),
        "advisory": summarize(adv),
    }
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")

    def fmt(x):
        return "n/a" if x is None else f"{x:.2f} s"

    print(f"min TTC {fmt(payload['no_advisory']['min_ttc'])} -> "
          f"{fmt(payload['advisory']['min_ttc'])} with {args.lead_time} s "
          f"advisory; details -> {args.out}")
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="twinfuse",
        description="Match cloud-reported vehicle positions to camera "
                    "detections, and evaluate the matching.")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="simulate a scenario into a run directory")
    gen.add_argument("--config", required=True, help="scenario JSON")
    gen.add_argument("--out", required=True, help="run directory to create")
    gen.set_defaults(handler=_cmd_gen)

    run = sub.add_parser("run", help="match one target over a stored run")
    run.add_argument("--frames", required=True, help="run directory")
    run.add_argument("--target", required=True, type=int, help="target vehicle id")
    run.add_argument("--mode", required=True, choices=("baseline", "fused"))
    run.add_argument("--th", type=float, default=0.1,
                     help="box shrink fraction for depth sampling")
    run.add_argument("--n", type=int, default=25,
                     help="depth samples per box")
    run.add_argument("--seed", type=int, default=0, help="depth sampling seed")
    run.add_argument("--out", required=True, help="results CSV")
    run.set_defaults(handler=_cmd_run)

    ev = sub.add_parser("eval", help="accuracy-vs-IoU curve from results files")
    ev.add_argument("--results", required=True, nargs="+",
                    help="one or more results CSVs")
    ev.add_argument("--taus", default="0.5:0.9:0.1",
                    help="IoU thresholds as start:stop:step")
    ev.add_argument("--out", required=True, help="curve CSV")
    ev.set_defaults(handler=_cmd_eval)

    saf = sub.add_parser("safety", help="scripted advisory-braking comparison")
    saf.add_argument("--scenario", required=True, help="cut-in scenario JSON")
    saf.add_argument("--lead-time", dest="lead_time", required=True, type=float,
                     help="advisory lead time, seconds")
    saf.add_argument("--out", required=True, help="summary JSON")
    saf.set_defaults(handler=_cmd_safety)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad flags; that is a usage error here (help is 0)
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return args.handler(args)
    except (ConfigInvalid, UnknownTarget, NoEvent, EmptyInput) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (RunDirectoryError, ParseError, InvalidBox) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
