"""Command-line interface: analyze a detection stream, evaluate predictions,
or synthesize a seeded scenario.

Exit codes are stable for scripting: 0 success, 1 input/parse error,
2 configuration error. Output files are written atomically, so a failed run
leaves no partial file behind.
"""

import argparse
import json
import os
import re
import sys
import tempfile
from pathlib import Path

from . import io as fio
from .metrics import EvalReport
from .pipeline import (
    PipelineConfig,
    analyze_stream,
    detection_map,
    evaluate_detections,
    evaluate_events,
)
from .synth import generate, parse_scenario_spec

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_CONFIG = 2


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except fio.ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (fio.ParseError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flockwatch",
        description="Track birds through a detection stream and flag huddling "
                    "and inactivity anomalies.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser(
        "analyze",
        help="run the tracking and anomaly pipeline over a detection stream",
    )
    p.add_argument("--input", required=True, help="detection stream (JSON lines)")
    p.add_argument("--output", required=True, help="event output file (JSON lines)")
    p.add_argument("--config", help="flat key=value config file; defaults apply "
                                    "to unset keys")
    p.set_defaults(handler=_cmd_analyze)

    p = sub.add_parser(
        "evaluate",
        help="score predicted events or detections against ground truth",
    )
    p.add_argument("--mode", choices=("events", "detections"), default="events",
                   help="events: frame-level huddling and track-level "
                        "inactivity; detections: IoU matching plus mAP")
    p.add_argument("--input", required=True, help="predicted events or detections")
    p.add_argument("--truth", required=True,
                   help="ground-truth events file, detection-format truth file, "
                        "or a directory of LabelImg XML annotations")
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--format", choices=("text", "machine"), default="text",
                   help="report as a table or as JSON")
    p.add_argument("--output", help="write the report here instead of stdout")
    p.set_defaults(handler=_cmd_evaluate)

    p = sub.add_parser(
        "synthesize",
        help="generate a seeded synthetic scenario with ground-truth labels",
    )
    p.add_argument("--config", required=True, help="scenario spec (flat key=value)")
    p.add_argument("--output", required=True, help="detection stream output file")
    p.add_argument("--truth-output", required=True,
                   help="ground-truth event output file")
    p.set_defaults(handler=_cmd_synthesize)
    return parser


def _cmd_analyze(args) -> int:
    config = _load_config(args.config)
    with open(args.input, "r", encoding="utf-8") as fh:
        frames = fio.parse_detection_stream(fh)
    events = analyze_stream(frames, config)
    _write_atomic(args.output, fio.serialize_events(events))
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    config = _load_config(args.config)
    if args.mode == "events":
        predicted = _read_events(args.input)
        truth = _read_events(args.truth)
        report = evaluate_events(predicted, truth)
    else:
        with open(args.input, "r", encoding="utf-8") as fh:
            frames = fio.parse_detection_stream(fh)
        predictions = [d for f in frames for d in f.detections]
        truths = _read_truth_boxes(args.truth)
        report = evaluate_detections(predictions, truths, config.iou_threshold)
    text = _render_report(report, args.format)
    if args.output:
        _write_atomic(args.output, text)
    else:
        print(text, end="" if text.endswith("\n") else "\n")
    return EXIT_OK


def _cmd_synthesize(args) -> int:
    with open(args.config, "r", encoding="utf-8") as fh:
        spec = parse_scenario_spec(fh.read())
    frames, truth = generate(spec)
    _write_atomic(args.output, fio.serialize_detections(frames))
    _write_atomic(args.truth_output, fio.serialize_events(truth.truth_events()))
    return EXIT_OK


def _load_config(path) -> PipelineConfig:
    if path is None:
        return PipelineConfig()
    with open(path, "r", encoding="utf-8") as fh:
        return fio.load_config(fh.read())


def _read_events(path):
    with open(path, "r", encoding="utf-8") as fh:
        try:
            return fio.parse_events(fh)
        except fio.ParseError as exc:
            raise fio.ParseError(
                f"{path}: {exc} (expected the event wire format; use "
                f"--mode detections for detection streams)"
            ) from exc


def _read_truth_boxes(path) -> list:
    """Ground-truth (frame, label, box) triples from XML annotations or a
    detection-format truth file. XML files map to frame indices via the last
    run of digits in the file stem."""
    p = Path(path)
    if p.is_dir():
        triples = []
        xml_files = sorted(p.glob("*.xml"))
        if not xml_files:
            raise fio.ParseError(f"{path}: no .xml annotation files found")
        for xml_path in xml_files:
            triples.extend(_xml_truth(xml_path))
        return triples
    if p.suffix.lower() == ".xml":
        return _xml_truth(p)
    with open(p, "r", encoding="utf-8") as fh:
        frames = fio.parse_detection_stream(fh)
    return [(f.frame_index, d.class_label, d.bbox)
            for f in frames for d in f.detections]


def _xml_truth(xml_path: Path) -> list:
    frame_index = _frame_index_of(xml_path)
    try:
        doc = fio.parse_voc_annotation(xml_path.read_text(encoding="utf-8"))
    except fio.ParseError as exc:
        raise fio.ParseError(f"{xml_path}: {exc}") from exc
    return [(frame_index, label, box) for label, box in doc.boxes]


def _frame_index_of(xml_path: Path) -> int:
    digits = re.findall(r"\d+", xml_path.stem)
    if not digits:
        raise fio.ParseError(
            f"{xml_path}: cannot derive a frame index from the file name "
            f"(expected digits in the stem)"
        )
    return int(digits[-1])


def _render_report(report: EvalReport, fmt: str) -> str:
    if fmt == "machine":
        payload = report.to_dict()
        payload["map"] = detection_map(report)
        return json.dumps(payload, indent=2) + "\n"
    lines = [report.render_text()]
    overall = detection_map(report)
    if overall is not None:
        lines.append(f"mAP: {overall:.4f}")
    return "\n".join(lines) + "\n"


def _write_atomic(path, text: str) -> None:
    """Write the whole file or nothing: stage to a temp file, then replace."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".flockwatch-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


if __name__ == "__main__":
    sys.exit(main())
