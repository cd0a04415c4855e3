"""Command-line entry point.

Exit codes: 0 success, 1 validation problems (config, dataset layout, ids),
2 runtime failures (diverged training, IO errors, busy ports).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .data.core import validate_dataset
from .data.synthetic import save_synthetic, synth_generate
from .metrics import evaluate_dataset
from .pipeline.config import load_config
from .pipeline.infer import run_inference
from .pipeline.server import make_server
from .pipeline.train import TrainingDiverged, train

_VALIDATION_ERRORS = (ValueError, FileNotFoundError, NotADirectoryError, KeyError)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="scribblecod")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train from a config file")
    p.add_argument("--config", required=True, help="flat key-value config file")
    p.add_argument(
        "--set", action="append", default=[], metavar="KEY=VALUE",
        help="override a config entry (repeatable)",
    )

    p = sub.add_parser("infer", help="predict maps for a directory of images")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--images", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--size", type=int, default=None, help="network input size override")
    p.add_argument("--device", default="cpu")

    p = sub.add_parser("eval", help="score predictions against gt masks")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--json", default=None, help="write the full report here")
    p.add_argument("--csv", default=None, help="write per-sample rows here")
    p.add_argument(
        "--no-resize-pred", action="store_true",
        help="fail on size mismatches instead of resizing predictions",
    )

    p = sub.add_parser("synth", help="generate a synthetic dataset split")
    p.add_argument("--root", required=True)
    p.add_argument("--split", default="train")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--size", type=int, default=320)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("validate", help="check a dataset split against the format contract")
    p.add_argument("--root", required=True)
    p.add_argument("--split", default="train")

    p = sub.add_parser("annotate", help="serve the scribble annotation tool")
    p.add_argument("--root", required=True)
    p.add_argument("--split", default="train")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8008)
    p.add_argument("--frontend", default=None, help="static frontend bundle directory")
    return parser


def _parse_overrides(items: list[str]) -> dict[str, str]:
    overrides = {}
    for item in items:
        if "=" not in item:
            raise ValueError(f"override '{item}' must look like key=value")
        key, value = item.split("=", 1)
        overrides[key.strip()] = value.strip()
    return overrides


def _cmd_train(args) -> int:
    cfg = load_config(args.config, _parse_overrides(args.set))
    summary = train(cfg, log_fn=_print_progress)
    print(f"done: {summary['steps']} steps, checkpoint at {summary['checkpoint']}")
    return 0


def _print_progress(record: dict) -> None:
    if record["step"] % 10 == 0:
        print(
            f"step {record['step']:6d} epoch {record['epoch']:4d} "
            f"lr {record['lr']:.2e} total {record['total']:.4f} pce {record['pce']:.4f}"
        )


def _cmd_infer(args) -> int:
    written = run_inference(args.checkpoint, args.images, args.out, args.size, args.device)
    print(f"wrote {len(written)} predictions to {args.out}")
    return 0


def _cmd_eval(args) -> int:
    report = evaluate_dataset(args.pred, args.gt, resize_pred=not args.no_resize_pred)
    print(report.summary())
    if args.json:
        report.to_json(args.json)
    if args.csv:
        report.to_csv(args.csv)
    return 0


def _cmd_synth(args) -> int:
    samples = synth_generate(args.count, args.size, args.seed)
    split_dir = save_synthetic(args.root, args.split, samples)
    print(f"wrote {len(samples)} samples to {split_dir}")
    return 0


def _cmd_validate(args) -> int:
    report = validate_dataset(args.root, args.split)
    print(report.summary())
    return 0 if report.ok else 1


def _cmd_annotate(args) -> int:
    frontend = args.frontend
    if frontend is None:
        bundled = Path(__file__).resolve().parents[2] / "frontend" / "dist"
        frontend = bundled if bundled.is_dir() else None
    server = make_server(args.root, args.split, frontend, args.host, args.port)
    host, port = server.server_address[:2]
    print(f"annotation server on http://{host}:{port}/ (ctrl-c to stop)")
    try:
        server.serve_forever()
    finally:
        server.server_close()
    return 0


_COMMANDS = {
    "train": _cmd_train,
    "infer": _cmd_infer,
    "eval": _cmd_eval,
    "synth": _cmd_synth,
    "validate": _cmd_validate,
    "annotate": _cmd_annotate,
}


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except KeyboardInterrupt:
        return 130
    except _VALIDATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except TrainingDiverged as exc:
        print(f"training aborted: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - surface anything else as a runtime failure
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
