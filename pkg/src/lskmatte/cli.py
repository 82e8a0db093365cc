"""Command-line interface: matte extraction, evaluation, and batch runs.

Exit codes: 0 success, 1 usage error, 2 pipeline error, 3 partial batch failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.io

from .errors import MattingError
from .imaging import decode_image, decode_matte, decode_trimap, encode_matte
from .metrics import EvalReport, evaluate, format_ranking, format_report
from .pipeline import (
    MODE_AUGMENTED,
    MODE_CF_BASELINE,
    MatteResult,
    PipelineStageError,
    RunConfig,
    run_matte,
)
from .solver import AlphaMatte

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PIPELINE = 2
EXIT_PARTIAL = 3

_SOURCE_GRAY = {0: 0, 1: 255, 2: 128}  # known / local sampling / classifier


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _pipeline_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("pipeline options")
    group.add_argument("--mode", choices=[MODE_AUGMENTED, MODE_CF_BASELINE],
                       default=MODE_AUGMENTED)
    group.add_argument("--lambda", dest="lam", type=float, default=100.0,
                       help="known-pixel constraint weight (implementer default)")
    group.add_argument("--epsilon-sim", type=float, default=0.1,
                       help="local-sampling residual threshold (implementer default)")
    group.add_argument("--sigma-sq", type=float, default=2.0)
    group.add_argument("--rho", type=float, default=15.0)
    group.add_argument("--pre-spatial", type=float, default=9.0)
    group.add_argument("--pre-color", type=float, default=9.0)
    group.add_argument("--no-preprocess", action="store_true")
    group.add_argument("--features", choices=["auto", "9d", "11d"], default="auto")
    group.add_argument("--accuracy-floor", type=float, default=0.85)
    group.add_argument("--k-max", type=int, default=15)
    group.add_argument("--cv-folds", type=int, default=5)
    group.add_argument("--verbose", action="store_true")


def _build_parser() -> _Parser:
    parser = _Parser(prog="lskmatte", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    matte = sub.add_parser("matte", help="extract an alpha matte")
    matte.add_argument("image")
    matte.add_argument("trimap")
    matte.add_argument("-o", "--output", required=True)
    matte.add_argument("--gt", help="ground-truth matte; prints an evaluation report")
    matte.add_argument("--dump-system", metavar="PATH",
                       help="write <PATH>.mtx and <PATH>.rhs.txt for external checks")
    matte.add_argument("--debug-constraints", metavar="DIR",
                       help="write a_init/confidence/source grayscale diagnostics")
    _pipeline_flags(matte)

    ev = sub.add_parser("eval", help="compare a predicted matte against ground truth")
    ev.add_argument("pred")
    ev.add_argument("truth")
    ev.add_argument("--trimap", help="trimap for --region unknown")
    ev.add_argument("--region", choices=["all", "unknown"], default="all")

    batch = sub.add_parser("batch", help="process a manifest of image/trimap entries")
    batch.add_argument("manifest")
    batch.add_argument("--out-dir", default=None,
                       help="matte output directory (default: manifest directory)")
    _pipeline_flags(batch)
    return parser


def _config_from_args(args) -> RunConfig:
    return RunConfig(
        mode=args.mode,
        lam=args.lam,
        epsilon_sim=args.epsilon_sim,
        sigma_sq=args.sigma_sq,
        rho=args.rho,
        pre_spatial=args.pre_spatial,
        pre_color=args.pre_color,
        preprocess=not args.no_preprocess,
        features=args.features,
        accuracy_floor=args.accuracy_floor,
        k_max=args.k_max,
        cv_folds=args.cv_folds,
        verbose=args.verbose,
    )


def _log(message: str) -> None:
    print(message, file=sys.stderr)


def _read(path: str, what: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise MattingError(f"cannot read {what} {path!r}: {exc}")


def _run_files(image_path: str, trimap_path: str, config: RunConfig) -> MatteResult:
    try:
        img = decode_image(_read(image_path, "image"))
        tri = decode_trimap(_read(trimap_path, "trimap"))
    except PipelineStageError:
        raise
    except MattingError as exc:
        raise PipelineStageError("decode", exc) from exc
    return run_matte(img, tri, config, log=_log)


def _dump_system(result: MatteResult, base: str) -> None:
    scipy.io.mmwrite(f"{base}.mtx", result.system.matrix.tocoo(), symmetry="general")
    np.savetxt(f"{base}.rhs.txt", result.system.rhs)


def _dump_constraints(result: MatteResult, dir_path: str) -> None:
    out = Path(dir_path)
    out.mkdir(parents=True, exist_ok=True)
    field = result.constraints
    if field is None:
        raise MattingError("no constraints to dump in cf-baseline mode")
    (out / "a_init.png").write_bytes(encode_matte(field.a_init))
    (out / "confidence.png").write_bytes(encode_matte(field.confidence))
    source = np.zeros(field.source.shape)
    for code, gray in _SOURCE_GRAY.items():
        source[field.source == code] = gray / 255.0
    (out / "source.png").write_bytes(encode_matte(source))


def _cmd_matte(args) -> int:
    config = _config_from_args(args)
    result = _run_files(args.image, args.trimap, config)
    Path(args.output).write_bytes(encode_matte(result.matte.alpha))
    if args.dump_system:
        _dump_system(result, args.dump_system)
    if args.debug_constraints:
        _dump_constraints(result, args.debug_constraints)
    if args.gt:
        truth = AlphaMatte(decode_matte(_read(args.gt, "ground truth")))
        report = evaluate(result.matte, truth)
        print(format_report(report))
        print(report.record())
    return EXIT_OK


def _cmd_eval(args) -> int:
    pred = AlphaMatte(decode_matte(_read(args.pred, "prediction")))
    truth = AlphaMatte(decode_matte(_read(args.truth, "ground truth")))
    region = None
    if args.region == "unknown":
        if not args.trimap:
            raise UsageError("--region unknown requires --trimap")
        region = decode_trimap(_read(args.trimap, "trimap")).is_unknown
    report = evaluate(pred, truth, region=region)
    print(format_report(report))
    print(report.record())
    return EXIT_OK


@dataclass
class _Entry:
    image: Path
    trimap: Path
    truth: Path | None


def _parse_manifest(path: str) -> list[_Entry]:
    manifest = Path(path)
    try:
        text = manifest.read_text()
    except OSError as exc:
        raise UsageError(f"cannot read manifest {path!r}: {exc}")
    base = manifest.parent
    entries = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) not in (2, 3):
            raise UsageError(f"manifest line {lineno}: expected 2 or 3 paths, got {len(parts)}")
        paths = [Path(p) if Path(p).is_absolute() else base / p for p in parts]
        for p in paths:
            if not p.exists():
                raise UsageError(f"manifest line {lineno}: file not found: {p}")
        entries.append(_Entry(paths[0], paths[1], paths[2] if len(paths) == 3 else None))
    if not entries:
        raise UsageError("manifest has no entries")
    return entries


def _cmd_batch(args) -> int:
    entries = _parse_manifest(args.manifest)
    out_dir = Path(args.out_dir) if args.out_dir else Path(args.manifest).parent
    out_dir.mkdir(parents=True, exist_ok=True)
    config = _config_from_args(args)

    failures = []
    totals: dict[str, list[EvalReport]] = {}
    for entry in entries:
        stem = entry.image.stem
        try:
            config.mode = MODE_AUGMENTED
            augmented = _run_files(str(entry.image), str(entry.trimap), config)
            (out_dir / f"{stem}_augmented.png").write_bytes(
                encode_matte(augmented.matte.alpha)
            )
            if entry.truth is None:
                print(f"{stem}: matte written (no ground truth)")
                continue
            config.mode = MODE_CF_BASELINE
            baseline = _run_files(str(entry.image), str(entry.trimap), config)
            (out_dir / f"{stem}_cf-baseline.png").write_bytes(
                encode_matte(baseline.matte.alpha)
            )
            truth = AlphaMatte(decode_matte(entry.truth.read_bytes()))
            rows = [
                ("augmented", evaluate(augmented.matte, truth)),
                ("cf-baseline", evaluate(baseline.matte, truth)),
            ]
            print(f"== {stem} ==")
            print(format_ranking(rows))
            for name, report in rows:
                totals.setdefault(name, []).append(report)
        except (MattingError, ValueError, OSError) as exc:
            failures.append((stem, exc))
            print(f"{stem}: FAILED: {exc}", file=sys.stderr)

    if totals:
        evaluated = max(len(reports) for reports in totals.values())
        aggregate = []
        for name, reports in totals.items():
            pixels = sum(r.pixel_count for r in reports)
            sad = sum(r.sad for r in reports)
            sq = sum(r.mse * r.pixel_count for r in reports)
            aggregate.append((name, EvalReport(sad=sad, mse=sq / pixels, pixel_count=pixels)))
        print(f"== aggregate over {evaluated} evaluated entries ==")
        print(format_ranking(aggregate))
    if failures:
        print(f"{len(failures)} of {len(entries)} entries failed", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        if args.command == "matte":
            return _cmd_matte(args)
        if args.command == "eval":
            return _cmd_eval(args)
        return _cmd_batch(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (MattingError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PIPELINE


if __name__ == "__main__":
    sys.exit(main())
