"""Command-line entry point.

Commands: transpile (convert a source file once), port (stage the converted
unit for target OS labels), run (interpret a source file), hr (heart-rate
CSV from a signal, via either engine), synth (generate a validation
signal), diff-check (compare both engines on one input).

Exit codes: 0 success, 1 user/input error, 2 internal invariant violation.

The native engine honors the test hook RETARGET_TEST_PERTURB_IHR (a float
added to every bpm value) so the differential harness can prove it would
catch a disagreement. RETARGET_REGISTRY points at a default registry file.
A `shim-test` command appears when the C++ shim directory is present
(RETARGET_SHIM_DIR or ./shim).
"""

from __future__ import annotations

import argparse
import hashlib
import os
import subprocess
import sys
from pathlib import Path

from . import corpus, dsp, emitter, frontend
from . import mathcore as mc
from .analysis import resolve
from .errors import InternalError, RetargetError
from .interpreter import eval_function
from .mapping import default_registry, load_registry

PERTURB_ENV = "RETARGET_TEST_PERTURB_IHR"
REGISTRY_ENV = "RETARGET_REGISTRY"
SHIM_ENV = "RETARGET_SHIM_DIR"


class MalformedCsv(RetargetError):
    def __init__(self, line_no: int, content: str):
        super().__init__(f"CSV line {line_no}: cannot parse {content!r}")
        self.line_no = line_no
        self.content = content


class MissingFs(RetargetError):
    def __init__(self):
        super().__init__("sampling rate unknown: pass --fs or add a '# fs=<int>' header")


class _UsageError(RetargetError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1, not argparse's default 2
        raise _UsageError(f"{self.prog}: {message}")


def _read_text(path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise RetargetError(f"cannot read {path}: {exc.strerror or exc}") from None


def load_csv(path, fs_override: int | None = None) -> dsp.EcgSignal:
    """One sample per line; optional '# fs=<int>' header; flag overrides."""
    samples = []
    fs = fs_override
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise RetargetError(f"cannot read {path}: {exc.strerror or exc}") from None
    with fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("fs="):
                    try:
                        header_fs = int(body[3:])
                    except ValueError:
                        raise MalformedCsv(line_no, raw.rstrip("\n")) from None
                    if fs_override is None:
                        fs = header_fs
                continue
            try:
                samples.append(float(line))
            except ValueError:
                raise MalformedCsv(line_no, raw.rstrip("\n")) from None
    if fs is None:
        raise MissingFs()
    return dsp.EcgSignal(tuple(samples), fs)


def _registry_for(path_arg):
    if path_arg:
        return load_registry(path_arg)
    env = os.environ.get(REGISTRY_ENV)
    if env:
        return load_registry(env)
    return default_registry()


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def _perturbation() -> float:
    raw = os.environ.get(PERTURB_ENV)
    return float(raw) if raw else 0.0


def _native_series(signal: dsp.EcgSignal):
    series = dsp.ekg_peak_det(signal)
    delta = _perturbation()
    ihr = [v + delta for v in series.iHR] if delta else list(series.iHR)
    return ihr, list(series.tHR), list(series.peaks)


def _rebased_thr(peaks_1based: list, fs: int) -> list:
    """Timestamps recomputed from 1-based peaks shifted to base 0; the shift
    happens on the exact integer indices so the result is bit-identical to
    the native formula."""
    if len(peaks_1based) < 2:
        return []
    out = []
    for p, q in zip(peaks_1based, peaks_1based[1:]):
        out.append((float(p - 1) + float(q - p) / 2.0) / float(fs))
    return out


def _interp_series(signal: dsp.EcgSignal):
    tp = corpus.ekg_typed_program()
    outcome = eval_function(
        tp, corpus.ENTRY_NAME,
        [mc.rvec(signal.samples), mc.iscalar(signal.fs)])
    ihr_v, thr_v, peak_v = outcome.outputs
    peaks1 = [int(p) for p in peak_v.data]
    thr_norm = _rebased_thr(peaks1, signal.fs)
    return [float(v) for v in ihr_v.data], thr_norm, peaks1


def _hr_rows(signal: dsp.EcgSignal, engine: str) -> list:
    if engine == "native":
        ihr, thr, _ = _native_series(signal)
    else:
        ihr, thr, _ = _interp_series(signal)
    return list(zip(thr, ihr))


def _render_hr(rows) -> str:
    lines = ["t_sec,bpm"]
    lines.extend(f"{_fmt(t)},{_fmt(bpm)}" for t, bpm in rows)
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Commands


def cmd_transpile(args) -> int:
    registry = _registry_for(args.registry)
    program = frontend.parse_source(_read_text(args.source))
    tp = resolve(program, registry)
    unit = emitter.emit(tp)
    out_dir = Path(args.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    out_path = out_dir / f"{unit.entry_symbol.lower()}.cpp"
    out_path.write_text(unit.source_text, encoding="utf-8")
    digest = hashlib.sha256(unit.source_text.encode("utf-8")).hexdigest()
    (out_dir / "manifest.txt").write_text(f"{unit.entry_symbol} {digest}\n",
                                          encoding="utf-8")
    print(out_path)
    return 0


def cmd_port(args) -> int:
    src_dir = Path(args.unit_dir)
    manifest = src_dir / "manifest.txt"
    if not manifest.exists():
        raise RetargetError(f"{src_dir} has no manifest.txt (run transpile first)")
    entry = manifest.read_text(encoding="utf-8").split()[0]
    cpp = src_dir / f"{entry.lower()}.cpp"
    if not cpp.exists():
        raise RetargetError(f"missing emitted unit {cpp}")
    unit = emitter.EmittedUnit(cpp.read_text(encoding="utf-8"), entry)
    targets = [t for t in args.targets.split(",") if t]
    staged = emitter.port(unit, targets, src_dir / "targets")
    for target, path in staged:
        print(f"{target}: {path}")
    return 0


def _parse_run_arg(token: str):
    path = Path(token)
    try:
        value = float(token)
    except ValueError:
        value = None
    if value is not None:
        if value == int(value) and "." not in token and value >= 0:
            return mc.iscalar(int(value))
        return mc.rscalar(value)
    if path.exists():
        samples = []
        with open(path, "r", encoding="utf-8") as fh:
            for line_no, raw in enumerate(fh, start=1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                try:
                    samples.append(float(line))
                except ValueError:
                    raise MalformedCsv(line_no, raw.rstrip("\n")) from None
        return mc.rvec(samples)
    raise RetargetError(f"argument {token!r} is neither a number nor a file")


def cmd_run(args) -> int:
    registry = _registry_for(args.registry)
    program = frontend.parse_source(_read_text(args.source))
    tp = resolve(program, registry)
    entry = args.entry or tp.entry_name()
    values = [_parse_run_arg(tok) for tok in args.args]
    outcome = eval_function(tp, entry, values)
    fn = next(g for g in tp.program.functions if g.name == entry)
    for name, value in zip(fn.outputs, outcome.outputs):
        if value.is_scalar():
            print(f"{name} = {value.scalar:.17g}")
        else:
            body = ",".join(f"{float(x):.17g}" for x in value.data)
            print(f"{name} = [{body}]")
    return 0


def cmd_hr(args) -> int:
    signal = load_csv(args.signal, args.fs)
    sys.stdout.write(_render_hr(_hr_rows(signal, args.engine)))
    return 0


def _parse_schedule(text: str):
    spans = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        rng, _, bpm = part.partition(":")
        a, _, b = rng.partition("-")
        try:
            spans.append((float(a), float(b), float(bpm)))
        except ValueError:
            raise RetargetError(f"bad schedule span {part!r}; want start-end:bpm") from None
    return spans


def cmd_synth(args) -> int:
    spans = _parse_schedule(args.schedule)
    signal, _planted = dsp.synth_ecg(spans, args.fs, args.noise, args.seed)
    out = Path(args.output)
    with open(out, "w", encoding="utf-8") as fh:
        fh.write(f"# fs={signal.fs}\n")
        for x in signal.samples:
            fh.write(f"{x:.17g}\n")
    print(out)
    return 0


def cmd_diff_check(args) -> int:
    registry = _registry_for(args.registry)
    program = frontend.parse_source(_read_text(args.source))
    tp = resolve(program, registry)
    signal = load_csv(args.signal, args.fs)

    outcome = eval_function(
        tp, tp.entry_name(), [mc.rvec(signal.samples), mc.iscalar(signal.fs)])
    ihr_i = [float(v) for v in outcome.outputs[0].data]
    peaks1 = [int(p) for p in outcome.outputs[2].data]
    thr_i = _rebased_thr(peaks1, signal.fs)

    ihr_n, thr_n, peaks0 = _native_series(signal)

    print(f"peaks: interp={len(peaks1)} native={len(peaks0)}")
    ok = True
    if [p - 1 for p in peaks1] != peaks0:
        print("peak indices disagree after rebasing")
        ok = False
    for label, a, b in (("iHR", ihr_i, ihr_n), ("tHR", thr_i, thr_n)):
        if len(a) != len(b):
            print(f"max|d_{label}| = n/a (lengths {len(a)} vs {len(b)})")
            ok = False
            continue
        worst = 0.0
        first_bad = None
        for k, (x, y) in enumerate(zip(a, b)):
            d = abs(x - y)
            if d > worst:
                worst = d
                first_bad = k
        print(f"max|d_{label}| = {worst:.17g}")
        if worst > 0.0:
            print(f"  first difference at index {first_bad}")
            ok = False

    bytes_i = _render_hr(list(zip(thr_i, ihr_i)))
    bytes_n = _render_hr(list(zip(thr_n, ihr_n)))
    same_bytes = bytes_i == bytes_n
    print(f"hr bytes: {'identical' if same_bytes else 'DIFFERENT'}")
    ok = ok and same_bytes
    print(f"agreement: {'OK' if ok else 'FAILED'}")
    return 0 if ok else 1


def _find_shim_dir() -> Path | None:
    env = os.environ.get(SHIM_ENV)
    candidates = [Path(env)] if env else []
    candidates.append(Path.cwd() / "shim")
    for cand in candidates:
        if cand.is_dir() and (cand / "shimtest.py").exists():
            return cand
    return None


def cmd_shim_test(args) -> int:
    shim_dir = _find_shim_dir()
    if shim_dir is None:
        raise RetargetError("no shim directory found (set RETARGET_SHIM_DIR)")
    cmd = [sys.executable, str(shim_dir / "shimtest.py")]
    if args.keep_build:
        cmd.append("--keep-build")
    return subprocess.call(cmd, cwd=str(shim_dir))


# ---------------------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="retarget",
                     description="convert-once toolkit for the M-subset language")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("transpile", help="convert a .m source into the target dialect")
    p.add_argument("source")
    p.add_argument("--registry")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_transpile)

    p = sub.add_parser("port", help="stage an emitted unit for target OS labels")
    p.add_argument("unit_dir")
    p.add_argument("--targets", required=True,
                   help=f"comma-separated from: {', '.join(emitter.TARGET_NAMES)}")
    p.set_defaults(func=cmd_port)

    p = sub.add_parser("run", help="interpret a .m source file")
    p.add_argument("source")
    p.add_argument("--entry")
    p.add_argument("--registry")
    p.add_argument("--args", nargs="*", default=[],
                   help="numbers or CSV files, one per parameter")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("hr", help="heart-rate CSV (t_sec,bpm) from a signal")
    p.add_argument("signal")
    p.add_argument("--fs", type=int)
    p.add_argument("--engine", choices=("interp", "native"), required=True)
    p.set_defaults(func=cmd_hr)

    p = sub.add_parser("synth", help="generate a synthetic ECG CSV")
    p.add_argument("--schedule", required=True, help='e.g. "0-120:70,120-210:120"')
    p.add_argument("--fs", type=int, required=True)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("diff-check", help="compare both engines on one input")
    p.add_argument("source")
    p.add_argument("signal")
    p.add_argument("--fs", type=int)
    p.add_argument("--registry")
    p.set_defaults(func=cmd_diff_check)

    if _find_shim_dir() is not None:
        p = sub.add_parser("shim-test",
                           help="build and check the C++ shim (secondary component)")
        p.add_argument("--keep-build", action="store_true")
        p.set_defaults(func=cmd_shim_test)

    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except RetargetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except InternalError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        raise
    except Exception as exc:  # a bug, not bad input
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
