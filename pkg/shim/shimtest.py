#!/usr/bin/env python3
"""Build-and-check wrapper for the C++ shim.

Builds the emitted heart-rate unit against the shim and its precompiled
detector, runs it on generated fixtures, and compares against the
toolkit's native engine (tolerance 1e-6 per value; bytes usually match
exactly). Also compiles an emitted identity function and proves the
negative case: a registry pointing at a bogus target symbol must fail to
compile with that symbol named in the error.

Usage: python3 shimtest.py [--keep-build]
Exit: 0 all checks pass, 1 otherwise.
"""

from __future__ import annotations

import argparse
import shutil
import subprocess
import sys
from pathlib import Path

SHIM_DIR = Path(__file__).resolve().parent
BUILD = SHIM_DIR / "build"
CXX = "g++"
CXXFLAGS = ["-std=c++17", "-O2", "-Wall"]

FIXTURES = [
    ("steady_60_360", "0-20:60", 360, "0"),
    ("noisy_90_200", "0-20:90", 200, "0.05"),
    ("two_phase_500", "0-30:70,30-60:120", 500, "0"),
]


def run(cmd, **kw):
    return subprocess.run([str(c) for c in cmd], capture_output=True,
                          text=True, **kw)


def retarget(*args):
    return run([sys.executable, "-m", "retarget.cli", *args])


def fail(msg: str) -> None:
    print(f"[FAIL] {msg}")
    raise SystemExit(1)


def write_corpus_sources() -> Path:
    from retarget import corpus

    src = BUILD / "ekg_peak_det.m"
    src.write_text(corpus.ekg_source(), encoding="utf-8")
    return src


def registry_text() -> str:
    from retarget.corpus import read_text

    return read_text("builtins.map")


def compile_hr_driver() -> Path:
    src = write_corpus_sources()
    emitted_dir = BUILD / "emitted"
    proc = retarget("transpile", str(src), "-o", str(emitted_dir))
    if proc.returncode != 0:
        fail(f"transpile failed:\n{proc.stderr}")
    unit = emitted_dir / "ekgpeakdet.cpp"
    exe = BUILD / "hr_driver"
    proc = run([CXX, *CXXFLAGS, f"-DEMITTED_UNIT=\"{unit}\"", "-I", SHIM_DIR,
                SHIM_DIR / "driver.cpp", SHIM_DIR / "pan_tompkin.cpp",
                "-o", exe])
    if proc.returncode != 0:
        fail(f"shim build failed:\n{proc.stderr}")
    print("[PASS] emitted unit compiles against the shim")
    return exe


def parse_rows(text: str):
    rows = []
    for line in text.strip().splitlines()[1:]:
        t, bpm = line.split(",")
        rows.append((float(t), float(bpm)))
    return rows


def check_heart_rate_fixtures(exe: Path) -> None:
    for name, schedule, fs, noise in FIXTURES:
        csv = BUILD / f"{name}.csv"
        proc = retarget("synth", "--schedule", schedule, "--fs", str(fs),
                        "--noise", noise, "-o", str(csv))
        if proc.returncode != 0:
            fail(f"synth {name} failed:\n{proc.stderr}")
        native = retarget("hr", str(csv), "--engine", "native")
        if native.returncode != 0:
            fail(f"native hr {name} failed:\n{native.stderr}")
        compiled = run([exe, csv])
        if compiled.returncode != 0:
            fail(f"compiled unit on {name} failed:\n{compiled.stderr}")
        ref = parse_rows(native.stdout)
        got = parse_rows(compiled.stdout)
        if len(ref) != len(got):
            fail(f"{name}: row count differs ({len(ref)} native vs {len(got)} compiled)")
        worst = max((max(abs(a - c), abs(b - d))
                     for (a, b), (c, d) in zip(ref, got)), default=0.0)
        if worst > 1e-6:
            fail(f"{name}: max deviation {worst:.3g} exceeds 1e-6")
        bytes_note = "bytes identical" if native.stdout == compiled.stdout \
            else f"max|d|={worst:.3g}"
        print(f"[PASS] tri-engine agreement on {name}: "
              f"{len(got)} rows within 1e-6 ({bytes_note})")


def check_identity_unit() -> None:
    src = BUILD / "identity.m"
    src.write_text("function y = f(x)\ny = x;\n", encoding="utf-8")
    reg = BUILD / "identity.map"
    reg.write_text(registry_text() +
                   "\nentry f params=x:RealScalar outs=y:RealScalar\n",
                   encoding="utf-8")
    out_dir = BUILD / "identity"
    proc = retarget("transpile", str(src), "--registry", str(reg),
                    "-o", str(out_dir))
    if proc.returncode != 0:
        fail(f"identity transpile failed:\n{proc.stderr}")
    main_cpp = BUILD / "identity_main.cpp"
    main_cpp.write_text(
        '#include "m2cpp.hpp"\n'
        "#include <cstdio>\n"
        "struct Algorithm { static void f(double x, double &y); };\n"
        f'#include "{out_dir / "f.cpp"}"\n'
        "int main() { double y = 0.0; Algorithm::f(3.5, y); "
        'std::printf("%.6g\\n", y); return 0; }\n',
        encoding="utf-8")
    exe = BUILD / "identity_main"
    proc = run([CXX, *CXXFLAGS, "-I", SHIM_DIR, main_cpp, "-o", exe])
    if proc.returncode != 0:
        fail(f"identity build failed:\n{proc.stderr}")
    proc = run([exe])
    if proc.stdout.strip() != "3.5":
        fail(f"identity unit printed {proc.stdout!r}, wanted 3.5")
    print("[PASS] emitted identity unit prints 3.5")


def check_negative_linkage() -> None:
    src = BUILD / "ekg_peak_det.m"
    reg = BUILD / "bogus.map"
    reg.write_text(registry_text().replace(
        "map length -> m2cpp::length",
        "map length -> m2cpp::bogus_length"), encoding="utf-8")
    out_dir = BUILD / "bogus"
    proc = retarget("transpile", str(src), "--registry", str(reg),
                    "-o", str(out_dir))
    if proc.returncode != 0:
        fail(f"bogus transpile failed:\n{proc.stderr}")
    unit = out_dir / "ekgpeakdet.cpp"
    proc = run([CXX, *CXXFLAGS, f"-DEMITTED_UNIT=\"{unit}\"", "-I", SHIM_DIR,
                SHIM_DIR / "driver.cpp", SHIM_DIR / "pan_tompkin.cpp",
                "-o", BUILD / "bogus_driver"])
    if proc.returncode == 0:
        fail("unit mapped to a bogus symbol compiled; it must not")
    if "bogus_length" not in proc.stderr:
        fail("compile error does not name the missing symbol")
    print("[PASS] bogus target symbol fails to compile and is named "
          "in the error")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--keep-build", action="store_true")
    args = parser.parse_args(argv)
    if shutil.which(CXX) is None:
        print(f"[FAIL] no {CXX} on PATH; the shim needs a host toolchain")
        return 1
    if BUILD.exists():
        shutil.rmtree(BUILD)
    BUILD.mkdir(parents=True)
    try:
        exe = compile_hr_driver()
        check_heart_rate_fixtures(exe)
        check_identity_unit()
        check_negative_linkage()
    except SystemExit as exc:
        return int(exc.code or 1)
    finally:
        if not args.keep_build and BUILD.exists():
            shutil.rmtree(BUILD, ignore_errors=True)
    print("shim checks: all passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
