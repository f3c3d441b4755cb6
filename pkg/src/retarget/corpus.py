"""Access to the bundled corpus: the ECG peak-detection source, its golden
C++ translation, the detector reference body, and the default registry."""

from __future__ import annotations

import functools
from importlib import resources

from . import frontend
from .analysis import TypedProgram, resolve
from .mapping import default_registry

EKG_SOURCE = "ekg_peak_det.m"
EKG_GOLDEN = "ekg_peak_det_golden.cpp"
DETECTOR_SOURCE = "pan_tompkin.m"
ENTRY_NAME = "EKGpeakDet"

SOURCE_NAMES = (EKG_SOURCE, DETECTOR_SOURCE)


def read_text(name: str) -> str:
    return resources.files(__package__).joinpath(f"corpus/{name}").read_text("utf-8")


def ekg_source() -> str:
    return read_text(EKG_SOURCE)


def ekg_golden() -> str:
    return read_text(EKG_GOLDEN)


def detector_source() -> str:
    return read_text(DETECTOR_SOURCE)


@functools.lru_cache(maxsize=1)
def ekg_typed_program() -> TypedProgram:
    return resolve(frontend.parse_source(ekg_source()), default_registry())
