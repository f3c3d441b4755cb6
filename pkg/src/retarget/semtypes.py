"""Semantic types shared by the analysis, mapping, and emitter layers."""

from __future__ import annotations

from enum import Enum


class SemType(Enum):
    UNKNOWN = "Unknown"
    INDEX_SCALAR = "IndexScalar"
    INT_SCALAR = "IntScalar"
    REAL_SCALAR = "RealScalar"
    REAL_VECTOR = "RealVector"
    INDEX_VECTOR = "IndexVector"
    REAL_MATRIX = "RealMatrix"

    def __str__(self) -> str:
        return self.value


_BY_NAME = {t.value: t for t in SemType}


def semtype_from_name(name: str) -> SemType:
    try:
        return _BY_NAME[name]
    except KeyError:
        raise ValueError(f"unknown semantic type name: {name!r}") from None


SCALARS = frozenset({SemType.INDEX_SCALAR, SemType.INT_SCALAR, SemType.REAL_SCALAR})
VECTORS = frozenset({SemType.REAL_VECTOR, SemType.INDEX_VECTOR})


def is_scalar(t: SemType) -> bool:
    return t in SCALARS


def is_vector(t: SemType) -> bool:
    return t in VECTORS


def rank(t: SemType) -> int:
    if t in SCALARS:
        return 0
    if t in VECTORS:
        return 1
    if t is SemType.REAL_MATRIX:
        return 2
    return -1
