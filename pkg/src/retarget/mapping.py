"""Builtin-call mapping table and 1-based-to-0-based subscript lowering.

The mapping is data, not code: a line-oriented signature file loaded at
startup. Two directive forms are understood:

    map <src_name> -> <target_name> args=<keep|drop|*>,... \
        [outs=<name:Type>,...] ret=<Type|void|same>
    entry <name> params=<name:Type>,... outs=<name:Type>,... \
        [order=<name>,...]

`map` rows drive call rewriting: dropped arguments never reach the emitted
call, `outs=` names become trailing out-parameters, and `ret=same` returns
the first argument's type. `entry` rows pin the externally-known signature
of a function whose source we process, including (via `order=`) the emitted
parameter order.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from . import frontend
from .errors import RetargetError
from .semtypes import SemType, is_vector, semtype_from_name

RET_SAME = "same"


class RegistryError(RetargetError):
    def __init__(self, line_no: int, msg: str):
        super().__init__(f"registry line {line_no}: {msg}")
        self.line_no = line_no


class NonPositiveIndex(RetargetError):
    def __init__(self, value):
        super().__init__(f"subscript must be positive, got {value}")
        self.value = value


class UnsupportedSubscript(RetargetError):
    pass


@dataclass(frozen=True)
class BuiltinEntry:
    source_name: str
    target_name: str
    arg_keep: tuple | None  # per-argument True(keep)/False(drop); None = any arity
    outputs: tuple  # ordered (name, SemType) out-parameters; empty = value return
    ret: object  # SemType, RET_SAME, or None (void)

    @property
    def value_return(self) -> bool:
        return not self.outputs

    def kept_positions(self, arity: int) -> list[int]:
        if self.arg_keep is None:
            return list(range(arity))
        return [i for i, keep in enumerate(self.arg_keep) if keep]

    def ret_type(self, arg_types=()) -> SemType | None:
        if self.ret == RET_SAME:
            return arg_types[0] if arg_types else SemType.UNKNOWN
        return self.ret


@dataclass(frozen=True)
class EntrySignature:
    name: str
    params: tuple  # ordered (name, SemType)
    outs: tuple  # ordered (name, SemType)
    emit_order: tuple | None  # emitted parameter order over params+outs names


class Registry:
    """Immutable after load; lookups are reentrant."""

    def __init__(self, builtins: dict, entries: dict):
        self._builtins = dict(builtins)
        self._entries = dict(entries)

    def lookup(self, name: str, arg_types=()) -> BuiltinEntry | None:
        """Entry for the name, or None; arity is the caller's check because
        only the call site can report a useful position."""
        return self._builtins.get(name)

    def entry_signature(self, name: str) -> EntrySignature | None:
        return self._entries.get(name)

    def builtin_names(self):
        return frozenset(self._builtins)


def _parse_typed_list(text: str, line_no: int) -> tuple:
    pairs = []
    for item in text.split(","):
        if not item:
            continue
        if ":" not in item:
            raise RegistryError(line_no, f"expected name:Type, got {item!r}")
        name, _, tname = item.partition(":")
        try:
            pairs.append((name, semtype_from_name(tname)))
        except ValueError as exc:
            raise RegistryError(line_no, str(exc)) from None
    return tuple(pairs)


def _parse_map(fields: list[str], line_no: int) -> BuiltinEntry:
    if len(fields) < 3 or fields[1] != "->":
        raise RegistryError(line_no, "expected: map <src> -> <target> ...")
    src, target = fields[0], fields[2]
    arg_keep: tuple | None = None
    outputs: tuple = ()
    ret: object = None
    saw_ret = False
    for field in fields[3:]:
        key, _, value = field.partition("=")
        if key == "args":
            if value == "*":
                arg_keep = None
            else:
                flags = []
                for flag in value.split(","):
                    if flag == "keep":
                        flags.append(True)
                    elif flag == "drop":
                        flags.append(False)
                    else:
                        raise RegistryError(line_no, f"bad arg policy {flag!r}")
                arg_keep = tuple(flags)
        elif key == "outs":
            outputs = _parse_typed_list(value, line_no)
        elif key == "ret":
            saw_ret = True
            if value == "void":
                ret = None
            elif value == RET_SAME:
                ret = RET_SAME
            else:
                try:
                    ret = semtype_from_name(value)
                except ValueError as exc:
                    raise RegistryError(line_no, str(exc)) from None
        else:
            raise RegistryError(line_no, f"unknown field {key!r}")
    if not saw_ret:
        raise RegistryError(line_no, "missing ret=")
    if outputs == () and ret is None:
        raise RegistryError(line_no, f"{src!r}: a void mapping needs outs=")
    return BuiltinEntry(src, target, arg_keep, outputs, ret)


def _parse_entry(fields: list[str], line_no: int) -> EntrySignature:
    if not fields:
        raise RegistryError(line_no, "expected: entry <name> ...")
    name = fields[0]
    params: tuple = ()
    outs: tuple = ()
    emit_order: tuple | None = None
    for field in fields[1:]:
        key, _, value = field.partition("=")
        if key == "params":
            params = _parse_typed_list(value, line_no)
        elif key == "outs":
            outs = _parse_typed_list(value, line_no)
        elif key == "order":
            emit_order = tuple(v for v in value.split(",") if v)
        else:
            raise RegistryError(line_no, f"unknown field {key!r}")
    if emit_order is not None:
        declared = {n for n, _ in params} | {n for n, _ in outs}
        missing = [n for n in emit_order if n not in declared]
        if missing or len(emit_order) != len(declared):
            raise RegistryError(line_no, f"order= must permute params+outs, got {emit_order}")
    return EntrySignature(name, params, outs, emit_order)


def parse_registry(text: str) -> Registry:
    builtins: dict = {}
    entries: dict = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        directive, rest = fields[0], fields[1:]
        if directive == "map":
            entry = _parse_map(rest, line_no)
            builtins[entry.source_name] = entry
        elif directive == "entry":
            sig = _parse_entry(rest, line_no)
            entries[sig.name] = sig
        else:
            raise RegistryError(line_no, f"unknown directive {directive!r}")
    return Registry(builtins, entries)


def load_registry(path) -> Registry:
    return parse_registry(Path(path).read_text(encoding="utf-8"))


@functools.lru_cache(maxsize=1)
def default_registry() -> Registry:
    """The shipped mapping table (covers the bundled corpus)."""
    text = resources.files(__package__).joinpath("corpus/builtins.map").read_text("utf-8")
    return parse_registry(text)


# ---------------------------------------------------------------------------
# Subscript lowering


@dataclass(frozen=True)
class LoweredTerm:
    """One endpoint of a lowered subscript: a constant, `length(base)+offset`,
    or a source expression plus a constant offset."""

    const: int = 0
    length_of: str | None = None
    expr: object = None

    def shifted(self, delta: int) -> "LoweredTerm":
        return LoweredTerm(self.const + delta, self.length_of, self.expr)


@dataclass(frozen=True)
class ScalarIndex:
    term: LoweredTerm


@dataclass(frozen=True)
class Span:
    lo: LoweredTerm
    hi: LoweredTerm


def _lower_endpoint(base: str, expr, allow_nonpositive: bool = False) -> LoweredTerm:
    if isinstance(expr, frontend.Num):
        if expr.value <= 0 and not allow_nonpositive:
            raise NonPositiveIndex(expr.value)
        if expr.value != int(expr.value):
            raise UnsupportedSubscript(f"non-integer literal subscript {expr.value}")
        return LoweredTerm(const=int(expr.value))
    if isinstance(expr, frontend.EndMarker):
        return LoweredTerm(const=0, length_of=base)
    if isinstance(expr, frontend.Binary) and expr.op == "-" and isinstance(expr.lhs, frontend.EndMarker):
        if isinstance(expr.rhs, frontend.Num) and expr.rhs.value == int(expr.rhs.value):
            return LoweredTerm(const=-int(expr.rhs.value), length_of=base)
        raise UnsupportedSubscript("only `end - <integer literal>` arithmetic is supported")
    if isinstance(expr, frontend.RangeExpr):
        raise UnsupportedSubscript("nested range in subscript")
    if _contains_end(expr):
        raise UnsupportedSubscript("only `end` and `end - k` are supported in subscripts")
    return LoweredTerm(const=0, expr=expr)


def _contains_end(expr) -> bool:
    if isinstance(expr, frontend.EndMarker):
        return True
    if isinstance(expr, frontend.Binary):
        return _contains_end(expr.lhs) or _contains_end(expr.rhs)
    if isinstance(expr, frontend.Unary):
        return _contains_end(expr.operand)
    if isinstance(expr, (frontend.Call, frontend.Index)):
        return False
    return False


def lower_index(base: str, base_type: SemType, subscript) -> ScalarIndex | Span:
    """Lower a 1-based subscript to its 0-based target form.

    Scalar subscripts shift by -1 (folded into the constant when literal);
    `a:b` becomes an inclusive 0-based span; `end` becomes length-1. Empty
    selections (hi < lo at run time) are the target dialect's concern: the
    span form is symbolic.
    """
    if not (is_vector(base_type) or base_type is SemType.REAL_MATRIX):
        raise UnsupportedSubscript(f"cannot subscript a {base_type} value")
    if isinstance(subscript, frontend.RangeExpr):
        lo = _lower_endpoint(base, subscript.start).shifted(-1)
        # a stop below the start (e.g. `1:0`) is the legal empty range
        hi = _lower_endpoint(base, subscript.stop, allow_nonpositive=True).shifted(-1)
        return Span(lo, hi)
    return ScalarIndex(_lower_endpoint(base, subscript).shifted(-1))
