"""Renderer from typed programs to the portable C++ dialect, plus the
copy-only `port` step that stages one emitted unit for many targets.

Rendering rules that pin down the dialect:

* Outputs become trailing reference out-parameters; the emitted parameter
  order comes from the registry's `order=` when present.
* Locals first assigned inside a control block are hoisted to the top of
  the declaration block; the rest follow first-assignment order, and the
  out-slot names materialized at a call are declared as a group in name
  order (a callee output bound to some other variable still gets its slot
  declared). `int` locals are zero-initialized.
* Numeric literals written directly inside arithmetic gain a `.0`; literals
  assigned whole, compared, passed as arguments, or used as subscripts stay
  bare.
* Scalar-over-vector division (`s./v` or `s/v`) is rendered as `s*1.0/v`,
  the dialect's elementwise idiom.
"""

from __future__ import annotations

import hashlib
import re
import threading
from dataclasses import dataclass
from pathlib import Path

from . import frontend as f
from . import mapping
from .analysis import TypedProgram, infer_expr
from .errors import InternalError, RetargetError
from .semtypes import SemType, is_scalar

TARGET_NAMES = ("Android", "iOS", "Windows", "RTOS", "Linux", "macOS")


class EmitError(InternalError):
    pass


class DuplicateTarget(RetargetError):
    def __init__(self, name: str):
        super().__init__(f"target {name!r} staged twice")
        self.name = name


class UnknownTarget(RetargetError):
    def __init__(self, name: str):
        super().__init__(f"unknown target {name!r}; expected one of {', '.join(TARGET_NAMES)}")
        self.name = name


@dataclass(frozen=True)
class EmitConfig:
    class_name: str = "Algorithm"
    indent: str = "    "
    newline: str = "\n"


@dataclass
class EmittedUnit:
    source_text: str
    entry_symbol: str
    conversion_count: int = 1


_emit_lock = threading.Lock()
_emit_count = 0


def emit_invocations() -> int:
    """Total emit() calls in this process (the convert-once instrumentation)."""
    return _emit_count


_CTYPE = {
    SemType.REAL_SCALAR: "double",
    SemType.INT_SCALAR: "int",
    SemType.INDEX_SCALAR: "uword",
    SemType.REAL_VECTOR: "vec",
    SemType.INDEX_VECTOR: "vec",
    SemType.REAL_MATRIX: "mat",
}

_BY_VALUE = frozenset({SemType.REAL_SCALAR, SemType.INT_SCALAR, SemType.INDEX_SCALAR})

_PREC = {
    ">": 1, "<": 1, ">=": 1, "<=": 1, "==": 1,
    "+": 2, "-": 2,
    "*": 3, "/": 3, "./": 3, ".*": 3,
}
_UNARY_PREC = 4
_CPP_OP = {"./": "/", ".*": "*"}


@dataclass
class _CallPlan:
    target_name: str
    kept_args: list
    out_args: list  # emitted out-parameter names, one per callee output
    group: list  # (name, SemType) locals this call brings into the decl block


class _FunctionEmitter:
    def __init__(self, tp: TypedProgram, fn: f.FunctionDef, cfg: EmitConfig):
        self.tp = tp
        self.fn = fn
        self.cfg = cfg
        self.env = tp.symbols[fn.name]
        self.registry = tp.registry
        self.lines: list[str] = []
        self.in_subscript = False
        self.call_plans: dict = {}
        self._taken = set(self.env) | set(fn.params) | set(fn.outputs)

    def render(self) -> str:
        for name, t in self.env.items():
            if t is SemType.UNKNOWN:
                raise EmitError(f"{self.fn.name}: {name!r} has no resolved type")
        self._plan_calls(self.fn.body)
        self.lines.append(self._signature())
        self.lines.append("{")
        for name, ctype in self._declarations():
            if ctype == "int":
                self.lines.append(f"{self.cfg.indent}int {name} = 0;")
            else:
                self.lines.append(f"{self.cfg.indent}{ctype} {name};")
        for s in self.fn.body:
            self._stmt(s, 1)
        self.lines.append("}")
        return self.cfg.newline.join(self.lines) + self.cfg.newline

    # -- out-parameter call planning

    def _callee_outs(self, call: f.Call):
        entry = self.registry.lookup(call.name)
        if entry is not None and entry.outputs:
            return entry, entry.outputs
        sig = self.registry.entry_signature(call.name)
        if sig is not None and sig.outs:
            return None, sig.outs
        return None, ()

    def _is_outparam_call(self, s) -> bool:
        if not isinstance(s, f.Assign) or not isinstance(s.expr, f.Call):
            return False
        entry = self.registry.lookup(s.expr.name)
        if entry is not None:
            return bool(entry.outputs)
        if len(s.targets) > 1:
            sig = self.registry.entry_signature(s.expr.name)
            return bool(sig and sig.outs)
        return False

    def _fresh(self, base: str) -> str:
        name = base
        suffix = 0
        while name in self._taken:
            suffix += 1
            name = f"{base}_{suffix}"
        self._taken.add(name)
        return name

    def _plan_calls(self, stmts):
        for s in stmts:
            if isinstance(s, f.Assign) and self._is_outparam_call(s):
                self._plan_one(s)
            elif isinstance(s, f.If):
                self._plan_calls(s.then)
                self._plan_calls(s.orelse)
            elif isinstance(s, (f.For, f.While)):
                self._plan_calls(s.body)

    def _plan_one(self, s: f.Assign):
        call = s.expr
        entry, outs = self._callee_outs(call)
        if not outs:
            raise EmitError(f"{call.name!r} has no declared outputs")
        if entry is not None:
            target_name = entry.target_name
            kept = entry.kept_positions(len(call.args))
        else:
            target_name = call.name
            kept = list(range(len(call.args)))
        materialized = {
            self.tp.temporaries.get((self.fn.name, s.line, s.col, pos))
            for pos in range(len(s.targets))
        } - {None}
        out_args: list = []
        group: list = []
        for pos, (out_name, out_type) in enumerate(outs):
            if pos < len(s.targets):
                bound = s.targets[pos]
                out_args.append(bound)
                if bound in materialized:
                    group.append((bound, self.env.get(bound, out_type)))
                elif bound != out_name:
                    # slot name exists in the dialect even when bound elsewhere
                    group.append((self._fresh(out_name), out_type))
            else:
                shadow = self._fresh(out_name)
                out_args.append(shadow)
                group.append((shadow, out_type))
        plan = _CallPlan(target_name, kept, out_args, sorted(group, key=lambda g: g[0]))
        self.call_plans[(s.line, s.col)] = plan

    # -- signature and declarations

    def _name_type(self, name: str) -> SemType:
        t = self.env.get(name)
        if t is None:
            raise EmitError(f"{self.fn.name}: no type for {name!r}")
        return t

    def _ctype(self, t: SemType) -> str:
        try:
            return _CTYPE[t]
        except KeyError:
            raise EmitError(f"no rendering for type {t}") from None

    def _signature(self) -> str:
        sig = self.registry.entry_signature(self.fn.name)
        if sig is not None and sig.emit_order:
            order = list(sig.emit_order)
        else:
            order = list(self.fn.params) + list(self.fn.outputs)
        outputs = set(self.fn.outputs)
        parts = []
        for name in order:
            t = self._name_type(name)
            ctype = self._ctype(t)
            if name in outputs or t not in _BY_VALUE:
                parts.append(f"{ctype} &{name}")
            else:
                parts.append(f"{ctype} {name}")
        return f"void {self.cfg.class_name}::{self.fn.name}({', '.join(parts)})"

    def _declarations(self) -> list:
        """Hoisted control-flow locals first, then straight-line locals in
        first-assignment order with each call's slot group in name order."""
        skip = set(self.fn.params) | set(self.fn.outputs)
        seen: set = set()
        hoisted: list = []

        def prepass(stmts, nested: bool):
            for s in stmts:
                if isinstance(s, f.Assign):
                    names = list(s.targets)
                    if self._is_outparam_call(s):
                        plan = self.call_plans[(s.line, s.col)]
                        names.extend(n for n, _ in plan.group)
                    for t in names:
                        if t in skip or t in seen:
                            continue
                        seen.add(t)
                        if nested:
                            hoisted.append(t)
                elif isinstance(s, f.If):
                    prepass(s.then, True)
                    prepass(s.orelse, True)
                elif isinstance(s, f.For):
                    if s.var not in skip and s.var not in seen:
                        seen.add(s.var)
                        if nested:
                            hoisted.append(s.var)
                    prepass(s.body, True)
                elif isinstance(s, f.While):
                    prepass(s.body, True)

        prepass(self.fn.body, False)

        ordered: list = list(hoisted)
        seen = set(hoisted)

        def mainpass(stmts):
            for s in stmts:
                if isinstance(s, f.Assign):
                    if self._is_outparam_call(s):
                        plan = self.call_plans[(s.line, s.col)]
                        group_names = {n for n, _ in plan.group}
                        for t in s.targets:
                            if t not in skip and t not in seen and t not in group_names:
                                seen.add(t)
                                ordered.append(t)
                        for n, _ in plan.group:
                            if n not in skip and n not in seen:
                                seen.add(n)
                                ordered.append(n)
                    else:
                        for t in s.targets:
                            if t not in skip and t not in seen:
                                seen.add(t)
                                ordered.append(t)
                elif isinstance(s, f.If):
                    mainpass(s.then)
                    mainpass(s.orelse)
                elif isinstance(s, f.For):
                    if s.var not in skip and s.var not in seen:
                        seen.add(s.var)
                        ordered.append(s.var)
                    mainpass(s.body)
                elif isinstance(s, f.While):
                    mainpass(s.body)

        mainpass(self.fn.body)

        group_types = {}
        for plan in self.call_plans.values():
            group_types.update({n: t for n, t in plan.group})
        decls = []
        for name in ordered:
            t = group_types.get(name) or self.env.get(name)
            if t is None:
                raise EmitError(f"{self.fn.name}: no type for {name!r}")
            decls.append((name, self._ctype(t)))
        return decls

    # -- statements

    def _stmt(self, s, depth: int):
        pad = self.cfg.indent * depth
        if isinstance(s, f.Assign):
            if self._is_outparam_call(s):
                plan = self.call_plans[(s.line, s.col)]
                args = [self._expr(s.expr.args[i]) for i in plan.kept_args]
                call = f"{plan.target_name}({', '.join(args + plan.out_args)})"
                self.lines.append(f"{pad}{call};")
            else:
                self.lines.append(f"{pad}{s.targets[0]} = {self._expr(s.expr)};")
        elif isinstance(s, f.ExprStmt):
            self.lines.append(f"{pad}{self._expr(s.expr)};")
        elif isinstance(s, f.If):
            self.lines.append(f"{pad}if ({self._expr(s.cond)})")
            self._block(s.then, depth)
            if s.orelse:
                self.lines.append(f"{pad}else")
                self._block(s.orelse, depth)
        elif isinstance(s, f.For):
            head = (f"for ({s.var} = {self._expr(s.start)}; "
                    f"{s.var} <= {self._expr(s.stop)}; {s.var}++)")
            self.lines.append(pad + head)
            self._block(s.body, depth)
        elif isinstance(s, f.While):
            self.lines.append(f"{pad}while ({self._expr(s.cond)})")
            self._block(s.body, depth)
        else:
            raise EmitError(f"unsupported statement: {type(s).__name__}")

    def _block(self, stmts, depth: int):
        pad = self.cfg.indent * depth
        self.lines.append(f"{pad}{{")
        for s in stmts:
            self._stmt(s, depth + 1)
        self.lines.append(f"{pad}}}")

    # -- expressions

    def _type_of(self, e) -> SemType:
        return infer_expr(e, self.env, self.registry)

    def _expr(self, e, min_prec: int = 0, arith: bool = False) -> str:
        if isinstance(e, f.Num):
            return self._literal(e, arith)
        if isinstance(e, f.Var):
            return e.name
        if isinstance(e, f.Unary):
            text = f"-{self._expr(e.operand, _UNARY_PREC, arith)}"
            return f"({text})" if _UNARY_PREC < min_prec else text
        if isinstance(e, f.Binary):
            return self._binary(e, min_prec)
        if isinstance(e, f.Call):
            return self._call_expr(e)
        if isinstance(e, f.Index):
            return self._index_expr(e)
        raise EmitError(f"unsupported expression: {type(e).__name__}")

    def _literal(self, e: f.Num, arith: bool) -> str:
        text = e.literal or repr(e.value)
        if text.endswith("."):
            text += "0"
        if arith and not self.in_subscript and "." not in text:
            text += ".0"
        return text

    def _binary(self, e: f.Binary, min_prec: int) -> str:
        prec = _PREC[e.op]
        if e.op in (">", "<", ">=", "<=", "=="):
            text = f"{self._expr(e.lhs, prec)}{e.op}{self._expr(e.rhs, prec + 1)}"
            return f"({text})" if prec < min_prec else text
        if e.op in ("./", "/") and not self.in_subscript:
            lt = self._type_of(e.lhs)
            rt = self._type_of(e.rhs)
            if is_scalar(lt) and not is_scalar(rt):
                text = (f"{self._expr(e.lhs, _PREC['*'], arith=True)}*1.0/"
                        f"{self._expr(e.rhs, _PREC['*'] + 1, arith=True)}")
                return f"({text})" if prec < min_prec else text
        op = _CPP_OP.get(e.op, e.op)
        text = (f"{self._expr(e.lhs, prec, arith=True)}{op}"
                f"{self._expr(e.rhs, prec + 1, arith=True)}")
        return f"({text})" if prec < min_prec else text

    def _call_expr(self, e: f.Call) -> str:
        entry = self.registry.lookup(e.name)
        if entry is None:
            args = ", ".join(self._expr(a) for a in e.args)
            return f"{e.name}({args})"
        if entry.outputs:
            raise EmitError(f"{e.name!r} returns through out-parameters and "
                            "cannot appear inside an expression")
        kept = entry.kept_positions(len(e.args))
        args = ", ".join(self._expr(e.args[i]) for i in kept)
        return f"{entry.target_name}({args})"

    def _index_expr(self, e: f.Index) -> str:
        base_t = self._name_type(e.base)
        lowered = mapping.lower_index(e.base, base_t, e.subscript)
        if isinstance(lowered, mapping.ScalarIndex):
            return f"{e.base}({self._term(lowered.term)})"
        return (f"{e.base}(m2cpp::span<uvec>({self._term(lowered.lo)}, "
                f"{self._term(lowered.hi)}))")

    def _term(self, t: mapping.LoweredTerm) -> str:
        if t.length_of is not None:
            base = f"{t.length_of}.n_rows"
            return base if t.const == 0 else f"{base}{t.const:+d}"
        if t.expr is not None:
            prev = self.in_subscript
            self.in_subscript = True
            try:
                rendered = self._expr(t.expr, _PREC["+"])
            finally:
                self.in_subscript = prev
            return rendered if t.const == 0 else f"{rendered}{t.const:+d}"
        return str(t.const)


def emit(tp: TypedProgram, cfg: EmitConfig | None = None) -> EmittedUnit:
    """Render a typed program once; the unit can then be ported anywhere."""
    global _emit_count
    cfg = cfg or EmitConfig()
    pieces = []
    for fn in tp.program.functions:
        pieces.append(_FunctionEmitter(tp, fn, cfg).render())
    with _emit_lock:
        _emit_count += 1
    return EmittedUnit(cfg.newline.join(pieces), tp.program.functions[0].name, 1)


def port(unit: EmittedUnit, targets, out_root) -> list:
    """Stage the already-emitted unit for each target OS label. No further
    conversion happens here; every staged artifact is the same bytes."""
    if not targets:
        raise RetargetError("no targets given")
    seen = set()
    out_root = Path(out_root)
    staged = []
    data = unit.source_text.encode("utf-8")
    digest = hashlib.sha256(data).hexdigest()
    for target in targets:
        if target in seen:
            raise DuplicateTarget(target)
        if target not in TARGET_NAMES:
            raise UnknownTarget(target)
        seen.add(target)
        tdir = out_root / target
        tdir.mkdir(parents=True, exist_ok=True)
        path = tdir / f"{unit.entry_symbol.lower()}.cpp"
        path.write_bytes(data)
        (tdir / "manifest.txt").write_text(
            f"{unit.entry_symbol} {digest}\n", encoding="utf-8")
        staged.append((target, path))
    return staged


_TOKEN_RE = re.compile(
    r"[A-Za-z_]\w*|\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|::|->|<<|>>|<=|>=|==|!=|&&|\|\||\S"
)


def code_tokens(text: str) -> list:
    """Lexical tokens of C-like text, for whitespace-insensitive comparison."""
    return _TOKEN_RE.findall(text)


def same_tokens(a: str, b: str) -> bool:
    return code_tokens(a) == code_tokens(b)
