"""Symbol resolution and type inference over parsed programs.

resolve() turns a Program into a TypedProgram: every `name(...)` form is
settled as indexing or a call, `~` placeholders become named temporaries
(named after the callee's declared outputs, suffixed on collision), and
every identifier gets one semantic type.

Inference is a single forward pass in statement order. A variable's type
accumulates by joining the types of everything assigned to it, and the two
arms of an if/else are walked separately and joined afterwards. Types that
come from the registry (entry-point parameters and outputs, and the named
output slots of mapped callees) are pinned: assignments into them must fit
the declared type, and the declaration wins over the inferred expression
type (a real vector assigned to a declared real matrix stays a matrix).
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

from . import frontend as f
from .errors import RetargetError
from .mapping import Registry, default_registry
from .semtypes import SemType, is_scalar, is_vector, rank


class AnalysisError(RetargetError):
    pass


class UnknownFunction(AnalysisError):
    def __init__(self, name: str, site):
        super().__init__(f"line {site[0]}, col {site[1]}: unknown function {name!r}")
        self.name = name
        self.site = site


class TypeConflict(AnalysisError):
    def __init__(self, name: str, t1: SemType, t2: SemType, site):
        super().__init__(
            f"line {site[0]}, col {site[1]}: incompatible types for {name!r}: {t1} vs {t2}"
        )
        self.name = name
        self.t1 = t1
        self.t2 = t2
        self.site = site


@dataclass
class TypedProgram:
    program: f.Program
    symbols: dict  # function name -> {identifier: SemType}
    temporaries: dict  # (function, line, col, target position) -> generated name
    callsites: dict  # (function, line, col) -> "call" | "index"
    registry: Registry = field(repr=False, default=None)

    def entry_name(self) -> str:
        return self.program.functions[0].name


_SCALAR_JOIN = {
    frozenset({SemType.INDEX_SCALAR, SemType.INT_SCALAR}): SemType.INT_SCALAR,
    frozenset({SemType.INDEX_SCALAR, SemType.REAL_SCALAR}): SemType.REAL_SCALAR,
    frozenset({SemType.INT_SCALAR, SemType.REAL_SCALAR}): SemType.REAL_SCALAR,
}


def join_types(a: SemType, b: SemType, name: str, site) -> SemType:
    if a == b:
        return a
    if a is SemType.UNKNOWN:
        return b
    if b is SemType.UNKNOWN:
        return a
    if SemType.INDEX_VECTOR in (a, b):
        # Index vectors never silently widen to real vectors or matrices.
        raise TypeConflict(name, a, b, site)
    if is_scalar(a) and is_scalar(b):
        return _SCALAR_JOIN[frozenset({a, b})]
    if SemType.REAL_MATRIX in (a, b):
        return SemType.REAL_MATRIX
    # remaining mixes involve REAL_VECTOR with a scalar (broadcast join)
    return SemType.REAL_VECTOR


def _fits_declared(assigned: SemType, declared: SemType, integral_literal: bool) -> bool:
    if assigned == declared:
        return True
    if declared is SemType.REAL_MATRIX:
        return assigned in (SemType.REAL_SCALAR, SemType.REAL_VECTOR,
                            SemType.INT_SCALAR, SemType.INDEX_SCALAR)
    if declared is SemType.REAL_VECTOR:
        return assigned in (SemType.REAL_SCALAR, SemType.INT_SCALAR, SemType.INDEX_SCALAR)
    if declared is SemType.REAL_SCALAR:
        return assigned in (SemType.INT_SCALAR, SemType.INDEX_SCALAR)
    if declared is SemType.INT_SCALAR:
        return assigned is SemType.INDEX_SCALAR or integral_literal
    if declared is SemType.INDEX_SCALAR:
        return integral_literal
    return False


def _collect_identifiers(fn: f.FunctionDef) -> set:
    names = set(fn.params) | {o for o in fn.outputs}
    names.add(fn.name)

    def walk_expr(e):
        if isinstance(e, f.Var):
            names.add(e.name)
        elif isinstance(e, f.Call):
            names.add(e.name)
            for a in e.args:
                walk_expr(a)
        elif isinstance(e, f.Index):
            names.add(e.base)
            walk_expr(e.subscript)
        elif isinstance(e, f.Binary):
            walk_expr(e.lhs)
            walk_expr(e.rhs)
        elif isinstance(e, f.Unary):
            walk_expr(e.operand)
        elif isinstance(e, f.RangeExpr):
            walk_expr(e.start)
            walk_expr(e.stop)

    def walk_stmt(s):
        if isinstance(s, f.Assign):
            names.update(t for t in s.targets if t != f.PLACEHOLDER)
            walk_expr(s.expr)
        elif isinstance(s, f.ExprStmt):
            walk_expr(s.expr)
        elif isinstance(s, f.If):
            walk_expr(s.cond)
            for st in s.then + s.orelse:
                walk_stmt(st)
        elif isinstance(s, f.For):
            names.add(s.var)
            walk_expr(s.start)
            walk_expr(s.stop)
            for st in s.body:
                walk_stmt(st)
        elif isinstance(s, f.While):
            walk_expr(s.cond)
            for st in s.body:
                walk_stmt(st)

    for st in fn.body:
        walk_stmt(st)
    return names


class _FunctionResolver:
    def __init__(self, fn: f.FunctionDef, program: f.Program, registry: Registry,
                 callsites: dict, temporaries: dict):
        self.fn = fn
        self.program = program
        self.registry = registry
        self.callsites = callsites
        self.temporaries = temporaries
        self.used_names = _collect_identifiers(fn)
        self.env: dict = {}
        self.declared: dict = {}

        sig = registry.entry_signature(fn.name)
        if sig is not None:
            declared_params = dict(sig.params)
            for p in fn.params:
                if p in declared_params:
                    self.env[p] = declared_params[p]
                else:
                    self.env[p] = SemType.REAL_SCALAR
            for out_name, out_type in sig.outs:
                if out_name in fn.outputs:
                    self.declared[out_name] = out_type
        else:
            for p in fn.params:
                self.env[p] = SemType.REAL_SCALAR

    def run(self) -> dict:
        self._walk_block(self.fn.body, self.env)
        return self.env

    # -- statements

    def _walk_block(self, stmts, env):
        for s in stmts:
            self._walk_stmt(s, env)

    def _walk_stmt(self, s, env):
        if isinstance(s, f.Assign):
            self._walk_assign(s, env)
        elif isinstance(s, f.ExprStmt):
            s.expr, _ = self._resolve_expr(s.expr, env)
        elif isinstance(s, f.If):
            s.cond, _ = self._resolve_expr(s.cond, env)
            then_env = dict(env)
            else_env = dict(env)
            self._walk_block(s.then, then_env)
            self._walk_block(s.orelse, else_env)
            site = (s.line, s.col)
            for name in set(then_env) | set(else_env):
                t1 = then_env.get(name, env.get(name, SemType.UNKNOWN))
                t2 = else_env.get(name, env.get(name, SemType.UNKNOWN))
                env[name] = join_types(t1, t2, name, site)
        elif isinstance(s, f.For):
            s.start, start_t = self._resolve_expr(s.start, env)
            s.stop, stop_t = self._resolve_expr(s.stop, env)
            for t, e in ((start_t, s.start), (stop_t, s.stop)):
                if not is_scalar(t):
                    raise AnalysisError(
                        f"line {s.line}: loop bounds must be scalar, got {t}")
            self._bind(s.var, SemType.REAL_SCALAR, (s.line, s.col), integral_literal=False, env=env)
            self._walk_block(s.body, env)
        elif isinstance(s, f.While):
            s.cond, _ = self._resolve_expr(s.cond, env)
            self._walk_block(s.body, env)
        else:
            raise AnalysisError(f"unsupported statement: {type(s).__name__}")

    def _walk_assign(self, s: f.Assign, env):
        site = (s.line, s.col)
        if len(s.targets) == 1 and s.targets[0] != f.PLACEHOLDER:
            s.expr, rhs_t = self._resolve_expr(s.expr, env)
            integral = isinstance(s.expr, f.Num) and s.expr.value == int(s.expr.value)
            self._bind(s.targets[0], rhs_t, site, integral, env)
            return

        # Destructuring: right-hand side must be a call with out-parameters.
        if not isinstance(s.expr, f.Call):
            raise AnalysisError(
                f"line {s.line}: destructuring needs a call on the right-hand side")
        call = s.expr
        outs = self._callee_outputs(call)
        if len(s.targets) > len(outs):
            raise AnalysisError(
                f"line {s.line}: {call.name!r} provides {len(outs)} outputs, "
                f"{len(s.targets)} requested")
        new_args = []
        for a in call.args:
            na, _ = self._resolve_expr(a, env)
            new_args.append(na)
        call.args = new_args
        self.callsites[(self.fn.name, call.line, call.col)] = "call"
        for pos, target in enumerate(s.targets):
            out_name, out_type = outs[pos]
            if target == f.PLACEHOLDER:
                gen = self._fresh_name(out_name)
                s.targets[pos] = gen
                self.temporaries[(self.fn.name, s.line, s.col, pos)] = gen
                self.declared[gen] = out_type
                env[gen] = out_type
            else:
                self._bind(target, out_type, site, integral_literal=False, env=env)

    def _callee_outputs(self, call: f.Call):
        entry = self.registry.lookup(call.name)
        if entry is not None and entry.outputs:
            if entry.arg_keep is not None and len(call.args) != len(entry.arg_keep):
                raise AnalysisError(
                    f"line {call.line}: {call.name!r} expects "
                    f"{len(entry.arg_keep)} arguments, got {len(call.args)}")
            return list(entry.outputs)
        sig = self.registry.entry_signature(call.name)
        if sig is not None and sig.outs:
            return list(sig.outs)
        if entry is not None:
            raise AnalysisError(
                f"line {call.line}: {call.name!r} returns a single value and "
                "cannot be destructured")
        raise UnknownFunction(call.name, (call.line, call.col))

    def _fresh_name(self, base: str) -> str:
        name = base
        suffix = 0
        while name in self.used_names:
            suffix += 1
            name = f"{base}_{suffix}"
        self.used_names.add(name)
        return name

    def _bind(self, name: str, rhs_t: SemType, site, integral_literal: bool, env):
        if name in self.declared:
            declared = self.declared[name]
            if not _fits_declared(rhs_t, declared, integral_literal):
                raise TypeConflict(name, declared, rhs_t, site)
            env[name] = declared
            return
        current = env.get(name, SemType.UNKNOWN)
        env[name] = join_types(current, rhs_t, name, site)

    # -- expressions

    def _resolve_expr(self, e, env, in_subscript: bool = False):
        if isinstance(e, f.Num):
            return e, SemType.REAL_SCALAR
        if isinstance(e, f.Var):
            if e.name not in env:
                raise AnalysisError(
                    f"line {e.line}, col {e.col}: unbound identifier {e.name!r}")
            return e, env[e.name]
        if isinstance(e, f.EndMarker):
            if not in_subscript:
                raise AnalysisError(
                    f"line {e.line}: 'end' is only meaningful inside a subscript")
            return e, SemType.INDEX_SCALAR
        if isinstance(e, f.RangeExpr):
            if not in_subscript:
                raise AnalysisError(
                    f"line {e.line}: a range is only meaningful as a subscript")
            e.start, start_t = self._resolve_expr(e.start, env, in_subscript=True)
            e.stop, stop_t = self._resolve_expr(e.stop, env, in_subscript=True)
            for t in (start_t, stop_t):
                if not is_scalar(t):
                    raise AnalysisError(f"line {e.line}: range endpoints must be scalar")
            return e, SemType.INDEX_VECTOR
        if isinstance(e, f.Unary):
            e.operand, t = self._resolve_expr(e.operand, env, in_subscript)
            return e, t
        if isinstance(e, f.Binary):
            e.lhs, lt = self._resolve_expr(e.lhs, env, in_subscript)
            e.rhs, rt = self._resolve_expr(e.rhs, env, in_subscript)
            return e, self._binary_type(e, lt, rt)
        if isinstance(e, f.Index):
            return self._resolve_index(e.base, e.subscript, e, env)
        if isinstance(e, f.Call):
            if e.name in env:
                if len(e.args) != 1:
                    raise AnalysisError(
                        f"line {e.line}: {e.name!r} is a variable and takes "
                        "exactly one subscript")
                idx = f.Index(e.name, e.args[0], line=e.line, col=e.col)
                return self._resolve_index(e.name, e.args[0], idx, env)
            return self._resolve_call(e, env)
        raise AnalysisError(f"unsupported expression: {type(e).__name__}")

    def _binary_type(self, e: f.Binary, lt: SemType, rt: SemType) -> SemType:
        r = max(rank(lt), rank(rt))
        if e.op in (">", "<", ">=", "<=", "=="):
            if r >= 2:
                return SemType.REAL_MATRIX
            if r == 1:
                return SemType.REAL_VECTOR  # elementwise 0/1 mask
            return SemType.INT_SCALAR
        if r >= 2:
            return SemType.REAL_MATRIX
        if r == 1:
            return SemType.REAL_VECTOR
        return SemType.REAL_SCALAR

    def _resolve_index(self, base: str, subscript, node, env):
        base_t = env[base]
        if not is_vector(base_t):
            raise AnalysisError(
                f"line {node.line}: cannot subscript {base!r} of type {base_t}")
        self.callsites[(self.fn.name, node.line, node.col)] = "index"
        if isinstance(subscript, f.RangeExpr):
            new_sub, _ = self._resolve_expr(subscript, env, in_subscript=True)
            node.subscript = new_sub
            return node, base_t
        new_sub, sub_t = self._resolve_expr(subscript, env, in_subscript=True)
        node.subscript = new_sub
        if not is_scalar(sub_t):
            raise AnalysisError(
                f"line {node.line}: vector-valued subscripts are not supported")
        elem = SemType.INDEX_SCALAR if base_t is SemType.INDEX_VECTOR else SemType.REAL_SCALAR
        return node, elem

    def _resolve_call(self, call: f.Call, env):
        entry = self.registry.lookup(call.name, ())
        same_program = next(
            (fn for fn in self.program.functions if fn.name == call.name), None)
        sig = self.registry.entry_signature(call.name)
        if entry is None and same_program is None:
            raise UnknownFunction(call.name, (call.line, call.col))
        new_args = []
        arg_types = []
        for a in call.args:
            na, t = self._resolve_expr(a, env)
            new_args.append(na)
            arg_types.append(t)
        call.args = new_args
        self.callsites[(self.fn.name, call.line, call.col)] = "call"
        if entry is not None:
            if entry.arg_keep is not None and len(call.args) != len(entry.arg_keep):
                raise AnalysisError(
                    f"line {call.line}: {call.name!r} expects "
                    f"{len(entry.arg_keep)} arguments, got {len(call.args)}")
            if entry.value_return:
                return call, entry.ret_type(tuple(arg_types))
            return call, entry.outputs[0][1]  # first output when used as a value
        if sig is not None and sig.outs:
            return call, sig.outs[0][1]
        return call, SemType.REAL_SCALAR


def resolve(program: f.Program, registry: Registry) -> TypedProgram:
    """Resolve and type a parsed program against a registry.

    The input program is not modified; the returned TypedProgram carries a
    rewritten copy in which variable subscripts are Index nodes and `~`
    placeholders are named temporaries.
    """
    prog = copy.deepcopy(program)
    symbols: dict = {}
    temporaries: dict = {}
    callsites: dict = {}
    for fn in prog.functions:
        resolver = _FunctionResolver(fn, prog, registry, callsites, temporaries)
        symbols[fn.name] = resolver.run()
    return TypedProgram(prog, symbols, temporaries, callsites, registry)


def infer_expr(expr, env: dict, registry: Registry | None = None) -> SemType:
    """Type a single expression against an identifier->SemType environment."""
    if registry is None:
        registry = default_registry()
    dummy = f.FunctionDef("expr", [], [], [], line=0, col=0)
    resolver = _FunctionResolver(dummy, f.Program([dummy]), registry, {}, {})
    resolver.env = dict(env)
    _, t = resolver._resolve_expr(copy.deepcopy(expr), resolver.env)
    return t
