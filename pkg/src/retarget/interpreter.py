"""Tree-walking evaluator with MATLAB semantics over NumValues.

Indexing is 1-based with `end` meaning the current vector's length; an if
condition is true when its value is nonempty and every element is nonzero;
destructuring assigns a call's outputs positionally. The QRS detector is an
intrinsic: calls to `pan_tompkin` run the native detector and shift its
0-based peak indices up by one to stay inside this dialect's convention.

Plain `*` and `/` between two vectors are rejected (use `.*` or `./`); with
a scalar on either side every arithmetic operator is elementwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from . import frontend as f
from . import mathcore as mc
from .analysis import TypedProgram
from .errors import RetargetError
from .semtypes import SemType

MAX_CALL_DEPTH = 64


class EvalError(RetargetError):
    pass


class RuntimeIndexError(EvalError):
    def __init__(self, name: str, index, length: int):
        super().__init__(f"index {index} out of range for {name!r} (length {length})")
        self.name = name
        self.index = index
        self.length = length


class UnassignedOutput(EvalError):
    def __init__(self, name: str):
        super().__init__(f"output {name!r} was never assigned")
        self.name = name


class DepthExceeded(EvalError):
    def __init__(self):
        super().__init__(f"call depth exceeded {MAX_CALL_DEPTH}")


@dataclass
class Env:
    bindings: dict = field(default_factory=dict)
    depth: int = 0
    evaluator: object = field(default=None, repr=False)


@dataclass
class EvalOutcome:
    outputs: list
    trace: list | None = None


def _pan_tompkin_intrinsic(args, nargout):
    from . import dsp  # deferred so parse-only callers skip numpy

    if len(args) not in (2, 3):
        raise EvalError(f"pan_tompkin expects 2 or 3 arguments, got {len(args)}")
    sig_v, fs_v = args[0], args[1]
    if not (sig_v.is_vector() or sig_v.is_matrix()):
        raise EvalError("pan_tompkin: first argument must be a signal vector")
    fs = int(fs_v.scalar)
    det = dsp.pan_tompkin(dsp.EcgSignal(tuple(float(x) for x in sig_v.data), fs))
    return [
        mc.rvec(det.peak_amplitudes),
        mc.ivec(i + 1 for i in det.peak_indices),  # 1-based in this dialect
        mc.iscalar(det.delay),
    ]


DEFAULT_INTRINSICS = {"pan_tompkin": _pan_tompkin_intrinsic}


def _need_scalar(v: mc.NumValue, what: str) -> float:
    if v.is_scalar():
        return float(v.scalar)
    if v.is_vector() and len(v.data) == 1:
        return float(v.data[0])
    raise EvalError(f"{what} must be scalar")


def _as_index(x: float, name: str, length: int) -> int:
    if x != math.floor(x):
        raise RuntimeIndexError(name, x, length)
    return int(x)


def _b_length(args):
    return mc.length(args[0])


def _b_diff(args):
    return mc.diff(args[0])


def _b_zeros(args):
    dims = [int(_need_scalar(a, "zeros dimension")) for a in args]
    if len(dims) == 1:
        n = dims[0]
        return mc.rmat(n, n, [0.0] * (n * n))
    if len(dims) != 2:
        raise EvalError("zeros expects one or two dimensions")
    r, c = dims
    if r == 1 or c == 1:
        return mc.rvec([0.0] * max(r * c, 0))
    return mc.rmat(r, c, [0.0] * (r * c))


def _b_abs(args):
    v = args[0]
    if v.is_scalar():
        return mc.NumValue(v.kind, (abs(v.scalar),))
    return mc.NumValue(v.kind, tuple(abs(x) for x in v.data), rows=v.rows, cols=v.cols)


def _b_max(args):
    v = args[0]
    if v.is_scalar():
        return mc.rscalar(v.scalar)
    if not v.data:
        raise EvalError("max of an empty vector")
    return mc.rscalar(max(float(x) for x in v.data))


def _b_mean(args):
    v = args[0]
    if v.is_scalar():
        return mc.rscalar(v.scalar)
    if not v.data:
        raise EvalError("mean of an empty vector")
    total = 0.0
    for x in v.data:
        total += float(x)
    return mc.rscalar(total / len(v.data))


def _b_sum(args):
    v = args[0]
    if v.is_scalar():
        return mc.rscalar(v.scalar)
    total = 0.0
    for x in v.data:
        total += float(x)
    return mc.rscalar(total)


def _round_half_away(x: float) -> float:
    return math.floor(x + 0.5) if x >= 0 else math.ceil(x - 0.5)


def _int_result(x: float) -> mc.NumValue:
    return mc.iscalar(int(x)) if x >= 0 else mc.rscalar(x)


def _b_round(args):
    return _int_result(_round_half_away(_need_scalar(args[0], "round argument")))


def _b_floor(args):
    return _int_result(math.floor(_need_scalar(args[0], "floor argument")))


def _b_find(args):
    v = args[0]
    if v.is_scalar():
        hits = [1] if float(v.scalar) != 0.0 else []
    else:
        hits = [k + 1 for k, x in enumerate(v.data) if float(x) != 0.0]
    return mc.ivec(hits)


BUILTINS = {
    "length": _b_length,
    "diff": _b_diff,
    "zeros": _b_zeros,
    "abs": _b_abs,
    "max": _b_max,
    "mean": _b_mean,
    "sum": _b_sum,
    "round": _b_round,
    "floor": _b_floor,
    "find": _b_find,
}


def _truthy(v: mc.NumValue) -> bool:
    if v.is_scalar():
        return float(v.scalar) != 0.0
    if not v.data:
        return False
    return all(float(x) != 0.0 for x in v.data)


_VECTORISH = ("rvec", "ivec", "rmat")


class _Evaluator:
    def __init__(self, tp: TypedProgram | None, intrinsics: dict | None, trace: bool):
        self.tp = tp
        self.intrinsics = DEFAULT_INTRINSICS if intrinsics is None else intrinsics
        self.trace: list | None = [] if trace else None
        self._end_stack: list = []

    # -- function evaluation

    def call_function(self, fn: f.FunctionDef, args, depth: int) -> list:
        if depth > MAX_CALL_DEPTH:
            raise DepthExceeded()
        if len(args) != len(fn.params):
            raise EvalError(
                f"{fn.name} expects {len(fn.params)} arguments, got {len(args)}")
        self._check_arg_kinds(fn, args)
        env = Env({p: a for p, a in zip(fn.params, args)}, depth, self)
        self.exec_block(fn.body, env)
        outputs = []
        for name in fn.outputs:
            if name not in env.bindings:
                raise UnassignedOutput(name)
            outputs.append(env.bindings[name])
        return outputs

    def _check_arg_kinds(self, fn: f.FunctionDef, args):
        if self.tp is None:
            return
        symbols = self.tp.symbols.get(fn.name, {})
        compatible = {
            SemType.REAL_MATRIX: _VECTORISH,
            SemType.REAL_VECTOR: ("rvec", "ivec", "rscalar", "iscalar"),
            SemType.INDEX_VECTOR: ("ivec",),
            SemType.REAL_SCALAR: ("rscalar", "iscalar"),
            SemType.INT_SCALAR: ("iscalar", "rscalar"),
            SemType.INDEX_SCALAR: ("iscalar", "rscalar"),
        }
        for p, a in zip(fn.params, args):
            t = symbols.get(p)
            if t is None or t not in compatible:
                continue
            if a.kind not in compatible[t]:
                raise EvalError(
                    f"{fn.name}: argument {p!r} should be {t}, got {a.kind}")
            if t in (SemType.INT_SCALAR, SemType.INDEX_SCALAR) and a.kind == "rscalar":
                if float(a.scalar) != math.floor(float(a.scalar)):
                    raise EvalError(f"{fn.name}: argument {p!r} must be integral")

    # -- statements

    def exec_block(self, stmts, env: Env):
        for s in stmts:
            self.exec_stmt(s, env)

    def exec_stmt(self, s, env: Env):
        if isinstance(s, f.Assign):
            self._exec_assign(s, env)
        elif isinstance(s, f.ExprStmt):
            self.eval(s.expr, env)
        elif isinstance(s, f.If):
            if _truthy(self.eval(s.cond, env)):
                self.exec_block(s.then, env)
            else:
                self.exec_block(s.orelse, env)
        elif isinstance(s, f.For):
            start = _need_scalar(self.eval(s.start, env), "loop start")
            stop = _need_scalar(self.eval(s.stop, env), "loop stop")
            k = start
            while k <= stop:
                env.bindings[s.var] = mc.rscalar(k)
                self.exec_block(s.body, env)
                k += 1.0
        elif isinstance(s, f.While):
            while _truthy(self.eval(s.cond, env)):
                self.exec_block(s.body, env)
        else:
            raise EvalError(f"unsupported statement: {type(s).__name__}")

    def _exec_assign(self, s: f.Assign, env: Env):
        if len(s.targets) == 1 and s.targets[0] != f.PLACEHOLDER:
            value = self.eval(s.expr, env)
            env.bindings[s.targets[0]] = value
            if self.trace is not None:
                self.trace.append((s.line, s.targets[0], value))
            return
        if not isinstance(s.expr, f.Call):
            raise EvalError(f"line {s.line}: destructuring needs a call")
        values = self._call(s.expr, env, nargout=len(s.targets))
        if len(values) < len(s.targets):
            raise EvalError(
                f"line {s.line}: {s.expr.name} returned {len(values)} values, "
                f"{len(s.targets)} requested")
        for target, value in zip(s.targets, values):
            if target == f.PLACEHOLDER:
                continue
            env.bindings[target] = value
            if self.trace is not None:
                self.trace.append((s.line, target, value))

    # -- expressions

    def eval(self, e, env: Env) -> mc.NumValue:
        if isinstance(e, f.Num):
            return mc.rscalar(e.value)
        if isinstance(e, f.Var):
            try:
                return env.bindings[e.name]
            except KeyError:
                raise EvalError(
                    f"line {e.line}: unbound identifier {e.name!r}") from None
        if isinstance(e, f.Unary):
            v = self.eval(e.operand, env)
            if v.is_scalar():
                return mc.rscalar(-float(v.scalar))
            if v.is_vector():
                return mc.rvec(-float(x) for x in v.data)
            return mc.rmat(v.rows, v.cols, (-float(x) for x in v.data))
        if isinstance(e, f.Binary):
            return self._binary(e, env)
        if isinstance(e, f.Index):
            return self._index(e, env)
        if isinstance(e, f.Call):
            return self._call(e, env, nargout=1)[0]
        if isinstance(e, f.EndMarker):
            if not self._end_stack:
                raise EvalError(f"line {e.line}: 'end' outside a subscript")
            return mc.iscalar(self._end_stack[-1])
        if isinstance(e, f.RangeExpr):
            raise EvalError(f"line {e.line}: a range is only valid as a subscript")
        raise EvalError(f"unsupported expression: {type(e).__name__}")

    def _binary(self, e: f.Binary, env: Env) -> mc.NumValue:
        a = self.eval(e.lhs, env)
        b = self.eval(e.rhs, env)
        op = e.op
        if op in (">", "<", ">=", "<=", "=="):
            return self._compare(op, a, b, e)
        if op in ("*", "/"):
            if not a.is_scalar() and not b.is_scalar() \
                    and len(a.data) != 1 and len(b.data) != 1:
                raise EvalError(
                    f"line {e.line}: use '.{op}' for elementwise vector {op}")
        try:
            return mc.ew(_CPP_LIKE.get(op, op), a, b)
        except mc.ShapeMismatch as exc:
            raise EvalError(f"line {e.line}: {exc}") from None

    def _compare(self, op: str, a: mc.NumValue, b: mc.NumValue, e) -> mc.NumValue:
        test = _CMP[op]
        if a.is_scalar() and b.is_scalar():
            return mc.iscalar(1 if test(float(a.scalar), float(b.scalar)) else 0)
        sa = float(a.scalar) if a.is_scalar() else None
        sb = float(b.scalar) if b.is_scalar() else None
        if a.is_vector() and b.is_vector():
            if len(a.data) == len(b.data):
                pairs = zip((float(x) for x in a.data), (float(y) for y in b.data))
            elif len(a.data) == 1:
                sa = float(a.data[0])
                pairs = ((sa, float(y)) for y in b.data)
            elif len(b.data) == 1:
                sb = float(b.data[0])
                pairs = ((float(x), sb) for x in a.data)
            else:
                raise EvalError(f"line {e.line}: comparison shape mismatch")
        elif a.is_vector():
            pairs = ((float(x), sb) for x in a.data)
        elif b.is_vector():
            pairs = ((sa, float(y)) for y in b.data)
        else:
            raise EvalError(f"line {e.line}: cannot compare these values")
        return mc.rvec(1.0 if test(x, y) else 0.0 for x, y in pairs)

    def _index(self, e: f.Index, env: Env) -> mc.NumValue:
        try:
            base = env.bindings[e.base]
        except KeyError:
            raise EvalError(f"line {e.line}: unbound identifier {e.base!r}") from None
        if base.is_matrix():
            raise EvalError(f"line {e.line}: matrix subscripting is not supported")
        if not base.is_vector():
            raise EvalError(f"line {e.line}: {e.base!r} is not subscriptable")
        n = len(base.data)
        self._end_stack.append(n)
        try:
            sub = e.subscript
            if isinstance(sub, f.RangeExpr):
                a = _as_index(_need_scalar(self.eval(sub.start, env), "range start"),
                              e.base, n)
                b = _as_index(_need_scalar(self.eval(sub.stop, env), "range stop"),
                              e.base, n)
                if b < a:
                    return mc.NumValue(base.kind, ())
                if a < 1 or b > n:
                    bad = a if a < 1 else b
                    raise RuntimeIndexError(e.base, bad, n)
                return mc.slice(base, mc.span(a - 1, b - 1))
            i = _as_index(_need_scalar(self.eval(sub, env), "subscript"), e.base, n)
            if i < 1 or i > n:
                raise RuntimeIndexError(e.base, i, n)
            elem = base.data[i - 1]
            return mc.iscalar(elem) if base.kind == mc.IVEC else mc.rscalar(elem)
        finally:
            self._end_stack.pop()

    def _call(self, call: f.Call, env: Env, nargout: int) -> list:
        args = [self.eval(a, env) for a in call.args]
        if call.name in self.intrinsics:
            values = self.intrinsics[call.name](args, nargout)
            return list(values)
        if call.name in BUILTINS:
            if nargout > 1:
                raise EvalError(
                    f"line {call.line}: {call.name} returns a single value")
            return [BUILTINS[call.name](args)]
        if self.tp is not None:
            for fn in self.tp.program.functions:
                if fn.name == call.name:
                    return self.call_function(fn, args, env.depth + 1)
        raise EvalError(f"line {call.line}: unknown function {call.name!r}")


_CPP_LIKE = {"./": "/", ".*": "*"}
_CMP = {
    ">": lambda x, y: x > y,
    "<": lambda x, y: x < y,
    ">=": lambda x, y: x >= y,
    "<=": lambda x, y: x <= y,
    "==": lambda x, y: x == y,
}


def eval_function(tp: TypedProgram, fname: str, args, trace: bool = False,
                  intrinsics: dict | None = None) -> EvalOutcome:
    """Evaluate one function of a resolved program.

    `intrinsics` overrides the default intrinsic table (used to stub the
    detector in tests); pass {} to disable intrinsics entirely.
    """
    fn = next((g for g in tp.program.functions if g.name == fname), None)
    if fn is None:
        raise EvalError(f"no function named {fname!r}")
    ev = _Evaluator(tp, intrinsics, trace)
    outputs = ev.call_function(fn, list(args), depth=1)
    return EvalOutcome(outputs, ev.trace)


def eval_expr(expr, env: Env) -> mc.NumValue:
    """Evaluate a single expression; `env.bindings` supplies free variables."""
    ev = env.evaluator if env.evaluator is not None else _Evaluator(None, None, False)
    return ev.eval(expr, env)
