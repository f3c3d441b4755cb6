import random

import pytest

from retarget import corpus, frontend
from retarget import mathcore as mc
from retarget.analysis import resolve
from retarget.mapping import (
    NonPositiveIndex, RegistryError, ScalarIndex, Span, UnsupportedSubscript,
    default_registry, lower_index, parse_registry,
)
from retarget.semtypes import SemType


def subscript_of(src: str):
    """Subscript expression of the last statement's right-hand side."""
    prog = frontend.parse_source(f"function y = f(v)\ny = v({src});")
    return prog.functions[0].body[0].expr.args[0]


class TestRegistry:
    def test_length_entry(self):
        entry = default_registry().lookup("length", (SemType.REAL_MATRIX,))
        assert entry.target_name == "m2cpp::length"
        assert entry.value_return
        assert entry.ret_type((SemType.REAL_MATRIX,)) is SemType.INDEX_SCALAR

    def test_detector_entry_drops_plot_flag(self):
        entry = default_registry().lookup(
            "pan_tompkin", (SemType.REAL_MATRIX, SemType.INT_SCALAR, SemType.REAL_SCALAR))
        assert entry.target_name == "pan_tompkin"
        assert entry.kept_positions(3) == [0, 1]
        assert [n for n, _ in entry.outputs] == ["qrs_amp_raw", "qrs_i_raw", "delay"]
        assert [t for _, t in entry.outputs] == [
            SemType.REAL_MATRIX, SemType.INDEX_VECTOR, SemType.INT_SCALAR]

    def test_diff_entry(self):
        entry = default_registry().lookup("diff", (SemType.INDEX_VECTOR,))
        assert entry.target_name == "diff"
        assert entry.ret_type((SemType.INDEX_VECTOR,)) is SemType.REAL_VECTOR

    def test_same_return_follows_argument(self):
        entry = default_registry().lookup("abs")
        assert entry.ret_type((SemType.REAL_VECTOR,)) is SemType.REAL_VECTOR
        assert entry.ret_type((SemType.REAL_SCALAR,)) is SemType.REAL_SCALAR

    def test_miss_returns_none(self):
        assert default_registry().lookup("no_such_function") is None

    def test_entry_signature(self):
        sig = default_registry().entry_signature("EKGpeakDet")
        assert sig.params == (("sig", SemType.REAL_MATRIX), ("fs", SemType.INT_SCALAR))
        assert sig.emit_order == ("sig", "fs", "iHR", "peak", "tHR")

    def test_parse_errors_carry_line_numbers(self):
        with pytest.raises(RegistryError) as err:
            parse_registry("# fine\nmap broken\n")
        assert err.value.line_no == 2
        with pytest.raises(RegistryError):
            parse_registry("map f -> g args=keep ret=NotAType")
        with pytest.raises(RegistryError):
            parse_registry("map f -> g args=keep\n")  # missing ret
        with pytest.raises(RegistryError):
            parse_registry("bogus f\n")

    def test_comments_and_blanks_ignored(self):
        reg = parse_registry("\n# only a comment\nmap f -> g args=keep ret=RealScalar\n")
        assert reg.lookup("f").target_name == "g"

    def test_corpus_calls_all_resolve(self):
        reg = default_registry()
        for name in corpus.SOURCE_NAMES:
            prog = frontend.parse_source(corpus.read_text(name))
            tp = resolve(prog, reg)  # raises UnknownFunction on any miss
            calls = []

            def walk(e):
                if isinstance(e, frontend.Call):
                    calls.append(e.name)
                    for a in e.args:
                        walk(a)
                elif isinstance(e, frontend.Binary):
                    walk(e.lhs)
                    walk(e.rhs)
                elif isinstance(e, frontend.Unary):
                    walk(e.operand)
                elif isinstance(e, frontend.Index):
                    walk(e.subscript)

            def walk_stmt(s):
                if isinstance(s, frontend.Assign):
                    walk(s.expr)
                elif isinstance(s, frontend.ExprStmt):
                    walk(s.expr)
                elif isinstance(s, frontend.If):
                    walk(s.cond)
                    for st in s.then + s.orelse:
                        walk_stmt(st)
                elif isinstance(s, frontend.For):
                    walk(s.start)
                    walk(s.stop)
                    for st in s.body:
                        walk_stmt(st)
                elif isinstance(s, frontend.While):
                    walk(s.cond)
                    for st in s.body:
                        walk_stmt(st)

            for fn in tp.program.functions:
                for st in fn.body:
                    walk_stmt(st)
            for called in calls:
                assert reg.lookup(called) is not None or \
                    reg.entry_signature(called) is not None


class TestLowerIndex:
    def test_head_range(self):
        lowered = lower_index("peak", SemType.INDEX_VECTOR, subscript_of("1:end-1"))
        assert isinstance(lowered, Span)
        assert (lowered.lo.const, lowered.lo.length_of) == (0, None)
        assert (lowered.hi.const, lowered.hi.length_of) == (-2, "peak")

    def test_first_element(self):
        lowered = lower_index("v", SemType.REAL_VECTOR, subscript_of("1"))
        assert isinstance(lowered, ScalarIndex)
        assert (lowered.term.const, lowered.term.length_of, lowered.term.expr) == (0, None, None)

    def test_last_element(self):
        lowered = lower_index("v", SemType.REAL_VECTOR, subscript_of("end"))
        assert (lowered.term.const, lowered.term.length_of) == (-1, "v")

    def test_variable_subscript_shifts(self):
        lowered = lower_index("v", SemType.REAL_VECTOR, subscript_of("k"))
        assert lowered.term.const == -1
        assert isinstance(lowered.term.expr, frontend.Var)

    def test_empty_range_marker(self):
        lowered = lower_index("v", SemType.REAL_VECTOR, subscript_of("1:0"))
        assert isinstance(lowered, Span)
        assert lowered.lo.const == 0 and lowered.hi.const == -1
        # the lowered endpoints build the empty runtime selection
        assert mc.span(lowered.lo.const, lowered.hi.const).empty

    def test_nonpositive_literal_rejected(self):
        with pytest.raises(NonPositiveIndex):
            lower_index("v", SemType.REAL_VECTOR, subscript_of("0"))
        with pytest.raises(NonPositiveIndex):
            lower_index("v", SemType.REAL_VECTOR,
                        frontend.Num(-3.0, "-3"))

    def test_nested_range_rejected(self):
        inner = subscript_of("1:2")
        nested = frontend.RangeExpr(inner, frontend.Num(5.0, "5"))
        with pytest.raises(UnsupportedSubscript):
            lower_index("v", SemType.REAL_VECTOR, nested)

    def test_scalar_base_rejected(self):
        with pytest.raises(UnsupportedSubscript):
            lower_index("x", SemType.REAL_SCALAR, subscript_of("1"))

    def test_end_arithmetic_limited_to_literal_offsets(self):
        with pytest.raises(UnsupportedSubscript):
            lower_index("v", SemType.REAL_VECTOR, subscript_of("end-k"))
        with pytest.raises(UnsupportedSubscript):
            lower_index("v", SemType.REAL_VECTOR, subscript_of("end+1-k"))


class TestBijectivity:
    def test_scalar_lowering_round_trip(self):
        rng = random.Random(5)
        for _ in range(2000):
            n = rng.randrange(1, 500)
            i = rng.randrange(1, n + 1)
            lowered = lower_index(
                "v", SemType.REAL_VECTOR, frontend.Num(float(i), str(i)))
            zero_based = lowered.term.const
            assert 0 <= zero_based <= n - 1
            assert zero_based + 1 == i  # raising is the inverse

    def test_span_selects_matlab_elements(self):
        rng = random.Random(6)
        for _ in range(500):
            n = rng.randrange(1, 60)
            a = rng.randrange(1, n + 1)
            b = rng.randrange(a, n + 1)
            xs = [rng.random() for _ in range(n)]
            matlab_pick = xs[a - 1 : b]  # 1-based inclusive selection
            got = mc.slice(mc.rvec(xs), mc.span(a - 1, b - 1))
            assert [float(x) for x in got.data] == matlab_pick
            assert len(got) == b - a + 1
