import math
import random

import pytest

from retarget import mathcore as mc


def vals(v):
    return [float(x) for x in v.data]


class TestConstruction:
    def test_scalars(self):
        assert mc.rscalar(3).scalar == 3.0
        assert mc.iscalar(7).scalar == 7
        with pytest.raises(ValueError):
            mc.iscalar(-1)

    def test_index_vector_rejects_negative(self):
        with pytest.raises(ValueError):
            mc.ivec([1, -2])

    def test_matrix_storage_must_match(self):
        with pytest.raises(ValueError):
            mc.rmat(2, 3, [1.0] * 5)

    def test_values_are_immutable(self):
        v = mc.rvec([1, 2])
        with pytest.raises(Exception):
            v.kind = "rmat"


class TestEw:
    def test_scalar_over_vector(self):
        # 60 ./ [0.5, 1.0] -> [120, 60]
        out = mc.ew("/", mc.rscalar(60), mc.rvec([0.5, 1.0]))
        assert vals(out) == [120.0, 60.0]

    def test_additive_identity(self):
        out = mc.ew("+", mc.rvec([1, 2, 3]), mc.rscalar(0))
        assert vals(out) == [1.0, 2.0, 3.0]

    def test_timestamp_division_step(self):
        # the (peaks + RR/2)/fs step for peaks [100,200,300] at fs=100,
        # evaluated by hand: [150, 250]/100 -> [1.5, 2.5]
        out = mc.ew("/", mc.rvec([150.0, 250.0]), mc.rscalar(100))
        assert vals(out) == [1.5, 2.5]

    def test_vector_vector(self):
        out = mc.ew("*", mc.rvec([2, 3]), mc.rvec([4, 5]))
        assert vals(out) == [8.0, 15.0]

    def test_length_one_vector_broadcasts(self):
        out = mc.ew("+", mc.rvec([10, 20]), mc.rvec([5]))
        assert vals(out) == [15.0, 25.0]

    def test_empty_with_scalar_stays_empty(self):
        out = mc.ew("+", mc.rvec([]), mc.rscalar(200))
        assert vals(out) == []
        out = mc.ew("/", mc.rvec([]), mc.rvec([200.0]))
        assert vals(out) == []

    def test_empty_with_empty(self):
        assert vals(mc.ew("-", mc.rvec([]), mc.rvec([]))) == []

    def test_shape_mismatch(self):
        with pytest.raises(mc.ShapeMismatch):
            mc.ew("+", mc.rvec([1, 2]), mc.rvec([1, 2, 3]))

    def test_matrix_scalar(self):
        m = mc.rmat(2, 2, [1, 2, 3, 4])
        out = mc.ew("*", m, mc.rscalar(2))
        assert out.kind == mc.RMAT and vals(out) == [2.0, 4.0, 6.0, 8.0]

    def test_division_by_zero_is_ieee(self):
        assert mc.ew("/", mc.rscalar(1), mc.rscalar(0)).scalar == math.inf
        assert mc.ew("/", mc.rscalar(-1), mc.rscalar(0)).scalar == -math.inf
        assert math.isnan(mc.ew("/", mc.rscalar(0), mc.rscalar(0)).scalar)

    def test_nan_propagates(self):
        out = mc.ew("+", mc.rvec([math.nan, 1.0]), mc.rscalar(2))
        assert math.isnan(vals(out)[0]) and vals(out)[1] == 3.0

    def test_integer_vector_operands_become_real(self):
        out = mc.ew("+", mc.ivec([1, 2]), mc.rscalar(0.5))
        assert out.kind == mc.RVEC and vals(out) == [1.5, 2.5]


class TestDiff:
    def test_definition(self):
        assert vals(mc.diff(mc.rvec([2, 5, 9]))) == [3.0, 4.0]

    def test_single_element(self):
        assert vals(mc.diff(mc.rvec([7]))) == []

    def test_regular_peaks(self):
        assert vals(mc.diff(mc.ivec([100, 200, 300]))) == [100.0, 100.0]

    def test_scalar_gives_empty(self):
        assert vals(mc.diff(mc.rscalar(7))) == []

    def test_telescoping(self):
        rng = random.Random(42)
        for _ in range(500):
            n = rng.randrange(2, 60)
            xs = [float(rng.randrange(-10**6, 10**6)) for _ in range(n)]
            v = mc.rvec(xs)
            total = sum(vals(mc.diff(v)))
            assert total == xs[-1] - xs[0]

    def test_length_relation(self):
        rng = random.Random(7)
        for _ in range(200):
            n = rng.randrange(0, 40)
            v = mc.rvec([rng.random() for _ in range(n)])
            assert mc.length(mc.diff(v)).scalar == max(n - 1, 0)


class TestSlice:
    def test_head_pair(self):
        out = mc.slice(mc.ivec([100, 200, 300]), mc.span(0, 1))
        assert list(out.data) == [100, 200]
        assert out.kind == mc.IVEC

    def test_empty_selection(self):
        assert len(mc.slice(mc.rvec([1, 2, 3]), mc.EMPTY_SPAN)) == 0

    def test_singleton(self):
        assert vals(mc.slice(mc.rvec([5]), mc.span(0, 0))) == [5.0]

    def test_out_of_bounds(self):
        with pytest.raises(mc.IndexOutOfBounds):
            mc.slice(mc.rvec([1, 2]), mc.span(0, 2))

    def test_span_inverts_to_empty(self):
        assert mc.span(0, -1).empty
        assert mc.span(3, 2).empty

    def test_composition(self):
        rng = random.Random(3)
        for _ in range(500):
            n = rng.randrange(1, 30)
            v = mc.rvec([rng.random() for _ in range(n)])
            a1 = rng.randrange(0, n)
            b1 = rng.randrange(a1, n)
            inner_len = b1 - a1 + 1
            a2 = rng.randrange(0, inner_len)
            b2 = rng.randrange(a2, inner_len)
            direct = mc.slice(mc.slice(v, mc.span(a1, b1)), mc.span(a2, b2))
            composed = mc.slice(v, mc.span(a1 + a2, a1 + b2))
            assert direct == composed


class TestBroadcastCoherence:
    def test_scalar_equals_filled_vector(self):
        rng = random.Random(11)
        for _ in range(500):
            n = rng.randrange(1, 30)
            s = rng.uniform(-100, 100)
            xs = [rng.uniform(-100, 100) for _ in range(n)]
            op = rng.choice("+-*/")
            v = mc.rvec(xs)
            bcast = mc.ew(op, mc.rscalar(s), v)
            filled = mc.ew(op, mc.rvec([s] * n), v)
            assert bcast == filled


class TestLength:
    def test_matrix_max_dimension(self):
        assert mc.length(mc.rmat(3, 500, [0.0] * 1500)).scalar == 500

    def test_empty_vector(self):
        assert mc.length(mc.rvec([])).scalar == 0

    def test_scalar(self):
        assert mc.length(mc.iscalar(7)).scalar == 1
