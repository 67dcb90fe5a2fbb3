import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from macroauc.bounds import (BoundQuery, ModelConstants, analytic_rademacher_bound, bound, bound_corollary,
                             bound_pa, bound_u1, bound_u2, estimate_model_constants, write_bounds_csv)
from macroauc.dataset import MultiLabelDataset, stats_from_counts
from macroauc.risk import LinearModel

ONES = ModelConstants(1.0, 1.0, 1.0, 1.0)
BAL = stats_from_counts([50, 50, 50], 100)


def q(algo, stats=BAL, n=100, risk=0.0, delta=0.01, const=ONES, variant="imb2"):
    return BoundQuery(algo, delta, n, stats, const, risk, variant)


class TestWorkedExamples:
    def test_pa(self):
        r = bound_pa(q("pa"))
        assert r.complexity_term == pytest.approx(0.56569, abs=5e-6)
        assert r.deviation_term == pytest.approx(0.690542, abs=5e-7)
        assert r.total == pytest.approx(1.256228, abs=5e-7)
        # exact closed forms
        assert r.complexity_term == pytest.approx(4 * math.sqrt(2) / 10, rel=1e-15)
        assert r.deviation_term == pytest.approx(3 * math.sqrt(math.log(200) / 200) * math.sqrt(2), rel=1e-15)

    def test_u1_doubles_complexity(self):
        assert bound_u1(q("u1")).complexity_term == pytest.approx(1.13137, abs=5e-6)

    def test_u2_is_twice_pa(self):
        assert bound_u2(q("u2")).total == pytest.approx(2 * bound_pa(q("pa")).total, rel=1e-15)

    def test_delta_near_one(self):
        assert bound_pa(q("pa", delta=0.99)).deviation_term > 0

    def test_analytic_rademacher(self):
        assert analytic_rademacher_bound("pa", BAL, ONES, 100) == pytest.approx(2 * math.sqrt(2) / 10, rel=1e-15)
        assert analytic_rademacher_bound("u1", BAL, ONES, 100) == pytest.approx(math.sqrt(2) / 10, rel=1e-15)
        a = analytic_rademacher_bound("u2", BAL, ONES, 100)
        assert analytic_rademacher_bound("u2", BAL, ONES, 400) == a / 2

    def test_extreme_u2_constant_in_n(self):
        for n in (10, 100, 1000):
            r = bound_corollary("extreme", "u2", q("u2", stats_from_counts([1, 1], n), n=n))
            assert r.complexity_term == pytest.approx(8.0, rel=1e-15)

    def test_extreme_pa_deviation_independent_of_n(self):
        vals = {bound_corollary("extreme", "pa", q("pa", stats_from_counts([1], n), n=n)).deviation_term
                for n in (10, 50, 1000)}
        assert max(vals) - min(vals) < 1e-12

    def test_extreme_u1_linear_in_n(self):
        for n in (10, 100):
            r = bound_corollary("extreme", "u1", q("u1", stats_from_counts([1], n), n=n))
            assert r.complexity_term == pytest.approx(4 * n, rel=1e-15)

    def test_balanced_u1_matches_u2_structure(self):
        r1 = bound_u1(q("u1", risk=0.3))
        r2 = bound_u2(q("u2", risk=0.6))
        assert r1.risk_term == pytest.approx(r2.risk_term)
        assert r1.complexity_term == pytest.approx(8 * math.sqrt(2) / 10, rel=1e-15)
        assert r1.total == pytest.approx(r2.total, rel=1e-14)


@given(st.integers(1, 400), st.integers(1, 6), st.floats(1e-4, 0.9), st.floats(0.1, 3), st.floats(0, 2))
def test_corollaries_equal_theorems(half, K, delta, scale, risk):
    const = ModelConstants(scale, 2 * scale, 1 / math.log(2), scale + 1)
    n = 2 * half
    for case, stats, m in (("balanced", stats_from_counts([half] * K, n), n),
                           ("extreme", stats_from_counts([1] * K, n + 1), n + 1)):
        for algo in ("pa", "u1", "u2"):
            for variant in ("imb2", "imb1"):
                qq = q(algo, stats, m, risk, delta, const, variant)
                assert bound_corollary(case, algo, qq).total == pytest.approx(bound(qq).total, rel=1e-12)


def test_variant_choice_only_affects_u1():
    st_ = stats_from_counts([2, 10, 40], 100)
    assert bound(q("pa", st_, variant="imb1")).total == bound(q("pa", st_)).total
    a, b = bound(q("u1", st_, variant="imb1")), bound(q("u1", st_))
    assert a.deviation_term < b.deviation_term
    assert a.complexity_term == b.complexity_term


def test_corollary_checks_case():
    with pytest.raises(ValueError):
        bound_corollary("balanced", "pa", q("pa", stats_from_counts([10], 100)))
    with pytest.raises(ValueError):
        bound_corollary("extreme", "pa", q("pa"))
    with pytest.raises(ValueError):
        bound_corollary("nonsense", "pa", q("pa"))
    with pytest.raises(ValueError):
        bound_corollary("balanced", "u1", q("pa"))


@pytest.mark.parametrize("kw", [{"delta": 0.0}, {"delta": 1.0}, {"n": 0}, {"risk": -1.0}, {"risk": math.nan},
                                {"variant": "imb3"}])
def test_query_validation(kw):
    with pytest.raises(ValueError):
        q("pa", **kw)


def test_constants_validation():
    with pytest.raises(ValueError):
        ModelConstants(-1.0, 1.0, 1.0, 1.0)


class TestEstimateConstants:
    def test_unit_norms(self):
        ds = MultiLabelDataset(np.array([[1.0, 0.0], [0.0, 1.0], [0.6, 0.8]]), [[1], [-1], [1]])
        c = estimate_model_constants(LinearModel([[0.6, 0.8]], loss="hinge"), ds)
        assert (c.Lambda, c.r) == pytest.approx((1.0, 1.0))
        assert c.B == pytest.approx(2.0)

    def test_zero_model(self):
        ds = MultiLabelDataset(np.eye(2), [[1], [-1]])
        c = estimate_model_constants(LinearModel(np.zeros((1, 2)), loss="hinge"), ds)
        assert c.Lambda == 0.0 and c.B == 1.0


def test_csv(tmp_path):
    write_bounds_csv([("syn", bound(q("pa")))], tmp_path / "b.csv", comment="x")
    lines = (tmp_path / "b.csv").read_text().splitlines()
    assert lines[1] == "dataset,algorithm,case,variant,risk,complexity,deviation,total,Lambda,r,B,M,delta"
    assert lines[2].startswith("syn,pa,general,imb2,0.0,")
