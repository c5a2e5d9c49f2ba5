import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dpkd.bounds import (
    beyond_worst_case_bound,
    gaussian_bound,
    kd_mmd_conversion,
    rounding_error,
    tau_report,
    worst_case_bound,
)


class TestWorstCase:
    def test_fixture(self):
        rep = worst_case_bound(4, 1, 2, 100_000, 1.0, 0.01)
        assert rep.preconditions_met
        assert rep.value == pytest.approx(0.4347939849338711, abs=1e-12)
        assert rep.value == pytest.approx(0.4348, abs=5e-5)
        assert rep.terms["noise"] == pytest.approx(0.00591, abs=1e-5)

    def test_noiseless_limit_is_rounding_floor(self):
        rep = worst_case_bound(4, 1, 2, 100, math.inf, 0.01)
        assert rep.value == pytest.approx(0.5 * math.sqrt(2 / math.e))

    def test_unmet_precondition(self):
        rep = worst_case_bound(100, 1, 2, 100, 1.0, 0.01)
        assert not rep.preconditions_met and rep.value is None and rep.explanation

    def test_report_serializes(self):
        d = worst_case_bound(4, 1, 2, 100_000, 1.0, 0.01).to_dict()
        assert d["name"] == "worst-case" and d["inputs"]["R"] == 4


class TestBeyondWorstCase:
    def test_fixture(self):
        rep = beyond_worst_case_bound(100_000, 100, 50, 1.0, 0.01, 0.5, 2)
        assert rep.value == pytest.approx(0.23506198925652064, abs=1e-12)
        assert rep.value == pytest.approx(0.23506, abs=5e-6)

    def test_single_bin(self):
        n, eps, delta, w, d = 1000, 1.0, 0.05, 0.5, 3
        L = math.log(1 / delta)
        rep = beyond_worst_case_bound(n, 0, 1, eps, delta, w, d)
        assert rep.value == pytest.approx(8 * L / (eps * n - 4 * L) + w * math.sqrt(d) / (2 * math.sqrt(math.e)))

    def test_all_light(self):
        rep = beyond_worst_case_bound(100, 100, 0, 1.0, 0.05, 0.5, 1)
        assert not rep.preconditions_met and rep.value is None


def test_rounding_error_fixture():
    assert rounding_error(0.5, 2) == pytest.approx(0.21444097124017672, abs=1e-14)


class TestGaussian:
    def test_wide_bin_fixture(self):
        rep = gaussian_bound(100_000, 1, 1.0, 20.0, 1.0, 0.05)
        assert rep.preconditions_met
        assert rep.terms["rounding"] == pytest.approx(6.065306597126334, abs=1e-12)
        assert rep.value == pytest.approx(6.308463719222647, abs=1e-9)
        assert math.log(20 / math.sqrt(2 * math.pi)) > 2

    def test_first_term_scaling(self):
        a = gaussian_bound(100_000, 1, 1.0, 20.0, 1.0, 0.05).terms["light_mass"]
        b = gaussian_bound(100_000, 1, 1.0, 20.0, 2.0, 0.05).terms["light_mass"]
        assert a / b == pytest.approx(2 ** (1 / 3))

    def test_fine_grid_fails_precondition(self):
        rep = gaussian_bound(1000, 2, 1.0, 0.01, 1.0, 0.05)
        assert not rep.preconditions_met and "ln(1/delta)" in rep.explanation

    def test_second_term_grows_as_w_shrinks(self):
        t = [gaussian_bound(10**9, 1, 1.0, w, 1.0, 0.05).terms for w in (2.0, 1.0, 0.5)]
        assert t[0]["heavy_noise"] < t[1]["heavy_noise"] < t[2]["heavy_noise"]
        assert t[0]["rounding"] > t[1]["rounding"] > t[2]["rounding"]

    def test_notes_flag_exponent(self):
        notes = gaussian_bound(100_000, 3, 1.0, 2.0, 1.0, 0.05).notes
        assert any("exponent 2" in s for s in notes)
        assert any("constant is 8" in s for s in notes)

    def test_small_n_raises(self):
        with pytest.raises(ValueError):
            gaussian_bound(1, 1, 1.0, 1.0, 1.0, 0.05)


class TestConversion:
    @pytest.mark.parametrize("kind, value, out", [
        ("kd_to_mmd", 0.02, 0.2), ("mmd_to_kd", 0.1, 0.1), ("kd_to_mmd", 0.0, 0.0), ("mmd_to_kd", 0.0, 0.0),
    ])
    def test_examples(self, kind, value, out):
        assert kd_mmd_conversion(kind, value) == pytest.approx(out)

    def test_negative(self):
        with pytest.raises(ValueError):
            kd_mmd_conversion("kd_to_mmd", -1e-3)

    def test_bad_type(self):
        with pytest.raises(ValueError):
            kd_mmd_conversion("mmd", 0.1)


def test_tau_report():
    rep = tau_report(2, 5, 100, 1.0, 0.1)
    assert rep.value == pytest.approx(6 * math.log(3040))
    bad = tau_report(2, 5, 100, 1.0, 2.0)
    assert not bad.preconditions_met and bad.value is None


def _value(rep):
    return rep.value if rep.preconditions_met else None


@settings(max_examples=80, deadline=None)
@given(
    n=st.integers(1000, 10**7), factor=st.floats(1.01, 10.0),
    eps=st.floats(0.05, 20.0), eps_factor=st.floats(1.01, 10.0),
    w=st.floats(0.1, 2.0), d=st.integers(1, 3), delta=st.floats(0.001, 0.5),
)
def test_monotone_in_n_and_epsilon(n, factor, eps, eps_factor, w, d, delta):
    n2 = int(n * factor) + 1
    cases = [
        lambda n_, e_: worst_case_bound(4.0, w, d, n_, e_, delta),
        lambda n_, e_: beyond_worst_case_bound(n_, 10, 5, e_, delta, w, d),
        lambda n_, e_: gaussian_bound(n_, d, 1.0, w, e_, delta),
    ]
    for make in cases:
        base = _value(make(n, eps))
        if base is None:
            continue
        more_n, more_eps = _value(make(n2, eps)), _value(make(n, eps * eps_factor))
        assert more_n is not None and more_n <= base * (1 + 1e-12)
        assert more_eps is not None and more_eps <= base * (1 + 1e-12)


@settings(max_examples=50, deadline=None)
@given(v=st.floats(0.0, 100.0))
def test_conversion_round_trip(v):
    assert kd_mmd_conversion("kd_to_mmd", v) ** 2 / 2 == pytest.approx(v, abs=1e-12)
