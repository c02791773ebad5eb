"""Randomized border rounding: distribution laws, support enumeration,
and the two-condition ratio certification."""

import math

import numpy as np
import pytest

from multiprice import (
    DomainError,
    PriceSet,
    RandomizedProcedure,
    ValidationError,
    build_perturbed,
    build_value_function,
    certified_lower_bounds,
    enumerate_seed_support,
    round_borders,
    single_unit_procedure,
    verify_conditions,
)
from multiprice.perturb import PerturbedValueFunction

from test_valuefn import random_priceset


class TestRoundBorders:
    def test_endpoints_pinned(self):
        vf = build_value_function([150.0, 450.0])
        for w in (0.0, 0.3, 0.999):
            b = round_borders(vf, 7, w)
            assert b[0] == 0.0 and b[-1] == 1.0

    def test_grid_membership(self):
        vf = build_value_function([1.0, 2.0, 5.0])
        for k in (1, 3, 10):
            for w in (0.0, 0.25, 0.5, 0.9):
                for b in round_borders(vf, k, w):
                    assert abs(b * k - round(b * k)) < 1e-9

    def test_up_down_rule(self):
        vf = build_value_function([150.0, 450.0])
        L1 = vf.borders[1]
        k = 4
        frac = L1 * k - math.floor(L1 * k)
        up = round_borders(vf, k, frac - 1e-6)[1]
        down = round_borders(vf, k, frac + 1e-6)[1]
        assert up == pytest.approx((math.floor(L1 * k) + 1) / k)
        assert down == pytest.approx(math.floor(L1 * k) / k)

    def test_exact_multiple_never_moves(self):
        # with prices {1, xi} at k large enough some synthetic border can be
        # exact; easier: m=1 has the only interior borders 0 and 1
        vf = build_value_function([5.0])
        for w in (0.0, 0.42, 0.99):
            assert round_borders(vf, 3, w) == [0.0, 1.0]

    def test_bad_args(self):
        vf = build_value_function([1.0])
        with pytest.raises(DomainError):
            round_borders(vf, 0, 0.5)
        with pytest.raises(DomainError):
            round_borders(vf, 2, 1.0)


class TestDistributionLaws:
    def test_expectation_and_distortion(self):
        rng = np.random.default_rng(29)
        for _ in range(100):
            ps = random_priceset(rng, m_max=5)
            vf = build_value_function(ps)
            k = int(rng.integers(1, 30))
            proc = enumerate_seed_support(vf, k)
            probs = [rho for rho, _ in proc.configurations]
            assert sum(probs) == pytest.approx(1.0, abs=1e-12)
            for j in range(vf.m + 1):
                mean = sum(
                    rho * pvf.tilde_borders[j]
                    for rho, pvf in proc.configurations
                )
                # endpoints are pinned; interior borders unbiased
                assert mean == pytest.approx(vf.borders[j], abs=1e-12)
            for _, pvf in proc.configurations:
                for j in range(vf.m + 1):
                    assert abs(pvf.tilde_borders[j] - vf.borders[j]) <= 1.0 / k + 1e-12
                # comonotone: realized borders stay sorted
                assert all(
                    a <= b + 1e-12
                    for a, b in zip(pvf.tilde_borders, pvf.tilde_borders[1:])
                )

    def test_support_size(self):
        rng = np.random.default_rng(31)
        for _ in range(50):
            vf = build_value_function(random_priceset(rng, m_max=6))
            proc = enumerate_seed_support(vf, int(rng.integers(1, 50)))
            assert len(proc.configurations) <= vf.m + 1

    def test_support_matches_sampling(self):
        vf = build_value_function([150.0, 450.0])
        k = 4
        proc = enumerate_seed_support(vf, k)
        rng = np.random.default_rng(0)
        counts = {}
        n = 20000
        for _ in range(n):
            pvf = build_perturbed(vf, k, rng.random())
            counts[pvf.tilde_borders] = counts.get(pvf.tilde_borders, 0) + 1
        for rho, pvf in proc.configurations:
            emp = counts.get(pvf.tilde_borders, 0) / n
            assert emp == pytest.approx(rho, abs=4 * math.sqrt(rho / n) + 1e-3)


class TestPerturbedValues:
    def test_exact_borders_recover_ideal(self):
        # when every border happens to be a grid multiple the tabulated
        # values telescope back to the ideal curve
        vf = build_value_function([150.0, 450.0])
        k = 1000000  # borders round by < 1e-6, values nearly ideal
        pvf = build_perturbed(vf, k, 0.5)
        for q in (0.0, 0.25, 0.5, 0.75, 1.0):
            assert pvf.value(q) == pytest.approx(vf.phi(q), abs=1e-3)

    def test_top_value_and_zero(self):
        vf = build_value_function([1.0, 2.0, 4.0])
        for w in (0.1, 0.6, 0.95):
            pvf = build_perturbed(vf, 5, w)
            assert pvf.value(0.0) == 0.0
            assert pvf.value(1.0) == pytest.approx(4.0, rel=0.5)

    def test_monotone_grid(self):
        rng = np.random.default_rng(37)
        for _ in range(40):
            vf = build_value_function(random_priceset(rng, m_max=4))
            pvf = build_perturbed(vf, int(rng.integers(1, 20)), rng.random())
            g = pvf.grid_values
            assert all(a <= b + 1e-12 for a, b in zip(g, g[1:]))

    def test_large_k_proxy_gap(self):
        # expected border value converges to the exact price as k grows
        vf = build_value_function([150.0, 450.0])
        proc = enumerate_seed_support(vf, 10000)
        for j in (1, 2):
            expected = sum(rho * pvf.border_value(j) for rho, pvf in proc.configurations)
            assert abs(expected - vf.priceset.price(j)) < 0.2

    def test_empty_segment_when_m_exceeds_k(self):
        vf = build_value_function([1.0, 2.0, 4.0, 8.0])
        proc = enumerate_seed_support(vf, 2)  # m=4 > k=2: some spans collapse
        for _, pvf in proc.configurations:
            spans = [
                pvf.tilde_borders[j + 1] - pvf.tilde_borders[j]
                for j in range(pvf.m)
            ]
            assert min(spans) >= -1e-12
        # values still well-defined and monotone
        for _, pvf in proc.configurations:
            g = pvf.grid_values
            assert all(a <= b + 1e-12 for a, b in zip(g, g[1:]))

    def test_value_rejects_off_grid(self):
        pvf = build_perturbed(build_value_function([1.0]), 4, 0.3)
        with pytest.raises(DomainError):
            pvf.value(0.3)


class TestSingleUnit:
    def test_structure(self):
        proc = single_unit_procedure(PriceSet([250.0, 750.0]))
        assert proc.k == 1
        assert len(proc.configurations) == 2
        rhos = [rho for rho, _ in proc.configurations]
        assert rhos == pytest.approx([0.6, 0.4], abs=1e-12)
        tops = [pvf.grid_values[1] for _, pvf in proc.configurations]
        assert tops[0] == pytest.approx(250.0 / 0.6, abs=1e-9)
        assert tops[1] == pytest.approx(750.0 / 0.6, abs=1e-9)

    def test_certifies_G_over_2(self):
        ps = PriceSet([250.0, 750.0])
        vf = build_value_function(ps)
        proc = single_unit_procedure(ps)
        ok, report = verify_conditions(proc, ps, 1, vf.G / 2.0)
        assert ok
        # the bound is tight: both conditions hold with (near) zero slack
        assert report["feasibility_min_slack"] == pytest.approx(0.0, abs=1e-9)
        ok_inflated, _ = verify_conditions(proc, ps, 1, vf.G / 2.0 * 1.01)
        assert not ok_inflated

    def test_random_sets(self):
        rng = np.random.default_rng(41)
        for _ in range(25):
            ps = random_priceset(rng, m_max=5)
            vf = build_value_function(ps)
            ok, _ = verify_conditions(
                single_unit_procedure(ps), ps, 1, vf.G / 2.0
            )
            assert ok


class TestVerifier:
    def test_certified_bounds_pass(self):
        rng = np.random.default_rng(43)
        for _ in range(20):
            ps = random_priceset(rng, m_max=4)
            vf = build_value_function(ps)
            k = int(rng.integers(1, 12))
            c = certified_lower_bounds(vf, k)["perturbation"]
            ok, _ = verify_conditions(enumerate_seed_support(vf, k), ps, k, c)
            assert ok

    def test_single_price_improved_bound(self):
        ps = PriceSet([100.0])
        vf = build_value_function(ps)
        for k in (1, 2, 5, 10, 100):
            bounds = certified_lower_bounds(vf, k)
            c = bounds["single_price"]
            assert c > bounds["perturbation"] - 1e-12
            proc = enumerate_seed_support(vf, k)
            ok, _ = verify_conditions(proc, ps, k, c)
            assert ok
            ok_inflated, _ = verify_conditions(proc, ps, k, c * 1.05)
            assert not ok_inflated

    def test_bounds_k1_closed_form(self):
        ps = PriceSet([1.0, 3.0])
        vf = build_value_function(ps)
        b = certified_lower_bounds(vf, 1)
        assert b["single_unit"] == pytest.approx(vf.G / 2.0, abs=1e-15)
        assert b["best"] >= b["perturbation"]

    def test_rejects_nonpositive_c(self):
        ps = PriceSet([1.0])
        proc = single_unit_procedure(ps)
        with pytest.raises(DomainError):
            verify_conditions(proc, ps, 1, 0.0)

    def test_procedure_validation(self):
        pvf = PerturbedValueFunction(
            k=1, tilde_borders=(0.0, 1.0), grid_values=(0.0, 1.0)
        )
        with pytest.raises(ValidationError):
            RandomizedProcedure(
                priceset=PriceSet([1.0]), k=1, configurations=((0.5, pvf),)
            )
        with pytest.raises(ValidationError):
            RandomizedProcedure(
                priceset=PriceSet([1.0]),
                k=1,
                configurations=((1.5, pvf), (-0.5, pvf)),
            )
