"""DiscreteInput, mixture outputs, mutual information, and KKT residuals."""

import json
import math

import numpy as np
import pytest

from acawgn import (
    DiscreteInput,
    QuadratureSpec,
    adaptive_quad,
    kkt_residual,
    marginal_information_density,
    mixture_density,
    mutual_information,
    std_normal_pdf,
)

from oracles import mc_mutual_information, quad_oracle

RNG = np.random.default_rng(99)


def random_input(rng, k_max=6, a_lo=0.5, a_hi=5.0, margin=0.0):
    K = int(rng.integers(1, k_max + 1))
    A = float(rng.uniform(a_lo, a_hi))
    locs = np.sort(rng.uniform(-A + margin, A - margin, K))
    while K > 1 and np.min(np.diff(locs)) < 1e-3:
        locs = np.sort(rng.uniform(-A + margin, A - margin, K))
    w = rng.dirichlet(np.ones(K))
    return DiscreteInput.normalized(A, locs, w)


class TestDiscreteInput:
    def test_validation(self):
        with pytest.raises(ValueError):
            DiscreteInput(A=-1.0, locations=(0.0,), weights=(1.0,))
        with pytest.raises(ValueError):
            DiscreteInput(A=1.0, locations=(), weights=())
        with pytest.raises(ValueError):
            DiscreteInput(A=1.0, locations=(0.5, 0.2), weights=(0.5, 0.5))
        with pytest.raises(ValueError):
            DiscreteInput(A=1.0, locations=(0.0, 1.5), weights=(0.5, 0.5))
        with pytest.raises(ValueError):
            DiscreteInput(A=1.0, locations=(0.0, 0.5), weights=(0.7, 0.7))
        with pytest.raises(ValueError):
            DiscreteInput(A=1.0, locations=(0.0, 0.5), weights=(-0.1, 1.1))

    def test_normalized_merges_and_prunes(self):
        pi = DiscreteInput.normalized(
            2.0,
            [0.5, 0.5 + 5e-8, -1.0, 1.9],
            [0.3, 0.3, 0.4, 1e-12],
        )
        assert pi.k == 2
        assert pi.locations[0] == pytest.approx(-1.0)
        assert pi.locations[1] == pytest.approx(0.5, abs=1e-7)
        assert sum(pi.weights) == pytest.approx(1.0, abs=1e-15)

    def test_json_round_trip(self):
        pi = DiscreteInput(A=1.5, locations=(-1.5, 0.25, 1.5), weights=(0.4, 0.2, 0.4))
        blob = pi.to_json()
        again = DiscreteInput.from_json(blob)
        assert again == pi
        payload = json.loads(blob)
        assert set(payload) == {"A", "points", "weights"}


class TestMixtureDensity:
    def test_point_mass_is_standard_normal(self):
        f = mixture_density(DiscreteInput(A=1.0, locations=(0.0,), weights=(1.0,)))
        ys = np.linspace(-8, 8, 101)
        assert np.allclose(f(ys), std_normal_pdf(ys), rtol=0, atol=1e-16)

    def test_symmetric_pair_at_origin(self):
        f = mixture_density(DiscreteInput(A=1.0, locations=(-1.0, 1.0), weights=(0.5, 0.5)))
        assert f(0.0) == pytest.approx(std_normal_pdf(1.0), abs=1e-17)

    def test_random_mixture_normalized(self):
        for _ in range(5):
            pi = random_input(RNG)
            f = mixture_density(pi)
            total = adaptive_quad(f, f.lo, f.hi)
            assert total == pytest.approx(1.0, abs=1e-9)

    def test_even_input_even_density(self):
        pi = DiscreteInput(A=2.0, locations=(-1.7, 0.0, 1.7), weights=(0.3, 0.4, 0.3))
        f = mixture_density(pi)
        ys = RNG.uniform(0, 6, 40)
        assert np.allclose(f(ys), f(-ys), rtol=1e-13, atol=1e-300)

    def test_log_pdf_matches_log_of_pdf(self):
        pi = DiscreteInput(A=2.0, locations=(-2.0, 0.3), weights=(0.6, 0.4))
        f = mixture_density(pi)
        ys = np.linspace(-5, 5, 31)
        assert np.allclose(f.log_pdf(ys), np.log(f(ys)), atol=1e-12)


class TestMutualInformation:
    def test_point_mass_zero(self):
        pi = DiscreteInput(A=1.0, locations=(0.3,), weights=(1.0,))
        assert abs(mutual_information(pi)) <= 1e-8

    def test_vanishing_amplitude(self):
        pi = DiscreteInput(A=0.01, locations=(-0.01, 0.01), weights=(0.5, 0.5))
        assert mutual_information(pi) <= 1e-3

    def test_against_monte_carlo(self):
        pi = DiscreteInput(A=1.0, locations=(-1.0, 1.0), weights=(0.5, 0.5))
        exact = mutual_information(pi)
        est, se = mc_mutual_information(pi.locations, pi.weights, 10_000_000, seed=42)
        assert abs(exact - est) <= 3 * se

    def test_upper_bounds(self):
        for _ in range(5):
            pi = random_input(RNG)
            info = mutual_information(pi)
            assert -1e-9 <= info <= math.log(pi.k) + 1e-6
            assert info <= 0.5 * math.log(1 + pi.A**2) + 1e-6


class TestMarginalInformationDensity:
    def test_point_mass_at_own_atom(self):
        pi = DiscreteInput(A=1.0, locations=(0.0,), weights=(1.0,))
        assert abs(marginal_information_density(pi, 0.0)) <= 1e-8

    def test_symmetry(self):
        pi = DiscreteInput(A=1.0, locations=(-1.0, 1.0), weights=(0.5, 0.5))
        i_pos = marginal_information_density(pi, 1.0)
        i_neg = marginal_information_density(pi, -1.0)
        assert i_pos == pytest.approx(i_neg, abs=1e-9)

    def test_out_of_range_rejected(self):
        pi = DiscreteInput(A=1.0, locations=(0.0,), weights=(1.0,))
        with pytest.raises(ValueError):
            marginal_information_density(pi, 1.5)

    def test_mixture_identity(self):
        # I = sum_j w_j i(x_j), with i evaluated by an independent integrator
        for pi in (
            DiscreteInput(A=1.0, locations=(-1.0, 1.0), weights=(0.5, 0.5)),
            random_input(np.random.default_rng(3), margin=0.05),
        ):
            info = mutual_information(pi)
            total = 0.0
            for xj, wj in zip(pi.locations, pi.weights):
                total += wj * marginal_information_density(pi, xj)
            assert total == pytest.approx(info, abs=1e-7)

    def test_independent_quadrature_route(self):
        pi = DiscreteInput(A=1.5, locations=(-1.5, 0.5), weights=(0.55, 0.45))
        f = mixture_density(pi)
        x = 0.5

        def integrand(y):
            py = std_normal_pdf(y - x)
            return py * (math.log(py) - math.log(f(y))) if py > 0 else 0.0

        ref = quad_oracle(integrand, x - 12, x + 12)
        assert marginal_information_density(pi, x) == pytest.approx(ref, abs=1e-9)


class TestKktResidual:
    def test_optimal_binary_small_amplitude(self):
        # binary +-A is capacity-achieving at A = 0.8
        pi = DiscreteInput(A=0.8, locations=(-0.8, 0.8), weights=(0.5, 0.5))
        r_support, r_global = kkt_residual(pi)
        assert r_support <= 1e-6
        assert r_global <= 1e-6

    def test_binary_far_from_optimal_at_large_amplitude(self):
        pi = DiscreteInput(A=6.0, locations=(-6.0, 6.0), weights=(0.5, 0.5))
        _, r_global = kkt_residual(pi)
        assert r_global > 0.01

    def test_point_mass_suboptimal(self):
        pi = DiscreteInput(A=1.0, locations=(0.0,), weights=(1.0,))
        _, r_global = kkt_residual(pi)
        assert r_global > 0.0
