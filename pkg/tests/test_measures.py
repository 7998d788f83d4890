import math

import numpy as np
import pytest
from scipy import integrate
from scipy.stats import beta as beta_dist

from fragtail import measures as M
from fragtail.errors import ConfigError, UnsupportedSampling
from fragtail.measures import (FragmentVector, from_config,
                               integrability_diagnostic, sample_split,
                               split_cdf, split_icdf, total_mass)


def rng(seed=0):
    return np.random.Generator(np.random.PCG64(seed))


def test_identical_two_always_halves():
    spec = M.make_identical(2)
    g = rng(1)
    for _ in range(50):
        fv = sample_split(spec, g)
        assert fv.parts == (0.5, 0.5)
        assert fv.dust_fraction == 0.0


def test_uniform_two_largest_piece_mean():
    # E[max(U, 1-U)] = 3/4 by direct integration
    spec = M.make_uniform(2)
    g = rng(2)
    draws = np.array([sample_split(spec, g).parts[0] for _ in range(100000)])
    se = draws.std(ddof=1) / math.sqrt(len(draws))
    assert abs(draws.mean() - 0.75) <= 4.0 * se


def test_degenerate_atom_rejected():
    with pytest.raises(ConfigError):
        M.make_atomic([(1.0, (1.0,))])
    with pytest.raises(ConfigError):
        M.make_atomic([(1.0, (1.0, 0.0))])


def test_atom_validation():
    with pytest.raises(ConfigError):
        M.make_atomic([(0.0, (0.5, 0.5))])       # zero weight
    with pytest.raises(ConfigError):
        M.make_atomic([(1.0, (0.3, 0.5))])        # not nonincreasing
    with pytest.raises(ConfigError):
        M.make_atomic([(1.0, (0.7, 0.7))])        # sums above 1
    with pytest.raises(ConfigError):
        M.make_atomic([])


def test_total_mass():
    assert total_mass(M.make_identical(2)) == 1.0
    spec = M.make_atomic([(0.3, (0.5, 0.5)), (0.7, (0.9, 0.1))])
    assert abs(total_mass(spec) - 1.0) < 1e-15
    scaled = M.make_atomic([(0.3, (0.5, 0.5)), (0.7, (0.9, 0.1))], scale=2.0)
    assert abs(total_mass(scaled) - 2.0) < 1e-15
    with pytest.raises(UnsupportedSampling):
        total_mass(M.make_stable(1.5))
    with pytest.raises(UnsupportedSampling):
        sample_split(M.make_ford(0.5), rng(3))


def test_rescaling_leaves_split_law_unchanged():
    a = M.make_beta(2.0, 3.0)
    b = M.make_beta(2.0, 3.0, scale=5.0)
    ga, gb = rng(7), rng(7)
    for _ in range(200):
        assert sample_split(a, ga).parts == sample_split(b, gb).parts


def test_fragment_vector_invariants_random_specs():
    g = rng(11)
    for _ in range(100):
        k = int(g.integers(2, 5))
        raw = np.sort(g.random(k))[::-1]
        raw = raw / raw.sum() * g.uniform(0.5, 1.0)  # allow dust
        raw = raw[raw > 1e-9]
        if raw[0] >= 1.0 or len(raw) == 0:
            continue
        spec = M.make_atomic([(1.0, tuple(raw))])
        fv = sample_split(spec, g)
        parts = np.array(fv.parts)
        assert np.all(np.diff(parts) <= 0)
        total = math.fsum(fv.parts) + fv.dust_fraction
        assert abs(total - 1.0) <= 4 * np.finfo(float).eps


def test_fragment_vector_validation():
    with pytest.raises(ConfigError):
        FragmentVector(parts=(0.6, 0.3), dust_fraction=0.2)  # sums to 1.1
    with pytest.raises(ConfigError):
        FragmentVector(parts=(0.3, 0.6), dust_fraction=0.1)  # ordering


@pytest.mark.parametrize("a,b", [(2.0, 3.0), (0.8, 0.9), (1.0, 1.0)])
def test_sampler_matches_analytic_cdf(a, b):
    spec = M.make_beta(a, b)
    g = rng(13)
    n = 10000
    draws = np.asarray(split_icdf(spec, g.random(n)))
    x = np.sort(draws)
    f = np.asarray(split_cdf(spec, x))
    ks = max(np.max(np.arange(1, n + 1) / n - f),
             np.max(f - np.arange(0, n) / n))
    assert ks < 1.63 / math.sqrt(n)


def test_icdf_round_trip_accuracy():
    spec = M.make_beta(2.0, 3.0)
    q = np.linspace(1e-6, 1.0 - 1e-6, 2001)
    u = np.asarray(split_icdf(spec, q))
    back = np.asarray(split_cdf(spec, u))
    assert np.max(np.abs(back - q)) < 1e-9


def test_integrability_diagnostic_atomic_exact():
    finite, value = integrability_diagnostic(M.make_identical(2))
    assert finite and abs(value - 2.0) < 1e-14


def test_integrability_diagnostic_beta():
    finite, value = integrability_diagnostic(M.make_beta(2.0, 3.0))
    assert finite
    # oracle: E[1/min(B, 1-B)] by direct quadrature of the Beta density
    pdf = beta_dist(2.0, 3.0).pdf
    oracle, _ = integrate.quad(
        lambda u: pdf(u) / min(u, 1.0 - u), 0.0, 1.0, points=[0.5], limit=200)
    assert abs(value - oracle) / oracle < 1e-6

    finite_u, value_u = integrability_diagnostic(M.make_uniform(2))
    assert finite_u is False and value_u == math.inf
    # min(a, b) = 1 is the critical case: still divergent
    finite_c, _ = integrability_diagnostic(M.make_beta(1.0, 2.0))
    assert finite_c is False
    finite_a, _ = integrability_diagnostic(M.make_stable(1.5))
    assert finite_a is None


def test_from_config_and_errors():
    spec = from_config({"family": "beta", "params": {"a": 2, "b": 3},
                        "scale": 1.5})
    assert spec.family == "beta" and spec.scale == 1.5
    with pytest.raises(ConfigError):
        from_config({"family": "nope", "params": {}})
    with pytest.raises(ConfigError):
        from_config({"family": "beta", "params": {"a": 2}})
    with pytest.raises(ConfigError):
        from_config({"family": "stable", "params": {"gamma": 3.0}})
    with pytest.raises(ConfigError):
        from_config({"family": "beta-splitting", "params": {"beta": -0.5}})


def test_intrinsic_alpha():
    assert M.intrinsic_alpha(M.make_stable(2.0)) == -0.5
    assert M.intrinsic_alpha(M.make_ford(0.3)) == -0.3
    assert abs(M.intrinsic_alpha(M.make_beta_splitting(-1.6)) - (-0.6)) < 1e-15
    assert M.intrinsic_alpha(M.make_uniform(2)) is None


def test_uniform_k_three_is_analytic_only():
    spec = M.make_uniform(3)
    assert not spec.is_finite
    with pytest.raises(UnsupportedSampling):
        sample_split(spec, rng(5))
