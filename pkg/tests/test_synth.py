import numpy as np
import pytest

from finder.errors import DimensionError
from finder.kle import eigendecompose, empirical_covariance, empirical_mean
from finder.subspace import aca_subspace, complement_basis
from finder.synth import (
    LAWS,
    SynthSpec,
    random_orthogonal,
    sample,
    scenario_dataset,
    two_class_scenario,
)


def spec_from(rng, f, lam, law="gaussian", seed=0):
    q = random_orthogonal(f, int(rng.integers(1 << 30)))[:, : len(lam)]
    return SynthSpec(rng.standard_normal(f), np.asarray(lam, float), q, law, seed)


def principal_angle(u, v):
    return float(np.arccos(np.clip(abs(u @ v), 0.0, 1.0)))


def test_rank_zero_is_constant():
    mu = np.array([1.0, -2.0, 3.0])
    x = sample(SynthSpec(mu, [], np.zeros((3, 0))), 5).values
    np.testing.assert_array_equal(x, np.tile(mu, (5, 1)))


def test_rademacher_two_point_support():
    mu = np.array([0.5, 0.5])
    x = sample(SynthSpec(mu, [1.0], np.array([[1.0], [0.0]]), "rademacher", 3), 200).values
    offsets = x - mu
    assert np.all(offsets[:, 1] == 0)
    assert set(np.unique(offsets[:, 0])) == {-1.0, 1.0}


@pytest.mark.parametrize("law", LAWS)
def test_laws_have_zero_mean_unit_variance(law):
    spec = SynthSpec(np.zeros(1), [1.0], np.ones((1, 1)), law, 9)
    y = sample(spec, 200_000).values[:, 0]
    assert abs(y.mean()) < 0.01 and abs(y.var() - 1.0) < 0.02


def test_same_seed_same_samples():
    spec = spec_from(np.random.default_rng(0), 5, [3.0, 1.0])
    np.testing.assert_array_equal(sample(spec, 10).values, sample(spec, 10).values)
    assert not np.array_equal(sample(spec, 10).values, sample(spec, 10, seed=1).values)


def test_covariance_consistency():
    spec = spec_from(np.random.default_rng(1), 8, [4.0, 2.0, 1.0, 0.5])
    x = sample(spec, 20_000).values
    c = empirical_covariance(x)
    truth = spec.covariance()
    assert np.linalg.norm(c - truth) / np.linalg.norm(truth) < 0.05


@pytest.mark.parametrize("law", LAWS)
def test_eigen_recovery_any_law(law):
    lam = [5.0, 3.0, 1.5, 0.5]
    spec = spec_from(np.random.default_rng(2), 10, lam, law, seed=21)
    x = sample(spec, 20_000).values
    mu = empirical_mean(x)
    eig = eigendecompose(empirical_covariance(x, mu))
    np.testing.assert_allclose(eig.eigenvalues[:4], lam, rtol=0.10)
    for r in range(4):
        assert principal_angle(eig.eigenvectors[:, r], spec.eigenvectors[:, r]) < 0.1


@pytest.mark.parametrize("law", LAWS)
def test_mean_recovery(law):
    n, lam = 20_000, [5.0, 3.0, 1.5, 0.5]
    spec = spec_from(np.random.default_rng(4), 10, lam, law, seed=8)
    mu = empirical_mean(sample(spec, n).values)
    # five standard errors of the worst-case coordinate
    assert np.max(np.abs(mu - spec.mean)) < 5 * np.sqrt(lam[0] / n)


def test_invalid_specs():
    with pytest.raises(ValueError):
        SynthSpec(np.zeros(2), [1.0, 1.0], np.array([[1.0, 1.0], [0.0, 1.0]]))
    with pytest.raises(ValueError):
        SynthSpec(np.zeros(1), [-1.0], np.ones((1, 1)))
    with pytest.raises(ValueError):
        SynthSpec(np.zeros(1), [1.0], np.ones((1, 1)), "cauchy")
    with pytest.raises(ValueError):
        sample(SynthSpec(np.zeros(1), [], np.zeros((1, 0))), 0)


def test_config_round_trip():
    spec = spec_from(np.random.default_rng(3), 4, [2.0, 0.25], "uniform", seed=42)
    back = SynthSpec.from_config(spec.to_config())
    np.testing.assert_array_equal(back.mean, spec.mean)
    np.testing.assert_array_equal(back.eigenvalues, spec.eigenvalues)
    np.testing.assert_array_equal(back.eigenvectors, spec.eigenvectors)
    assert (back.coefficient_law, back.seed) == ("uniform", 42)


# --- two-class scenario -------------------------------------------------------

def _span(p):
    return p @ p.T


def test_full_overlap_same_span():
    a, b = two_class_scenario(5, None, [3.0, 1.0], [2.0, 2.0], 2)
    np.testing.assert_allclose(_span(a.eigenvectors), _span(b.eigenvectors), atol=1e-12)


def test_no_overlap_disjoint_blocks():
    a, b = two_class_scenario(4, np.ones(4), [2.0, 1.0], [2.0, 1.0], 0)
    np.testing.assert_allclose(_span(a.eigenvectors), np.diag([1.0, 1, 0, 0]))
    np.testing.assert_allclose(_span(b.eigenvectors), np.diag([0.0, 0, 1, 1]))
    np.testing.assert_array_equal(a.mean, b.mean)


def test_overflow_rejected():
    with pytest.raises(DimensionError):
        two_class_scenario(4, None, [1.0, 1.0, 1.0], [1.0, 1.0], 0)
    with pytest.raises(DimensionError):
        two_class_scenario(4, None, [1.0], [1.0], 2)


def test_aca_s_objective_on_true_covariances():
    a, b = two_class_scenario(8, None, [4.0, 3.0], [4.0, 2.5, 1.5, 0.7], 1)
    eig_a = eigendecompose(a.covariance(), mean=a.mean)
    t = aca_subspace(eig_a, b.covariance(), 2, 3, "S")
    # B restricted to the complement of A has eigenvalues {2.5, 1.5, 0.7, 0, 0, 0}
    assert t.objective == pytest.approx(0.0, abs=1e-10)
    t = aca_subspace(eig_a, b.covariance(), 2, 4, "L")
    assert t.objective == pytest.approx(2.5 + 1.5 + 0.7, abs=1e-10)
    v = complement_basis(eig_a, 2).vectors
    g = np.sort(np.linalg.eigvalsh(v.T @ b.covariance() @ v))
    assert aca_subspace(eig_a, b.covariance(), 2, 2, "S").objective == pytest.approx(g[:2].sum(), abs=1e-10)


def test_noise_and_rotation_extensions():
    a, b = two_class_scenario(6, None, [3.0], [3.0, 2.0], 1, noise=0.1, rotation_seed=4)
    assert a.eigenvalues.size == 6 and b.eigenvalues.size == 6
    assert np.allclose(np.sort(a.eigenvalues)[:5], 0.1)
    rot = random_orthogonal(6, 4)
    np.testing.assert_allclose(a.eigenvectors[:, 0], rot[:, 0], atol=1e-12)


def test_scenario_dataset_labels():
    a, b = two_class_scenario(4, None, [1.0], [1.0], 0, seed=5)
    ds = scenario_dataset(a, b, 3, 2)
    assert ds.values.shape == (5, 4)
    assert list(ds.labels) == ["A", "A", "A", "B", "B"]
