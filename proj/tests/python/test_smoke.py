import math

import numpy as np
import pytest

import doublecv as dcv


def test_mean_and_covdiag():
    mu, cov = dcv.mean_and_covdiag(np.array([0.0, math.log(3.0)]))
    np.testing.assert_allclose(mu, [0.5, 0.75])
    np.testing.assert_allclose(cov, [0.25, 0.1875])


def test_sampling_is_deterministic_and_binary():
    eta = np.array([-1.0, 0.0, 2.0])
    a = dcv.sample_batch(eta, seed=3, k=5)
    b = dcv.sample_batch(eta, seed=3, k=5)
    assert a.shape == (5, 3)
    assert set(np.unique(a)) <= {0, 1}
    np.testing.assert_array_equal(a, b)
    with pytest.raises(ValueError):
        dcv.sample_batch(eta, seed=3, k=3, antithetic=True)


def test_log_prob_and_score():
    assert dcv.log_prob(np.array([0.0]), np.array([[1]], dtype=np.uint8)) == pytest.approx(math.log(0.5))
    np.testing.assert_allclose(dcv.score(np.array([0.0]), np.array([[0]], dtype=np.uint8)), [-0.5])


def test_rloo_example_and_exact_expectation():
    toy = dcv.ToyObjective(1)
    u, v = dcv.estimate("rloo", np.array([0.0]), np.array([[1], [0]], dtype=np.uint8), toy)
    assert u[0] == pytest.approx(0.001, abs=1e-15)
    assert v[0] == 0.0
    ef, grad = dcv.exact_moments(np.array([0.0]), toy)
    assert ef == pytest.approx(0.250001)
    assert grad[0] == pytest.approx(5e-4)


@pytest.mark.parametrize("name", dcv.estimator_names())
def test_every_estimator_is_unbiased(name):
    eta = np.array([0.4, -1.1])
    toy = dcv.ToyObjective(2, 0.2)
    _, exact = dcv.exact_moments(eta, toy)
    k = 1 if name in ("reinforce", "muprop") else 2
    got = dcv.estimator_expectation_exact(name, eta, toy, k, alpha=0.37)
    np.testing.assert_allclose(got, exact, rtol=1e-10)


def test_linear_zero_variance():
    lin = dcv.LinearObjective(0.5, np.array([2.0, -1.0]))
    eta = np.array([0.3, 1.2])
    assert dcv.estimator_variance_exact("double-cv-mf", eta, lin, 2, alpha=-1.0) < 1e-20


def test_empirical_variance_close_to_exact():
    eta = np.array([0.4, -1.3])
    toy = dcv.ToyObjective(2, 0.2)
    exact = dcv.estimator_variance_exact("rloo", eta, toy, 2)
    emp = dcv.empirical_variance("rloo", eta, toy, 2, replicates=20000, seed=1)
    assert emp == pytest.approx(exact, rel=0.1)


def test_alpha_helpers():
    assert dcv.alpha_grad(np.array([1.0]), np.array([-1.0]), 0.0) == -2.0
    g = [np.array([1.0, 2.0]), np.array([0.5, -0.3])]
    assert dcv.optimal_alpha_k2(g, g) == pytest.approx(1.0)


def test_run_toy_is_deterministic():
    a = dcv.run_toy("double-cv", dim=20, steps=300, seed=5, probe_reps=10)
    b = dcv.run_toy("double-cv", dim=20, steps=300, seed=5, probe_reps=10)
    assert a["records"] == b["records"]
    assert [r["step"] for r in a["records"]] == [0, 100, 200, 300]
    assert set(a["backward_passes_per_step"]) == {2}


def test_run_vae_cost_parity():
    kw = dict(latent=4, hidden=8, batch=5, steps=20, count=32, side=4, probe_every=10, probe_reps=3)
    cv = dcv.run_vae_synthetic("double-cv", **kw)
    rl = dcv.run_vae_synthetic("rloo", **kw)
    assert cv["backward_passes_per_step"] == rl["backward_passes_per_step"]
    assert all(math.isfinite(r["objective"]) for r in cv["records"])


def test_oracle_gates_pass():
    gates = dcv.run_oracle_gates(7)
    assert len(gates) == 6
    assert all(g["passed"] for g in gates), [g for g in gates if not g["passed"]]


def test_idx_errors(tmp_path):
    bad = tmp_path / "bad.idx"
    bad.write_bytes(b"\x00\x00\x08\x01\x00\x00\x00\x00")
    with pytest.raises(RuntimeError):
        dcv.load_mnist_idx(str(bad))


def test_idx_round_trip(tmp_path):
    path = tmp_path / "imgs.idx"
    header = bytes([0, 0, 8, 3]) + (2).to_bytes(4, "big") + (1).to_bytes(4, "big") + (2).to_bytes(4, "big")
    path.write_bytes(header + bytes([0, 255, 51, 102]))
    images, labels, rows, cols = dcv.load_mnist_idx(str(path))
    assert (rows, cols) == (1, 2)
    assert labels == []
    np.testing.assert_allclose(images, [[0.0, 1.0], [0.2, 0.4]])
