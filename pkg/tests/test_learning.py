"""
Pseudoinverse learning rule and network parameters
"""

import os
import tempfile

import numpy as np
import pytest

from cycle_fixtures import antisym, excitatory_ring, inseparable, non_mc, random_simple
from errors import ConfigError, InvalidArgumentError, NotAdmissibleError
from learning import (
    build_connectivity,
    connectivity_from_json,
    connectivity_to_json,
    network_params,
    penrose_residuals,
    pseudoinverse,
    storage_residual,
    verify_storage,
)
from models import BinaryCycle, Connectivity, beta1_from_beta, beta_from_beta1


def test_pseudoinverse_simple_cases():
    assert np.allclose(pseudoinverse(np.eye(3)), np.eye(3))
    assert np.allclose(pseudoinverse(np.ones((2, 2))), 0.25 * np.ones((2, 2)))
    assert np.allclose(pseudoinverse(np.zeros((2, 3))), np.zeros((3, 2)))


def test_pseudoinverse_matches_numpy():
    rng = np.random.default_rng(11)
    m = rng.normal(size=(4, 7))
    np.testing.assert_allclose(pseudoinverse(m), np.linalg.pinv(m), atol=1e-10)


def test_penrose_identities_on_cycles():
    for cycle in (random_simple(), antisym(), inseparable(), non_mc()):
        sigma = cycle.sigma
        assert max(penrose_residuals(sigma, pseudoinverse(sigma))) < 1e-9


def test_antisym_connectivity():
    conn = build_connectivity(antisym())
    np.testing.assert_allclose(conn.j0, np.eye(3), atol=1e-12)
    np.testing.assert_allclose(conn.j, [[0, 1, 0], [0, 0, 1], [-1, 0, 0]], atol=1e-12)


def test_excitatory_ring_connectivity():
    conn = build_connectivity(excitatory_ring())
    expected = np.roll(np.eye(6), 1, axis=1)
    np.testing.assert_allclose(conn.j, expected, atol=1e-12)
    assert np.all(conn.j > -1e-12)


def test_learned_pair_identities():
    for cycle in (random_simple(), antisym(), inseparable(), non_mc()):
        conn = build_connectivity(cycle)
        j0, j = conn.j0, conn.j
        assert verify_storage(conn)
        assert np.abs(j0 @ j0 - j0).max() < 1e-10
        assert np.abs(j0.T - j0).max() < 1e-10
        assert np.abs(j0 @ j - j).max() < 1e-10
        assert np.abs(j @ j0 - j).max() < 1e-10
        assert np.all(np.diag(j0) >= -1e-12)
        eig = np.sort(np.linalg.eigvalsh(0.5 * (j0 + j0.T)))
        assert np.all(np.minimum(np.abs(eig), np.abs(eig - 1.0)) < 1e-9)
        assert abs(np.trace(j0) - np.linalg.matrix_rank(cycle.sigma)) < 1e-9
        assert np.array_equal(np.sign(j @ cycle.sigma), np.roll(cycle.sigma, -1, axis=1))


def test_mc_cycles_give_identity_projection():
    for cycle in (random_simple(), antisym(), inseparable()):
        np.testing.assert_allclose(build_connectivity(cycle).j0, np.eye(cycle.n_neurons), atol=1e-10)


def test_projection_without_full_rank():
    conn = build_connectivity(non_mc())
    assert abs(np.trace(conn.j0) - 2.0) < 1e-10
    assert not np.allclose(conn.j0, np.eye(3))


def test_build_rejects_non_admissible():
    with pytest.raises(NotAdmissibleError):
        build_connectivity(BinaryCycle(np.array([[1, 1, 1, -1]])))


def test_verify_storage_detects_perturbation():
    conn = build_connectivity(antisym())
    bumped = Connectivity(j0=conn.j0, j=conn.j + 1e-6, source_cycle=conn.source_cycle)
    assert not verify_storage(bumped)
    assert storage_residual(bumped.j, antisym()) > 1e-7
    assert not verify_storage(conn, random_simple())


def test_connectivity_json():
    conn = build_connectivity(inseparable())
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "conn.json")
        connectivity_to_json(conn, path)
        loaded = connectivity_from_json(path)
    np.testing.assert_allclose(loaded.j, conn.j)
    np.testing.assert_allclose(loaded.j0, conn.j0)
    assert loaded.source_cycle == conn.source_cycle


def test_beta_beta1_inverse():
    for beta in (1.05, 1.2, 2.0, 3.0, 5.0):
        assert abs(beta_from_beta1(beta1_from_beta(beta)) - beta) < 1e-10
    with pytest.raises(InvalidArgumentError):
        beta1_from_beta(1.0)


def test_network_params():
    params = network_params(c0=0.6, lam=10.0, tau=2.0, beta=3.0)
    assert abs(params.beta - 3.0) < 1e-10
    assert abs(params.beta_k - 0.3) < 1e-10
    assert abs(params.c1 - 0.4) < 1e-15
    assert abs(params.memory_amplitude - params.beta_k * params.beta1) < 1e-15
    same = network_params(c0=0.6, lam=10.0, tau=2.0, beta1=params.beta1)
    assert abs(same.beta - 3.0) < 1e-10


def test_network_params_rejects_bad_input():
    with pytest.raises(ConfigError):
        network_params(c0=0.5, lam=10.0, beta=3.0, beta1=0.5)
    with pytest.raises(ConfigError):
        network_params(c0=0.5, lam=10.0)
    with pytest.raises(ConfigError):
        network_params(c0=1.5, lam=10.0, beta=3.0)
    with pytest.raises(ConfigError):
        network_params(c0=0.5, lam=-1.0, beta=3.0)
    with pytest.raises(ConfigError):
        network_params(c0=0.5, lam=10.0, tau=-1.0, beta=3.0)
