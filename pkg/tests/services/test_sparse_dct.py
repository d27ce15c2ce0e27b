import numpy as np
import pytest

from exceptions.common import ServiceException
from models.patches import PatchSet
from services import patches, sparse_dct


def test_basis_is_orthonormal():
    for side in (1, 2, 4, 8):
        b = sparse_dct.build_basis(side).basis
        eye = np.eye(side * side)
        assert np.allclose(b.T @ b, eye, atol=1e-10)
        assert np.allclose(b @ b.T, eye, atol=1e-10)


def test_constant_patch_has_only_dc():
    basis = sparse_dct.build_basis(4)
    coeffs = sparse_dct.analyze(basis, np.full(16, 0.3))
    assert np.isclose(coeffs[0], 0.3 * 4.0)
    assert np.allclose(coeffs[1:], 0.0, atol=1e-12)


def test_round_trip_and_parseval(rng):
    basis = sparse_dct.build_basis(8)
    patch = rng.standard_normal(64)
    coeffs = sparse_dct.analyze(basis, patch)
    assert np.allclose(sparse_dct.synthesize(basis, coeffs), patch, atol=1e-12)

    small = sparse_dct.build_basis(2)
    assert np.isclose(np.linalg.norm(sparse_dct.analyze(small, np.array([1.0, -1, 1, -1]))), 2.0)


def test_analyze_rejects_wrong_dimension():
    with pytest.raises(ServiceException):
        sparse_dct.analyze(sparse_dct.build_basis(2), np.ones(5))


def test_soft_threshold_examples():
    assert sparse_dct.soft_threshold(np.array([3.0]), 1.0)[0] == 2.0
    assert sparse_dct.soft_threshold(np.array([-0.5]), 1.0)[0] == 0.0
    z = np.array([-2.0, 0.1, 5.0])
    assert np.array_equal(sparse_dct.soft_threshold(z, 0.0), z)
    with pytest.raises(ServiceException):
        sparse_dct.soft_threshold(z, -0.1)


def test_soft_threshold_minimizes_l1_prox_by_grid_search(rng):
    tau = 0.3
    grid = np.arange(-3.0, 3.0, 1e-4)
    for value in rng.uniform(-2.0, 2.0, size=10):
        brute = grid[np.argmin(tau * np.abs(grid) + 0.5 * (grid - value) ** 2)]
        assert abs(sparse_dct.soft_threshold(np.array([value]), tau)[0] - brute) <= 1e-4


def test_soft_threshold_is_nonexpansive(rng):
    for _ in range(20):
        a, b = rng.standard_normal(16), rng.standard_normal(16)
        sa, sb = sparse_dct.soft_threshold(a, 0.4), sparse_dct.soft_threshold(b, 0.4)
        assert np.linalg.norm(sa - sb) <= np.linalg.norm(a - b) + 1e-12


def _patch_set(rng, h=8, w=8, side=2, stride=2):
    grid = patches.build_grid(h, w, side, stride)
    return patches.extract(grid, rng.standard_normal(h * w))


def test_z_step_without_penalty_is_analysis(rng):
    ps = _patch_set(rng)
    basis = sparse_dct.build_basis(2)
    z = sparse_dct.solve_z_step(basis, ps, lam=0.0, eta=1.0)
    assert np.allclose(z.data, sparse_dct.analyze(basis, ps.data))


def test_z_step_huge_threshold_zeroes_everything(rng):
    ps = _patch_set(rng)
    z = sparse_dct.solve_z_step(sparse_dct.build_basis(2), ps, lam=1e6, eta=0.5)
    assert np.all(z.data == 0.0)


def test_z_step_matches_coordinate_descent(rng):
    basis = sparse_dct.build_basis(2)
    b = basis.basis
    lam, eta = 0.3, 0.7
    r = rng.standard_normal(4)
    # λ‖z‖₁ + η‖r − Bz‖² 의 좌표 하강
    z = np.zeros(4)
    for _ in range(200):
        for j in range(4):
            partial = r - b @ z + b[:, j] * z[j]
            rho = b[:, j] @ partial
            z[j] = np.sign(rho) * max(abs(rho) - lam / (2 * eta), 0.0) / (b[:, j] @ b[:, j])
    grid = patches.build_grid(2, 2, 2, 1)
    closed = sparse_dct.solve_z_step(basis, PatchSet(data=r[:, None], grid=grid), lam, eta)
    assert np.allclose(closed.data[:, 0], z, atol=1e-8)


def test_z_step_decreases_objective(rng):
    basis = sparse_dct.build_basis(2)
    ps = _patch_set(rng)
    previous = ps.with_data(rng.standard_normal(ps.data.shape))
    z = sparse_dct.solve_z_step(basis, ps, lam=0.2, eta=1.0)
    assert sparse_dct.z_objective(basis, ps, z, 0.2, 1.0) <= sparse_dct.z_objective(
        basis, ps, previous, 0.2, 1.0
    )


def test_z_step_rejects_nonpositive_eta(rng):
    with pytest.raises(ServiceException):
        sparse_dct.solve_z_step(sparse_dct.build_basis(2), _patch_set(rng), lam=0.1, eta=0.0)
