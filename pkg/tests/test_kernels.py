import os
import subprocess
import sys

import numpy as np
import pytest

from schmidt_measure import _kernels
from schmidt_measure._kernels import als_py

try:
    from schmidt_measure._kernels import als_cy
except ImportError:
    als_cy = None

BACKENDS = [als_py] + ([als_cy] if als_cy is not None else [])
BACKEND_IDS = ["python"] + (["cython"] if als_cy is not None else [])


def cp_model(factors):
    """Assemble the tensor a factor list stands for (test-local oracle)."""
    rank = factors[0].shape[1]
    out = None
    for r in range(rank):
        term = factors[0][:, r]
        for f in factors[1:]:
            term = np.multiply.outer(term, f[:, r])
        out = term if out is None else out + term
    return out


def gaussian_factors(shape, rank, seed):
    rng = np.random.default_rng(seed)
    return [rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
            for d in shape]


def ghz_tensor():
    t = np.zeros((2, 2, 2), dtype=complex)
    t[0, 0, 0] = t[1, 1, 1] = 2**-0.5
    return t


def w_tensor():
    t = np.zeros((2, 2, 2), dtype=complex)
    t[1, 0, 0] = t[0, 1, 0] = t[0, 0, 1] = 3**-0.5
    return t


def test_khatri_rao_matches_columnwise_kron():
    rng = np.random.default_rng(1)
    a = rng.standard_normal((3, 4)) + 1j * rng.standard_normal((3, 4))
    b = rng.standard_normal((2, 4)) + 1j * rng.standard_normal((2, 4))
    c = rng.standard_normal((5, 4)) + 1j * rng.standard_normal((5, 4))
    kr = als_py.khatri_rao([a, b, c])
    for r in range(4):
        np.testing.assert_allclose(
            kr[:, r], np.kron(np.kron(a[:, r], b[:, r]), c[:, r]))


@pytest.mark.parametrize("kernel", BACKENDS, ids=BACKEND_IDS)
class TestSweeps:
    def test_exact_init_converges_immediately(self, kernel):
        true = gaussian_factors((2, 3, 2), 2, seed=5)
        tensor = cp_model(true)
        _, _, res, sweeps, status = kernel.als_sweeps(
            tensor, [f.copy() for f in true], 20, 1e-9, 1e3, 1e-4, 50)
        assert status == als_py.STATUS_CONVERGED
        assert res < 1e-9
        assert sweeps <= 5

    def test_ghz_rank_two_fit(self, kernel):
        init = gaussian_factors((2, 2, 2), 2, seed=3)
        factors, weights, res, _, status = kernel.als_sweeps(
            ghz_tensor(), init, 2000, 1e-9, 1e3, 1e-4, 50)
        assert status == als_py.STATUS_CONVERGED
        assert weights.max() <= 1e3

    def test_w_state_rank_two_is_never_accepted(self, kernel):
        # border-rank plateau: the fit error decays but never reaches the
        # tolerance at bounded coefficient norms
        for seed in range(4):
            init = gaussian_factors((2, 2, 2), 2, seed=seed)
            _, weights, res, _, status = kernel.als_sweeps(
                w_tensor(), init, 1500, 1e-9, 1e3, 1e-4, 50)
            accepted = (status == als_py.STATUS_CONVERGED
                        and weights.max() <= 1e3)
            assert not accepted
            assert res > 1e-6

    def test_w_state_rank_three_fit(self, kernel):
        init = gaussian_factors((2, 2, 2), 3, seed=1)
        _, weights, res, _, status = kernel.als_sweeps(
            w_tensor(), init, 2000, 1e-9, 1e3, 1e-4, 50)
        assert status == als_py.STATUS_CONVERGED
        assert weights.max() <= 1e3

    def test_reported_residual_is_the_true_fit_error(self, kernel):
        rng = np.random.default_rng(9)
        tensor = rng.standard_normal((2, 3, 4)) + 1j * rng.standard_normal((2, 3, 4))
        tensor /= np.linalg.norm(tensor)
        init = gaussian_factors((2, 3, 4), 3, seed=11)
        factors, weights, res, _, status = kernel.als_sweeps(
            tensor, init, 60, 1e-9, 1e3, 1e-4, 50)
        true_res = np.linalg.norm(tensor - cp_model(factors))
        assert res == pytest.approx(true_res, abs=1e-10)

    def test_tiny_residuals_survive_cancellation(self, kernel):
        # the Gram-identity error estimate bottoms out near 1e-8 on unit
        # tensors; the sweep must switch to direct reassembly there
        # instead of declaring convergence early
        rng = np.random.default_rng(20260814)
        tensor = rng.standard_normal((2, 2, 2)) + 1j * rng.standard_normal((2, 2, 2))
        tensor /= np.linalg.norm(tensor)
        init = gaussian_factors((2, 2, 2), 2, seed=13)
        factors, weights, res, _, status = kernel.als_sweeps(
            tensor, init, 5000, 1e-9, 1e3, 1e-4, 50)
        assert status == als_py.STATUS_CONVERGED
        assert res <= 1e-9
        true_res = np.linalg.norm(tensor - cp_model(factors))
        assert res == pytest.approx(true_res, abs=1e-11)

    def test_weights_live_in_mode_zero(self, kernel):
        init = gaussian_factors((2, 2, 2), 2, seed=7)
        factors, weights, _, _, _ = kernel.als_sweeps(
            ghz_tensor(), init, 500, 1e-9, 1e3, 1e-4, 50)
        for f in factors[1:]:
            np.testing.assert_allclose(
                np.linalg.norm(f, axis=0), 1.0, atol=1e-12)
        np.testing.assert_allclose(
            weights, np.linalg.norm(factors[0], axis=0), atol=1e-12)

    def test_max_iters_is_respected(self, kernel):
        init = gaussian_factors((2, 2, 2), 2, seed=0)
        _, _, _, sweeps, status = kernel.als_sweeps(
            w_tensor(), init, 7, 1e-9, 1e3, 1e-4, 50)
        assert sweeps == 7
        assert status == als_py.STATUS_MAX_ITERS


@pytest.mark.skipif(als_cy is None, reason="compiled kernel not built")
class TestBackendParity:
    CASES = [
        (ghz_tensor(), 2, 3),
        (w_tensor(), 2, 17),
        (w_tensor(), 3, 1),
    ]

    def test_same_status_and_residual(self):
        for tensor, rank, seed in self.CASES:
            init = gaussian_factors(tensor.shape, rank, seed)
            _, wp, rp, _, sp = als_py.als_sweeps(
                tensor, [f.copy() for f in init], 400, 1e-9, 1e3, 1e-4, 50)
            _, wc, rc, _, sc = als_cy.als_sweeps(
                tensor, [f.copy() for f in init], 400, 1e-9, 1e3, 1e-4, 50)
            assert sp == sc
            assert rp == pytest.approx(rc, abs=1e-8)
            np.testing.assert_allclose(np.sort(wp), np.sort(wc), atol=1e-8)


class TestBackendSelection:
    def test_active_backend_is_listed(self):
        assert _kernels.backend_name() in _kernels.available_backends()

    def test_forcing_python_backend(self):
        code = ("from schmidt_measure import _kernels; "
                "print(_kernels.backend_name())")
        env = dict(os.environ, SCHMIDT_MEASURE_KERNEL="python")
        out = subprocess.run([sys.executable, "-c", code], env=env,
                             capture_output=True, text=True, check=True)
        assert out.stdout.strip() == "python"

    def test_bad_choice_is_rejected(self):
        code = "import schmidt_measure._kernels"
        env = dict(os.environ, SCHMIDT_MEASURE_KERNEL="fortran")
        out = subprocess.run([sys.executable, "-c", code], env=env,
                             capture_output=True, text=True)
        assert out.returncode != 0
