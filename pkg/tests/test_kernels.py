import numpy as np
import pytest

from nctorus import _accel, _kernels_py

try:
    from nctorus import _kernels
except ImportError:
    _kernels = None

needs_ext = pytest.mark.skipif(_kernels is None, reason="compiled kernels not built")


def random_terms(rng, n, k):
    keys = rng.integers(-4, 5, size=(k, n)).astype(np.int64)
    coeffs = rng.normal(size=k) + 1j * rng.normal(size=k)
    return keys, coeffs


def test_backend_name():
    assert _accel.BACKEND in ("cython", "python")


@needs_ext
@pytest.mark.parametrize("n", [2, 3, 4])
def test_convolve_parity(n):
    rng = np.random.default_rng(n)
    theta = rng.normal(size=(n, n))
    theta = theta - theta.T
    ka, ca = random_terms(rng, n, 20)
    kb, cb = random_terms(rng, n, 20)
    ka_, ca_ = _kernels.twisted_convolve(ka, ca, kb, cb, theta)
    kb_, cb_ = _kernels_py.twisted_convolve(ka, ca, kb, cb, theta)
    assert np.array_equal(np.asarray(ka_), np.asarray(kb_))
    assert np.max(np.abs(np.asarray(ca_) - np.asarray(cb_))) < 1e-12


@needs_ext
@pytest.mark.parametrize("n", [2, 3])
def test_shell_minima_parity(n):
    rng = np.random.default_rng(10 + n)
    theta = rng.normal(size=(n, n))
    theta = theta - theta.T
    a = np.asarray(_kernels.shell_minima(theta, 12, 1e-12))
    b = np.asarray(_kernels_py.shell_minima(theta, 12, 1e-12))
    assert np.allclose(a, b, rtol=0, atol=1e-14)
