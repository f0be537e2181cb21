"""Pure numpy versions of the compiled kernels in ``_kernels.pyx``.

Signatures and results match the Cython module exactly; ``_accel`` picks
whichever is importable.
"""
import numpy as np


def twisted_convolve(ka, ca, kb, cb, theta):
    """All pairwise twisted products of float monomials.

    Returns (keys, coeffs) of length len(ka)*len(kb), row-major in (i, j):
    keys[i*nb + j] = ka[i] + kb[j], coeffs = ca[i]*cb[j]*e((ka[i].theta.kb[j])/2).
    """
    ka = np.asarray(ka, dtype=np.int64)
    kb = np.asarray(kb, dtype=np.int64)
    ca = np.asarray(ca, dtype=np.complex128)
    cb = np.asarray(cb, dtype=np.complex128)
    theta = np.asarray(theta, dtype=np.float64)
    n = theta.shape[0]
    pair = (ka.astype(np.float64) @ theta) @ kb.T.astype(np.float64)
    coeffs = (ca[:, None] * cb[None, :]) * np.exp(1j * np.pi * pair)
    keys = (ka[:, None, :] + kb[None, :, :]).reshape(-1, n)
    return keys, coeffs.reshape(-1)


def _ball(m, radius):
    """Points of Z^m with l1 norm <= radius, as an int64 array."""
    if m == 0:
        return np.zeros((1, 0), dtype=np.int64)
    if m == 1:
        return np.arange(-radius, radius + 1, dtype=np.int64)[:, None]
    parts = []
    for first in range(-radius, radius + 1):
        rest = _ball(m - 1, radius - abs(first))
        parts.append(np.hstack([np.full((len(rest), 1), first, dtype=np.int64), rest]))
    return np.vstack(parts)


def shell_minima(theta, radius, tol):
    """out[k] = min F(g) over |g|_1 == k with F(g) > tol (inf when none)."""
    theta = np.asarray(theta, dtype=np.float64)
    n = theta.shape[0]
    out = np.full(radius + 1, np.inf)
    for first in range(-radius, radius + 1):
        rest = _ball(n - 1, radius - abs(first))
        pts = np.hstack([np.full((len(rest), 1), first, dtype=np.int64), rest])
        ph = pts.astype(np.float64) @ theta
        f = np.max(2.0 * np.abs(np.sin(np.pi * ph)), axis=1)
        norms = np.abs(pts).sum(axis=1)
        keep = f > tol
        if not keep.any():
            continue
        np.minimum.at(out, norms[keep], f[keep])
    return out
