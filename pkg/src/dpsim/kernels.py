"""Hot-path numerics with selectable backends.

Evaluating the Gaussian basis over a grid network (thousands of nodes, four
times per integration step) dominates simulation runtime.  Two
interchangeable implementations are provided:

* ``"numba"`` -- JIT-compiled loops, the default whenever numba imports.
* ``"numpy"`` -- pure-vectorized fallback, no compilation step.

Set ``DPSIM_DISABLE_NUMBA=1`` in the environment to force the numpy path,
or call :func:`use_backend` at runtime.  ``benchmarks/bench_kernels.py``
times both paths side by side.
"""

from __future__ import annotations

import os

import numpy as np

_ENV_DISABLE = os.environ.get("DPSIM_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes"}


def _basis_numpy(centers, inv_two_h2, coef, z, out):
    diff = centers - z
    d2 = np.einsum("ij,ij->i", diff, diff)
    np.exp(-d2 * inv_two_h2, out=out)
    out *= coef
    return out


def _adaptive_core_numpy(centers, inv_two_h2, coef, z, theta, z2, gamma, sigma,
                         drive, leak, g_out, theta_dot_out):
    _basis_numpy(centers, inv_two_h2, coef, z, g_out)
    nn = theta @ g_out
    theta_dot_out[:] = gamma * (drive * (z2[:, None] * g_out[None, :])
                                + leak * (sigma[:, None] * theta))
    return nn


try:
    from numba import njit

    HAVE_NUMBA = True

    @njit(cache=True)
    def _basis_numba(centers, inv_two_h2, coef, z, out):  # pragma: no cover - exercised via dispatch
        n_nodes, n_dims = centers.shape
        for j in range(n_nodes):
            acc = 0.0
            for k in range(n_dims):
                d = z[k] - centers[j, k]
                acc += d * d
            out[j] = coef[j] * np.exp(-acc * inv_two_h2[j])
        return out

    @njit(cache=True)
    def _adaptive_core_numba(centers, inv_two_h2, coef, z, theta, z2, gamma, sigma,
                             drive, leak, g_out, theta_dot_out):  # pragma: no cover
        n_nodes, n_dims = centers.shape
        nn = np.zeros(3)
        for j in range(n_nodes):
            acc = 0.0
            for k in range(n_dims):
                d = z[k] - centers[j, k]
                acc += d * d
            g = coef[j] * np.exp(-acc * inv_two_h2[j])
            g_out[j] = g
            nn[0] += theta[0, j] * g
            nn[1] += theta[1, j] * g
            nn[2] += theta[2, j] * g
        for i in range(3):
            zi = z2[i]
            si = sigma[i]
            for j in range(n_nodes):
                theta_dot_out[i, j] = gamma[i, j] * (drive * g_out[j] * zi
                                                     + leak * si * theta[i, j])
        return nn

except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

_IMPLS = {"numpy": (_basis_numpy, _adaptive_core_numpy)}
if HAVE_NUMBA:
    _IMPLS["numba"] = (_basis_numba, _adaptive_core_numba)

_active_name = "numba" if (HAVE_NUMBA and not _ENV_DISABLE) else "numpy"
_basis_impl, _core_impl = _IMPLS[_active_name]


def available_backends():
    """Names of the backends importable in this process."""
    return tuple(sorted(_IMPLS))


def active_backend() -> str:
    return _active_name


def use_backend(name: str) -> str:
    """Switch the active backend ("numba" or "numpy"); returns the new name."""
    global _active_name, _basis_impl, _core_impl
    if name not in _IMPLS:
        raise ValueError(f"unknown backend {name!r}; available: {available_backends()}")
    _active_name = name
    _basis_impl, _core_impl = _IMPLS[name]
    return _active_name


def basis_into(centers, inv_two_h2, coef, z, out):
    """Gaussian basis values for one input point, written into ``out``."""
    return _basis_impl(centers, inv_two_h2, coef, z, out)


def adaptive_core(centers, inv_two_h2, coef, z, theta, z2, gamma, sigma,
                  drive, leak, g_out, theta_dot_out):
    """Fused basis + per-axis network output + weight derivative.

    Returns the 3-vector of per-axis network outputs ``theta_i . g``; fills
    ``g_out`` with the basis vector and ``theta_dot_out`` with
    ``gamma * (drive * g * z2_i + leak * sigma_i * theta_i)`` per axis.
    """
    return _core_impl(centers, inv_two_h2, coef, z, theta, z2, gamma, sigma,
                      drive, leak, g_out, theta_dot_out)
