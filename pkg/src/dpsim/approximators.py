"""Gaussian radial-basis network with grid-placed centers.

The network input is the 9-vector ``Z = [eta, nu, alpha1]`` (pose, body
velocity, virtual velocity command).  Basis functions are normalized
Gaussians ``g_j(Z) = exp(-|Z - k_j|^2 / (2 h_j^2)) / (sqrt(2 pi) h_j)``; the
leading 1/(sqrt(2 pi) h_j) factor is an invertible rescaling absorbed by the
weights and is kept for fidelity with the normalized-Gaussian form.  One
basis vector is shared by the three controlled axes; each axis has its own
weight vector.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from dpsim import kernels

GRID_NODE_CEILING = 1_000_000

# Default grid ranges for the 9 network inputs, laid out as
# [x, y, psi, u, v, r, alpha1_u, alpha1_v, alpha1_r].  The last slot (the
# yaw-rate channel of the virtual control) has no benchmark-sourced range;
# [-0.2, 0.2] covers the commanded yaw rates seen in the default scenarios.
DEFAULT_INPUT_RANGES = (
    (-2.0, 10.0),
    (0.0, 10.0),
    (-0.05, 0.2),
    (-0.35, 0.05),
    (-0.012, 0.004),
    (-0.5, 0.2),
    (-0.7, 0.0),
    (-0.14, 0.04),
    (-0.2, 0.2),
)


class GridCapacityError(ValueError):
    """Requested grid would exceed the configured node ceiling."""


def build_grid_centers(ranges, points_per_dim: int, ceiling: int = GRID_NODE_CEILING) -> np.ndarray:
    """Cartesian product of equally spaced points per dimension, endpoints included.

    Rows are ordered lexicographically (first dimension slowest), which fixes
    the node-to-weight-index mapping across runs.
    """
    ranges = np.asarray(ranges, dtype=float)
    if ranges.ndim != 2 or ranges.shape[1] != 2:
        raise ValueError("ranges must be a sequence of (lo, hi) pairs")
    if points_per_dim < 2:
        raise ValueError("points_per_dim must be at least 2")
    for lo, hi in ranges:
        if not lo < hi:
            raise ValueError(f"range [{lo}, {hi}] must have lo < hi")
    n_dims = len(ranges)
    count = points_per_dim ** n_dims
    if count > ceiling:
        raise GridCapacityError(
            f"{points_per_dim}^{n_dims} = {count} nodes exceeds ceiling {ceiling}")
    axes = [np.linspace(lo, hi, points_per_dim) for lo, hi in ranges]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack(mesh, axis=-1).reshape(count, n_dims)


@dataclass(frozen=True)
class RbfNetwork:
    """Immutable basis definition: centers (l, m) and per-node widths (l,)."""

    centers: np.ndarray
    widths: np.ndarray

    def __post_init__(self):
        centers = np.ascontiguousarray(self.centers, dtype=float)
        if centers.ndim != 2 or centers.shape[0] < 1:
            raise ValueError("centers must be a non-empty (l, m) matrix")
        widths = np.asarray(self.widths, dtype=float) * np.ones(centers.shape[0])
        if not (widths > 0).all():
            raise ValueError("all widths must be positive")
        if not np.isfinite(centers).all():
            raise ValueError("centers must be finite")
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "widths", widths)
        object.__setattr__(self, "_inv_two_h2", 1.0 / (2.0 * widths ** 2))
        object.__setattr__(self, "_coef", 1.0 / (np.sqrt(2.0 * np.pi) * widths))

    @property
    def node_count(self) -> int:
        return self.centers.shape[0]

    @property
    def input_dim(self) -> int:
        return self.centers.shape[1]

    @classmethod
    def grid(cls, ranges=DEFAULT_INPUT_RANGES, points_per_dim: int = 3,
             width: float = 1.0, ceiling: int = GRID_NODE_CEILING) -> "RbfNetwork":
        centers = build_grid_centers(ranges, points_per_dim, ceiling)
        return cls(centers, np.full(centers.shape[0], float(width)))


def gaussian_basis(net: RbfNetwork, z, out=None) -> np.ndarray:
    """Basis vector g(Z); strictly positive, bounded by 1/(sqrt(2 pi) h_j)."""
    z = np.asarray(z, dtype=float)
    if z.shape != (net.input_dim,):
        raise ValueError(f"input must have dimension {net.input_dim}, got {z.shape}")
    if out is None:
        out = np.empty(net.node_count)
    return kernels.basis_into(net.centers, net._inv_two_h2, net._coef, z, out)


class AdaptiveWeights:
    """Three per-axis weight vectors, stored as a (3, l) array."""

    def __init__(self, theta):
        theta = np.ascontiguousarray(theta, dtype=float)
        if theta.ndim != 2 or theta.shape[0] != 3:
            raise ValueError("theta must have shape (3, l)")
        if not np.isfinite(theta).all():
            raise ValueError("weights must be finite")
        self.theta = theta

    @classmethod
    def random_init(cls, node_count: int, seed) -> "AdaptiveWeights":
        """Uniform [0, 1) initialization from a seeded generator."""
        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        return cls(rng.random((3, node_count)))

    @classmethod
    def zeros(cls, node_count: int) -> "AdaptiveWeights":
        return cls(np.zeros((3, node_count)))

    @property
    def node_count(self) -> int:
        return self.theta.shape[1]

    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.theta, axis=1)

    def copy(self) -> "AdaptiveWeights":
        return AdaptiveWeights(self.theta.copy())


def rbf_output(net: RbfNetwork, weights: AdaptiveWeights, z) -> np.ndarray:
    """Per-axis network output [theta_1.g, theta_2.g, theta_3.g]."""
    if weights.node_count != net.node_count:
        raise ValueError(
            f"weights have {weights.node_count} nodes, network has {net.node_count}")
    g = gaussian_basis(net, z)
    return weights.theta @ g


def write_weight_csv(path, weights: AdaptiveWeights) -> None:
    """Snapshot the weights as CSV rows (node_index, theta1, theta2, theta3)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["node_index", "theta1", "theta2", "theta3"])
        for j in range(weights.node_count):
            writer.writerow([j] + [f"{weights.theta[i, j]:.9g}" for i in range(3)])
