"""Station-keeping controllers and stability diagnostics.

Two controller families:

* :class:`PidController` -- baseline PID on the body-frame pose error
  (earth-frame variant selectable), trapezoidal integral, derivative from
  measured velocity.
* adaptive backstepping with a radial-basis network -- virtual velocity
  command ``alpha1 = -R^T K1 z1``, control law
  ``tau = -R^T z1 - K2 z2 + theta_hat . g(Z)``, and a leaky gradient update
  of the per-axis weights.

The weight update default (``law="stable"``) is
``theta_dot_i = -Gamma_i (g z2_i + sigma_i theta_i)``, the unique sign
combination whose weight-error cross term cancels in the dissipation
analysis (see the ultimate-bound diagnostics below).  ``law="unstable"``
flips the overall sign, which turns the leak into exponential weight growth;
it is kept selectable for side-by-side demonstration of why the sign matters.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from dpsim.approximators import AdaptiveWeights
from dpsim.vessel import rk4_step, rotation_matrix, yaw_rate_skew

ADAPTATION_LAWS = {"stable": (-1.0, -1.0), "unstable": (1.0, 1.0)}


class InvalidGainError(ValueError):
    """Gain set violates a precondition of the requested computation."""


def as_gain_matrix(value, name: str = "gain") -> np.ndarray:
    """Normalize a scalar, 3-vector (diagonal), or 3x3 array to a 3x3 matrix."""
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        arr = np.eye(3) * float(arr)
    elif arr.shape == (3,):
        arr = np.diag(arr)
    if arr.shape != (3, 3) or not np.isfinite(arr).all():
        raise ValueError(f"{name} must be a finite scalar, 3-vector, or 3x3 matrix")
    return arr


def _require_spd(mat, name):
    if not np.allclose(mat, mat.T, rtol=1e-12, atol=1e-12):
        raise ValueError(f"{name} must be symmetric")
    if np.linalg.eigvalsh(mat).min() <= 0:
        raise ValueError(f"{name} must be positive definite")


@dataclass
class PidGains:
    Kp: np.ndarray
    Ki: np.ndarray
    Kd: np.ndarray

    def __post_init__(self):
        self.Kp = as_gain_matrix(self.Kp, "Kp")
        self.Ki = as_gain_matrix(self.Ki, "Ki")
        self.Kd = as_gain_matrix(self.Kd, "Kd")


class PidController:
    """PID on the pose error, with trapezoidal integral accumulation.

    ``frame="body"`` (default) rotates the position error into the body frame
    and takes the yaw error directly, since thrust acts along body axes; the
    derivative term then uses -nu.  ``frame="earth"`` works on eta_d - eta
    with derivative -R nu.  The integral state resets at run start.
    """

    def __init__(self, gains: PidGains, frame: str = "body"):
        if frame not in ("body", "earth"):
            raise ValueError("frame must be 'body' or 'earth'")
        self.gains = gains
        self.frame = frame
        self.integral = np.zeros(3)
        self._prev_error = None

    def reset(self):
        self.integral = np.zeros(3)
        self._prev_error = None

    def error(self, eta, eta_d) -> np.ndarray:
        diff = np.asarray(eta_d, dtype=float) - np.asarray(eta, dtype=float)
        if self.frame == "earth":
            return diff
        R = rotation_matrix(eta[2])
        body = R.T @ np.array([diff[0], diff[1], 0.0])
        return np.array([body[0], body[1], diff[2]])

    def control(self, eta, nu, eta_d, dt: float) -> np.ndarray:
        """Control force/moment for the current sample; advances the integral."""
        if dt <= 0:
            raise ValueError("dt must be positive")
        err = self.error(eta, eta_d)
        if self._prev_error is not None:
            self.integral = self.integral + 0.5 * dt * (self._prev_error + err)
        self._prev_error = err
        if self.frame == "earth":
            err_rate = -(rotation_matrix(eta[2]) @ np.asarray(nu, dtype=float))
        else:
            err_rate = -np.asarray(nu, dtype=float)
        g = self.gains
        return g.Kp @ err + g.Ki @ self.integral + g.Kd @ err_rate


def pid_control(gains: PidGains, eta, eta_d, nu, dt: float,
                state: PidController | None = None) -> np.ndarray:
    """Functional single-call form; pass a PidController to carry integral state."""
    ctrl = state if state is not None else PidController(gains)
    return ctrl.control(eta, nu, eta_d, dt)


@dataclass
class BackstepGains:
    """Gains of the adaptive backstepping controller.

    ``gamma`` holds the diagonal entries of the per-axis adaptation gain
    matrices as a (3, l) array (scalars/per-axis scalars broadcast); only
    diagonal adaptation gains are supported.  ``sigma`` are the per-axis leak
    rates.  K1 and K2 must be symmetric positive definite; K2 > I/2 is
    required by the dissipation analysis and is warned about if violated.
    """

    K1: np.ndarray
    K2: np.ndarray
    gamma: np.ndarray
    sigma: np.ndarray
    law: str = "stable"
    node_count: int = field(default=1)

    def __post_init__(self):
        self.K1 = as_gain_matrix(self.K1, "K1")
        self.K2 = as_gain_matrix(self.K2, "K2")
        _require_spd(self.K1, "K1")
        _require_spd(self.K2, "K2")
        self.sigma = np.asarray(self.sigma, dtype=float) * np.ones(3)
        if not (self.sigma >= 0).all():
            raise ValueError("sigma entries must be non-negative")
        gamma = np.asarray(self.gamma, dtype=float)
        if gamma.ndim == 0:
            gamma = np.full((3, self.node_count), float(gamma))
        elif gamma.shape == (3,):
            gamma = np.repeat(gamma[:, None], self.node_count, axis=1)
        elif gamma.ndim == 2 and gamma.shape[0] == 3:
            self.node_count = gamma.shape[1]
        else:
            raise ValueError("gamma must be scalar, per-axis (3,), or diagonal (3, l)")
        if not (gamma > 0).all():
            raise ValueError("gamma entries must be positive")
        self.gamma = np.ascontiguousarray(gamma)
        if self.law not in ADAPTATION_LAWS:
            raise ValueError(f"law must be one of {sorted(ADAPTATION_LAWS)}")
        if np.linalg.eigvalsh(self.K2).min() <= 0.5:
            warnings.warn("K2 <= I/2: the closed-loop dissipation bound does not apply",
                          stacklevel=2)

    @property
    def law_signs(self):
        return ADAPTATION_LAWS[self.law]


@dataclass(frozen=True)
class SaturationLimits:
    """Componentwise actuator bounds; +inf disables an axis."""

    tau_max: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.tau_max, dtype=float) * np.ones(3)
        if not (t > 0).all():
            raise ValueError("tau_max entries must be positive (or +inf)")
        object.__setattr__(self, "tau_max", t)


def saturate(tau, limits: SaturationLimits | None) -> np.ndarray:
    """Componentwise clamp to [-tau_max, tau_max]; identity when disabled."""
    tau = np.asarray(tau, dtype=float)
    if limits is None:
        return tau
    return np.clip(tau, -limits.tau_max, limits.tau_max)


def compute_alpha1(k1, psi: float, z1) -> np.ndarray:
    """Virtual velocity command -R(psi)^T K1 z1."""
    return -(rotation_matrix(psi).T @ (np.asarray(k1) @ np.asarray(z1, dtype=float)))


def compute_alpha1_dot(k1, psi: float, r: float, z1, nu) -> np.ndarray:
    """Analytic time derivative of the virtual command for a fixed target.

    Uses d/dt R = R S(r) and z1_dot = R nu.
    """
    R = rotation_matrix(psi)
    k1 = np.asarray(k1)
    term_rot = -(R @ yaw_rate_skew(r)).T @ (k1 @ np.asarray(z1, dtype=float))
    term_vel = -R.T @ (k1 @ (R @ np.asarray(nu, dtype=float)))
    return term_rot + term_vel


@dataclass(frozen=True)
class ErrorState:
    """Backstepping error coordinates at one instant."""

    z1: np.ndarray
    z2: np.ndarray
    alpha1: np.ndarray
    alpha1_dot: np.ndarray


def error_state(eta, nu, eta_d, k1) -> ErrorState:
    eta = np.asarray(eta, dtype=float)
    nu = np.asarray(nu, dtype=float)
    z1 = eta - np.asarray(eta_d, dtype=float)
    alpha1 = compute_alpha1(k1, eta[2], z1)
    z2 = nu - alpha1
    alpha1_dot = compute_alpha1_dot(k1, eta[2], nu[2], z1, nu)
    return ErrorState(z1, z2, alpha1, alpha1_dot)


def backstep_control(gains: BackstepGains, psi: float, z1, z2, basis_vec,
                     weights: AdaptiveWeights) -> np.ndarray:
    """Control law -R^T z1 - K2 z2 + network output."""
    basis_vec = np.asarray(basis_vec, dtype=float)
    if weights.theta.shape[1] != basis_vec.shape[0]:
        raise ValueError(
            f"basis has {basis_vec.shape[0]} nodes, weights have {weights.theta.shape[1]}")
    nn = weights.theta @ basis_vec
    return -(rotation_matrix(psi).T @ np.asarray(z1, dtype=float)) \
        - gains.K2 @ np.asarray(z2, dtype=float) + nn


def weight_derivative(gains: BackstepGains, basis_vec, z2, theta) -> np.ndarray:
    """Right-hand side of the weight update for the configured law."""
    drive, leak = gains.law_signs
    basis_vec = np.asarray(basis_vec, dtype=float)
    z2 = np.asarray(z2, dtype=float)
    return gains.gamma * (drive * (z2[:, None] * basis_vec[None, :])
                          + leak * (gains.sigma[:, None] * theta))


def adapt_weights(gains: BackstepGains, weights: AdaptiveWeights, basis_vec, z2,
                  dt: float, method: str = "rk4") -> AdaptiveWeights:
    """Advance the weights over one step with basis and z2 held constant.

    In the closed-loop simulator the weights are integrated jointly with the
    plant (stage-consistent RK4); this standalone form serves tests and
    offline experiments.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if method == "euler":
        theta = weights.theta + dt * weight_derivative(gains, basis_vec, z2, weights.theta)
    elif method == "rk4":
        shape = weights.theta.shape

        def deriv(flat):
            return weight_derivative(gains, basis_vec, z2, flat.reshape(shape)).ravel()

        theta = rk4_step(weights.theta.ravel(), dt, deriv).reshape(shape)
    else:
        raise ValueError("method must be 'euler' or 'rk4'")
    if not np.isfinite(theta).all():
        raise FloatingPointError("weight update produced non-finite values")
    return AdaptiveWeights(theta)


@dataclass(frozen=True)
class LyapunovTrace:
    """Energy-style diagnostics; ``partial`` marks a missing weight-error term."""

    v1: float
    v2a: float
    partial: bool


def lyapunov_eval(eta, nu, eta_d, params, k1=None, weights: AdaptiveWeights | None = None,
                  gamma=None, theta_star=None) -> LyapunovTrace:
    """Evaluate 0.5 z1'z1 and its velocity/weight extensions.

    With ``k1`` the velocity error is taken against the virtual command;
    otherwise z2 = nu.  The weight-error term needs a reference ``theta_star``
    (a (3, l) array) and the diagonal adaptation gains ``gamma``; without one
    the result is flagged partial.
    """
    eta = np.asarray(eta, dtype=float)
    nu = np.asarray(nu, dtype=float)
    z1 = eta - np.asarray(eta_d, dtype=float)
    alpha1 = compute_alpha1(k1, eta[2], z1) if k1 is not None else np.zeros(3)
    z2 = nu - alpha1
    v1 = 0.5 * float(z1 @ z1)
    v2 = v1 + 0.5 * float(z2 @ (params.M @ z2))
    if theta_star is not None and weights is not None and gamma is not None:
        err = weights.theta - np.asarray(theta_star, dtype=float)
        gamma = np.asarray(gamma, dtype=float) * np.ones_like(err)
        v2a = v2 + 0.5 * float((err * err / gamma).sum())
        return LyapunovTrace(v1, v2a, partial=False)
    return LyapunovTrace(v1, v2, partial=True)


def dissipation_params(k1, k2, m, sigma, approx_error_bound, weight_norm_bound,
                       beta: float = np.inf):
    """Decay rate and offset (phi, c) of the closed-loop dissipation bound.

    phi = min(2 lambda_min(K1), 2 lambda_min((K2 - I/2) M^-1), beta) with the
    matrix-pencil eigenvalue taken in the M metric; beta is the caller's
    assumed floor from the weight-error term (+inf leaves it inactive).
    c = 0.5 |E*|^2 + sum_i sigma_i theta_max_i^2 / 2 from the user-supplied
    approximation-error and ideal-weight-norm bounds.
    """
    k1 = as_gain_matrix(k1, "K1")
    k2 = as_gain_matrix(k2, "K2")
    m = np.asarray(m, dtype=float)
    shifted = k2 - 0.5 * np.eye(3)
    if np.linalg.eigvalsh(0.5 * (shifted + shifted.T)).min() <= 0:
        raise InvalidGainError("K2 - I/2 must be positive definite for the bound to hold")
    lam_k1 = 2.0 * np.linalg.eigvalsh(0.5 * (k1 + k1.T)).min()
    lam_k2 = 2.0 * scipy.linalg.eigh(0.5 * (shifted + shifted.T), m, eigvals_only=True).min()
    phi = min(lam_k1, lam_k2, float(beta))
    e_star = np.atleast_1d(np.asarray(approx_error_bound, dtype=float))
    theta_max = np.asarray(weight_norm_bound, dtype=float) * np.ones(3)
    sigma = np.asarray(sigma, dtype=float) * np.ones(3)
    c = 0.5 * float(e_star @ e_star) + float((sigma * theta_max ** 2).sum()) / 2.0
    return phi, c


def ultimate_bound(k1, k2, m, sigma, approx_error_bound, weight_norm_bound,
                   v2a0: float, t, beta: float = np.inf):
    """Transient bound sqrt(2c/phi + 2 (V(0) - c/phi) e^(-phi t)) on |z1|."""
    phi, c = dissipation_params(k1, k2, m, sigma, approx_error_bound,
                                weight_norm_bound, beta)
    t = np.asarray(t, dtype=float)
    inner = 2.0 * c / phi + 2.0 * (v2a0 - c / phi) * np.exp(-phi * t)
    return np.sqrt(np.maximum(inner, 0.0))


def weighted_l2_norm(samples, decay: float, horizon: float) -> float:
    """Exponentially discounted L2 norm of a uniformly sampled signal.

    ``samples`` covers [0, horizon] with shape (n,) or (n, k); computes
    sqrt(integral of e^(-decay (horizon - s)) |x(s)|^2 ds) by the trapezoid
    rule.  decay = 0 reduces to the plain L2 norm over the window.
    """
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise ValueError("empty sample series")
    if x.ndim == 1:
        sq = x * x
    else:
        sq = (x * x).sum(axis=1)
    if sq.shape[0] < 2:
        raise ValueError("need at least two samples to integrate")
    if decay < 0:
        raise ValueError("decay must be non-negative")
    tgrid = np.linspace(0.0, float(horizon), sq.shape[0])
    weights = np.exp(-decay * (horizon - tgrid))
    return float(np.sqrt(np.trapezoid(weights * sq, tgrid)))
