"""Continuous-time system models, fixed-step integration, and trajectory-level
energy checks (dissipativity, supply rates, empirical L2 gains).

States, inputs and outputs are plain float64 numpy arrays.  All functions here
are pure with respect to their inputs and safe to call from parallel scenario
runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

__all__ = [
    "IntegrationError",
    "PassivityIndices",
    "SystemModel",
    "Trajectory",
    "IndexMarginReport",
    "rk4_step",
    "simulate_open_loop",
    "supply_rate",
    "dissipativity_residuals",
    "l2_gain_estimate",
    "verify_lti_indices",
    "default_frequency_grid",
]


class IntegrationError(RuntimeError):
    """Raised when a derivative evaluation or step result is not finite."""


@dataclass(frozen=True)
class PassivityIndices:
    """Input (nu) / output (rho) passivity index pair.

    The admissible domain is ``rho * nu < 1/4``, or ``rho * nu == 1/4`` with
    ``rho >= 0``; anything else has no realizable input-output cone and is
    rejected at construction.
    """

    nu: float
    rho: float

    def __post_init__(self):
        p = self.rho * self.nu
        if not (p < 0.25 or (p == 0.25 and self.rho >= 0.0)):
            raise ValueError(
                f"index pair (nu={self.nu}, rho={self.rho}) outside the "
                f"admissible domain: rho*nu = {p} must be < 1/4 "
                f"(or == 1/4 with rho >= 0)"
            )


DynamicsFn = Callable[[np.ndarray, np.ndarray, float], np.ndarray]
OutputFn = Callable[[np.ndarray, np.ndarray, float], np.ndarray]
StorageFn = Callable[[np.ndarray], float]


@dataclass(frozen=True)
class SystemModel:
    """A continuous-time square system with declared passivity indices.

    dynamics(x, u, t) -> dx/dt and output(x, u, t) -> y.  ``storage`` is an
    optional nonnegative energy certificate used for trajectory spot checks;
    declared indices are trusted metadata otherwise.
    """

    state_dim: int
    input_dim: int
    output_dim: int
    dynamics: DynamicsFn
    output: OutputFn
    indices: PassivityIndices
    storage: Optional[StorageFn] = None
    name: str = ""

    def __post_init__(self):
        if self.state_dim <= 0 or self.input_dim <= 0 or self.output_dim <= 0:
            raise ValueError("system dimensions must be positive")
        if self.output_dim != self.input_dim:
            raise ValueError(
                "only square systems are supported "
                f"(input_dim={self.input_dim}, output_dim={self.output_dim})"
            )


@dataclass(frozen=True)
class Trajectory:
    """Sampled trajectory with zero-order-hold input convention.

    ``inputs[k]`` is the input held constant on ``[times[k], times[k+1])``;
    ``outputs[k]`` is the output at ``times[k]`` under that input.  All arrays
    share the leading sample dimension and times are strictly increasing.
    """

    times: np.ndarray
    states: np.ndarray
    inputs: np.ndarray
    outputs: np.ndarray

    def __post_init__(self):
        n = len(self.times)
        if n == 0:
            raise ValueError("trajectory must contain at least one sample")
        for name in ("states", "inputs", "outputs"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"{name} length does not match times")
        if n > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("times must be strictly increasing")


def rk4_step(model: SystemModel, state: np.ndarray, u: np.ndarray,
             t: float, h: float) -> np.ndarray:
    """One classical 4th-order Runge-Kutta step with the input held constant.

    Raises IntegrationError naming the offending time if any stage derivative
    or the resulting state is not finite.
    """
    if h <= 0:
        raise ValueError(f"step size must be positive, got {h}")
    u = np.asarray(u, dtype=float)
    if u.shape != (model.input_dim,):
        raise ValueError(
            f"input dimension {u.shape} does not match model ({model.input_dim},)")

    f = model.dynamics
    k1 = np.asarray(f(state, u, t), dtype=float)
    k2 = np.asarray(f(state + 0.5 * h * k1, u, t + 0.5 * h), dtype=float)
    k3 = np.asarray(f(state + 0.5 * h * k2, u, t + 0.5 * h), dtype=float)
    k4 = np.asarray(f(state + h * k3, u, t + h), dtype=float)
    for k in (k1, k2, k3, k4):
        if not np.all(np.isfinite(k)):
            raise IntegrationError(
                f"non-finite derivative evaluation at t={t!r} (model {model.name!r})")
    new_state = state + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(new_state)):
        raise IntegrationError(
            f"non-finite state after step at t={t!r} (model {model.name!r})")
    return new_state


def simulate_open_loop(model: SystemModel, x0: Sequence[float],
                       input_fn: Callable[[float], np.ndarray],
                       t_end: float, h: float = 1e-3) -> Trajectory:
    """Integrate ``model`` under ``input_fn(t)`` with fixed-step RK4.

    The input is sampled at the start of each step and held constant across
    it, matching the hold semantics used by the closed-loop executor.
    """
    n_steps = int(np.floor(t_end / h + 1e-9))
    times = np.empty(n_steps + 1)
    states = np.empty((n_steps + 1, model.state_dim))
    inputs = np.empty((n_steps + 1, model.input_dim))
    outputs = np.empty((n_steps + 1, model.output_dim))

    x = np.asarray(x0, dtype=float)
    for k in range(n_steps + 1):
        t = k * h
        u = np.atleast_1d(np.asarray(input_fn(t), dtype=float))
        times[k] = t
        states[k] = x
        inputs[k] = u
        outputs[k] = model.output(x, u, t)
        if k < n_steps:
            x = rk4_step(model, x, u, t, h)
    return Trajectory(times=times, states=states, inputs=inputs, outputs=outputs)


def supply_rate(u: np.ndarray, y: np.ndarray, idx: PassivityIndices) -> float:
    """Energy inflow u'y - rho*y'y - nu*u'u for one input/output sample."""
    u = np.asarray(u, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if u.shape != y.shape:
        raise ValueError(f"dimension mismatch: u{u.shape} vs y{y.shape}")
    return float(u @ y - idx.rho * (y @ y) - idx.nu * (u @ u))


def dissipativity_residuals(model: SystemModel, traj: Trajectory) -> np.ndarray:
    """Per-interval residuals of the integral dissipation inequality.

    For each consecutive sample pair returns
    ``V(x_{k+1}) - V(x_k) - trapz(supply rate)`` with the interval's held
    input applied at both quadrature endpoints (outputs are re-evaluated from
    the stored states, so feedthrough systems are integrated consistently).
    The trajectory is dissipative w.r.t. the declared indices iff every
    residual is below the quadrature tolerance.
    """
    if model.storage is None:
        raise ValueError("model has no storage function to check against")
    n = len(traj.times)
    res = np.empty(max(n - 1, 0))
    v_prev = float(model.storage(traj.states[0]))
    if v_prev < 0:
        raise ValueError("storage function is negative at the initial state")
    for k in range(n - 1):
        t0, t1 = traj.times[k], traj.times[k + 1]
        u = traj.inputs[k]
        y0 = np.asarray(model.output(traj.states[k], u, t0), dtype=float)
        y1 = np.asarray(model.output(traj.states[k + 1], u, t1), dtype=float)
        w0 = supply_rate(u, y0, model.indices)
        w1 = supply_rate(u, y1, model.indices)
        v_next = float(model.storage(traj.states[k + 1]))
        if v_next < 0:
            raise ValueError(f"storage function is negative at sample {k + 1}")
        res[k] = (v_next - v_prev) - 0.5 * (t1 - t0) * (w0 + w1)
        v_prev = v_next
    return res


def _trapz(values: np.ndarray, times: np.ndarray) -> float:
    return float(np.sum(0.5 * (values[1:] + values[:-1]) * np.diff(times)))


def l2_gain_estimate(input_traj: np.ndarray, output_traj: np.ndarray,
                     times: np.ndarray) -> float:
    """Empirical gain sqrt(int ||y||^2 / int ||w||^2) by trapezoidal quadrature.

    This is a lower bound on the true L2 gain of the map w -> y.
    """
    w = np.atleast_2d(np.asarray(input_traj, dtype=float).reshape(len(times), -1))
    y = np.atleast_2d(np.asarray(output_traj, dtype=float).reshape(len(times), -1))
    if not (len(w) == len(y) == len(times)):
        raise ValueError("input, output and times must be aligned")
    e_in = _trapz(np.sum(w * w, axis=1), times)
    if e_in <= 0.0:
        raise ValueError("input signal has zero energy; gain is undefined")
    e_out = _trapz(np.sum(y * y, axis=1), times)
    return float(np.sqrt(e_out / e_in))


@dataclass(frozen=True)
class IndexMarginReport:
    """Result of a frequency-domain index check on a SISO transfer function."""

    min_residual: float
    worst_frequency: float
    verified: bool
    residuals: np.ndarray = field(repr=False)


def default_frequency_grid(lo: float = 1e-3, hi: float = 1e4,
                           n: int = 2000) -> np.ndarray:
    """Logarithmic frequency grid (rad/s) used for LTI index verification."""
    return np.logspace(np.log10(lo), np.log10(hi), n)


def verify_lti_indices(A, B, C, D, candidate: PassivityIndices,
                       freq_grid: np.ndarray) -> IndexMarginReport:
    """Check a candidate index pair against a SISO frequency response.

    For each grid frequency computes ``Re G(jw) - nu - rho*|G(jw)|^2`` and
    reports the signed minimum; a nonnegative minimum verifies the pair on
    the grid.  Raises if the system has a pole on the imaginary axis inside
    the swept range (the response is unbounded there).
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.size == 0:
        A = A.reshape(0, 0)
    n = A.shape[0]
    if n:
        B = np.asarray(B, dtype=float).reshape(n, -1)
        C = np.asarray(C, dtype=float).reshape(-1, n)
    else:  # static gain: G(jw) = D
        B = np.zeros((0, 1))
        C = np.zeros((1, 0))
    D = np.atleast_2d(np.asarray(D, dtype=float))
    if B.shape[1] != 1 or C.shape[0] != 1 or D.shape != (1, 1):
        raise ValueError("only single-input single-output systems are supported")
    freq_grid = np.asarray(freq_grid, dtype=float)
    if freq_grid.size == 0:
        raise ValueError("frequency grid must be nonempty")

    if n:
        eig = np.linalg.eigvals(A)
        scale = np.maximum(np.abs(eig), 1.0)
        on_axis = np.abs(eig.real) < 1e-9 * scale
        in_range = np.abs(eig.imag) <= np.max(freq_grid) * (1 + 1e-9)
        if np.any(on_axis & in_range):
            raise ValueError(
                "system has a pole on the imaginary axis within the grid; "
                "the frequency condition is ill-defined there")

    residuals = np.empty(len(freq_grid))
    eye = np.eye(n)
    for i, w in enumerate(freq_grid):
        if n:
            g = complex((C @ np.linalg.solve(1j * w * eye - A, B))[0, 0]) + D[0, 0]
        else:
            g = complex(D[0, 0])
        residuals[i] = g.real - candidate.nu - candidate.rho * abs(g) ** 2
    i_min = int(np.argmin(residuals))
    return IndexMarginReport(
        min_residual=float(residuals[i_min]),
        worst_frequency=float(freq_grid[i_min]),
        verified=bool(residuals[i_min] >= 0.0),
        residuals=residuals,
    )
