"""Linear quadrature dynamics conditioned on the qubit state.

For a fixed qubit eigenstate the cavities obey linear Langevin equations, so
the full state (optional squeezing-filter quadratures, cavity quadratures and
the integrated homodyne record ``M``) evolves as

    dx = (A x + d) dt + B dW,       E[dW dW^T] = Q dt

with the drive ``d`` switched on at ``t = 0``. Means and covariances follow
in closed form; ``M`` is the last coordinate and its variance at time ``tau``
is the imprecision noise ``<M_N^2>``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from scipy.linalg import expm, solve_continuous_lyapunov

from .model import (
    LossPlacement,
    Protocol,
    QubitState,
    ReadoutConfig,
    ValidatedConfig,
    qubit_rotation_angle,
    validate,
)
from .source import (
    InputNoiseModel,
    apply_loss,
    broadband_single_mode,
    broadband_two_mode,
    filtered_source,
    joint_basis,
    vacuum,
)

__all__ = [
    "LinearSystem",
    "GaussianState",
    "SingularDrift",
    "StepSizeRejected",
    "build_system",
    "qubit_rotation_angle",
    "initial_state",
    "propagate_covariance",
    "state_at",
    "evolve_mean",
    "steady_state_mean",
    "output_zero_frequency_transfer",
    "transform_cavities",
    "symplectic_form",
    "uncertainty_margin",
]


class SingularDrift(ArithmeticError):
    pass


class StepSizeRejected(RuntimeError):
    pass


@dataclass(frozen=True)
class LinearSystem:
    drift: np.ndarray
    noise_gain: np.ndarray
    noise_cov: np.ndarray
    drive: np.ndarray
    labels: tuple[str, ...]
    mode_pairs: tuple[tuple[int, int], ...]
    cavity_modes: tuple[tuple[int, int], ...]
    kappa_ref: float
    t0: float = -math.inf
    drift_off: np.ndarray | None = None
    noise_cov_off: np.ndarray | None = None
    drive_presettled: bool = False

    @property
    def dim(self) -> int:
        return self.drift.shape[0]

    @property
    def measure_index(self) -> int:
        return self.dim - 1

    @property
    def diffusion(self) -> np.ndarray:
        B = self.noise_gain
        return B @ self.noise_cov @ B.T

    @property
    def diffusion_off(self) -> np.ndarray:
        B = self.noise_gain
        Q = np.eye(B.shape[1]) if self.noise_cov_off is None else self.noise_cov_off
        return B @ Q @ B.T

    @property
    def max_rate(self) -> float:
        s = slice(0, self.dim - 1)
        return float(np.abs(np.linalg.eigvals(self.drift[s, s])).max())


@dataclass
class GaussianState:
    mean: np.ndarray
    covariance: np.ndarray
    time: float
    labels: tuple[str, ...] = ()

    @property
    def M_mean(self) -> float:
        return float(self.mean[-1])

    @property
    def M_var(self) -> float:
        return float(self.covariance[-1, -1])

    def block(self, indices: Sequence[int]) -> np.ndarray:
        idx = np.asarray(indices)
        return self.covariance[np.ix_(idx, idx)]


# -- construction -------------------------------------------------------------

def _noise_model(v: ValidatedConfig) -> InputNoiseModel:
    cfg = v.config
    src = cfg.source
    n_fields = 2 * v.n_cavities
    if cfg.protocol is Protocol.COHERENT:
        return vacuum(n_fields)
    kind = "two_mode" if cfg.protocol is Protocol.TWO_MODE else "single_mode"
    if src.broadband:
        if kind == "two_mode":
            return broadband_two_mode(src.r, src.t0)
        return broadband_single_mode(src.r, src.theta, src.t0)
    return filtered_source(src.r, src.bandwidth, kind, src.theta, src.t0)


def build_system(config: ReadoutConfig | ValidatedConfig,
                 qubit_state: QubitState | None = None) -> LinearSystem:
    """Assemble the drift, noise and drive for one qubit eigenstate.

    Each cavity contributes the block ``[[-k/2, -s chi], [s chi, -k/2]]`` with
    ``s = +1`` for ``Ground``, so the reflected field is rotated by ``s phi``.
    The record obeys ``dM/dt = sqrt(kappa_ref) (w . Y_out)`` with
    ``Y_out = sqrt(kappa_j) Y_j - Y_in,j`` and ``w = 1`` (one cavity) or
    ``(1, 1)/sqrt(2)`` (joint quadrature ``Y_+``).
    """
    v = validate(config)
    cfg = v.config
    state = cfg.qubit_state if qubit_state is None else qubit_state
    s = state.sign
    n_cav = v.n_cavities
    nf = 2 * n_cav
    kref = v.kappa_ref

    noise = _noise_model(v)
    eta = cfg.loss.eta
    placement = cfg.loss.placement
    eta_in = eta if placement is LossPlacement.INPUT else 1.0
    eta_out = eta if placement is LossPlacement.OUTPUT else 1.0
    if eta_in < 1.0:
        noise = apply_loss(noise, eta_in)

    k = noise.n_filter
    n = k + nf + 1
    mw = noise.n_white
    extra = 1 if eta_out < 1.0 else 0
    m = mw + extra
    c = slice(k, k + nf)
    iM = n - 1

    A = np.zeros((n, n))
    A_off = np.zeros((n, n))
    B = np.zeros((n, m))
    d = np.zeros(n)

    if k:
        A[:k, :k] = noise.filter_drift
        A_off[:k, :k] = noise.filter_drift_off
        B[:k, :mw] = noise.filter_gain

    kappas = np.array([cav.kappa for cav in cfg.cavities])
    sqrtK = np.diag(np.repeat(np.sqrt(kappas), 2))
    for j, cav in enumerate(cfg.cavities):
        i = k + 2 * j
        A[i:i + 2, i:i + 2] = [[-cav.kappa / 2, -s * cav.chi],
                               [s * cav.chi, -cav.kappa / 2]]

    Cf = noise.filter_output if k else np.zeros((nf, 0))
    Dw = noise.output_map
    if k:
        A[c, :k] = sqrtK @ Cf
    B[c, :mw] = sqrtK @ Dw

    wy = np.zeros(nf)
    wy[1::2] = 1.0 / math.sqrt(n_cav)
    gain = math.sqrt(kref * eta_out)
    A[iM, c] = gain * (wy @ sqrtK)
    if k:
        A[iM, :k] = -gain * (wy @ Cf)
    B[iM, :mw] = -gain * (wy @ Dw)
    if extra:
        B[iM, mw] = -math.sqrt(kref * (1 - eta_out))

    # coherent displacement along X (one cavity) or X_- (two cavities)
    u = np.zeros(nf)
    amp = math.sqrt(cfg.nbar0 * kref / n_cav * eta_in)
    u[0] = amp
    if n_cav == 2:
        u[2] = -amp
    d[c] = sqrtK @ u
    d[iM] = -gain * (wy @ u)

    A_off[k:, k:] = A[k:, k:]
    A_off[k:, :k] = A[k:, :k]

    labels = tuple(f"F{'XY'[i % 2]}{i // 2 + 1}" for i in range(k))
    labels += tuple(f"{'XY'[i % 2]}{i // 2 + 1}" for i in range(nf)) + ("M",)
    modes = tuple((i, i + 1) for i in range(0, k + nf, 2))
    cav_modes = tuple((k + i, k + i + 1) for i in range(0, nf, 2))

    return LinearSystem(
        drift=A,
        noise_gain=B,
        noise_cov=np.block([
            [noise.noise_cov, np.zeros((mw, extra))],
            [np.zeros((extra, mw)), np.eye(extra)],
        ]),
        drive=d,
        labels=labels,
        mode_pairs=modes,
        cavity_modes=cav_modes,
        kappa_ref=kref,
        t0=noise.active_from,
        drift_off=A_off,
        noise_cov_off=np.eye(m),
        drive_presettled=cfg.drive_presettled,
    )


def transform_cavities(system: LinearSystem, T: np.ndarray | None = None) -> LinearSystem:
    """Change the cavity-quadrature basis, by default to ``(X_-, Y_+, X_+, Y_-)``.

    ``T`` must be orthogonal; the record coordinate and any filter coordinates
    are untouched.
    """
    T = joint_basis() if T is None else np.asarray(T)
    n = system.dim
    (first, _), *_ = system.cavity_modes
    nf = 2 * len(system.cavity_modes)
    S = np.eye(n)
    S[first:first + nf, first:first + nf] = T
    Sinv = S.T
    labels = list(system.labels)
    if T.shape == (4, 4) and np.allclose(T, joint_basis()):
        labels[first:first + 4] = ["X-", "Y+", "X+", "Y-"]
    return replace(
        system,
        drift=S @ system.drift @ Sinv,
        drift_off=None if system.drift_off is None else S @ system.drift_off @ Sinv,
        noise_gain=S @ system.noise_gain,
        drive=S @ system.drive,
        labels=tuple(labels),
    )


# -- propagation ----------------------------------------------------------------

def _discretize(A, D, h):
    """Exact one-step transition ``(Phi, Qd)`` for drift A and diffusion D (Van Loan)."""
    n = A.shape[0]
    big = np.zeros((2 * n, 2 * n))
    big[:n, :n] = -A
    big[:n, n:] = D
    big[n:, n:] = A.T
    E = expm(big * h)
    Phi = E[n:, n:].T
    Qd = Phi @ E[:n, n:]
    return Phi, 0.5 * (Qd + Qd.T)


def _drive_step(A, d, h):
    n = A.shape[0]
    aug = np.zeros((n + 1, n + 1))
    aug[:n, :n] = A
    aug[:n, n] = d
    E = expm(aug * h)
    return E[:n, :n], E[:n, n]


def _stationary_cov(A, D):
    n = A.shape[0] - 1
    C = np.zeros_like(A)
    C[:n, :n] = solve_continuous_lyapunov(A[:n, :n], -D[:n, :n])
    C[:n, :n] = 0.5 * (C[:n, :n] + C[:n, :n].T)
    return C


def steady_state_mean(system: LinearSystem) -> np.ndarray:
    """Driven steady state ``-A^{-1} d`` of every coordinate except the record."""
    n = system.dim - 1
    A = system.drift[:n, :n]
    if abs(np.linalg.det(A)) < 1e-300 or np.linalg.cond(A) > 1e14:
        raise SingularDrift("drift restricted to field coordinates is not invertible")
    out = np.zeros(system.dim)
    out[:n] = -np.linalg.solve(A, system.drive[:n])
    return out


def initial_state(system: LinearSystem) -> GaussianState:
    """State at ``t = 0``, when the record starts and the drive switches on."""
    n = system.dim
    if math.isinf(system.t0):
        C = _stationary_cov(system.drift, system.diffusion)
    else:
        A_off = system.drift if system.drift_off is None else system.drift_off
        C = _stationary_cov(A_off, system.diffusion_off)
        if system.t0 < 0:
            C = _evolve_cov(system.drift, system.diffusion, C, -system.t0, system.max_rate)
        C[-1, :] = 0.0
        C[:, -1] = 0.0
    mean = steady_state_mean(system) if system.drive_presettled else np.zeros(n)
    return GaussianState(mean, C, 0.0, system.labels)


def _n_steps(dt, rate, per_unit=1.0):
    return max(1, int(math.ceil(dt * rate / per_unit - 1e-12)))


def _evolve_cov(A, D, C, dt, rate):
    steps = _n_steps(dt, max(rate, 1e-12))
    Phi, Qd = _discretize(A, D, dt / steps)
    for _ in range(steps):
        C = Phi @ C @ Phi.T + Qd
    return 0.5 * (C + C.T)


def _rk4(system, state, t_end, h):
    A, D, d = system.drift, system.diffusion, system.drive
    m, C = state.mean.copy(), state.covariance.copy()
    steps = _n_steps(t_end - state.time, 1.0 / h)
    h = (t_end - state.time) / steps

    def fm(x):
        return A @ x + d

    def fc(X):
        return A @ X + X @ A.T + D

    for _ in range(steps):
        k1, l1 = fm(m), fc(C)
        k2, l2 = fm(m + 0.5 * h * k1), fc(C + 0.5 * h * l1)
        k3, l3 = fm(m + 0.5 * h * k2), fc(C + 0.5 * h * l2)
        k4, l4 = fm(m + h * k3), fc(C + h * l3)
        m = m + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        C = C + h / 6 * (l1 + 2 * l2 + 2 * l3 + l4)
    return m, 0.5 * (C + C.T)


def propagate_covariance(system: LinearSystem, times, method="expm",
                         rtol=1e-8) -> list[GaussianState]:
    """Gaussian state (mean and covariance) at each of ``times`` (all >= 0).

    ``method="expm"`` uses the exact discrete transition over sub-steps no
    longer than ``1 / max_rate``. ``method="rk4"`` integrates the moment
    equations with a fixed step ``1 / (50 max_rate)`` and checks the result
    against a half-step run (Richardson); it raises :class:`StepSizeRejected`
    when the estimated relative error exceeds ``rtol``.
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if np.any(times < 0):
        raise ValueError("times must be >= 0")
    order = np.argsort(times, kind="stable")
    state = initial_state(system)
    out: list[GaussianState | None] = [None] * len(times)
    rate = max(system.max_rate, 1e-12)
    A, D, d = system.drift, system.diffusion, system.drive
    cache = {}
    for idx in order:
        t = float(times[idx])
        dt = t - state.time
        if dt > 0:
            if method == "expm":
                steps = _n_steps(dt, rate)
                h = dt / steps
                if h not in cache:
                    cache[h] = (_discretize(A, D, h), _drive_step(A, d, h))
                (Phi, Qd), (Phi_m, gd) = cache[h]
                m, C = state.mean, state.covariance
                for _ in range(steps):
                    C = Phi @ C @ Phi.T + Qd
                    m = Phi_m @ m + gd
                C = 0.5 * (C + C.T)
            elif method == "rk4":
                h = 1.0 / (50 * rate)
                m, C = _rk4(system, state, t, h)
                m2, C2 = _rk4(system, state, t, h / 2)
                scale = max(np.abs(C2).max(), np.abs(m2).max(), 1.0)
                err = max(np.abs(C2 - C).max(), np.abs(m2 - m).max()) / 15
                if err > rtol * scale:
                    raise StepSizeRejected(
                        f"Richardson error {err:.3g} exceeds tolerance at t={t}")
                m = m2 + (m2 - m) / 15
                C = C2 + (C2 - C) / 15
            else:
                raise ValueError(f"unknown method {method!r}")
            state = GaussianState(m, C, t, system.labels)
        out[idx] = GaussianState(state.mean.copy(), state.covariance.copy(), t, system.labels)
    return out


def state_at(system: LinearSystem, tau: float, method="expm") -> GaussianState:
    return propagate_covariance(system, [tau], method=method)[0]


def evolve_mean(system: LinearSystem, t) -> np.ndarray:
    """Mean state at time(s) ``t`` from a single matrix exponential per time."""
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t_arr < 0):
        raise ValueError("t must be >= 0")
    m0 = initial_state(system).mean
    out = []
    for ti in t_arr:
        Phi, g = _drive_step(system.drift, system.drive, ti)
        out.append(Phi @ m0 + g)
    out = np.array(out)
    return out[0] if np.ndim(t) == 0 else out


def output_zero_frequency_transfer(system: LinearSystem, joint: bool = True) -> np.ndarray:
    """Zero-frequency map from cavity-input to output field quadratures.

    Uses only the cavity block of the drift (a squeezing filter, if present,
    sits upstream of the cavity inputs). For two cavities the result is
    expressed in the joint basis ``(X_-, Y_+, X_+, Y_-)`` unless
    ``joint=False``; row 1 is then the measured ``Y_+`` and columns 2-3 are
    the antisqueezed inputs.
    """
    idx = [i for pair in system.cavity_modes for i in pair]
    A = system.drift[np.ix_(idx, idx)]
    kappas = []
    for i, _ in system.cavity_modes:
        kappas.append(-2 * system.drift[i, i])
    sqrtK = np.diag(np.repeat(np.sqrt(kappas), 2))
    T = -sqrtK @ np.linalg.solve(A, sqrtK) - np.eye(len(idx))
    if joint and len(idx) == 4:
        P = joint_basis()
        T = P @ T @ P.T
    return T


# -- physicality checks -------------------------------------------------------------

def symplectic_form(n_modes: int) -> np.ndarray:
    """Commutator matrix for ``[X, Y] = 2i``: ``[r_i, r_j] = 2i Omega_ij``."""
    return np.kron(np.eye(n_modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def uncertainty_margin(state: GaussianState, system: LinearSystem) -> dict:
    """Smallest eigenvalue of ``V + i Omega`` over all field modes, plus the
    smallest single-cavity ``det V - 1`` (both >= 0 for a physical state)."""
    idx = [i for pair in system.mode_pairs for i in pair]
    V = state.block(idx)
    H = V + 1j * symplectic_form(len(system.mode_pairs))
    joint = float(np.linalg.eigvalsh(H).min())
    dets = [np.linalg.det(state.block(pair)) - 1.0 for pair in system.cavity_modes]
    psd = float(np.linalg.eigvalsh(state.covariance).min())
    return {"joint": joint, "cavity_det": float(min(dets)), "covariance": psd}
