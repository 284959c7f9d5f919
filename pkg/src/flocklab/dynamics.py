"""N-agent alignment dynamics with external potential forcing.

Each agent carries a position x_i, a velocity u_i and a static quadrature
mass m_i > 0.  The equations of motion are

    dx_i/dt = u_i
    du_i/dt = sum_j m_j phi(|x_i - x_j|) (u_j - u_i) - grad U(x_i)

with a mass-weighted coupling: the ensemble is then the exact Lagrangian
quadrature of the hydrodynamic convolution phi*(rho u) - u (phi*rho) with
total mass sum(m).  Equal weights m_j = m0/N recover the plain arithmetic
average.  The vanishing i = j term is kept in the sums (it contributes
exactly zero).

All pairwise reductions use fixed-order numpy sums, so two runs with the
same inputs produce bitwise identical trajectories regardless of any
thread-count setting.  Time stepping is classical fixed-step RK4; a state
whose components overflow the cap or turn non-finite raises BlowupSignal
with the bracketing time interval instead of propagating NaNs.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass

import numpy as np

from .kernels import ConstantKernel, Kernel, kernel_eval_sq
from .potentials import Potential, grad_at

__all__ = [
    "STATE_CAP",
    "BlowupSignal",
    "Ensemble",
    "Means",
    "rhs",
    "rhs_pairwise",
    "step_rk4",
    "means",
    "recenter",
    "rk4_step",
    "pairwise_phi_weights",
    "conv_phi",
    "alignment_force",
]

# any |x| or |u| beyond this (or a non-finite value) is treated as blow-up
STATE_CAP = 1.0e9


class BlowupSignal(RuntimeError):
    """Raised when the integration leaves the trusted numerical range.

    ``t_lo`` and ``t_hi`` bracket the step in which the state went bad.
    """

    def __init__(self, t_lo: float, t_hi: float, reason: str):
        super().__init__(f"blow-up detected in t = [{t_lo:.6g}, {t_hi:.6g}]: {reason}")
        self.t_lo = t_lo
        self.t_hi = t_hi
        self.reason = reason


@dataclass
class Ensemble:
    """Weighted agent state in dimension d; arrays are (N, d) and (N,)."""

    x: np.ndarray
    u: np.ndarray
    m: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.x = np.atleast_2d(np.asarray(self.x, dtype=float))
        self.u = np.atleast_2d(np.asarray(self.u, dtype=float))
        self.m = np.asarray(self.m, dtype=float)
        if self.x.shape != self.u.shape or self.x.ndim != 2:
            raise ValueError(f"x and u must both be (N, d), got {self.x.shape} and {self.u.shape}")
        if self.m.shape != (self.x.shape[0],):
            raise ValueError(f"m must be (N,), got {self.m.shape}")
        if self.x.shape[0] < 1:
            raise ValueError("need at least one agent")
        if not np.all(self.m > 0.0):
            raise ValueError("all masses must be positive")
        if not (np.isfinite(self.x).all() and np.isfinite(self.u).all()):
            raise ValueError("coordinates must be finite")

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def dim(self) -> int:
        return self.x.shape[1]

    @property
    def total_mass(self) -> float:
        return float(self.m.sum())


@dataclass(frozen=True)
class Means:
    x_c: np.ndarray
    u_c: np.ndarray


# fresh (N, N) allocations are expensive (page faulting dominates the
# pairwise pass), so the hot path reuses per-thread scratch buffers
_scratch = threading.local()


def _pair_buffers(n: int, count: int) -> list:
    cache = getattr(_scratch, "cache", None)
    if cache is None:
        cache = _scratch.cache = {}
    bufs = cache.get(n)
    if bufs is None or len(bufs) < count:
        bufs = [np.empty((n, n)) for _ in range(count)]
        cache[n] = bufs
    return bufs[:count]


def pairwise_phi_weights(x: np.ndarray, m: np.ndarray, kernel: Kernel) -> np.ndarray:
    """Mass-weighted kernel matrix W[i, j] = m_j * phi(|x_i - x_j|)."""
    n = x.shape[0]
    return _phi_weights_into(x, m, kernel, np.empty((n, n)))


def _phi_weights_scratch(x: np.ndarray, m: np.ndarray, kernel: Kernel) -> np.ndarray:
    """Kernel matrix living in the thread-local scratch buffer.

    Valid only until the next scratch-using call on this thread; callers
    must consume it immediately and never return it.
    """
    w, _ = _pair_buffers(x.shape[0], 2)
    return _phi_weights_into(x, m, kernel, w)


def _phi_weights_into(x, m, kernel, out):
    n, d = x.shape
    np.subtract(x[:, 0, None], x[None, :, 0], out=out)
    np.multiply(out, out, out=out)
    if d > 1:
        _, buf = _pair_buffers(n, 2)
        for k in range(1, d):
            np.subtract(x[:, k, None], x[None, :, k], out=buf)
            np.multiply(buf, buf, out=buf)
            out += buf
    w = kernel_eval_sq(kernel, out, out=out)
    w *= m[None, :]
    return w


def conv_phi(x: np.ndarray, m: np.ndarray, kernel: Kernel) -> np.ndarray:
    """Quadrature of the kernel convolution with the density: sum_j m_j phi(|x_i - x_j|)."""
    if isinstance(kernel, ConstantKernel):
        return np.full(x.shape[0], kernel.value * m.sum())
    return pairwise_phi_weights(x, m, kernel).sum(axis=1)


def alignment_force(x: np.ndarray, u: np.ndarray, m: np.ndarray, kernel: Kernel):
    """Velocity alignment term sum_j m_j phi(|x_i - x_j|)(u_j - u_i).

    Returns ``(force, phi_conv)`` so callers that also need the convolution
    sum_j m_j phi_ij do not pay for the pairwise pass twice.  A constant
    kernel collapses to the O(N) form value * (sum_j m_j u_j - m0 u_i).
    """
    if isinstance(kernel, ConstantKernel):
        m0 = m.sum()
        mu = m @ u
        force = kernel.value * (mu[None, :] - m0 * u)
        phi_conv = np.full(x.shape[0], kernel.value * m0)
        return force, phi_conv
    w = _phi_weights_scratch(x, m, kernel)
    phi_conv = w.sum(axis=1)
    force = np.einsum("ij,jd->id", w, u)
    force -= u * phi_conv[:, None]
    return force, phi_conv


def rhs(ens: Ensemble, kernel: Kernel, potential: Potential):
    """Time derivative (dx, du) of the ensemble."""
    du = _rhs_u(ens.x, ens.u, ens.m, kernel, potential)
    if not np.isfinite(du).all():
        raise BlowupSignal(ens.t, ens.t, "non-finite velocity derivative")
    return ens.u.copy(), du


def _rhs_u(x, u, m, kernel, potential):
    force, _ = alignment_force(x, u, m, kernel)
    force -= grad_at(potential, x)
    return force


def rhs_pairwise(ens: Ensemble, kernel: Kernel, a: float):
    """Derivative for the variant with pairwise attraction instead of a potential.

    du_i = alignment - (a/m0) sum_j m_j (x_i - x_j).  On an ensemble with
    zero mean position this coincides exactly with the quadratic-potential
    right-hand side, and the total momentum is conserved for any data.
    """
    force, _ = alignment_force(ens.x, ens.u, ens.m, kernel)
    m0 = ens.total_mass
    mx = ens.m @ ens.x
    force -= (a / m0) * (m0 * ens.x - mx[None, :])
    if not np.isfinite(force).all():
        raise BlowupSignal(ens.t, ens.t, "non-finite velocity derivative")
    return ens.u.copy(), force


def rk4_step(y: tuple, f, dt: float) -> tuple:
    """One classical RK4 step for a state held as a tuple of arrays."""
    k1 = f(y)
    k2 = f(tuple(a + (0.5 * dt) * b for a, b in zip(y, k1)))
    k3 = f(tuple(a + (0.5 * dt) * b for a, b in zip(y, k2)))
    k4 = f(tuple(a + dt * b for a, b in zip(y, k3)))
    return tuple(
        a + (dt / 6.0) * (b1 + 2.0 * (b2 + b3) + b4)
        for a, b1, b2, b3, b4 in zip(y, k1, k2, k3, k4)
    )


def check_state_arrays(t_lo: float, t_hi: float, **arrays):
    """Raise BlowupSignal if any named array is non-finite or beyond STATE_CAP."""
    for name, arr in arrays.items():
        if not np.isfinite(arr).all():
            raise BlowupSignal(t_lo, t_hi, f"non-finite {name}")
        if np.abs(arr).max() > STATE_CAP:
            raise BlowupSignal(t_lo, t_hi, f"|{name}| exceeded {STATE_CAP:.0e}")


def step_rk4(ens: Ensemble, kernel: Kernel, potential: Potential, dt: float) -> Ensemble:
    """Advance the ensemble by one RK4 step of size dt > 0."""
    if not dt > 0.0:
        raise ValueError(f"dt must be positive, got {dt}")

    def f(y):
        x, u = y
        return u, _rhs_u(x, u, ens.m, kernel, potential)

    with np.errstate(over="ignore", invalid="ignore"):
        x1, u1 = rk4_step((ens.x, ens.u), f, dt)
    check_state_arrays(ens.t, ens.t + dt, x=x1, u=u1)
    return Ensemble(x=x1, u=u1, m=ens.m, t=ens.t + dt)


def means(ens: Ensemble) -> Means:
    """Mass-weighted mean position and velocity."""
    m0 = ens.total_mass
    return Means(x_c=(ens.m @ ens.x) / m0, u_c=(ens.m @ ens.u) / m0)


def recenter(ens: Ensemble) -> Ensemble:
    """Shift to the frame with zero mean position and zero mean velocity.

    With a quadratic potential the shifted ensemble obeys the same
    equations, so simulate-then-recenter and recenter-then-simulate agree.
    """
    c = means(ens)
    return Ensemble(x=ens.x - c.x_c[None, :], u=ens.u - c.u_c[None, :], m=ens.m, t=ens.t)
