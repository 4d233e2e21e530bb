"""Full AC power flow by Newton-Raphson in polar coordinates.

Unknowns are voltage angles at every non-slack bus and magnitudes at PQ
buses.  PV buses hold their magnitude setpoint; reactive limits are not
modelled.  The solve starts flat (setpoint / 1.0 p.u., zero angles) and
iterates a dense Newton step until the largest power mismatch drops
below ``tol``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .netcase import AdmittanceMatrix, NetworkCase, build_ybus


class PowerFlowError(RuntimeError):
    """Base class for solve failures."""


class ConvergenceError(PowerFlowError):
    def __init__(self, iterations: int, mismatch: float):
        super().__init__(
            f"no convergence after {iterations} iterations "
            f"(max mismatch {mismatch:.3e})")
        self.iterations = iterations
        self.mismatch = mismatch


class SingularJacobianError(PowerFlowError):
    def __init__(self, iteration: int):
        super().__init__(f"singular Jacobian at iteration {iteration}")
        self.iteration = iteration


@dataclass
class PowerFlowSolution:
    """Converged operating point.  Angles are radians; slack angle is 0."""

    v_mag: np.ndarray
    v_ang: np.ndarray
    p_inj: np.ndarray
    q_inj: np.ndarray
    iterations: int
    max_mismatch: float


def injections_from_voltages(
        ybus: AdmittanceMatrix,
        v_mag: np.ndarray,
        v_ang: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Net complex power injected at every bus for a given voltage state.

    Returns ``(p, q)`` from S_i = V_i * conj(sum_k Y_ik V_k).
    """
    v = np.asarray(v_mag, dtype=float) * np.exp(1j * np.asarray(v_ang, dtype=float))
    if v.shape != (ybus.n,):
        raise ValueError(f"voltage vectors must have shape ({ybus.n},)")
    s = v * np.conj(ybus.matrix @ v)
    return s.real.copy(), s.imag.copy()


def _jacobian(y: np.ndarray, v: np.ndarray, pvpq: np.ndarray, pq: np.ndarray) -> np.ndarray:
    # complex sensitivities of S = diag(V) conj(Y V) w.r.t. angle and magnitude
    i_bus = y @ v
    dv = np.diag(v)
    ds_dva = 1j * dv @ np.conj(np.diag(i_bus) - y @ dv)
    vnorm = v / np.abs(v)
    ds_dvm = np.diag(vnorm) @ np.conj(np.diag(i_bus)) + dv @ np.conj(y @ np.diag(vnorm))
    j11 = ds_dva[np.ix_(pvpq, pvpq)].real
    j12 = ds_dvm[np.ix_(pvpq, pq)].real
    j21 = ds_dva[np.ix_(pq, pvpq)].imag
    j22 = ds_dvm[np.ix_(pq, pq)].imag
    return np.block([[j11, j12], [j21, j22]])


def solve_newton(
        case: NetworkCase,
        ybus: AdmittanceMatrix | None = None,
        tol: float = 1e-8,
        max_iter: int = 20) -> PowerFlowSolution:
    """Solve the case and return the converged operating point.

    Raises :class:`ConvergenceError` when ``max_iter`` is exhausted and
    :class:`SingularJacobianError` when a Newton step cannot be taken.
    """
    if ybus is None:
        ybus = build_ybus(case)
    y = ybus.matrix
    n = case.n_buses
    if y.shape != (n, n):
        raise ValueError("admittance matrix does not match case size")
    pv = case.pv_indices
    pq = case.pq_indices
    pvpq = np.concatenate([pv, pq])
    if pvpq.size == 0:
        raise PowerFlowError("case has no PV or PQ buses")

    p_spec = np.array([bus.p_gen - bus.p_load for bus in case.buses])
    q_spec = np.array([-bus.q_load for bus in case.buses])

    v_mag = np.ones(n)
    for i, bus in enumerate(case.buses):
        if not bus.is_pq:
            v_mag[i] = bus.v_setpoint
    v_ang = np.zeros(n)

    n_pvpq = pvpq.size
    for it in range(max_iter + 1):
        v = v_mag * np.exp(1j * v_ang)
        s = v * np.conj(y @ v)
        mismatch = np.concatenate([
            p_spec[pvpq] - s.real[pvpq],
            q_spec[pq] - s.imag[pq],
        ])
        worst = float(np.max(np.abs(mismatch))) if mismatch.size else 0.0
        if worst <= tol:
            return PowerFlowSolution(
                v_mag=v_mag, v_ang=v_ang,
                p_inj=s.real.copy(), q_inj=s.imag.copy(),
                iterations=it, max_mismatch=worst)
        if it == max_iter:
            raise ConvergenceError(it, worst)
        jac = _jacobian(y, v, pvpq, pq)
        try:
            step = np.linalg.solve(jac, mismatch)
        except np.linalg.LinAlgError:
            raise SingularJacobianError(it) from None
        v_ang = v_ang.copy()
        v_mag = v_mag.copy()
        v_ang[pvpq] += step[:n_pvpq]
        v_mag[pq] += step[n_pvpq:]
