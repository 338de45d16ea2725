"""Witness queue: M/H2/1 with FCFS service and phase chosen at service start.

A delivered transaction is global with probability ``p`` (service rate
``mu1``) and local otherwise (service rate ``mu2``).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DomainError, NonConvergence, Unstable


@dataclass(frozen=True)
class WitnessQueueStats:
    lambda_w: float
    mu_mean: float
    rho: float
    sigma2: float
    scv: float
    L: float
    L_g: float
    L_l: float
    stationary_prefix: np.ndarray = field(default_factory=lambda: np.empty(0))

    @property
    def mean_sojourn_s(self) -> float:
        """Mean time in the witness (Little's law); NaN when idle."""
        return self.L / self.lambda_w if self.lambda_w > 0 else float("nan")

    def to_dict(self) -> dict:
        out = {k: getattr(self, k) for k in
               ("lambda_w", "mu_mean", "rho", "sigma2", "scv", "L", "L_g", "L_l")}
        out["mean_sojourn_s"] = self.mean_sojourn_s
        out["stationary_prefix"] = [float(x) for x in self.stationary_prefix]
        return out


def _check(p, mu1, mu2):
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"p must lie in [0, 1], got {p}")
    if mu1 <= 0 or mu2 <= 0:
        raise DomainError(f"service rates must be positive, got {mu1}, {mu2}")


def mean_service_rate(p: float, mu1: float, mu2: float) -> float:
    _check(p, mu1, mu2)
    return 1.0 / (p / mu1 + (1.0 - p) / mu2)


def service_variance_scv(p: float, mu1: float, mu2: float) -> tuple[float, float]:
    """Variance of the hyper-exponential service time and its SCV."""
    mu = mean_service_rate(p, mu1, mu2)
    second = 2.0 * (p / mu1**2 + (1.0 - p) / mu2**2)
    sigma2 = second - 1.0 / mu**2
    return sigma2, mu**2 * sigma2


def witness_mean_queue(lambda_w: float, p: float, mu1: float, mu2: float,
                       tol: float | None = None) -> WitnessQueueStats:
    """Pollaczek-Khinchine mean number in system, split into global and local shares.

    If ``tol`` is given the stationary distribution (truncated at tail mass
    ``tol``) is attached as ``stationary_prefix``.
    """
    if lambda_w < 0:
        raise DomainError(f"arrival rate must be >= 0, got {lambda_w}")
    mu = mean_service_rate(p, mu1, mu2)
    sigma2, scv = service_variance_scv(p, mu1, mu2)
    rho = lambda_w / mu
    if rho >= 1.0:
        raise Unstable(rho, "witness queue")
    L = rho + 0.5 * (1.0 + scv) * rho**2 / (1.0 - rho)
    prefix = witness_stationary(lambda_w, p, mu1, mu2, tol) if tol is not None else np.empty(0)
    return WitnessQueueStats(lambda_w, mu, rho, sigma2, scv, L, p * L, (1.0 - p) * L, prefix)


def _qbd_blocks(lam, p, mu1, mu2):
    alpha = np.array([p, 1.0 - p])
    rates = np.array([mu1, mu2])
    up = lam * np.eye(2)
    local = -np.diag(lam + rates)
    down = np.outer(rates, alpha)
    return alpha, rates, up, local, down


def rate_matrix(lambda_w: float, p: float, mu1: float, mu2: float,
                tol: float = 1e-14, max_iter: int = 200) -> np.ndarray:
    """Minimal non-negative solution ``R`` of ``A0 + R A1 + R^2 A2 = 0``.

    Levels count transactions in the witness, phases the service type in
    progress. ``G`` (first passage one level down) comes from logarithmic
    reduction, which converges quadratically even close to saturation, and
    ``R = A0 (-A1 - A0 G)^{-1}``. Stops once ``G`` is stochastic to ``tol``
    or further steps no longer change it.
    """
    _, _, up, local, down = _qbd_blocks(lambda_w, p, mu1, mu2)
    eye = np.eye(2)
    ones = np.ones(2)
    inv = np.linalg.inv(-local)
    H, L = inv @ up, inv @ down
    G, T = L.copy(), H.copy()
    gap = np.inf
    for _ in range(max_iter):
        U = H @ L + L @ H
        step = np.linalg.inv(eye - U)
        H, L = step @ H @ H, step @ L @ L
        inc = T @ L
        G = G + inc
        T = T @ H
        gap = float(np.max(np.abs(ones - G @ ones)))
        if gap < tol or np.max(np.abs(inc)) < 1e-17:
            return up @ np.linalg.inv(-local - up @ G)
    raise NonConvergence(max_iter, gap)


def _boundary(lambda_w, p, mu1, mu2, R):
    alpha, rates, up, local, down = _qbd_blocks(lambda_w, p, mu1, mu2)
    # unknowns: x0 (empty), x1 (level 1, two phases)
    #   -lam*x0 + x1 . rates = 0
    #   lam*x0*alpha + x1 (A1 + R A2) = 0
    #   x0 + x1 (I - R)^{-1} 1 = 1
    M = np.zeros((3, 3))
    M[0, 0] = -lambda_w
    M[1:, 0] = rates
    M[0, 1:] = lambda_w * alpha
    M[1:, 1:] = local + R @ down
    norm_row = np.concatenate(([1.0], np.linalg.solve(np.eye(2) - R, np.ones(2))))
    A = np.vstack([M.T[:2], norm_row])
    rhs = np.array([0.0, 0.0, 1.0])
    sol = np.linalg.solve(A, rhs)
    return sol[0], sol[1:]


def witness_stationary(lambda_w: float, p: float, mu1: float, mu2: float,
                       tol: float = 1e-10) -> np.ndarray:
    """Stationary probabilities of the number in the witness, by the matrix-geometric method.

    Returns ``tau[0..M]`` where ``M`` is the first level whose remaining tail
    mass falls below ``tol``.
    """
    if tol <= 0:
        raise DomainError("tol must be positive")
    _check(p, mu1, mu2)
    rho = lambda_w / mean_service_rate(p, mu1, mu2)
    if rho >= 1.0:
        raise Unstable(rho, "witness queue")
    if lambda_w == 0:
        return np.array([1.0])
    R = rate_matrix(lambda_w, p, mu1, mu2)
    x0, x1 = _boundary(lambda_w, p, mu1, mu2, R)
    ones = np.ones(2)
    tail_op = np.linalg.solve(np.eye(2) - R, ones)
    tau = [x0]
    vec = x1
    while True:
        tau.append(float(vec @ ones))
        vec = vec @ R
        if float(vec @ tail_op) < tol:
            break
    return np.array(tau)


def stationary_mean(lambda_w: float, p: float, mu1: float, mu2: float) -> float:
    """Exact mean level ``sum m tau_m = x1 (I - R)^{-2} 1`` from the matrix-geometric form."""
    if lambda_w == 0:
        return 0.0
    R = rate_matrix(lambda_w, p, mu1, mu2)
    _, x1 = _boundary(lambda_w, p, mu1, mu2, R)
    inv = np.linalg.inv(np.eye(2) - R)
    return float(x1 @ inv @ inv @ np.ones(2))
