"""Global blockchain as a batch-service queue with exponential block time.

Transactions arrive as a Poisson stream of rate ``lambda_B``. Block generation
time ``U`` is exponential with rate ``mu_B``; a completed block confirms
``min(present, b)`` of the waiting transactions. A block is in progress
whenever at least one transaction is waiting. By memorylessness this is
equivalent to mining continuously and discarding empty blocks, so block
completions form a Poisson stream of rate ``mu_B``.

Let ``Q`` be the number waiting at a completion epoch. It obeys the chain
``Q' = (Q - b)^+ + A`` with ``A`` the (geometric) number of arrivals during
one block. ``alpha_n = mu_B * P(Q = n)`` is the rate of completions that find
``n < b`` transactions waiting.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import stats
from scipy.optimize import brentq

from ..errors import DomainError, NonConvergence, Unstable


# loads this close to capacity are critical, not stable: they only arise from
# rounding of an exactly critical rate and no truncation can resolve them
CRITICAL_MARGIN = 1e-12


class Stability(NamedTuple):
    stable: bool
    utilization: float


@dataclass(frozen=True)
class GbQueueStats:
    lambda_B: float
    stable: bool
    utilization: float
    mean_confirmation_s: float
    alpha: np.ndarray = field(default_factory=lambda: np.empty(0))
    block_rate: float = float("nan")
    mean_queue_len: float = float("nan")

    def to_dict(self) -> dict:
        return {
            "lambda_B": self.lambda_B,
            "stable": self.stable,
            "utilization": self.utilization,
            "mean_confirmation_s": self.mean_confirmation_s,
            "block_rate": self.block_rate,
            "mean_queue_len": self.mean_queue_len,
            "alpha_head": [float(a) for a in self.alpha[:8]],
        }


def gb_arrival_rate(lambda_w_vec, p: float) -> float:
    """Rate of global transactions forwarded by all witnesses."""
    return float(p * np.sum(lambda_w_vec))


def gb_stability(lambda_B: float, mu_B: float, b: int) -> Stability:
    if mu_B <= 0:
        raise DomainError(f"block rate must be positive, got {mu_B}")
    util = lambda_B / (mu_B * b)
    return Stability(util < 1.0 - CRITICAL_MARGIN, util)


def hazard_rate(mu_B: float, x):
    """Hazard rate ``g(x) / (1 - G(x))`` of the exponential block time."""
    if np.any(np.asarray(x) < 0):
        raise DomainError("hazard rate defined for x >= 0")
    dist = stats.expon(scale=1.0 / mu_B)
    out = np.exp(dist.logpdf(x) - dist.logsf(x))
    return float(out) if np.ndim(out) == 0 else out


def _require_stable(lambda_B, mu_B, b):
    if lambda_B < 0:
        raise DomainError(f"arrival rate must be >= 0, got {lambda_B}")
    st = gb_stability(lambda_B, mu_B, b)
    if not st.stable:
        raise Unstable(st.utilization, "global blockchain queue")
    return st


def _solve_truncated(c, b, N):
    """Stationary law of the completion-epoch chain truncated at ``N`` (overflow lumped into N).

    For geometric arrivals ``P(A=j) = (1-c) c^j`` the balance equations reduce
    to ``pi_j = c pi_{j-1} + (1-c) pi_{b+j}`` (j >= 1), which is solved
    downwards from the top; the decaying mode dominates in that direction.
    """
    pi = [0.0] * (N + 1)
    pi[N] = 1.0
    if N >= 1:
        pi[N - 1] = (1.0 - c) / c
    for j in range(N - 1, 0, -1):
        ahead = pi[b + j] if b + j <= N else 0.0
        pi[j - 1] = (pi[j] - (1.0 - c) * ahead) / c
        if pi[j - 1] > 1e250:
            scale = 1e-250
            for t in range(j - 1, N + 1):
                pi[t] *= scale
    arr = np.array(pi)
    if np.any(arr < 0) or not np.all(np.isfinite(arr)):
        arr = np.clip(np.nan_to_num(arr, nan=0.0, posinf=0.0), 0.0, None)
    return arr / arr.sum()


def completion_epoch_distribution(lambda_B: float, mu_B: float, b: int,
                                  trunc_tol: float = 1e-9, max_states: int = 1 << 24) -> np.ndarray:
    """Distribution of the number waiting at block-completion epochs.

    The state space is doubled until the mass added by the extension falls
    below ``trunc_tol``.
    """
    _require_stable(lambda_B, mu_B, b)
    if lambda_B == 0:
        return np.array([1.0])
    c = lambda_B / (lambda_B + mu_B)
    N = max(2 * b, 64)
    prev = _solve_truncated(c, b, N)
    while True:
        N2 = 2 * N
        if N2 > max_states:
            raise NonConvergence(N2, float(prev[-1]))
        cur = _solve_truncated(c, b, N2)
        if cur[N + 1:].sum() < trunc_tol:
            return cur
        prev, N = cur, N2


def completion_epoch_root(lambda_B: float, mu_B: float, b: int) -> float:
    """Root ``z`` in (0, 1) of ``z = c + (1-c) z^(b+1)``, ``c = lambda_B/(lambda_B+mu_B)``.

    The completion-epoch distribution is geometric with this ratio.
    """
    _require_stable(lambda_B, mu_B, b)
    c = lambda_B / (lambda_B + mu_B)
    if c == 0:
        return 0.0
    if b == 1:
        return lambda_B / mu_B
    f = lambda z: c + (1.0 - c) * z ** (b + 1) - z
    z_min = (1.0 / ((1.0 - c) * (b + 1))) ** (1.0 / b)
    return brentq(f, 0.0, min(z_min, 1.0), xtol=1e-300, rtol=4 * np.finfo(float).eps)


def gb_alpha(lambda_B: float, mu_B: float, b: int, trunc_tol: float = 1e-9) -> np.ndarray:
    """``alpha_0..alpha_{b-1}``: rates of block completions finding ``n`` waiting."""
    pi = completion_epoch_distribution(lambda_B, mu_B, b, trunc_tol)
    out = np.zeros(b)
    m = min(b, len(pi))
    out[:m] = mu_B * pi[:m]
    return out


def gb_mean_confirmation_time(lambda_B: float, mu_B: float, b: int,
                              trunc_tol: float = 1e-9, alpha=None) -> float:
    """Mean time from arrival at the global blockchain to confirmation in a block.

    ``E[U] = 1/mu_B`` and ``E[U^2] = 2/mu_B^2`` (exponential block time).
    """
    _require_stable(lambda_B, mu_B, b)
    EU = 1.0 / mu_B
    EU2 = 2.0 / mu_B**2
    if lambda_B == 0:
        return EU
    if alpha is None:
        alpha = gb_alpha(lambda_B, mu_B, b, trunc_tol)
    n = np.arange(b, dtype=float)
    slack = b - lambda_B * EU
    terms = alpha * (lambda_B * EU2 * (b - n) + 2.0 * b * EU * (b - n)
                     + EU * (b * b - b - n * n + n))
    head = lambda_B**2 * EU2 - b * (b - 1) - 2.0 * b * slack
    return float((head + math.fsum(terms)) / (2.0 * lambda_B * slack))


def gb_queue_stats(lambda_B: float, mu_B: float, b: int, trunc_tol: float = 1e-9) -> GbQueueStats:
    st = gb_stability(lambda_B, mu_B, b)
    if not st.stable:
        return GbQueueStats(lambda_B, False, st.utilization, float("inf"))
    alpha = gb_alpha(lambda_B, mu_B, b, trunc_tol) if lambda_B > 0 else np.zeros(b)
    if lambda_B > 0:
        T = gb_mean_confirmation_time(lambda_B, mu_B, b, alpha=alpha)
    else:
        T = 1.0 / mu_B
    # completions finding nothing produce no block
    nonempty_rate = mu_B - (alpha[0] if lambda_B > 0 else mu_B)
    return GbQueueStats(lambda_B, True, st.utilization, T, alpha, nonempty_rate, lambda_B * T)
