"""Independent reference solutions used by several test modules."""
import numpy as np


def stationary(Q):
    """Stationary vector of a finite generator by GTH state reduction.

    Uses no subtractions, so small probabilities keep full relative accuracy.
    """
    P = np.array(Q, dtype=float)
    np.fill_diagonal(P, 0.0)
    n = P.shape[0]
    for k in range(n - 1, 0, -1):
        s = P[k, :k].sum()
        P[:k, k] /= s
        P[:k, :k] += np.outer(P[:k, k], P[k, :k])
    pi = np.zeros(n)
    pi[0] = 1.0
    for k in range(1, n):
        pi[k] = pi[:k] @ P[:k, k]
    return pi / pi.sum()


def mh21_levels(lam, p, mu1, mu2, N):
    """Level probabilities of the M/H2/1 queue truncated at N (arrivals blocked at N).

    States: 0 (empty) and (n, phase) for n = 1..N.
    """
    size = 1 + 2 * N
    Q = np.zeros((size, size))
    idx = lambda n, ph: 1 + 2 * (n - 1) + ph
    rates, mix = (mu1, mu2), (p, 1 - p)
    for ph in (0, 1):
        Q[0, idx(1, ph)] += lam * mix[ph]
    for n in range(1, N + 1):
        for ph in (0, 1):
            s = idx(n, ph)
            if n < N:
                Q[s, idx(n + 1, ph)] += lam
            if n == 1:
                Q[s, 0] += rates[ph]
            else:
                for nxt in (0, 1):
                    Q[s, idx(n - 1, nxt)] += rates[ph] * mix[nxt]
    np.fill_diagonal(Q, -Q.sum(axis=1))
    pi = stationary(Q)
    levels = np.zeros(N + 1)
    levels[0] = pi[0]
    for n in range(1, N + 1):
        levels[n] = pi[idx(n, 0)] + pi[idx(n, 1)]
    return levels


def batch_queue_levels(lam, mu_B, b, N):
    """Number at the chain, continuous time, truncated at N.

    While the queue is nonempty a block is in progress and completes at rate
    mu_B, removing min(n, b).
    """
    Q = np.zeros((N + 1, N + 1))
    for n in range(N + 1):
        if n < N:
            Q[n, n + 1] += lam
        if n > 0:
            Q[n, n - min(n, b)] += mu_B
    np.fill_diagonal(Q, -Q.sum(axis=1))
    return stationary(Q)
