"""Random witness selection with retries.

A device picks a witness uniformly at random; on outage it retries with a
witness drawn uniformly from the ones not tried yet, up to ``l`` attempts.

``attempt_prob[w]`` is the probability that witness ``w`` is *attempted* at
all. The sum over ordered failure sequences in the closed form equals
``u! * e_u(q)``, where ``e_u`` is the elementary symmetric polynomial of the
failure probabilities of the other witnesses, which gives

    attempt_prob[w] = (1/v) * sum_{u=0}^{l-1} e_u(q_{-w}) / C(v-1, u)

i.e. the mean probability that a uniformly random ``u``-subset of the other
witnesses fails entirely. That evaluation is exact and polynomial in ``v``.
"""
from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import CapExceeded, DomainError
from .radio import LinkSuccessMatrix

ENUMERATION_CAP = 9


@dataclass(frozen=True)
class SelectionProfile:
    attempt_prob: np.ndarray
    delivery_prob: float
    fail_prob: float


def _elementary_symmetric(q, order):
    """``e_0..e_order`` of the last axis of ``q`` (broadcast over leading axes)."""
    q = np.asarray(q, dtype=float)
    e = np.zeros(q.shape[:-1] + (order + 1,))
    e[..., 0] = 1.0
    for j in range(q.shape[-1]):
        qj = q[..., j, None]
        e[..., 1:] = e[..., 1:] + e[..., :-1] * qj
    return e


def _check_l(v, l):
    if not 1 <= l <= v:
        raise DomainError(f"retry limit must satisfy 1 <= l <= v={v}, got {l}")


def _attempt_prob_symmetric(ps, l):
    """Vectorised closed form; ``ps`` has shape (..., v)."""
    ps = np.asarray(ps, dtype=float)
    v = ps.shape[-1]
    q = 1.0 - ps
    out = np.empty_like(ps)
    weights = np.array([1.0 / math.comb(v - 1, u) for u in range(l)])
    for w in range(v):
        others = np.delete(q, w, axis=-1)
        e = _elementary_symmetric(others, l - 1)
        out[..., w] = e @ weights / v
    return out


def _attempt_prob_enumerate(ps, l):
    v = len(ps)
    q = 1.0 - np.asarray(ps, dtype=float)
    out = np.full(v, 1.0 / v)
    for w in range(v):
        others = [x for x in range(v) if x != w]
        for u in range(1, l):
            total = 0.0
            for seq in itertools.permutations(others, u):
                total += math.prod(q[x] for x in seq)
            out[w] += math.factorial(v - u - 1) * total / math.factorial(v)
    return out


def attempt_probability_exact(ps_row, l: int, method: str = "symmetric") -> np.ndarray:
    """Probability that each witness is attempted within ``l`` tries.

    ``method="enumerate"`` sums explicitly over ordered failure sequences
    (factorial cost, capped at ``v <= ENUMERATION_CAP``); the default uses
    elementary symmetric polynomials and has no cap.
    """
    ps_row = np.asarray(ps_row, dtype=float)
    v = ps_row.shape[-1]
    _check_l(v, l)
    if method == "enumerate":
        if v > ENUMERATION_CAP:
            raise CapExceeded(f"enumeration limited to v <= {ENUMERATION_CAP}, got v={v}")
        return _attempt_prob_enumerate(ps_row, l)
    if method != "symmetric":
        raise ValueError(f"unknown method {method!r}")
    return _attempt_prob_symmetric(ps_row, l)


def delivery_success_probability(ps_row, l: int):
    """Probability that one of the first ``l`` distinct, uniformly ordered witnesses succeeds.

    Accepts a single row or a (k, v) matrix.
    """
    ps_row = np.asarray(ps_row, dtype=float)
    v = ps_row.shape[-1]
    _check_l(v, l)
    e = _elementary_symmetric(1.0 - ps_row, l)
    out = 1.0 - e[..., l] / math.comb(v, l)
    return float(out) if out.ndim == 0 else out


def _simulate_attempts(ps, l, samples, rng, chunk=1 << 16):
    v = len(ps)
    counts = np.zeros(v)
    delivered = 0
    remaining = samples
    while remaining:
        n = min(chunk, remaining)
        order = np.argsort(rng.random((n, v)), axis=1)[:, :l]
        ok = rng.random((n, l)) < ps[order]
        hit = ok.any(axis=1)
        first = np.where(hit, ok.argmax(axis=1), l - 1)
        tried = np.arange(l)[None, :] <= first[:, None]
        np.add.at(counts, order[tried], 1.0)
        delivered += int(hit.sum())
        remaining -= n
    return counts / samples, delivered / samples


def attempt_probability_mc(ps_row, l: int, samples: int, seed: int):
    """Monte Carlo estimate of the attempt probabilities with 95% half-widths."""
    if samples < 10_000:
        raise DomainError(f"need at least 1e4 samples, got {samples}")
    ps_row = np.asarray(ps_row, dtype=float)
    _check_l(len(ps_row), l)
    est, _ = _simulate_attempts(ps_row, l, samples, np.random.default_rng(seed))
    half = 1.959963984540054 * np.sqrt(est * (1.0 - est) / samples)
    return est, half


def selection_profiles(links: LinkSuccessMatrix | np.ndarray, l: int) -> list[SelectionProfile]:
    ps = links.p_s if isinstance(links, LinkSuccessMatrix) else np.asarray(links, dtype=float)
    attempt = _attempt_prob_symmetric(ps, l)
    delivery = np.atleast_1d(delivery_success_probability(ps, l))
    return [SelectionProfile(attempt[i], float(delivery[i]), float(1.0 - delivery[i]))
            for i in range(ps.shape[0])]


def witness_arrival_rates(profiles: Sequence[SelectionProfile],
                          links: LinkSuccessMatrix | np.ndarray, lambda_tps: float) -> np.ndarray:
    """Mean delivered-transaction rate at each witness (identical device rates)."""
    ps = links.p_s if isinstance(links, LinkSuccessMatrix) else np.asarray(links, dtype=float)
    attempt = np.stack([p.attempt_prob for p in profiles])
    return lambda_tps * np.sum(attempt * ps, axis=0)


def global_fraction(v: int) -> float:
    """Probability that a delivered transaction reaches a witness other than its own."""
    if v < 1:
        raise DomainError(f"need at least one witness, got {v}")
    return (v - 1) / v


def write_profiles_csv(path, profiles: Sequence[SelectionProfile], summary_path=None) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["device_id", "witness_id", "attempt_prob"])
        for i, prof in enumerate(profiles):
            for w, a in enumerate(prof.attempt_prob):
                writer.writerow([i, w, repr(float(a))])
    if summary_path is not None:
        with open(summary_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["device_id", "delivery_prob", "fail_prob"])
            for i, prof in enumerate(profiles):
                writer.writerow([i, repr(prof.delivery_prob), repr(prof.fail_prob)])
