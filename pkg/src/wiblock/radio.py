"""Deployment sampling and per-link success probabilities.

Received power follows a log-distance law with log-normal shadowing. A link is
in outage when the received power falls below the receiver sensitivity, so the
per-attempt success probability is ``1 - p_out(d)``. Power arithmetic is done
in watts; dB values appear only at the interface.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from .config import SPEED_OF_LIGHT, RadioParams, RegistrationPolicy, ScenarioConfig


@dataclass(frozen=True)
class Deployment:
    """Device and witness positions plus the registry.

    ``registration[i]`` is the (0-based) index of the witness device ``i``
    authenticated with.
    """
    device_positions: np.ndarray
    witness_positions: np.ndarray
    registration: np.ndarray

    @property
    def num_devices(self) -> int:
        return len(self.device_positions)

    @property
    def num_witnesses(self) -> int:
        return len(self.witness_positions)

    def distances(self) -> np.ndarray:
        diff = self.device_positions[:, None, :] - self.witness_positions[None, :, :]
        return np.hypot(diff[..., 0], diff[..., 1])


@dataclass(frozen=True)
class LinkSuccessMatrix:
    p_s: np.ndarray
    distance_m: np.ndarray | None = None

    @classmethod
    def lossless(cls, num_devices: int, num_witnesses: int) -> "LinkSuccessMatrix":
        return cls(np.ones((num_devices, num_witnesses)))

    @property
    def shape(self):
        return self.p_s.shape


def q_function(x):
    """Standard Gaussian tail probability ``Q(x) = P(Z > x)``."""
    return 0.5 * erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))


def _gain_w(d, radio: RadioParams):
    """Linear mean received power (W) at distance ``d``."""
    d = np.asarray(d, dtype=float)
    num = radio.tx_power_w * radio.gain_tx * radio.gain_rx * SPEED_OF_LIGHT**2
    return num / ((4 * math.pi * radio.carrier_frequency_hz) ** 2 * d**radio.path_loss_exponent)


def mean_received_power_db(d, radio: RadioParams):
    """Mean received power in dB(W), i.e. the deterministic part of the link budget."""
    return 10.0 * np.log10(_gain_w(d, radio))


def _margin_sigmas(d, radio):
    # (sensitivity - mean received power) in units of the shadowing deviation
    return 10.0 * np.log10(radio.sensitivity_w / _gain_w(d, radio)) / radio.shadow_sigma_db


def outage_probability(d, radio: RadioParams):
    """Probability that shadowed received power at distance ``d`` is below sensitivity.

    ``d`` must already be clamped to the distance floor.
    """
    out = 1.0 - q_function(_margin_sigmas(d, radio))
    return out if np.ndim(out) else float(out)


def median_outage_distance(radio: RadioParams) -> float:
    """Distance at which mean received power equals the sensitivity (``p_out = 1/2``)."""
    num = radio.tx_power_w * radio.gain_tx * radio.gain_rx * SPEED_OF_LIGHT**2
    den = (4 * math.pi * radio.carrier_frequency_hz) ** 2 * radio.sensitivity_w
    return (num / den) ** (1.0 / radio.path_loss_exponent)


def sample_deployment(cfg: ScenarioConfig, seed: int) -> Deployment:
    rng = np.random.default_rng(seed)
    k, v, side = cfg.num_devices, cfg.num_witnesses, cfg.area_side_m
    devices = rng.uniform(0.0, side, size=(k, 2))
    witnesses = rng.uniform(0.0, side, size=(v, 2))
    if cfg.registration_policy is RegistrationPolicy.NEAREST:
        diff = devices[:, None, :] - witnesses[None, :, :]
        registration = np.argmin(np.hypot(diff[..., 0], diff[..., 1]), axis=1)
    else:
        registration = rng.integers(0, v, size=k)
    return Deployment(devices, witnesses, registration.astype(np.int64))


def success_matrix(dep: Deployment, radio: RadioParams, floor: float) -> LinkSuccessMatrix:
    d = np.maximum(dep.distances(), floor)
    return LinkSuccessMatrix(1.0 - outage_probability(d, radio), d)


def write_links_csv(path, dep: Deployment, links: LinkSuccessMatrix) -> None:
    """One row per (device, witness) pair: ids, clamped distance and ``p_s``."""
    dist = links.distance_m if links.distance_m is not None else dep.distances()
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["device_id", "witness_id", "distance_m", "p_s"])
        k, v = links.p_s.shape
        for i in range(k):
            for w in range(v):
                writer.writerow([i, w, repr(float(dist[i, w])), repr(float(links.p_s[i, w]))])
