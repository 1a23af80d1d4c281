"""Achievable-rate metrics for rate-splitting, SDMA, and NOMA downlink strategies.

Rates are in bps/Hz (log base 2, Gaussian signalling). The rate-splitting
receiver decodes the common stream first, treating every private stream as
noise, cancels it, then decodes its private stream. With multicast groups a
private stream is shared by all members of its group, so the stream rate is
the minimum of the members' decode rates.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .channels import ChannelSet

RSMA = "rsma"
SDMA = "sdma"
NOMA = "noma"
STRATEGIES = (RSMA, SDMA, NOMA)


@dataclass
class PrecodingMatrix:
    """Common precoder column plus one column per private stream."""

    common: np.ndarray
    privates: np.ndarray

    def __post_init__(self) -> None:
        self.common = np.asarray(self.common, dtype=complex).reshape(-1)
        self.privates = np.asarray(self.privates, dtype=complex)
        if self.privates.ndim != 2:
            raise ValueError(f"privates must be a 2-D (Nt x streams) array, got {self.privates.shape}")
        if self.privates.shape[0] != self.common.shape[0]:
            raise ValueError(
                f"common has {self.common.shape[0]} antennas but privates have {self.privates.shape[0]}"
            )
        if not (np.all(np.isfinite(self.common)) and np.all(np.isfinite(self.privates))):
            raise ValueError("precoder entries must be finite")

    @property
    def num_tx(self) -> int:
        return self.common.shape[0]

    @property
    def num_streams(self) -> int:
        return self.privates.shape[1]

    def as_matrix(self) -> np.ndarray:
        """Columns [common, private_1, ..., private_S]."""
        return np.column_stack([self.common, self.privates])

    @classmethod
    def from_matrix(cls, matrix: np.ndarray) -> "PrecodingMatrix":
        matrix = np.asarray(matrix, dtype=complex)
        return cls(common=matrix[:, 0], privates=matrix[:, 1:])

    def total_power(self) -> float:
        return float(np.sum(np.abs(self.as_matrix()) ** 2))

    def per_antenna_power(self) -> np.ndarray:
        return np.sum(np.abs(self.as_matrix()) ** 2, axis=1)


@dataclass
class RateReport:
    """Per-user decode rates, the common-rate split, and the resulting totals."""

    common_rates: np.ndarray
    private_rates: np.ndarray
    common_split: np.ndarray

    def __post_init__(self) -> None:
        self.common_rates = np.asarray(self.common_rates, dtype=float)
        self.private_rates = np.asarray(self.private_rates, dtype=float)
        self.common_split = np.asarray(self.common_split, dtype=float)
        k = self.private_rates.shape[0]
        if self.common_rates.shape != (k,) or self.common_split.shape != (k,):
            raise ValueError("common_rates, private_rates, common_split must share length K")
        if np.any(self.common_split < -1e-12):
            raise ValueError("common-rate portions must be nonnegative")
        if np.any(self.common_rates < -1e-12) or np.any(self.private_rates < -1e-12):
            raise ValueError("rates must be nonnegative")
        slack = 1e-9 * max(1.0, float(np.max(np.abs(self.common_rates))))
        if self.common_split.sum() > float(np.min(self.common_rates)) + slack + 1e-9:
            raise ValueError(
                "common split is not decodable: sum of portions "
                f"{self.common_split.sum()} exceeds min common rate {np.min(self.common_rates)}"
            )

    @property
    def total_rates(self) -> np.ndarray:
        return self.common_split + self.private_rates


def _stream_powers(channels: ChannelSet, precoder: PrecodingMatrix) -> np.ndarray:
    """|h_k^H p_s|^2 for every user k and column s (common first)."""
    if precoder.num_tx != channels.num_tx:
        raise ValueError(
            f"precoder has {precoder.num_tx} antennas but channels have {channels.num_tx}"
        )
    return np.abs(channels.channels.conj() @ precoder.as_matrix()) ** 2


def rsma_rates(
    channels: ChannelSet, precoder: PrecodingMatrix
) -> tuple[np.ndarray, np.ndarray]:
    """Common-stream and private-stream decode rates for every user.

    Returns (common_rates, private_rates); with multicast groups the private
    entry of each user is its group's min-rate.
    """
    streams = channels.stream_of_user()
    if precoder.num_streams != channels.num_streams:
        raise ValueError(
            f"precoder has {precoder.num_streams} private streams but the channel set "
            f"defines {channels.num_streams}"
        )
    powers = _stream_powers(channels, precoder)
    sigma = channels.noise_power
    common_sig = powers[:, 0]
    private_pow = powers[:, 1:]
    total_private = private_pow.sum(axis=1)
    common_rates = np.log2(1.0 + common_sig / (total_private + sigma))
    own = private_pow[np.arange(channels.num_users), streams]
    private_decode = np.log2(1.0 + own / (total_private - own + sigma))
    if channels.groups is None:
        return common_rates, private_decode
    private_rates = np.empty_like(private_decode)
    for s, members in enumerate(channels.groups):
        private_rates[list(members)] = private_decode[list(members)].min()
    return common_rates, private_rates


def sdma_rates(channels: ChannelSet, precoder: PrecodingMatrix) -> np.ndarray:
    """Private rates with the common stream turned off."""
    silenced = PrecodingMatrix(
        common=np.zeros(precoder.num_tx, dtype=complex), privates=precoder.privates
    )
    return rsma_rates(channels, silenced)[1]


def noma_rates(
    channels: ChannelSet, precoder: PrecodingMatrix, order: Sequence[int]
) -> np.ndarray:
    """Per-user stream rates under superposition coding with an SIC chain.

    ``order[j]`` is the user whose stream is decoded at position j (first
    decoded first). The user at position j decodes the streams at positions
    1..j, so the stream at position i must be decodable by every user at
    positions j >= i; its rate is the minimum of those decode rates, with
    only the later-decoded streams left as interference.
    """
    if channels.groups is not None:
        raise ValueError("NOMA does not support multicast groups")
    k = channels.num_users
    order = np.asarray(order, dtype=int)
    if sorted(order.tolist()) != list(range(k)):
        raise ValueError(f"order must be a permutation of 0..{k - 1}, got {order}")
    powers = _stream_powers(channels, precoder)[:, 1:]
    sigma = channels.noise_power
    rates = np.empty(k)
    for i in range(k):
        stream_user = order[i]
        later = order[i + 1 :]
        decode_rates = []
        for j in range(i, k):
            decoder = order[j]
            interference = powers[decoder, later].sum() + sigma
            decode_rates.append(np.log2(1.0 + powers[decoder, stream_user] / interference))
        rates[stream_user] = min(decode_rates)
    return rates


def default_noma_order(channels: ChannelSet) -> np.ndarray:
    """Ascending channel-strength decode order (weakest user decoded first)."""
    norms = np.linalg.norm(channels.channels, axis=1)
    return np.argsort(norms, kind="stable")


def rate_report(
    strategy: str,
    channels: ChannelSet,
    precoder: PrecodingMatrix,
    common_split: Optional[np.ndarray] = None,
    order: Optional[Sequence[int]] = None,
) -> RateReport:
    """Uniform RateReport across strategies (zero common rows for SDMA/NOMA)."""
    k = channels.num_users
    zeros = np.zeros(k)
    if strategy == RSMA:
        common_rates, private_rates = rsma_rates(channels, precoder)
        split = zeros if common_split is None else np.asarray(common_split, dtype=float)
        return RateReport(common_rates=common_rates, private_rates=private_rates, common_split=split)
    if strategy == SDMA:
        return RateReport(common_rates=zeros, private_rates=sdma_rates(channels, precoder), common_split=zeros)
    if strategy == NOMA:
        if order is None:
            order = default_noma_order(channels)
        return RateReport(common_rates=zeros, private_rates=noma_rates(channels, precoder, order), common_split=zeros)
    raise ValueError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")


def mfr(report: RateReport) -> float:
    """Minimum fairness rate: the smallest per-user total rate."""
    return float(np.min(report.total_rates))


def wsr(report: RateReport, weights: Sequence[float]) -> float:
    """Weighted sum rate."""
    weights = np.asarray(weights, dtype=float)
    if np.any(weights < 0):
        raise ValueError("weights must be nonnegative")
    if weights.shape != report.total_rates.shape:
        raise ValueError("one weight per user is required")
    return float(weights @ report.total_rates)


def ee(
    report: RateReport,
    precoder: PrecodingMatrix,
    amp_efficiency_inv: float,
    circuit_power: float,
) -> float:
    """Energy efficiency: sum rate over consumed power."""
    if not amp_efficiency_inv > 0:
        raise ValueError("amp_efficiency_inv must be > 0")
    if circuit_power < 0:
        raise ValueError("circuit_power must be >= 0")
    return float(report.total_rates.sum() / (amp_efficiency_inv * precoder.total_power() + circuit_power))
