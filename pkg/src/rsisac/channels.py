"""Downlink channel generation and file-based ingestion.

Two generators: i.i.d. Rayleigh fading for the terrestrial case, and a
parametric multibeam generator for the satellite case (Gaussian beam gain per
feed, one feed per beam, uniformly placed users, random phases). Generated or
third-party channels round-trip through a plain-text file format so exact
realizations can be replayed.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .rng import substream

CHANNEL_FILE_VERSION = 1


class ChannelFileError(ValueError):
    """Malformed channel file; the message carries the offending line."""


@dataclass
class ChannelSet:
    """K downlink channel vectors, the user-side noise power, and optional
    multicast groups (each group shares one private stream)."""

    channels: np.ndarray
    noise_power: float
    groups: Optional[list[list[int]]] = None

    def __post_init__(self) -> None:
        self.channels = np.atleast_2d(np.asarray(self.channels, dtype=complex))
        if not np.all(np.isfinite(self.channels)):
            raise ValueError("channel entries must be finite")
        if not self.noise_power > 0:
            raise ValueError(f"noise_power must be > 0, got {self.noise_power}")
        if self.groups is not None:
            self.groups = [list(map(int, g)) for g in self.groups]
            flat = sorted(u for g in self.groups for u in g)
            if flat != list(range(self.num_users)):
                raise ValueError(
                    f"groups must partition users 0..{self.num_users - 1}, got {self.groups}"
                )
            if any(len(g) == 0 for g in self.groups):
                raise ValueError("empty multicast group")

    @property
    def num_users(self) -> int:
        return self.channels.shape[0]

    @property
    def num_tx(self) -> int:
        return self.channels.shape[1]

    @property
    def num_streams(self) -> int:
        """Private streams: one per group when multicast, else one per user."""
        return len(self.groups) if self.groups is not None else self.num_users

    def stream_of_user(self) -> np.ndarray:
        """Index of the private stream serving each user."""
        if self.groups is None:
            return np.arange(self.num_users)
        out = np.empty(self.num_users, dtype=int)
        for s, members in enumerate(self.groups):
            out[members] = s
        return out


def rayleigh_channels(
    num_users: int, num_tx: int, seed: int, noise_power: float = 1e-3
) -> ChannelSet:
    """I.i.d. CN(0, 1) entries; user k draws from substream (seed, k)."""
    if num_users < 1 or num_tx < 1:
        raise ValueError("num_users and num_tx must be >= 1")
    rows = []
    for k in range(num_users):
        rng = substream(seed, 0, k)
        rows.append((rng.standard_normal(num_tx) + 1j * rng.standard_normal(num_tx)) / np.sqrt(2.0))
    return ChannelSet(channels=np.stack(rows), noise_power=noise_power)


@dataclass
class SatelliteBeamConfig:
    """Multibeam layout: one feed per beam, users placed uniformly inside
    their beam's footprint, Gaussian beam-gain rolloff across feeds."""

    num_beams: int
    users_per_beam: int
    beam_centers: Optional[np.ndarray] = None   # radians; default: uniform grid
    beam_width: float = np.deg2rad(10.0)        # 3 dB full width, radians
    peak_gain: float = 1.0
    noise_power: float = 1e-3

    def __post_init__(self) -> None:
        if self.num_beams < 1:
            raise ValueError("num_beams must be >= 1")
        if self.users_per_beam < 1:
            raise ValueError("users_per_beam must be >= 1")
        if self.beam_centers is None:
            half_span = np.deg2rad(40.0)
            self.beam_centers = np.linspace(-half_span, half_span, self.num_beams)
        self.beam_centers = np.asarray(self.beam_centers, dtype=float)
        if self.beam_centers.shape != (self.num_beams,):
            raise ValueError(
                f"beam_centers must list one angle per beam, got shape {self.beam_centers.shape}"
            )
        if not self.beam_width > 0:
            raise ValueError("beam_width must be > 0")


def beam_gain(config: SatelliteBeamConfig, offset: np.ndarray) -> np.ndarray:
    """Gaussian feed gain at an angular offset from the beam axis; the gain
    halves at offset = beam_width / 2."""
    kappa = np.log(2.0) / (config.beam_width / 2.0) ** 2
    return config.peak_gain * np.exp(-kappa * np.asarray(offset, dtype=float) ** 2)


def satellite_channels(config: SatelliteBeamConfig, seed: int) -> ChannelSet:
    """K = users_per_beam * num_beams users; h_k[n] = sqrt(G(pos_k - center_n)) * e^{j phi}.

    Positions and phases for user k come from substream (seed, k), so growing
    the constellation never reshuffles existing users. Groups collect the
    users of each beam (they share that beam's private stream).
    """
    rho = config.users_per_beam
    k_total = rho * config.num_beams
    half = config.beam_width / 2.0
    rows = []
    groups: list[list[int]] = [[] for _ in range(config.num_beams)]
    for k in range(k_total):
        beam = k // rho
        rng = substream(seed, 1, k)
        position = config.beam_centers[beam] + rng.uniform(-half, half)
        gains = beam_gain(config, position - config.beam_centers)
        phases = rng.uniform(0.0, 2.0 * np.pi, size=config.num_beams)
        rows.append(np.sqrt(gains) * np.exp(1j * phases))
        groups[beam].append(k)
    return ChannelSet(channels=np.stack(rows), noise_power=config.noise_power, groups=groups)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def save_channels(channel_set: ChannelSet, path) -> None:
    """Write the documented plain-text channel file (round-trip exact)."""
    lines = [
        f"channelset v{CHANNEL_FILE_VERSION}",
        f"K {channel_set.num_users}",
        f"Nt {channel_set.num_tx}",
        f"noise_power {_fmt(channel_set.noise_power)}",
    ]
    if channel_set.groups is not None:
        stream = channel_set.stream_of_user()
        lines.append("groups " + " ".join(str(int(s)) for s in stream))
    for k in range(channel_set.num_users):
        h = channel_set.channels[k]
        parts = []
        for value in h:
            parts.append(_fmt(value.real))
            parts.append(_fmt(value.imag))
        lines.append(" ".join(parts))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_channels(path) -> ChannelSet:
    """Parse a channel file written by :func:`save_channels` (or by hand)."""
    raw = Path(path).read_text(encoding="utf-8").splitlines()
    lines = [(i + 1, line.strip()) for i, line in enumerate(raw) if line.strip()]
    if not lines:
        raise ChannelFileError(f"{path}: empty channel file")
    lineno, header = lines[0]
    if header != f"channelset v{CHANNEL_FILE_VERSION}":
        raise ChannelFileError(f"line {lineno}: expected 'channelset v{CHANNEL_FILE_VERSION}', got {header!r}")

    fields: dict[str, str] = {}
    stream_of_user: Optional[list[int]] = None
    body_start = None
    for idx, (lineno, line) in enumerate(lines[1:], start=1):
        key, _, rest = line.partition(" ")
        if key in ("K", "Nt", "noise_power"):
            fields[key] = rest.strip()
        elif key == "groups":
            try:
                stream_of_user = [int(tok) for tok in rest.split()]
            except ValueError as exc:
                raise ChannelFileError(f"line {lineno}: bad groups entry: {exc}") from None
        else:
            body_start = idx
            break
    for required in ("K", "Nt", "noise_power"):
        if required not in fields:
            raise ChannelFileError(f"{path}: missing header field {required!r}")
    try:
        k_total = int(fields["K"])
        num_tx = int(fields["Nt"])
        noise_power = float(fields["noise_power"])
    except ValueError as exc:
        raise ChannelFileError(f"{path}: bad header value: {exc}") from None
    if body_start is None:
        raise ChannelFileError(f"{path}: no channel rows found")

    body = lines[body_start:]
    if len(body) != k_total:
        raise ChannelFileError(
            f"{path}: expected {k_total} channel rows, found {len(body)}"
        )
    channels = np.empty((k_total, num_tx), dtype=complex)
    for user, (lineno, line) in enumerate(body):
        tokens = line.split()
        if len(tokens) != 2 * num_tx:
            raise ChannelFileError(
                f"line {lineno}: user {user} has {len(tokens)} values, expected {2 * num_tx} "
                f"(interleaved re/im for Nt={num_tx})"
            )
        try:
            values = np.array([float(t) for t in tokens])
        except ValueError as exc:
            raise ChannelFileError(f"line {lineno}: user {user}: {exc}") from None
        channels[user] = values[0::2] + 1j * values[1::2]

    groups = None
    if stream_of_user is not None:
        if len(stream_of_user) != k_total:
            raise ChannelFileError(
                f"{path}: groups line lists {len(stream_of_user)} users, expected {k_total}"
            )
        n_streams = max(stream_of_user) + 1
        groups = [[] for _ in range(n_streams)]
        for user, s in enumerate(stream_of_user):
            if s < 0:
                raise ChannelFileError(f"{path}: negative stream index for user {user}")
            groups[s].append(user)
        if any(len(g) == 0 for g in groups):
            raise ChannelFileError(f"{path}: groups line leaves an empty stream")
    return ChannelSet(channels=channels, noise_power=noise_power, groups=groups)
