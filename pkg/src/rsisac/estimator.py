"""Finite-block echo synthesis and target parameter estimation.

The estimation pipeline is sequential: angle from the MUSIC pseudo-spectrum
of the receive sample covariance (signal subspace of dimension one), Doppler
from a zero-padded periodogram of the beamformed, waveform-matched scalar
sequence, and the complex reflection coefficient by least squares given both.
Each grid peak is refined by local quadratic interpolation, and Monte-Carlo
RMSEs are compared against the root-CRBs of the same scene.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .arrays import steering
from .comm import PrecodingMatrix
from .radar import RadarScene, crb, fim
from .rng import substream

QPSK_ALPHABET = np.array([1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j]) / np.sqrt(2.0)


@dataclass
class SymbolBlock:
    """Unit-power stream symbols, one row per stream (common row first)."""

    symbols: np.ndarray
    modulation: str = "qpsk"

    def __post_init__(self) -> None:
        self.symbols = np.asarray(self.symbols, dtype=complex)
        if self.symbols.ndim != 2:
            raise ValueError(f"symbols must be (streams x length), got {self.symbols.shape}")

    @property
    def length(self) -> int:
        return self.symbols.shape[1]


@dataclass
class EchoBlock:
    samples: np.ndarray
    scene: RadarScene
    noise_seed: int
    block: SymbolBlock

    def __post_init__(self) -> None:
        self.samples = np.asarray(self.samples, dtype=complex)
        expected = (self.scene.geometry.num_rx, self.scene.block_length)
        if self.samples.shape != expected:
            raise ValueError(f"echo samples must be {expected}, got {self.samples.shape}")


@dataclass
class EstimateRecord:
    theta: float
    alpha: complex
    doppler: float
    theta_error: float
    alpha_re_error: float
    alpha_im_error: float
    doppler_error: float
    snr: float


@dataclass
class RmseRow:
    snr_db: float
    parameter: str
    rmse: float
    rcrb: float


def synth_symbols(num_streams: int, length: int, seed: int) -> SymbolBlock:
    """I.i.d. uniform QPSK rows, deterministic under the seed."""
    if num_streams < 1 or length < 1:
        raise ValueError("num_streams and length must be >= 1")
    rng = substream(seed, 3)
    picks = rng.integers(0, 4, size=(num_streams, length))
    return SymbolBlock(symbols=QPSK_ALPHABET[picks])


def synth_echo(
    precoder: PrecodingMatrix, block: SymbolBlock, scene: RadarScene, seed: int
) -> EchoBlock:
    """Rank-one moving-target echo plus circular Gaussian receiver noise."""
    matrix = precoder.as_matrix()
    if matrix.shape[1] != block.symbols.shape[0]:
        raise ValueError(
            f"precoder has {matrix.shape[1]} columns but the block carries "
            f"{block.symbols.shape[0]} streams"
        )
    if block.length != scene.block_length:
        raise ValueError(
            f"block length {block.length} does not match scene block_length {scene.block_length}"
        )
    geom = scene.geometry
    if matrix.shape[0] != geom.num_tx:
        raise ValueError("precoder antenna count does not match the scene array")
    a = steering(geom, "tx", scene.target_angle)
    b = steering(geom, "rx", scene.target_angle)
    x = matrix @ block.symbols                      # Nt x L
    l_index = np.arange(1, scene.block_length + 1)
    phase = np.exp(1j * 2.0 * np.pi * scene.doppler * l_index * scene.symbol_period)
    projected = a.conj() @ x                        # scalar per symbol
    clean = scene.reflection * np.outer(b, phase * projected)
    rng = substream(seed, 4)
    shape = (geom.num_rx, scene.block_length)
    noise = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * np.sqrt(
        scene.noise_power / 2.0
    )
    return EchoBlock(samples=clean + noise, scene=scene, noise_seed=seed, block=block)


def _quadratic_refine(values: np.ndarray, peak: int, spacing: float) -> float:
    """Sub-grid offset of a local maximum from three neighbouring samples."""
    if peak <= 0 or peak >= len(values) - 1:
        return 0.0
    left, mid, right = values[peak - 1], values[peak], values[peak + 1]
    denom = left - 2.0 * mid + right
    if denom >= 0:
        return 0.0
    return 0.5 * (left - right) / denom * spacing


def music_spectrum(
    samples: np.ndarray, scene: RadarScene, grid: np.ndarray
) -> np.ndarray:
    """MUSIC pseudo-spectrum over the angle grid (signal dimension one)."""
    num_rx, length = samples.shape
    if length < 2:
        raise ValueError("at least two snapshots are needed for a sample covariance")
    cov = samples @ samples.conj().T / length
    _, vecs = np.linalg.eigh(cov)
    noise_basis = vecs[:, : num_rx - 1]
    geom = scene.geometry
    steer = np.stack([steering(geom, "rx", ang) for ang in grid])  # M x Nr
    proj = np.abs(steer.conj() @ noise_basis) ** 2                 # M x (Nr-1)
    denom = proj.sum(axis=1)
    return 1.0 / np.maximum(denom, 1e-30)


def estimate(
    echo: EchoBlock,
    precoder: PrecodingMatrix,
    theta_grid: Optional[np.ndarray] = None,
    doppler_pad: int = 8,
) -> EstimateRecord:
    """Angle, Doppler, and reflection estimates with truth deltas."""
    scene = echo.scene
    if theta_grid is None:
        theta_grid = np.deg2rad(np.arange(-89.5, 89.51, 0.1))
    theta_grid = np.asarray(theta_grid, dtype=float)
    spectrum = music_spectrum(echo.samples, scene, theta_grid)
    peak = int(np.argmax(spectrum))
    spacing = theta_grid[1] - theta_grid[0] if len(theta_grid) > 1 else 0.0
    theta_hat = float(theta_grid[peak] + _quadratic_refine(spectrum, peak, spacing))

    geom = scene.geometry
    a_hat = steering(geom, "tx", theta_hat)
    b_hat = steering(geom, "rx", theta_hat)
    x = precoder.as_matrix() @ echo.block.symbols
    reference = a_hat.conj() @ x
    beamformed = b_hat.conj() @ echo.samples
    z = beamformed * reference.conj()

    length = scene.block_length
    n_fft = int(doppler_pad) * length
    spec = np.abs(np.fft.fft(z, n=n_fft)) ** 2
    freqs = np.fft.fftfreq(n_fft, d=scene.symbol_period)
    valid = np.abs(freqs * scene.symbol_period) < 0.5
    order = np.argsort(freqs[valid])
    sorted_freqs = freqs[valid][order]
    sorted_spec = spec[valid][order]
    fpeak = int(np.argmax(sorted_spec))
    df = sorted_freqs[1] - sorted_freqs[0] if len(sorted_freqs) > 1 else 0.0
    doppler_hat = float(sorted_freqs[fpeak] + _quadratic_refine(sorted_spec, fpeak, df))

    l_index = np.arange(1, length + 1)
    phase = np.exp(1j * 2.0 * np.pi * doppler_hat * l_index * scene.symbol_period)
    basis = np.outer(b_hat, phase * reference)      # model echo for alpha = 1
    energy = float(np.real(np.vdot(basis, basis)))
    alpha_hat = complex(np.vdot(basis, echo.samples) / energy) if energy > 0 else 0.0 + 0.0j

    truth_alpha = scene.reflection
    snr = abs(truth_alpha) ** 2 * float(
        np.sum(np.abs(precoder.as_matrix()) ** 2)
    ) / scene.noise_power
    return EstimateRecord(
        theta=theta_hat,
        alpha=alpha_hat,
        doppler=doppler_hat,
        theta_error=theta_hat - scene.target_angle,
        alpha_re_error=alpha_hat.real - truth_alpha.real,
        alpha_im_error=alpha_hat.imag - truth_alpha.imag,
        doppler_error=doppler_hat - scene.doppler,
        snr=snr,
    )


def _scene_at_snr(scene: RadarScene, precoder: PrecodingMatrix, snr_linear: float) -> RadarScene:
    """Rescale |alpha| so that |alpha|^2 * P / sigma_m^2 hits the target."""
    total_power = precoder.total_power()
    magnitude = np.sqrt(snr_linear * scene.noise_power / total_power)
    old = scene.reflection
    phase = old / abs(old) if abs(old) > 0 else 1.0 + 0.0j
    return RadarScene(
        geometry=scene.geometry,
        target_angle=scene.target_angle,
        reflection=magnitude * phase,
        doppler=scene.doppler,
        symbol_period=scene.symbol_period,
        block_length=scene.block_length,
        noise_power=scene.noise_power,
    )


def rmse_experiment(
    solution,
    scene: RadarScene,
    snr_list_db: Sequence[float],
    trials: int,
    seed: int,
    theta_grid: Optional[np.ndarray] = None,
    doppler_pad: int = 8,
) -> list[RmseRow]:
    """Monte-Carlo estimation RMSE against the root-CRB per radar SNR.

    ``solution`` may be a DesignSolution or a bare PrecodingMatrix. Trials
    reuse the same symbol/noise substreams at every SNR (common random
    numbers), so RMSE ratios across SNRs are directly comparable.
    """
    precoder = getattr(solution, "precoder", solution)
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rows: list[RmseRow] = []
    num_streams = precoder.num_streams + 1
    r_x = precoder.as_matrix() @ precoder.as_matrix().conj().T
    for snr_db in snr_list_db:
        snr_linear = 10.0 ** (float(snr_db) / 10.0)
        scene_snr = _scene_at_snr(scene, precoder, snr_linear)
        report = crb(fim(r_x, scene_snr))
        errors = np.empty((trials, 4))
        for trial in range(trials):
            block = synth_symbols(num_streams, scene_snr.block_length, seed=hash_pair(seed, trial))
            echo = synth_echo(precoder, block, scene_snr, seed=hash_pair(seed, trial) + 1)
            record = estimate(echo, precoder, theta_grid=theta_grid, doppler_pad=doppler_pad)
            errors[trial] = (
                record.theta_error,
                record.alpha_re_error,
                record.alpha_im_error,
                record.doppler_error,
            )
        rmse = np.sqrt(np.mean(errors**2, axis=0))
        for i, name in enumerate(("theta", "alpha_re", "alpha_im", "doppler")):
            rows.append(
                RmseRow(
                    snr_db=float(snr_db),
                    parameter=name,
                    rmse=float(rmse[i]),
                    rcrb=float(report.rcrb[i]),
                )
            )
    return rows


def hash_pair(seed: int, trial: int) -> int:
    """Stable per-trial seed derivation (keeps trial streams disjoint)."""
    return (int(seed) * 1_000_003 + int(trial) * 2) % (2**63)
