"""Radar-side metrics: transmit covariance, Fisher information and CRB for a
moving point target, beampattern-approximation MSE, and radar mutual information.

The echo over one coherent block of length L is
    y[l] = alpha * exp(j*2*pi*F_D*l*T) * b(theta) a(theta)^H x[l] + noise,
with l = 1..L, transmit steering a (size Nt), receive steering b (size Nr).
The 4x4 Fisher information matrix over [theta, Re alpha, Im alpha, F_D] is
evaluated in expectation over unit-power streams, where the block sums
sum_l l^q x[l] x[l]^H reduce to S_q * R_X with S_0 = L, S_1 = L(L+1)/2 and
S_2 = L(L+1)(2L+1)/6 (the Doppler phases cancel pairwise in every product).
Every FIM entry is linear in R_X, which is what makes a smallest-eigenvalue
constraint on it a linear matrix inequality for the precoder optimizer.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .arrays import ArrayGeometry, steering, steering_derivative

SPEED_OF_LIGHT = 299_792_458.0

PARAMETER_NAMES = ("theta", "alpha_re", "alpha_im", "doppler")


class UnidentifiableParametersError(ValueError):
    """Raised when the FIM is singular or too ill-conditioned to invert."""


@dataclass
class RadarScene:
    """Geometry, target, and timing parameters of one sensing block.

    ``doppler`` may be given directly, or derived as 2*v*f_c/c when
    ``target_speed`` and ``carrier_freq`` are set instead.
    """

    geometry: ArrayGeometry
    target_angle: float
    reflection: complex = 1.0 + 0.0j
    doppler: Optional[float] = None
    symbol_period: float = 1e-6
    block_length: int = 1024
    noise_power: float = 1.0
    carrier_freq: Optional[float] = None
    target_speed: Optional[float] = None

    def __post_init__(self) -> None:
        if self.doppler is None:
            if self.carrier_freq is None or self.target_speed is None:
                raise ValueError("either doppler or (target_speed, carrier_freq) must be given")
            self.doppler = 2.0 * self.target_speed * self.carrier_freq / SPEED_OF_LIGHT
        self.reflection = complex(self.reflection)
        if self.block_length < 1:
            raise ValueError(f"block_length must be >= 1, got {self.block_length}")
        if not self.noise_power > 0:
            raise ValueError(f"noise_power must be > 0, got {self.noise_power}")
        if not self.symbol_period > 0:
            raise ValueError(f"symbol_period must be > 0, got {self.symbol_period}")
        if not abs(self.doppler * self.symbol_period) < 0.5:
            raise ValueError(
                "doppler * symbol_period must stay in (-0.5, 0.5) for unambiguous "
                f"estimation, got {self.doppler * self.symbol_period}"
            )

    def index_sums(self) -> tuple[float, float, float]:
        """S_0, S_1, S_2 for the symbol index l = 1..L."""
        length = float(self.block_length)
        return (
            length,
            length * (length + 1.0) / 2.0,
            length * (length + 1.0) * (2.0 * length + 1.0) / 6.0,
        )


@dataclass
class FisherReport:
    """FIM over [theta, Re alpha, Im alpha, doppler], optionally with its inverse."""

    fim: np.ndarray
    crb: Optional[np.ndarray] = None
    rcrb: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        self.fim = np.asarray(self.fim, dtype=float)
        if self.fim.shape != (4, 4):
            raise ValueError(f"fim must be 4x4, got shape {self.fim.shape}")


def covariance(precoder) -> np.ndarray:
    """Transmit covariance P P^H of a precoding matrix (or plain 2-D array)."""
    mat = precoder.as_matrix() if hasattr(precoder, "as_matrix") else np.asarray(precoder)
    if mat.ndim != 2:
        raise ValueError(f"precoder must be 2-D, got shape {mat.shape}")
    return mat @ mat.conj().T


def _check_covariance(r_x: np.ndarray, num_tx: int, psd_tol: float = 1e-8) -> np.ndarray:
    r_x = np.asarray(r_x, dtype=complex)
    if r_x.shape != (num_tx, num_tx):
        raise ValueError(f"covariance must be {num_tx}x{num_tx}, got shape {r_x.shape}")
    herm_err = np.max(np.abs(r_x - r_x.conj().T))
    scale = max(np.max(np.abs(r_x)), 1e-300)
    if herm_err > 1e-10 * scale:
        raise ValueError("covariance is not Hermitian")
    eigmin = float(np.linalg.eigvalsh(r_x)[0])
    if eigmin < -psd_tol * scale:
        raise ValueError(f"covariance is not PSD (min eigenvalue {eigmin})")
    return r_x


def _side_scalars(scene: RadarScene):
    """Steering vectors, their derivatives, and the receive-side constants."""
    geom = scene.geometry
    a = steering(geom, "tx", scene.target_angle)
    da = steering_derivative(geom, "tx", scene.target_angle)
    b = steering(geom, "rx", scene.target_angle)
    db = steering_derivative(geom, "rx", scene.target_angle)
    nr = float(geom.num_rx)
    bdb = complex(b.conj() @ db)      # b^H db, purely imaginary for a ULA
    dbdb = float(np.real(db.conj() @ db))
    return a, da, b, db, nr, bdb, dbdb


def fim_from_moments(
    m0: np.ndarray, m1: np.ndarray, m2: np.ndarray, scene: RadarScene
) -> FisherReport:
    """Assemble the FIM from the weighted block moments sum_l l^q x[l] x[l]^H.

    The expectation form replaces these by S_q * R_X; passing the exact
    per-realization moments yields the FIM of that specific symbol block.
    """
    a, da, _, _, nr, bdb, dbdb = _side_scalars(scene)
    alpha = scene.reflection
    w = 2.0 * np.pi * scene.symbol_period

    def quad(m: np.ndarray, left: np.ndarray, right: np.ndarray) -> complex:
        return complex(left.conj() @ np.asarray(m, dtype=complex) @ right)

    g0 = quad(m0, a, a)
    g1 = quad(m1, a, a)
    g2 = quad(m2, a, a)
    ga0 = quad(m0, a, da)     # a^H M0 da
    daa0 = quad(m0, da, da)   # da^H M0 da

    abs_alpha_sq = float(np.real(alpha * np.conj(alpha)))
    # u_q = trace(A M_q Adot^H) with A = b a^H and Adot its angle derivative.
    u0 = g0 * np.conj(bdb) + nr * ga0
    u1 = g1 * np.conj(bdb) + nr * quad(m1, a, da)

    f_tt = abs_alpha_sq * float(
        np.real(g0) * dbdb + 2.0 * np.real(ga0 * bdb) + np.real(daa0) * nr
    )
    f_tr = float(np.real(np.conj(alpha) * u0))
    f_ti = float(np.real(1j * np.conj(alpha) * u0))
    f_tf = w * abs_alpha_sq * float(np.real(1j * u1))
    f_rr = nr * float(np.real(g0))
    f_rf = w * nr * float(np.real(1j * alpha * g1))
    f_if = w * nr * float(np.real(alpha * g1))
    f_ff = w * w * abs_alpha_sq * nr * float(np.real(g2))

    base = np.array(
        [
            [f_tt, f_tr, f_ti, f_tf],
            [f_tr, f_rr, 0.0, f_rf],
            [f_ti, 0.0, f_rr, f_if],
            [f_tf, f_rf, f_if, f_ff],
        ]
    )
    # Single 2/sigma^2 prefactor applied last: doubling the noise power halves
    # every entry exactly in floating point.
    return FisherReport(fim=(2.0 / scene.noise_power) * base)


def fim(r_x: np.ndarray, scene: RadarScene) -> FisherReport:
    """Expectation-form FIM of the block for transmit covariance ``r_x``."""
    r_x = _check_covariance(r_x, scene.geometry.num_tx)
    s0, s1, s2 = scene.index_sums()
    return fim_from_moments(s0 * r_x, s1 * r_x, s2 * r_x, scene)


def fim_linear_map(scene: RadarScene) -> np.ndarray:
    """Coefficient tensor D with F[i, j] = Re(trace(D[i, j] @ R_X)).

    Shape (4, 4, Nt, Nt). This is the linear map behind :func:`fim`; the
    precoder optimizer uses it to state F >= t*I as an LMI in the lifted
    covariance variables.
    """
    a, da, _, _, nr, bdb, dbdb = _side_scalars(scene)
    alpha = scene.reflection
    w = 2.0 * np.pi * scene.symbol_period
    s0, s1, s2 = scene.index_sums()
    abs_alpha_sq = float(np.real(alpha * np.conj(alpha)))
    pre = 2.0 / scene.noise_power

    # trace(C M) selectors: trace(x y^H M) = y^H M x
    c_g = np.outer(a, a.conj())       # a^H M a
    c_ga = np.outer(da, a.conj())     # a^H M da
    c_ag = np.outer(a, da.conj())     # da^H M a
    c_daa = np.outer(da, da.conj())   # da^H M da

    nt = scene.geometry.num_tx
    d = np.zeros((4, 4, nt, nt), dtype=complex)
    c_u = np.conj(bdb) * c_g + nr * c_ga

    d[0, 0] = s0 * abs_alpha_sq * (dbdb * c_g + bdb * c_ga + np.conj(bdb) * c_ag + nr * c_daa)
    d[0, 1] = s0 * np.conj(alpha) * c_u
    d[0, 2] = s0 * 1j * np.conj(alpha) * c_u
    d[0, 3] = s1 * w * abs_alpha_sq * 1j * c_u
    d[1, 1] = s0 * nr * c_g
    d[2, 2] = d[1, 1]
    d[1, 3] = s1 * w * nr * 1j * alpha * c_g
    d[2, 3] = s1 * w * nr * alpha * c_g
    d[3, 3] = s2 * w * w * abs_alpha_sq * nr * c_g
    for i in range(4):
        for j in range(i + 1, 4):
            d[j, i] = d[i, j]
    return pre * d


def crb(report: FisherReport, cond_limit: float = 1e12) -> FisherReport:
    """Fill ``crb`` (FIM inverse) and ``rcrb`` (root of its diagonal).

    Raises :class:`UnidentifiableParametersError` when the FIM is singular or
    its condition number exceeds ``cond_limit``, naming the parameter
    combination that is (nearly) unobservable.
    """
    f = np.asarray(report.fim, dtype=float)
    f = (f + f.T) / 2.0
    eigvals, eigvecs = np.linalg.eigh(f)
    largest = float(eigvals[-1])
    smallest = float(eigvals[0])
    if largest <= 0 or smallest <= 0 or largest / smallest > cond_limit:
        direction = eigvecs[:, 0]
        terms = ", ".join(
            f"{coef:+.3f}*{name}" for coef, name in zip(direction, PARAMETER_NAMES)
        )
        raise UnidentifiableParametersError(
            "unidentifiable parameters: FIM is singular or ill-conditioned "
            f"(eigenvalues {eigvals}); near-null-space direction {terms}"
        )
    inv = eigvecs @ np.diag(1.0 / eigvals) @ eigvecs.T
    inv = (inv + inv.T) / 2.0
    residual = np.max(np.abs(f @ inv - np.eye(4)))
    if residual > 1e-8:
        raise UnidentifiableParametersError(
            f"FIM inversion residual {residual:.3e} exceeds 1e-8; matrix is numerically singular"
        )
    return FisherReport(fim=report.fim, crb=inv, rcrb=np.sqrt(np.diag(inv)))


@dataclass
class BeampatternSpec:
    """Desired transmit beampattern samples over a strictly increasing angle grid."""

    grid: np.ndarray
    desired: np.ndarray

    def __post_init__(self) -> None:
        self.grid = np.asarray(self.grid, dtype=float)
        self.desired = np.asarray(self.desired, dtype=float)
        if self.grid.ndim != 1 or self.grid.shape != self.desired.shape:
            raise ValueError("grid and desired must be 1-D arrays of equal length")
        if not np.all(np.diff(self.grid) > 0):
            raise ValueError("grid angles must be strictly increasing")
        if np.any(self.desired < 0):
            raise ValueError("desired beampattern values must be >= 0")


def beampattern(r_x: np.ndarray, geometry: ArrayGeometry, angles: np.ndarray) -> np.ndarray:
    """Transmit gain a(theta)^H R_X a(theta) at each angle."""
    r_x = _check_covariance(r_x, geometry.num_tx)
    a = np.stack([steering(geometry, "tx", ang) for ang in np.atleast_1d(angles)])
    return np.real(np.einsum("mi,ij,mj->m", a.conj(), r_x, a))


def beampattern_mse(r_x: np.ndarray, spec: BeampatternSpec, geometry: ArrayGeometry) -> float:
    """Squared-error sum between the desired and achieved transmit pattern."""
    achieved = beampattern(r_x, geometry, spec.grid)
    return float(np.sum(np.abs(spec.desired - achieved) ** 2))


def rmi(r_x: np.ndarray, scene: RadarScene, method: str = "closed") -> float:
    """Mutual information between the echo block and the sensing channel.

    ``method='closed'`` uses the rank-one collapse
    log2(1 + |alpha|^2 * Nr * a^H R_X a / sigma^2); ``method='determinant'``
    evaluates the full log-determinant for cross-checking.
    """
    r_x = _check_covariance(r_x, scene.geometry.num_tx)
    a = steering(scene.geometry, "tx", scene.target_angle)
    b = steering(scene.geometry, "rx", scene.target_angle)
    alpha = scene.reflection
    gain = float(np.real(a.conj() @ r_x @ a))
    if method == "closed":
        return float(np.log2(1.0 + abs(alpha) ** 2 * scene.geometry.num_rx * gain / scene.noise_power))
    if method == "determinant":
        h_r = alpha * np.outer(b, a.conj())
        m = np.eye(scene.geometry.num_rx) + h_r @ r_x @ h_r.conj().T / scene.noise_power
        sign, logdet = np.linalg.slogdet(m)
        if sign.real <= 0:
            raise ValueError("mutual-information determinant is not positive")
        return float(logdet / np.log(2.0))
    raise ValueError(f"method must be 'closed' or 'determinant', got {method!r}")
