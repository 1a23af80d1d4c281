"""Joint sensing/communication precoder design.

Maximizes min-rate fairness plus a weighted smallest-FIM-eigenvalue term
(or maximizes the FIM eigenvalue floor subject to a min-rate target) over the
per-antenna-power-constrained precoder set, for rate-splitting, SDMA, and
NOMA stream structures.

Route: semidefinite lifting W = p p^H per stream makes the FIM floor a linear
matrix inequality in the summed covariance; the non-convex rates are split as
log2(signal + interference + noise) - log2(interference + noise) with the
subtracted term linearized at the previous iterate, giving a convex inner
approximation that is solved iteratively (successive convex approximation).
Rank-1 precoders are then recovered by dominant-eigenvector extraction plus
Gaussian randomization, with per-antenna power restored exactly by a diagonal
rescale and the common-rate split re-solved as a small LP.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import cvxpy as cp
import numpy as np
from scipy.optimize import linprog

from . import conic
from .channels import ChannelSet
from .comm import (
    NOMA,
    RSMA,
    SDMA,
    STRATEGIES,
    PrecodingMatrix,
    RateReport,
    default_noma_order,
    mfr,
    rate_report,
)
from .radar import FisherReport, RadarScene, UnidentifiableParametersError, crb, fim, fim_linear_map
from .rng import substream

LN2 = np.log(2.0)

TRADEOFF = "tradeoff"
RATE_CONSTRAINED = "rate_constrained"
MODES = (TRADEOFF, RATE_CONSTRAINED)


class RateTargetInfeasibleError(RuntimeError):
    """The min-rate target cannot be met; carries the best MFR found."""

    def __init__(self, strategy: str, target: float, best_mfr: float):
        super().__init__(
            f"{strategy}: min-rate target {target} bps/Hz is infeasible; "
            f"best achieved MFR {best_mfr:.6g} bps/Hz"
        )
        self.strategy = strategy
        self.target = target
        self.best_mfr = best_mfr


@dataclass
class DesignProblem:
    """One precoder design instance."""

    channels: ChannelSet
    scene: RadarScene
    strategy: str = RSMA
    tradeoff: float = 0.0
    total_power: float = 0.1
    mode: str = TRADEOFF
    min_rate: float = 0.0
    noma_order: Optional[Sequence[int]] = None

    def __post_init__(self) -> None:
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not self.total_power > 0:
            raise ValueError("total_power must be > 0")
        if self.tradeoff < 0:
            raise ValueError("tradeoff weight must be >= 0")
        if self.min_rate < 0:
            raise ValueError("min_rate must be >= 0")
        if self.strategy == NOMA and self.channels.groups is not None:
            raise ValueError("NOMA does not support multicast groups")
        if self.channels.num_tx != self.scene.geometry.num_tx:
            raise ValueError(
                f"channels have {self.channels.num_tx} antennas but the scene array "
                f"has {self.scene.geometry.num_tx}"
            )


@dataclass
class SolverOptions:
    max_iter: int = 30
    obj_tol: float = 1e-4
    solver: str = "CLARABEL"
    randomization_candidates: int = 100
    seed: int = 0
    rank1_gap_warn: float = 0.5
    record_dir: Optional[Path] = None
    verbose: bool = False


@dataclass
class Diagnostics:
    iterations: int = 0
    converged: bool = False
    stop_reason: str = ""
    surrogate_values: list[float] = field(default_factory=list)
    solver_values: list[float] = field(default_factory=list)
    lifted_objective: float = np.nan
    recovered_objective: float = np.nan
    rank1_gap: float = np.nan
    per_antenna_residual: float = np.nan
    decodability_residual: float = np.nan
    fim_floor_margin: float = np.nan
    lambda_normalized: float = np.nan
    fim_scale: float = np.nan
    backend: str = ""
    candidates_evaluated: int = 0
    recovery_fallback: bool = False
    warnings: list[str] = field(default_factory=list)


@dataclass
class DesignSolution:
    precoder: PrecodingMatrix
    common_split: np.ndarray
    t: float
    rates: RateReport
    fisher: FisherReport
    diagnostics: Diagnostics

    def objective(self, tradeoff: float) -> float:
        return mfr(self.rates) + tradeoff * self.t


@dataclass
class SweepPoint:
    tradeoff: float
    solution: Optional[DesignSolution] = None
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.solution is not None


@dataclass
class _Structure:
    """Stream layout derived from strategy and grouping."""

    strategy: str
    has_common: bool
    num_streams: int
    stream_of: np.ndarray            # user -> private stream index
    members: list[list[int]]         # stream -> users it serves
    order: Optional[np.ndarray]      # NOMA decode order (position -> user)
    pairs: list[tuple[int, int, np.ndarray]]  # NOMA (stream, decoder, later streams)


def _structure(problem: DesignProblem) -> _Structure:
    channels = problem.channels
    k = channels.num_users
    if problem.strategy == NOMA:
        order = (
            np.asarray(problem.noma_order, dtype=int)
            if problem.noma_order is not None
            else default_noma_order(channels)
        )
        if sorted(order.tolist()) != list(range(k)):
            raise ValueError(f"noma_order must be a permutation of 0..{k - 1}")
        pairs = []
        for i in range(k):
            later = order[i + 1 :].copy()
            for j in range(i, k):
                pairs.append((int(order[i]), int(order[j]), later))
        return _Structure(
            strategy=NOMA,
            has_common=False,
            num_streams=k,
            stream_of=np.arange(k),
            members=[[u] for u in range(k)],
            order=order,
            pairs=pairs,
        )
    stream_of = channels.stream_of_user()
    members = [[] for _ in range(channels.num_streams)]
    for user, s in enumerate(stream_of):
        members[int(s)].append(user)
    return _Structure(
        strategy=problem.strategy,
        has_common=problem.strategy == RSMA,
        num_streams=channels.num_streams,
        stream_of=stream_of,
        members=members,
        order=None,
        pairs=[],
    )


def _project_per_antenna(matrix: np.ndarray, per_antenna: float) -> np.ndarray:
    """Diagonal rescale so every antenna (row) radiates exactly per_antenna."""
    out = np.array(matrix, dtype=complex)
    row_power = np.sum(np.abs(out) ** 2, axis=1)
    dead = row_power <= 0
    if np.any(dead):
        out[dead, :] = np.sqrt(per_antenna / out.shape[1])
        row_power = np.sum(np.abs(out) ** 2, axis=1)
    return out * np.sqrt(per_antenna / row_power)[:, None]


COMMON_INIT_FRACTION = 0.1


def _mrt_initial(problem: DesignProblem, structure: _Structure) -> np.ndarray:
    """Matched-filter start: private columns along their users' channels, the
    common column along the channel matrix's dominant direction with a small
    power share (the iterations grow it only where it helps, which keeps the
    private-only point inside the first convex surrogate's reach), projected
    to exact per-antenna power."""
    h = problem.channels.channels
    nt = problem.channels.num_tx

    def principal(rows: list[int]) -> np.ndarray:
        m = np.zeros((nt, nt), dtype=complex)
        for u in rows:
            m += np.outer(h[u].conj(), h[u])
        if np.max(np.abs(m)) == 0:
            return np.ones(nt, dtype=complex) / np.sqrt(nt)
        _, vecs = np.linalg.eigh(m)
        v = vecs[:, -1]
        return v / np.linalg.norm(v)

    if structure.has_common:
        common_power = COMMON_INIT_FRACTION * problem.total_power
        private_power = (problem.total_power - common_power) / structure.num_streams
        cols = [principal(list(range(problem.channels.num_users))) * np.sqrt(common_power)]
    else:
        private_power = problem.total_power / structure.num_streams
        cols = [np.zeros(nt, dtype=complex)]
    for s in range(structure.num_streams):
        cols.append(principal(structure.members[s]) * np.sqrt(private_power))
    matrix = np.column_stack(cols)
    return _project_per_antenna(matrix, problem.total_power / nt)


def split_common_rate(budget: float, private_rates: np.ndarray) -> tuple[np.ndarray, float]:
    """Max-min allocation of a common-rate budget on top of private rates.

    Solves max v s.t. v <= c_k + rp_k, sum(c) <= budget, c >= 0 as an LP.
    """
    rp = np.asarray(private_rates, dtype=float)
    k = rp.shape[0]
    budget = max(0.0, float(budget))
    if budget == 0.0 or k == 0:
        return np.zeros(k), float(np.min(rp)) if k else 0.0
    # variables [c_1..c_K, v], maximize v
    cost = np.zeros(k + 1)
    cost[-1] = -1.0
    a_ub = np.zeros((k + 1, k + 1))
    b_ub = np.zeros(k + 1)
    for i in range(k):
        a_ub[i, i] = -1.0
        a_ub[i, -1] = 1.0
        b_ub[i] = rp[i]
    a_ub[k, :k] = 1.0
    b_ub[k] = budget
    bounds = [(0.0, None)] * k + [(None, None)]
    res = linprog(cost, A_ub=a_ub, b_ub=b_ub, bounds=bounds, method="highs")
    if not res.success:
        raise RuntimeError(f"common-split LP failed: {res.message}")
    c = np.clip(res.x[:k], 0.0, None)
    total = c.sum()
    if total > budget and total > 0:
        c *= budget / total
    return c, float(np.min(c + rp))


class _Subproblem:
    """Compiled parametrized convex subproblem, reused across SCA iterations
    and trade-off sweeps."""

    def __init__(self, problem: DesignProblem, structure: _Structure):
        channels = problem.channels
        nt = channels.num_tx
        k = channels.num_users
        self.structure = structure
        self.sigma = channels.noise_power
        self.h_outer = [np.outer(channels.channels[u], channels.channels[u].conj()) for u in range(k)]
        self.mode = problem.mode
        s_count = structure.num_streams

        self.w_private = [cp.Variable((nt, nt), hermitian=True, name=f"W{s}") for s in range(s_count)]
        self.w_common = cp.Variable((nt, nt), hermitian=True, name="Wc") if structure.has_common else None
        self.rate_floor = cp.Variable(name="r")
        self.t = cp.Variable(name="t")
        self.c = cp.Variable(k, nonneg=True, name="c") if structure.has_common else None
        self.lam = cp.Parameter(nonneg=True, name="lam")
        self.r_min = cp.Parameter(name="r_min")

        r_x = sum(self.w_private) if self.w_common is None else self.w_common + sum(self.w_private)
        constraints = [w >> 0 for w in self.w_private]
        if self.w_common is not None:
            constraints.append(self.w_common >> 0)
        per_antenna = problem.total_power / nt
        constraints.append(cp.real(cp.diag(r_x)) == np.full(nt, per_antenna))

        d_map = fim_linear_map(problem.scene)
        entries = [[cp.real(cp.trace(d_map[i, j] @ r_x)) for j in range(4)] for i in range(4)]
        f_expr = cp.bmat(entries)
        f_sym = (f_expr + f_expr.T) / 2
        constraints += [f_sym - self.t * np.eye(4) >> 0, self.t >= 0, self.t <= cp.trace(f_sym) / 4]

        def power(user: int, w) -> cp.Expression:
            return cp.real(cp.trace(w @ self.h_outer[user]))

        if structure.strategy == NOMA:
            n_pairs = len(structure.pairs)
            self.log_i0 = cp.Parameter(n_pairs, name="log_i0")
            self.inv_i0 = cp.Parameter(n_pairs, pos=True, name="inv_i0")
            for idx, (stream, decoder, later) in enumerate(structure.pairs):
                interf = sum((power(decoder, self.w_private[m]) for m in later), cp.Constant(0.0)) + self.sigma
                tot = power(decoder, self.w_private[stream]) + interf
                surrogate = (cp.log(tot) - self.log_i0[idx] - interf * self.inv_i0[idx] + 1.0) / LN2
                constraints.append(self.rate_floor <= surrogate)
        else:
            self.log_i0 = cp.Parameter(k, name="log_i0")
            self.inv_i0 = cp.Parameter(k, pos=True, name="inv_i0")
            private_surrogates = []
            for u in range(k):
                own = structure.stream_of[u]
                interf = sum(
                    (power(u, self.w_private[s]) for s in range(s_count) if s != own),
                    cp.Constant(0.0),
                ) + self.sigma
                tot = power(u, self.w_private[own]) + interf
                private_surrogates.append(
                    (cp.log(tot) - self.log_i0[u] - interf * self.inv_i0[u] + 1.0) / LN2
                )
            for u in range(k):
                # multicast: the served rate is the group's weakest member
                for member in structure.members[structure.stream_of[u]]:
                    bound = private_surrogates[member]
                    if structure.has_common:
                        constraints.append(self.rate_floor <= self.c[u] + bound)
                    else:
                        constraints.append(self.rate_floor <= bound)
            if structure.has_common:
                self.log_j0 = cp.Parameter(k, name="log_j0")
                self.inv_j0 = cp.Parameter(k, pos=True, name="inv_j0")
                for u in range(k):
                    noise_all = sum((power(u, w) for w in self.w_private), cp.Constant(0.0)) + self.sigma
                    tot_c = power(u, self.w_common) + noise_all
                    surrogate_c = (
                        cp.log(tot_c) - self.log_j0[u] - noise_all * self.inv_j0[u] + 1.0
                    ) / LN2
                    constraints.append(cp.sum(self.c) <= surrogate_c)

        if problem.mode == TRADEOFF:
            objective = cp.Maximize(self.rate_floor + self.lam * self.t)
        else:
            constraints.append(self.rate_floor >= self.r_min)
            objective = cp.Maximize(self.t)
        self.cvxpy_problem = cp.Problem(objective, constraints)

    # ---- linearization state -------------------------------------------------

    def private_interference(self, pw: np.ndarray) -> np.ndarray:
        """Interference-plus-noise for each user's own-stream decode."""
        struct = self.structure
        k = pw.shape[0]
        own = pw[np.arange(k), struct.stream_of]
        return pw.sum(axis=1) - own + self.sigma

    def pair_interference(self, pw: np.ndarray) -> np.ndarray:
        return np.array(
            [pw[decoder, later].sum() + self.sigma for (_, decoder, later) in self.structure.pairs]
        )

    def set_linearization(self, pw: np.ndarray, pc: Optional[np.ndarray]) -> None:
        if self.structure.strategy == NOMA:
            i0 = self.pair_interference(pw)
        else:
            i0 = self.private_interference(pw)
        self._i0 = i0
        self.log_i0.value = np.log(i0)
        self.inv_i0.value = 1.0 / i0
        if self.structure.has_common:
            j0 = pw.sum(axis=1) + self.sigma
            self._j0 = j0
            self.log_j0.value = np.log(j0)
            self.inv_j0.value = 1.0 / j0

    # ---- surrogate evaluation (numpy, same linearization constants) ---------

    def surrogate_private(self, pw: np.ndarray) -> np.ndarray:
        struct = self.structure
        k = pw.shape[0]
        own = pw[np.arange(k), struct.stream_of]
        interf = self.private_interference(pw)
        raw = (np.log(own + interf) - np.log(self._i0) - interf / self._i0 + 1.0) / LN2
        out = raw.copy()
        for members in struct.members:
            out[members] = raw[members].min()
        return out

    def surrogate_common(self, pw: np.ndarray, pc: np.ndarray) -> np.ndarray:
        j = pw.sum(axis=1) + self.sigma
        return (np.log(pc + j) - np.log(self._j0) - j / self._j0 + 1.0) / LN2

    def surrogate_pairs(self, pw: np.ndarray) -> np.ndarray:
        vals = np.empty(len(self.structure.pairs))
        for idx, (stream, decoder, later) in enumerate(self.structure.pairs):
            interf = pw[decoder, later].sum() + self.sigma
            vals[idx] = (
                np.log(pw[decoder, stream] + interf) - np.log(self._i0[idx])
                - interf / self._i0[idx] + 1.0
            ) / LN2
        return vals

    def surrogate_rate_floor(self, pw: np.ndarray, pc: Optional[np.ndarray]) -> float:
        if self.structure.strategy == NOMA:
            return float(np.min(self.surrogate_pairs(pw)))
        rp = self.surrogate_private(pw)
        if not self.structure.has_common:
            return float(np.min(rp))
        rc = self.surrogate_common(pw, pc)
        _, floor = split_common_rate(float(np.min(rc)), rp)
        return floor


def _psd_clip(w: np.ndarray) -> np.ndarray:
    """Project a nearly-PSD Hermitian matrix onto the PSD cone."""
    w = (w + w.conj().T) / 2
    vals, vecs = np.linalg.eigh(w)
    if vals[0] >= 0:
        return w
    return (vecs * np.clip(vals, 0.0, None)) @ vecs.conj().T


def _lifted_powers(
    channels: ChannelSet, w_private: list[np.ndarray], w_common: Optional[np.ndarray]
) -> tuple[np.ndarray, Optional[np.ndarray]]:
    h = channels.channels
    pw = np.empty((channels.num_users, len(w_private)))
    for s, w in enumerate(w_private):
        pw[:, s] = np.clip(np.real(np.einsum("ki,ij,kj->k", h.conj(), w, h)), 0.0, None)
    pc = None
    if w_common is not None:
        pc = np.clip(np.real(np.einsum("ki,ij,kj->k", h.conj(), w_common, h)), 0.0, None)
    return pw, pc


def _fim_floor(r_x: np.ndarray, scene: RadarScene) -> tuple[FisherReport, float]:
    report = fim(r_x, scene)
    return report, float(np.linalg.eigvalsh(report.fim)[0])


def fim_scale(scene: RadarScene, total_power: float) -> float:
    """Characteristic FIM magnitude of the scene: the eigenvalue floor of the
    isotropic covariance (P/Nt) I, used to normalize trade-off weights."""
    nt = scene.geometry.num_tx
    iso = (total_power / nt) * np.eye(nt)
    report = fim(iso, scene)
    eigs = np.linalg.eigvalsh(report.fim)
    floor = float(eigs[0])
    if floor > 1e-12 * max(float(eigs[-1]), 1.0):
        return floor
    mean = float(np.trace(report.fim)) / 4.0
    return mean if mean > 0 else 1.0


def _sca(
    problem: DesignProblem,
    options: SolverOptions,
    sub: _Subproblem,
    w_private0: list[np.ndarray],
    w_common0: Optional[np.ndarray],
    diagnostics: Diagnostics,
) -> tuple[list[np.ndarray], Optional[np.ndarray]]:
    """Iterate the convex surrogate to (approximate) convergence in the lifted
    variables, with a monotone acceptance safeguard."""
    scene = problem.scene
    lam = problem.tradeoff
    sub.lam.value = lam
    sub.r_min.value = problem.min_rate

    w_private = [w.copy() for w in w_private0]
    w_common = None if w_common0 is None else w_common0.copy()
    pw, pc = _lifted_powers(problem.channels, w_private, w_common)
    sub.set_linearization(pw, pc)
    r_x = sum(w_private) if w_common is None else w_common + sum(w_private)
    _, floor0 = _fim_floor(r_x, scene)
    if problem.mode == TRADEOFF:
        value = sub.surrogate_rate_floor(pw, pc) + lam * floor0
    else:
        value = floor0
    diagnostics.surrogate_values.append(value)
    best_value = value
    best_state = (w_private, w_common)

    solve_kwargs = {"solver": options.solver, "verbose": options.verbose}
    for iteration in range(1, options.max_iter + 1):
        try:
            self_value = sub.cvxpy_problem.solve(**solve_kwargs)
        except cp.SolverError as exc:
            diagnostics.warnings.append(f"iteration {iteration}: solver error {exc}")
            diagnostics.stop_reason = "solver_error"
            break
        status = sub.cvxpy_problem.status
        if status in (cp.INFEASIBLE, cp.UNBOUNDED, cp.INFEASIBLE_INACCURATE, cp.UNBOUNDED_INACCURATE):
            raise conic.BackendError(
                f"subproblem {status} at iteration {iteration} "
                f"(strategy {problem.strategy}, mode {problem.mode}; check the "
                "min-rate / per-antenna power constraint set)"
            )
        if status == cp.OPTIMAL_INACCURATE:
            diagnostics.warnings.append(f"iteration {iteration}: inaccurate solve")
        diagnostics.solver_values.append(float(self_value))

        new_private = [_psd_clip(np.asarray(w.value)) for w in sub.w_private]
        new_common = None
        if sub.w_common is not None:
            new_common = _psd_clip(np.asarray(sub.w_common.value))
        new_pw, new_pc = _lifted_powers(problem.channels, new_private, new_common)
        r_x = sum(new_private) if new_common is None else new_common + sum(new_private)
        _, floor = _fim_floor(r_x, scene)
        if problem.mode == TRADEOFF:
            candidate = sub.surrogate_rate_floor(new_pw, new_pc) + lam * floor
        else:
            candidate = floor

        if options.record_dir is not None:
            options.record_dir.mkdir(parents=True, exist_ok=True)
            recorded = conic.from_cvxpy(sub.cvxpy_problem)
            conic.save_problem(
                recorded, Path(options.record_dir) / f"subproblem_{iteration:03d}.txt"
            )

        dip_tolerance = 1e-8 * max(1.0, abs(value))
        if candidate < value - dip_tolerance:
            # a real regression, beyond solver noise: keep the best iterate
            diagnostics.stop_reason = "no_surrogate_improvement"
            diagnostics.converged = True
            break
        improvement = candidate - value
        w_private, w_common, pw, pc, value = new_private, new_common, new_pw, new_pc, candidate
        diagnostics.surrogate_values.append(value)
        diagnostics.iterations = iteration
        if value > best_value:
            best_value = value
            best_state = (w_private, w_common)
        sub.set_linearization(pw, pc)
        if improvement < options.obj_tol:
            diagnostics.converged = True
            diagnostics.stop_reason = "objective_tolerance"
            break
    else:
        diagnostics.stop_reason = "max_iterations"
    w_private, w_common = best_state
    diagnostics.lifted_objective = best_value
    return w_private, w_common


def _candidate_columns(
    w_private: list[np.ndarray],
    w_common: Optional[np.ndarray],
    count: int,
    seed: int,
) -> list[np.ndarray]:
    """Dominant-eigenvector candidate followed by Gaussian randomizations."""
    mats = ([w_common] if w_common is not None else []) + list(w_private)
    sqrts = []
    leads = []
    for w in mats:
        vals, vecs = np.linalg.eigh(w)
        vals = np.clip(vals, 0.0, None)
        sqrts.append(vecs @ np.diag(np.sqrt(vals)) @ vecs.conj().T)
        leads.append(np.sqrt(vals[-1]) * vecs[:, -1])
    candidates = [np.column_stack(leads)]
    rng = substream(seed, 2)
    nt = mats[0].shape[0]
    for _ in range(count):
        cols = []
        for sq in sqrts:
            g = (rng.standard_normal(nt) + 1j * rng.standard_normal(nt)) / np.sqrt(2.0)
            cols.append(sq @ g)
        candidates.append(np.column_stack(cols))
    return candidates


def _recover(
    problem: DesignProblem,
    structure: _Structure,
    options: SolverOptions,
    w_private: list[np.ndarray],
    w_common: Optional[np.ndarray],
    diagnostics: Diagnostics,
    extra_candidates: Optional[list[np.ndarray]] = None,
) -> DesignSolution:
    """Best feasible rank-1 solution from the lifted optimum.

    ``extra_candidates`` (for example the warm-start precoder) join the pool
    ahead of the eigenvector and randomized candidates.
    """
    nt = problem.channels.num_tx
    per_antenna = problem.total_power / nt
    raw_candidates = list(extra_candidates or []) + _candidate_columns(
        w_private, w_common, options.randomization_candidates, options.seed
    )
    lam = problem.tradeoff
    scored = []
    best_mfr = -np.inf
    for idx, raw in enumerate(raw_candidates):
        matrix = _project_per_antenna(raw, per_antenna)
        if w_common is None:
            matrix = np.column_stack([np.zeros(nt, dtype=complex), matrix])
        precoder = PrecodingMatrix.from_matrix(matrix)
        residual = float(
            np.max(np.abs(precoder.per_antenna_power() - per_antenna)) / per_antenna
        )
        report, floor = _fim_floor(precoder.as_matrix() @ precoder.as_matrix().conj().T, problem.scene)
        if structure.strategy == RSMA:
            from .comm import rsma_rates

            common_rates, private_rates = rsma_rates(problem.channels, precoder)
            split, rate_floor = split_common_rate(float(np.min(common_rates)), private_rates)
        else:
            split = np.zeros(problem.channels.num_users)
            rates = rate_report(
                structure.strategy, problem.channels, precoder, order=structure.order
            )
            rate_floor = float(np.min(rates.total_rates))
        best_mfr = max(best_mfr, rate_floor)
        if problem.mode == TRADEOFF:
            objective = rate_floor + lam * floor
            feasible = True
        else:
            feasible = rate_floor >= problem.min_rate - 1e-9 * max(1.0, problem.min_rate)
            objective = floor if feasible else -np.inf
        if feasible:
            scored.append((-objective, residual, idx, precoder, split, floor, report))
    diagnostics.candidates_evaluated = len(raw_candidates)
    if not scored:
        raise RateTargetInfeasibleError(problem.strategy, problem.min_rate, best_mfr)
    scored.sort(key=lambda item: (item[0], item[1], item[2]))
    _, residual, _, precoder, split, floor, report = scored[0]

    rates = rate_report(
        structure.strategy,
        problem.channels,
        precoder,
        common_split=split,
        order=structure.order,
    )
    try:
        report = crb(report)
    except UnidentifiableParametersError as exc:
        diagnostics.warnings.append(f"CRB unavailable: {exc}")
    diagnostics.per_antenna_residual = residual
    if structure.has_common:
        diagnostics.decodability_residual = float(
            max(0.0, split.sum() - float(np.min(rates.common_rates)))
        )
    else:
        diagnostics.decodability_residual = 0.0
    recovered = mfr(rates) + lam * floor if problem.mode == TRADEOFF else floor
    diagnostics.recovered_objective = recovered
    lifted = diagnostics.lifted_objective
    diagnostics.rank1_gap = float(lifted - recovered)
    if np.isfinite(lifted) and abs(lifted) > 1e-12:
        if diagnostics.rank1_gap > options.rank1_gap_warn * abs(lifted):
            diagnostics.warnings.append(
                f"rank-1 recovery gap {diagnostics.rank1_gap:.3g} exceeds "
                f"{options.rank1_gap_warn:.0%} of the lifted objective {lifted:.3g}"
            )
    diagnostics.fim_floor_margin = float(np.linalg.eigvalsh(report.fim)[0] - floor)
    return DesignSolution(
        precoder=precoder,
        common_split=split,
        t=floor,
        rates=rates,
        fisher=report,
        diagnostics=diagnostics,
    )


def _candidate_layout(precoder: PrecodingMatrix, structure: _Structure) -> np.ndarray:
    """Raw candidate columns for :func:`_recover` (no common column when the
    strategy has none)."""
    if structure.has_common:
        return precoder.as_matrix()
    return precoder.privates


def _initial_lifted(
    problem: DesignProblem,
    structure: _Structure,
    initial_precoder: Optional[PrecodingMatrix],
) -> tuple[list[np.ndarray], Optional[np.ndarray]]:
    if initial_precoder is not None:
        matrix = initial_precoder.as_matrix()
        if matrix.shape[1] != structure.num_streams + 1:
            raise ValueError(
                f"initial precoder has {matrix.shape[1]} columns, expected "
                f"{structure.num_streams + 1} (common first)"
            )
        matrix = _project_per_antenna(matrix, problem.total_power / problem.channels.num_tx)
        if not structure.has_common:
            # fold any common-column power into the privates via projection
            matrix = np.column_stack([np.zeros(matrix.shape[0]), matrix[:, 1:]])
            matrix = _project_per_antenna(matrix, problem.total_power / problem.channels.num_tx)
    else:
        matrix = _mrt_initial(problem, structure)
    w_common = np.outer(matrix[:, 0], matrix[:, 0].conj()) if structure.has_common else None
    w_private = [
        np.outer(matrix[:, 1 + s], matrix[:, 1 + s].conj()) for s in range(structure.num_streams)
    ]
    return w_private, w_common


def solve(
    problem: DesignProblem,
    options: Optional[SolverOptions] = None,
    initial_precoder: Optional[PrecodingMatrix] = None,
    _cache: Optional[dict] = None,
) -> DesignSolution:
    """Run the SCA loop and rank-1 recovery for one design instance.

    In rate-constrained mode the min-rate target is first checked by a pure
    max-min-rate solve; an unreachable target raises
    :class:`RateTargetInfeasibleError` carrying the best MFR found.
    """
    options = options or SolverOptions()
    structure = _structure(problem)
    cache = _cache if _cache is not None else {}

    def subproblem_for(mode: str) -> _Subproblem:
        key = (mode, problem.strategy)
        if key not in cache:
            probe = DesignProblem(
                channels=problem.channels,
                scene=problem.scene,
                strategy=problem.strategy,
                tradeoff=problem.tradeoff,
                total_power=problem.total_power,
                mode=mode,
                min_rate=problem.min_rate,
                noma_order=problem.noma_order,
            )
            cache[key] = _Subproblem(probe, structure)
        return cache[key]

    f_scale = fim_scale(problem.scene, problem.total_power)

    if problem.mode == RATE_CONSTRAINED:
        stage1 = DesignProblem(
            channels=problem.channels,
            scene=problem.scene,
            strategy=problem.strategy,
            tradeoff=0.0,
            total_power=problem.total_power,
            mode=TRADEOFF,
            noma_order=problem.noma_order,
        )
        max_rate_solution = solve(stage1, options, initial_precoder, _cache=cache)
        achieved = mfr(max_rate_solution.rates)
        if achieved < problem.min_rate - 1e-9 * max(1.0, problem.min_rate):
            raise RateTargetInfeasibleError(problem.strategy, problem.min_rate, achieved)

        diagnostics = Diagnostics(
            backend=options.solver,
            lambda_normalized=problem.tradeoff * f_scale,
            fim_scale=f_scale,
        )
        sub = subproblem_for(RATE_CONSTRAINED)
        w_private0, w_common0 = _initial_lifted(problem, structure, max_rate_solution.precoder)
        w_private, w_common = _sca(problem, options, sub, w_private0, w_common0, diagnostics)
        try:
            return _recover(
                problem,
                structure,
                options,
                w_private,
                w_common,
                diagnostics,
                extra_candidates=[_candidate_layout(max_rate_solution.precoder, structure)],
            )
        except RateTargetInfeasibleError:
            # lifted solution did not survive rank-1 recovery; fall back to the
            # max-min-rate stage's feasible precoder
            diagnostics.recovery_fallback = True
            fallback = max_rate_solution
            fallback.diagnostics.recovery_fallback = True
            fallback.diagnostics.warnings.append(
                "rate-constrained recovery infeasible; kept the max-min-rate precoder"
            )
            return fallback

    sub = subproblem_for(TRADEOFF)
    starts: list[Optional[PrecodingMatrix]] = [initial_precoder]
    if structure.has_common and initial_precoder is None:
        # second start from the solved private-only design: rate splitting
        # subsumes it (silent common stream), so starting there keeps the
        # returned design at least as good as its own special case
        private_problem = DesignProblem(
            channels=problem.channels,
            scene=problem.scene,
            strategy=SDMA,
            tradeoff=problem.tradeoff,
            total_power=problem.total_power,
            noma_order=None,
        )
        private_solution = solve(private_problem, options, _cache=cache)
        starts.append(
            PrecodingMatrix(
                common=np.zeros(problem.channels.num_tx, dtype=complex),
                privates=private_solution.precoder.privates,
            )
        )
    best: Optional[DesignSolution] = None
    for start in starts:
        diagnostics = Diagnostics(
            backend=options.solver,
            lambda_normalized=problem.tradeoff * f_scale,
            fim_scale=f_scale,
        )
        w_private0, w_common0 = _initial_lifted(problem, structure, start)
        w_private, w_common = _sca(problem, options, sub, w_private0, w_common0, diagnostics)
        extras = [] if start is None else [_candidate_layout(start, structure)]
        candidate = _recover(
            problem, structure, options, w_private, w_common, diagnostics, extra_candidates=extras
        )
        if best is None or candidate.objective(problem.tradeoff) > best.objective(problem.tradeoff):
            best = candidate
    return best


def sweep_lambda(
    problem: DesignProblem,
    tradeoff_values: Sequence[float],
    options: Optional[SolverOptions] = None,
) -> list[SweepPoint]:
    """Solve the trade-off problem along a nondecreasing weight grid, warm
    starting every point from the previous solution."""
    values = [float(v) for v in tradeoff_values]
    if not values:
        raise ValueError("tradeoff_values must be nonempty")
    if any(b < a for a, b in zip(values, values[1:])):
        raise ValueError("tradeoff_values must be nondecreasing")
    options = options or SolverOptions()
    cache: dict = {}
    points: list[SweepPoint] = []
    warm: Optional[PrecodingMatrix] = None
    for lam in values:
        instance = DesignProblem(
            channels=problem.channels,
            scene=problem.scene,
            strategy=problem.strategy,
            tradeoff=lam,
            total_power=problem.total_power,
            mode=TRADEOFF,
            noma_order=problem.noma_order,
        )
        try:
            solution = solve(instance, options, initial_precoder=warm, _cache=cache)
        except (conic.BackendError, cp.SolverError, RuntimeError) as exc:
            points.append(SweepPoint(tradeoff=lam, error=str(exc)))
            continue
        warm = solution.precoder
        points.append(SweepPoint(tradeoff=lam, solution=solution))
    return points


def solve_radar_only(
    scene: RadarScene, total_power: float, solver: str = "CLARABEL"
) -> tuple[float, np.ndarray]:
    """Pure sensing reference: maximize the FIM eigenvalue floor over all PSD
    covariances with exact per-antenna power (no rate terms)."""
    nt = scene.geometry.num_tx
    r_x = cp.Variable((nt, nt), hermitian=True)
    t = cp.Variable()
    d_map = fim_linear_map(scene)
    entries = [[cp.real(cp.trace(d_map[i, j] @ r_x)) for j in range(4)] for i in range(4)]
    f_expr = cp.bmat(entries)
    f_sym = (f_expr + f_expr.T) / 2
    constraints = [
        r_x >> 0,
        cp.real(cp.diag(r_x)) == np.full(nt, total_power / nt),
        f_sym - t * np.eye(4) >> 0,
    ]
    prob = cp.Problem(cp.Maximize(t), constraints)
    prob.solve(solver=solver)
    if prob.status not in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE):
        raise conic.BackendError(f"radar-only solve failed with status {prob.status}")
    return float(t.value), np.asarray(r_x.value)
