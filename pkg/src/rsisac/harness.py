"""Config-driven experiment harness.

Wires channel generation, the precoder optimizer, and the estimation pipeline
into three reproducible experiments (terrestrial trade-off sweep, rate-
constrained estimation RMSE, satellite multicast trade-off) and writes
machine-readable CSV results plus a JSON metadata side file. Identical
(config, seed) pairs produce byte-identical outputs.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import yaml

from . import __version__
from .arrays import ArrayGeometry
from .channels import (
    ChannelSet,
    SatelliteBeamConfig,
    load_channels,
    rayleigh_channels,
    satellite_channels,
    save_channels,
)
from .comm import STRATEGIES, ee, mfr, wsr
from .estimator import rmse_experiment
from .optimizer import (
    RATE_CONSTRAINED,
    DesignProblem,
    DesignSolution,
    RateTargetInfeasibleError,
    SolverOptions,
    fim_scale,
    solve,
    sweep_lambda,
)
from .radar import RadarScene
from .rng import derive_seed

TRADEOFF_FIELDS = [
    "strategy",
    "lam",
    "seed",
    "mfr",
    "wsr",
    "ee",
    "t",
    "rcrb_theta",
    "rcrb_alpha_re",
    "rcrb_alpha_im",
    "rcrb_doppler",
    "iterations",
    "converged",
]

ESTIMATION_FEASIBILITY_FIELDS = ["strategy", "seed", "min_rate", "feasible", "achieved_mfr"]
ESTIMATION_RECORD_FIELDS = ["strategy", "seed", "snr_db", "parameter", "rmse", "rcrb"]

PARAM_ORDER = {"theta": 0, "alpha_re": 1, "alpha_im": 2, "doppler": 3}


class ConfigError(ValueError):
    """Invalid or incomplete experiment configuration."""


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((float(dbm) - 30.0) / 10.0)


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


@dataclass
class ArraySection:
    num_tx: int = 8
    num_rx: int = 9
    spacing_wavelengths: float = 0.5


@dataclass
class TargetSection:
    angle_deg: float = 45.0
    speed: float = 8.0
    carrier_hz: float = 3.5e9
    symbol_period: float = 1e-6
    block_length: int = 1024
    radar_snr_db: float = -20.0
    reflection_phase_deg: float = 45.0


@dataclass
class SweepSection:
    lambda_grid: list[float] = field(default_factory=lambda: [0.0, 0.1, 0.3, 1.0, 3.0, 10.0])
    lambda_mode: str = "normalized"  # normalized | raw


@dataclass
class EstimationSection:
    min_rate: float = 6.0
    snr_grid_db: list[float] = field(default_factory=lambda: [-10.0, 0.0, 10.0])
    trials: int = 200
    doppler_pad: int = 8
    theta_grid_step_deg: float = 0.1


@dataclass
class SatelliteSection:
    users_per_beam: int = 2
    beam_width_deg: float = 10.0
    span_deg: float = 80.0
    peak_gain_db: float = 0.0


@dataclass
class MetricsSection:
    amp_efficiency_inv: float = 1.0
    circuit_power_w: float = 0.1


@dataclass
class RunSection:
    realizations: int = 5
    master_seed: int = 1
    jobs: int = 1


@dataclass
class SolverSection:
    backend: str = "CLARABEL"
    max_iter: int = 30
    obj_tol: float = 1e-4
    candidates: int = 100


@dataclass
class ExperimentConfig:
    scenario: str = "terrestrial"
    array: ArraySection = field(default_factory=ArraySection)
    users: int = 4
    power_dbm: float = 20.0
    noise_dbm: float = 0.0
    target: TargetSection = field(default_factory=TargetSection)
    strategies: list[str] = field(default_factory=lambda: ["rsma", "sdma"])
    sweep: SweepSection = field(default_factory=SweepSection)
    estimation: EstimationSection = field(default_factory=EstimationSection)
    satellite: SatelliteSection = field(default_factory=SatelliteSection)
    metrics: MetricsSection = field(default_factory=MetricsSection)
    run: RunSection = field(default_factory=RunSection)
    solver: SolverSection = field(default_factory=SolverSection)
    channel_file: Optional[str] = None

    def __post_init__(self) -> None:
        if self.scenario not in ("terrestrial", "satellite"):
            raise ConfigError(f"scenario must be terrestrial or satellite, got {self.scenario!r}")
        for strategy in self.strategies:
            if strategy not in STRATEGIES:
                raise ConfigError(f"unknown strategy {self.strategies!r}")
        if self.scenario == "satellite" and "noma" in self.strategies:
            raise ConfigError("NOMA is not defined for the multicast satellite scenario")
        if self.sweep.lambda_mode not in ("normalized", "raw"):
            raise ConfigError("sweep.lambda_mode must be 'normalized' or 'raw'")
        grid = self.sweep.lambda_grid
        if not grid or any(b < a for a, b in zip(grid, grid[1:])):
            raise ConfigError("sweep.lambda_grid must be nonempty and nondecreasing")
        if self.users < 1:
            raise ConfigError("users must be >= 1")
        if self.run.realizations < 1:
            raise ConfigError("run.realizations must be >= 1")
        if self.satellite.users_per_beam < 1:
            raise ConfigError("satellite.users_per_beam must be >= 1")


def _section(cls, data: dict, name: str):
    known = {f for f in cls.__dataclass_fields__}
    extra = set(data) - known
    if extra:
        raise ConfigError(f"unknown keys in section {name!r}: {sorted(extra)}")
    return cls(**data)


def config_from_dict(raw: dict) -> ExperimentConfig:
    raw = dict(raw or {})
    sections = {
        "array": ArraySection,
        "target": TargetSection,
        "sweep": SweepSection,
        "estimation": EstimationSection,
        "satellite": SatelliteSection,
        "metrics": MetricsSection,
        "run": RunSection,
        "solver": SolverSection,
    }
    kwargs = {}
    for key, value in raw.items():
        if key in sections:
            if not isinstance(value, dict):
                raise ConfigError(f"section {key!r} must be a mapping")
            kwargs[key] = _section(sections[key], value, key)
        elif key in ("scenario", "users", "power_dbm", "noise_dbm", "strategies", "channel_file"):
            kwargs[key] = value
        else:
            raise ConfigError(f"unknown config key {key!r}")
    try:
        return ExperimentConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path) -> ExperimentConfig:
    try:
        raw = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML: {exc}") from None
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return config_from_dict(raw)


def build_scene(config: ExperimentConfig) -> RadarScene:
    """Scene with sigma_m^2 = 1 W and |alpha| chosen to hit the radar SNR."""
    power = dbm_to_watts(config.power_dbm)
    snr = 10.0 ** (config.target.radar_snr_db / 10.0)
    noise_power = 1.0
    magnitude = np.sqrt(snr * noise_power / power)
    phase = np.deg2rad(config.target.reflection_phase_deg)
    geometry = ArrayGeometry(
        num_tx=config.array.num_tx,
        num_rx=config.array.num_rx,
        spacing_wavelengths=config.array.spacing_wavelengths,
    )
    return RadarScene(
        geometry=geometry,
        target_angle=np.deg2rad(config.target.angle_deg),
        reflection=magnitude * np.exp(1j * phase),
        symbol_period=config.target.symbol_period,
        block_length=config.target.block_length,
        noise_power=noise_power,
        carrier_freq=config.target.carrier_hz,
        target_speed=config.target.speed,
    )


def build_channels(config: ExperimentConfig, realization: int) -> ChannelSet:
    if config.channel_file is not None:
        return load_channels(config.channel_file)
    noise = dbm_to_watts(config.noise_dbm)
    seed = derive_seed(config.run.master_seed, 10, realization)
    if config.scenario == "terrestrial":
        return rayleigh_channels(config.users, config.array.num_tx, seed, noise_power=noise)
    sat = config.satellite
    half_span = np.deg2rad(sat.span_deg) / 2.0
    beam_config = SatelliteBeamConfig(
        num_beams=config.array.num_tx,
        users_per_beam=sat.users_per_beam,
        beam_centers=np.linspace(-half_span, half_span, config.array.num_tx),
        beam_width=np.deg2rad(sat.beam_width_deg),
        peak_gain=10.0 ** (sat.peak_gain_db / 10.0),
        noise_power=noise,
    )
    return satellite_channels(beam_config, seed)


def solver_options(config: ExperimentConfig, task_seed: int) -> SolverOptions:
    return SolverOptions(
        max_iter=config.solver.max_iter,
        obj_tol=config.solver.obj_tol,
        solver=config.solver.backend,
        randomization_candidates=config.solver.candidates,
        seed=task_seed,
    )


def lambda_values(config: ExperimentConfig) -> tuple[list[float], float]:
    """Raw trade-off weights for the sweep plus the FIM scale used to map
    normalized weights."""
    scene = build_scene(config)
    power = dbm_to_watts(config.power_dbm)
    scale = fim_scale(scene, power)
    if config.sweep.lambda_mode == "raw":
        return [float(v) for v in config.sweep.lambda_grid], scale
    return [float(v) / scale for v in config.sweep.lambda_grid], scale


def _record_from_solution(
    config: ExperimentConfig, strategy: str, lam: float, seed: int, solution: DesignSolution
) -> dict:
    weights = np.ones(solution.rates.total_rates.shape[0])
    rcrb = solution.fisher.rcrb
    row = {
        "strategy": strategy,
        "lam": lam,
        "seed": seed,
        "mfr": mfr(solution.rates),
        "wsr": wsr(solution.rates, weights),
        "ee": ee(
            solution.rates,
            solution.precoder,
            config.metrics.amp_efficiency_inv,
            config.metrics.circuit_power_w,
        ),
        "t": solution.t,
        "rcrb_theta": rcrb[0] if rcrb is not None else "",
        "rcrb_alpha_re": rcrb[1] if rcrb is not None else "",
        "rcrb_alpha_im": rcrb[2] if rcrb is not None else "",
        "rcrb_doppler": rcrb[3] if rcrb is not None else "",
        "iterations": solution.diagnostics.iterations,
        "converged": solution.diagnostics.converged,
    }
    return row


def _failed_record(strategy: str, lam: float, seed: int) -> dict:
    row = {name: "" for name in TRADEOFF_FIELDS}
    row.update({"strategy": strategy, "lam": lam, "seed": seed, "converged": False})
    return row


def _tradeoff_task(args: tuple) -> list[dict]:
    config_dict, strategy, realization = args
    config = config_from_dict(config_dict)
    scene = build_scene(config)
    channels = build_channels(config, realization)
    lams, _ = lambda_values(config)
    task_seed = derive_seed(config.run.master_seed, 20, realization)
    options = solver_options(config, task_seed)
    problem = DesignProblem(
        channels=channels,
        scene=scene,
        strategy=strategy,
        total_power=dbm_to_watts(config.power_dbm),
    )
    rows = []
    for point in sweep_lambda(problem, lams, options):
        if point.ok:
            rows.append(
                _record_from_solution(config, strategy, point.tradeoff, realization, point.solution)
            )
        else:
            rows.append(_failed_record(strategy, point.tradeoff, realization))
    return rows


def _write_csv(path: Path, header: Sequence[str], rows: Sequence[dict]) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(row[name]) for name in header))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _read_csv(path: Path) -> list[dict]:
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines:
        return []
    header = lines[0].split(",")
    return [dict(zip(header, line.split(","))) for line in lines[1:] if line]


def _mean_std(values: list[float]) -> tuple[float, float]:
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        return float("nan"), float("nan")
    return float(arr.mean()), float(arr.std(ddof=0))


def summarize_tradeoff(rows: list[dict]) -> list[dict]:
    """Per-(strategy, lambda) means and stds across seeds (the plotted data)."""
    metrics = ["mfr", "wsr", "ee", "t", "rcrb_theta", "rcrb_alpha_re", "rcrb_alpha_im", "rcrb_doppler"]
    buckets: dict[tuple, list[dict]] = {}
    for row in rows:
        if row["mfr"] == "" or row["mfr"] is None:
            continue
        buckets.setdefault((str(row["strategy"]), float(row["lam"])), []).append(row)
    out = []
    for (strategy, lam) in sorted(buckets):
        group = buckets[(strategy, lam)]
        entry = {"strategy": strategy, "lam": lam, "n": len(group)}
        for metric in metrics:
            values = [float(r[metric]) for r in group if r[metric] != ""]
            mean, std = _mean_std(values)
            entry[f"{metric}_mean"] = mean
            entry[f"{metric}_std"] = std
        out.append(entry)
    return out


TRADEOFF_SUMMARY_FIELDS = ["strategy", "lam", "n"] + [
    f"{m}_{s}"
    for m in ["mfr", "wsr", "ee", "t", "rcrb_theta", "rcrb_alpha_re", "rcrb_alpha_im", "rcrb_doppler"]
    for s in ("mean", "std")
]

ESTIMATION_SUMMARY_FIELDS = ["strategy", "snr_db", "parameter", "n", "rmse_mean", "rcrb_mean"]


def summarize_estimation(rows: list[dict]) -> list[dict]:
    buckets: dict[tuple, list[dict]] = {}
    for row in rows:
        key = (str(row["strategy"]), float(row["snr_db"]), str(row["parameter"]))
        buckets.setdefault(key, []).append(row)
    out = []
    for key in sorted(buckets, key=lambda k: (k[0], k[1], PARAM_ORDER.get(k[2], 9))):
        group = buckets[key]
        rmse_mean, _ = _mean_std([float(r["rmse"]) for r in group])
        rcrb_mean, _ = _mean_std([float(r["rcrb"]) for r in group])
        out.append(
            {
                "strategy": key[0],
                "snr_db": key[1],
                "parameter": key[2],
                "n": len(group),
                "rmse_mean": rmse_mean,
                "rcrb_mean": rcrb_mean,
            }
        )
    return out


def _metadata(config: ExperimentConfig, extra: dict) -> dict:
    scene = build_scene(config)
    meta = {
        "toolkit_version": __version__,
        "config": asdict(config),
        "units": {
            "power_watts": dbm_to_watts(config.power_dbm),
            "user_noise_watts": dbm_to_watts(config.noise_dbm),
            "radar_noise_watts": scene.noise_power,
            "reflection_magnitude": abs(scene.reflection),
            "doppler_hz": scene.doppler,
            "dbm_conversion": "watts = 10**((dbm - 30)/10)",
        },
        "averaging": "per-lambda means of MFR and of each RCRB taken separately across realizations",
    }
    meta.update(extra)
    return meta


def _write_metadata(path: Path, config: ExperimentConfig, extra: dict) -> None:
    path.write_text(
        json.dumps(_metadata(config, extra), sort_keys=True, indent=2, default=str) + "\n",
        encoding="utf-8",
    )


def _run_sweep_experiment(
    config: ExperimentConfig,
    out_dir: Path,
    base_name: str,
    jobs: Optional[int] = None,
) -> dict[str, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    jobs = jobs or config.run.jobs
    realizations = 1 if config.channel_file is not None else config.run.realizations
    tasks = [
        (asdict(config), strategy, realization)
        for strategy in config.strategies
        for realization in range(realizations)
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_tradeoff_task, tasks))
    else:
        results = [_tradeoff_task(task) for task in tasks]
    rows = [row for chunk in results for row in chunk]
    rows.sort(key=lambda r: (str(r["strategy"]), float(r["lam"]), int(r["seed"])))

    records_path = out_dir / f"{base_name}_records.csv"
    summary_path = out_dir / f"{base_name}_summary.csv"
    _write_csv(records_path, TRADEOFF_FIELDS, rows)
    _write_csv(summary_path, TRADEOFF_SUMMARY_FIELDS, summarize_tradeoff(rows))
    lams, scale = lambda_values(config)
    extra = {
        "experiment": base_name,
        "lambda_raw": lams,
        "lambda_fim_scale": scale,
        "realizations": realizations,
    }
    if config.scenario == "satellite":
        channels = build_channels(config, 0)
        extra["users"] = channels.num_users
        extra["multicast_groups"] = channels.num_streams
    meta_path = out_dir / f"{base_name}_metadata.json"
    _write_metadata(meta_path, config, extra)
    return {"records": records_path, "summary": summary_path, "metadata": meta_path}


def run_tradeoff(config: ExperimentConfig, out_dir, jobs: Optional[int] = None) -> dict[str, Path]:
    if config.scenario != "terrestrial":
        raise ConfigError("run_tradeoff expects scenario: terrestrial")
    return _run_sweep_experiment(config, Path(out_dir), "tradeoff", jobs)


def run_satellite(config: ExperimentConfig, out_dir, jobs: Optional[int] = None) -> dict[str, Path]:
    if config.scenario != "satellite":
        raise ConfigError("run_satellite expects scenario: satellite")
    return _run_sweep_experiment(config, Path(out_dir), "satellite", jobs)


def _estimation_task(args: tuple) -> tuple[list[dict], list[dict]]:
    config_dict, strategy, realization = args
    config = config_from_dict(config_dict)
    scene = build_scene(config)
    channels = build_channels(config, realization)
    task_seed = derive_seed(config.run.master_seed, 21, realization)
    options = solver_options(config, task_seed)
    est = config.estimation
    problem = DesignProblem(
        channels=channels,
        scene=scene,
        strategy=strategy,
        total_power=dbm_to_watts(config.power_dbm),
        mode=RATE_CONSTRAINED,
        min_rate=est.min_rate,
    )
    feasibility = {
        "strategy": strategy,
        "seed": realization,
        "min_rate": est.min_rate,
        "feasible": True,
        "achieved_mfr": "",
    }
    try:
        solution = solve(problem, options)
    except RateTargetInfeasibleError as exc:
        feasibility["feasible"] = False
        feasibility["achieved_mfr"] = exc.best_mfr
        return [feasibility], []
    feasibility["achieved_mfr"] = mfr(solution.rates)
    theta_grid = np.deg2rad(np.arange(-89.5, 89.51, est.theta_grid_step_deg))
    rows = rmse_experiment(
        solution,
        scene,
        est.snr_grid_db,
        est.trials,
        seed=derive_seed(config.run.master_seed, 22, realization),
        theta_grid=theta_grid,
        doppler_pad=est.doppler_pad,
    )
    records = [
        {
            "strategy": strategy,
            "seed": realization,
            "snr_db": row.snr_db,
            "parameter": row.parameter,
            "rmse": row.rmse,
            "rcrb": row.rcrb,
        }
        for row in rows
    ]
    return [feasibility], records


def run_estimation(config: ExperimentConfig, out_dir, jobs: Optional[int] = None) -> dict[str, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    jobs = jobs or config.run.jobs
    realizations = 1 if config.channel_file is not None else config.run.realizations
    tasks = [
        (asdict(config), strategy, realization)
        for strategy in config.strategies
        for realization in range(realizations)
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_estimation_task, tasks))
    else:
        results = [_estimation_task(task) for task in tasks]
    feasibility = [row for feas, _ in results for row in feas]
    records = [row for _, recs in results for row in recs]
    feasibility.sort(key=lambda r: (str(r["strategy"]), int(r["seed"])))
    records.sort(
        key=lambda r: (
            str(r["strategy"]),
            int(r["seed"]),
            float(r["snr_db"]),
            PARAM_ORDER.get(str(r["parameter"]), 9),
        )
    )
    feas_path = out_dir / "estimation_feasibility.csv"
    records_path = out_dir / "estimation_records.csv"
    summary_path = out_dir / "estimation_summary.csv"
    _write_csv(feas_path, ESTIMATION_FEASIBILITY_FIELDS, feasibility)
    _write_csv(records_path, ESTIMATION_RECORD_FIELDS, records)
    _write_csv(
        summary_path,
        ESTIMATION_SUMMARY_FIELDS,
        summarize_estimation([{k: v for k, v in r.items()} for r in records]),
    )
    meta_path = out_dir / "estimation_metadata.json"
    _write_metadata(meta_path, config, {"experiment": "estimation", "realizations": realizations})
    return {
        "feasibility": feas_path,
        "records": records_path,
        "summary": summary_path,
        "metadata": meta_path,
    }


def report(results_dir, out_dir=None) -> dict[str, Path]:
    """Re-aggregate record CSVs in a results directory into summary tables."""
    results_dir = Path(results_dir)
    out_dir = Path(out_dir) if out_dir is not None else results_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    written: dict[str, Path] = {}
    for base in ("tradeoff", "satellite"):
        records_path = results_dir / f"{base}_records.csv"
        if records_path.exists():
            rows = _read_csv(records_path)
            path = out_dir / f"{base}_summary.csv"
            _write_csv(path, TRADEOFF_SUMMARY_FIELDS, summarize_tradeoff(rows))
            written[base] = path
    est_path = results_dir / "estimation_records.csv"
    if est_path.exists():
        rows = _read_csv(est_path)
        path = out_dir / "estimation_summary.csv"
        _write_csv(path, ESTIMATION_SUMMARY_FIELDS, summarize_estimation(rows))
        written["estimation"] = path
    if not written:
        raise FileNotFoundError(f"no results found in {results_dir} (no *_records.csv files)")
    return written


def generate_channels(config: ExperimentConfig, out_path, realization: int = 0) -> Path:
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    save_channels(build_channels(config, realization), out_path)
    return out_path
