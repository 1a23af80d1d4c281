"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines. Everything is desk scale (small arrays, short blocks, fixed seeds) and
deterministic; the heavier checks reproduce the qualitative claims of the
reference experiments (strategy ordering, NOMA degradation, rate-constrained
feasibility, satellite overload) rather than absolute plotted values, which
depend on unpublished grids and seeds.
"""

import numpy as np

import rsisac
from rsisac import harness
from rsisac.optimizer import RATE_CONSTRAINED, RateTargetInfeasibleError
from rsisac.radar import UnidentifiableParametersError

from oracles import fd_fim, monte_carlo_fim, tiny_grid_objective


def report(name: str, ok: bool, detail: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    suffix = f" ({detail})" if detail else ""
    print(f"[{status}] {name}{suffix}")
    assert ok, f"{name}{suffix}"


def random_scene(rng, num_tx, num_rx, block_length):
    return rsisac.RadarScene(
        geometry=rsisac.ArrayGeometry(num_tx, num_rx),
        target_angle=rng.uniform(-1.0, 1.0),
        reflection=rng.uniform(0.3, 1.5) * np.exp(1j * rng.uniform(0, 2 * np.pi)),
        doppler=rng.uniform(-300.0, 300.0),
        symbol_period=5e-4,
        block_length=block_length,
        noise_power=rng.uniform(0.5, 2.0),
    )


def random_precoder_matrix(rng, num_tx, streams):
    return (rng.standard_normal((num_tx, streams)) + 1j * rng.standard_normal((num_tx, streams))) / 2


def desk_scene(num_tx, num_rx, block_length=64):
    return rsisac.RadarScene(
        geometry=rsisac.ArrayGeometry(num_tx, num_rx),
        target_angle=np.deg2rad(45.0),
        reflection=0.3 + 0.3j,
        doppler=50.0,
        symbol_period=1e-3,
        block_length=block_length,
        noise_power=1.0,
    )


def paper_scene():
    power = harness.dbm_to_watts(20.0)
    snr = 10.0 ** (-20.0 / 10.0)
    return rsisac.RadarScene(
        geometry=rsisac.ArrayGeometry(8, 9),
        target_angle=np.deg2rad(45.0),
        reflection=np.sqrt(snr / power) * np.exp(1j * np.pi / 4),
        symbol_period=1e-6,
        block_length=1024,
        noise_power=1.0,
        carrier_freq=3.5e9,
        target_speed=8.0,
    )


# ---------------------------------------------------------------------------
# criterion: FIM correctness against two independent oracles


def test_fim_against_finite_difference_and_monte_carlo():
    rng = np.random.default_rng(101)
    worst_fd = worst_mc = 0.0
    for index in range(20):
        num_tx = int(rng.integers(2, 4))
        num_rx = int(rng.integers(2, 4))
        block = int(rng.choice([4, 8]))
        scene = random_scene(rng, num_tx, num_rx, block)
        precoder = random_precoder_matrix(rng, num_tx, num_tx + 1)
        streams = (rng.standard_normal((num_tx + 1, block))
                   + 1j * rng.standard_normal((num_tx + 1, block))) / np.sqrt(2)
        x = precoder @ streams
        l_index = np.arange(1, block + 1)
        moments = (x @ x.conj().T, (x * l_index) @ x.conj().T, (x * l_index**2) @ x.conj().T)
        f_impl = rsisac.fim_from_moments(*moments, scene).fim
        f_fd = fd_fim(scene, x)
        worst_fd = max(worst_fd, np.linalg.norm(f_impl - f_fd) / np.linalg.norm(f_impl))

        r_x = rsisac.covariance(precoder)
        f_exp = rsisac.fim(r_x, scene).fim
        f_mc = monte_carlo_fim(scene, precoder, realizations=100_000, seed=500 + index)
        worst_mc = max(worst_mc, np.linalg.norm(f_exp - f_mc) / np.linalg.norm(f_exp))
    report(
        "FIM matches finite differences (<=1e-6) and 1e5-realization Monte Carlo (<=1%)",
        worst_fd <= 1e-6 and worst_mc <= 0.01,
        f"worst fd {worst_fd:.2e}, worst mc {worst_mc:.2%}",
    )


# ---------------------------------------------------------------------------
# criterion: CRB algebra


def test_crb_inverse_identity_and_singularity():
    rng = np.random.default_rng(102)
    worst = 0.0
    for _ in range(100):
        seed_matrix = rng.standard_normal((4, 4))
        f = seed_matrix @ seed_matrix.T + 0.05 * np.eye(4)
        filled = rsisac.crb(rsisac.FisherReport(fim=f))
        worst = max(worst, float(np.max(np.abs(f @ filled.crb - np.eye(4)))))
    singular_raises = True
    for index in range(5):
        scene = random_scene(rng, 3, 3, 8)
        scene.reflection = 0.0 + 0.0j
        r_x = rsisac.covariance(random_precoder_matrix(rng, 3, 3))
        try:
            rsisac.crb(rsisac.fim(r_x, scene))
            singular_raises = False
        except UnidentifiableParametersError:
            pass
    report(
        "CRB algebra: fim*crb = I within 1e-9 on 100 FIMs; alpha = 0 raises",
        worst <= 1e-9 and singular_raises,
        f"worst residual {worst:.2e}",
    )


# ---------------------------------------------------------------------------
# criterion: structural FIM identities, exact


def test_structural_fim_identities_exact():
    rng = np.random.default_rng(103)
    ok = True
    detail = ""
    for _ in range(20):
        scene = random_scene(rng, 3, 4, 8)
        r_x = rsisac.covariance(random_precoder_matrix(rng, 3, 4))
        f = rsisac.fim(r_x, scene).fim
        a = rsisac.steering(scene.geometry, "tx", scene.target_angle)
        expected = (
            2.0 * scene.block_length / scene.noise_power
        ) * scene.geometry.num_rx * float(np.real(a.conj() @ r_x @ a))
        doubled = rsisac.RadarScene(
            geometry=scene.geometry,
            target_angle=scene.target_angle,
            reflection=scene.reflection,
            doppler=scene.doppler,
            symbol_period=scene.symbol_period,
            block_length=scene.block_length,
            noise_power=2.0 * scene.noise_power,
        )
        f_half = rsisac.fim(r_x, doubled).fim
        if not (f[1, 2] == 0.0 and f[2, 1] == 0.0):
            ok, detail = False, "cross alpha entry nonzero"
            break
        if f[1, 1] != f[2, 2]:
            ok, detail = False, "alpha diagonal entries differ"
            break
        if abs(f[1, 1] - expected) > 1e-10 * abs(expected):
            ok, detail = False, "alpha diagonal does not match 2L/sigma^2 * Nr * gain"
            break
        if not np.array_equal(f_half, f / 2.0):
            ok, detail = False, "doubling noise does not halve the FIM exactly"
            break
    report("structural FIM identities hold exactly on 20 random scenes", ok, detail)


# ---------------------------------------------------------------------------
# criterion: optimizer sanity


def test_optimizer_sanity():
    scene = rsisac.RadarScene(
        geometry=rsisac.ArrayGeometry(2, 2),
        target_angle=0.0,
        reflection=0.6 + 0.0j,
        doppler=40.0,
        symbol_period=1e-3,
        block_length=8,
        noise_power=1.0,
    )
    h = np.array([[1.2, 0.4]])
    channels = rsisac.ChannelSet(channels=h.astype(complex), noise_power=1.0)
    lam = 0.5
    oracle = tiny_grid_objective(h[0], 1.0, scene, total_power=2.0, tradeoff=lam, resolution=0.01)
    tiny = rsisac.solve(
        rsisac.DesignProblem(
            channels=channels, scene=scene, strategy="rsma", tradeoff=lam, total_power=2.0
        ),
        rsisac.SolverOptions(max_iter=40, obj_tol=1e-6),
    )
    tiny_val = rsisac.mfr(tiny.rates) + lam * tiny.t
    tiny_ok = abs(tiny_val - oracle) <= 0.02 * abs(oracle)

    monotone_ok = True
    residual_worst = 0.0
    desk = desk_scene(4, 5)
    desk_channels = rsisac.rayleigh_channels(2, 4, seed=7, noise_power=1.0)
    scale = rsisac.fim_scale(desk, 4.0)
    for strategy in ("rsma", "sdma", "noma"):
        for lam_norm in (0.0, 1.0):
            problem = rsisac.DesignProblem(
                channels=desk_channels,
                scene=desk,
                strategy=strategy,
                tradeoff=lam_norm / scale,
                total_power=4.0,
            )
            solution = rsisac.solve(problem, rsisac.SolverOptions(max_iter=25))
            values = solution.diagnostics.surrogate_values
            monotone_ok &= all(
                b >= a - 1e-8 * max(1.0, abs(a)) for a, b in zip(values, values[1:])
            )
            per_antenna = 4.0 / 4
            residual_worst = max(
                residual_worst,
                float(np.max(np.abs(solution.precoder.per_antenna_power() - per_antenna))
                      / per_antenna),
            )
    report(
        "optimizer sanity: monotone surrogate, exact per-antenna power, grid-oracle match",
        tiny_ok and monotone_ok and residual_worst <= 1e-6,
        f"oracle gap {abs(tiny_val - oracle) / abs(oracle):.2%}, "
        f"worst per-antenna residual {residual_worst:.1e}",
    )


# ---------------------------------------------------------------------------
# criterion: strategy ordering over terrestrial seeds (trade-off figure)


def test_strategy_ordering_terrestrial():
    scene = desk_scene(8, 9)
    power = 8.0
    scale = rsisac.fim_scale(scene, power)
    lams = [v / scale for v in (0.0, 0.3, 3.0)]
    options = rsisac.SolverOptions(max_iter=15, obj_tol=1e-4)
    passed = 0
    for seed in range(20):
        channels = rsisac.rayleigh_channels(4, 8, seed=1000 + seed, noise_power=1.0)
        rows = []
        for lam in lams:
            sdma = rsisac.solve(
                rsisac.DesignProblem(
                    channels=channels, scene=scene, strategy="sdma",
                    tradeoff=lam, total_power=power,
                ),
                options,
            )
            # rate splitting subsumes the private-only design, so its solve is
            # warm started from (and its candidate pool contains) that design
            warm = rsisac.PrecodingMatrix(
                common=np.zeros(8, dtype=complex), privates=sdma.precoder.privates
            )
            rsma = rsisac.solve(
                rsisac.DesignProblem(
                    channels=channels, scene=scene, strategy="rsma",
                    tradeoff=lam, total_power=power,
                ),
                options,
                initial_precoder=warm,
            )
            rows.append((lam, rsisac.mfr(rsma.rates), rsma.t, rsisac.mfr(sdma.rates), sdma.t))
        dominance = all(
            mr + lam * tr >= ms + lam * ts - 1e-3 * max(1.0, abs(ms + lam * ts))
            for lam, mr, tr, ms, ts in rows
        )
        rsma0, sdma0 = rows[0][1], rows[0][3]
        rsma_end, sdma_end = rows[-1][1], rows[-1][3]
        similar_at_zero = abs(rsma0 - sdma0) <= 0.05 * max(rsma0, sdma0)
        strict_at_end = rsma_end > sdma_end
        passed += dominance and similar_at_zero and strict_at_end
    report(
        "strategy ordering: RSMA objective >= SDMA everywhere, similar MFR at "
        "lambda = 0, strictly higher MFR at the radar-priority end (>=90% of 20 seeds)",
        passed >= 18,
        f"{passed}/20 seeds",
    )


# ---------------------------------------------------------------------------
# criterion: NOMA achieves the poorest trade-off


def test_noma_curve_dominated_by_rsma():
    # underloaded desk scale (antennas > users): NOMA pays its multi-antenna
    # degrees-of-freedom loss; the lambda grid is dense across the steep
    # radar-corner frontier segment, and the domination tolerance covers
    # solver noise on the RCRB axis there (3% of the curve's MFR span)
    scene = desk_scene(8, 9)
    power = 8.0
    scale = rsisac.fim_scale(scene, power)
    lams = [v / scale for v in (0.0, 0.3, 1.0, 2.0, 3.0)]
    options = rsisac.SolverOptions(max_iter=12, obj_tol=1e-4)
    passed = 0
    for seed in range(10):
        channels = rsisac.rayleigh_channels(4, 8, seed=3000 + seed, noise_power=1.0)
        curves = {}
        for strategy in ("rsma", "noma"):
            problem = rsisac.DesignProblem(
                channels=channels, scene=scene, strategy=strategy, total_power=power
            )
            points = rsisac.sweep_lambda(problem, lams, options)
            curve = [
                (p.solution.fisher.rcrb[0], rsisac.mfr(p.solution.rates))
                for p in points
                if p.ok and p.solution.fisher.rcrb is not None
            ]
            curves[strategy] = sorted(curve)
        rsma_x = np.array([x for x, _ in curves["rsma"]])
        rsma_y = np.array([y for _, y in curves["rsma"]])
        tolerance = max(1e-3, 0.03 * float(rsma_y.max() - rsma_y.min()))
        dominated = all(
            mfr_noma <= float(np.interp(x, rsma_x, rsma_y)) + tolerance
            for x, mfr_noma in curves["noma"]
        )
        passed += dominated
    report(
        "NOMA trade-off curve dominated by RSMA at matched angle-RCRB (>=90% of 10 seeds)",
        passed >= 9,
        f"{passed}/10 seeds",
    )


# ---------------------------------------------------------------------------
# criterion: rate-constrained protocol (estimation figure)


def test_rate_constrained_protocol_and_rmse_bounds():
    # paper-scale feasibility: the 6 bps/Hz fairness target
    scene = paper_scene()
    power = harness.dbm_to_watts(20.0)
    options = rsisac.SolverOptions(max_iter=15, obj_tol=1e-3)
    outcomes = {"rsma": 0, "sdma": 0, "noma": 0}
    for seed in range(10):
        channels = rsisac.rayleigh_channels(4, 8, seed=4000 + seed, noise_power=1e-3)
        for strategy in outcomes:
            problem = rsisac.DesignProblem(
                channels=channels, scene=scene, strategy=strategy,
                total_power=power, mode=RATE_CONSTRAINED, min_rate=6.0,
            )
            try:
                rsisac.solve(problem, options)
                feasible = True
            except RateTargetInfeasibleError:
                feasible = False
            outcomes[strategy] += feasible
    feasibility_ok = outcomes["noma"] <= 4 and outcomes["rsma"] >= 6 and outcomes["sdma"] >= 6

    # desk scale: sensing quality at a matched rate target, RSMA vs SDMA
    desk = desk_scene(4, 5)
    desk_options = rsisac.SolverOptions(max_iter=20)
    rsma_better = 0
    kept_pairs = 0
    rmse_rows = None
    for seed in range(10):
        channels = rsisac.rayleigh_channels(2, 4, seed=5000 + seed, noise_power=1.0)
        unconstrained = rsisac.solve(
            rsisac.DesignProblem(
                channels=channels, scene=desk, strategy="sdma", total_power=4.0
            ),
            desk_options,
        )
        target = 0.8 * rsisac.mfr(unconstrained.rates)
        rcrbs = {}
        for strategy in ("rsma", "sdma"):
            problem = rsisac.DesignProblem(
                channels=channels, scene=desk, strategy=strategy,
                total_power=4.0, mode=RATE_CONSTRAINED, min_rate=target,
            )
            solution = rsisac.solve(problem, desk_options)
            assert rsisac.mfr(solution.rates) >= target - 1e-6
            rcrbs[strategy] = solution.fisher.rcrb[0]
            if seed == 0 and strategy == "rsma":
                rmse_rows = rsisac.rmse_experiment(
                    solution, desk, [-10.0, 0.0, 10.0], trials=200, seed=6000
                )
        kept_pairs += 1
        rsma_better += rcrbs["rsma"] <= rcrbs["sdma"] * (1 + 1e-9)

    # Monte-Carlo RMSE against the bound, one-sided two-sigma margin at 200 trials
    margin = 1.0 - 2.0 / np.sqrt(2 * 200)
    bound_ok = all(row.rmse >= row.rcrb * margin for row in rmse_rows)
    by_param = {}
    for row in rmse_rows:
        by_param.setdefault(row.parameter, []).append(row.rmse / row.rcrb)
    ratio_ok = all(
        all(b <= a * 1.05 for a, b in zip(ratios, ratios[1:]))
        for ratios in by_param.values()
    )
    report(
        "rate-constrained protocol: NOMA infeasible / RSMA+SDMA feasible at 6 bps/Hz "
        "(majority of 10 paper-scale seeds); desk RMSE >= RCRB at 200 trials with "
        "nonincreasing RMSE/RCRB ratio; RSMA angle-RCRB <= SDMA's at matched rate "
        "(>=80% of seeds)",
        feasibility_ok and bound_ok and ratio_ok and rsma_better >= 8,
        f"feasible counts {outcomes}, rsma better {rsma_better}/{kept_pairs}",
    )


# ---------------------------------------------------------------------------
# criterion: satellite overload ordering


def test_satellite_overload_rsma_wins_at_zero_weight():
    scene = rsisac.RadarScene(
        geometry=rsisac.ArrayGeometry(4, 5),
        target_angle=np.deg2rad(20.0),
        reflection=0.3 + 0.3j,
        doppler=50.0,
        symbol_period=1e-3,
        block_length=64,
        noise_power=1.0,
    )
    options = rsisac.SolverOptions(max_iter=15)
    wins = 0
    for seed in range(10):
        config = rsisac.SatelliteBeamConfig(
            num_beams=4,
            users_per_beam=2,
            beam_centers=np.deg2rad(np.linspace(-12.0, 12.0, 4)),
            beam_width=np.deg2rad(14.0),
            noise_power=1e-3,
        )
        channels = rsisac.satellite_channels(config, seed=2000 + seed)
        assert channels.num_users == 2 * channels.num_streams  # overloaded
        mfrs = {}
        for strategy in ("rsma", "sdma"):
            problem = rsisac.DesignProblem(
                channels=channels, scene=scene, strategy=strategy, total_power=4.0
            )
            mfrs[strategy] = rsisac.mfr(rsisac.solve(problem, options).rates)
        wins += mfrs["rsma"] > mfrs["sdma"] + 1e-9
    report(
        "satellite overload (K = 2 Nt): RSMA MFR beats SDMA already at zero radar "
        "weight (>=80% of 10 seeds)",
        wins >= 8,
        f"{wins}/10 seeds",
    )


# ---------------------------------------------------------------------------
# criterion: metric identities


def test_metric_identities():
    rng = np.random.default_rng(104)
    rmi_worst = 0.0
    mse_worst = 0.0
    iso_ok = True
    for _ in range(10):
        scene = random_scene(rng, 3, 4, 8)
        r_x = rsisac.covariance(random_precoder_matrix(rng, 3, 4))
        closed = rsisac.rmi(r_x, scene, method="closed")
        det = rsisac.rmi(r_x, scene, method="determinant")
        rmi_worst = max(rmi_worst, abs(closed - det) / max(abs(closed), 1e-12))

        grid = np.linspace(-1.3, 1.3, 25)
        desired = rng.uniform(0.0, 4.0, size=25)
        spec = rsisac.BeampatternSpec(grid=grid, desired=desired)
        got = rsisac.beampattern_mse(r_x, spec, scene.geometry)
        from oracles import beampattern_mse_bruteforce

        want = beampattern_mse_bruteforce(r_x, 0.5, grid, desired)
        mse_worst = max(mse_worst, abs(got - want) / max(abs(want), 1e-12))

    geom = rsisac.ArrayGeometry(4, 4)
    power = 3.0
    gains = rsisac.beampattern((power / 4) * np.eye(4), geom, np.linspace(-1.2, 1.2, 19))
    iso_ok = bool(np.max(np.abs(gains - power)) <= 1e-12 * power)
    report(
        "metric identities: closed-form vs determinant mutual information <=1e-9, "
        "beampattern MSE vs brute force <=1e-12, isotropic covariance radiates P",
        rmi_worst <= 1e-9 and mse_worst <= 1e-12 and iso_ok,
        f"rmi {rmi_worst:.1e}, mse {mse_worst:.1e}",
    )


# ---------------------------------------------------------------------------
# criterion: experiment determinism


def test_experiment_determinism(tmp_path):
    config = harness.config_from_dict(
        {
            "scenario": "terrestrial",
            "array": {"num_tx": 4, "num_rx": 5},
            "users": 2,
            "power_dbm": 6.02,
            "noise_dbm": 0.0,
            "target": {"symbol_period": 1e-3, "block_length": 64, "radar_snr_db": -10.0},
            "strategies": ["rsma", "sdma"],
            "sweep": {"lambda_grid": [0.0, 1.0], "lambda_mode": "normalized"},
            "estimation": {"min_rate": 0.5, "snr_grid_db": [0.0], "trials": 3},
            "run": {"realizations": 2, "master_seed": 9, "jobs": 1},
            "solver": {"max_iter": 10, "obj_tol": 1e-3, "candidates": 20},
        }
    )
    byte_equal = True
    for runner, names in (
        (harness.run_tradeoff, ["tradeoff_records.csv", "tradeoff_summary.csv"]),
        (harness.run_estimation, ["estimation_records.csv", "estimation_feasibility.csv"]),
    ):
        runner(config, tmp_path / "a")
        runner(config, tmp_path / "b")
        for name in names:
            byte_equal &= (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    report("determinism: identical config and seed give byte-identical CSVs", byte_equal)
