"""Echo synthesis and target estimation against the root-CRB.

Designs a rate-constrained precoder, synthesizes QPSK echoes, runs the
angle/Doppler/reflection estimation pipeline, and compares the Monte-Carlo
RMSE of each parameter with its root-CRB over a radar-SNR grid.
"""

import numpy as np

import rsisac
from rsisac.optimizer import RATE_CONSTRAINED

geom = rsisac.ArrayGeometry(num_tx=4, num_rx=5)
scene = rsisac.RadarScene(
    geometry=geom,
    target_angle=np.deg2rad(45.0),
    reflection=0.3 + 0.3j,
    doppler=50.0,
    symbol_period=1e-3,
    block_length=64,
    noise_power=1.0,
)
channels = rsisac.rayleigh_channels(num_users=2, num_tx=4, seed=5, noise_power=1.0)

# first find the best reachable fairness rate, then lock in 80% of it and
# spend the slack on sensing
best = rsisac.solve(
    rsisac.DesignProblem(channels=channels, scene=scene, strategy="rsma", total_power=4.0)
)
target = 0.8 * rsisac.mfr(best.rates)
problem = rsisac.DesignProblem(
    channels=channels,
    scene=scene,
    strategy="rsma",
    total_power=4.0,
    mode=RATE_CONSTRAINED,
    min_rate=target,
)
solution = rsisac.solve(problem)
print(f"fairness target {target:.3f} bps/Hz -> achieved {rsisac.mfr(solution.rates):.3f}")
print(f"FIM floor grew from {best.t:.3f} to {solution.t:.3f}\n")

# one synthetic echo, estimated
block = rsisac.synth_symbols(solution.precoder.num_streams + 1, scene.block_length, seed=1)
echo = rsisac.synth_echo(solution.precoder, block, scene, seed=2)
record = rsisac.estimate(echo, solution.precoder)
print("single-echo estimates vs truth:")
print(f"  angle:   {np.rad2deg(record.theta):7.3f} deg (true {np.rad2deg(scene.target_angle):.3f})")
print(f"  doppler: {record.doppler:7.2f} Hz  (true {scene.doppler:.2f})")
print(f"  alpha:   {record.alpha:.3f}      (true {scene.reflection:.3f})\n")

rows = rsisac.rmse_experiment(solution, scene, [-10.0, 0.0, 10.0], trials=100, seed=3)
print("Monte-Carlo RMSE vs root-CRB (100 trials):")
print(f"{'SNR dB':>7s} {'parameter':>9s} {'RMSE':>10s} {'RCRB':>10s} {'ratio':>6s}")
for row in rows:
    print(
        f"{row.snr_db:7.1f} {row.parameter:>9s} {row.rmse:10.4g} {row.rcrb:10.4g} "
        f"{row.rmse / row.rcrb:6.2f}"
    )
print("\nthe RMSE tracks the bound from above (within Monte-Carlo noise at this")
print("trial count) and the gap closes as the SNR grows.")
