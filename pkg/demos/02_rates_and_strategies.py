"""Achievable rates under rate splitting, SDMA, and NOMA on one channel draw.

Compares the three multiple-access strategies on the same Rayleigh channels
with a matched-filter precoder, showing how the common stream and the SIC
chain change the per-user totals and the scalar metrics.
"""

import numpy as np

import rsisac

channels = rsisac.rayleigh_channels(num_users=3, num_tx=4, seed=11, noise_power=1e-1)
print("channel norms:", np.round(np.linalg.norm(channels.channels, axis=1), 3))

# matched-filter precoder: private beams along each user's channel plus a
# common beam along the dominant channel direction, equal power split
h = channels.channels
privates = (h.conj() / np.linalg.norm(h, axis=1)[:, None]).T
common = np.linalg.svd(h.conj().T)[0][:, 0]
power = 2.0
matrix = np.column_stack([common, privates]) * np.sqrt(power / 4)
precoder = rsisac.PrecodingMatrix.from_matrix(matrix)

common_rates, private_rates = rsisac.rsma_rates(channels, precoder)
split, _ = rsisac.split_common_rate(float(np.min(common_rates)), private_rates)
report_rs = rsisac.RateReport(
    common_rates=common_rates, private_rates=private_rates, common_split=split
)
print("\nrate splitting:")
print("  common decode rates:", np.round(common_rates, 3))
print("  common split:       ", np.round(split, 3))
print("  totals:             ", np.round(report_rs.total_rates, 3))

report_sdma = rsisac.rate_report("sdma", channels, precoder)
print("SDMA totals:         ", np.round(report_sdma.total_rates, 3))

order = rsisac.default_noma_order(channels)
report_noma = rsisac.rate_report("noma", channels, precoder, order=order)
print(f"NOMA totals (order {order}):", np.round(report_noma.total_rates, 3))

print("\nscalar metrics (MFR / WSR / EE):")
weights = np.ones(3)
for name, report in (("rsma", report_rs), ("sdma", report_sdma), ("noma", report_noma)):
    print(
        f"  {name}: {rsisac.mfr(report):.3f} / {rsisac.wsr(report, weights):.3f} / "
        f"{rsisac.ee(report, precoder, amp_efficiency_inv=1.0, circuit_power=0.1):.3f}"
    )
