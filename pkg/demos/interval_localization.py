"""Find a hidden dense interval on [0, 10] by sharpening a Gaussian kernel level by level.

Run: python3 demos/interval_localization.py
"""

from dlpkit.intervals import IntervalModel, exhaustive_scan, gen_interval_data, refine_loop

samples = gen_interval_data(IntervalModel.from_bounds(0, 4), 500, contrast=3.0, seed=0)
res = refine_loop(samples)

print("level  kernel          chosen interval")
for i, (step, kernel) in enumerate(zip(res.run.steps, res.kernels)):
    print(f"{i:>5}  {str(kernel):<15} {step.model}")

best, scan_evals = exhaustive_scan(samples)
print(f"\nestimate {res.estimate} after {res.evaluations} evaluations")
print(f"fine-grid scan gives {best} after {scan_evals} evaluations")
