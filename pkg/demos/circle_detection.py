"""Plant a dense circle in noise and find it two ways: the exhaustive sweep and the coarse-to-fine search.

Run: python3 demos/circle_detection.py
"""

import time

from dlpkit.shapes import CircleParams, SceneSpec, brute_force_search, dlp_search, gen_scene

truth = CircleParams(62, 35, 14)
cloud = gen_scene(SceneSpec(100, 1000, (truth,), 3.0, seed=7))
print(f"Scene: 1000 points on a 100x100 grid, circle {truth} three times denser than the rest")

t0 = time.perf_counter()
dets, brute = brute_force_search(cloud, 100)
t_brute = time.perf_counter() - t0
t0 = time.perf_counter()
res = dlp_search(cloud, 100)
t_dlp = time.perf_counter() - t0

print(f"exhaustive: {dets[0].shape}  {brute.membership_tests:.3g} membership tests  {t_brute:.2f}s")
print(f"refining:   {res.detections[0].shape}  {res.counters.membership_tests:.3g} membership tests  "
      f"{t_dlp:.2f}s")
print(f"reduction: {brute.membership_tests / res.counters.membership_tests:.0f}x fewer tests")

print("\nHow the refining search narrowed in:")
for step in res.runs[0].steps:
    print(f"  stride {step.model.stride}: {step.model.kind}:{','.join(map(str, step.model.params))}"
          f"  score {step.score:.1f}")
