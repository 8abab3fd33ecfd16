"""Render the synthetic two-object probes and poke at their structure.

Writes a small gallery under demos/out/gallery/: every palette color on
both shapes, one full binding trial (query + 4 candidates), and a few
same/different pairs. Everything is deterministic in the seed, so the
PNG bytes are reproducible run to run.
"""

from pathlib import Path

import numpy as np

from sensorank import probes
from sensorank.probes import SceneSpec, Shape

OUT = Path(__file__).parent / "out" / "gallery"
OUT.mkdir(parents=True, exist_ok=True)

# ------------------------------------------------------------------ palette

print("palette:")
for color in probes.PALETTE:
    print(f"  {color.name:<8} rgb={color.rgb}")

# one scene per color, alternating shapes left/right
for color in probes.PALETTE:
    spec = SceneSpec(left=(Shape.SQUARE, color), right=(Shape.CIRCLE, color))
    probes.write_png(OUT / f"color_{color.name}.png", probes.render_scene(spec))

spec = SceneSpec(
    left=(Shape.TRIANGLE, probes.PALETTE[0]), right=(Shape.SQUARE, probes.PALETTE[2])
)
img = probes.render_scene(spec)
print(f"\ncanvas: {img.shape[0]}x{img.shape[1]}, dtype {img.dtype}")
print(f"background corner pixel: {img[0, 0]}")
print(f"left object center pixel:  {img[112, 56]}")
print(f"right object center pixel: {img[112, 168]}")

# --------------------------------------------------------------- binding trial

# A trial is query + 4 candidates; exactly one candidate (the target) has
# the query's shapes with fresh colors. Distractors recombine the same
# parts so any bag-of-features shortcut ties.
manifest = probes.build_binding_manifest(n=3, seed=7)
entry = manifest.entries[0]
print(f"\ntrial {entry['id']}: target at index {entry['target_index']}")
for kind, scene in zip(["query"] + entry["kinds"], entry["scenes"]):
    left, right = scene["left"], scene["right"]
    print(f"  {kind:<12} left={left[1]} {left[0]:<8} right={right[1]} {right[0]}")

root = OUT / "binding_trial"
probes.gen_dataset("binding", n=1, seed=7, out_dir=root)
print(f"wrote {sorted(p.name for p in root.glob('*.png'))}")

# ------------------------------------------------------------ same/different

sd = probes.build_samediff_manifest(n=6, seed=7)
print("\nsame/different pairs (labels alternate by construction):")
for entry in sd.entries:
    a, b = entry["scenes"]
    print(
        f"  {entry['id']}  {entry['label']:<9}"
        f"  A=({a['left'][1]} {a['left'][0]}, {a['right'][1]} {a['right'][0]})"
        f"  B=({b['left'][1]} {b['left'][0]}, {b['right'][1]} {b['right'][0]})"
    )

labels = [e["label"] for e in sd.entries]
print(f"balance: {labels.count('same')} same / {labels.count('different')} different")

# ----------------------------------------------------------- byte determinism

a = probes.render_scene(spec)
b = probes.render_scene(spec)
assert np.array_equal(a, b)
print("\nrender is bitwise deterministic:", np.array_equal(a, b))
print(f"gallery written to {OUT}")
