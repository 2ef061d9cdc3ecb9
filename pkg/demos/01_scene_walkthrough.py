# coding: utf-8

# # Building one synthetic pavement frame
#
# A frame is a grid of concrete tiles seen from above, with crack defects
# cut into it. The binary mask comes from the same crack geometry that
# darkens the image, so it is pixel-exact by construction.

import sys
from dataclasses import replace
from pathlib import Path

from pavesynth import datasetio
from pavesynth.cracksynth import CrackParams, generate_crack, rasterize_crack
from pavesynth.scenecomp import compose_scene, luminance, v1_config

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_out/scene")
out.mkdir(parents=True, exist_ok=True)


# ## A single crack
#
# Cracks are random walks in meters. The target length is hit exactly,
# branches included.

params = CrackParams(target_length_m=2.0, branch_prob=0.05)
path = generate_crack(seed=3, params=params, origin=(1.0, 1.0))
print("vertices:", len(path.vertices), "branches:", len(path.branches))
print("total length (m):", round(path.total_length(), 4))

mask, empty = rasterize_crack(path, gsd=0.01, canvas=(300, 400))
print("crack pixels at 1 cm/px:", int(mask.sum()))


# ## A full frame, smaller than the default 1920x1080 to keep this quick

cfg = replace(v1_config(), image_size=(640, 360), gsd=0.02, seed=11)
sample = compose_scene(cfg)
print(sample.meta)

lum = luminance(sample.image)
print("mean luminance on cracks  :", round(float(lum[sample.mask == 1].mean()), 3))
print("mean luminance elsewhere  :", round(float(lum[sample.mask == 0].mean()), 3))


# ## The same frame under every lighting condition

for condition in ("noon", "dusk", "night", "noon_rain", "fog", "cloudy"):
    s = compose_scene(cfg.with_condition(condition))
    datasetio.save_image(out / f"{condition}.png", s.image)
    print(f"{condition:>9}: mean luminance {luminance(s.image).mean():.3f}")
datasetio.save_mask(out / "mask.png", sample.mask)
print("wrote", sorted(p.name for p in out.iterdir()))
