# coding: utf-8

# # Why Dice for thin cracks
#
# With 1% crack pixels a model that predicts "no crack" everywhere already
# has a small cross-entropy. The Generalised Dice loss weights each class by
# the inverse square of its size, so the same output costs nearly the maximum.

import numpy as np

from pavesynth.lossfn import bce, combined_loss, generalized_dice

mask = np.zeros((100, 100))
mask[50, :] = 1.0  # one horizontal crack: 1% of the pixels
all_black = np.zeros_like(mask)

print("GDL perfect   :", generalized_dice(mask, mask).value)
print("GDL all-black :", round(generalized_dice(all_black, mask).value, 4))
print("BCE all-black :", round(bce(all_black, mask).value, 4), "(clamp 1e-7)")
print("BCE all-black :", round(bce(all_black, mask, eps=0.01).value, 4), "(clamp 0.01)")


# ## Gradients
#
# Gradients are analytic; compare one entry against a finite difference.

rng = np.random.default_rng(0)
p = rng.uniform(0.05, 0.95, size=mask.shape)
loss = combined_loss(p, mask, dice_weight=1.0, bce_weight=1.0)
h = 1e-5
up, dn = p.copy(), p.copy()
up[50, 10] += h
dn[50, 10] -= h
numeric = (combined_loss(up, mask).value - combined_loss(dn, mask).value) / (2 * h)
print("analytic:", loss.gradient[50, 10], "numeric:", numeric)
