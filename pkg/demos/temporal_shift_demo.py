"""A look at the temporal shift operation and the encoder's gradients.

The encoder mixes information across frames without any temporal
convolution: before each block's affine layer, the first k channels of
every frame are replaced by the same channels of the previous frame and
the next k by those of the following frame. The demo prints a small
shifted tensor so the pattern is visible, then runs the finite-difference
gradient check on a tiny encoder.
"""

import numpy as np

from lusbio import encoder as enc
from lusbio.dataio import rng_for
from lusbio.schema import TrainConfig


def main():
    x = np.arange(1, 25, dtype=float).reshape(4, 6)  # 4 frames, 6 channels
    shifted = enc.temporal_shift(x, 1 / 6)  # k = 1 channel each direction
    print("input (rows are frames):")
    print(x)
    print("\nshifted (col 0 from t-1, col 1 from t+1, rest unchanged):")
    print(shifted)

    config = TrainConfig(frames_per_clip=3, frame_side=8, channels=8, blocks=2)
    rng = rng_for(0, "demo", "shift")
    clips = rng.normal(size=(2, 3, 8, 8))
    for loss_kind, out_dim in (("bce", 38), ("ce", 4)):
        params = enc.init_params(config, out_dim, seed_tag=("demo", loss_kind))
        if loss_kind == "bce":
            targets = rng.integers(0, 2, size=(2, out_dim)).astype(float)
        else:
            targets = rng.integers(0, out_dim, size=2)
        err = enc.grad_check(params, clips, targets, loss_kind, config.shift_fraction)
        print(f"\n{loss_kind} head: max relative gradient error {err:.2e}")


if __name__ == "__main__":
    main()
