"""Region and contour scores on hand-made masks, plus the RLE text format.

    python3 demos/01_metrics_and_masks.py
"""

from memnav.masks import BinaryMask, rle_decode, rle_encode
from memnav.metrics import contour_f, region_j

truth = BinaryMask.from_rect(12, 12, 3, 3, 5, 5)

print("A 5x5 square slid right one pixel at a time:")
for shift in range(4):
    guess = BinaryMask.from_rect(12, 12, 3 + shift, 3, 5, 5)
    print(f"  shift {shift}: J={region_j(guess, truth):.3f}  "
          f"F(tol 0)={contour_f(guess, truth, 0):.3f}  F(tol 1)={contour_f(guess, truth, 1):.3f}")

print("\nJ punishes any lost area; F with a one-pixel tolerance forgives a one-pixel slide.")

blob = rle_encode(truth)
print(f"\nRun-length encoding of the truth mask:\n  {blob.decode()}")
assert rle_decode(blob) == truth
print("  decodes back to the identical mask")
