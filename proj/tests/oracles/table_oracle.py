#!/usr/bin/env python3
"""Exact decimal means of the published benchmark rows."""

from decimal import Decimal as D

ROWS = {
    "Qwen2.5-7B SNS": (["49.50", "73.80", "42.37", "45.32", "45.41", "88.08", "33.76", "44.65"], "52.86"),
    "Qwen2.5-7B Trans": (["31.43", "55.91", "38.36", "36.48"], "40.55"),
    "Domain-7B SNS": (["72.18", "88.02", "65.09", "63.98", "51.86", "70.47", "74.73", "48.69"], "66.88"),
    "GLM-4-9B SNS": (["56.03", "77.67", "38.03", "45.29", "47.01", "51.30", "27.51", "45.52"], "48.55"),
}

if __name__ == "__main__":
    for name, (vals, published) in ROWS.items():
        mean = sum(D(v) for v in vals) / len(vals)
        print(f"{name:18s} mean={mean}  published={published}  |diff|={abs(mean - D(published))}  "
              f"double={float(mean)!r}")
