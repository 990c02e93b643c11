"""Regenerate the bundled synthetic delay histograms (deterministic).

The shapes imitate published measurements: a compact URLLC-like link with
two packet-size anchors and a long-tailed 5G link with distinct downlink
and uplink behaviour. They are stand-ins, not measurements.
"""

from pathlib import Path

import numpy as np

OUT = Path(__file__).resolve().parents[1] / "src" / "tsnsched" / "data"
SAMPLES = 100_000


def histogram(rng, lo, mode, hi, step, tail):
    # shifted gamma body plus a sparse exponential tail, clipped to [lo, hi]
    body = lo + rng.gamma(2.0, (mode - lo) / 1.0, SAMPLES)
    tail_n = int(SAMPLES * tail)
    body[:tail_n] = lo + (mode - lo) + rng.exponential((hi - mode) / 3.0, tail_n)
    body = np.clip(body, lo, hi)
    bins = (np.floor((body - lo) / step) * step + lo).astype(int)
    bins[np.argmin(bins)] = lo
    bins[np.argmax(bins)] = hi
    values, counts = np.unique(bins, return_counts=True)
    return list(zip(values.tolist(), counts.tolist()))


def write(name, anchors):
    with open(OUT / name, "w", newline="\n") as f:
        f.write("packet_size_bytes,delay_us,count\n")
        for size, rows in anchors:
            for d, c in rows:
                f.write(f"{size},{d},{c}\n")


def main():
    rng = np.random.default_rng(20240501)
    OUT.mkdir(parents=True, exist_ok=True)
    write("urllc.csv", [
        (32, histogram(rng, 100, 115, 200, 1, 0.02)),
        (1420, histogram(rng, 180, 200, 320, 1, 0.02)),
    ])
    write("det6g_downlink.csv", [(100, histogram(rng, 2000, 3000, 15000, 100, 0.05))])
    write("det6g_uplink.csv", [(100, histogram(rng, 2500, 4000, 15000, 100, 0.08))])


if __name__ == "__main__":
    main()
