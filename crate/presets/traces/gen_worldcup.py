#!/usr/bin/env python3
"""Write a 60-minute rate trace shaped like a compressed day of the 1998
World Cup web logs: a diurnal swell, two match-time surges with a sharp
onset and slow decay, and multiplicative noise. Deterministic.

    python3 gen_worldcup.py > worldcup-60min.csv
"""
import math
import random

BIN_S = 10
SPAN_S = 3600
BASE_RPS = 18.0
PEAK_RPS = 55.0
SURGES = [(1200, 38.0, 240.0), (2500, 48.0, 300.0)]  # onset s, extra rps, decay s


def rate(t, rng):
    day = 0.5 - 0.5 * math.cos(2 * math.pi * t / SPAN_S)
    r = BASE_RPS + (PEAK_RPS - BASE_RPS) * day
    for onset, extra, decay in SURGES:
        if t >= onset - 60:
            ramp = min(1.0, (t - onset + 60) / 60)
            r += extra * ramp * math.exp(-max(0.0, t - onset) / decay)
    return r * rng.uniform(0.92, 1.08)


def main():
    rng = random.Random(1998)
    print("# offset_seconds,rate_rps")
    for t in range(0, SPAN_S, BIN_S):
        print(f"{t},{rate(t, rng):.2f}")


if __name__ == "__main__":
    main()
