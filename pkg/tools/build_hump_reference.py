"""Regenerate tests/data/hump_smooth_ref.npz.

Runs the smooth hump perturbation 8x finer than 200 x 100 (on the symmetric
half domain) to t = 0.6 and stores block averages on the 200 x 100 grid.
Single-threaded with numba this takes one to two hours.
"""
import argparse
import logging
import time
from pathlib import Path

from wavekit.harness import hump_reference, save_references

TIMES = (0.06, 0.12, 0.24, 0.36, 0.48)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--factor", type=int, default=8)
    ap.add_argument("--t-final", type=float, default=0.6)
    ap.add_argument("--out", type=Path, default=Path(__file__).resolve().parents[1] / "tests/data/hump_smooth_ref.npz")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")
    start = time.time()
    last = [start]

    def progress(q, t):
        if time.time() - last[0] > 300:
            last[0] = time.time()
            logging.info("t = %.4f after %.0f s", t, time.time() - start)

    refs = hump_reference(200, 100, args.factor, args.t_final, TIMES, progress=progress)
    save_references(refs, args.out, factor=args.factor, base="200x100", cfl=2.45, half_domain=True)
    logging.info("wrote %s in %.0f s", args.out, time.time() - start)


if __name__ == "__main__":
    main()
