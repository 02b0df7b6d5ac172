"""Throughput comparison of the compiled and pure-numpy hot kernels.

Times the per-round sampling kernel and the streaming transcript hash on
identical inputs, after a warmup pass so JIT compilation is not billed to
the compiled variant.  Run as a script:

    python3 benchmarks/bench_mc.py [--rounds N] [--repeats K]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from spdcqkd import _kernels, protocol
from spdcqkd.attack import AttackConfig
from spdcqkd.protocol import SessionConfig, SpdcSource, SplitAttack
from spdcqkd.source import SpdcParams


def _bench(fn, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_sampler(rounds: int, repeats: int) -> list[tuple[str, float]]:
    cfg = SessionConfig(rounds=rounds, seed=0,
                        source=SpdcSource(SpdcParams(0.3)),
                        eve=SplitAttack(AttackConfig(max_attempts=3)))
    t = protocol._build_tables(cfg)
    u = protocol._uniform_block(cfg.seed, 0, rounds)

    def run(impl):
        return _kernels.sample_rounds(u, t.scen_cum, t.grp_off, t.grp_len,
                                      t.row_cum, t.row_a, t.row_b, t.row_e1,
                                      t.row_e2, True, impl=impl)

    impls = ["numpy"] + (["numba"] if _kernels.HAVE_NUMBA else [])
    results = []
    for impl in impls:
        run(impl)  # warmup; compiles on first call
        results.append((impl, _bench(lambda: run(impl), repeats)))
    ref = run("numpy")
    for impl in impls:
        assert np.array_equal(run(impl), ref), f"{impl} kernel diverged"
    return results


def bench_hash(n_bytes: int, repeats: int) -> list[tuple[str, float]]:
    rng = np.random.Generator(np.random.Philox(key=1))
    data = rng.integers(0, 256, size=n_bytes, dtype=np.uint8).tobytes()
    impls = ["numpy"] + (["numba"] if _kernels.HAVE_NUMBA else [])
    results = []
    for impl in impls:
        _kernels.fnv1a64(data[:64], impl=impl)  # warmup
        results.append((impl, _bench(lambda: _kernels.fnv1a64(data, impl=impl),
                                     repeats)))
    ref = _kernels.fnv1a64(data, impl="numpy")
    for impl in impls:
        assert _kernels.fnv1a64(data, impl=impl) == ref, f"{impl} hash diverged"
    return results


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--rounds", type=int, default=1_000_000,
                    help="rounds per sampler timing (default 1e6)")
    ap.add_argument("--repeats", type=int, default=5,
                    help="timing repeats, best-of (default 5)")
    args = ap.parse_args()

    if not _kernels.HAVE_NUMBA:
        print("note: numba unavailable or disabled; timing numpy path only")

    print(f"sampler: {args.rounds} rounds, best of {args.repeats}")
    sampler = bench_sampler(args.rounds, args.repeats)
    for impl, dt in sampler:
        print(f"  {impl:6s} {dt:8.4f} s   {args.rounds / dt / 1e6:7.2f} Mrounds/s")
    if len(sampler) == 2:
        print(f"  speedup {sampler[0][1] / sampler[1][1]:.1f}x")

    n_bytes = 32 * args.rounds
    print(f"transcript hash: {n_bytes} bytes, best of {args.repeats}")
    hashing = bench_hash(n_bytes, args.repeats)
    for impl, dt in hashing:
        print(f"  {impl:6s} {dt:8.4f} s   {n_bytes / dt / 1e6:7.2f} MB/s")
    if len(hashing) == 2:
        print(f"  speedup {hashing[0][1] / hashing[1][1]:.1f}x")


if __name__ == "__main__":
    main()
