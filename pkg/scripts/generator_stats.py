#!/usr/bin/env python3
"""Empirical statistics of the scenario generator.

For many seeds, report events per kind, the mean interval, how often the
final clamped interval falls below min_interval, and the value histogram of
one kind (should be close to uniform).
"""

import argparse
import statistics
from collections import Counter

from ctxmonkey.scenario import VOCABULARY, EventKind, GeneratorConfig, generate_scenario


def main(argv=None):
    p = argparse.ArgumentParser(description="scenario generator statistics")
    p.add_argument("--seeds", type=int, default=2000)
    p.add_argument("--min-interval", type=int, default=5)
    p.add_argument("--max-interval", type=int, default=12)
    p.add_argument("--duration", type=int, default=60)
    p.add_argument("--kind", default="NetworkStatus", choices=[k.value for k in EventKind])
    args = p.parse_args(argv)

    counts = {k: [] for k in EventKind}
    intervals = []
    short_tail = 0
    values = Counter()
    kind = EventKind(args.kind)
    for seed in range(args.seeds):
        cfg = GeneratorConfig(seed, args.min_interval, args.max_interval, args.duration, frozenset(EventKind))
        s = generate_scenario(cfg)
        for k, seq in s.sequences.items():
            counts[k].append(len(seq))
            intervals.extend(ev.interval_secs for ev in seq[:-1])
            short_tail += seq[-1].interval_secs < args.min_interval
        values.update(ev.value for ev in s.sequences[kind])

    n_seq = args.seeds * len(EventKind)
    print(f"seeds={args.seeds} min={args.min_interval} max={args.max_interval} duration={args.duration}")
    for k, c in counts.items():
        print(f"  {k.value:<14} events/scenario mean={statistics.mean(c):.2f} min={min(c)} max={max(c)}")
    if intervals:
        print(f"  non-final interval mean={statistics.mean(intervals):.3f} "
              f"(uniform expectation {(args.min_interval + args.max_interval) / 2:.3f})")
    print(f"  final interval below min in {short_tail}/{n_seq} sequences ({short_tail / n_seq:.1%})")
    total = sum(values.values())
    print(f"  {kind.value} value frequencies (uniform = {1 / len(VOCABULARY[kind]):.3f}):")
    for v in VOCABULARY[kind]:
        print(f"    {v:<28} {values[v] / total:.3f}")


if __name__ == "__main__":
    main()
