"""Reference percentile-bootstrap intervals.

Pure-Python MT19937-64 (the reference algorithm from Matsumoto and Nishimura),
index draws as `next() % n`, and numpy's linear percentile. Prints the intervals
frozen into the unit tests; with a path argument, writes the 50-value reference file.
"""
import numpy as np

MASK = (1 << 64) - 1


class MT64:
    NN, MM = 312, 156
    MATRIX_A = 0xB5026F5AA96619E9
    UM, LM = 0xFFFFFFFF80000000, 0x7FFFFFFF

    def __init__(self, seed):
        self.mt = [0] * self.NN
        self.mt[0] = seed & MASK
        for i in range(1, self.NN):
            prev = self.mt[i - 1]
            self.mt[i] = (6364136223846793005 * (prev ^ (prev >> 62)) + i) & MASK
        self.mti = self.NN

    def next(self):
        if self.mti >= self.NN:
            mt = self.mt
            for i in range(self.NN):
                x = (mt[i] & self.UM) | (mt[(i + 1) % self.NN] & self.LM)
                xa = x >> 1
                if x & 1:
                    xa ^= self.MATRIX_A
                mt[i] = mt[(i + self.MM) % self.NN] ^ xa
            self.mti = 0
        x = self.mt[self.mti]
        self.mti += 1
        x ^= (x >> 29) & 0x5555555555555555
        x ^= (x << 17) & 0x71D67FFFEDA60000
        x ^= (x << 37) & 0xFFF7EEE000000000
        x ^= x >> 43
        return x & MASK


def bootstrap(values, resamples, seed, level):
    rng = MT64(seed)
    n = len(values)
    x0 = values[0]
    means = []
    for _ in range(resamples):
        acc = 0.0
        for _ in range(n):
            acc += values[rng.next() % n] - x0
        means.append(x0 + acc / n)
    means.sort()
    alpha = 1 - level
    lo, hi = np.percentile(means, [100 * alpha / 2, 100 * (1 - alpha / 2)], method="linear")
    return float(lo), float(hi)


CASES = [
    ([0.1, 0.4, 0.35, 0.8, 0.2, 0.55, 0.9, 0.05], 200, 42, 0.95),
    ([0.1, 0.4, 0.35, 0.8, 0.2, 0.55, 0.9, 0.05], 500, 7, 0.90),
    ([1.0, 0.0, 0.5], 100, 1, 0.95),
]

FIFTY = [round(((i * 37) % 101) / 101 + 0.01 * (i % 7), 6) for i in range(50)]


def write_reference(path):
    import json
    lo, hi = bootstrap(FIFTY, 1000, 42, 0.95)
    ref = {"values": FIFTY, "resamples": 1000, "seed": 42, "level": 0.95,
           "ci_low": lo, "ci_high": hi, "mean": float(np.mean(FIFTY))}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(ref, fh, indent=2)
        fh.write("\n")


if __name__ == "__main__":
    import sys
    if len(sys.argv) > 1:
        write_reference(sys.argv[1])
        sys.exit(0)
    r = MT64(5489)
    print("first draw seed 5489:", r.next())
    for values, b, seed, level in CASES:
        lo, hi = bootstrap(values, b, seed, level)
        print(f"{values} B={b} seed={seed} level={level}: {lo!r} {hi!r}")
