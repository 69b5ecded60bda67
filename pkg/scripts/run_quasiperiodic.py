#!/usr/bin/env python3
"""Gap labelling for the golden-ratio quasi-periodic potential.

V(x) = cos(2 pi x) + cos(2 pi g x) with g the golden mean.  Detected gaps
carry density-of-states values in the frequency module Z + Z g; the script
prints each detected gap with its label and the nearest lattice point.
"""

import math
import sys
import time

from gaplab import lattice, spectrum
from gaplab.potentials import PotentialSpec, WindowChain

GOLDEN = (1.0 + math.sqrt(5.0)) / 2.0


def main(e_min: float = -2.0, e_max: float = 12.0) -> int:
    spec = PotentialSpec.cosine_sum([(1.0, 1.0, 0.0), (1.0, GOLDEN, 0.0)])
    chain = WindowChain.geometric()
    t0 = time.time()
    gaps = spectrum.detect_gaps(spec, float(e_min), float(e_max),
                                resolution=0.02, chain=chain)
    print(f"{len(gaps)} gap(s) detected in [{e_min}, {e_max}] "
          f"({time.time() - t0:.1f}s)")
    labels = [(m, n, m + n * GOLDEN)
              for m in range(-5, 6) for n in range(-5, 6)]
    a, b = chain.largest
    for gap in gaps:
        res = spectrum.ids(spec, gap.mid, chain)
        m, n, lab = min(labels, key=lambda t: abs(res.value - t[2]))
        oracle = lattice.fd_eigenvalue_count(spec, a, b, 0.0, gap.mid,
                                             0.005) / (b - a)
        print(f"gap ({gap.e_lower:+.4f}, {gap.e_upper:+.4f}) "
              f"ids = {res.value:.5f} +- {res.error_estimate:.1e} "
              f"~ {m} + {n}*g = {lab:.5f} "
              f"(dev {abs(res.value - lab):.2e}, oracle {oracle:.5f})")
    return 0


if __name__ == "__main__":
    sys.exit(main(*[float(v) for v in sys.argv[1:]]))
