"""Upper tail dependence of a Gumbel copula in two and six dimensions.

Run with ``python3 demos/tail_dependence.py``. For d > 2 the index conditions on
the first coordinate being extreme, which matches the closed form
``sum_r (-1)**(r+1) C(d, r) r**(1/theta)``.
"""

import numpy as np

from abscop import CopulaSpec, Family, Kind, MarginalSource, run_abscop, sample_copula, true_functional

rng = np.random.default_rng(2)
for d in (2, 6):
    spec = CopulaSpec(Family.GUMBEL, 2.0, d)
    data = sample_copula(spec, 1000, rng)
    post = run_abscop(data, MarginalSource.empirical_cdf(), Kind.LAMBDA_U, B=10_000, rng=rng)
    s = post.summary
    print(f"d={d}: true {true_functional(spec, Kind.LAMBDA_U):.3f}  estimate {post.point_estimate:.3f}  "
          f"posterior median {s.median:.3f}  95% [{s.lower:.3f}, {s.upper:.3f}]")
