"""
End-to-end recovery of a bump b against b = 0.

Same scheme for data and inversion (inverse crime).  Takes about 6 minutes
on one core.  --small runs a coarse 17x17 smoke version in seconds; at that
resolution the spline basis cannot represent beta_w and the error is large.
"""
import sys

from nlwave.recovery import RecoveryConfig, end_to_end

if "--small" in sys.argv:
    cfg = RecoveryConfig(nx=17, ny=17, T=2.0, n_dirs=8, lams=(2.0, 4.0, 6.0), hs=0.25, ht=0.2)
else:
    cfg = RecoveryConfig()

rep = end_to_end(cfg, log=print)
for stage, metric, value in rep.rows:
    print(f"{stage:10s} {metric:22s} {value}")
