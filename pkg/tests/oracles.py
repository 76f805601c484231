"""Independent reference computations used only by the tests."""
import math

import numpy as np
from scipy.stats import binom


def ldpc_cn_sums(p0, p1, gamma, dc):
    """LDPC CN updates as explicit sums over the number i of defective
    neighbours among the other dc-1, i ~ Bino(dc-1, gamma)."""
    i = np.arange(dc)
    pmf = binom.pmf(i, dc - 1, gamma)
    q0 = math.fsum(pmf * (1 - p1) ** i)
    q1 = math.fsum(pmf * (1 - p0) ** (dc - 1 - i))
    return q0, q1


def gldpc_cn_sum(p, dc, t):
    """P[Bino(dc-1, p) <= t-1] as a plain sum of pmf terms."""
    return math.fsum(binom.pmf(np.arange(t), dc - 1, p))
