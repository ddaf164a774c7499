"""Independent straightforward reimplementations used as test oracles.

These deliberately avoid the package's own code paths: plain-Python loops,
the stdlib statistics module, and scipy where the implementation hand-rolls
(and vice versa: the one statistic the implementation takes from scipy,
kendall's tau, is reimplemented here as an O(n^2) loop).
"""
from __future__ import annotations

import math
import statistics

from scipy import stats as sps


def _finite(x: float) -> float:
    return float(x) if math.isfinite(x) else 0.0


def oracle_quartiles(v):
    s = sorted(v)
    n = len(s)
    half = math.ceil(n / 2)
    return (
        statistics.median(s[:half]),
        statistics.median(s),
        statistics.median(s[n - half :]),
    )


def oracle_q1(v):
    return oracle_quartiles(v)[0]


def oracle_q3(v):
    return oracle_quartiles(v)[2]


def oracle_iqr(v):
    q1, _, q3 = oracle_quartiles(v)
    return q3 - q1


def _oracle_fences(v, alpha):
    q1, _, q3 = oracle_quartiles(v)
    return q1 - alpha * (q3 - q1), q3 + alpha * (q3 - q1)


def oracle_outliers_lower(v, alpha):
    lo, _ = _oracle_fences(v, alpha)
    return float(sum(1 for x in v if x < lo))


def oracle_outliers_upper(v, alpha):
    _, hi = _oracle_fences(v, alpha)
    return float(sum(1 for x in v if x > hi))


def oracle_outliers_total(v, alpha):
    return oracle_outliers_lower(v, alpha) + oracle_outliers_upper(v, alpha)


def oracle_outliers_std(v, alpha):
    mu = statistics.fmean(v)
    sigma = statistics.pstdev(v)
    if sigma == 0:
        return 0.0
    return float(sum(1 for x in v if abs(x - mu) > alpha * sigma))


def oracle_spearman(v):
    result = sps.spearmanr(v, sorted(v)).statistic
    return _finite(result)


def oracle_kendall(v):
    """Tau-b by direct pair counting."""
    s = sorted(v)
    n = len(v)
    concordant = discordant = ties_a = ties_b = 0
    for i in range(n):
        for j in range(i + 1, n):
            da, db = v[i] - v[j], s[i] - s[j]
            if da == 0 and db == 0:
                continue
            if da == 0:
                ties_a += 1
            elif db == 0:
                ties_b += 1
            elif (da > 0) == (db > 0):
                concordant += 1
            else:
                discordant += 1
    n0 = n * (n - 1) / 2
    n1 = sum(t * (t - 1) / 2 for t in _tie_counts(v))
    n2 = sum(t * (t - 1) / 2 for t in _tie_counts(s))
    denom = math.sqrt((n0 - n1) * (n0 - n2))
    if denom == 0:
        return 0.0
    return (concordant - discordant) / denom


def _tie_counts(v):
    counts = {}
    for x in v:
        counts[x] = counts.get(x, 0) + 1
    return counts.values()


def oracle_pearson(v):
    if len(v) < 2 or len(set(v)) == 1:
        return 0.0
    return _finite(sps.pearsonr(v, sorted(v)).statistic)


def oracle_gmean(v):
    if any(x <= 0 for x in v):
        return 0.0
    return _finite(sps.gmean(v))


def oracle_hmean(v):
    if any(x <= 0 for x in v):
        return 0.0
    return _finite(sps.hmean(v))


def oracle_skewness(v):
    if len(v) < 2 or statistics.pvariance(v) == 0:
        return 0.0
    return _finite(sps.skew(v, bias=True))


def oracle_kurtosis(v):
    if len(v) < 2 or statistics.pvariance(v) == 0:
        return 0.0
    return _finite(sps.kurtosis(v, fisher=False, bias=True))


def oracle_hyperskewness(v):
    if len(v) < 2:
        return 0.0
    mu = statistics.fmean(v)
    m2 = statistics.fmean([(x - mu) ** 2 for x in v])
    if m2 == 0:
        return 0.0
    m5 = statistics.fmean([(x - mu) ** 5 for x in v])
    return _finite(m5 / m2**2.5)


def oracle_moment(v, k):
    if len(v) < 2:
        return 0.0
    return _finite(sps.moment(v, k))


def oracle_kstat(v, k):
    if len(v) < k:
        return 0.0
    return _finite(sps.kstat(v, k))


def oracle_mad(v):
    med = statistics.median(v)
    return statistics.median([abs(x - med) for x in v])


def oracle_aad(v):
    mu = statistics.fmean(v)
    return statistics.fmean([abs(x - mu) for x in v])


def oracle_entropy(v):
    if any(x < 0 for x in v):
        return 0.0
    return -sum(x * math.log2(x) for x in v if x > 0)


def oracle_normalized_entropy(v):
    if len(v) <= 1:
        return 0.0
    return oracle_entropy(v) / math.log2(len(v))


def oracle_gini(v):
    n = len(v)
    if n == 0 or any(x < 0 for x in v):
        return 0.0
    mu = statistics.fmean(v)
    if mu <= 0:
        return 0.0
    total = sum(abs(a - b) for a in v for b in v)
    return total / (2 * n * n * mu)


def oracle_quartile_max_gap(v):
    q1, med, q3 = oracle_quartiles(v)
    points = [min(v), q1, med, q3, max(v)]
    return max(b - a for a, b in zip(points, points[1:]))


def oracle_centroid_max_gap(v, bins=5):
    lo, hi = min(v), max(v)
    if hi == lo:
        return 0.0
    groups = [[] for _ in range(bins)]
    for x in v:
        idx = min(int((x - lo) / (hi - lo) * bins), bins - 1)
        groups[idx].append(x)
    centroids = [statistics.fmean(g) for g in groups if g]
    if len(centroids) < 2:
        return 0.0
    return max(centroids) - min(centroids)


def oracle_histogram_probability(v, bins=10):
    lo, hi = min(v), max(v)
    counts = [0] * bins
    if hi == lo:
        counts[0] = len(v)
    else:
        for x in v:
            counts[min(int((x - lo) / (hi - lo) * bins), bins - 1)] += 1
    total = sum(counts)
    return [c / total for c in counts]


def ratio_guard(num, den):
    return _finite(num / den) if den != 0 else 0.0


def oracle_value(name: str, v: list) -> float:
    """Dispatch by implementation function name."""
    mu = statistics.fmean(v) if v else 0.0
    var = statistics.pvariance(v) if len(v) > 0 else 0.0
    table = {
        "q1": lambda: oracle_q1(v),
        "q3": lambda: oracle_q3(v),
        "iqr": lambda: oracle_iqr(v),
        "outliers_lower_iqr_1_5": lambda: oracle_outliers_lower(v, 1.5),
        "outliers_upper_iqr_1_5": lambda: oracle_outliers_upper(v, 1.5),
        "outliers_total_iqr_1_5": lambda: oracle_outliers_total(v, 1.5),
        "outliers_lower_iqr_3": lambda: oracle_outliers_lower(v, 3.0),
        "outliers_upper_iqr_3": lambda: oracle_outliers_upper(v, 3.0),
        "outliers_total_iqr_3": lambda: oracle_outliers_total(v, 3.0),
        "outliers_std_2": lambda: oracle_outliers_std(v, 2.0),
        "outliers_std_3": lambda: oracle_outliers_std(v, 3.0),
        "spearman_sorted": lambda: oracle_spearman(v),
        "kendall_sorted": lambda: oracle_kendall(v),
        "pearson_sorted": lambda: oracle_pearson(v),
        "minimum": lambda: min(v),
        "maximum": lambda: max(v),
        "value_range": lambda: max(v) - min(v),
        "median": lambda: statistics.median(v),
        "geometric_mean": lambda: oracle_gmean(v),
        "harmonic_mean": lambda: oracle_hmean(v),
        "mean": lambda: mu,
        "stdev": lambda: statistics.pstdev(v),
        "variance": lambda: var,
        "skewness": lambda: oracle_skewness(v),
        "kurtosis": lambda: oracle_kurtosis(v),
        "hyperskewness": lambda: oracle_hyperskewness(v),
        "moment_6": lambda: oracle_moment(v, 6),
        "moment_7": lambda: oracle_moment(v, 7),
        "moment_8": lambda: oracle_moment(v, 8),
        "moment_9": lambda: oracle_moment(v, 9),
        "moment_10": lambda: oracle_moment(v, 10),
        "kstat_3": lambda: oracle_kstat(v, 3),
        "kstat_4": lambda: oracle_kstat(v, 4),
        "quartile_dispersion": lambda: ratio_guard(
            oracle_q3(v) - oracle_q1(v), oracle_q3(v) + oracle_q1(v)
        ),
        "median_abs_deviation": lambda: oracle_mad(v),
        "avg_abs_deviation": lambda: oracle_aad(v),
        "coeff_variation": lambda: ratio_guard(statistics.pstdev(v), mu),
        "efficiency_ratio": lambda: ratio_guard(var, mu * mu),
        "variance_mean_ratio": lambda: ratio_guard(var, mu),
        "signal_noise_ratio": lambda: ratio_guard(mu * mu, var),
        "entropy": lambda: oracle_entropy(v),
        "normalized_entropy": lambda: oracle_normalized_entropy(v),
        "gini": lambda: oracle_gini(v),
        "quartile_max_gap": lambda: oracle_quartile_max_gap(v),
        "centroid_max_gap": lambda: oracle_centroid_max_gap(v),
    }
    return float(table[name]())


def oracle_dcg(labels, k):
    """Direct-summation DCG with gain 2^label - 1 and log2(rank+1) discount."""
    total = 0.0
    for rank, label in enumerate(labels[:k], start=1):
        total += (2.0**label - 1.0) / math.log2(rank + 1)
    return total


def oracle_ndcg(labels, k):
    """Per-list normalized DCG with the positives-truncated normalizer."""
    positives = sum(labels)
    z = sum(1.0 / math.log2(j + 1) for j in range(1, min(k, positives) + 1))
    return oracle_dcg(labels, k) / z
