"""Reference values for the stats tests, printed as C++ initializers.

Run: python3 tests/oracles/stats_reference.py
"""
import itertools

import numpy as np
import statsmodels.api as sm
from scipy import stats

# Montgomery, Design and Analysis of Experiments: tensile strength by cotton %.
BALANCED = {
    "c15": [7, 7, 15, 11, 9],
    "c20": [12, 17, 12, 18, 18],
    "c25": [14, 18, 18, 19, 19],
    "c30": [19, 25, 22, 19, 23],
    "c35": [7, 10, 11, 15, 11],
}
UNBALANCED = {
    "a": [4.1, 3.9, 4.4, 5.0, 4.6, 4.2],
    "b": [3.1, 3.6, 2.9],
    "c": [4.8, 5.3, 5.9, 5.1],
    "d": [3.8, 4.0, 4.9, 4.3, 3.5],
}


def tukey(groups):
    names = list(groups)
    res = stats.tukey_hsd(*[groups[n] for n in names])
    k = len(names)
    N = sum(len(v) for v in groups.values())
    df = N - k
    mse = sum(((np.array(v) - np.mean(v)) ** 2).sum() for v in groups.values()) / df
    print(f"// k={k} df={df} mse={float(mse)!r} q_crit={float(stats.studentized_range.ppf(0.95, k, df))!r}")
    for i, j in itertools.combinations(range(k), 2):
        a, b = groups[names[i]], groups[names[j]]
        q = abs(np.mean(b) - np.mean(a)) / np.sqrt(mse / 2 * (1 / len(a) + 1 / len(b)))
        print(f'{{"{names[i]}", "{names[j]}", {float(q)!r}, {float(res.pvalue[i, j])!r}}},')


def ols(groups, reference):
    names = list(groups)
    y, X = [], []
    others = [n for n in names if n != reference]
    for n in names:
        for v in groups[n]:
            y.append(v)
            X.append([1.0] + [1.0 if n == o else 0.0 for o in others])
    fit = sm.OLS(np.array(y), np.array(X)).fit()
    print(f"// sigma2={float(fit.scale)!r} df={float(fit.df_resid)!r}")
    for idx, o in enumerate(others, start=1):
        print(f'{{"{o}", {float(fit.params[idx])!r}, {float(fit.bse[idx])!r}, {float(fit.pvalues[idx])!r}}},')


print("// balanced tukey")
tukey(BALANCED)
print("// unbalanced tukey")
tukey(UNBALANCED)
print("// ols, reference a")
ols(UNBALANCED, "a")
print("// studentized range cdf")
for q, k, df in [(3.0, 3, 10), (4.37, 5, 20), (2.5, 2, 5), (5.5, 4, 60), (1.2, 6, 12)]:
    print(f"{{{q}, {k}, {df}, {float(stats.studentized_range.cdf(q, k, df))!r}}},")
