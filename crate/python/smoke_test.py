"""Smoke test for the pybnpnorm extension.

Build and install first, for example:

    pip install maturin
    maturin build --release -m crates/python/Cargo.toml
    pip install target/wheels/pybnpnorm-*.whl
"""

import math
import sys

import pybnpnorm as bn


def check(cond, msg):
    if not cond:
        print(f"FAIL: {msg}")
        sys.exit(1)
    print(f"ok: {msg}")


def main():
    check(abs(bn.chi2_cdf(bn.chi2_quantile(0.95, 3), 3) - 0.95) < 1e-9, "chi-square quantile round trip")
    check(abs(bn.chi2_cdf(2.0, 2) - (1 - math.exp(-1))) < 1e-12, "chi-square(2) cdf closed form")

    x = bn.generate("normal_a", 2, 50, seed=1)
    d = bn.squared_mahalanobis(x)
    check(abs(sum(d) - 2 * 49) < 1e-9, "squared distances sum to m(n-1)")

    atoms, jumps = bn.sample_dp(5.0, 2, 200, seed=3)
    check(abs(sum(jumps) - 1) < 1e-12, "DP jumps sum to one")
    check(bn.ad_distance(atoms, jumps, 2) > 0, "AD distance of a prior draw is positive")

    prior = bn.prior_distance_sample(5.0, 500, 400, seed=2)
    mean = sum(prior) / len(prior)
    check(abs(mean - bn.ad_prior_mean(5.0)) < 0.05, f"prior mean {mean:.4f} near 1/6")

    cfg = bn.TestConfig(5.0, seed=7, r1=500, r2=500)
    null = bn.run_test(x, cfg)
    print(null)
    check(null.verdict == "favor_H0", "normal data favoured")
    check(len(null.quantile_grid) == cfg.M + 1, "quantile grid has M + 1 points")

    heavy = bn.run_test(bn.generate("pearson7_1", 2, 50, seed=1), cfg)
    print(heavy)
    check(heavy.verdict == "against_H0", "Pearson VII data rejected")

    try:
        bn.run_test([[float(i), 2.0 * i] for i in range(10)], cfg)
    except ArithmeticError as e:
        check(True, f"singular covariance raises ArithmeticError ({e})")
    else:
        check(False, "singular covariance raises")

    try:
        bn.run_test(x, bn.TestConfig(-1.0))
    except ValueError:
        check(True, "negative concentration raises ValueError")
    else:
        check(False, "negative concentration raises")

    print("all smoke checks passed")


if __name__ == "__main__":
    main()
