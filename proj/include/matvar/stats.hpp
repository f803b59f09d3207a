#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace matvar {

/// Two-sample Kolmogorov-Smirnov distance sup |F_a - F_b|.
double ks_two_sample(std::span<const double> a, std::span<const double> b);

/// One-sample KS distance of the sample against a continuous CDF.
double ks_one_sample(std::span<const double> sample, const std::function<double(double)>& cdf);

/// KS distance against Uniform(0, 1).
double ks_uniform(std::span<const double> sample);

/// Asymptotic Kolmogorov survival function Q(x) = 2 sum (-1)^{k-1} exp(-2 k^2 x^2).
double kolmogorov_sf(double x);

/// Asymptotic p-values with the Stephens small-sample correction.
double ks_one_sample_pvalue(double distance, std::size_t n);
double ks_two_sample_pvalue(double distance, std::size_t n, std::size_t m);

double mean(std::span<const double> x);
double variance(std::span<const double> x);

/// Runs body(block) for block in [0, n_blocks) on up to `workers` threads.
/// Callers write into per-block slots, so the result never depends on the
/// worker count.
void for_each_block(std::size_t n_blocks, unsigned workers, const std::function<void(std::size_t)>& body);

}  // namespace matvar
