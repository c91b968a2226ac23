// Copyright 2026 The dgslab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace dgs {

double mean(std::span<const double> v);
/// Sample standard deviation (n-1 denominator).
double sample_sd(std::span<const double> v);
/// Linear interpolation between order statistics at h = (n-1)p.
double percentile_sorted(std::span<const double> sorted, double p);
/// Average ranks (1-based), ties share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> v);

/// Regularized incomplete beta I_x(a, b) by continued fraction.
double incomplete_beta(double a, double b, double x);
double student_t_cdf(double t, double df);
/// Two-sided tail probability P(|T| >= |t|).
double student_t_two_sided(double t, double df);

struct PairedSample {
    std::vector<double> a;
    std::vector<double> b;
    std::string label_a = "A";
    std::string label_b = "B";

    /// n >= 2, equal lengths, all entries finite.
    void validate() const;
    /// b - a, elementwise.
    std::vector<double> differences() const;
};

struct PairedEffect {
    std::size_t n = 0;
    double mean_difference = 0.0;
    double sd_difference = 0.0;
    double cohens_d = 0.0;
    double t = 0.0;
    double p = 1.0;
};

/// Paired t-test on b - a with Cohen's d = mean/sd. Throws
/// DegenerateSampleError when sd == 0.
PairedEffect paired_effect(const PairedSample& s);

struct WilcoxonResult {
    std::size_t n_used = 0;  // after dropping zero differences
    double w_plus = 0.0;
    double w_minus = 0.0;
    double w = 0.0;          // min(w_plus, w_minus)
    double p = 1.0;
};

/// Exact two-sided signed-rank test. Zero differences are dropped and tied
/// magnitudes share average ranks; the null distribution is counted exactly.
WilcoxonResult wilcoxon_exact(const PairedSample& s);

double pearson(std::span<const double> x, std::span<const double> y);
double spearman(std::span<const double> x, std::span<const double> y);

struct CorrelationResult {
    double pearson = 0.0;
    double spearman = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::size_t resamples = 0;
    std::size_t degenerate_resamples = 0;
};

/// Pearson, Spearman and a percentile bootstrap 95% CI for Pearson r over
/// paired resamples. Resample b draws from CounterRng(seed, b).
CorrelationResult correlate(std::span<const double> x, std::span<const double> y, std::size_t resamples = 10000,
                            std::uint64_t seed = 0);

struct CountGapPoint {
    double k = 0.0;
    double gap = 0.0;
};

struct CountGapFit {
    std::size_t n = 0;
    double slope = 0.0;      // dB per decade of K
    double intercept = 0.0;  // gap at K = 1
    double r = 0.0;
    double rho = 0.0;
    bool has_endpoint_r = false;
    double endpoint_r = 0.0;  // r with the min-K and max-K records removed
};

/// Least squares of gap on log10 K.
CountGapFit fit_count_gap(std::span<const CountGapPoint> records);

}  // namespace dgs
