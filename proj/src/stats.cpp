// Copyright 2026 The dgslab Authors
// SPDX-License-Identifier: Apache-2.0

#include "dgslab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "dgslab/error.hpp"
#include "dgslab/rng.hpp"

namespace dgs {

double mean(std::span<const double> v) {
    require(!v.empty(), "mean: empty input");
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_sd(std::span<const double> v) {
    require(v.size() >= 2, "sample_sd: need at least two values");
    const double m = mean(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double percentile_sorted(std::span<const double> sorted, double p) {
    require(!sorted.empty(), "percentile: empty input");
    require(p >= 0.0 && p <= 1.0, "percentile: p must lie in [0,1]");
    const double h = static_cast<double>(sorted.size() - 1) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

std::vector<double> average_ranks(std::span<const double> v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t m = i; m <= j; ++m) ranks[order[m]] = r;
        i = j + 1;
    }
    return ranks;
}

namespace {

// Modified Lentz evaluation of the incomplete beta continued fraction.
double beta_cf(double a, double b, double x) {
    constexpr int kMaxIter = 500;
    constexpr double kEps = 1e-16;
    constexpr double kTiny = 1e-300;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) break;
    }
    return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
    require(a > 0.0 && b > 0.0, "incomplete_beta: a and b must be > 0");
    require(x >= 0.0 && x <= 1.0, "incomplete_beta: x must lie in [0,1]");
    if (x == 0.0 || x == 1.0) return x;
    const double ln_front =
        std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(a, b, x) / a;
    return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double student_t_two_sided(double t, double df) {
    require(df > 0.0, "student_t: df must be > 0");
    if (std::isinf(t)) return 0.0;
    return incomplete_beta(0.5 * df, 0.5, df / (df + t * t));
}

double student_t_cdf(double t, double df) {
    const double tail = 0.5 * student_t_two_sided(t, df);
    return t < 0.0 ? tail : 1.0 - tail;
}

void PairedSample::validate() const {
    require(a.size() == b.size(), "paired sample: condition lengths differ");
    require(a.size() >= 2, "paired sample: need n >= 2");
    for (std::size_t i = 0; i < a.size(); ++i)
        require(std::isfinite(a[i]) && std::isfinite(b[i]), "paired sample: non-finite entry");
}

std::vector<double> PairedSample::differences() const {
    std::vector<double> d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = b[i] - a[i];
    return d;
}

PairedEffect paired_effect(const PairedSample& s) {
    s.validate();
    const auto d = s.differences();
    PairedEffect e;
    e.n = d.size();
    e.mean_difference = mean(d);
    e.sd_difference = sample_sd(d);
    if (!(e.sd_difference > 0.0))
        throw DegenerateSampleError("paired_effect: all differences identical (sd = 0)", e.mean_difference);
    e.cohens_d = e.mean_difference / e.sd_difference;
    e.t = e.cohens_d * std::sqrt(static_cast<double>(e.n));
    e.p = student_t_two_sided(e.t, static_cast<double>(e.n - 1));
    return e;
}

WilcoxonResult wilcoxon_exact(const PairedSample& s) {
    s.validate();
    std::vector<double> d;
    for (double v : s.differences())
        if (v != 0.0) d.push_back(v);
    if (d.empty()) fail(ErrorCode::NoInformation, "wilcoxon_exact: all differences are zero");

    std::vector<double> mag(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) mag[i] = std::abs(d[i]);
    const auto ranks = average_ranks(mag);

    // Doubled ranks are integers even with ties.
    std::vector<int> r2(d.size());
    int total = 0;
    WilcoxonResult res;
    res.n_used = d.size();
    for (std::size_t i = 0; i < d.size(); ++i) {
        r2[i] = static_cast<int>(std::lround(2.0 * ranks[i]));
        total += r2[i];
        (d[i] > 0.0 ? res.w_plus : res.w_minus) += ranks[i];
    }
    res.w = std::min(res.w_plus, res.w_minus);

    std::vector<double> ways(static_cast<std::size_t>(total) + 1, 0.0);
    ways[0] = 1.0;
    for (int r : r2)
        for (int v = total; v >= r; --v) ways[v] += ways[v - r];
    const int w2 = static_cast<int>(std::lround(2.0 * res.w));
    double tail = 0.0;
    for (int v = 0; v <= w2; ++v) tail += ways[v];
    res.p = std::min(1.0, 2.0 * tail / std::ldexp(1.0, static_cast<int>(d.size())));
    return res;
}

double pearson(std::span<const double> x, std::span<const double> y) {
    require(x.size() == y.size(), "pearson: lengths differ");
    require(x.size() >= 2, "pearson: need at least two points");
    const double mx = mean(x), my = mean(y);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (!(sxx > 0.0) || !(syy > 0.0)) fail(ErrorCode::UndefinedCorrelation, "correlation undefined: constant input");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double spearman(std::span<const double> x, std::span<const double> y) {
    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    return pearson(rx, ry);
}

CorrelationResult correlate(std::span<const double> x, std::span<const double> y, std::size_t resamples,
                            std::uint64_t seed) {
    require(x.size() == y.size(), "correlate: lengths differ");
    require(x.size() >= 3, "correlate: need at least three points");
    CorrelationResult res;
    res.pearson = pearson(x, y);
    res.spearman = spearman(x, y);
    res.resamples = resamples;

    const std::size_t n = x.size();
    std::vector<double> rs;
    rs.reserve(resamples);
    std::vector<double> bx(n), by(n);
    for (std::size_t b = 0; b < resamples; ++b) {
        CounterRng rng(seed, b);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t j = rng.index(n);
            bx[i] = x[j];
            by[i] = y[j];
        }
        try {
            rs.push_back(pearson(bx, by));
        } catch (const Error&) {
            ++res.degenerate_resamples;
        }
    }
    if (rs.empty()) {
        res.ci_low = res.ci_high = std::numeric_limits<double>::quiet_NaN();
        return res;
    }
    std::sort(rs.begin(), rs.end());
    res.ci_low = percentile_sorted(rs, 0.025);
    res.ci_high = percentile_sorted(rs, 0.975);
    return res;
}

namespace {

struct LineFit {
    double slope, intercept, r;
};

LineFit least_squares(std::span<const double> x, std::span<const double> y) {
    const double mx = mean(x), my = mean(y);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    const double slope = sxy / sxx;
    return {slope, my - slope * mx, pearson(x, y)};
}

std::size_t distinct(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return static_cast<std::size_t>(std::unique(v.begin(), v.end()) - v.begin());
}

}  // namespace

CountGapFit fit_count_gap(std::span<const CountGapPoint> records) {
    std::vector<double> lk, gap;
    for (const auto& r : records) {
        require(r.k > 0.0 && std::isfinite(r.k) && std::isfinite(r.gap), "fit_count_gap: K must be > 0 and finite");
        lk.push_back(std::log10(r.k));
        gap.push_back(r.gap);
    }
    if (distinct(lk) < 3) fail(ErrorCode::UndefinedCorrelation, "fit_count_gap: need >= 3 distinct K");
    CountGapFit fit;
    fit.n = records.size();
    const LineFit lf = least_squares(lk, gap);
    fit.slope = lf.slope;
    fit.intercept = lf.intercept;
    fit.r = lf.r;
    fit.rho = spearman(lk, gap);

    const auto [mn, mx] = std::minmax_element(lk.begin(), lk.end());
    const auto i_min = static_cast<std::size_t>(mn - lk.begin());
    const auto i_max = static_cast<std::size_t>(mx - lk.begin());
    std::vector<double> ek, eg;
    for (std::size_t i = 0; i < lk.size(); ++i) {
        if (i == i_min || i == i_max) continue;
        ek.push_back(lk[i]);
        eg.push_back(gap[i]);
    }
    if (distinct(ek) >= 3) {
        try {
            fit.endpoint_r = pearson(ek, eg);
            fit.has_endpoint_r = true;
        } catch (const Error&) {
        }
    }
    return fit;
}

}  // namespace dgs
