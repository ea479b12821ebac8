#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "error.hpp"

namespace embodied {

struct SampleStats {
    std::size_t n = 0;
    double mean = 0.0;
    double var = 0.0; // unbiased (n-1)

    static SampleStats of(const std::vector<double>& xs) {
        SampleStats s;
        s.n = xs.size();
        if (s.n == 0) return s;
        for (double x : xs) s.mean += x;
        s.mean /= double(s.n);
        if (s.n > 1) {
            for (double x : xs) s.var += (x - s.mean) * (x - s.mean);
            s.var /= double(s.n - 1);
        }
        return s;
    }

    double stdev() const { return std::sqrt(var); }
};

struct WelchResult {
    double t = 0.0;
    double df = 0.0;
    double p = 1.0;
};

// Two-sided Welch t-test with Welch–Satterthwaite degrees of freedom.
// Degenerate samples (zero variance on both sides) resolve to p=1 for equal
// means and p→0 otherwise rather than raising.
inline WelchResult welch_t_test(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() < 2 || b.size() < 2)
        throw DegenerateSample("welch_t_test needs at least two observations per sample");
    const SampleStats sa = SampleStats::of(a), sb = SampleStats::of(b);
    const double se_a = sa.var / double(sa.n), se_b = sb.var / double(sb.n);
    const double denom2 = se_a + se_b;
    WelchResult r;
    if (denom2 == 0.0) {
        r.df = double(sa.n + sb.n - 2);
        if (sa.mean == sb.mean) {
            r.t = 0.0;
            r.p = 1.0;
        } else {
            r.t = sa.mean > sb.mean ? std::numeric_limits<double>::infinity()
                                    : -std::numeric_limits<double>::infinity();
            r.p = 0.0;
        }
        return r;
    }
    r.t = (sa.mean - sb.mean) / std::sqrt(denom2);
    r.df = denom2 * denom2 /
           (se_a * se_a / double(sa.n - 1) + se_b * se_b / double(sb.n - 1));
    const boost::math::students_t_distribution<double> dist(r.df);
    r.p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(r.t)));
    return r;
}

// d = (mean(comparator) − mean(embodied)) / s_pooled, (n−1)-weighted pooling.
// Negative d means the embodied sample scored higher.
inline double cohens_d(const std::vector<double>& comparator, const std::vector<double>& embodied) {
    if (comparator.size() < 2 || embodied.size() < 2)
        throw DegenerateSample("cohens_d needs at least two observations per sample");
    const SampleStats sc = SampleStats::of(comparator), se = SampleStats::of(embodied);
    const double pooled2 = (double(sc.n - 1) * sc.var + double(se.n - 1) * se.var) /
                           double(sc.n + se.n - 2);
    if (pooled2 == 0.0) throw DegenerateSample("cohens_d pooled standard deviation is zero");
    return (sc.mean - se.mean) / std::sqrt(pooled2);
}

struct ComparisonStat {
    double mean_a = 0.0, mean_b = 0.0;
    double stdev_a = 0.0, stdev_b = 0.0;
    double t = 0.0;
    double p = 1.0;
    double d = 0.0;
    bool significant = false;
    bool degenerate = false; // d undefined (zero pooled variance)
};

// a is the comparator (baseline or inception-like), b the embodied sample.
inline ComparisonStat compare_samples(const std::vector<double>& a, const std::vector<double>& b,
                                      double alpha) {
    ComparisonStat c;
    const SampleStats sa = SampleStats::of(a), sb = SampleStats::of(b);
    c.mean_a = sa.mean;
    c.mean_b = sb.mean;
    c.stdev_a = sa.stdev();
    c.stdev_b = sb.stdev();
    const WelchResult w = welch_t_test(a, b);
    c.t = w.t;
    c.p = w.p;
    try {
        c.d = cohens_d(a, b);
    } catch (const DegenerateSample&) {
        c.degenerate = true;
        c.d = std::numeric_limits<double>::quiet_NaN();
    }
    c.significant = c.p < alpha;
    return c;
}

} // namespace embodied
