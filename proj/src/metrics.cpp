#include "admet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace admet {

namespace {

double pearson_r(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw DegenerateSeries("series lengths differ");
    size_t n = x.size();
    if (n < 2) throw DegenerateSeries("need at least 2 points");
    // Welford-style co-moment accumulation
    double mx = 0.0, my = 0.0, sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (size_t i = 0; i < n; ++i) {
        double k = 1.0 / static_cast<double>(i + 1);
        double dx = x[i] - mx;
        double dy = y[i] - my;
        mx += dx * k;
        my += dy * k;
        sxx += dx * (x[i] - mx);
        syy += dy * (y[i] - my);
        sxy += dx * (y[i] - my);
    }
    if (sxx <= 0.0 || syy <= 0.0) throw DegenerateSeries("constant series");
    return sxy / std::sqrt(sxx * syy);
}

std::vector<double> average_ranks(const std::vector<double>& x) {
    size_t n = x.size();
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return x[a] < x[b]; });
    std::vector<double> ranks(n);
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
        double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

double pearson_r2(const std::vector<double>& pred, const std::vector<double>& actual) {
    double r = pearson_r(pred, actual);
    return r * r;
}

double spearman_rho(const std::vector<double>& pred, const std::vector<double>& actual) {
    if (pred.size() != actual.size() || pred.size() < 2)
        throw DegenerateSeries("need two series of equal length >= 2");
    return pearson_r(average_ranks(pred), average_ranks(actual));
}

std::pair<double, double> r2_confidence_interval(double r2, int n) {
    if (n < 4) throw InsufficientN("confidence interval needs n >= 4");
    if (r2 < 0.0 || r2 > 1.0) throw DegenerateSeries("r2 outside [0,1]");
    double r = std::sqrt(r2);
    // atanh diverges at r=1; nudge inside
    r = std::min(r, 1.0 - 1e-12);
    double z = std::atanh(r);
    double hw = 1.96 / std::sqrt(static_cast<double>(n - 3));
    double lo_r = std::tanh(z - hw);
    double hi_r = std::tanh(z + hw);
    // a negative lower correlation bound clamps to r2 = 0
    double lo = lo_r <= 0.0 ? 0.0 : std::clamp(lo_r * lo_r, 0.0, 1.0);
    double hi = std::clamp(hi_r * hi_r, 0.0, 1.0);
    return {lo, hi};
}

}  // namespace admet
