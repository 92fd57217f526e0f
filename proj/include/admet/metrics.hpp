#pragma once

#include <utility>
#include <vector>

#include "admet/errors.hpp"

namespace admet {

// Squared Pearson correlation, single numerically stable pass.
double pearson_r2(const std::vector<double>& pred, const std::vector<double>& actual);

// Pearson correlation of ranks, average ranks for ties.
double spearman_rho(const std::vector<double>& pred, const std::vector<double>& actual);

// Fisher-z interval on r = sqrt(r2), 95%, endpoints squared and clamped to [0,1].
std::pair<double, double> r2_confidence_interval(double r2, int n);

}  // namespace admet
