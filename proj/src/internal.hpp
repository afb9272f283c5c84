#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "fso/specfun.hpp"

namespace fso::detail {

cplx log_lead(double lead, double log_scale);
double choose_anchor(const PoleStrip& st, double position, std::optional<double> fixed);
// First y past the peak where log|f(c+iy)| has dropped by log(tail_tol) and is still falling.
double scan_truncation(const std::function<double(double)>& log_mag, double tail_tol, double y_max);
// Composite 30-point Gauss-Legendre nodes on [lo, hi] with at least min_nodes points.
void gauss_panels(double lo, double hi, int min_nodes, std::vector<double>* x, std::vector<double>* w);
double decay_index(const FoxHSpec& s);

}  // namespace fso::detail
