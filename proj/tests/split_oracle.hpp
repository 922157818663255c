#pragma once

// Brute-force reference for the split criterion. Written directly from the
// formulas (shrunken per-arm child means with parent inheritance, sample
// fraction weights, best-arm gain) and deliberately shares no code with the
// library's split search.

#include "uplift/dataset.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace uplift::testing {

struct OracleParams {
  int min_split;
  double n_reg;
  double alpha;
};

inline std::vector<double> oracle_estimates(const Dataset& data, const std::vector<Index>& rows,
                                            const std::vector<double>& parent,
                                            const OracleParams& p) {
  std::vector<double> out(parent.size());
  for (std::size_t t = 0; t < parent.size(); ++t) {
    double sum = 0.0;
    int count = 0;
    for (Index i : rows) {
      if (data.treatment(i) == static_cast<int>(t)) {
        sum += data.response(i);
        ++count;
      }
    }
    out[t] = count >= p.min_split ? (sum + parent[t] * p.n_reg) / (count + p.n_reg) : parent[t];
  }
  return out;
}

inline double vmax(const std::vector<double>& v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  return m;
}

// Gain of sending rows with left[i] true to the left child.
inline double oracle_gain(const Dataset& data, const std::vector<Index>& rows,
                          const std::vector<bool>& left, const std::vector<double>& parent,
                          const OracleParams& p) {
  std::vector<Index> l, r;
  for (std::size_t k = 0; k < rows.size(); ++k) (left[k] ? l : r).push_back(rows[k]);
  const double m = static_cast<double>(rows.size());
  return l.size() / m * vmax(oracle_estimates(data, l, parent, p)) +
         r.size() / m * vmax(oracle_estimates(data, r, parent, p)) - vmax(parent);
}

// Max gain over every alpha-regular threshold partition on numeric
// coordinates (all cut positions between distinct values), or NaN if none.
inline double oracle_best_gain(const Dataset& data, const std::vector<Index>& rows,
                               const std::vector<double>& parent, const OracleParams& p) {
  const double m = static_cast<double>(rows.size());
  const double side = std::ceil(p.alpha * m - 1e-9);
  double best = std::numeric_limits<double>::quiet_NaN();
  for (int j = 0; j < data.d(); ++j) {
    for (Index pivot : rows) {
      const double cut = data.feature(pivot, j);
      std::vector<bool> left(rows.size());
      int nl = 0;
      for (std::size_t k = 0; k < rows.size(); ++k) {
        left[k] = data.feature(rows[k], j) <= cut;
        nl += left[k];
      }
      if (nl < std::max(side, 1.0) || m - nl < std::max(side, 1.0)) continue;
      const double g = oracle_gain(data, rows, left, parent, p);
      if (std::isnan(best) || g > best) best = g;
    }
  }
  return best;
}

}  // namespace uplift::testing
