#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "frugal/linalg.hpp"

namespace frugal {

// Typed observational table: D covariate columns, a binary treatment and a
// real outcome. Produced by CSV ingestion, consumed by the frugal fitter.
struct DataTable {
  std::vector<std::string> covariate_names;
  Matrix z;                    // n x D
  std::vector<int> x;          // 0/1
  std::vector<double> y;
  std::vector<bool> discrete;  // per covariate; all values in {0,1}

  std::size_t n() const { return x.size(); }
  std::size_t dim() const { return z.cols(); }
};

}  // namespace frugal
