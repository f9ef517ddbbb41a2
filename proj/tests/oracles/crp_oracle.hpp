// Case-by-case evaluation of the coupled CRP conditional, written against a plain
// count matrix so it shares nothing with the library's table type.
#pragma once

#include <vector>

namespace oracle {

struct CaseMasses {
  std::vector<std::vector<double>> existing;  // [c][d]
  std::vector<double> newMeanExistingCov;      // [d]
  std::vector<double> existingMeanNewCov;      // [c]
  double bothNew = 0.0;
};

inline CaseMasses coupledCrp(const std::vector<std::vector<long>>& n, double alpha, double w, double w1, double w2) {
  CaseMasses out;
  const std::size_t k1 = n.size(), k2 = k1 ? n[0].size() : 0;
  std::vector<double> row(k1, 0.0), col(k2, 0.0);
  double total = 0.0;
  for (std::size_t c = 0; c < k1; ++c)
    for (std::size_t d = 0; d < k2; ++d) {
      row[c] += n[c][d];
      col[d] += n[c][d];
      total += n[c][d];
    }
  const double z = total * (total + alpha);
  out.existing.assign(k1, std::vector<double>(k2, 0.0));
  for (std::size_t c = 0; c < k1; ++c)
    for (std::size_t d = 0; d < k2; ++d) out.existing[c][d] = ((1 - w) * row[c] * col[d] + w * n[c][d] * total) / z;
  for (std::size_t d = 0; d < k2; ++d) out.newMeanExistingCov.push_back(w1 * alpha * col[d] / z);
  for (std::size_t c = 0; c < k1; ++c) out.existingMeanNewCov.push_back(w2 * alpha * row[c] / z);
  out.bothNew = w * alpha / (total + alpha);
  return out;
}

}  // namespace oracle
