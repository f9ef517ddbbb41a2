#include "m3mix/core_types.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace m3mix {

ShareWeights::ShareWeights(double omega, double omega1, double omega2)
    : omega_(omega), omega1_(omega1), omega2_(omega2) {
  for (double w : {omega, omega1, omega2}) {
    if (!(w >= 0.0 && w <= 1.0))
      throw std::invalid_argument("share weights must each lie in [0,1]");
  }
  if (std::abs(omega + omega1 + omega2 - 1.0) > 1e-12)
    throw std::invalid_argument("share weights must satisfy omega + omega1 + omega2 = 1 (got " +
                                std::to_string(omega + omega1 + omega2) + ")");
}

Concentration::Concentration(double alpha) : alpha_(alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha))
    throw std::invalid_argument("concentration alpha must be positive");
}

JointCounts JointCounts::withFixedColumns(std::size_t k2) {
  JointCounts t;
  t.fixedCols_ = true;
  t.colSums_.assign(k2, 0);
  return t;
}

std::int64_t JointCounts::at(std::size_t c, std::size_t d) const {
  if (c >= rows() || d >= cols()) throw std::out_of_range("JointCounts::at index out of range");
  return cells_[c][d];
}

void JointCounts::increment(std::size_t c, std::size_t d) {
  if (c > rows()) throw std::out_of_range("row index more than one past the end");
  if (fixedCols_ ? d >= cols() : d > cols())
    throw std::out_of_range("column index out of range");
  if (d == cols()) {
    for (auto& row : cells_) row.push_back(0);
    colSums_.push_back(0);
  }
  if (c == rows()) {
    cells_.emplace_back(cols(), 0);
    rowSums_.push_back(0);
  }
  ++cells_[c][d];
  ++rowSums_[c];
  ++colSums_[d];
  ++total_;
}

Compaction JointCounts::decrement(std::size_t c, std::size_t d) {
  if (c >= rows() || d >= cols()) throw std::out_of_range("decrement index out of range");
  if (cells_[c][d] == 0) throw std::logic_error("decrement of an empty cell");
  --cells_[c][d];
  --rowSums_[c];
  --colSums_[d];
  --total_;

  Compaction out;
  if (rowSums_[c] == 0) {
    cells_.erase(cells_.begin() + static_cast<std::ptrdiff_t>(c));
    rowSums_.erase(rowSums_.begin() + static_cast<std::ptrdiff_t>(c));
    out.removedRow = c;
  }
  if (!fixedCols_ && colSums_[d] == 0) {
    for (auto& row : cells_) row.erase(row.begin() + static_cast<std::ptrdiff_t>(d));
    colSums_.erase(colSums_.begin() + static_cast<std::ptrdiff_t>(d));
    out.removedCol = d;
  }
  return out;
}

bool JointCounts::consistent() const {
  std::int64_t grand = 0;
  std::vector<std::int64_t> cs(cols(), 0);
  for (std::size_t c = 0; c < rows(); ++c) {
    if (cells_[c].size() != cols()) return false;
    std::int64_t r = 0;
    for (std::size_t d = 0; d < cols(); ++d) {
      if (cells_[c][d] < 0) return false;
      r += cells_[c][d];
      cs[d] += cells_[c][d];
    }
    if (r != rowSums_[c]) return false;
    grand += r;
  }
  return cs == colSums_ && grand == total_;
}

JointCounts JointCounts::fromAssignments(std::span<const Assignment2D> assignments) {
  JointCounts t;
  std::size_t k1 = 0, k2 = 0;
  for (const auto& a : assignments) {
    k1 = std::max(k1, a.z1 + 1);
    k2 = std::max(k2, a.z2 + 1);
  }
  t.cells_.assign(k1, std::vector<std::int64_t>(k2, 0));
  t.rowSums_.assign(k1, 0);
  t.colSums_.assign(k2, 0);
  for (const auto& a : assignments) {
    ++t.cells_[a.z1][a.z2];
    ++t.rowSums_[a.z1];
    ++t.colSums_[a.z2];
    ++t.total_;
  }
  return t;
}

JointCounts JointCounts::fromAssignments(std::span<const Assignment2D> assignments,
                                         std::size_t fixedK2) {
  JointCounts t = withFixedColumns(fixedK2);
  std::size_t k1 = 0;
  for (const auto& a : assignments) {
    if (a.z2 >= fixedK2) throw std::out_of_range("assignment z2 beyond fixed column count");
    k1 = std::max(k1, a.z1 + 1);
  }
  t.cells_.assign(k1, std::vector<std::int64_t>(fixedK2, 0));
  t.rowSums_.assign(k1, 0);
  for (const auto& a : assignments) {
    ++t.cells_[a.z1][a.z2];
    ++t.rowSums_[a.z1];
    ++t.colSums_[a.z2];
    ++t.total_;
  }
  return t;
}

}  // namespace m3mix
