#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace m3mix {

// Memberships of one data point, one per dimension (0-based component indices).
struct Assignment2D {
  std::size_t z1 = 0;
  std::size_t z2 = 0;
  friend bool operator==(const Assignment2D&, const Assignment2D&) = default;
};

// Coupling weights (omega, omega1, omega2) of the joint CRP conditional.
// omega = 1 ties the two dimensions together; omega = 0 decouples them.
class ShareWeights {
 public:
  // Throws std::invalid_argument unless each weight is in [0,1] and they sum to 1 within 1e-12.
  ShareWeights(double omega, double omega1, double omega2);

  static ShareWeights coupled() { return {1.0, 0.0, 0.0}; }

  double omega() const noexcept { return omega_; }
  double omega1() const noexcept { return omega1_; }
  double omega2() const noexcept { return omega2_; }

 private:
  double omega_;
  double omega1_;
  double omega2_;
};

// Dirichlet-process concentration parameter, strictly positive.
class Concentration {
 public:
  explicit Concentration(double alpha);
  double value() const noexcept { return alpha_; }

 private:
  double alpha_;
};

// Result of a decrement: which row/column (if any) emptied and was removed.
// Indices above a removed slot shift down by one.
struct Compaction {
  std::optional<std::size_t> removedRow;
  std::optional<std::size_t> removedCol;

  std::size_t remapRow(std::size_t c) const noexcept {
    return removedRow && c > *removedRow ? c - 1 : c;
  }
  std::size_t remapCol(std::size_t d) const noexcept {
    return removedCol && d > *removedCol ? d - 1 : d;
  }
};

// Dense K1 x K2 co-occurrence table n_cd with cached marginals and total.
//
// Rows (dimension-1 components) are always compacted when their marginal reaches
// zero. Columns are compacted too unless the table was built with a fixed column
// count, which is how the finite side of the hybrid model keeps its K2 components.
class JointCounts {
 public:
  JointCounts() = default;
  static JointCounts withFixedColumns(std::size_t k2);

  std::size_t rows() const noexcept { return rowSums_.size(); }
  std::size_t cols() const noexcept { return colSums_.size(); }
  std::int64_t total() const noexcept { return total_; }
  bool fixedColumns() const noexcept { return fixedCols_; }

  std::int64_t at(std::size_t c, std::size_t d) const;
  std::int64_t rowMarginal(std::size_t c) const { return rowSums_.at(c); }
  std::int64_t colMarginal(std::size_t d) const { return colSums_.at(d); }
  std::span<const std::int64_t> rowMarginals() const noexcept { return rowSums_; }
  std::span<const std::int64_t> colMarginals() const noexcept { return colSums_; }

  // c may equal rows() and d may equal cols() to open a new component.
  // Throws std::out_of_range for anything further out.
  void increment(std::size_t c, std::size_t d);

  // Throws std::logic_error if the cell is zero.
  Compaction decrement(std::size_t c, std::size_t d);

  // True when marginals and total agree with the cell values.
  bool consistent() const;

  static JointCounts fromAssignments(std::span<const Assignment2D> assignments);
  static JointCounts fromAssignments(std::span<const Assignment2D> assignments, std::size_t fixedK2);

  friend bool operator==(const JointCounts&, const JointCounts&) = default;

 private:
  std::vector<std::vector<std::int64_t>> cells_;
  std::vector<std::int64_t> rowSums_;
  std::vector<std::int64_t> colSums_;
  std::int64_t total_ = 0;
  bool fixedCols_ = false;
};

}  // namespace m3mix
