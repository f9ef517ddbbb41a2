#pragma once

#include <array>
#include <functional>
#include <span>
#include <vector>

#include "m3mix/gaussian.hpp"

namespace m3mix {

// exp(-sum_d logLik_d / sum_d N_d). Throws std::invalid_argument on empty input,
// length mismatch or a non-positive document length.
double perplexity(std::span<const double> logLikelihoods, std::span<const std::size_t> lengths);

// Mutual information over sqrt(H(A) H(B)). Two single-cluster labelings score 1;
// a single-cluster labeling against a multi-cluster one scores 0.
double nmi(std::span<const int> labelsA, std::span<const int> labelsB);

struct CoClusterMatrix {
  Matrix frequency;                // point-by-point, rows/cols in `order`
  std::vector<std::size_t> order;  // original indices sorted by ground-truth label (stable)
};

// Fraction of runs in which each pair of points shares a cluster.
CoClusterMatrix coClusterMatrix(std::span<const std::vector<int>> runs, std::span<const int> groundTruth);

struct DensityGrid {
  std::size_t dims = 1;
  std::array<std::vector<double>, 2> axes;  // axes[1] empty for 1-D
  std::vector<double> values;               // row-major: index = ix * ny + iy

  double at(std::size_t ix, std::size_t iy = 0) const {
    return values[ix * (dims == 2 ? axes[1].size() : 1) + iy];
  }
  // Riemann sum over the grid cells.
  double integral() const;
  // Cells strictly greater than all of their (up to 8) neighbours.
  std::size_t countPeaks() const;
  std::vector<double> argmax() const;
};

struct GridBounds {
  std::vector<double> lower;
  std::vector<double> upper;
};

// Evaluates `density` on a regular grid with `resolution` points per axis
// (endpoints included). Throws std::invalid_argument for resolution < 2 or
// data dimension other than 1 or 2.
DensityGrid densityGrid(const std::function<double(const Vector&)>& density, const GridBounds& bounds,
                        std::size_t resolution);

}  // namespace m3mix
