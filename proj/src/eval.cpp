#include "m3mix/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

namespace m3mix {

double perplexity(std::span<const double> logLikelihoods, std::span<const std::size_t> lengths) {
  if (logLikelihoods.empty()) throw std::invalid_argument("perplexity: no documents");
  if (logLikelihoods.size() != lengths.size()) throw std::invalid_argument("perplexity: length mismatch");
  double ll = 0.0, n = 0.0;
  for (std::size_t d = 0; d < lengths.size(); ++d) {
    if (lengths[d] == 0) throw std::invalid_argument("perplexity: document lengths must be positive");
    ll += logLikelihoods[d];
    n += static_cast<double>(lengths[d]);
  }
  return std::exp(-ll / n);
}

namespace {

double entropy(const std::map<int, double>& counts, double n) {
  double h = 0.0;
  for (const auto& [k, c] : counts) {
    const double p = c / n;
    h -= p * std::log(p);
  }
  return h;
}

}  // namespace

double nmi(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw std::invalid_argument("nmi: labelings differ in length");
  if (a.empty()) throw std::invalid_argument("nmi: empty labelings");
  std::map<int, double> ca, cb;
  std::map<std::pair<int, int>, double> joint;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ca[a[i]] += 1.0;
    cb[b[i]] += 1.0;
    joint[{a[i], b[i]}] += 1.0;
  }
  if (ca.size() == 1 && cb.size() == 1) return 1.0;
  if (ca.size() == 1 || cb.size() == 1) return 0.0;
  const double n = static_cast<double>(a.size());
  double mi = 0.0;
  for (const auto& [key, c] : joint) {
    const double pab = c / n;
    mi += pab * std::log(pab * n * n / (ca[key.first] * cb[key.second]));
  }
  const double value = mi / std::sqrt(entropy(ca, n) * entropy(cb, n));
  return std::clamp(value, 0.0, 1.0);
}

CoClusterMatrix coClusterMatrix(std::span<const std::vector<int>> runs, std::span<const int> groundTruth) {
  const std::size_t n = groundTruth.size();
  for (const auto& r : runs)
    if (r.size() != n) throw std::invalid_argument("coClusterMatrix: labeling length mismatch");
  CoClusterMatrix out;
  out.order.resize(n);
  std::iota(out.order.begin(), out.order.end(), std::size_t{0});
  std::stable_sort(out.order.begin(), out.order.end(),
                   [&](std::size_t x, std::size_t y) { return groundTruth[x] < groundTruth[y]; });
  const auto en = static_cast<Eigen::Index>(n);
  out.frequency = Matrix::Zero(en, en);
  if (runs.empty()) {
    out.frequency.diagonal().setOnes();
    return out;
  }
  for (const auto& r : runs)
    for (Eigen::Index i = 0; i < en; ++i)
      for (Eigen::Index j = 0; j < en; ++j)
        if (r[out.order[static_cast<std::size_t>(i)]] == r[out.order[static_cast<std::size_t>(j)]]) out.frequency(i, j) += 1.0;
  out.frequency /= static_cast<double>(runs.size());
  return out;
}

double DensityGrid::integral() const {
  auto step = [](const std::vector<double>& ax) { return (ax.back() - ax.front()) / static_cast<double>(ax.size() - 1); };
  double cell = step(axes[0]);
  if (dims == 2) cell *= step(axes[1]);
  return std::accumulate(values.begin(), values.end(), 0.0) * cell;
}

std::size_t DensityGrid::countPeaks() const {
  const std::size_t nx = axes[0].size();
  const std::size_t ny = dims == 2 ? axes[1].size() : 1;
  std::size_t peaks = 0;
  for (std::size_t ix = 0; ix < nx; ++ix)
    for (std::size_t iy = 0; iy < ny; ++iy) {
      const double v = at(ix, iy);
      bool peak = true;
      for (int dx = -1; dx <= 1 && peak; ++dx)
        for (int dy = -1; dy <= 1 && peak; ++dy) {
          if (dx == 0 && dy == 0) continue;
          const auto jx = static_cast<std::ptrdiff_t>(ix) + dx;
          const auto jy = static_cast<std::ptrdiff_t>(iy) + dy;
          if (jx < 0 || jy < 0 || jx >= static_cast<std::ptrdiff_t>(nx) || jy >= static_cast<std::ptrdiff_t>(ny)) continue;
          if (at(static_cast<std::size_t>(jx), static_cast<std::size_t>(jy)) >= v) peak = false;
        }
      if (peak) ++peaks;
    }
  return peaks;
}

std::vector<double> DensityGrid::argmax() const {
  const auto it = std::max_element(values.begin(), values.end());
  const auto idx = static_cast<std::size_t>(it - values.begin());
  if (dims == 1) return {axes[0][idx]};
  const std::size_t ny = axes[1].size();
  return {axes[0][idx / ny], axes[1][idx % ny]};
}

DensityGrid densityGrid(const std::function<double(const Vector&)>& density, const GridBounds& bounds,
                        std::size_t resolution) {
  const std::size_t dims = bounds.lower.size();
  if (dims != 1 && dims != 2) throw std::invalid_argument("densityGrid: only 1-D and 2-D grids are supported");
  if (bounds.upper.size() != dims) throw std::invalid_argument("densityGrid: bounds dimension mismatch");
  if (resolution < 2) throw std::invalid_argument("densityGrid: resolution must be at least 2 per axis");
  DensityGrid g;
  g.dims = dims;
  for (std::size_t k = 0; k < dims; ++k) {
    if (!(bounds.upper[k] > bounds.lower[k])) throw std::invalid_argument("densityGrid: empty bounds");
    g.axes[k].resize(resolution);
    for (std::size_t i = 0; i < resolution; ++i)
      g.axes[k][i] = bounds.lower[k] + (bounds.upper[k] - bounds.lower[k]) * static_cast<double>(i) /
                                           static_cast<double>(resolution - 1);
  }
  Vector x(static_cast<Eigen::Index>(dims));
  if (dims == 1) {
    for (double v : g.axes[0]) {
      x[0] = v;
      g.values.push_back(density(x));
    }
  } else {
    for (double u : g.axes[0])
      for (double v : g.axes[1]) {
        x[0] = u;
        x[1] = v;
        g.values.push_back(density(x));
      }
  }
  return g;
}

}  // namespace m3mix
