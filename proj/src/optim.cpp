#include "m3mix/optim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>

namespace m3mix::optim {

void LbfgsConfig::validate() const {
  if (memory < 1) throw std::invalid_argument("L-BFGS memory must be at least 1");
  if (!(c1 > 0.0 && c1 < c2 && c2 < 1.0))
    throw std::invalid_argument("L-BFGS requires 0 < c1 < c2 < 1");
  if (!(gradTol >= 0.0)) throw std::invalid_argument("L-BFGS gradTol must be non-negative");
}

const char* toString(LbfgsStatus status) {
  switch (status) {
    case LbfgsStatus::Converged: return "converged";
    case LbfgsStatus::MaxIterations: return "maxIterations";
    case LbfgsStatus::FunctionTolerance: return "functionTolerance";
    case LbfgsStatus::LineSearchFailed: return "lineSearchFailed";
  }
  return "unknown";
}

namespace {

// Relative rounding level of objective values.
constexpr double kFunctionNoise = 1e-12;

struct LinePoint {
  double step = 0.0;
  double f = 0.0;
  double slope = 0.0;
  Vector x;
  Vector g;
};

// Strong-Wolfe bracketing followed by bisection zoom. Returns false when no
// Wolfe point is found within the step budget; `best` then holds the lowest
// sufficient-decrease point seen, if any (best.step > 0).
bool wolfeSearch(const ObjectiveFn& f, const Vector& x, double f0, double slope0, const Vector& dir,
                 double step0, const LbfgsConfig& cfg, LinePoint& out, LinePoint& best) {
  auto eval = [&](double a) {
    LinePoint p;
    p.step = a;
    p.x = x + a * dir;
    p.f = f(p.x, p.g);
    p.slope = std::isfinite(p.f) ? p.g.dot(dir) : std::numeric_limits<double>::quiet_NaN();
    return p;
  };
  // Near a minimum the decrease c1 * a * slope0 falls below the rounding error of f.
  // There the derivative form of the test (Hager-Zhang approximate Wolfe) decides,
  // and f values within `noise` of each other are treated as equal.
  const double noise = kFunctionNoise * std::max(1.0, std::abs(f0));
  auto decreaseHolds = [&](const LinePoint& p) {
    if (!std::isfinite(p.f)) return false;
    if (p.f <= f0 + cfg.c1 * p.step * slope0) return true;
    return p.f <= f0 + noise && p.slope <= (2.0 * cfg.c1 - 1.0) * slope0;
  };
  auto higher = [&](const LinePoint& a, const LinePoint& b) { return a.f > b.f + noise; };
  auto armijoFails = [&](const LinePoint& p) { return !decreaseHolds(p); };
  auto track = [&](const LinePoint& p) {
    if (decreaseHolds(p) && (best.step == 0.0 || p.f < best.f)) best = p;
  };
  auto curvatureHolds = [&](const LinePoint& p) { return std::abs(p.slope) <= -cfg.c2 * slope0; };

  std::size_t budget = cfg.maxLineSearchSteps;
  auto zoom = [&](LinePoint lo, LinePoint hi) {
    while (budget-- > 0) {
      LinePoint mid = eval(0.5 * (lo.step + hi.step));
      track(mid);
      if (armijoFails(mid) || higher(mid, lo)) {
        hi = mid;
      } else {
        if (curvatureHolds(mid)) {
          out = std::move(mid);
          return true;
        }
        if (mid.slope * (hi.step - lo.step) >= 0.0) hi = lo;
        lo = std::move(mid);
      }
    }
    return false;
  };

  LinePoint prev;
  prev.step = 0.0;
  prev.f = f0;
  prev.slope = slope0;
  prev.x = x;
  double a = step0;
  for (std::size_t i = 0; budget > 0; ++i) {
    --budget;
    LinePoint cur = eval(a);
    track(cur);
    if (armijoFails(cur) || (i > 0 && higher(cur, prev))) return zoom(prev, cur);
    if (curvatureHolds(cur)) {
      out = std::move(cur);
      return true;
    }
    if (cur.slope >= 0.0) return zoom(cur, prev);
    prev = std::move(cur);
    a *= 2.0;
  }
  return false;
}

}  // namespace

LbfgsResult lbfgsMinimize(const ObjectiveFn& f, const Vector& x0, const LbfgsConfig& cfg) {
  cfg.validate();
  LbfgsResult res;
  res.x = x0;
  Vector g;
  res.f = f(res.x, g);
  if (!std::isfinite(res.f)) throw std::invalid_argument("L-BFGS: objective not finite at x0");
  res.gradNorm = g.norm();
  res.history.push_back(res.f);

  std::deque<Vector> sHist, yHist;
  std::deque<double> rhoHist;
  std::vector<double> alphaBuf;

  while (true) {
    if (res.gradNorm <= cfg.gradTol) {
      res.status = LbfgsStatus::Converged;
      return res;
    }
    if (res.iters >= cfg.maxIters) {
      res.status = LbfgsStatus::MaxIterations;
      return res;
    }

    // Two-loop recursion.
    Vector q = g;
    const std::size_t k = sHist.size();
    alphaBuf.assign(k, 0.0);
    for (std::size_t j = k; j-- > 0;) {
      alphaBuf[j] = rhoHist[j] * sHist[j].dot(q);
      q -= alphaBuf[j] * yHist[j];
    }
    double gamma = 1.0;
    if (k > 0) gamma = sHist.back().dot(yHist.back()) / yHist.back().squaredNorm();
    Vector dir = gamma * q;
    for (std::size_t j = 0; j < k; ++j) {
      const double beta = rhoHist[j] * yHist[j].dot(dir);
      dir += (alphaBuf[j] - beta) * sHist[j];
    }
    dir = -dir;
    double slope = g.dot(dir);
    if (!(slope < 0.0)) {
      sHist.clear();
      yHist.clear();
      rhoHist.clear();
      dir = -g;
      slope = -g.squaredNorm();
    }
    const double step0 = sHist.empty() ? std::min(cfg.initialStep, 1.0 / std::max(g.norm(), 1e-300)) : cfg.initialStep;

    LinePoint next, best;
    if (!wolfeSearch(f, res.x, res.f, slope, dir, step0, cfg, next, best)) {
      if (best.step > 0.0 && best.f < res.f) {
        res.x = best.x;
        res.f = best.f;
        g = best.g;
        res.gradNorm = g.norm();
        res.history.push_back(res.f);
        ++res.iters;
      }
      res.status = LbfgsStatus::LineSearchFailed;
      return res;
    }

    Vector s = next.x - res.x;
    Vector y = next.g - g;
    const double sy = s.dot(y);
    if (sy > 1e-10 * s.norm() * y.norm()) {
      sHist.push_back(std::move(s));
      yHist.push_back(std::move(y));
      rhoHist.push_back(1.0 / sy);
      if (sHist.size() > cfg.memory) {
        sHist.pop_front();
        yHist.pop_front();
        rhoHist.pop_front();
      }
    }
    const double fPrev = res.f;
    res.x = std::move(next.x);
    res.f = next.f;
    g = std::move(next.g);
    res.gradNorm = g.norm();
    res.history.push_back(res.f);
    ++res.iters;
    if (cfg.fTol > 0.0 && fPrev - res.f <= cfg.fTol * std::max(1.0, std::abs(res.f))) {
      res.status = res.gradNorm <= cfg.gradTol ? LbfgsStatus::Converged : LbfgsStatus::FunctionTolerance;
      return res;
    }
  }
}

double gradCheck(const ObjectiveFn& f, const Vector& x, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("gradCheck: step must be positive");
  Vector g, scratch;
  f(x, g);
  double worst = 0.0;
  Vector probe = x;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    probe[k] = x[k] + h;
    const double up = f(probe, scratch);
    probe[k] = x[k] - h;
    const double down = f(probe, scratch);
    probe[k] = x[k];
    const double numeric = (up - down) / (2.0 * h);
    worst = std::max(worst, std::abs(numeric - g[k]) / std::max(1.0, std::abs(g[k])));
  }
  return worst;
}

PenaltyResult penaltyLoop(const std::function<ObjectiveFn(const Vector& penalties)>& buildObjective,
                          const std::function<Vector(const Vector& x)>& residuals,
                          const Vector& x0, std::size_t numConstraints,
                          const PenaltySchedule& schedule, const LbfgsConfig& inner) {
  if (!(schedule.growth > 1.0)) throw std::invalid_argument("penalty growth must exceed 1");
  if (!(schedule.init > 0.0)) throw std::invalid_argument("initial penalty must be positive");
  if (schedule.maxRounds == 0) throw std::invalid_argument("penalty loop needs at least one round");

  PenaltyResult out;
  out.penalties = Vector::Constant(static_cast<Eigen::Index>(numConstraints), schedule.init);
  Vector x = x0;
  double bestResidual = std::numeric_limits<double>::infinity();
  Vector bestX = x0, bestPenalties = out.penalties;

  for (std::size_t round = 0; round < schedule.maxRounds; ++round) {
    const ObjectiveFn objective = buildObjective(out.penalties);
    LbfgsConfig cfg = inner;
    LbfgsResult r = lbfgsMinimize(objective, x, cfg);
    for (std::size_t attempt = 0; r.status == LbfgsStatus::LineSearchFailed && attempt < schedule.lineSearchRestarts;
         ++attempt) {
      cfg.initialStep *= 0.5;
      r = lbfgsMinimize(objective, r.x, cfg);
    }
    if (r.status == LbfgsStatus::LineSearchFailed) out.lineSearchFailed = true;
    x = r.x;
    out.lastStatus = r.status;
    ++out.rounds;
    const Vector res = residuals(x);
    const double worst = res.size() ? res.cwiseAbs().maxCoeff() : 0.0;
    out.residualHistory.push_back(worst);
    if (worst < bestResidual) {
      bestResidual = worst;
      bestX = x;
      bestPenalties = out.penalties;
    }
    if (worst <= schedule.feasTol) {
      out.x = x;
      out.feasible = true;
      return out;
    }
    if (round + 1 == schedule.maxRounds) break;
    for (Eigen::Index j = 0; j < res.size(); ++j)
      if (std::abs(res[j]) > schedule.feasTol)
        out.penalties[j] = std::min(schedule.cap, out.penalties[j] * schedule.growth);
  }
  out.x = bestX;
  out.penalties = bestPenalties;
  out.feasible = false;
  return out;
}

}  // namespace m3mix::optim
