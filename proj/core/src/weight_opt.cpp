#include "disdf/weight_opt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>

#include "disdf/errors.hpp"

namespace disdf {

Objective::Objective(const PairStats& stats, ObjectiveParams params)
    : stats_(&stats), params_(params) {
  if (!std::isfinite(params_.tau)) fail(ErrorCode::kInvalidArgument, "tau must be finite");
  if (!std::isfinite(params_.lambda) || params_.lambda < 0.0) {
    fail(ErrorCode::kInvalidArgument, "lambda must be finite and >= 0");
  }
  if (stats.abs_diff.rows() != stats.pairs.size() ||
      (stats.num_pairs() > 0 && stats.abs_diff.cols() != stats.num_trees())) {
    fail(ErrorCode::kDimensionMismatch, "pair stats shapes are inconsistent");
  }
  for (std::size_t p = 0; p < stats.pairs.size(); ++p) {
    if (stats.pairs[p].different_class) {
      hinge_rows_.push_back(static_cast<std::uint32_t>(p));
    }
  }
}

void Objective::check_length(std::span<const double> w) const {
  if (w.size() != dim()) {
    fail(ErrorCode::kDimensionMismatch,
         "weight length " + std::to_string(w.size()) + " != tree count " +
             std::to_string(dim()));
  }
}

std::vector<double> Objective::margins(std::span<const double> w) const {
  check_length(w);
  std::vector<double> d(hinge_rows_.size());
  for (std::size_t k = 0; k < hinge_rows_.size(); ++k) {
    const auto q = stats_->abs_diff.row(hinge_rows_[k]);
    d[k] = std::inner_product(q.begin(), q.end(), w.begin(), 0.0);
  }
  return d;
}

double Objective::value_from_margins(std::span<const double> w,
                                     std::span<const double> margins) const {
  double j = 0.0;
  const auto& pi = stats_->pi;
  for (std::size_t t = 0; t < w.size(); ++t) j += (pi[t] + params_.lambda) * w[t] * w[t];
  for (double d : margins) {
    const double slack = params_.tau - d;
    if (slack > 0.0) j += slack * slack;
  }
  return j;
}

void Objective::gradient_from_margins(std::span<const double> w,
                                      std::span<const double> margins,
                                      std::span<double> grad) const {
  const auto& pi = stats_->pi;
  const std::size_t T = w.size();
  for (std::size_t t = 0; t < T; ++t) grad[t] = 2.0 * w[t] * (params_.lambda + pi[t]);
  for (std::size_t k = 0; k < hinge_rows_.size(); ++k) {
    const double slack = params_.tau - margins[k];
    if (slack <= 0.0) continue;
    const double scale = 2.0 * slack;
    const double* q = stats_->abs_diff.row(hinge_rows_[k]).data();
    for (std::size_t t = 0; t < T; ++t) grad[t] -= scale * q[t];
  }
}

void Objective::blend_margins_toward_vertex(std::span<double> margins,
                                            std::size_t t, double step) const {
  for (std::size_t k = 0; k < hinge_rows_.size(); ++k) {
    margins[k] = (1.0 - step) * margins[k] + step * stats_->abs_diff(hinge_rows_[k], t);
  }
}

double Objective::value(std::span<const double> w) const {
  return value_from_margins(w, margins(w));
}

std::vector<double> Objective::gradient(std::span<const double> w) const {
  std::vector<double> g(w.size());
  gradient_from_margins(w, margins(w), g);
  return g;
}

double objective(const Objective& objective, std::span<const double> w) {
  return objective.value(w);
}

std::vector<double> gradient(const Objective& objective, std::span<const double> w) {
  return objective.gradient(w);
}

std::size_t lmo_index(std::span<const double> grad) {
  if (grad.empty()) fail(ErrorCode::kInvalidArgument, "lmo: empty gradient");
  std::size_t best = 0;
  for (std::size_t t = 0; t < grad.size(); ++t) {
    if (std::isnan(grad[t])) fail(ErrorCode::kInvalidArgument, "lmo: NaN in gradient");
    if (grad[t] < grad[best]) best = t;
  }
  return best;
}

WeightVector lmo_vertex(std::span<const double> grad) {
  return WeightVector::vertex(grad.size(), lmo_index(grad));
}

FrankWolfeResult frank_wolfe(const Objective& objective,
                             const FrankWolfeOptions& options) {
  const std::size_t T = objective.dim();
  if (T == 0) fail(ErrorCode::kInvalidArgument, "frank_wolfe: no trees");
  if (options.iterations < 1) fail(ErrorCode::kInvalidArgument, "frank_wolfe: S must be >= 1");

  std::vector<double> w;
  if (options.initial) {
    if (options.initial->size() != T) {
      fail(ErrorCode::kDimensionMismatch, "frank_wolfe: initial point has wrong length");
    }
    w.assign(options.initial->values().begin(), options.initial->values().end());
  } else {
    w.assign(T, 1.0 / static_cast<double>(T));
  }

  std::vector<double> margins = objective.margins(w);
  std::vector<double> grad(T);
  std::vector<double> best = w;
  double best_value = objective.value_from_margins(w, margins);

  auto duality_gap = [&](std::size_t vertex) {
    double gap = -grad[vertex];
    for (std::size_t t = 0; t < T; ++t) gap += w[t] * grad[t];
    return gap;
  };

  for (std::size_t s = 0; s < options.iterations; ++s) {
    objective.gradient_from_margins(w, margins, grad);
    const std::size_t vertex = lmo_index(grad);
    const double value = objective.value_from_margins(w, margins);
    if (value < best_value) {
      best_value = value;
      best = w;
    }
    if (options.observer) options.observer({s, w, value, duality_gap(vertex)});

    const double step = 2.0 / (static_cast<double>(s) + 2.0);
    for (double& v : w) v *= 1.0 - step;
    w[vertex] += step;
    objective.blend_margins_toward_vertex(margins, vertex, step);

    if (options.renormalize_every != 0 && (s + 1) % options.renormalize_every == 0) {
      for (double& v : w) v = std::max(v, 0.0);
      const double sum = std::accumulate(w.begin(), w.end(), 0.0);
      for (double& v : w) v /= sum;
      margins = objective.margins(w);
    }
  }

  objective.gradient_from_margins(w, margins, grad);
  FrankWolfeResult result;
  result.gap = duality_gap(lmo_index(grad));
  result.objective = objective.value_from_margins(w, margins);
  if (result.objective < best_value) {
    best_value = result.objective;
    best = w;
  }
  if (options.observer) {
    options.observer({options.iterations, w, result.objective, result.gap});
  }
  result.weights = WeightVector(std::move(w));
  result.best_weights = WeightVector(std::move(best));
  result.best_objective = best_value;
  return result;
}

std::vector<double> project_to_simplex(std::span<const double> v) {
  if (v.empty()) fail(ErrorCode::kInvalidArgument, "cannot project an empty vector");
  std::vector<double> u(v.begin(), v.end());
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumsum = 0.0;
  double theta = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    cumsum += u[k];
    const double candidate = (cumsum - 1.0) / static_cast<double>(k + 1);
    if (u[k] - candidate > 0.0) theta = candidate;
  }
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::max(v[i] - theta, 0.0);
  return out;
}

WeightVector reference_solve(const Objective& objective, double tol,
                             std::size_t max_iterations) {
  const std::size_t T = objective.dim();
  if (T == 0 || T > kReferenceSolveMaxDim) {
    fail(ErrorCode::kInvalidArgument,
         "reference_solve supports 1 <= T <= " + std::to_string(kReferenceSolveMaxDim));
  }
  if (!(tol > 0.0)) fail(ErrorCode::kInvalidArgument, "reference_solve: tol must be > 0");

  std::vector<double> w(T, 1.0 / static_cast<double>(T));
  double step = 1.0;
  double measure = 0.0;
  std::vector<double> trial(T);
  for (std::size_t it = 0; it < max_iterations; ++it) {
    const std::vector<double> g = objective.gradient(w);

    // First-order optimality: fixed point of the unit-step projection.
    std::vector<double> probe(T);
    for (std::size_t t = 0; t < T; ++t) probe[t] = w[t] - g[t];
    probe = project_to_simplex(probe);
    measure = 0.0;
    for (std::size_t t = 0; t < T; ++t) measure = std::max(measure, std::abs(probe[t] - w[t]));
    if (measure <= tol) return WeightVector(project_to_simplex(w));

    // Backtracking on the local Lipschitz estimate of the gradient, which
    // stays reliable where function differences drop below rounding.
    while (true) {
      for (std::size_t t = 0; t < T; ++t) trial[t] = w[t] - step * g[t];
      trial = project_to_simplex(trial);
      const std::vector<double> g_trial = objective.gradient(trial);
      double sq = 0.0;
      double grad_sq = 0.0;
      for (std::size_t t = 0; t < T; ++t) {
        const double d = trial[t] - w[t];
        const double dg = g_trial[t] - g[t];
        sq += d * d;
        grad_sq += dg * dg;
      }
      if (step * step * grad_sq <= sq || step < 1e-18) {
        w = trial;
        break;
      }
      step *= 0.5;
    }
    step *= 2.0;
  }
  std::ostringstream msg;
  msg << "reference_solve did not converge in " << max_iterations
      << " iterations (last optimality measure " << measure << ")";
  fail(ErrorCode::kNonConvergence, msg.str());
}

}  // namespace disdf
