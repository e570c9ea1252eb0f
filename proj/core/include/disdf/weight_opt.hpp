#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "disdf/forest.hpp"
#include "disdf/pair_stats.hpp"

namespace disdf {

struct ObjectiveParams {
  double tau = 0.5;     // margin for different-class pairs
  double lambda = 0.01; // ||w||^2 regularisation strength
};

// Per-forest contrastive objective over tree weights w on the simplex:
//
//   J(w) = sum_t (pi_t + lambda) w_t^2
//        + sum_{different-class pairs} max(0, tau - <Q_ij, w>)^2
//
// Same-class pairs contribute their squared Euclidean class-vector distance
// <P_ij, w^2> (aggregated in pi); different-class pairs pay a squared hinge
// on their Manhattan distance <Q_ij, w>. The slack variables of the QP form
// are eliminated by the hinge, so J is evaluated directly.
//
// Holds a reference to `stats`, which must outlive the Objective.
class Objective {
 public:
  Objective(const PairStats& stats, ObjectiveParams params);

  std::size_t dim() const noexcept { return stats_->num_trees(); }
  const ObjectiveParams& params() const noexcept { return params_; }
  std::size_t num_hinge_pairs() const noexcept { return hinge_rows_.size(); }

  double value(std::span<const double> w) const;
  std::vector<double> gradient(std::span<const double> w) const;

  // Same quantities given precomputed margins d_p = <Q_p, w> for every
  // different-class pair (in hinge-pair order). Used by the solvers.
  std::vector<double> margins(std::span<const double> w) const;
  double value_from_margins(std::span<const double> w,
                            std::span<const double> margins) const;
  void gradient_from_margins(std::span<const double> w,
                             std::span<const double> margins,
                             std::span<double> grad) const;
  // d_p <- (1 - step) d_p + step * Q_p[t] for every hinge pair.
  void blend_margins_toward_vertex(std::span<double> margins, std::size_t t,
                                   double step) const;

 private:
  void check_length(std::span<const double> w) const;

  const PairStats* stats_;
  ObjectiveParams params_;
  std::vector<std::uint32_t> hinge_rows_;
};

double objective(const Objective& objective, std::span<const double> w);
std::vector<double> gradient(const Objective& objective, std::span<const double> w);

// Linear minimisation over the simplex: the vertex at the smallest gradient
// component (lowest index on ties). Throws on an empty or NaN gradient.
std::size_t lmo_index(std::span<const double> grad);
WeightVector lmo_vertex(std::span<const double> grad);

struct FrankWolfeStep {
  std::size_t iteration;
  std::span<const double> weights;
  double objective;
  double gap;
};

struct FrankWolfeOptions {
  std::size_t iterations = 2000;
  std::optional<WeightVector> initial;  // default: uniform
  std::size_t renormalize_every = 100;
  // Called for every iterate w_0 .. w_S, the last one with its final gap.
  std::function<void(const FrankWolfeStep&)> observer;
};

struct FrankWolfeResult {
  WeightVector weights;  // final iterate w_S
  double gap = 0.0;      // <w_S - g_S, grad J(w_S)>
  double objective = 0.0;
  // Lowest-objective iterate seen, w_0 included.
  WeightVector best_weights;
  double best_objective = 0.0;
};

// Frank-Wolfe with step 2/(s+2) and vertex LMO.
FrankWolfeResult frank_wolfe(const Objective& objective,
                             const FrankWolfeOptions& options = {});

// Euclidean projection onto the unit simplex.
std::vector<double> project_to_simplex(std::span<const double> v);

inline constexpr std::size_t kReferenceSolveMaxDim = 64;

// Projected gradient descent with backtracking, run until
// ||w - proj(w - grad)||_inf <= tol. Intended as a high-precision oracle for
// small T (<= kReferenceSolveMaxDim). Throws Error(kNonConvergence) with the
// last optimality measure if `max_iterations` is exhausted.
WeightVector reference_solve(const Objective& objective, double tol,
                             std::size_t max_iterations = 500000);

}  // namespace disdf
