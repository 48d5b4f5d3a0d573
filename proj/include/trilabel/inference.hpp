#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "trilabel/graph.hpp"
#include "trilabel/label_matrix.hpp"
#include "trilabel/parameters.hpp"
#include "trilabel/prior.hpp"
#include "trilabel/recovery.hpp"

namespace trilabel {

/// P(y, lambda) = prod_C mu_C / prod_S mu_S^(d(S)-1), accumulated in log
/// space. Returns 0 when a clique factor is 0, and also when a separator
/// factor is 0 (setting *zero_separator so callers can report it).
double joint_probability(const LabelModelParameters& mu, std::span<const int> y,
                         std::span<const Vote> votes, bool* zero_separator = nullptr);

/// Precomputed log tables for repeated posterior evaluation.
class LabelModel {
 public:
  static constexpr int kMaxTasks = 20;

  explicit LabelModel(const LabelModelParameters& mu);

  int tasks() const noexcept { return tasks_; }
  int sources() const noexcept { return sources_; }

  // Posterior over all 2^D task configurations (bit d set means Y_d = -1).
  // Throws AllZeroLikelihood when every configuration has zero joint mass.
  std::vector<double> posterior(std::span<const Vote> votes) const;

  // P(Y_d = 1 | votes) for every task, written into `out`.
  void marginals(std::span<const Vote> votes, std::span<double> out) const;

 private:
  struct Factor {
    std::vector<int> tasks;
    std::vector<int> sources;
    std::vector<double> log_probs;  // -inf for zero entries
    double exponent;                // +1 for cliques, -(d-1) for separators
  };

  int tasks_;
  int sources_;
  std::vector<Factor> factors_;
};

/// n x D matrix of P(Y_d = 1 | row).
struct PosteriorLabels {
  std::size_t rows = 0;
  int tasks = 0;
  std::vector<double> p;

  double operator()(std::size_t r, int d) const { return p[r * tasks + d]; }
};

/// Full posterior over task configurations for one vote row.
std::vector<double> posterior(const LabelModelParameters& mu, std::span<const Vote> votes);

/// Row-wise posterior marginals; rows are split across `threads` workers.
PosteriorLabels predict_proba(const LabelMatrix& labels, const LabelModelParameters& mu,
                              unsigned threads = 1);

/// Posterior marginals that ignore the votes: P(Y_d = 1) under the prior.
std::vector<double> prior_marginals(const ClassPrior& prior);

/// Multiclass labels: 0 abstains, 1..k name a class.
struct MulticlassLabels {
  std::size_t rows = 0;
  std::size_t sources = 0;
  int classes = 0;
  std::vector<int> votes;

  int operator()(std::size_t r, std::size_t i) const { return votes[r * sources + i]; }
};

/// Binary reduction for one class: votes for the class become +1, votes for
/// any other class -1, abstains stay 0.
LabelMatrix one_vs_all_reduction(const MulticlassLabels& labels, int cls);

struct OneVsAllResult {
  std::vector<FitResult> models;  // one per class (a single model when k = 2)
  std::size_t rows = 0;
  int classes = 0;
  std::vector<double> probs;      // rows x classes, each row sums to 1

  double operator()(std::size_t r, int cls) const { return probs[r * classes + (cls - 1)]; }
};

/// Fits one binary model per class on a single-task graph and normalizes the
/// per-class positive posteriors across classes. `class_priors[c-1]` is
/// P(class c). With k = 2 one model is fit and its complement used.
OneVsAllResult one_vs_all(const MulticlassLabels& labels, const DependencyGraph& g,
                          const std::vector<double>& class_priors, const RecoveryConfig& cfg = {},
                          unsigned threads = 1);

}  // namespace trilabel
