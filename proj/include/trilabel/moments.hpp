#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "trilabel/augment.hpp"
#include "trilabel/graph.hpp"
#include "trilabel/prior.hpp"

namespace trilabel {

/// Observable moments of the augmented matrix plus the prior's task moments.
struct MomentEstimates {
  std::size_t sources = 0;
  double weight = 0.0;    // total row weight (n for unweighted data)
  std::size_t rows = 0;   // rows with positive weight
  Eigen::MatrixXd second; // 2m x 2m, E[v_a v_b]
  Eigen::VectorXd first;  // E[v_a]
  std::vector<std::array<double, 3>> vote_probs;  // per source P(+1), P(0), P(-1); may be empty
  std::vector<double> task_means;                 // E[Y_d]
  std::map<Edge, double> task_pair_means;         // E[Y_d Y_e] for task edges

  double abstain_rate(int source) const { return vote_probs[source][1]; }
};

/// Which statistics beyond the moment matrix a graph needs: joint vote tables
/// for dependent source pairs and moments restricted to rows where a source
/// abstains.
struct StatsLayout {
  std::vector<Edge> pairs;
  std::vector<int> conditioning;

  static StatsLayout for_graph(const DependencyGraph& g);
  bool operator==(const StatsLayout&) const = default;
};

/// Everything recovery consumes, finalized from running sums.
struct ObservedStatistics {
  MomentEstimates overall;
  std::vector<Edge> pairs;
  std::vector<std::array<double, 9>> pair_probs;  // [code_i * 3 + code_j], codes in (+1,0,-1) order
  std::vector<int> conditioning;
  std::vector<MomentEstimates> given_abstain;     // moments on rows where the source abstains

  const std::array<double, 9>& pair(int i, int j) const;  // requires i < j
  const MomentEstimates* conditioned_on(int source) const;
};

/// Running sums of augmented rows. Unit-weight rows keep every sum an exact
/// integer, so adding and removing rows in any order reproduces the batch sums.
class SufficientStats {
 public:
  SufficientStats() = default;
  SufficientStats(std::size_t sources, StatsLayout layout);

  void add(std::span<const std::int8_t> row, double weight = 1.0);
  void remove(std::span<const std::int8_t> row, double weight = 1.0);
  void add_matrix(const AugmentedLabelMatrix& a, std::span<const double> weights = {});

  std::size_t sources() const noexcept { return sources_; }
  double weight() const noexcept { return weight_; }
  const StatsLayout& layout() const noexcept { return layout_; }

  ObservedStatistics finalize(const ClassPrior& prior, const DependencyGraph& g) const;

  bool operator==(const SufficientStats& other) const;

 private:
  struct Restricted {
    double weight = 0.0;
    long long rows = 0;
    Eigen::MatrixXd cross;  // lower triangle only
    Eigen::VectorXd first;
  };

  void update(std::span<const std::int8_t> row, double weight, int direction);

  std::size_t sources_ = 0;
  StatsLayout layout_;
  double weight_ = 0.0;
  long long rows_ = 0;
  Eigen::MatrixXd cross_;  // lower triangle only
  Eigen::VectorXd first_;
  std::vector<std::array<double, 3>> votes_;
  std::vector<std::array<double, 9>> pair_votes_;
  std::vector<Restricted> restricted_;
};

/// M_ab = (1/n) sum_t A_ta A_tb, optionally with per-row weights (which are
/// normalized by their sum).
MomentEstimates estimate_moments(const AugmentedLabelMatrix& a, const ClassPrior& prior,
                                 std::span<const double> weights = {});

struct Triplet {
  int i, j, k;  // source indices; accuracy of i is solved with helpers j < k
};

/// Valid triplets per source, over the first column of each source's pair.
struct TripletPlan {
  std::vector<std::vector<Triplet>> per_source;
  std::vector<int> without_triplets;  // sources outside the solvable set

  std::size_t solvable() const { return per_source.size() - without_triplets.size(); }
};

/// All triples of same-task sources that are pairwise conditionally
/// independent, capped per source in lexicographic order. Throws
/// InsufficientIndependence when no source is solvable and the ratio
/// fallback is disabled.
TripletPlan enumerate_triplets(const AugmentedGraph& g, std::size_t cap = 500,
                               bool fallback_enabled = false);

enum class Aggregation { Mean, Median };

struct AccuracyOptions {
  Aggregation method = Aggregation::Mean;
  double eps_den = 1e-4;
  double eps_acc = 1e-3;
  double eps_prior = 1e-2;
  bool ratio_fallback = false;
  bool isolate_lowest = true;
  bool greedy = false;                  // single-pass compatibility mode
  std::optional<std::size_t> single_triplet;  // use only this triplet per source
  std::size_t n_min = 50;               // rows needed for abstain-conditioned moments
};

/// Magnitudes from one triplet; throws DegenerateTriplet when a denominator
/// is below eps_den. Results are clamped to [eps_acc, 1].
std::array<double, 3> solve_triplet(const Eigen::MatrixXd& second, const Triplet& t,
                                    double eps_den = 1e-4, double eps_acc = 1e-3);

struct Magnitudes {
  std::vector<double> value;                   // |a_i|, or the signed ratio value
  std::vector<int> triplets_used;
  std::vector<std::optional<double>> signed_;  // set when the sign is already known
  std::vector<std::string> warnings;
};

Magnitudes aggregate_accuracies(const TripletPlan& plan, const MomentEstimates& m,
                                const std::vector<int>& assignment, const AccuracyOptions& opt);

struct SignStrategy {
  struct Anchor {
    int source;
    int sign;
  };
  std::vector<Anchor> anchors;  // empty means nonnegative-sum

  static SignStrategy nonnegative_sum() { return {}; }
  static SignStrategy anchor(int source, int sign) { return {{{source, sign}}}; }
};

struct Accuracies {
  std::vector<double> by_source;  // a_i = E[v_{first column of i} Y(i)]
  bool sign_tie = false;

  double observed(int column) const {
    return column % 2 == 0 ? by_source[column / 2] : -by_source[column / 2];
  }
};

/// Resolves the two sign patterns per task allowed by the pairwise moments.
Accuracies resolve_signs(const Magnitudes& mags, const MomentEstimates& m, const TripletPlan& plan,
                         const AugmentedGraph& g, const SignStrategy& strategy);

/// a_i = E[v_i] / E[Y(i)]; throws PriorNearZero when |E[Y(i)]| < eps_prior.
double ratio_accuracy(int source, int task, const MomentEstimates& m, double eps_prior = 1e-2);

/// E[lambda_j Y | lambda_i = 0] by re-running the triplet step on the rows
/// where source i abstains. Throws TooFewAbstainRows or NoUsableTriplet.
double conditional_accuracy(int i, int j, const MomentEstimates& restricted,
                            const TripletPlan& plan, const Accuracies& unconditional,
                            const AccuracyOptions& opt);

double conditional_accuracy(int i, int j, const AugmentedLabelMatrix& a, const TripletPlan& plan,
                            const ClassPrior& prior, const Accuracies& unconditional,
                            const AccuracyOptions& opt);

}  // namespace trilabel
