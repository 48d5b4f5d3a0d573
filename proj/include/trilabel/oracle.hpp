#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <vector>

#include "trilabel/graph.hpp"
#include "trilabel/label_matrix.hpp"
#include "trilabel/moments.hpp"
#include "trilabel/parameters.hpp"
#include "trilabel/prior.hpp"

namespace trilabel {

/// Canonical parameters of the binary Ising model over (Y, v).
///
/// Energy: sum_d task[d] Y_d + sum_(d,e) task_edges Y_d Y_e
///   + sum_i accuracy[i] (v_a - v_b) Y(i) + sum_i abstain[i] v_a v_b
///   + sum_(i,j) dependency (v_a - v_b)(v_a' - v_b'),
/// where (v_a, v_b) is source i's pair. Every term is unchanged when a pair
/// switches between (1,1) and (-1,-1), so the two abstain states always carry
/// equal mass. Sources with can_abstain false give zero mass to those states.
struct CanonicalParameters {
  std::vector<double> task;
  std::map<Edge, double> task_edges;
  std::vector<double> accuracy;
  std::vector<double> abstain;
  std::vector<bool> can_abstain;
  std::map<Edge, double> dependency;

  static CanonicalParameters zeros(const DependencyGraph& g);

  // accuracy in [0.1, 1.0], dependency in [-0.3, 0.3], abstain in [-0.5, 0.5],
  // task and task-edge terms in [-0.3, 0.3].
  static CanonicalParameters random(const DependencyGraph& g, std::uint64_t seed,
                                    bool abstains = true);
};

/// Normalized table over {-1,+1}^(D+2m). Bit d (d < D) set means Y_d = -1;
/// bit D+c set means observed column c is -1.
struct ExactJoint {
  static constexpr int kMaxVariables = 22;

  DependencyGraph graph;
  std::vector<double> probs;

  int variables() const { return graph.tasks + 2 * graph.sources; }
  int task_value(std::size_t idx, int d) const { return (idx >> d) & 1U ? -1 : 1; }
  int column_value(std::size_t idx, int c) const {
    return (idx >> (graph.tasks + c)) & 1U ? -1 : 1;
  }
  int vote(std::size_t idx, int source) const {
    return pair_vote_of(column_value(idx, 2 * source), column_value(idx, 2 * source + 1));
  }

 private:
  static int pair_vote_of(int a, int b) { return a == b ? 0 : a; }
};

/// Exponentiates every configuration's energy and normalizes. `g` is validated
/// first. Throws TooLarge when D + 2m exceeds 22.
ExactJoint enumerate_joint(const CanonicalParameters& theta, const DependencyGraph& g);

/// Exact marginal over the listed tasks and sources, in MarginalTable layout.
MarginalTable exact_table(const ExactJoint& joint, const std::vector<int>& tasks,
                          const std::vector<int>& sources);

/// Exact E[prod of listed columns * prod of listed tasks].
double exact_expectation(const ExactJoint& joint, const std::vector<int>& columns,
                         const std::vector<int>& tasks = {});

struct ExactStatistics {
  ClassPrior prior;
  ObservedStatistics observed;    // what sampling would estimate with infinite data
  Accuracies accuracies;          // a_i = E[v_(first column of i) Y(i)]
  LabelModelParameters params;    // true tables over the junction tree of the graph
  AugmentedLabelMatrix rows;      // distinct observed rows with positive mass
  std::vector<double> weights;    // their probabilities
};

ExactStatistics exact_statistics(const ExactJoint& joint);

struct Sample {
  LabelMatrix labels;
  std::vector<int> truth;  // rows x tasks, values in {-1, +1}
  int tasks = 0;

  int y(std::size_t row, int task) const { return truth[row * tasks + task]; }
};

/// n i.i.d. draws by inverse CDF over the flattened table.
Sample sample(const ExactJoint& joint, std::size_t n, std::uint64_t seed);

/// Uniform double in [0, 1) from a 64-bit engine, identical on every platform.
inline double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// One task, conditionally independent sources with symmetric errors:
/// P(lambda_i = 0 | y) = abstain[i], P(lambda_i = y | y) = (1 - abstain[i] + accuracy[i]) / 2.
/// Sampled directly, so it scales to any m.
class StarModel {
 public:
  StarModel(double p_positive, std::vector<double> accuracy, std::vector<double> abstain);

  int sources() const { return static_cast<int>(accuracy_.size()); }
  double p_positive() const { return p_positive_; }
  const std::vector<double>& accuracy() const { return accuracy_; }
  const std::vector<double>& abstain() const { return abstain_; }

  // P(lambda_i = vote | Y = y).
  double vote_given(int source, int vote, int y) const;

  // True table over (Y, lambda_i) in MarginalTable layout.
  std::vector<double> clique_table(int source) const;

  // Equivalent Ising parameters (sources with abstain 0 cannot abstain).
  CanonicalParameters canonical() const;

  // Draws one row into `votes`, returns Y.
  int draw(std::mt19937_64& rng, std::span<Vote> votes) const;
  Sample sample(std::size_t n, std::uint64_t seed) const;

  // Copy with the accuracy of the listed sources negated.
  StarModel flipped(const std::vector<int>& sources) const;

 private:
  double p_positive_;
  std::vector<double> accuracy_;
  std::vector<double> abstain_;
};

/// Stream from a star model whose listed sources invert their accuracy every
/// `period` steps (period 0 means no drift).
class DriftingStream {
 public:
  DriftingStream(StarModel base, std::vector<int> flip, std::size_t period, std::uint64_t seed);

  // Model generating step t.
  const StarModel& model_at(std::size_t t) const;
  std::size_t steps_taken() const { return t_; }

  // Next row; returns Y.
  int next(std::span<Vote> votes);

 private:
  StarModel base_, flipped_;
  std::size_t period_;
  std::size_t t_ = 0;
  std::mt19937_64 rng_;
};

}  // namespace trilabel
