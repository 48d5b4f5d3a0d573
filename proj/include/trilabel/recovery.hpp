#pragma once

#include <array>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "trilabel/augment.hpp"
#include "trilabel/graph.hpp"
#include "trilabel/label_matrix.hpp"
#include "trilabel/moments.hpp"
#include "trilabel/parameters.hpp"
#include "trilabel/prior.hpp"

namespace trilabel {

struct RecoveryConfig {
  AccuracyOptions accuracy;
  SignStrategy signs;
  AbstainPolicy policy;
  std::size_t triplet_cap = 500;
  double instability = 0.05;  // allowed excursion outside [0, 1] before clipping fails
};

/// a_C = E[prod_{k in C} lambda_k Y] for a source clique of size 1 or 2.
struct CliqueExpectation {
  int task = 0;
  std::vector<int> sources;
  double value = 0.0;
};

CliqueExpectation clique_expectation(int task, const std::vector<int>& sources,
                                     const Accuracies& acc, const MomentEstimates& m);

/// The 0/1 matrices mapping a clique table mu_C to r_C and r^B_C.
struct TransformPair {
  int s = 0;
  Eigen::MatrixXd a;
  Eigen::MatrixXd b;
};

TransformPair build_transform(int s);

/// Position of the entry for (U, Z) in the right-hand side: the task bit is
/// 1 when Y is in Z; membership codes are 0 absent, 1 in Z, 2 in U.
std::size_t rhs_position(bool task_in_z, const std::vector<int>& membership);

/// Right-hand side r_C for one task and s <= 2 sources. `conditional[k]` is
/// E[lambda_k Y | the other source abstains], only read when s = 2.
Eigen::VectorXd assemble_rhs(int task, const std::vector<int>& sources,
                             const ObservedStatistics& stats, const Accuracies& acc,
                             const ClassPrior& prior, const std::array<double, 2>& conditional = {});

struct SolvedTable {
  std::vector<double> probs;
  double clip = 0.0;  // largest distance an entry moved to land in [0, 1]
};

/// mu_C = A_s^{-1} r, clipped into [0, 1] and renormalized. Throws
/// NumericalInstability when an entry leaves [-threshold, 1 + threshold].
SolvedTable solve_marginal(const TransformPair& t, const Eigen::VectorXd& r,
                           double threshold = 0.05);

struct FitResult {
  DependencyGraph graph;  // validated
  JunctionTree tree;
  LabelModelParameters params;
  Accuracies accuracies;
  RecoveryDiagnostics diagnostics;
};

/// Full pipeline: augment, estimate moments, solve triplets, resolve signs,
/// and solve every clique and separator table of the junction tree.
FitResult recover_parameters(const LabelMatrix& labels, const DependencyGraph& g,
                             const ClassPrior& prior, const RecoveryConfig& cfg = {});

/// Same pipeline starting from already accumulated statistics. `g` must be
/// validated and match the layout the statistics were collected with.
FitResult recover_from_statistics(const ObservedStatistics& stats, const DependencyGraph& g,
                                  const ClassPrior& prior, const RecoveryConfig& cfg = {});

}  // namespace trilabel
