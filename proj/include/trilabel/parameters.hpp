#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "trilabel/graph.hpp"
#include "trilabel/label_matrix.hpp"

namespace trilabel {

/// Probability table over a set of tasks and sources.
///
/// Layout: tasks vary fastest, each over (+1, -1); then each source in
/// listed order over (+1, 0, -1). For one task and sources (i, j) this is
/// the ordering mu(Y=1,i=1,j=1), mu(Y=-1,i=1,j=1), mu(Y=1,i=0,j=1), ...
struct MarginalTable {
  std::vector<int> tasks;    // task indices, ascending
  std::vector<int> sources;  // source indices, ascending
  std::vector<double> probs;

  static MarginalTable zeros(std::vector<int> tasks, std::vector<int> sources);

  std::size_t size() const { return probs.size(); }

  // Index for a full task assignment and vote row (indexed by task / source).
  std::size_t index(std::span<const int> y, std::span<const Vote> votes) const;
  double lookup(std::span<const int> y, std::span<const Vote> votes) const {
    return probs[index(y, votes)];
  }

  double sum() const;

  // Sums out every variable that is not listed in (keep_tasks, keep_sources).
  MarginalTable marginalize(const std::vector<int>& keep_tasks,
                            const std::vector<int>& keep_sources) const;
};

struct TableDiagnostics {
  double clip_magnitude = 0.0;  // largest distance moved to land in [0, 1]
  std::string origin;           // "prior", "solve s=1", "solve s=2"
};

struct RecoveryDiagnostics {
  std::vector<int> triplet_counts;       // usable triplets per source
  std::vector<int> ratio_fallback;       // sources whose accuracy came from the ratio
  std::vector<int> conditional_fallback; // sources whose conditional accuracy was substituted
  std::vector<double> clique_clip;       // aligned with cliques
  std::vector<double> separator_clip;    // aligned with separators
  std::vector<std::string> warnings;
  bool sign_tie = false;
};

/// Label-model parameters: one table per maximal clique and per separator
/// of the junction tree, aligned by index.
struct LabelModelParameters {
  int tasks = 0;
  int sources = 0;
  std::vector<MarginalTable> cliques;
  std::vector<MarginalTable> separators;
  std::vector<int> separator_degree;

  // Nonnegativity, normalization (sum_tol) and separator consistency (sep_tol).
  // Returns an empty string when all invariants hold.
  std::string check(double sum_tol = 1e-9, double sep_tol = 1e-6) const;

  bool operator==(const LabelModelParameters& other) const;
};

// Table member lists for a junction-tree vertex set.
void split_vertices(const DependencyGraph& g, const std::vector<int>& vertices,
                    std::vector<int>& tasks, std::vector<int>& sources);

}  // namespace trilabel
