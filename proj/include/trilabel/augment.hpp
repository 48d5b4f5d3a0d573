#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "trilabel/graph.hpp"
#include "trilabel/label_matrix.hpp"

namespace trilabel {

/// How abstains are split between the (1,1) and (-1,-1) pair states.
struct AbstainPolicy {
  enum class Mode { Alternating, SeededRandom };
  Mode mode = Mode::Alternating;
  std::uint64_t seed = 0;

  static AbstainPolicy alternating() { return {}; }
  static AbstainPolicy seeded(std::uint64_t seed) { return {Mode::SeededRandom, seed}; }
};

/// n x 2m matrix of +-1 entries. Source i owns columns (2i, 2i+1):
/// (1,-1) for a +1 vote, (-1,1) for a -1 vote, equal signs for an abstain.
class AugmentedLabelMatrix {
 public:
  AugmentedLabelMatrix() = default;
  AugmentedLabelMatrix(std::size_t rows, std::size_t sources)
      : rows_(rows), sources_(sources), data_(rows * 2 * sources, 1) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t sources() const noexcept { return sources_; }
  std::size_t columns() const noexcept { return 2 * sources_; }

  std::int8_t operator()(std::size_t r, std::size_t c) const { return data_[r * columns() + c]; }
  std::int8_t& operator()(std::size_t r, std::size_t c) { return data_[r * columns() + c]; }
  std::span<const std::int8_t> row(std::size_t r) const {
    return {data_.data() + r * columns(), columns()};
  }

  void append_row(std::span<const std::int8_t> row);

  bool operator==(const AugmentedLabelMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t sources_ = 0;
  std::vector<std::int8_t> data_;
};

// Vote represented by an observed pair.
inline int pair_vote(int first, int second) { return first == second ? 0 : first; }

AugmentedLabelMatrix augment_matrix(const LabelMatrix& labels,
                                    const AbstainPolicy& policy = AbstainPolicy::alternating());

LabelMatrix collapse(const AugmentedLabelMatrix& augmented);

/// Row-at-a-time augmentation that reproduces augment_matrix on any prefix.
class RowAugmenter {
 public:
  RowAugmenter(std::size_t sources, const AbstainPolicy& policy);

  void next(std::span<const Vote> votes, std::span<std::int8_t> out);

 private:
  AbstainPolicy policy_;
  std::vector<std::uint64_t> abstains_seen_;
  std::vector<std::uint64_t> rng_state_;
};

/// Binary Ising-model graph over D hidden tasks and 2m observed variables.
///
/// Vertex ids: tasks first, then observed column c at tasks + c.
struct AugmentedGraph {
  int tasks = 0;
  int sources = 0;
  std::vector<int> assignment;       // source -> task
  std::vector<Edge> source_edges;    // dependency pairs over sources
  std::vector<Edge> edges;           // all edges over vertex ids, sorted
  std::vector<int> component;        // source -> connected component over source edges

  int vertex_count() const { return tasks + 2 * sources; }
  int observed_vertex(int column) const { return tasks + column; }
  int task_of_column(int column) const { return assignment[column / 2]; }
  std::pair<int, int> lift(int source) const { return {2 * source, 2 * source + 1}; }

  // Conditional dependence of two observed columns given their task: same
  // source, or sources joined by a path of dependency edges (a path that
  // avoids the hidden layer).
  bool columns_dependent(int a, int b) const;
  bool sources_dependent(int i, int j) const;
};

AugmentedGraph augment_graph(const DependencyGraph& g);

}  // namespace trilabel
