#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "doctest.h"
#include "trilabel/error.hpp"
#include "trilabel/graph.hpp"
#include "trilabel/oracle.hpp"
#include "trilabel/parameters.hpp"

namespace testing {

using namespace trilabel;

struct GridModel {
  std::string name;
  DependencyGraph graph;
  bool abstains;
};

inline DependencyGraph star_with_edges(int m, std::vector<Edge> edges) {
  DependencyGraph g = DependencyGraph::star(m);
  g.source_edges = std::move(edges);
  return g;
}

// D=3 chain Y1-Y2-Y3 with three sources per task.
inline DependencyGraph chain3() {
  DependencyGraph g;
  g.tasks = 3;
  g.sources = 9;
  g.task_edges = {{0, 1}, {1, 2}};
  g.assignment = {0, 0, 0, 1, 1, 1, 2, 2, 2};
  return g;
}

// The twelve models of the exact-closure grid.
inline std::vector<GridModel> acceptance_grid() {
  return {
      {"m3 no edges, abstains", star_with_edges(3, {}), true},
      {"m3 no edges, no abstains", star_with_edges(3, {}), false},
      {"m5 one edge, abstains", star_with_edges(5, {{0, 1}}), true},
      {"m5 one edge, no abstains", star_with_edges(5, {{0, 1}}), false},
      {"m5 two edges, abstains", star_with_edges(5, {{0, 1}, {1, 2}}), true},
      {"m5 two edges, no abstains", star_with_edges(5, {{0, 1}, {1, 2}}), false},
      {"m8 no edges, abstains", star_with_edges(8, {}), true},
      {"m8 no edges, no abstains", star_with_edges(8, {}), false},
      {"m8 one edge, abstains", star_with_edges(8, {{0, 1}}), true},
      {"m8 one edge, no abstains", star_with_edges(8, {{0, 1}}), false},
      {"m8 two edges, abstains", star_with_edges(8, {{0, 1}, {4, 5}}), true},
      {"chain of three tasks", chain3(), true},
  };
}

// Error code thrown by fn; fails the current test when nothing is thrown.
inline ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::InvalidInput;
}

inline double max_table_error(const LabelModelParameters& a, const LabelModelParameters& b) {
  double worst = 0.0;
  auto cmp = [&](const std::vector<MarginalTable>& x, const std::vector<MarginalTable>& y) {
    if (x.size() != y.size()) {
      worst = INFINITY;
      return;
    }
    for (std::size_t c = 0; c < x.size(); ++c) {
      if (x[c].probs.size() != y[c].probs.size() || x[c].tasks != y[c].tasks ||
          x[c].sources != y[c].sources) {
        worst = INFINITY;
        return;
      }
      for (std::size_t k = 0; k < x[c].probs.size(); ++k)
        worst = std::max(worst, std::abs(x[c].probs[k] - y[c].probs[k]));
    }
  };
  cmp(a.cliques, b.cliques);
  cmp(a.separators, b.separators);
  return worst;
}

}  // namespace testing

namespace testing {

// Small seeded generator for property tests.
struct Gen {
  std::mt19937_64 rng;
  explicit Gen(std::uint64_t seed) : rng(seed) {}

  int integer(int lo, int hi) {  // inclusive
    return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
  }
  double real(double lo, double hi) { return lo + (hi - lo) * unit_uniform(rng); }
  bool coin(double p = 0.5) { return unit_uniform(rng) < p; }

  LabelMatrix labels(std::size_t rows, std::size_t sources, double abstain = 0.3) {
    LabelMatrix l(rows, sources);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t i = 0; i < sources; ++i)
        l.set(r, i, static_cast<Vote>(coin(abstain) ? 0 : (coin() ? 1 : -1)));
    return l;
  }

  // Random graph with up to `max_tasks` tasks, random task edges, and
  // same-task source edges. May be non-chordal.
  DependencyGraph graph(int max_tasks, int max_sources) {
    DependencyGraph g;
    g.tasks = integer(1, max_tasks);
    g.sources = integer(1, max_sources);
    for (int i = 0; i < g.sources; ++i) g.assignment.push_back(integer(0, g.tasks - 1));
    for (int d = 0; d < g.tasks; ++d)
      for (int e = d + 1; e < g.tasks; ++e)
        if (coin(0.4)) g.task_edges.emplace_back(d, e);
    for (int i = 0; i < g.sources; ++i)
      for (int j = i + 1; j < g.sources; ++j)
        if (g.assignment[i] == g.assignment[j] && coin(0.15)) g.source_edges.emplace_back(i, j);
    return g;
  }
};

}  // namespace testing
