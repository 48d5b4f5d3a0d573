#include "trilabel/augment.hpp"

#include <algorithm>
#include <numeric>

#include "trilabel/error.hpp"

namespace trilabel {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Independent stream per (seed, source) so columns can be augmented in any order.
std::uint64_t stream_seed(std::uint64_t seed, std::size_t source) {
  std::uint64_t s = seed ^ (0xD1B54A32D192ED03ULL * (source + 1));
  return splitmix64(s);
}

}  // namespace

void AugmentedLabelMatrix::append_row(std::span<const std::int8_t> row) {
  if (row.size() != columns()) throw Error(ErrorCode::ShapeMismatch, "augmented row width");
  data_.insert(data_.end(), row.begin(), row.end());
  ++rows_;
}

RowAugmenter::RowAugmenter(std::size_t sources, const AbstainPolicy& policy)
    : policy_(policy), abstains_seen_(sources, 0), rng_state_(sources) {
  for (std::size_t i = 0; i < sources; ++i) rng_state_[i] = stream_seed(policy.seed, i);
}

void RowAugmenter::next(std::span<const Vote> votes, std::span<std::int8_t> out) {
  for (std::size_t i = 0; i < votes.size(); ++i) {
    const int v = votes[i];
    if (v != 0) {
      out[2 * i] = static_cast<std::int8_t>(v);
      out[2 * i + 1] = static_cast<std::int8_t>(-v);
      continue;
    }
    bool positive;
    if (policy_.mode == AbstainPolicy::Mode::Alternating) {
      positive = abstains_seen_[i] % 2 == 0;
    } else {
      positive = (splitmix64(rng_state_[i]) >> 63) == 0;
    }
    ++abstains_seen_[i];
    out[2 * i] = out[2 * i + 1] = positive ? 1 : -1;
  }
}

AugmentedLabelMatrix augment_matrix(const LabelMatrix& labels, const AbstainPolicy& policy) {
  AugmentedLabelMatrix out(labels.rows(), labels.sources());
  RowAugmenter augmenter(labels.sources(), policy);
  std::vector<std::int8_t> buffer(out.columns());
  for (std::size_t r = 0; r < labels.rows(); ++r) {
    augmenter.next(labels.row(r), buffer);
    std::copy(buffer.begin(), buffer.end(), &out(r, 0));
  }
  return out;
}

LabelMatrix collapse(const AugmentedLabelMatrix& a) {
  LabelMatrix out(a.rows(), a.sources());
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t i = 0; i < a.sources(); ++i)
      out.set(r, i, static_cast<Vote>(pair_vote(a(r, 2 * i), a(r, 2 * i + 1))));
  return out;
}

bool AugmentedGraph::sources_dependent(int i, int j) const {
  return i == j || component[i] == component[j];
}

bool AugmentedGraph::columns_dependent(int a, int b) const {
  const int i = a / 2, j = b / 2;
  return i == j || sources_dependent(i, j);
}

AugmentedGraph augment_graph(const DependencyGraph& g) {
  AugmentedGraph out;
  out.tasks = g.tasks;
  out.sources = g.sources;
  out.assignment = g.assignment;
  out.source_edges = g.source_edges;
  std::sort(out.source_edges.begin(), out.source_edges.end());
  for (auto [a, b] : g.task_edges) out.edges.emplace_back(a, b);
  for (int i = 0; i < g.sources; ++i) {
    const int first = out.observed_vertex(2 * i), second = out.observed_vertex(2 * i + 1);
    out.edges.emplace_back(g.assignment[i], first);
    out.edges.emplace_back(g.assignment[i], second);
    out.edges.emplace_back(first, second);
  }
  for (auto [i, j] : out.source_edges) {
    for (int ci : {2 * i, 2 * i + 1})
      for (int cj : {2 * j, 2 * j + 1})
        out.edges.emplace_back(out.observed_vertex(ci), out.observed_vertex(cj));
  }
  std::sort(out.edges.begin(), out.edges.end());

  out.component.resize(g.sources);
  std::iota(out.component.begin(), out.component.end(), 0);
  auto find = [&](int x) {
    while (out.component[x] != x) x = out.component[x] = out.component[out.component[x]];
    return x;
  };
  for (auto [i, j] : out.source_edges) out.component[find(i)] = find(j);
  for (int i = 0; i < g.sources; ++i) out.component[i] = find(i);
  return out;
}

}  // namespace trilabel
