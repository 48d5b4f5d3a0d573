#include "doctest.h"

#include "support.hpp"
#include "trilabel/augment.hpp"

using namespace trilabel;

namespace {

std::vector<std::int8_t> pair_of(const AugmentedLabelMatrix& a, std::size_t r, int source) {
  return {a(r, 2 * source), a(r, 2 * source + 1)};
}

}  // namespace

TEST_CASE("votes map to fixed pairs") {
  const auto a = augment_matrix(LabelMatrix(2, 1, {1, -1}));
  CHECK(pair_of(a, 0, 0) == std::vector<std::int8_t>{1, -1});
  CHECK(pair_of(a, 1, 0) == std::vector<std::int8_t>{-1, 1});
}

TEST_CASE("alternating policy splits a column of abstains in row order") {
  const auto a = augment_matrix(LabelMatrix(4, 1, {0, 0, 0, 0}), AbstainPolicy::alternating());
  CHECK(pair_of(a, 0, 0) == std::vector<std::int8_t>{1, 1});
  CHECK(pair_of(a, 1, 0) == std::vector<std::int8_t>{-1, -1});
  CHECK(pair_of(a, 2, 0) == std::vector<std::int8_t>{1, 1});
  CHECK(pair_of(a, 3, 0) == std::vector<std::int8_t>{-1, -1});
}

TEST_CASE("property: alternating gives ceil(k/2) positive and floor(k/2) negative abstain pairs") {
  testing::Gen gen(7);
  for (int trial = 0; trial < 50; ++trial) {
    const auto l = gen.labels(static_cast<std::size_t>(gen.integer(1, 60)), 4, gen.real(0.0, 0.9));
    const auto a = augment_matrix(l);
    for (int i = 0; i < 4; ++i) {
      std::size_t k = 0, positive = 0;
      for (std::size_t r = 0; r < l.rows(); ++r) {
        if (l(r, i) != 0) continue;
        ++k;
        CHECK(a(r, 2 * i) == a(r, 2 * i + 1));
        if (a(r, 2 * i) == 1) ++positive;
      }
      CHECK(positive == (k + 1) / 2);
    }
  }
}

TEST_CASE("property: collapsing the augmented matrix recovers the votes") {
  testing::Gen gen(8);
  for (int trial = 0; trial < 50; ++trial) {
    const auto l = gen.labels(static_cast<std::size_t>(gen.integer(0, 40)),
                              static_cast<std::size_t>(gen.integer(1, 7)));
    CHECK(collapse(augment_matrix(l, AbstainPolicy::alternating())) == l);
    CHECK(collapse(augment_matrix(l, AbstainPolicy::seeded(gen.rng()))) == l);
  }
}

TEST_CASE("seeded policy is deterministic and keyed per column") {
  testing::Gen gen(9);
  auto l = gen.labels(200, 3, 0.6);
  const auto a = augment_matrix(l, AbstainPolicy::seeded(42));
  CHECK(a == augment_matrix(l, AbstainPolicy::seeded(42)));
  CHECK_FALSE(a == augment_matrix(l, AbstainPolicy::seeded(43)));
  // Changing another column leaves column 1's realization untouched.
  for (std::size_t r = 0; r < l.rows(); ++r) l.set(r, 2, static_cast<Vote>(-l(r, 2)));
  const auto b = augment_matrix(l, AbstainPolicy::seeded(42));
  for (std::size_t r = 0; r < l.rows(); ++r) CHECK(pair_of(a, r, 0) == pair_of(b, r, 0));
}

TEST_CASE("seeded policy column mean on abstain rows is within 4 sigma of zero") {
  const std::size_t k = 40000;
  const auto a = augment_matrix(LabelMatrix(k, 1), AbstainPolicy::seeded(2026));
  double sum = 0.0;
  for (std::size_t r = 0; r < k; ++r) sum += a(r, 0);
  CHECK(std::abs(sum / k) <= 4.0 / std::sqrt(static_cast<double>(k)));
}

TEST_CASE("row augmenter reproduces augment_matrix on every prefix") {
  testing::Gen gen(10);
  const auto l = gen.labels(100, 5, 0.4);
  for (const auto policy : {AbstainPolicy::alternating(), AbstainPolicy::seeded(5)}) {
    const auto whole = augment_matrix(l, policy);
    RowAugmenter aug(5, policy);
    std::vector<std::int8_t> row(10);
    for (std::size_t r = 0; r < l.rows(); ++r) {
      aug.next(l.row(r), row);
      const auto expected = whole.row(r);
      CHECK(std::equal(row.begin(), row.end(), expected.begin()));
    }
  }
}

TEST_CASE("augmented graph for a dependent pair among four sources") {
  const auto ag = augment_graph(testing::star_with_edges(4, {{0, 1}}));
  CHECK(ag.vertex_count() == 9);
  int internal = 0, cross = 0, to_task = 0;
  for (auto [a, b] : ag.edges) {
    if (a == 0) {
      ++to_task;
      continue;
    }
    const int sa = (a - 1) / 2, sb = (b - 1) / 2;
    if (sa == sb) ++internal;
    else ++cross;
  }
  CHECK(internal == 4);
  CHECK(cross == 4);
  CHECK(to_task == 8);
  CHECK(ag.columns_dependent(0, 3));
  CHECK_FALSE(ag.columns_dependent(0, 4));
  CHECK(ag.lift(1) == std::pair<int, int>{2, 3});
  CHECK(ag.task_of_column(3) == 0);
}

TEST_CASE("augmented graph of a single source and of independent sources") {
  const auto one = augment_graph(DependencyGraph::star(1));
  CHECK(one.vertex_count() == 3);
  CHECK(one.edges == std::vector<Edge>{{0, 1}, {0, 2}, {1, 2}});
  const auto many = augment_graph(DependencyGraph::star(5));
  CHECK(many.edges.size() == 15);  // 2 task edges + 1 internal edge per source, no cross edges
}

TEST_CASE("dependence follows paths of source edges") {
  const auto ag = augment_graph(testing::star_with_edges(4, {{0, 1}, {1, 2}}));
  CHECK(ag.sources_dependent(0, 2));
  CHECK_FALSE(ag.sources_dependent(0, 3));
}
