#include "doctest.h"

#include <chrono>

#include "support.hpp"
#include "trilabel/online.hpp"

using namespace trilabel;

namespace {

bool same_tables(const LabelModelParameters& a, const LabelModelParameters& b) {
  if (a.cliques.size() != b.cliques.size() || a.separators.size() != b.separators.size()) return false;
  for (std::size_t c = 0; c < a.cliques.size(); ++c)
    if (a.cliques[c].probs != b.cliques[c].probs) return false;
  for (std::size_t s = 0; s < a.separators.size(); ++s)
    if (a.separators[s].probs != b.separators[s].probs) return false;
  return true;
}

const StarModel kModel(0.5, {0.7, 0.6, 0.6, 0.5, 0.65}, {0.2, 0.1, 0.3, 0.0, 0.2});

}  // namespace

TEST_CASE("windowed statistics and fits equal a batch fit over the window") {
  const std::size_t w = 300;
  const auto s = kModel.sample(1000, 1);
  const auto g = DependencyGraph::star(5);
  const auto prior = ClassPrior::balance(0.5);
  OnlineConfig cfg;
  cfg.window = w;
  OnlineLabelModel online(g, cfg);
  // The stream augments every row in arrival order, so the batch reference
  // takes its rows from the augmentation of the whole prefix.
  const auto augmented = augment_matrix(s.labels);
  for (std::size_t t = 0; t < s.labels.rows(); ++t) {
    const auto res = online.step(s.labels.row(t), prior);
    if (t + 1 < w || (t + 1) % 100 != 0) continue;
    SufficientStats batch(5, StatsLayout::for_graph(g));
    AugmentedLabelMatrix window(0, 5);
    for (std::size_t r = t + 1 - w; r <= t; ++r) window.append_row(augmented.row(r));
    batch.add_matrix(window);
    CHECK(batch == online.stats());
    CHECK(window == online.window_rows());
    const auto fit = recover_from_statistics(batch.finalize(prior, g), g, prior);
    REQUIRE(res.model);
    CHECK(same_tables(fit.params, res.model->fit.params));
  }
}

TEST_CASE("cumulative estimation equals the offline fit on every row seen") {
  const auto s = kModel.sample(600, 2);
  const auto g = DependencyGraph::star(5);
  const auto prior = ClassPrior::balance(0.5);
  OnlineLabelModel online(g, {});
  for (std::size_t t = 0; t < s.labels.rows(); ++t) {
    const auto res = online.step(s.labels.row(t), prior);
    if ((t + 1) % 200 != 0) continue;
    std::vector<Vote> prefix(s.labels.data().begin(), s.labels.data().begin() + (t + 1) * 5);
    const auto offline = recover_parameters(LabelMatrix(t + 1, 5, prefix), g, prior);
    REQUIRE(res.model);
    CHECK(same_tables(offline.params, res.model->fit.params));
  }
}

TEST_CASE("warmup returns prior posteriors") {
  const auto s = kModel.sample(120, 3);
  OnlineLabelModel online(DependencyGraph::star(5), {});
  CHECK(online.warmup() == 100);
  OnlineLabelModel wide(DependencyGraph::star(12), {});
  CHECK(wide.warmup() == 120);
  const auto prior = ClassPrior::balance(0.3);
  for (std::size_t t = 0; t < s.labels.rows(); ++t) {
    const auto res = online.step(s.labels.row(t), prior);
    CHECK(res.warmup == (t + 1 < 100));
    if (res.warmup) {
      REQUIRE(res.posterior.size() == 1);
      CHECK(res.posterior[0] == doctest::Approx(0.3).epsilon(1e-15));
      CHECK_FALSE(res.model);
    }
  }
}

TEST_CASE("after a full window of a new regime no old row remains") {
  const std::size_t w = 200;
  const auto old_rows = kModel.sample(w, 4);
  const auto new_rows = kModel.flipped({0, 1}).sample(w, 5);
  OnlineConfig cfg;
  cfg.window = w;
  cfg.warmup = 1;
  OnlineLabelModel online(DependencyGraph::star(5), cfg);
  const auto prior = ClassPrior::balance(0.5);
  for (std::size_t t = 0; t < w; ++t) online.step(old_rows.labels.row(t), prior);
  RowAugmenter aug(5, AbstainPolicy::alternating());
  std::vector<std::int8_t> row(10);
  for (std::size_t t = 0; t < w; ++t) aug.next(old_rows.labels.row(t), row);
  SufficientStats fresh(5, {});
  for (std::size_t t = 0; t < w; ++t) {
    online.step(new_rows.labels.row(t), prior);
    aug.next(new_rows.labels.row(t), row);
    fresh.add(row);
  }
  SufficientStats from_window(5, {});
  const auto rows = online.window_rows();
  for (std::size_t r = 0; r < rows.rows(); ++r) from_window.add(rows.row(r));
  CHECK(fresh == from_window);
  CHECK(fresh.weight() == online.stats().weight());
  CHECK(online.audit());
}

TEST_CASE("periodic audits pass without rebuilding") {
  const auto s = kModel.sample(400, 6);
  OnlineConfig cfg;
  cfg.window = 150;
  cfg.audit_every = 50;
  OnlineLabelModel online(DependencyGraph::star(5), cfg);
  for (std::size_t t = 0; t < s.labels.rows(); ++t) {
    const auto res = online.step(s.labels.row(t), ClassPrior::balance(0.5));
    CHECK(res.diagnostic.empty());
  }
  CHECK(online.audit());
}

TEST_CASE("a failed refit reuses the last model and flags it stale") {
  // Sources 2 and 3 run through all four sign combinations, so over any
  // window that is a multiple of 4 their moment is exactly zero and every
  // triplet is degenerate.
  const std::vector<std::vector<Vote>> cycle{{1, 1, 1}, {1, 1, -1}, {1, -1, 1}, {1, -1, -1}};
  OnlineConfig cfg;
  cfg.window = 40;
  cfg.warmup = 40;
  const auto prior = ClassPrior::balance(0.5);
  const StarModel good(0.5, {0.8, 0.7, 0.6}, {0.0, 0.0, 0.0});
  const auto s = good.sample(60, 7);

  OnlineLabelModel fresh(DependencyGraph::star(3), cfg);
  StepResult res;
  for (int t = 0; t < 40; ++t) res = fresh.step(cycle[t % 4], prior);
  CHECK(res.stale);
  CHECK_FALSE(res.model);
  CHECK(res.posterior == std::vector<double>{0.5});

  OnlineLabelModel online(DependencyGraph::star(3), cfg);
  std::shared_ptr<const OnlineModel> last;
  for (std::size_t t = 0; t < s.labels.rows(); ++t) last = online.step(s.labels.row(t), prior).model;
  REQUIRE(last);
  for (int t = 0; t < 39; ++t) last = online.step(cycle[t % 4], prior).model;
  REQUIRE(last);
  res = online.step(cycle[3], prior);
  CHECK(res.stale);
  CHECK_FALSE(res.diagnostic.empty());
  CHECK(res.model == last);
  std::vector<double> expected(1);
  last->model.marginals(cycle[3], expected);
  CHECK(res.posterior == expected);
}

TEST_CASE("window sweep on a stationary stream improves with more data") {
  const auto sweep = sweep_window(kModel, {}, 0, 3000, {100, 400, 1600}, 8);
  REQUIRE(sweep.points.size() == 3);
  CHECK(sweep.points[0].error > sweep.points[1].error);
  CHECK(sweep.points[1].error > sweep.points[2].error);
  CHECK(sweep.best_window == 1600);
}

TEST_CASE("window sweep under heavy drift prefers short windows") {
  const StarModel base(0.5, {0.8, 0.7, 0.8, 0.75, 0.7}, {0.0, 0.0, 0.0, 0.0, 0.0});
  OnlineConfig cfg;
  cfg.warmup = 50;
  const auto sweep = sweep_window(base, {0, 1}, 200, 4000, {50, 100, 200, 400, 800}, 9, cfg);
  CHECK(sweep.best_window < 400);
}

TEST_CASE("window sweep under moderate drift has an interior minimum") {
  const StarModel base(0.5, {0.8, 0.7, 0.8, 0.75, 0.7}, {0.0, 0.0, 0.0, 0.0, 0.0});
  OnlineConfig cfg;
  cfg.warmup = 50;
  const std::vector<std::size_t> windows{50, 150, 400, 1000, 3000};
  const auto sweep = sweep_window(base, {0, 1}, 1000, 6000, windows, 10, cfg);
  CHECK(sweep.best_window != windows.front());
  CHECK(sweep.best_window != windows.back());
}

TEST_CASE("per-step cost does not grow with the stream length") {
  const auto s = kModel.sample(10000, 11);
  OnlineConfig cfg;
  cfg.window = 500;
  OnlineLabelModel online(DependencyGraph::star(5), cfg);
  const auto prior = ClassPrior::balance(0.5);
  using clock = std::chrono::steady_clock;
  double early = 0.0, late = 0.0;
  for (std::size_t t = 0; t < s.labels.rows(); ++t) {
    const auto start = clock::now();
    online.step(s.labels.row(t), prior);
    const double dt = std::chrono::duration<double>(clock::now() - start).count();
    if (t >= 500 && t < 1500) early += dt;
    if (t >= 9000) late += dt;
  }
  CHECK(late < 3.0 * early);
}
