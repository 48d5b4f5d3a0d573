#include "doctest.h"

#include "support.hpp"
#include "trilabel/recovery.hpp"

using namespace trilabel;

TEST_CASE("exact statistics reproduce the true tables on the model grid") {
  RecoveryConfig cfg;
  cfg.accuracy.n_min = 1;
  for (const auto& model : testing::acceptance_grid()) {
    CAPTURE(model.name);
    const auto theta = CanonicalParameters::random(model.graph, 11, model.abstains);
    const auto joint = enumerate_joint(theta, model.graph);
    const auto exact = exact_statistics(joint);
    const auto fit = recover_from_statistics(exact.observed, joint.graph, exact.prior, cfg);
    CHECK(testing::max_table_error(fit.params, exact.params) <= 1e-9);
  }
}

namespace {

using Joint = ExactJoint;

// Source vote of `source` in joint configuration idx, or the task value for -1.
int value_of(const Joint& joint, std::size_t idx, int task, int source) {
  return source < 0 ? joint.task_value(idx, task) : joint.vote(idx, source);
}

// r_C and r^B_C read straight off the joint, in the documented ordering:
// task membership alternates fastest, then each source cycles absent / in Z / in U.
std::pair<Eigen::VectorXd, Eigen::VectorXd> rhs_from_joint(const Joint& joint, int task,
                                                           const std::vector<int>& sources) {
  const std::size_t s = sources.size();
  std::size_t patterns = 1;
  for (std::size_t k = 0; k < s; ++k) patterns *= 3;
  Eigen::VectorXd r(2 * patterns), rb(2 * patterns);
  for (std::size_t pattern = 0; pattern < patterns; ++pattern) {
    for (int y_in_z = 0; y_in_z < 2; ++y_in_z) {
      std::vector<int> z, u;
      if (y_in_z) z.push_back(-1);
      std::size_t rest = pattern;
      for (std::size_t k = 0; k < s; ++k, rest /= 3) {
        if (rest % 3 == 1) z.push_back(sources[k]);
        if (rest % 3 == 2) u.push_back(sources[k]);
      }
      double pos = 0.0, neg = 0.0;
      for (std::size_t idx = 0; idx < joint.probs.size(); ++idx) {
        bool zero = true;
        for (int k : u) zero = zero && joint.vote(idx, k) == 0;
        if (!zero) continue;
        int product = 1;
        for (int k : z) product *= value_of(joint, idx, task, k);
        if (product == 1) pos += joint.probs[idx];
        if (product == -1) neg += joint.probs[idx];
      }
      const auto row = static_cast<Eigen::Index>(2 * pattern + y_in_z);
      r(row) = pos;
      rb(row) = z.empty() ? 0.0 : neg;
    }
  }
  return {r, rb};
}

double conditional_from_joint(const Joint& joint, int source, int given_abstain) {
  double p = 0.0, e = 0.0;
  for (std::size_t idx = 0; idx < joint.probs.size(); ++idx) {
    if (joint.vote(idx, given_abstain) != 0) continue;
    p += joint.probs[idx];
    e += joint.probs[idx] * joint.vote(idx, source) * joint.task_value(idx, 0);
  }
  return e / p;
}

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index k = 0;
  for (double x : v) out(k++) = x;
  return out;
}

}  // namespace

TEST_CASE("clique expectation examples") {
  MomentEstimates m;
  m.second = Eigen::MatrixXd::Identity(4, 4);
  m.second(0, 2) = m.second(2, 0) = 0.42;
  m.task_means = {0.2};
  Accuracies acc;
  acc.by_source = {0.7, -0.3};
  CHECK(clique_expectation(0, {0, 1}, acc, m).value == doctest::Approx(0.084));
  CHECK(clique_expectation(0, {1}, acc, m).value == -0.3);
  CHECK(testing::code_of([&] { clique_expectation(0, {0, 1, 2}, acc, m); }) ==
        ErrorCode::UnsupportedCliqueSize);
}

TEST_CASE("pair clique expectation matches enumeration") {
  const auto g = testing::star_with_edges(4, {{0, 1}});
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto joint = enumerate_joint(CanonicalParameters::random(g, seed), g);
    const auto exact = exact_statistics(joint);
    double truth = 0.0;
    for (std::size_t idx = 0; idx < joint.probs.size(); ++idx)
      truth += joint.probs[idx] * joint.vote(idx, 0) * joint.vote(idx, 1) * joint.task_value(idx, 0);
    CHECK(std::abs(clique_expectation(0, {0, 1}, exact.accuracies, exact.observed.overall).value -
                   truth) <= 1e-10);
  }
}

TEST_CASE("transform matrices") {
  Eigen::MatrixXd eq(6, 6);
  eq << 1, 1, 1, 1, 1, 1,
        1, 0, 1, 0, 1, 0,
        1, 1, 0, 0, 0, 0,
        1, 0, 0, 0, 0, 1,
        0, 0, 1, 1, 0, 0,
        0, 0, 1, 0, 0, 0;
  CHECK(build_transform(1).a == eq);
  Eigen::MatrixXd a0(2, 2), b0(2, 2);
  a0 << 1, 1, 1, 0;
  b0 << 0, 0, 0, 1;
  CHECK(build_transform(0).a == a0);
  CHECK(build_transform(0).b == b0);
  const auto t2 = build_transform(2);
  CHECK(t2.a.rows() == 18);
  CHECK(std::abs(t2.a.fullPivLu().determinant()) > 0.5);
  CHECK(t2.a.fullPivLu().rank() == 18);
}

TEST_CASE("rhs positions") {
  CHECK(rhs_position(false, {0}) == 0);
  CHECK(rhs_position(true, {1}) == 3);
  CHECK(rhs_position(true, {2}) == 5);
  CHECK(rhs_position(true, {1, 2}) == 1 + 2 + 12);
}

TEST_CASE("property: transform identities hold on enumerated joints") {
  testing::Gen gen(61);
  const auto t1 = build_transform(1), t2 = build_transform(2);
  for (int trial = 0; trial < 50; ++trial) {
    const auto g = testing::star_with_edges(3, {{0, 1}});
    const auto joint = enumerate_joint(CanonicalParameters::random(g, gen.rng(), gen.coin(0.8)), g);
    for (const std::vector<int>& sources : {std::vector<int>{2}, std::vector<int>{0, 1}}) {
      const auto& t = sources.size() == 1 ? t1 : t2;
      const auto table = exact_table(joint, {0}, sources);
      const Eigen::VectorXd mu = Eigen::Map<const Eigen::VectorXd>(table.probs.data(), table.probs.size());
      const auto [r, rb] = rhs_from_joint(joint, 0, sources);
      CHECK((t.a * mu - r).cwiseAbs().maxCoeff() <= 1e-10);
      CHECK((t.b * mu - rb).cwiseAbs().maxCoeff() <= 1e-10);
    }
  }
}

TEST_CASE("assembled right-hand sides match enumeration") {
  const auto g = testing::star_with_edges(5, {{0, 1}});
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto joint = enumerate_joint(CanonicalParameters::random(g, seed), g);
    const auto exact = exact_statistics(joint);
    const auto single = assemble_rhs(0, {3}, exact.observed, exact.accuracies, exact.prior);
    CHECK((single - rhs_from_joint(joint, 0, {3}).first).cwiseAbs().maxCoeff() <= 1e-10);
    const std::array<double, 2> cond{conditional_from_joint(joint, 0, 1),
                                     conditional_from_joint(joint, 1, 0)};
    const auto pair = assemble_rhs(0, {0, 1}, exact.observed, exact.accuracies, exact.prior, cond);
    CHECK((pair - rhs_from_joint(joint, 0, {0, 1}).first).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("single-source right-hand side examples") {
  ObservedStatistics stats;
  stats.overall.sources = 1;
  stats.overall.second = Eigen::MatrixXd::Identity(2, 2);
  stats.overall.first = Eigen::VectorXd::Zero(2);
  stats.overall.task_means = {0.0};
  stats.overall.vote_probs = {{0.5, 0.0, 0.5}};
  Accuracies acc;
  acc.by_source = {0.6};
  const auto prior = ClassPrior::balance(0.5);
  auto r = assemble_rhs(0, {0}, stats, acc, prior);
  CHECK(r(3) == doctest::Approx(0.8));
  CHECK(r(4) == 0.0);
  CHECK(r(5) == 0.0);

  stats.overall.vote_probs = {{0.0, 1.0, 0.0}};
  acc.by_source = {0.0};
  r = assemble_rhs(0, {0}, stats, acc, prior);
  CHECK(r(3) == 0.0);
  CHECK(r(4) == 1.0);
  CHECK(r(5) == 0.5);
}

TEST_CASE("solve_marginal examples") {
  const auto t = build_transform(1);
  auto solved = solve_marginal(t, vec({1, 0.5, 0.5, 1, 0, 0}));
  const std::vector<double> perfect{0.5, 0, 0, 0, 0, 0.5};
  for (int k = 0; k < 6; ++k) CHECK(solved.probs[k] == doctest::Approx(perfect[k]).epsilon(1e-12));
  CHECK(solved.clip == 0.0);

  solved = solve_marginal(t, vec({1, 0.3, 0, 0, 1, 0.3}));
  const std::vector<double> silent{0, 0, 0.3, 0.7, 0, 0};
  for (int k = 0; k < 6; ++k) CHECK(solved.probs[k] == doctest::Approx(silent[k]).epsilon(1e-12));

  // P(lambda Y = 1) slightly above what the other entries allow: clipped and renormalized.
  solved = solve_marginal(t, vec({1, 0.5, 0.5, 1.02, 0, 0}));
  CHECK(solved.clip == doctest::Approx(0.01));
  double total = 0.0;
  for (double p : solved.probs) {
    CHECK(p >= 0.0);
    total += p;
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));

  CHECK(testing::code_of([&] { solve_marginal(t, vec({1, 0.5, 0.5, 1.2, 0, 0})); }) ==
        ErrorCode::NumericalInstability);
}

TEST_CASE("sampled data recovers tables within 0.02") {
  const auto g = DependencyGraph::star(5);
  const auto joint = enumerate_joint(CanonicalParameters::random(g, 71), g);
  const auto exact = exact_statistics(joint);
  const auto s = sample(joint, 100000, 72);
  const auto fit = recover_parameters(s.labels, g, exact.prior);
  CHECK(testing::max_table_error(fit.params, exact.params) <= 0.02);
  for (double c : fit.diagnostics.clique_clip) CHECK(c <= 0.05);
}

TEST_CASE("two sources use the ratio fallback end to end") {
  const StarModel model(0.7, {0.6, 0.5}, {0.1, 0.2});
  const auto s = model.sample(100000, 5);
  const auto prior = ClassPrior::balance(0.7);
  CHECK(testing::code_of([&] { recover_parameters(s.labels, DependencyGraph::star(2), prior); }) ==
        ErrorCode::InsufficientIndependence);
  RecoveryConfig cfg;
  cfg.accuracy.ratio_fallback = true;
  const auto fit = recover_parameters(s.labels, DependencyGraph::star(2), prior, cfg);
  CHECK(fit.diagnostics.ratio_fallback == std::vector<int>{0, 1});
  for (int i = 0; i < 2; ++i) {
    const auto truth = model.clique_table(i);
    for (std::size_t k = 0; k < truth.size(); ++k)
      CHECK(std::abs(fit.params.cliques[i].probs[k] - truth[k]) <= 0.02);
  }
}

TEST_CASE("clique tables agree on shared separators") {
  RecoveryConfig cfg;
  cfg.accuracy.n_min = 1;
  for (const auto& model : testing::acceptance_grid()) {
    CAPTURE(model.name);
    const auto joint = enumerate_joint(CanonicalParameters::random(model.graph, 13, model.abstains),
                                       model.graph);
    const auto exact = exact_statistics(joint);
    const auto fit = recover_from_statistics(exact.observed, joint.graph, exact.prior, cfg);
    CHECK(fit.params.check().empty());
    for (const auto& sep : fit.params.separators) {
      for (const auto& clique : fit.params.cliques) {
        const bool covers =
            std::includes(clique.tasks.begin(), clique.tasks.end(), sep.tasks.begin(), sep.tasks.end()) &&
            std::includes(clique.sources.begin(), clique.sources.end(), sep.sources.begin(),
                          sep.sources.end());
        if (!covers) continue;
        const auto m = clique.marginalize(sep.tasks, sep.sources);
        for (std::size_t k = 0; k < m.probs.size(); ++k)
          CHECK(std::abs(m.probs[k] - sep.probs[k]) <= 1e-6);
      }
    }
  }
}
