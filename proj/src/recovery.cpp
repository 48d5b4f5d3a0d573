#include "trilabel/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "trilabel/error.hpp"

namespace trilabel {

namespace {

Eigen::MatrixXd kron(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  Eigen::MatrixXd out(x.rows() * y.rows(), x.cols() * y.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r)
    for (Eigen::Index c = 0; c < x.cols(); ++c)
      out.block(r * y.rows(), c * y.cols(), y.rows(), y.cols()) = x(r, c) * y;
  return out;
}

// Joint distribution of the clique's sources over vote codes, first source
// fastest.
std::vector<double> vote_distribution(const std::vector<int>& sources,
                                      const ObservedStatistics& stats) {
  if (sources.size() == 1) {
    const auto& p = stats.overall.vote_probs.at(sources[0]);
    return {p[0], p[1], p[2]};
  }
  const auto& pair = stats.pair(sources[0], sources[1]);
  std::vector<double> q(9);
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) q[a + 3 * b] = pair[a * 3 + b];
  return q;
}

std::string clique_name(const DependencyGraph& g, const std::vector<int>& vertices) {
  return "{" + describe_vertices(g, vertices) + "}";
}

}  // namespace

CliqueExpectation clique_expectation(int task, const std::vector<int>& sources,
                                     const Accuracies& acc, const MomentEstimates& m) {
  CliqueExpectation out{task, sources, 0.0};
  if (sources.size() == 1) {
    out.value = acc.by_source.at(sources[0]);
  } else if (sources.size() == 2) {
    out.value = std::clamp(m.second(2 * sources[0], 2 * sources[1]) * m.task_means.at(task), -1.0, 1.0);
  } else {
    throw Error(ErrorCode::UnsupportedCliqueSize,
                "source cliques of size " + std::to_string(sources.size()) + " are not supported");
  }
  return out;
}

TransformPair build_transform(int s) {
  if (s < 0) throw Error(ErrorCode::InvalidInput, "transform size must be nonnegative");
  Eigen::MatrixXd a(2, 2), b(2, 2), d(3, 3), e(3, 3);
  a << 1, 1, 1, 0;
  b << 0, 0, 0, 1;
  d << 1, 1, 1, 1, 0, 0, 0, 1, 0;
  e << 0, 0, 0, 0, 0, 1, 0, 0, 0;
  for (int level = 1; level <= s; ++level) {
    Eigen::MatrixXd next_a = kron(d, a) + kron(e, b);
    Eigen::MatrixXd next_b = kron(e, a) + kron(d, b);
    a = std::move(next_a);
    b = std::move(next_b);
  }
  return {s, std::move(a), std::move(b)};
}

std::size_t rhs_position(bool task_in_z, const std::vector<int>& membership) {
  std::size_t pos = task_in_z ? 1 : 0, stride = 2;
  for (int c : membership) {
    pos += static_cast<std::size_t>(c) * stride;
    stride *= 3;
  }
  return pos;
}

Eigen::VectorXd assemble_rhs(int task, const std::vector<int>& sources,
                             const ObservedStatistics& stats, const Accuracies& acc,
                             const ClassPrior& prior, const std::array<double, 2>& conditional) {
  const std::size_t s = sources.size();
  if (s == 0 || s > 2) {
    throw Error(ErrorCode::UnsupportedCliqueSize,
                "right-hand side needs 1 or 2 sources, got " + std::to_string(s));
  }
  const double p_pos = prior.p_positive(task);
  const auto q = vote_distribution(sources, stats);
  const double joint_expectation = clique_expectation(task, sources, acc, stats.overall).value;

  std::size_t cells = 1;
  for (std::size_t k = 0; k < s; ++k) cells *= 3;
  std::vector<int> membership(s), codes(s);
  auto decode = [&](std::size_t cell) {
    for (std::size_t k = 0; k < s; ++k) {
      codes[k] = static_cast<int>(cell % 3);
      cell /= 3;
    }
  };

  Eigen::VectorXd r(static_cast<Eigen::Index>(2 * cells));
  for (std::size_t pattern = 0; pattern < cells; ++pattern) {
    std::size_t rest = pattern;
    std::vector<std::size_t> in_z, in_u;
    for (std::size_t k = 0; k < s; ++k) {
      membership[k] = static_cast<int>(rest % 3);
      rest /= 3;
      if (membership[k] == 1) in_z.push_back(k);
      if (membership[k] == 2) in_u.push_back(k);
    }

    // Observable probabilities over the sources' votes.
    double p_u0 = 0.0, p_u0_zzero = 0.0, p_u0_prod_pos = 0.0;
    for (std::size_t cell = 0; cell < cells; ++cell) {
      decode(cell);
      bool u_zero = true;
      for (auto k : in_u) u_zero = u_zero && codes[k] == 1;
      if (!u_zero) continue;
      p_u0 += q[cell];
      int product = 1;
      for (auto k : in_z) product *= code_vote(codes[k]);
      if (product == 0) p_u0_zzero += q[cell];
      if (product == 1) p_u0_prod_pos += q[cell];
    }

    r(static_cast<Eigen::Index>(rhs_position(false, membership))) = p_u0_prod_pos;

    double with_task;
    if (in_z.empty()) {
      with_task = p_u0 * p_pos;
    } else {
      // P(X = 1, U zero) for X = prod_Z lambda * Y, from E[X 1(U zero)].
      double expectation;
      if (in_u.empty()) {
        expectation = in_z.size() == s ? joint_expectation : acc.by_source.at(sources[in_z[0]]);
      } else {
        expectation = conditional[in_z[0]] * p_u0;
      }
      with_task = 0.5 * (p_u0 - p_u0_zzero + expectation);
    }
    r(static_cast<Eigen::Index>(rhs_position(true, membership))) = with_task;
  }
  return r;
}

SolvedTable solve_marginal(const TransformPair& t, const Eigen::VectorXd& r, double threshold) {
  if (r.size() != t.a.rows()) throw Error(ErrorCode::ShapeMismatch, "right-hand side length");
  const Eigen::VectorXd mu = t.a.partialPivLu().solve(r);
  SolvedTable out;
  out.probs.resize(static_cast<std::size_t>(mu.size()));
  double total = 0.0;
  for (Eigen::Index k = 0; k < mu.size(); ++k) {
    const double x = mu(k);
    if (!(x >= -threshold && x <= 1.0 + threshold)) {
      throw Error(ErrorCode::NumericalInstability,
                  "solved entry " + std::to_string(k) + " = " + std::to_string(x) +
                      " is outside [-" + std::to_string(threshold) + ", 1+" +
                      std::to_string(threshold) + "]");
    }
    const double clipped = std::clamp(x, 0.0, 1.0);
    out.clip = std::max(out.clip, std::abs(clipped - x));
    out.probs[static_cast<std::size_t>(k)] = clipped;
    total += clipped;
  }
  if (!(total > 0.0)) throw Error(ErrorCode::NumericalInstability, "solved table has no mass");
  if (out.clip > 0.0)
    for (double& p : out.probs) p /= total;
  return out;
}

FitResult recover_from_statistics(const ObservedStatistics& stats, const DependencyGraph& g,
                                  const ClassPrior& prior, const RecoveryConfig& cfg) {
  if (g.sources < 1) throw Error(ErrorCode::InvalidInput, "at least one source is required");
  FitResult fit;
  fit.graph = g;
  auto& diag = fit.diagnostics;
  const auto& m = stats.overall;

  const AugmentedGraph ag = augment_graph(g);
  const TripletPlan plan = enumerate_triplets(ag, cfg.triplet_cap, cfg.accuracy.ratio_fallback);
  const Magnitudes mags = aggregate_accuracies(plan, m, g.assignment, cfg.accuracy);
  fit.accuracies = resolve_signs(mags, m, plan, ag, cfg.signs);
  diag.triplet_counts = mags.triplets_used;
  diag.warnings = mags.warnings;
  diag.sign_tie = fit.accuracies.sign_tie;
  if (diag.sign_tie) diag.warnings.push_back("sign tie: accuracies sum to zero, chose positive");
  for (int i = 0; i < g.sources; ++i)
    if (mags.signed_[i]) diag.ratio_fallback.push_back(i);

  fit.tree = build_junction_tree(g);
  const TransformPair transforms[2] = {build_transform(1), build_transform(2)};

  std::map<std::pair<int, int>, double> conditional_cache;
  auto conditional = [&](int source, int abstainer) {
    const auto key = std::make_pair(source, abstainer);
    if (auto it = conditional_cache.find(key); it != conditional_cache.end()) return it->second;
    double value = fit.accuracies.by_source[source];
    const MomentEstimates* restricted = stats.conditioned_on(abstainer);
    try {
      if (!restricted) {
        throw Error(ErrorCode::TooFewAbstainRows, "no abstain-conditioned statistics collected");
      }
      value = conditional_accuracy(abstainer, source, *restricted, plan, fit.accuracies,
                                   cfg.accuracy);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::TooFewAbstainRows && e.code() != ErrorCode::NoUsableTriplet) throw;
      diag.conditional_fallback.push_back(source);
      diag.warnings.push_back("source " + std::to_string(source + 1) +
                              ": using the unconditional accuracy given source " +
                              std::to_string(abstainer + 1) + " abstains (" + e.detail() + ")");
    }
    conditional_cache[key] = value;
    return value;
  };

  auto solve_table = [&](const std::vector<int>& vertices, double& clip) {
    std::vector<int> tasks, sources;
    split_vertices(g, vertices, tasks, sources);
    if (sources.empty()) {
      MarginalTable t = MarginalTable::zeros(tasks, {});
      t.probs = prior.marginal(tasks);
      clip = 0.0;
      return t;
    }
    if (tasks.size() != 1) {
      throw Error(ErrorCode::UnsupportedClique, "clique " + clique_name(g, vertices) +
                                                    " mixes several tasks with sources");
    }
    if (sources.size() > 2) {
      throw Error(ErrorCode::UnsupportedCliqueSize,
                  "clique " + clique_name(g, vertices) + " has more than two sources");
    }
    try {
      std::array<double, 2> cond{};
      if (sources.size() == 2) {
        cond[0] = conditional(sources[0], sources[1]);
        cond[1] = conditional(sources[1], sources[0]);
      }
      const auto r = assemble_rhs(tasks[0], sources, stats, fit.accuracies, prior, cond);
      auto solved = solve_marginal(transforms[sources.size() - 1], r, cfg.instability);
      clip = solved.clip;
      MarginalTable t = MarginalTable::zeros(tasks, sources);
      t.probs = std::move(solved.probs);
      return t;
    } catch (const Error& e) {
      throw Error(e.code(), "clique " + clique_name(g, vertices) + ": " + e.detail());
    }
  };

  auto& params = fit.params;
  params.tasks = g.tasks;
  params.sources = g.sources;
  for (const auto& clique : fit.tree.cliques) {
    double clip = 0.0;
    params.cliques.push_back(solve_table(clique, clip));
    diag.clique_clip.push_back(clip);
  }
  for (const auto& sep : fit.tree.separators) {
    double clip = 0.0;
    params.separators.push_back(solve_table(sep.vertices, clip));
    params.separator_degree.push_back(sep.degree);
    diag.separator_clip.push_back(clip);
  }
  return fit;
}

FitResult recover_parameters(const LabelMatrix& labels, const DependencyGraph& g,
                             const ClassPrior& prior, const RecoveryConfig& cfg) {
  const DependencyGraph valid = validate_graph(g);
  if (static_cast<int>(labels.sources()) != valid.sources) {
    throw Error(ErrorCode::ShapeMismatch, "label matrix has " + std::to_string(labels.sources()) +
                                              " columns, graph has " +
                                              std::to_string(valid.sources) + " sources");
  }
  const auto augmented = augment_matrix(labels, cfg.policy);
  SufficientStats stats(labels.sources(), StatsLayout::for_graph(valid));
  stats.add_matrix(augmented);
  return recover_from_statistics(stats.finalize(prior, valid), valid, prior, cfg);
}

}  // namespace trilabel
