#include "trilabel/moments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "trilabel/error.hpp"

namespace trilabel {

namespace {

constexpr std::size_t kChunkRows = 2048;

int code_of_pair(std::span<const std::int8_t> row, int source) {
  return vote_code(pair_vote(row[2 * source], row[2 * source + 1]));
}

Eigen::MatrixXd symmetric_from_lower(const Eigen::MatrixXd& lower, double scale) {
  const auto n = lower.rows();
  Eigen::MatrixXd out(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b <= a; ++b) {
      out(a, b) = out(b, a) = lower(a, b) * scale;
    }
  }
  return out;
}

double aggregate(std::vector<double> values, Aggregation method) {
  std::sort(values.begin(), values.end());
  if (method == Aggregation::Median) {
    const std::size_t n = values.size();
    return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
  }
  double total = 0.0;
  for (double v : values) total += v;
  return total / static_cast<double>(values.size());
}

double sign_of(double x) { return x < 0 ? -1.0 : 1.0; }

// Loads rows [begin, end) of the augmented matrix into a dense block.
void load_chunk(const AugmentedLabelMatrix& a, std::size_t begin, std::size_t end,
                Eigen::MatrixXd& block) {
  const auto cols = static_cast<Eigen::Index>(a.columns());
  block.resize(static_cast<Eigen::Index>(end - begin), cols);
  for (std::size_t r = begin; r < end; ++r) {
    const auto row = a.row(r);
    for (Eigen::Index c = 0; c < cols; ++c) block(static_cast<Eigen::Index>(r - begin), c) = row[c];
  }
}

void set_prior_moments(MomentEstimates& m, const ClassPrior& prior,
                       const std::vector<Edge>& task_pairs) {
  m.task_means.resize(prior.tasks());
  for (int d = 0; d < prior.tasks(); ++d) m.task_means[d] = prior.mean(d);
  for (auto [d, e] : task_pairs) m.task_pair_means[{d, e}] = prior.pair_mean(d, e);
}

}  // namespace

StatsLayout StatsLayout::for_graph(const DependencyGraph& g) {
  StatsLayout layout;
  layout.pairs = g.source_edges;
  std::sort(layout.pairs.begin(), layout.pairs.end());
  for (auto [i, j] : layout.pairs) {
    layout.conditioning.push_back(i);
    layout.conditioning.push_back(j);
  }
  std::sort(layout.conditioning.begin(), layout.conditioning.end());
  layout.conditioning.erase(std::unique(layout.conditioning.begin(), layout.conditioning.end()),
                            layout.conditioning.end());
  return layout;
}

const std::array<double, 9>& ObservedStatistics::pair(int i, int j) const {
  const auto it = std::lower_bound(pairs.begin(), pairs.end(), Edge{i, j});
  if (it == pairs.end() || *it != Edge{i, j}) {
    throw Error(ErrorCode::InvalidInput, "no joint vote table tracked for sources " +
                                             std::to_string(i + 1) + "," + std::to_string(j + 1));
  }
  return pair_probs[it - pairs.begin()];
}

const MomentEstimates* ObservedStatistics::conditioned_on(int source) const {
  const auto it = std::lower_bound(conditioning.begin(), conditioning.end(), source);
  if (it == conditioning.end() || *it != source) return nullptr;
  return &given_abstain[it - conditioning.begin()];
}

SufficientStats::SufficientStats(std::size_t sources, StatsLayout layout)
    : sources_(sources), layout_(std::move(layout)) {
  const auto cols = static_cast<Eigen::Index>(2 * sources);
  cross_ = Eigen::MatrixXd::Zero(cols, cols);
  first_ = Eigen::VectorXd::Zero(cols);
  votes_.assign(sources, {0.0, 0.0, 0.0});
  pair_votes_.assign(layout_.pairs.size(), {});
  restricted_.resize(layout_.conditioning.size());
  for (auto& r : restricted_) {
    r.cross = Eigen::MatrixXd::Zero(cols, cols);
    r.first = Eigen::VectorXd::Zero(cols);
  }
}

void SufficientStats::update(std::span<const std::int8_t> row, double w, int direction) {
  if (row.size() != 2 * sources_) throw Error(ErrorCode::ShapeMismatch, "augmented row width");
  const double s = direction * w;
  const auto cols = static_cast<Eigen::Index>(row.size());
  auto accumulate = [&](Eigen::MatrixXd& cross, Eigen::VectorXd& first) {
    for (Eigen::Index a = 0; a < cols; ++a) {
      const double va = s * row[a];
      first(a) += va;
      for (Eigen::Index b = 0; b <= a; ++b) cross(a, b) += va * row[b];
    }
  };
  weight_ += s;
  if (w > 0) rows_ += direction;
  accumulate(cross_, first_);
  for (std::size_t i = 0; i < sources_; ++i) votes_[i][code_of_pair(row, static_cast<int>(i))] += s;
  for (std::size_t p = 0; p < layout_.pairs.size(); ++p) {
    const auto [i, j] = layout_.pairs[p];
    pair_votes_[p][code_of_pair(row, i) * 3 + code_of_pair(row, j)] += s;
  }
  for (std::size_t c = 0; c < layout_.conditioning.size(); ++c) {
    if (code_of_pair(row, layout_.conditioning[c]) != 1) continue;
    auto& r = restricted_[c];
    r.weight += s;
    if (w > 0) r.rows += direction;
    accumulate(r.cross, r.first);
  }
}

void SufficientStats::add(std::span<const std::int8_t> row, double weight) { update(row, weight, +1); }

void SufficientStats::remove(std::span<const std::int8_t> row, double weight) {
  update(row, weight, -1);
}

void SufficientStats::add_matrix(const AugmentedLabelMatrix& a, std::span<const double> weights) {
  if (a.sources() != sources_) throw Error(ErrorCode::ShapeMismatch, "augmented matrix width");
  if (!weights.empty() && weights.size() != a.rows()) {
    throw Error(ErrorCode::ShapeMismatch, "one weight per row is required");
  }
  const bool weighted = !weights.empty();
  Eigen::MatrixXd block, sub;
  Eigen::VectorXd w, sub_w;
  for (std::size_t begin = 0; begin < a.rows(); begin += kChunkRows) {
    const std::size_t end = std::min(a.rows(), begin + kChunkRows);
    const auto len = static_cast<Eigen::Index>(end - begin);
    load_chunk(a, begin, end, block);
    w = weighted ? Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(weights.data() + begin, len))
                 : Eigen::VectorXd::Ones(len);

    auto absorb = [&](const Eigen::MatrixXd& x, const Eigen::VectorXd& wx, Eigen::MatrixXd& cross,
                      Eigen::VectorXd& first) {
      if (weighted) {
        const Eigen::MatrixXd scaled = x.array().colwise() * wx.array().sqrt();
        cross.selfadjointView<Eigen::Lower>().rankUpdate(scaled.transpose());
      } else {
        cross.selfadjointView<Eigen::Lower>().rankUpdate(x.transpose());
      }
      first.noalias() += x.transpose() * wx;
    };
    absorb(block, w, cross_, first_);
    weight_ += w.sum();
    for (Eigen::Index r = 0; r < len; ++r) {
      if (w(r) <= 0) continue;
      ++rows_;
    }

    for (std::size_t r = begin; r < end; ++r) {
      const auto row = a.row(r);
      const double wr = w(static_cast<Eigen::Index>(r - begin));
      for (std::size_t i = 0; i < sources_; ++i) votes_[i][code_of_pair(row, static_cast<int>(i))] += wr;
      for (std::size_t p = 0; p < layout_.pairs.size(); ++p) {
        const auto [i, j] = layout_.pairs[p];
        pair_votes_[p][code_of_pair(row, i) * 3 + code_of_pair(row, j)] += wr;
      }
    }

    for (std::size_t c = 0; c < layout_.conditioning.size(); ++c) {
      const int source = layout_.conditioning[c];
      std::vector<Eigen::Index> keep;
      for (std::size_t r = begin; r < end; ++r)
        if (code_of_pair(a.row(r), source) == 1) keep.push_back(static_cast<Eigen::Index>(r - begin));
      if (keep.empty()) continue;
      sub.resize(static_cast<Eigen::Index>(keep.size()), block.cols());
      sub_w.resize(static_cast<Eigen::Index>(keep.size()));
      for (std::size_t k = 0; k < keep.size(); ++k) {
        sub.row(static_cast<Eigen::Index>(k)) = block.row(keep[k]);
        sub_w(static_cast<Eigen::Index>(k)) = w(keep[k]);
      }
      auto& restricted = restricted_[c];
      absorb(sub, sub_w, restricted.cross, restricted.first);
      restricted.weight += sub_w.sum();
      for (Eigen::Index k = 0; k < sub_w.size(); ++k)
        if (sub_w(k) > 0) ++restricted.rows;
    }
  }
}

ObservedStatistics SufficientStats::finalize(const ClassPrior& prior, const DependencyGraph& g) const {
  if (prior.tasks() != g.tasks) {
    throw Error(ErrorCode::ShapeMismatch, "prior covers " + std::to_string(prior.tasks()) +
                                              " tasks, graph has " + std::to_string(g.tasks));
  }
  if (static_cast<int>(sources_) != g.sources) {
    throw Error(ErrorCode::ShapeMismatch, "statistics cover " + std::to_string(sources_) +
                                              " sources, graph has " + std::to_string(g.sources));
  }
  if (weight_ <= 0) throw Error(ErrorCode::InvalidInput, "no rows to estimate moments from");
  ObservedStatistics out;
  auto& m = out.overall;
  m.sources = sources_;
  m.weight = weight_;
  m.rows = static_cast<std::size_t>(rows_);
  m.second = symmetric_from_lower(cross_, 1.0 / weight_);
  m.first = first_ / weight_;
  m.vote_probs.resize(sources_);
  for (std::size_t i = 0; i < sources_; ++i)
    for (int b = 0; b < 3; ++b) m.vote_probs[i][b] = votes_[i][b] / weight_;
  set_prior_moments(m, prior, g.task_edges);

  out.pairs = layout_.pairs;
  out.pair_probs = pair_votes_;
  for (auto& table : out.pair_probs)
    for (double& p : table) p /= weight_;

  out.conditioning = layout_.conditioning;
  for (const auto& r : restricted_) {
    MomentEstimates cm;
    cm.sources = sources_;
    cm.weight = r.weight;
    cm.rows = static_cast<std::size_t>(r.rows);
    const double scale = r.weight > 0 ? 1.0 / r.weight : 0.0;
    cm.second = symmetric_from_lower(r.cross, scale);
    cm.first = r.first * scale;
    cm.task_means = m.task_means;
    out.given_abstain.push_back(std::move(cm));
  }
  return out;
}

bool SufficientStats::operator==(const SufficientStats& o) const {
  if (sources_ != o.sources_ || !(layout_ == o.layout_) || weight_ != o.weight_ ||
      rows_ != o.rows_ || cross_ != o.cross_ || first_ != o.first_ || votes_ != o.votes_ ||
      pair_votes_ != o.pair_votes_ || restricted_.size() != o.restricted_.size()) {
    return false;
  }
  for (std::size_t c = 0; c < restricted_.size(); ++c) {
    const auto &a = restricted_[c], &b = o.restricted_[c];
    if (a.weight != b.weight || a.rows != b.rows || a.cross != b.cross || a.first != b.first)
      return false;
  }
  return true;
}

MomentEstimates estimate_moments(const AugmentedLabelMatrix& a, const ClassPrior& prior,
                                 std::span<const double> weights) {
  SufficientStats stats(a.sources(), {});
  stats.add_matrix(a, weights);
  DependencyGraph g;
  g.tasks = prior.tasks();
  g.sources = static_cast<int>(a.sources());
  for (int d = 0; d < g.tasks; ++d)
    for (int e = d + 1; e < g.tasks; ++e) g.task_edges.emplace_back(d, e);
  return stats.finalize(prior, g).overall;
}

TripletPlan enumerate_triplets(const AugmentedGraph& g, std::size_t cap, bool fallback_enabled) {
  TripletPlan plan;
  plan.per_source.resize(g.sources);
  for (int i = 0; i < g.sources; ++i) {
    std::vector<int> helpers;
    for (int j = 0; j < g.sources; ++j) {
      if (j != i && g.assignment[j] == g.assignment[i] && !g.sources_dependent(i, j))
        helpers.push_back(j);
    }
    auto& list = plan.per_source[i];
    for (std::size_t a = 0; a < helpers.size() && list.size() < cap; ++a) {
      for (std::size_t b = a + 1; b < helpers.size() && list.size() < cap; ++b) {
        if (!g.sources_dependent(helpers[a], helpers[b])) list.push_back({i, helpers[a], helpers[b]});
      }
    }
    if (list.empty()) plan.without_triplets.push_back(i);
  }
  if (g.sources > 0 && plan.solvable() == 0 && !fallback_enabled) {
    throw Error(ErrorCode::InsufficientIndependence,
                "no source has two conditionally independent partners; enable the ratio fallback");
  }
  return plan;
}

std::array<double, 3> solve_triplet(const Eigen::MatrixXd& second, const Triplet& t, double eps_den,
                                    double eps_acc) {
  const double mij = second(2 * t.i, 2 * t.j);
  const double mik = second(2 * t.i, 2 * t.k);
  const double mjk = second(2 * t.j, 2 * t.k);
  if (std::abs(mij) < eps_den || std::abs(mik) < eps_den || std::abs(mjk) < eps_den) {
    throw Error(ErrorCode::DegenerateTriplet,
                "triplet (" + std::to_string(t.i + 1) + "," + std::to_string(t.j + 1) + "," +
                    std::to_string(t.k + 1) + ") has a near-zero pairwise moment");
  }
  auto clamp = [&](double x) { return std::clamp(x, eps_acc, 1.0); };
  return {clamp(std::sqrt(std::abs(mij * mik / mjk))), clamp(std::sqrt(std::abs(mij * mjk / mik))),
          clamp(std::sqrt(std::abs(mik * mjk / mij)))};
}

double ratio_accuracy(int source, int task, const MomentEstimates& m, double eps_prior) {
  const double mean = m.task_means.at(task);
  if (std::abs(mean) < eps_prior) {
    throw Error(ErrorCode::PriorNearZero, "E[Y" + std::to_string(task + 1) + "] = " +
                                              std::to_string(mean) + " is too close to zero for source " +
                                              std::to_string(source + 1));
  }
  return std::clamp(m.first(2 * source) / mean, -1.0, 1.0);
}

Magnitudes aggregate_accuracies(const TripletPlan& plan, const MomentEstimates& m,
                                const std::vector<int>& assignment, const AccuracyOptions& opt) {
  const int sources = static_cast<int>(plan.per_source.size());
  Magnitudes out;
  out.value.assign(sources, 0.0);
  out.triplets_used.assign(sources, 0);
  out.signed_.assign(sources, std::nullopt);
  std::vector<bool> solved(sources, false);

  auto solve_all = [&](int i, const std::vector<Triplet>& list) {
    std::vector<double> values;
    for (const auto& t : list) {
      try {
        values.push_back(solve_triplet(m.second, t, opt.eps_den, opt.eps_acc)[0]);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::DegenerateTriplet) throw;
      }
    }
    if (values.empty()) return;
    out.triplets_used[i] = static_cast<int>(values.size());
    out.value[i] = aggregate(std::move(values), opt.method);
    solved[i] = true;
  };
  auto candidates = [&](int i) {
    const auto& list = plan.per_source[i];
    if (!opt.single_triplet || list.empty()) return list;
    return std::vector<Triplet>{list[*opt.single_triplet % list.size()]};
  };

  if (opt.greedy) {
    std::vector<bool> done(sources, false);
    for (int i = 0; i < sources; ++i) {
      if (done[i]) continue;
      for (const auto& t : plan.per_source[i]) {
        try {
          const auto mags = solve_triplet(m.second, t, opt.eps_den, opt.eps_acc);
          const int members[3] = {t.i, t.j, t.k};
          for (int r = 0; r < 3; ++r) {
            out.value[members[r]] = mags[r];
            out.triplets_used[members[r]] = 1;
            solved[members[r]] = done[members[r]] = true;
          }
          break;
        } catch (const Error& e) {
          if (e.code() != ErrorCode::DegenerateTriplet) throw;
        }
      }
    }
  } else {
    for (int i = 0; i < sources; ++i) solve_all(i, candidates(i));
    if (opt.isolate_lowest && !opt.single_triplet) {
      int lowest = -1;
      for (int i = 0; i < sources; ++i)
        if (solved[i] && (lowest < 0 || out.value[i] < out.value[lowest])) lowest = i;
      if (lowest >= 0) {
        for (int i = 0; i < sources; ++i) {
          if (i == lowest || !solved[i]) continue;
          std::vector<Triplet> filtered;
          for (const auto& t : plan.per_source[i])
            if (t.j != lowest && t.k != lowest) filtered.push_back(t);
          if (filtered.empty()) continue;
          const auto before = out.value[i];
          const auto before_count = out.triplets_used[i];
          solved[i] = false;
          solve_all(i, filtered);
          if (!solved[i]) {
            out.value[i] = before;
            out.triplets_used[i] = before_count;
            solved[i] = true;
          }
        }
      }
    }
  }

  for (int i = 0; i < sources; ++i) {
    if (solved[i]) continue;
    if (!opt.ratio_fallback) {
      throw Error(ErrorCode::NoUsableTriplet,
                  "source " + std::to_string(i + 1) +
                      " has no usable triplet and the ratio fallback is disabled");
    }
    const double a = ratio_accuracy(i, assignment[i], m, opt.eps_prior);
    out.value[i] = std::abs(a);
    out.signed_[i] = a;
    if (a == 0.0) out.warnings.push_back("source " + std::to_string(i + 1) + " has zero accuracy");
  }
  return out;
}

Accuracies resolve_signs(const Magnitudes& mags, const MomentEstimates& m, const TripletPlan& plan,
                         const AugmentedGraph& g, const SignStrategy& strategy) {
  (void)plan;
  const int sources = g.sources;
  Accuracies out;
  out.by_source.assign(sources, 0.0);
  std::vector<double> relative(sources, 0.0);
  std::vector<bool> visited(sources, false);

  for (int task = 0; task < g.tasks; ++task) {
    std::vector<int> members;
    for (int i = 0; i < sources; ++i)
      if (g.assignment[i] == task) members.push_back(i);

    for (int root : members) {
      if (visited[root]) continue;
      // Prim's maximum spanning tree over conditionally independent pairs; the
      // sign of each tree edge fixes a_i a_j = E[v_i v_j].
      std::vector<int> component{root};
      visited[root] = true;
      relative[root] = 1.0;
      while (true) {
        int best_from = -1, best_to = -1;
        double best = 0.0;
        for (int u : component) {
          for (int v : members) {
            if (visited[v] || g.sources_dependent(u, v)) continue;
            const double w = std::abs(m.second(2 * u, 2 * v));
            if (w > best) {
              best = w;
              best_from = u;
              best_to = v;
            }
          }
        }
        if (best_to < 0) break;
        visited[best_to] = true;
        relative[best_to] = relative[best_from] * sign_of(m.second(2 * best_from, 2 * best_to));
        component.push_back(best_to);
      }

      double orientation = 0.0;
      for (int i : component) {
        if (mags.signed_[i] && *mags.signed_[i] != 0.0) {
          orientation = sign_of(*mags.signed_[i]) * relative[i];
          break;
        }
      }
      if (orientation == 0.0 && !strategy.anchors.empty()) {
        for (const auto& anchor : strategy.anchors) {
          if (std::find(component.begin(), component.end(), anchor.source) != component.end()) {
            orientation = anchor.sign * relative[anchor.source];
            break;
          }
        }
        if (orientation == 0.0) {
          throw Error(ErrorCode::AnchorUnreachable,
                      "no anchor reaches source " + std::to_string(root + 1) + " of task Y" +
                          std::to_string(task + 1));
        }
      }
      if (orientation == 0.0) {
        double total = 0.0;
        for (int i : component) total += relative[i] * mags.value[i];
        if (total == 0.0) out.sign_tie = true;
        orientation = total < 0.0 ? -1.0 : 1.0;
      }
      for (int i : component) {
        out.by_source[i] = mags.signed_[i] ? *mags.signed_[i]
                                           : orientation * relative[i] * mags.value[i];
      }
    }
  }
  return out;
}

double conditional_accuracy(int i, int j, const MomentEstimates& restricted, const TripletPlan& plan,
                            const Accuracies& unconditional, const AccuracyOptions& opt) {
  if (restricted.rows < opt.n_min) {
    throw Error(ErrorCode::TooFewAbstainRows,
                "source " + std::to_string(i + 1) + " abstains on " +
                    std::to_string(restricted.rows) + " rows, need " + std::to_string(opt.n_min));
  }
  std::vector<double> values;
  for (const auto& t : plan.per_source[j]) {
    if (t.j == i || t.k == i) continue;
    try {
      const double mag = solve_triplet(restricted.second, t, opt.eps_den, opt.eps_acc)[0];
      const double mj = restricted.second(2 * j, 2 * t.j), mk = restricted.second(2 * j, 2 * t.k);
      const int helper = std::abs(mj) >= std::abs(mk) ? t.j : t.k;
      const double sign = sign_of(restricted.second(2 * j, 2 * helper)) *
                          sign_of(unconditional.by_source[helper]);
      values.push_back(sign * mag);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DegenerateTriplet) throw;
    }
  }
  if (values.empty()) {
    throw Error(ErrorCode::NoUsableTriplet, "no usable triplet for source " + std::to_string(j + 1) +
                                                " on rows where source " + std::to_string(i + 1) +
                                                " abstains");
  }
  return aggregate(std::move(values), opt.method);
}

double conditional_accuracy(int i, int j, const AugmentedLabelMatrix& a, const TripletPlan& plan,
                            const ClassPrior& prior, const Accuracies& unconditional,
                            const AccuracyOptions& opt) {
  AugmentedLabelMatrix subset(0, a.sources());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const auto row = a.row(r);
    if (row[2 * i] == row[2 * i + 1]) subset.append_row(row);
  }
  MomentEstimates restricted;
  restricted.sources = a.sources();
  if (subset.rows() > 0) restricted = estimate_moments(subset, prior);
  return conditional_accuracy(i, j, restricted, plan, unconditional, opt);
}

}  // namespace trilabel
