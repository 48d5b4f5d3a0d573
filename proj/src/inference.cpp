#include "trilabel/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "trilabel/error.hpp"

namespace trilabel {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::size_t factor_index(const std::vector<int>& tasks, const std::vector<int>& sources,
                         std::size_t config, std::span<const Vote> votes) {
  std::size_t idx = 0;
  for (std::size_t k = 0; k < tasks.size(); ++k)
    if ((config >> tasks[k]) & 1U) idx |= std::size_t{1} << k;
  std::size_t stride = std::size_t{1} << tasks.size();
  for (int s : sources) {
    idx += static_cast<std::size_t>(vote_code(votes[s])) * stride;
    stride *= 3;
  }
  return idx;
}

void check_votes(std::span<const Vote> votes, int sources) {
  if (static_cast<int>(votes.size()) != sources) {
    throw Error(ErrorCode::ShapeMismatch, "vote row has " + std::to_string(votes.size()) +
                                              " entries, model has " + std::to_string(sources) +
                                              " sources");
  }
}

}  // namespace

double joint_probability(const LabelModelParameters& mu, std::span<const int> y,
                         std::span<const Vote> votes, bool* zero_separator) {
  check_votes(votes, mu.sources);
  if (static_cast<int>(y.size()) != mu.tasks) throw Error(ErrorCode::ShapeMismatch, "task row");
  if (zero_separator) *zero_separator = false;
  double log_p = 0.0;
  bool zero_clique = false;
  for (const auto& c : mu.cliques) {
    const double p = c.lookup(y, votes);
    if (p <= 0.0) zero_clique = true;
    else log_p += std::log(p);
  }
  for (std::size_t s = 0; s < mu.separators.size(); ++s) {
    const double p = mu.separators[s].lookup(y, votes);
    const int power = mu.separator_degree[s] - 1;
    if (power == 0) continue;
    if (p <= 0.0) {
      if (zero_separator) *zero_separator = true;
      return 0.0;
    }
    log_p -= power * std::log(p);
  }
  return zero_clique ? 0.0 : std::exp(log_p);
}

LabelModel::LabelModel(const LabelModelParameters& mu) : tasks_(mu.tasks), sources_(mu.sources) {
  if (tasks_ < 1 || tasks_ > kMaxTasks) {
    throw Error(ErrorCode::InvalidInput, "exact inference supports 1.." + std::to_string(kMaxTasks) +
                                             " tasks");
  }
  auto add = [&](const MarginalTable& t, double exponent) {
    Factor f{t.tasks, t.sources, {}, exponent};
    f.log_probs.reserve(t.probs.size());
    for (double p : t.probs) f.log_probs.push_back(p > 0.0 ? std::log(p) : kNegInf);
    factors_.push_back(std::move(f));
  };
  for (const auto& c : mu.cliques) add(c, 1.0);
  for (std::size_t s = 0; s < mu.separators.size(); ++s) {
    const int power = mu.separator_degree[s] - 1;
    if (power > 0) add(mu.separators[s], -static_cast<double>(power));
  }
}

std::vector<double> LabelModel::posterior(std::span<const Vote> votes) const {
  check_votes(votes, sources_);
  const std::size_t configs = std::size_t{1} << tasks_;
  std::vector<double> log_joint(configs, 0.0);
  for (std::size_t y = 0; y < configs; ++y) {
    double acc = 0.0;
    for (const auto& f : factors_) {
      const double lp = f.log_probs[factor_index(f.tasks, f.sources, y, votes)];
      if (lp == kNegInf) {
        // A zero separator paired with zero cliques resolves to zero mass.
        acc = kNegInf;
        break;
      }
      acc += f.exponent * lp;
    }
    log_joint[y] = acc;
  }
  const double top = *std::max_element(log_joint.begin(), log_joint.end());
  if (top == kNegInf) {
    throw Error(ErrorCode::AllZeroLikelihood, "every task configuration has zero probability");
  }
  double total = 0.0;
  for (double& v : log_joint) total += v = std::exp(v - top);
  for (double& v : log_joint) v /= total;
  return log_joint;
}

void LabelModel::marginals(std::span<const Vote> votes, std::span<double> out) const {
  const auto post = posterior(votes);
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t y = 0; y < post.size(); ++y)
    for (int d = 0; d < tasks_; ++d)
      if (!((y >> d) & 1U)) out[d] += post[y];
}

std::vector<double> posterior(const LabelModelParameters& mu, std::span<const Vote> votes) {
  return LabelModel(mu).posterior(votes);
}

PosteriorLabels predict_proba(const LabelMatrix& labels, const LabelModelParameters& mu,
                              unsigned threads) {
  if (static_cast<int>(labels.sources()) != mu.sources) {
    throw Error(ErrorCode::ShapeMismatch, "label matrix has " + std::to_string(labels.sources()) +
                                              " columns, model has " + std::to_string(mu.sources) +
                                              " sources");
  }
  const LabelModel model(mu);
  PosteriorLabels out;
  out.rows = labels.rows();
  out.tasks = mu.tasks;
  out.p.resize(out.rows * out.tasks);
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r)
      model.marginals(labels.row(r), {out.p.data() + r * out.tasks, static_cast<std::size_t>(out.tasks)});
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(1, out.rows))));
  if (threads == 1) {
    work(0, out.rows);
    return out;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  const std::size_t chunk = (out.rows + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    const std::size_t begin = t * chunk, end = std::min(out.rows, begin + chunk);
    pool.emplace_back([&, t, begin, end] {
      try {
        work(begin, end);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

std::vector<double> prior_marginals(const ClassPrior& prior) {
  std::vector<double> out(prior.tasks());
  for (int d = 0; d < prior.tasks(); ++d) out[d] = prior.p_positive(d);
  return out;
}

LabelMatrix one_vs_all_reduction(const MulticlassLabels& labels, int cls) {
  LabelMatrix out(labels.rows, labels.sources);
  for (std::size_t r = 0; r < labels.rows; ++r) {
    for (std::size_t i = 0; i < labels.sources; ++i) {
      const int v = labels(r, i);
      out.set(r, i, static_cast<Vote>(v == 0 ? 0 : (v == cls ? 1 : -1)));
    }
  }
  return out;
}

OneVsAllResult one_vs_all(const MulticlassLabels& labels, const DependencyGraph& g,
                          const std::vector<double>& class_priors, const RecoveryConfig& cfg,
                          unsigned threads) {
  const int k = labels.classes;
  if (k < 2) throw Error(ErrorCode::InvalidInput, "one-vs-all needs at least two classes");
  if (g.tasks != 1) throw Error(ErrorCode::UnsupportedStructure, "one-vs-all needs a single task");
  if (static_cast<int>(class_priors.size()) != k) {
    throw Error(ErrorCode::ShapeMismatch, "one prior probability per class is required");
  }
  if (labels.votes.size() != labels.rows * labels.sources) {
    throw Error(ErrorCode::ShapeMismatch, "multiclass vote count does not match rows x sources");
  }
  std::vector<bool> voted(k + 1, false);
  for (int v : labels.votes) {
    if (v < 0 || v > k) {
      throw Error(ErrorCode::InvalidInput, "class vote " + std::to_string(v) + " outside 0.." +
                                               std::to_string(k));
    }
    voted[v] = true;
  }
  for (int c = 1; c <= k; ++c) {
    if (!voted[c]) {
      throw Error(ErrorCode::DegenerateClass, "class " + std::to_string(c) + " never receives a vote");
    }
  }

  OneVsAllResult out;
  out.rows = labels.rows;
  out.classes = k;
  out.probs.assign(out.rows * k, 0.0);
  const int fitted = k == 2 ? 1 : k;
  for (int c = 1; c <= fitted; ++c) {
    auto fit = recover_parameters(one_vs_all_reduction(labels, c), g,
                                  ClassPrior::balance(class_priors[c - 1]), cfg);
    const auto post = predict_proba(one_vs_all_reduction(labels, c), fit.params, threads);
    for (std::size_t r = 0; r < out.rows; ++r) out.probs[r * k + (c - 1)] = post(r, 0);
    out.models.push_back(std::move(fit));
  }
  for (std::size_t r = 0; r < out.rows; ++r) {
    double* row = out.probs.data() + r * k;
    if (k == 2) {
      row[1] = 1.0 - row[0];
      continue;
    }
    double total = 0.0;
    for (int c = 0; c < k; ++c) total += row[c];
    if (total > 0.0) {
      for (int c = 0; c < k; ++c) row[c] /= total;
    } else {
      for (int c = 0; c < k; ++c) row[c] = 1.0 / k;
    }
  }
  return out;
}

}  // namespace trilabel
