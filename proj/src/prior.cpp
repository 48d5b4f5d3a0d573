#include "trilabel/prior.hpp"

#include <cmath>
#include <string>

#include "trilabel/error.hpp"

namespace trilabel {

namespace {

int task_value(std::size_t index, int task) { return (index >> task) & 1U ? -1 : 1; }

}  // namespace

ClassPrior ClassPrior::balance(double p_positive) {
  if (!(p_positive >= 0.0 && p_positive <= 1.0)) {
    throw Error(ErrorCode::InvalidInput, "class balance must lie in [0, 1]");
  }
  return joint(1, {p_positive, 1.0 - p_positive});
}

ClassPrior ClassPrior::joint(int tasks, std::vector<double> table) {
  if (tasks < 1 || tasks > kMaxJointTasks) {
    throw Error(ErrorCode::InvalidInput, "joint prior supports 1.." +
                                             std::to_string(kMaxJointTasks) + " tasks");
  }
  if (table.size() != (std::size_t{1} << tasks)) {
    throw Error(ErrorCode::ShapeMismatch, "joint prior over " + std::to_string(tasks) +
                                              " tasks needs " +
                                              std::to_string(std::size_t{1} << tasks) + " entries");
  }
  double total = 0.0;
  for (double p : table) {
    if (!(p >= 0.0)) throw Error(ErrorCode::InvalidInput, "negative prior probability");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw Error(ErrorCode::InvalidInput, "joint prior sums to " + std::to_string(total));
  }
  ClassPrior prior;
  prior.tasks_ = tasks;
  prior.joint_ = std::move(table);
  prior.means_.assign(tasks, 0.0);
  for (std::size_t idx = 0; idx < prior.joint_.size(); ++idx)
    for (int t = 0; t < tasks; ++t) prior.means_[t] += task_value(idx, t) * prior.joint_[idx];
  return prior;
}

ClassPrior ClassPrior::independent(const std::vector<double>& p_positive) {
  const int tasks = static_cast<int>(p_positive.size());
  std::vector<double> table(std::size_t{1} << tasks, 1.0);
  for (std::size_t idx = 0; idx < table.size(); ++idx)
    for (int t = 0; t < tasks; ++t)
      table[idx] *= task_value(idx, t) == 1 ? p_positive[t] : 1.0 - p_positive[t];
  return joint(tasks, std::move(table));
}

ClassPrior ClassPrior::factorized(std::vector<double> means,
                                  std::map<std::pair<int, int>, double> pair_means) {
  for (double mu : means)
    if (!(mu >= -1.0 && mu <= 1.0)) throw Error(ErrorCode::InvalidInput, "task mean outside [-1, 1]");
  for (auto& [key, mu] : pair_means)
    if (!(mu >= -1.0 && mu <= 1.0)) throw Error(ErrorCode::InvalidInput, "pair mean outside [-1, 1]");
  ClassPrior prior;
  prior.tasks_ = static_cast<int>(means.size());
  prior.means_ = std::move(means);
  prior.pair_means_ = std::move(pair_means);
  return prior;
}

double ClassPrior::mean(int task) const { return means_.at(task); }

double ClassPrior::pair_mean(int a, int b) const {
  if (a > b) std::swap(a, b);
  if (has_joint()) {
    double acc = 0.0;
    for (std::size_t idx = 0; idx < joint_.size(); ++idx)
      acc += task_value(idx, a) * task_value(idx, b) * joint_[idx];
    return acc;
  }
  auto it = pair_means_.find({a, b});
  return it != pair_means_.end() ? it->second : means_[a] * means_[b];
}

double ClassPrior::probability(const std::vector<int>& y) const {
  if (!has_joint()) throw Error(ErrorCode::InvalidInput, "factorized prior has no joint table");
  std::size_t idx = 0;
  for (int t = 0; t < tasks_; ++t)
    if (y[t] == -1) idx |= std::size_t{1} << t;
  return joint_[idx];
}

std::vector<double> ClassPrior::marginal(const std::vector<int>& subset) const {
  const std::size_t k = subset.size();
  std::vector<double> out(std::size_t{1} << k, 0.0);
  if (has_joint()) {
    for (std::size_t idx = 0; idx < joint_.size(); ++idx) {
      std::size_t sub = 0;
      for (std::size_t s = 0; s < k; ++s)
        if ((idx >> subset[s]) & 1U) sub |= std::size_t{1} << s;
      out[sub] += joint_[idx];
    }
    return out;
  }
  if (k == 0) return {1.0};
  if (k == 1) return {0.5 * (1 + means_[subset[0]]), 0.5 * (1 - means_[subset[0]])};
  if (k == 2) {
    const double ma = means_[subset[0]], mb = means_[subset[1]];
    const double mab = pair_mean(subset[0], subset[1]);
    for (std::size_t sub = 0; sub < 4; ++sub) {
      const int ya = sub & 1U ? -1 : 1, yb = sub & 2U ? -1 : 1;
      out[sub] = 0.25 * (1 + ya * ma + yb * mb + ya * yb * mab);
    }
    return out;
  }
  throw Error(ErrorCode::InvalidInput, "factorized prior cannot produce a marginal over " +
                                           std::to_string(k) + " tasks");
}

}  // namespace trilabel
