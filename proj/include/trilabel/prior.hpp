#pragma once

#include <map>
#include <utility>
#include <vector>

namespace trilabel {

/// User-provided class prior P(Y) over the tasks.
///
/// Either an exact joint table over {-1,+1}^D (D <= 20), indexed with bit t
/// set when task t is -1, or factorized per-task means plus pairwise means.
class ClassPrior {
 public:
  static constexpr int kMaxJointTasks = 20;

  static ClassPrior balance(double p_positive);
  static ClassPrior joint(int tasks, std::vector<double> table);
  static ClassPrior independent(const std::vector<double>& p_positive);
  static ClassPrior factorized(std::vector<double> means,
                               std::map<std::pair<int, int>, double> pair_means);

  int tasks() const noexcept { return tasks_; }
  bool has_joint() const noexcept { return !joint_.empty(); }
  const std::vector<double>& joint_table() const noexcept { return joint_; }

  double mean(int task) const;  // E[Y_d]
  double p_positive(int task) const { return 0.5 * (1.0 + mean(task)); }
  double pair_mean(int a, int b) const;  // E[Y_a Y_b]

  // Probability of a full task configuration (y_t in {-1,+1}).
  double probability(const std::vector<int>& y) const;

  // Marginal table over a sorted task subset. Entry index has bit k set when
  // the k-th listed task is -1, so the first task alternates fastest.
  std::vector<double> marginal(const std::vector<int>& task_subset) const;

 private:
  int tasks_ = 0;
  std::vector<double> joint_;
  std::vector<double> means_;
  std::map<std::pair<int, int>, double> pair_means_;
};

}  // namespace trilabel
