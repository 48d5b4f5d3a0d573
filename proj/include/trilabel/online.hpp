#pragma once

#include <cstddef>
#include <deque>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "trilabel/augment.hpp"
#include "trilabel/graph.hpp"
#include "trilabel/inference.hpp"
#include "trilabel/moments.hpp"
#include "trilabel/oracle.hpp"
#include "trilabel/prior.hpp"
#include "trilabel/recovery.hpp"

namespace trilabel {

struct OnlineConfig {
  RecoveryConfig recovery;              // the abstain policy is forced to alternating
  std::size_t window = 0;               // 0 keeps every row (cumulative estimation)
  std::optional<std::size_t> warmup;    // default max(100, 10 m)
  std::size_t audit_every = 0;          // recompute sums from the buffer every k steps
};

/// Immutable per-step model snapshot.
struct OnlineModel {
  FitResult fit;
  LabelModel model;
};

struct StepResult {
  std::vector<double> posterior;  // P(Y_d = 1 | row) per task
  bool warmup = false;
  bool stale = false;             // the last successful model was reused
  std::string diagnostic;
  std::shared_ptr<const OnlineModel> model;  // null during warmup or before any fit
};

/// Rolling-window re-estimation: each step adds the row's augmented form to
/// the running sums, evicts the row that left the window, refits, and labels
/// the row under the refit model.
class OnlineLabelModel {
 public:
  OnlineLabelModel(const DependencyGraph& g, OnlineConfig cfg);

  StepResult step(std::span<const Vote> votes, const ClassPrior& prior);

  std::size_t seen() const noexcept { return seen_; }
  std::size_t warmup() const noexcept { return warmup_; }
  const DependencyGraph& graph() const noexcept { return graph_; }
  const SufficientStats& stats() const noexcept { return stats_; }

  // Buffered augmented rows, oldest first.
  AugmentedLabelMatrix window_rows() const;

  // True when the running sums equal a fresh accumulation over the buffer.
  bool audit() const;

 private:
  DependencyGraph graph_;
  OnlineConfig cfg_;
  std::size_t warmup_;
  RowAugmenter augmenter_;
  SufficientStats stats_;
  std::deque<std::vector<std::int8_t>> buffer_;
  std::size_t seen_ = 0;
  std::shared_ptr<const OnlineModel> last_;
};

/// Mean parameter error of windowed estimation on a drifting star stream.
struct SweepPoint {
  std::size_t window = 0;
  double error = 0.0;        // mean over post-warmup steps of ||mu_hat - mu_t||_2
  double label_error = 0.0;  // mean |P(Y=1|row) - 1(Y=1)|
};

struct SweepResult {
  std::vector<SweepPoint> points;
  std::size_t best_window = 0;
};

SweepResult sweep_window(const StarModel& base, const std::vector<int>& flip, std::size_t period,
                         std::size_t steps, const std::vector<std::size_t>& windows,
                         std::uint64_t seed, const OnlineConfig& cfg = {});

}  // namespace trilabel
