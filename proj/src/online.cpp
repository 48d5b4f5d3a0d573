#include "trilabel/online.hpp"

#include <algorithm>
#include <cmath>

#include "trilabel/error.hpp"

namespace trilabel {

OnlineLabelModel::OnlineLabelModel(const DependencyGraph& g, OnlineConfig cfg)
    : graph_(validate_graph(g)),
      cfg_(std::move(cfg)),
      warmup_(cfg_.warmup.value_or(std::max<std::size_t>(100, 10 * static_cast<std::size_t>(g.sources)))),
      augmenter_(static_cast<std::size_t>(g.sources), AbstainPolicy::alternating()),
      stats_(static_cast<std::size_t>(g.sources), StatsLayout::for_graph(graph_)) {
  cfg_.recovery.policy = AbstainPolicy::alternating();
}

StepResult OnlineLabelModel::step(std::span<const Vote> votes, const ClassPrior& prior) {
  if (static_cast<int>(votes.size()) != graph_.sources) {
    throw Error(ErrorCode::ShapeMismatch, "stream row has " + std::to_string(votes.size()) +
                                              " votes, expected " + std::to_string(graph_.sources));
  }
  for (std::size_t i = 0; i < votes.size(); ++i) {
    if (votes[i] < -1 || votes[i] > 1) {
      throw Error(ErrorCode::InvalidInput, "row " + std::to_string(seen_ + 1) + ", column " +
                                               std::to_string(i + 1) + ": vote " +
                                               std::to_string(votes[i]) + " is not in {-1,0,1}");
    }
  }
  std::vector<std::int8_t> row(2 * votes.size());
  augmenter_.next(votes, row);
  stats_.add(row);
  buffer_.push_back(std::move(row));
  if (cfg_.window > 0 && buffer_.size() > cfg_.window) {
    stats_.remove(buffer_.front());
    buffer_.pop_front();
  }
  ++seen_;

  StepResult out;
  if (cfg_.audit_every > 0 && seen_ % cfg_.audit_every == 0 && !audit()) {
    out.diagnostic = "running sums drifted from the buffer; rebuilt";
    SufficientStats fresh(stats_.sources(), stats_.layout());
    for (const auto& r : buffer_) fresh.add(r);
    stats_ = std::move(fresh);
  }

  if (seen_ < warmup_) {
    out.warmup = true;
    out.posterior = prior_marginals(prior);
    return out;
  }
  try {
    auto fit = recover_from_statistics(stats_.finalize(prior, graph_), graph_, prior, cfg_.recovery);
    LabelModel model(fit.params);
    last_ = std::make_shared<const OnlineModel>(OnlineModel{std::move(fit), std::move(model)});
  } catch (const Error& e) {
    out.stale = true;
    out.diagnostic = e.what();
  }
  out.model = last_;
  out.posterior.assign(graph_.tasks, 0.0);
  if (!last_) {
    out.posterior = prior_marginals(prior);
    return out;
  }
  try {
    last_->model.marginals(votes, out.posterior);
  } catch (const Error& e) {
    out.posterior = prior_marginals(prior);
    out.diagnostic = e.what();
  }
  return out;
}

AugmentedLabelMatrix OnlineLabelModel::window_rows() const {
  AugmentedLabelMatrix out(0, static_cast<std::size_t>(graph_.sources));
  for (const auto& r : buffer_) out.append_row(r);
  return out;
}

bool OnlineLabelModel::audit() const {
  SufficientStats fresh(stats_.sources(), stats_.layout());
  for (const auto& r : buffer_) fresh.add(r);
  return fresh == stats_;
}

SweepResult sweep_window(const StarModel& base, const std::vector<int>& flip, std::size_t period,
                         std::size_t steps, const std::vector<std::size_t>& windows,
                         std::uint64_t seed, const OnlineConfig& cfg) {
  const DependencyGraph g = DependencyGraph::star(base.sources());
  const ClassPrior prior = ClassPrior::balance(base.p_positive());
  SweepResult result;
  for (std::size_t w : windows) {
    OnlineConfig run_cfg = cfg;
    run_cfg.window = w;
    OnlineLabelModel online(g, run_cfg);
    DriftingStream stream(base, flip, period, seed);
    std::vector<Vote> row(base.sources());
    double error_sum = 0.0, label_sum = 0.0;
    std::size_t error_count = 0, label_count = 0;
    for (std::size_t t = 0; t < steps; ++t) {
      const StarModel& truth = stream.model_at(t);
      const int y = stream.next(row);
      const StepResult res = online.step(row, prior);
      if (res.warmup) continue;
      label_sum += std::abs(res.posterior[0] - (y == 1 ? 1.0 : 0.0));
      ++label_count;
      if (!res.model) continue;
      double sq = 0.0;
      const auto& cliques = res.model->fit.params.cliques;
      for (int i = 0; i < base.sources(); ++i) {
        const auto exact = truth.clique_table(i);
        for (std::size_t k = 0; k < exact.size(); ++k) {
          const double diff = cliques[i].probs[k] - exact[k];
          sq += diff * diff;
        }
      }
      error_sum += std::sqrt(sq);
      ++error_count;
    }
    SweepPoint point;
    point.window = w;
    point.error = error_count ? error_sum / static_cast<double>(error_count) : INFINITY;
    point.label_error = label_count ? label_sum / static_cast<double>(label_count) : INFINITY;
    result.points.push_back(point);
  }
  const auto best = std::min_element(result.points.begin(), result.points.end(),
                                     [](const SweepPoint& a, const SweepPoint& b) { return a.error < b.error; });
  if (best != result.points.end()) result.best_window = best->window;
  return result;
}

}  // namespace trilabel
