#include "trilabel/oracle.hpp"

#include <algorithm>
#include <cmath>

#include "trilabel/augment.hpp"
#include "trilabel/error.hpp"

namespace trilabel {

namespace {

double uniform_in(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * unit_uniform(rng);
}

void check_edges_in_graph(const std::map<Edge, double>& terms, const std::vector<Edge>& edges,
                          const char* kind) {
  for (const auto& [edge, value] : terms) {
    if (!std::binary_search(edges.begin(), edges.end(), edge)) {
      throw Error(ErrorCode::InvalidInput, std::string(kind) + " parameter on (" +
                                               std::to_string(edge.first + 1) + "," +
                                               std::to_string(edge.second + 1) +
                                               ") has no matching graph edge");
    }
  }
}

}  // namespace

CanonicalParameters CanonicalParameters::zeros(const DependencyGraph& g) {
  CanonicalParameters theta;
  theta.task.assign(g.tasks, 0.0);
  theta.accuracy.assign(g.sources, 0.0);
  theta.abstain.assign(g.sources, 0.0);
  theta.can_abstain.assign(g.sources, true);
  return theta;
}

CanonicalParameters CanonicalParameters::random(const DependencyGraph& g, std::uint64_t seed,
                                                bool abstains) {
  std::mt19937_64 rng(seed);
  CanonicalParameters theta = zeros(g);
  for (auto& t : theta.task) t = uniform_in(rng, -0.3, 0.3);
  for (const auto& e : g.task_edges) theta.task_edges[e] = uniform_in(rng, -0.3, 0.3);
  for (auto& a : theta.accuracy) a = uniform_in(rng, 0.1, 1.0);
  for (auto& a : theta.abstain) a = uniform_in(rng, -0.5, 0.5);
  theta.can_abstain.assign(g.sources, abstains);
  for (const auto& e : g.source_edges) theta.dependency[e] = uniform_in(rng, -0.3, 0.3);
  return theta;
}

ExactJoint enumerate_joint(const CanonicalParameters& theta, const DependencyGraph& input) {
  ExactJoint joint;
  joint.graph = validate_graph(input);
  const auto& g = joint.graph;
  const int vars = joint.variables();
  if (vars > ExactJoint::kMaxVariables) {
    throw Error(ErrorCode::TooLarge, std::to_string(vars) + " binary variables exceed the cap of " +
                                         std::to_string(ExactJoint::kMaxVariables));
  }
  if (static_cast<int>(theta.task.size()) != g.tasks ||
      static_cast<int>(theta.accuracy.size()) != g.sources ||
      static_cast<int>(theta.abstain.size()) != g.sources ||
      static_cast<int>(theta.can_abstain.size()) != g.sources) {
    throw Error(ErrorCode::ShapeMismatch, "canonical parameters do not match the graph");
  }
  check_edges_in_graph(theta.task_edges, g.task_edges, "task edge");
  check_edges_in_graph(theta.dependency, g.source_edges, "dependency");

  const std::size_t size = std::size_t{1} << vars;
  std::vector<double> energy(size);
  std::vector<bool> allowed(size, true);
  std::vector<int> y(g.tasks), v(2 * g.sources);
  double max_energy = -INFINITY;
  for (std::size_t idx = 0; idx < size; ++idx) {
    for (int d = 0; d < g.tasks; ++d) y[d] = joint.task_value(idx, d);
    for (int c = 0; c < 2 * g.sources; ++c) v[c] = joint.column_value(idx, c);
    double e = 0.0;
    for (int d = 0; d < g.tasks; ++d) e += theta.task[d] * y[d];
    for (const auto& [edge, t] : theta.task_edges) e += t * y[edge.first] * y[edge.second];
    for (int i = 0; i < g.sources; ++i) {
      const int a = v[2 * i], b = v[2 * i + 1];
      if (a == b && !theta.can_abstain[i]) allowed[idx] = false;
      e += theta.accuracy[i] * (a - b) * y[g.assignment[i]] + theta.abstain[i] * a * b;
    }
    for (const auto& [edge, t] : theta.dependency) {
      const auto [i, j] = edge;
      e += t * (v[2 * i] - v[2 * i + 1]) * (v[2 * j] - v[2 * j + 1]);
    }
    energy[idx] = e;
    if (allowed[idx]) max_energy = std::max(max_energy, e);
  }
  joint.probs.resize(size);
  double z = 0.0;
  for (std::size_t idx = 0; idx < size; ++idx) {
    joint.probs[idx] = allowed[idx] ? std::exp(energy[idx] - max_energy) : 0.0;
    z += joint.probs[idx];
  }
  for (double& p : joint.probs) p /= z;
  return joint;
}

MarginalTable exact_table(const ExactJoint& joint, const std::vector<int>& tasks,
                          const std::vector<int>& sources) {
  MarginalTable table = MarginalTable::zeros(tasks, sources);
  for (std::size_t idx = 0; idx < joint.probs.size(); ++idx) {
    std::size_t pos = 0;
    for (std::size_t k = 0; k < tasks.size(); ++k)
      if (joint.task_value(idx, tasks[k]) == -1) pos |= std::size_t{1} << k;
    std::size_t stride = std::size_t{1} << tasks.size();
    for (int s : sources) {
      pos += static_cast<std::size_t>(vote_code(joint.vote(idx, s))) * stride;
      stride *= 3;
    }
    table.probs[pos] += joint.probs[idx];
  }
  return table;
}

double exact_expectation(const ExactJoint& joint, const std::vector<int>& columns,
                         const std::vector<int>& tasks) {
  double total = 0.0;
  for (std::size_t idx = 0; idx < joint.probs.size(); ++idx) {
    int product = 1;
    for (int c : columns) product *= joint.column_value(idx, c);
    for (int d : tasks) product *= joint.task_value(idx, d);
    total += product * joint.probs[idx];
  }
  return total;
}

ExactStatistics exact_statistics(const ExactJoint& joint) {
  const auto& g = joint.graph;
  ExactStatistics out;

  std::vector<int> all_tasks(g.tasks);
  for (int d = 0; d < g.tasks; ++d) all_tasks[d] = d;
  out.prior = ClassPrior::joint(g.tasks, exact_table(joint, all_tasks, {}).probs);

  // Marginal over the observed columns, as weighted augmented rows.
  const std::size_t observed_states = std::size_t{1} << (2 * g.sources);
  std::vector<double> mass(observed_states, 0.0);
  for (std::size_t idx = 0; idx < joint.probs.size(); ++idx) mass[idx >> g.tasks] += joint.probs[idx];
  out.rows = AugmentedLabelMatrix(0, g.sources);
  std::vector<std::int8_t> row(2 * g.sources);
  for (std::size_t state = 0; state < observed_states; ++state) {
    if (mass[state] <= 0.0) continue;
    for (int c = 0; c < 2 * g.sources; ++c) row[c] = (state >> c) & 1U ? -1 : 1;
    out.rows.append_row(row);
    out.weights.push_back(mass[state]);
  }
  SufficientStats stats(g.sources, StatsLayout::for_graph(g));
  stats.add_matrix(out.rows, out.weights);
  out.observed = stats.finalize(out.prior, g);

  out.accuracies.by_source.resize(g.sources);
  for (int i = 0; i < g.sources; ++i)
    out.accuracies.by_source[i] = exact_expectation(joint, {2 * i}, {g.assignment[i]});

  const JunctionTree jt = build_junction_tree(g);
  out.params.tasks = g.tasks;
  out.params.sources = g.sources;
  std::vector<int> tasks, sources;
  for (const auto& clique : jt.cliques) {
    split_vertices(g, clique, tasks, sources);
    out.params.cliques.push_back(exact_table(joint, tasks, sources));
  }
  for (const auto& sep : jt.separators) {
    split_vertices(g, sep.vertices, tasks, sources);
    out.params.separators.push_back(exact_table(joint, tasks, sources));
    out.params.separator_degree.push_back(sep.degree);
  }
  return out;
}

Sample sample(const ExactJoint& joint, std::size_t n, std::uint64_t seed) {
  const auto& g = joint.graph;
  std::vector<double> cdf(joint.probs.size());
  double running = 0.0;
  for (std::size_t idx = 0; idx < cdf.size(); ++idx) cdf[idx] = running += joint.probs[idx];

  std::mt19937_64 rng(seed);
  Sample out;
  out.tasks = g.tasks;
  out.labels = LabelMatrix(n, g.sources);
  out.truth.resize(n * g.tasks);
  for (std::size_t r = 0; r < n; ++r) {
    const double u = unit_uniform(rng) * running;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    if (it == cdf.end()) --it;
    // Skip zero-mass states that share the cumulative value of their predecessor.
    std::size_t idx = static_cast<std::size_t>(it - cdf.begin());
    while (joint.probs[idx] == 0.0 && idx + 1 < cdf.size()) ++idx;
    for (int d = 0; d < g.tasks; ++d) out.truth[r * g.tasks + d] = joint.task_value(idx, d);
    for (int i = 0; i < g.sources; ++i) out.labels.set(r, i, static_cast<Vote>(joint.vote(idx, i)));
  }
  return out;
}

StarModel::StarModel(double p_positive, std::vector<double> accuracy, std::vector<double> abstain)
    : p_positive_(p_positive), accuracy_(std::move(accuracy)), abstain_(std::move(abstain)) {
  if (abstain_.empty()) abstain_.assign(accuracy_.size(), 0.0);
  if (abstain_.size() != accuracy_.size())
    throw Error(ErrorCode::ShapeMismatch, "one abstain rate per source is required");
  if (!(p_positive_ > 0.0 && p_positive_ < 1.0))
    throw Error(ErrorCode::InvalidInput, "class balance must lie in (0, 1)");
  for (std::size_t i = 0; i < accuracy_.size(); ++i) {
    if (!(abstain_[i] >= 0.0 && abstain_[i] < 1.0 && std::abs(accuracy_[i]) <= 1.0 - abstain_[i])) {
      throw Error(ErrorCode::InvalidInput, "source " + std::to_string(i + 1) +
                                               " needs 0 <= abstain < 1 and |accuracy| <= 1 - abstain");
    }
  }
}

double StarModel::vote_given(int source, int vote, int y) const {
  const double r = abstain_[source], a = accuracy_[source];
  if (vote == 0) return r;
  return vote == y ? 0.5 * (1.0 - r + a) : 0.5 * (1.0 - r - a);
}

std::vector<double> StarModel::clique_table(int source) const {
  std::vector<double> table(6);
  for (int code = 0; code < 3; ++code) {
    table[2 * code] = p_positive_ * vote_given(source, code_vote(code), 1);
    table[2 * code + 1] = (1.0 - p_positive_) * vote_given(source, code_vote(code), -1);
  }
  return table;
}

CanonicalParameters StarModel::canonical() const {
  const DependencyGraph g = DependencyGraph::star(sources());
  CanonicalParameters theta = CanonicalParameters::zeros(g);
  theta.task[0] = 0.5 * std::log(p_positive_ / (1.0 - p_positive_));
  for (int i = 0; i < sources(); ++i) {
    const double r = abstain_[i];
    const double p = 0.5 * (1.0 + accuracy_[i] / (1.0 - r));
    theta.accuracy[i] = 0.25 * std::log(p / (1.0 - p));
    theta.can_abstain[i] = r > 0.0;
    if (r > 0.0) theta.abstain[i] = 0.5 * std::log(r / (1.0 - r) * std::cosh(2.0 * theta.accuracy[i]));
  }
  return theta;
}

int StarModel::draw(std::mt19937_64& rng, std::span<Vote> votes) const {
  const int y = unit_uniform(rng) < p_positive_ ? 1 : -1;
  for (int i = 0; i < sources(); ++i) {
    const double u = unit_uniform(rng);
    const double r = abstain_[i];
    if (u < r) votes[i] = 0;
    else votes[i] = static_cast<Vote>(u < r + 0.5 * (1.0 - r + accuracy_[i]) ? y : -y);
  }
  return y;
}

Sample StarModel::sample(std::size_t n, std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  Sample out;
  out.tasks = 1;
  out.labels = LabelMatrix(n, sources());
  out.truth.resize(n);
  std::vector<Vote> row(sources());
  for (std::size_t r = 0; r < n; ++r) {
    out.truth[r] = draw(rng, row);
    for (int i = 0; i < sources(); ++i) out.labels.set(r, i, row[i]);
  }
  return out;
}

StarModel StarModel::flipped(const std::vector<int>& sources) const {
  StarModel copy = *this;
  for (int i : sources) copy.accuracy_.at(i) = -copy.accuracy_.at(i);
  return copy;
}

DriftingStream::DriftingStream(StarModel base, std::vector<int> flip, std::size_t period,
                               std::uint64_t seed)
    : base_(base), flipped_(base.flipped(flip)), period_(period), rng_(seed) {}

const StarModel& DriftingStream::model_at(std::size_t t) const {
  return period_ != 0 && (t / period_) % 2 == 1 ? flipped_ : base_;
}

int DriftingStream::next(std::span<Vote> votes) { return model_at(t_++).draw(rng_, votes); }

}  // namespace trilabel
