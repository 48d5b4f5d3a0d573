#include "trilabel/parameters.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "trilabel/error.hpp"

namespace trilabel {

namespace {

std::size_t table_size(std::size_t tasks, std::size_t sources) {
  std::size_t n = std::size_t{1} << tasks;
  for (std::size_t s = 0; s < sources; ++s) n *= 3;
  return n;
}

// Splits a flat table index into per-task values and per-source votes.
void decode(const MarginalTable& t, std::size_t idx, std::vector<int>& y, std::vector<int>& v) {
  const std::size_t task_states = std::size_t{1} << t.tasks.size();
  std::size_t rest = idx / task_states;
  for (std::size_t k = 0; k < t.tasks.size(); ++k) y[k] = (idx >> k) & 1U ? -1 : 1;
  for (std::size_t s = 0; s < t.sources.size(); ++s) {
    v[s] = code_vote(static_cast<int>(rest % 3));
    rest /= 3;
  }
}

bool subset_of(const std::vector<int>& small, const std::vector<int>& big) {
  return std::includes(big.begin(), big.end(), small.begin(), small.end());
}

}  // namespace

MarginalTable MarginalTable::zeros(std::vector<int> tasks, std::vector<int> sources) {
  MarginalTable t;
  t.probs.assign(table_size(tasks.size(), sources.size()), 0.0);
  t.tasks = std::move(tasks);
  t.sources = std::move(sources);
  return t;
}

std::size_t MarginalTable::index(std::span<const int> y, std::span<const Vote> votes) const {
  std::size_t idx = 0;
  for (std::size_t k = 0; k < tasks.size(); ++k)
    if (y[tasks[k]] == -1) idx |= std::size_t{1} << k;
  std::size_t stride = std::size_t{1} << tasks.size();
  for (int s : sources) {
    idx += static_cast<std::size_t>(vote_code(votes[s])) * stride;
    stride *= 3;
  }
  return idx;
}

double MarginalTable::sum() const {
  double total = 0.0;
  for (double p : probs) total += p;
  return total;
}

MarginalTable MarginalTable::marginalize(const std::vector<int>& keep_tasks,
                                         const std::vector<int>& keep_sources) const {
  if (!subset_of(keep_tasks, tasks) || !subset_of(keep_sources, sources)) {
    throw Error(ErrorCode::InvalidInput, "marginalize: kept variables are not in the table");
  }
  MarginalTable out = zeros(keep_tasks, keep_sources);
  std::vector<int> y(tasks.size()), v(sources.size());
  for (std::size_t idx = 0; idx < probs.size(); ++idx) {
    decode(*this, idx, y, v);
    std::size_t target = 0;
    for (std::size_t k = 0; k < keep_tasks.size(); ++k) {
      const auto pos = std::find(tasks.begin(), tasks.end(), keep_tasks[k]) - tasks.begin();
      if (y[pos] == -1) target |= std::size_t{1} << k;
    }
    std::size_t stride = std::size_t{1} << keep_tasks.size();
    for (int s : keep_sources) {
      const auto pos = std::find(sources.begin(), sources.end(), s) - sources.begin();
      target += static_cast<std::size_t>(vote_code(v[pos])) * stride;
      stride *= 3;
    }
    out.probs[target] += probs[idx];
  }
  return out;
}

std::string LabelModelParameters::check(double sum_tol, double sep_tol) const {
  std::ostringstream err;
  auto check_table = [&](const MarginalTable& t, const char* kind, std::size_t i) {
    for (double p : t.probs)
      if (!(p >= 0.0)) err << kind << " " << i << " has a negative entry " << p << "\n";
    if (std::abs(t.sum() - 1.0) > sum_tol) err << kind << " " << i << " sums to " << t.sum() << "\n";
  };
  for (std::size_t c = 0; c < cliques.size(); ++c) check_table(cliques[c], "clique", c);
  for (std::size_t s = 0; s < separators.size(); ++s) {
    const auto& sep = separators[s];
    check_table(sep, "separator", s);
    for (std::size_t c = 0; c < cliques.size(); ++c) {
      const auto& cl = cliques[c];
      if (!subset_of(sep.tasks, cl.tasks) || !subset_of(sep.sources, cl.sources)) continue;
      const auto marg = cl.marginalize(sep.tasks, sep.sources);
      for (std::size_t k = 0; k < marg.probs.size(); ++k) {
        if (std::abs(marg.probs[k] - sep.probs[k]) > sep_tol) {
          err << "clique " << c << " disagrees with separator " << s << " at entry " << k << " ("
              << marg.probs[k] << " vs " << sep.probs[k] << ")\n";
          break;
        }
      }
    }
  }
  return err.str();
}

bool LabelModelParameters::operator==(const LabelModelParameters& other) const {
  auto same = [](const std::vector<MarginalTable>& a, const std::vector<MarginalTable>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i].tasks != b[i].tasks || a[i].sources != b[i].sources || a[i].probs != b[i].probs)
        return false;
    }
    return true;
  };
  return tasks == other.tasks && sources == other.sources &&
         separator_degree == other.separator_degree && same(cliques, other.cliques) &&
         same(separators, other.separators);
}

void split_vertices(const DependencyGraph& g, const std::vector<int>& vertices,
                    std::vector<int>& tasks, std::vector<int>& sources) {
  tasks.clear();
  sources.clear();
  for (int v : vertices) {
    if (g.is_task_vertex(v)) tasks.push_back(v);
    else sources.push_back(v - g.tasks);
  }
}

}  // namespace trilabel
