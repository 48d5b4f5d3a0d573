#include "trilabel/graph.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

#include "trilabel/error.hpp"

namespace trilabel {

namespace {

bool adjacent(const std::vector<std::vector<int>>& adj, int a, int b) {
  return std::binary_search(adj[a].begin(), adj[a].end(), b);
}

// Maximum cardinality search; returns a perfect elimination order candidate
// (first element is eliminated first). Ties go to the lowest vertex index.
std::vector<int> mcs_elimination_order(const std::vector<std::vector<int>>& adj) {
  const int n = static_cast<int>(adj.size());
  std::vector<int> weight(n, 0);
  std::vector<bool> numbered(n, false);
  std::vector<int> order(n);
  for (int step = n - 1; step >= 0; --step) {
    int best = -1;
    for (int v = 0; v < n; ++v) {
      if (!numbered[v] && (best < 0 || weight[v] > weight[best])) best = v;
    }
    numbered[best] = true;
    order[step] = best;
    for (int u : adj[best])
      if (!numbered[u]) ++weight[u];
  }
  return order;
}

bool is_perfect_elimination_order(const std::vector<std::vector<int>>& adj,
                                  const std::vector<int>& order) {
  const int n = static_cast<int>(adj.size());
  std::vector<int> pos(n);
  for (int p = 0; p < n; ++p) pos[order[p]] = p;
  for (int v : order) {
    int parent = -1;
    for (int u : adj[v])
      if (pos[u] > pos[v] && (parent < 0 || pos[u] < pos[parent])) parent = u;
    if (parent < 0) continue;
    for (int u : adj[v]) {
      if (u != parent && pos[u] > pos[v] && !adjacent(adj, parent, u)) return false;
    }
  }
  return true;
}

std::vector<std::vector<int>> maximal_cliques(const std::vector<std::vector<int>>& adj,
                                              const std::vector<int>& order) {
  const int n = static_cast<int>(adj.size());
  std::vector<int> pos(n);
  for (int p = 0; p < n; ++p) pos[order[p]] = p;
  std::vector<std::vector<int>> candidates;
  for (int v : order) {
    std::vector<int> c{v};
    for (int u : adj[v])
      if (pos[u] > pos[v]) c.push_back(u);
    std::sort(c.begin(), c.end());
    candidates.push_back(std::move(c));
  }
  std::sort(candidates.begin(), candidates.end(),
            [](const auto& a, const auto& b) { return a.size() > b.size(); });
  std::vector<std::vector<int>> result;
  for (const auto& c : candidates) {
    bool contained = false;
    for (const auto& r : result) {
      if (std::includes(r.begin(), r.end(), c.begin(), c.end())) {
        contained = true;
        break;
      }
    }
    if (!contained) result.push_back(c);
  }
  std::sort(result.begin(), result.end());
  return result;
}

void check_clique_shapes(const DependencyGraph& g, const std::vector<std::vector<int>>& cliques) {
  for (const auto& c : cliques) {
    int t = 0, s = 0;
    for (int v : c) (g.is_task_vertex(v) ? t : s)++;
    const bool tasks_only = s == 0 && t <= 3;
    const bool source_clique = t == 1 && s <= 2;
    if (!tasks_only && !source_clique) {
      throw Error(ErrorCode::UnsupportedClique,
                  "maximal clique {" + describe_vertices(g, c) +
                      "} exceeds the supported shapes (one task with at most two sources, "
                      "or at most three tasks)");
    }
  }
}

Edge ordered(int a, int b) { return a < b ? Edge{a, b} : Edge{b, a}; }

void normalize_edges(std::vector<Edge>& edges, int limit, const char* kind) {
  for (auto& e : edges) {
    if (e.first < 0 || e.second < 0 || e.first >= limit || e.second >= limit) {
      throw Error(ErrorCode::UnsupportedStructure,
                  std::string(kind) + " edge (" + std::to_string(e.first + 1) + "," +
                      std::to_string(e.second + 1) + ") is out of range");
    }
    if (e.first == e.second) {
      throw Error(ErrorCode::SelfEdge,
                  std::string(kind) + " edge on vertex " + std::to_string(e.first + 1));
    }
    e = ordered(e.first, e.second);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
}

}  // namespace

std::vector<std::vector<int>> DependencyGraph::adjacency() const {
  std::vector<std::vector<int>> adj(vertex_count());
  auto link = [&](int a, int b) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  };
  for (auto [a, b] : task_edges) link(a, b);
  for (auto [a, b] : source_edges) link(source_vertex(a), source_vertex(b));
  for (int i = 0; i < sources; ++i)
    if (assignment[i] >= 0) link(assignment[i], source_vertex(i));
  for (auto& list : adj) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
  }
  return adj;
}

bool DependencyGraph::sources_dependent(int i, int j) const {
  return std::binary_search(source_edges.begin(), source_edges.end(), ordered(i, j));
}

std::vector<int> DependencyGraph::sources_of(int task) const {
  std::vector<int> out;
  for (int i = 0; i < sources; ++i)
    if (assignment[i] == task) out.push_back(i);
  return out;
}

DependencyGraph DependencyGraph::star(int m) {
  DependencyGraph g;
  g.tasks = 1;
  g.sources = m;
  g.assignment.assign(m, 0);
  return g;
}

bool is_chordal(const DependencyGraph& g) {
  const auto adj = g.adjacency();
  return is_perfect_elimination_order(adj, mcs_elimination_order(adj));
}

DependencyGraph validate_graph(const DependencyGraph& input) {
  DependencyGraph g = input;
  if (g.tasks < 1) throw Error(ErrorCode::UnsupportedStructure, "graph needs at least one task");
  if (g.sources < 0) throw Error(ErrorCode::UnsupportedStructure, "negative source count");
  if (static_cast<int>(g.assignment.size()) != g.sources) g.assignment.resize(g.sources, -1);
  for (int i = 0; i < g.sources; ++i) {
    if (g.assignment[i] < 0 || g.assignment[i] >= g.tasks) {
      throw Error(ErrorCode::AssignmentMissing,
                  "source " + std::to_string(i + 1) + " is not assigned to a task");
    }
  }
  normalize_edges(g.task_edges, g.tasks, "task");
  normalize_edges(g.source_edges, g.sources, "source");
  for (auto [i, j] : g.source_edges) {
    if (g.assignment[i] != g.assignment[j]) {
      throw Error(ErrorCode::UnsupportedStructure,
                  "source edge (" + std::to_string(i + 1) + "," + std::to_string(j + 1) +
                      ") joins sources of different tasks");
    }
  }

  auto adj = g.adjacency();
  if (!is_perfect_elimination_order(adj, mcs_elimination_order(adj))) {
    // Minimum-degree elimination; fill-in edges are recorded on the graph.
    const int n = g.vertex_count();
    std::vector<std::set<int>> work(n);
    for (int v = 0; v < n; ++v) work[v] = std::set<int>(adj[v].begin(), adj[v].end());
    std::vector<bool> gone(n, false);
    for (int step = 0; step < n; ++step) {
      int best = -1;
      for (int v = 0; v < n; ++v) {
        if (gone[v]) continue;
        if (best < 0 || work[v].size() < work[best].size()) best = v;
      }
      const std::vector<int> nbrs(work[best].begin(), work[best].end());
      for (std::size_t a = 0; a < nbrs.size(); ++a) {
        for (std::size_t b = a + 1; b < nbrs.size(); ++b) {
          const int u = nbrs[a], w = nbrs[b];
          if (work[u].count(w)) continue;
          work[u].insert(w);
          work[w].insert(u);
          if (g.is_task_vertex(u) && g.is_task_vertex(w)) {
            g.task_edges.push_back(ordered(u, w));
          } else if (!g.is_task_vertex(u) && !g.is_task_vertex(w) &&
                     g.assignment[u - g.tasks] == g.assignment[w - g.tasks]) {
            g.source_edges.push_back(ordered(u - g.tasks, w - g.tasks));
          } else {
            throw Error(ErrorCode::UnsupportedClique,
                        "triangulation needs a fill-in edge between " +
                            describe_vertices(g, {u, w}) + ", which is not a supported clique");
          }
        }
      }
      for (int u : nbrs) work[u].erase(best);
      work[best].clear();
      gone[best] = true;
    }
    std::sort(g.task_edges.begin(), g.task_edges.end());
    std::sort(g.source_edges.begin(), g.source_edges.end());
    adj = g.adjacency();
  }
  check_clique_shapes(g, maximal_cliques(adj, mcs_elimination_order(adj)));
  return g;
}

JunctionTree build_junction_tree(const DependencyGraph& g) {
  const auto adj = g.adjacency();
  const auto order = mcs_elimination_order(adj);
  if (!is_perfect_elimination_order(adj, order)) {
    throw Error(ErrorCode::NotTriangulated, "dependency graph is not chordal; validate it first");
  }
  JunctionTree jt;
  jt.cliques = maximal_cliques(adj, order);
  const int k = static_cast<int>(jt.cliques.size());

  struct Candidate {
    int weight, a, b;
  };
  std::vector<Candidate> candidates;
  for (int a = 0; a < k; ++a) {
    for (int b = a + 1; b < k; ++b) {
      std::vector<int> common;
      std::set_intersection(jt.cliques[a].begin(), jt.cliques[a].end(), jt.cliques[b].begin(),
                            jt.cliques[b].end(), std::back_inserter(common));
      if (!common.empty()) candidates.push_back({static_cast<int>(common.size()), a, b});
    }
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& x, const Candidate& y) { return x.weight > y.weight; });

  std::vector<int> parent(k);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::map<std::vector<int>, int> separator_count;
  for (const auto& c : candidates) {
    const int ra = find(c.a), rb = find(c.b);
    if (ra == rb) continue;
    parent[ra] = rb;
    jt.tree_edges.emplace_back(c.a, c.b);
    std::vector<int> common;
    std::set_intersection(jt.cliques[c.a].begin(), jt.cliques[c.a].end(), jt.cliques[c.b].begin(),
                          jt.cliques[c.b].end(), std::back_inserter(common));
    ++separator_count[common];
  }
  for (auto& [vertices, count] : separator_count) jt.separators.push_back({vertices, count + 1});
  return jt;
}

bool JunctionTree::running_intersection_holds(int vertex_count) const {
  const int k = static_cast<int>(cliques.size());
  std::vector<std::vector<int>> tree(k);
  for (auto [a, b] : tree_edges) {
    tree[a].push_back(b);
    tree[b].push_back(a);
  }
  for (int v = 0; v < vertex_count; ++v) {
    std::vector<int> holders;
    for (int c = 0; c < k; ++c)
      if (std::binary_search(cliques[c].begin(), cliques[c].end(), v)) holders.push_back(c);
    if (holders.size() <= 1) continue;
    std::vector<bool> seen(k, false);
    std::vector<int> stack{holders.front()};
    seen[holders.front()] = true;
    std::size_t reached = 0;
    while (!stack.empty()) {
      const int c = stack.back();
      stack.pop_back();
      ++reached;
      for (int d : tree[c]) {
        if (seen[d] || !std::binary_search(cliques[d].begin(), cliques[d].end(), v)) continue;
        seen[d] = true;
        stack.push_back(d);
      }
    }
    if (reached != holders.size()) return false;
  }
  return true;
}

std::string describe_vertices(const DependencyGraph& g, const std::vector<int>& vertices) {
  std::string out;
  for (int v : vertices) {
    if (!out.empty()) out += ",";
    out += g.is_task_vertex(v) ? "Y" + std::to_string(v + 1)
                               : "source" + std::to_string(v - g.tasks + 1);
  }
  return out;
}

}  // namespace trilabel
