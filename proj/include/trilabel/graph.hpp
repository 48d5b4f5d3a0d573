#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace trilabel {

using Edge = std::pair<int, int>;

/// Conditional-dependency structure over tasks and sources.
///
/// Vertices are numbered with tasks first (0..tasks-1) followed by sources
/// (tasks..tasks+sources-1). Every source votes on exactly one task; an edge
/// between a source and its task is implied by the assignment.
struct DependencyGraph {
  int tasks = 0;
  int sources = 0;
  std::vector<Edge> task_edges;    // pairs of task indices
  std::vector<Edge> source_edges;  // pairs of source indices
  std::vector<int> assignment;     // source -> task, -1 when missing

  int vertex_count() const { return tasks + sources; }
  int source_vertex(int source) const { return tasks + source; }
  bool is_task_vertex(int v) const { return v < tasks; }

  // Adjacency lists over all vertices, sorted.
  std::vector<std::vector<int>> adjacency() const;

  // True when the two sources share a dependency edge.
  bool sources_dependent(int i, int j) const;

  // Sources that vote on the given task, ascending.
  std::vector<int> sources_of(int task) const;

  bool operator==(const DependencyGraph&) const = default;

  // D=1 graph with `m` conditionally independent sources.
  static DependencyGraph star(int m);
};

/// Normalizes, checks, and triangulates a dependency graph.
///
/// Chordal inputs come back unchanged (edges normalized and sorted). Otherwise
/// fill-in edges from a minimum-degree elimination order are added; ties go
/// to the lowest vertex index. Throws AssignmentMissing, SelfEdge,
/// UnsupportedStructure (source edge across tasks, index out of range) and
/// UnsupportedClique (a maximal clique that is neither tasks-only with at
/// most 3 tasks nor one task plus at most 2 sources).
DependencyGraph validate_graph(const DependencyGraph& g);

bool is_chordal(const DependencyGraph& g);

struct Separator {
  std::vector<int> vertices;
  int degree = 0;  // number of maximal cliques the separator is adjacent to
};

struct JunctionTree {
  std::vector<std::vector<int>> cliques;  // sorted vertex lists, canonical order
  std::vector<Separator> separators;      // distinct nonempty separator sets
  std::vector<Edge> tree_edges;           // pairs of clique indices

  // True when every vertex set of cliques containing it forms a subtree.
  bool running_intersection_holds(int vertex_count) const;
};

/// Maximal cliques plus a maximum-weight spanning tree over them. Throws
/// NotTriangulated when the graph is not chordal.
JunctionTree build_junction_tree(const DependencyGraph& g);

std::string describe_vertices(const DependencyGraph& g, const std::vector<int>& vertices);

}  // namespace trilabel
