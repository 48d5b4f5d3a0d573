#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "trilabel/graph.hpp"
#include "trilabel/inference.hpp"
#include "trilabel/label_matrix.hpp"
#include "trilabel/oracle.hpp"
#include "trilabel/parameters.hpp"
#include "trilabel/prior.hpp"
#include "trilabel/recovery.hpp"

namespace trilabel::io {

/// Comma-separated integer matrix; a first line containing a non-integer
/// field is treated as a header. Votes outside {-1,0,1} raise InvalidInput
/// naming the 1-indexed row and column.
LabelMatrix read_labels(std::istream& in);
LabelMatrix read_labels_file(const std::string& path);
void write_labels(std::ostream& out, const LabelMatrix& labels);

/// One comma-separated vote row, as read by the stream command.
std::vector<Vote> parse_vote_row(const std::string& line, std::size_t row_number);

/// Graph spec: `tasks D`, `sources m`, `assign i d`, `tedge d e`, `sedge i j`
/// (1-indexed, whitespace separated, `#` comments).
DependencyGraph read_graph(std::istream& in);
DependencyGraph read_graph_file(const std::string& path);
void write_graph(std::ostream& out, const DependencyGraph& g);

/// Prior file: `balance p` or a bare p (one task); joint lines of D values
/// in {-1,1} followed by a probability; or `mean d v` / `pair d e v` lines
/// for a factorized prior.
ClassPrior read_prior(std::istream& in, int tasks);
ClassPrior read_prior_file(const std::string& path, int tasks);

/// Parameter records with shortest round-trip doubles, so save/load is exact.
void save_parameters(std::ostream& out, const LabelModelParameters& mu);
LabelModelParameters load_parameters(std::istream& in);
LabelModelParameters load_parameters_file(const std::string& path);

/// Graph spec plus `theta task d v`, `theta tedge d e v`, `theta acc i v`,
/// `theta abstain i v`, `theta dep i j v` and `noabstain i` lines.
struct ModelSpec {
  DependencyGraph graph;
  CanonicalParameters theta;
};
ModelSpec read_model(std::istream& in);
ModelSpec read_model_file(const std::string& path);

/// Header `row,task,p_pos`, 1-indexed rows and tasks, 9 significant digits.
void write_posteriors(std::ostream& out, const PosteriorLabels& labels);

/// Hidden labels as a CSV with header y1..yD.
void write_truth(std::ostream& out, const Sample& s);
std::vector<int> read_truth_file(const std::string& path, int tasks, std::size_t rows);

/// Human-readable diagnostics for a fit.
void write_diagnostics(std::ostream& out, const FitResult& fit);

/// Shortest decimal string that parses back to the same double.
std::string format_double(double x);

/// Fixed 9-significant-digit rendering used by posterior output.
std::string format_probability(double p);

}  // namespace trilabel::io
