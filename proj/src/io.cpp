#include "trilabel/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "trilabel/error.hpp"

namespace trilabel::io {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool parse_int(std::string_view s, long long& out) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && !s.empty();
}

bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && !s.empty();
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::ifstream open(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidInput, "cannot open " + path);
  return in;
}

// Whitespace-tokenized line reader with `#` comments and line numbers.
struct Tokens {
  std::size_t line = 0;
  std::vector<std::string> words;

  bool next(std::istream& in) {
    std::string text;
    while (std::getline(in, text)) {
      ++line;
      if (auto hash = text.find('#'); hash != std::string::npos) text.resize(hash);
      std::istringstream ss(text);
      words.clear();
      for (std::string w; ss >> w;) words.push_back(w);
      if (!words.empty()) return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": " + what);
  }

  void expect(std::size_t count) const {
    if (words.size() != count) {
      fail("'" + words[0] + "' expects " + std::to_string(count - 1) + " value(s)");
    }
  }

  long long integer(std::size_t k) const {
    long long v;
    if (!parse_int(words.at(k), v)) fail("'" + words[k] + "' is not an integer");
    return v;
  }

  // 1-indexed id in [1, limit], returned 0-indexed.
  int index(std::size_t k, int limit, const char* what) const {
    const long long v = integer(k);
    if (v < 1 || v > limit) fail(std::string(what) + " " + words[k] + " is out of range 1.." + std::to_string(limit));
    return static_cast<int>(v - 1);
  }

  double real(std::size_t k) const {
    double v;
    if (!parse_double(words.at(k), v)) fail("'" + words[k] + "' is not a number");
    return v;
  }
};

// Applies one graph-spec line; returns false for keywords it does not know.
bool graph_line(const Tokens& t, DependencyGraph& g, bool& have_tasks, bool& have_sources) {
  const auto& key = t.words[0];
  if (key == "tasks") {
    t.expect(2);
    const long long d = t.integer(1);
    if (d < 1) t.fail("task count must be positive");
    g.tasks = static_cast<int>(d);
    have_tasks = true;
  } else if (key == "sources") {
    t.expect(2);
    const long long m = t.integer(1);
    if (m < 0) t.fail("source count must be nonnegative");
    g.sources = static_cast<int>(m);
    g.assignment.assign(g.sources, -1);
    have_sources = true;
  } else if (key == "assign" || key == "tedge" || key == "sedge") {
    if (!have_tasks || !have_sources) t.fail("'" + key + "' before 'tasks' and 'sources'");
    t.expect(3);
    if (key == "assign") {
      g.assignment[t.index(1, g.sources, "source")] = t.index(2, g.tasks, "task");
    } else if (key == "tedge") {
      g.task_edges.emplace_back(t.index(1, g.tasks, "task"), t.index(2, g.tasks, "task"));
    } else {
      g.source_edges.emplace_back(t.index(1, g.sources, "source"), t.index(2, g.sources, "source"));
    }
  } else {
    return false;
  }
  return true;
}

void finish_graph(const Tokens& t, bool have_tasks, bool have_sources) {
  if (!have_tasks || !have_sources) {
    throw Error(ErrorCode::ParseError, "graph spec needs 'tasks' and 'sources' lines (read " +
                                           std::to_string(t.line) + " lines)");
  }
}

std::string join_ids(const std::vector<int>& ids) {
  std::string out;
  for (int id : ids) out += " " + std::to_string(id + 1);
  return out;
}

}  // namespace

std::string format_double(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

std::string format_probability(double p) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", p);
  return buf;
}

std::vector<Vote> parse_vote_row(const std::string& line, std::size_t row_number) {
  const auto fields = split(line, ',');
  std::vector<Vote> out;
  out.reserve(fields.size());
  for (std::size_t c = 0; c < fields.size(); ++c) {
    long long v;
    const std::string where = "row " + std::to_string(row_number) + ", column " + std::to_string(c + 1);
    if (!parse_int(fields[c], v)) {
      throw Error(ErrorCode::ParseError, where + ": '" + std::string(trim(fields[c])) + "' is not an integer");
    }
    if (v < -1 || v > 1) {
      throw Error(ErrorCode::InvalidInput, where + ": vote " + std::to_string(v) + " is not in {-1,0,1}");
    }
    out.push_back(static_cast<Vote>(v));
  }
  return out;
}

LabelMatrix read_labels(std::istream& in) {
  std::vector<Vote> votes;
  std::size_t columns = 0, rows = 0;
  bool first = true;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    if (first) {
      first = false;
      bool header = false;
      for (auto f : split(line, ',')) {
        long long v;
        if (!parse_int(f, v)) header = true;
      }
      if (header) {
        columns = split(line, ',').size();
        continue;
      }
    }
    auto row = parse_vote_row(line, rows + 1);
    if (columns == 0) columns = row.size();
    if (row.size() != columns) {
      throw Error(ErrorCode::ParseError, "row " + std::to_string(rows + 1) + " has " +
                                             std::to_string(row.size()) + " columns, expected " +
                                             std::to_string(columns));
    }
    votes.insert(votes.end(), row.begin(), row.end());
    ++rows;
  }
  return LabelMatrix(rows, columns, std::move(votes));
}

LabelMatrix read_labels_file(const std::string& path) {
  auto in = open(path);
  return read_labels(in);
}

void write_labels(std::ostream& out, const LabelMatrix& labels) {
  std::string line;
  for (std::size_t r = 0; r < labels.rows(); ++r) {
    line.clear();
    for (std::size_t i = 0; i < labels.sources(); ++i) {
      if (i) line += ',';
      line += std::to_string(labels(r, i));
    }
    line += '\n';
    out << line;
  }
}

DependencyGraph read_graph(std::istream& in) {
  DependencyGraph g;
  bool have_tasks = false, have_sources = false;
  Tokens t;
  while (t.next(in)) {
    if (!graph_line(t, g, have_tasks, have_sources)) t.fail("unknown keyword '" + t.words[0] + "'");
  }
  finish_graph(t, have_tasks, have_sources);
  return g;
}

DependencyGraph read_graph_file(const std::string& path) {
  auto in = open(path);
  return read_graph(in);
}

void write_graph(std::ostream& out, const DependencyGraph& g) {
  out << "tasks " << g.tasks << "\nsources " << g.sources << "\n";
  for (int i = 0; i < g.sources; ++i) out << "assign " << i + 1 << " " << g.assignment[i] + 1 << "\n";
  for (auto [d, e] : g.task_edges) out << "tedge " << d + 1 << " " << e + 1 << "\n";
  for (auto [i, j] : g.source_edges) out << "sedge " << i + 1 << " " << j + 1 << "\n";
}

ClassPrior read_prior(std::istream& in, int tasks) {
  Tokens t;
  std::vector<double> joint(tasks <= ClassPrior::kMaxJointTasks ? std::size_t{1} << tasks : 0, 0.0);
  std::vector<bool> seen(joint.size(), false);
  std::vector<double> means(tasks, 0.0);
  std::vector<bool> mean_seen(tasks, false);
  std::map<std::pair<int, int>, double> pairs;
  enum { None, Balance, Joint, Factorized } form = None;
  double balance = 0.0;
  auto set_form = [&](decltype(form) f) {
    if (form != None && form != f) t.fail("prior mixes different representations");
    form = f;
  };
  while (t.next(in)) {
    const auto& key = t.words[0];
    if (key == "balance" || (t.words.size() == 1 && form == None)) {
      set_form(Balance);
      if (tasks != 1) t.fail("a class-balance prior needs exactly one task");
      balance = t.real(t.words.size() - 1);
      if (key == "balance") t.expect(2);
    } else if (key == "mean") {
      set_form(Factorized);
      t.expect(3);
      const int d = t.index(1, tasks, "task");
      means[d] = t.real(2);
      mean_seen[d] = true;
    } else if (key == "pair") {
      set_form(Factorized);
      t.expect(4);
      int d = t.index(1, tasks, "task"), e = t.index(2, tasks, "task");
      if (d > e) std::swap(d, e);
      pairs[{d, e}] = t.real(3);
    } else {
      set_form(Joint);
      if (joint.empty()) t.fail("joint priors support at most " + std::to_string(ClassPrior::kMaxJointTasks) + " tasks");
      t.expect(static_cast<std::size_t>(tasks) + 1);
      std::size_t idx = 0;
      for (int d = 0; d < tasks; ++d) {
        const long long y = t.integer(d);
        if (y != 1 && y != -1) t.fail("task values must be 1 or -1");
        if (y == -1) idx |= std::size_t{1} << d;
      }
      if (seen[idx]) t.fail("task configuration listed twice");
      seen[idx] = true;
      joint[idx] = t.real(tasks);
    }
  }
  switch (form) {
    case Balance:
      return ClassPrior::balance(balance);
    case Joint:
      return ClassPrior::joint(tasks, std::move(joint));
    case Factorized:
      for (int d = 0; d < tasks; ++d)
        if (!mean_seen[d]) throw Error(ErrorCode::ParseError, "prior has no mean for task " + std::to_string(d + 1));
      return ClassPrior::factorized(std::move(means), std::move(pairs));
    case None:
      break;
  }
  throw Error(ErrorCode::ParseError, "prior file is empty");
}

ClassPrior read_prior_file(const std::string& path, int tasks) {
  auto in = open(path);
  return read_prior(in, tasks);
}

void save_parameters(std::ostream& out, const LabelModelParameters& mu) {
  out << "trilabel-parameters 1\ntasks " << mu.tasks << "\nsources " << mu.sources << "\n";
  auto record = [&](const MarginalTable& t) {
    out << "tasks" << join_ids(t.tasks) << "\nsources" << join_ids(t.sources) << "\nprobs";
    for (double p : t.probs) out << ' ' << format_double(p);
    out << "\n";
  };
  for (const auto& c : mu.cliques) {
    out << "clique\n";
    record(c);
  }
  for (std::size_t s = 0; s < mu.separators.size(); ++s) {
    out << "separator " << mu.separator_degree[s] << "\n";
    record(mu.separators[s]);
  }
}

LabelModelParameters load_parameters(std::istream& in) {
  LabelModelParameters mu;
  Tokens t;
  if (!t.next(in) || t.words[0] != "trilabel-parameters") {
    throw Error(ErrorCode::ParseError, "not a parameter file (missing 'trilabel-parameters' header)");
  }
  MarginalTable* current = nullptr;
  bool in_record = false;
  auto ids = [&](int limit, const char* what) {
    std::vector<int> out;
    for (std::size_t k = 1; k < t.words.size(); ++k) out.push_back(t.index(k, limit, what));
    return out;
  };
  while (t.next(in)) {
    const auto& key = t.words[0];
    if (key == "clique") {
      t.expect(1);
      current = &mu.cliques.emplace_back();
      in_record = true;
    } else if (key == "separator") {
      t.expect(2);
      const long long degree = t.integer(1);
      if (degree < 1) t.fail("separator degree must be positive");
      current = &mu.separators.emplace_back();
      mu.separator_degree.push_back(static_cast<int>(degree));
      in_record = true;
    } else if (key == "tasks" && !in_record) {
      t.expect(2);
      mu.tasks = static_cast<int>(t.integer(1));
    } else if (key == "sources" && !in_record) {
      t.expect(2);
      mu.sources = static_cast<int>(t.integer(1));
    } else if (key == "tasks") {
      current->tasks = ids(mu.tasks, "task");
    } else if (key == "sources") {
      current->sources = ids(mu.sources, "source");
    } else if (key == "probs") {
      if (!current) t.fail("'probs' outside a record");
      std::size_t expected = std::size_t{1} << current->tasks.size();
      for (std::size_t k = 0; k < current->sources.size(); ++k) expected *= 3;
      if (t.words.size() - 1 != expected) {
        t.fail("table needs " + std::to_string(expected) + " entries, found " + std::to_string(t.words.size() - 1));
      }
      current->probs.clear();
      for (std::size_t k = 1; k < t.words.size(); ++k) current->probs.push_back(t.real(k));
    } else {
      t.fail("unknown keyword '" + key + "'");
    }
  }
  for (const auto* group : {&mu.cliques, &mu.separators}) {
    for (const auto& table : *group) {
      if (table.probs.empty()) throw Error(ErrorCode::ParseError, "parameter record without 'probs'");
    }
  }
  return mu;
}

LabelModelParameters load_parameters_file(const std::string& path) {
  auto in = open(path);
  return load_parameters(in);
}

ModelSpec read_model(std::istream& in) {
  ModelSpec spec;
  auto& g = spec.graph;
  bool have_tasks = false, have_sources = false, sized = false;
  Tokens t;
  auto ensure_sized = [&] {
    if (sized) return;
    if (!have_tasks || !have_sources) t.fail("'theta' before 'tasks' and 'sources'");
    spec.theta = CanonicalParameters::zeros(g);
    sized = true;
  };
  while (t.next(in)) {
    const auto& key = t.words[0];
    if (graph_line(t, g, have_tasks, have_sources)) {
      if (sized && (key == "tasks" || key == "sources")) t.fail("'" + key + "' after 'theta' lines");
      continue;
    }
    if (key == "noabstain") {
      ensure_sized();
      t.expect(2);
      spec.theta.can_abstain[t.index(1, g.sources, "source")] = false;
    } else if (key == "theta") {
      ensure_sized();
      if (t.words.size() < 2) t.fail("'theta' needs a kind");
      const auto& kind = t.words[1];
      if (kind == "task") {
        t.expect(4);
        spec.theta.task[t.index(2, g.tasks, "task")] = t.real(3);
      } else if (kind == "acc") {
        t.expect(4);
        spec.theta.accuracy[t.index(2, g.sources, "source")] = t.real(3);
      } else if (kind == "abstain") {
        t.expect(4);
        spec.theta.abstain[t.index(2, g.sources, "source")] = t.real(3);
      } else if (kind == "tedge" || kind == "dep") {
        t.expect(5);
        const int limit = kind == "tedge" ? g.tasks : g.sources;
        const char* what = kind == "tedge" ? "task" : "source";
        int a = t.index(2, limit, what), b = t.index(3, limit, what);
        if (a > b) std::swap(a, b);
        (kind == "tedge" ? spec.theta.task_edges : spec.theta.dependency)[{a, b}] = t.real(4);
      } else {
        t.fail("unknown theta kind '" + kind + "'");
      }
    } else {
      t.fail("unknown keyword '" + key + "'");
    }
  }
  finish_graph(t, have_tasks, have_sources);
  ensure_sized();
  return spec;
}

ModelSpec read_model_file(const std::string& path) {
  auto in = open(path);
  return read_model(in);
}

void write_posteriors(std::ostream& out, const PosteriorLabels& labels) {
  out << "row,task,p_pos\n";
  std::string line;
  for (std::size_t r = 0; r < labels.rows; ++r) {
    for (int d = 0; d < labels.tasks; ++d) {
      line = std::to_string(r + 1);
      line += ',';
      line += std::to_string(d + 1);
      line += ',';
      line += format_probability(labels(r, d));
      line += '\n';
      out << line;
    }
  }
}

void write_truth(std::ostream& out, const Sample& s) {
  for (int d = 0; d < s.tasks; ++d) out << (d ? ",y" : "y") << d + 1;
  out << "\n";
  const std::size_t rows = s.tasks ? s.truth.size() / s.tasks : 0;
  for (std::size_t r = 0; r < rows; ++r) {
    for (int d = 0; d < s.tasks; ++d) out << (d ? "," : "") << s.y(r, d);
    out << "\n";
  }
}

std::vector<int> read_truth_file(const std::string& path, int tasks, std::size_t rows) {
  auto in = open(path);
  std::vector<int> out;
  std::string line;
  std::size_t row = 0;
  bool first = true;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto fields = split(line, ',');
    long long v;
    if (first && !parse_int(fields[0], v)) {
      first = false;
      continue;
    }
    first = false;
    ++row;
    if (static_cast<int>(fields.size()) != tasks) {
      throw Error(ErrorCode::ParseError, "truth row " + std::to_string(row) + " needs " + std::to_string(tasks) + " values");
    }
    for (auto f : fields) {
      if (!parse_int(f, v) || (v != 1 && v != -1)) {
        throw Error(ErrorCode::ParseError, "truth row " + std::to_string(row) + ": labels must be 1 or -1");
      }
      out.push_back(static_cast<int>(v));
    }
  }
  if (row != rows) {
    throw Error(ErrorCode::ShapeMismatch, "truth file has " + std::to_string(row) + " rows, labels have " + std::to_string(rows));
  }
  return out;
}

void write_diagnostics(std::ostream& out, const FitResult& fit) {
  const auto& g = fit.graph;
  const auto& diag = fit.diagnostics;
  out << "sources " << g.sources << ", tasks " << g.tasks << "\n";
  out << "source  task  accuracy  triplets\n";
  for (int i = 0; i < g.sources; ++i) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%6d  %4d  %8.5f  %8d\n", i + 1, g.assignment[i] + 1,
                  fit.accuracies.by_source[i], diag.triplet_counts[i]);
    out << buf;
  }
  auto list = [&](const char* label, const std::vector<int>& ids) {
    out << label << ":";
    if (ids.empty()) out << " none";
    for (int id : ids) out << " " << id + 1;
    out << "\n";
  };
  list("ratio fallback", diag.ratio_fallback);
  list("conditional fallback", diag.conditional_fallback);
  for (std::size_t c = 0; c < fit.tree.cliques.size(); ++c) {
    out << "clique {" << describe_vertices(g, fit.tree.cliques[c]) << "} clip "
        << format_double(diag.clique_clip[c]) << "\n";
  }
  for (std::size_t s = 0; s < fit.tree.separators.size(); ++s) {
    out << "separator {" << describe_vertices(g, fit.tree.separators[s].vertices) << "} degree "
        << fit.tree.separators[s].degree << " clip " << format_double(diag.separator_clip[s]) << "\n";
  }
  out << "sign tie: " << (diag.sign_tie ? "yes" : "no") << "\n";
  for (const auto& w : diag.warnings) out << "warning: " << w << "\n";
}

}  // namespace trilabel::io
