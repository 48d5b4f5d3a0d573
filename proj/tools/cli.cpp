#include "cli.hpp"

#include <charconv>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "trilabel/error.hpp"
#include "trilabel/inference.hpp"
#include "trilabel/io.hpp"
#include "trilabel/online.hpp"
#include "trilabel/oracle.hpp"
#include "trilabel/recovery.hpp"

namespace trilabel::cli {

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FitOptions {
  std::string graph;
  std::string prior;
  std::optional<double> balance;
  std::string agg = "mean";
  std::string signs = "sum";
  std::string abstain = "alt";
  double eps_den = 1e-4;
  double eps_acc = 1e-3;
  double eps_prior = 1e-2;
  std::size_t n_min = 50;
  std::size_t triplet_cap = 500;
  bool ratio_fallback = false;
  bool greedy = false;
};

void add_fit_options(CLI::App* cmd, FitOptions& o) {
  cmd->add_option("--graph", o.graph, "Graph spec file (default: one task, independent sources)");
  auto* prior = cmd->add_option("--prior", o.prior, "Prior file");
  auto* balance = cmd->add_option("--balance", o.balance, "P(Y = 1) for a single task")
                      ->check(CLI::Range(0.0, 1.0));
  prior->excludes(balance);
  cmd->add_option("--agg", o.agg, "Triplet aggregation")->check(CLI::IsMember({"mean", "median"}));
  cmd->add_option("--signs", o.signs, "sum or anchor:i:+|-");
  cmd->add_option("--abstain", o.abstain, "alt or rand:SEED");
  cmd->add_option("--eps-den", o.eps_den, "Smallest usable triplet denominator")->check(CLI::PositiveNumber);
  cmd->add_option("--eps-acc", o.eps_acc, "Accuracy clamp floor")->check(CLI::PositiveNumber);
  cmd->add_option("--eps-prior", o.eps_prior, "Smallest |E[Y]| for the ratio fallback")->check(CLI::PositiveNumber);
  cmd->add_option("--n-min", o.n_min, "Rows needed for abstain-conditioned accuracies");
  cmd->add_option("--triplet-cap", o.triplet_cap, "Triplets per source")->check(CLI::PositiveNumber);
  cmd->add_flag("--ratio-fallback", o.ratio_fallback, "Allow a_i = E[v_i] / E[Y] without triplets");
  cmd->add_flag("--compat-greedy-triplets", o.greedy, "Single-pass greedy triplet selection");
}

std::uint64_t parse_seed(const std::string& text) {
  std::uint64_t seed = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), seed);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw UsageError("invalid seed '" + text + "'");
  }
  return seed;
}

RecoveryConfig make_config(const FitOptions& o, int sources) {
  RecoveryConfig cfg;
  cfg.accuracy.method = o.agg == "median" ? Aggregation::Median : Aggregation::Mean;
  cfg.accuracy.eps_den = o.eps_den;
  cfg.accuracy.eps_acc = o.eps_acc;
  cfg.accuracy.eps_prior = o.eps_prior;
  cfg.accuracy.n_min = o.n_min;
  cfg.accuracy.ratio_fallback = o.ratio_fallback;
  cfg.accuracy.greedy = o.greedy;
  cfg.triplet_cap = o.triplet_cap;
  if (o.signs != "sum") {
    // anchor:i:+ or anchor:i:-
    const auto first = o.signs.find(':'), last = o.signs.rfind(':');
    if (o.signs.rfind("anchor:", 0) != 0 || first == last) throw UsageError("--signs expects sum or anchor:i:+|-");
    const std::string id = o.signs.substr(first + 1, last - first - 1), sign = o.signs.substr(last + 1);
    const auto source = parse_seed(id);
    if (source < 1 || source > static_cast<std::uint64_t>(sources)) throw UsageError("anchor source out of range");
    if (sign != "+" && sign != "-") throw UsageError("anchor sign must be + or -");
    cfg.signs = SignStrategy::anchor(static_cast<int>(source - 1), sign == "+" ? 1 : -1);
  }
  if (o.abstain == "alt") {
    cfg.policy = AbstainPolicy::alternating();
  } else if (o.abstain.rfind("rand:", 0) == 0) {
    cfg.policy = AbstainPolicy::seeded(parse_seed(o.abstain.substr(5)));
  } else {
    throw UsageError("--abstain expects alt or rand:SEED");
  }
  return cfg;
}

DependencyGraph load_graph(const FitOptions& o, std::size_t sources) {
  if (o.graph.empty()) return DependencyGraph::star(static_cast<int>(sources));
  return io::read_graph_file(o.graph);
}

ClassPrior load_prior(const FitOptions& o, int tasks) {
  if (o.balance) {
    if (tasks != 1) throw UsageError("--balance needs a single-task graph; use --prior");
    return ClassPrior::balance(*o.balance);
  }
  if (o.prior.empty()) throw UsageError("a prior is required: --prior PATH or --balance p");
  return io::read_prior_file(o.prior, tasks);
}

std::ofstream create(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::InvalidInput, "cannot write " + path);
  return f;
}

// Writes to the file when a path is given, else to the fallback stream.
template <typename Fn>
void emit(const std::string& path, std::ostream& fallback, Fn&& fn) {
  if (path.empty() || path == "-") {
    fn(fallback);
  } else {
    auto f = create(path);
    fn(f);
  }
}

void evaluate(const std::string& truth_path, const PosteriorLabels& post, std::ostream& err) {
  if (truth_path.empty()) return;
  const auto truth = io::read_truth_file(truth_path, post.tasks, post.rows);
  std::size_t correct = 0;
  for (std::size_t r = 0; r < post.rows; ++r)
    for (int d = 0; d < post.tasks; ++d)
      if ((post(r, d) >= 0.5 ? 1 : -1) == truth[r * post.tasks + d]) ++correct;
  const double total = static_cast<double>(post.rows * post.tasks);
  err << "accuracy " << io::format_probability(total > 0 ? correct / total : 0.0) << " over "
      << post.rows << " rows\n";
}

std::vector<double> parse_list(const std::string& text, const char* flag) {
  std::vector<double> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    double v;
    const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc() || ptr != item.data() + item.size()) {
      throw UsageError(std::string(flag) + ": '" + item + "' is not a number");
    }
    out.push_back(v);
  }
  return out;
}

}  // namespace

int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Triplet-based label model: fit source accuracies without ground truth"};
  app.require_subcommand(1);
  app.set_config("--config", "", "INI/TOML file with option values")->check(CLI::ExistingFile);
  unsigned threads = 1;
  app.add_option("--threads", threads, "Worker threads for prediction")->check(CLI::PositiveNumber);

  FitOptions fit_opt, fp_opt, stream_opt;
  std::string labels, out_path, report, params, truth, params_out;

  auto* fit = app.add_subcommand("fit", "Estimate label-model parameters");
  fit->add_option("--labels", labels, "Label matrix CSV")->required();
  fit->add_option("--out", out_path, "Parameter file to write")->required();
  fit->add_option("--report", report, "Diagnostics file (default: standard error)");
  add_fit_options(fit, fit_opt);

  auto* predict = app.add_subcommand("predict", "Posterior labels from saved parameters");
  predict->add_option("--labels", labels, "Label matrix CSV")->required();
  predict->add_option("--params", params, "Parameter file from fit")->required();
  predict->add_option("--out", out_path, "Posterior CSV (default: standard output)");
  predict->add_option("--truth", truth, "Evaluate against a ground-truth file");

  auto* fit_predict = app.add_subcommand("fit-predict", "Fit, then label the same matrix");
  fit_predict->add_option("--labels", labels, "Label matrix CSV")->required();
  fit_predict->add_option("--out", out_path, "Posterior CSV (default: standard output)");
  fit_predict->add_option("--params-out", params_out, "Also write the parameter file");
  fit_predict->add_option("--report", report, "Diagnostics file (default: standard error)");
  fit_predict->add_option("--truth", truth, "Evaluate against a ground-truth file");
  add_fit_options(fit_predict, fp_opt);

  std::size_t window = 0;
  std::optional<std::size_t> warmup;
  auto* stream = app.add_subcommand("stream", "Label vote rows from standard input as they arrive");
  stream->add_option("--window", window, "Rows kept in the estimation window (0 keeps all)");
  stream->add_option("--warmup", warmup, "Rows before the first fit (default max(100, 10 m))");
  add_fit_options(stream, stream_opt);

  std::string model, truth_out;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  auto* simulate = app.add_subcommand("simulate", "Sample a dataset from an Ising model spec");
  simulate->add_option("--model", model, "Model spec file")->required();
  simulate->add_option("--n", n, "Rows to sample")->required();
  simulate->add_option("--seed", seed, "Sampler seed");
  simulate->add_option("--out", out_path, "Label matrix CSV to write")->required();
  simulate->add_option("--truth-out", truth_out, "Hidden labels CSV to write")->required();

  std::string accuracies, abstain_rates, flip, windows = "50,100,200,400,800,1600";
  double sweep_balance = 0.5;
  std::size_t period = 0, steps = 10000;
  auto* sweep = app.add_subcommand("sweep", "Window-size sweep on a drifting synthetic stream");
  sweep->add_option("--accuracies", accuracies, "Comma-separated E[lambda_i Y] per source")->required();
  sweep->add_option("--abstain-rates", abstain_rates, "Comma-separated P(lambda_i = 0) per source");
  sweep->add_option("--balance", sweep_balance, "P(Y = 1)")->check(CLI::Range(0.0, 1.0));
  sweep->add_option("--flip", flip, "Comma-separated sources (1-indexed) whose accuracy inverts");
  sweep->add_option("--period", period, "Steps between inversions (0: no drift)");
  sweep->add_option("--steps", steps, "Stream length");
  sweep->add_option("--windows", windows, "Comma-separated candidate windows (0 = cumulative)");
  sweep->add_option("--seed", seed, "Stream seed");

  std::vector<std::string> argv_store{"trilabel"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_store) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return 1;
  }

  try {
    auto fit_and_report = [&](const FitOptions& o, const LabelMatrix& l) {
      const auto g = load_graph(o, l.sources());
      const auto prior = load_prior(o, g.tasks);
      auto result = recover_parameters(l, g, prior, make_config(o, g.sources));
      emit(report, err, [&](std::ostream& s) { io::write_diagnostics(s, result); });
      return result;
    };

    if (*fit) {
      const auto l = io::read_labels_file(labels);
      const auto result = fit_and_report(fit_opt, l);
      emit(out_path, out, [&](std::ostream& s) { io::save_parameters(s, result.params); });
    } else if (*predict) {
      const auto l = io::read_labels_file(labels);
      const auto mu = io::load_parameters_file(params);
      const auto post = predict_proba(l, mu, threads);
      emit(out_path, out, [&](std::ostream& s) { io::write_posteriors(s, post); });
      evaluate(truth, post, err);
    } else if (*fit_predict) {
      const auto l = io::read_labels_file(labels);
      const auto result = fit_and_report(fp_opt, l);
      if (!params_out.empty()) {
        auto f = create(params_out);
        io::save_parameters(f, result.params);
      }
      const auto post = predict_proba(l, result.params, threads);
      emit(out_path, out, [&](std::ostream& s) { io::write_posteriors(s, post); });
      evaluate(truth, post, err);
    } else if (*stream) {
      std::optional<OnlineLabelModel> online;
      std::optional<ClassPrior> prior;
      std::string line;
      std::size_t row = 0;
      while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto votes = io::parse_vote_row(line, ++row);
        if (!online) {
          const auto g = load_graph(stream_opt, votes.size());
          prior = load_prior(stream_opt, g.tasks);
          OnlineConfig cfg;
          cfg.recovery = make_config(stream_opt, g.sources);
          cfg.window = window;
          cfg.warmup = warmup;
          online.emplace(g, cfg);
        }
        const auto res = online->step(votes, *prior);
        std::string text;
        for (std::size_t d = 0; d < res.posterior.size(); ++d) {
          if (d) text += ',';
          text += io::format_probability(res.posterior[d]);
        }
        out << text << '\n';
        if (res.stale && !res.diagnostic.empty()) err << "row " << row << ": stale model: " << res.diagnostic << "\n";
      }
    } else if (*simulate) {
      const auto spec = io::read_model_file(model);
      const auto joint = enumerate_joint(spec.theta, spec.graph);
      const auto s = sample(joint, n, seed);
      emit(out_path, out, [&](std::ostream& f) { io::write_labels(f, s.labels); });
      emit(truth_out, out, [&](std::ostream& f) { io::write_truth(f, s); });
    } else if (*sweep) {
      const auto acc = parse_list(accuracies, "--accuracies");
      auto rates = abstain_rates.empty() ? std::vector<double>(acc.size(), 0.0)
                                         : parse_list(abstain_rates, "--abstain-rates");
      std::vector<int> flipped;
      if (!flip.empty()) {
        for (double f : parse_list(flip, "--flip")) {
          if (f < 1 || f > static_cast<double>(acc.size()) || f != static_cast<int>(f)) {
            throw UsageError("--flip: source ids must be integers in 1.." + std::to_string(acc.size()));
          }
          flipped.push_back(static_cast<int>(f) - 1);
        }
      }
      std::vector<std::size_t> candidates;
      for (double w : parse_list(windows, "--windows")) {
        if (w < 0 || w != static_cast<std::size_t>(w)) throw UsageError("--windows: sizes must be nonnegative integers");
        candidates.push_back(static_cast<std::size_t>(w));
      }
      const StarModel base(sweep_balance, acc, rates);
      const auto result = sweep_window(base, flipped, period, steps, candidates, seed);
      out << "window,param_error,label_error\n";
      for (const auto& p : result.points) {
        out << p.window << ',' << io::format_probability(p.error) << ','
            << io::format_probability(p.label_error) << '\n';
      }
      out << "best window " << result.best_window << '\n';
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return is_numerical(e.code()) ? 3 : 2;
  }
  return 0;
}

}  // namespace trilabel::cli
