#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "support.hpp"
#include "trilabel/io.hpp"

using namespace trilabel;
using testing::code_of;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("trilabel_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name, const std::string& content = {}) const {
    const auto p = (path / name).string();
    if (!content.empty()) std::ofstream(p) << content;
    return p;
  }
};

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args, const std::string& input = {}) {
  std::istringstream in(input);
  std::ostringstream out, err;
  const int code = cli::run(args, in, out, err);
  return {code, out.str(), err.str()};
}

std::string labels_csv(const LabelMatrix& l) {
  std::ostringstream out;
  io::write_labels(out, l);
  return out.str();
}

}  // namespace

TEST_CASE("label CSV parsing") {
  std::istringstream with_header("s1,s2,s3\n1,0,-1\n-1,1,0\n");
  const auto l = io::read_labels(with_header);
  CHECK(l == LabelMatrix(2, 3, {1, 0, -1, -1, 1, 0}));

  std::istringstream bare(" 1, 0\n\n0,-1\n");
  CHECK(io::read_labels(bare) == LabelMatrix(2, 2, {1, 0, 0, -1}));

  std::istringstream bad_vote("1,0\n0,2\n");
  try {
    io::read_labels(bad_vote);
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidInput);
    CHECK(std::string(e.what()).find("row 2, column 2") != std::string::npos);
  }
  std::istringstream ragged("1,0\n0\n");
  CHECK(code_of([&] { io::read_labels(ragged); }) == ErrorCode::ParseError);
  std::istringstream text("1,0\n0,x\n");
  CHECK(code_of([&] { io::read_labels(text); }) == ErrorCode::ParseError);

  const auto random = testing::Gen(1).labels(50, 4);
  std::istringstream back(labels_csv(random));
  CHECK(io::read_labels(back) == random);
}

TEST_CASE("graph spec round trip") {
  const auto g = testing::chain3();
  std::ostringstream out;
  io::write_graph(out, g);
  std::istringstream in(out.str() + "# trailing comment\n");
  CHECK(io::read_graph(in) == g);
  std::istringstream early("assign 1 1\ntasks 1\nsources 1\n");
  CHECK(code_of([&] { io::read_graph(early); }) == ErrorCode::ParseError);
  std::istringstream range("tasks 1\nsources 2\nassign 3 1\n");
  CHECK(code_of([&] { io::read_graph(range); }) == ErrorCode::ParseError);
}

TEST_CASE("prior file forms") {
  std::istringstream balance("balance 0.3\n");
  CHECK(io::read_prior(balance, 1).p_positive(0) == doctest::Approx(0.3));
  std::istringstream scalar("0.7\n");
  CHECK(io::read_prior(scalar, 1).p_positive(0) == doctest::Approx(0.7));
  std::istringstream joint("1 1 0.4\n1 -1 0.1\n-1 1 0.1\n-1 -1 0.4\n");
  CHECK(io::read_prior(joint, 2).pair_mean(0, 1) == doctest::Approx(0.6));
  std::istringstream fact("mean 1 0.2\nmean 2 -0.2\npair 1 2 0.5\n");
  CHECK(io::read_prior(fact, 2).pair_mean(0, 1) == doctest::Approx(0.5));
  std::istringstream mixed("mean 1 0.2\n1 1 0.5\n");
  CHECK(code_of([&] { io::read_prior(mixed, 2); }) == ErrorCode::ParseError);
  std::istringstream empty("");
  CHECK(code_of([&] { io::read_prior(empty, 1); }) == ErrorCode::ParseError);
}

TEST_CASE("parameter files round-trip bit-exactly") {
  const auto joint = enumerate_joint(CanonicalParameters::random(testing::chain3(), 9), testing::chain3());
  const auto params = exact_statistics(joint).params;
  std::stringstream buf;
  io::save_parameters(buf, params);
  const auto loaded = io::load_parameters(buf);
  CHECK(loaded == params);
  std::stringstream again;
  io::save_parameters(again, loaded);
  std::stringstream first;
  io::save_parameters(first, params);
  CHECK(again.str() == first.str());
  std::istringstream junk("not a parameter file\n");
  CHECK(code_of([&] { io::load_parameters(junk); }) == ErrorCode::ParseError);
}

TEST_CASE("property: formatted doubles parse back exactly") {
  testing::Gen gen(3);
  for (int k = 0; k < 1000; ++k) {
    const double x = gen.real(-1.0, 1.0) * std::pow(10.0, gen.integer(-300, 300));
    CHECK(std::stod(io::format_double(x)) == x);
  }
  CHECK(io::format_probability(1.0 / 3) == "0.333333333");
  CHECK(io::format_probability(1.0) == "1");
}

TEST_CASE("posterior CSV layout") {
  PosteriorLabels p{2, 2, {0.1, 0.25, 1.0 / 3, 1.0}};
  std::ostringstream out;
  io::write_posteriors(out, p);
  CHECK(out.str() == "row,task,p_pos\n1,1,0.1\n1,2,0.25\n2,1,0.333333333\n2,2,1\n");
}

TEST_CASE("model spec parsing") {
  std::istringstream in(
      "tasks 1\nsources 3\nassign 1 1\nassign 2 1\nassign 3 1\nsedge 1 2\n"
      "theta task 1 0.2\ntheta acc 2 0.9\ntheta abstain 3 -0.4\ntheta dep 2 1 0.1\nnoabstain 1\n");
  const auto spec = io::read_model(in);
  CHECK(spec.graph.source_edges == std::vector<Edge>{{0, 1}});
  CHECK(spec.theta.task[0] == 0.2);
  CHECK(spec.theta.accuracy[1] == 0.9);
  CHECK(spec.theta.abstain[2] == -0.4);
  CHECK(spec.theta.dependency.at({0, 1}) == 0.1);
  CHECK_FALSE(spec.theta.can_abstain[0]);
  std::istringstream bad("tasks 1\nsources 1\ntheta bias 1 0.2\n");
  CHECK(code_of([&] { io::read_model(bad); }) == ErrorCode::ParseError);
}

TEST_CASE("cli exit codes") {
  TempDir dir;
  CHECK(run({"--help"}).code == 0);
  CHECK(run({}).code == 1);
  CHECK(run({"fit", "--labels", "x.csv"}).code == 1);
  CHECK(run({"frobnicate"}).code == 1);

  const auto bad = dir.file("bad.csv", "1,0,1\n0,1,5\n");
  const auto r = run({"fit-predict", "--labels", bad, "--balance", "0.5"});
  CHECK(r.code == 2);
  CHECK(r.err.find("row 2, column 3") != std::string::npos);

  const auto missing = run({"fit-predict", "--labels", (dir.path / "none.csv").string(), "--balance", "0.5"});
  CHECK(missing.code == 2);

  const auto two = dir.file("two.csv", labels_csv(StarModel(0.5, {0.6, 0.7}, {0, 0}).sample(500, 1).labels));
  const auto numeric = run({"fit-predict", "--labels", two, "--balance", "0.5"});
  CHECK(numeric.code == 3);
  CHECK(numeric.err.find("InsufficientIndependence") != std::string::npos);

  CHECK(run({"fit-predict", "--labels", two}).code == 1);  // no prior
  CHECK(run({"fit-predict", "--labels", two, "--balance", "0.5", "--signs", "anchor:9:+"}).code == 1);
}

TEST_CASE("cli fit, predict, and fit-predict agree and are deterministic") {
  TempDir dir;
  const StarModel model(0.4, {0.7, 0.6, 0.5, 0.8}, {0.2, 0.1, 0.3, 0.0});
  const auto s = model.sample(5000, 2);
  const auto labels = dir.file("labels.csv", labels_csv(s.labels));
  const auto params = dir.file("params.txt");
  const auto params2 = dir.file("params2.txt");

  REQUIRE(run({"fit", "--labels", labels, "--balance", "0.4", "--out", params}).code == 0);
  const auto predicted = run({"predict", "--labels", labels, "--params", params});
  REQUIRE(predicted.code == 0);
  const auto combined = run({"fit-predict", "--labels", labels, "--balance", "0.4", "--params-out", params2});
  REQUIRE(combined.code == 0);
  CHECK(predicted.out == combined.out);
  CHECK(slurp(params) == slurp(params2));
  CHECK(run({"--threads", "3", "fit-predict", "--labels", labels, "--balance", "0.4"}).out == combined.out);
  CHECK(combined.out.rfind("row,task,p_pos\n1,1,", 0) == 0);
  CHECK(std::count(combined.out.begin(), combined.out.end(), '\n') == 5001);

  const auto mu = io::load_parameters_file(params);
  const auto direct = predict_proba(s.labels, mu);
  std::ostringstream expected;
  io::write_posteriors(expected, direct);
  CHECK(predicted.out == expected.str());
}

TEST_CASE("cli simulate then fit-predict with evaluation") {
  TempDir dir;
  const auto model = dir.file("model.txt",
                              "tasks 1\nsources 4\nassign 1 1\nassign 2 1\nassign 3 1\nassign 4 1\n"
                              "theta acc 1 0.8\ntheta acc 2 0.6\ntheta acc 3 0.5\ntheta acc 4 0.7\n");
  const auto labels = dir.file("labels.csv"), truth = dir.file("truth.csv");
  REQUIRE(run({"simulate", "--model", model, "--n", "20000", "--seed", "4", "--out", labels,
               "--truth-out", truth})
              .code == 0);
  const auto first = slurp(labels);
  REQUIRE(run({"simulate", "--model", model, "--n", "20000", "--seed", "4", "--out", labels,
               "--truth-out", truth})
              .code == 0);
  CHECK(slurp(labels) == first);
  const auto r = run({"fit-predict", "--labels", labels, "--balance", "0.5", "--truth", truth});
  REQUIRE(r.code == 0);
  const auto pos = r.err.rfind("\naccuracy ");
  REQUIRE(pos != std::string::npos);
  CHECK(std::stod(r.err.substr(pos + 10)) > 0.8);
}

TEST_CASE("cli simulate then fit-predict recovers the oracle tables within 0.02") {
  TempDir dir;
  const auto spec = "tasks 1\nsources 5\nassign 1 1\nassign 2 1\nassign 3 1\nassign 4 1\nassign 5 1\n"
                    "theta acc 1 0.9\ntheta acc 2 0.5\ntheta acc 3 0.7\ntheta acc 4 0.4\ntheta acc 5 0.6\n"
                    "theta abstain 2 0.3\ntheta abstain 4 -0.2\n";
  const auto model = dir.file("model.txt", spec);
  const auto labels = dir.file("labels.csv"), truth = dir.file("truth.csv");
  const auto params = dir.file("params.txt"), post = dir.file("post.csv");
  REQUIRE(run({"simulate", "--model", model, "--n", "100000", "--seed", "12", "--out", labels,
               "--truth-out", truth})
              .code == 0);
  REQUIRE(run({"fit-predict", "--labels", labels, "--balance", "0.5", "--out", post, "--params-out",
               params})
              .code == 0);
  const auto parsed = io::read_model_file(model);
  const auto exact = exact_statistics(enumerate_joint(parsed.theta, parsed.graph));
  CHECK(testing::max_table_error(io::load_parameters_file(params), exact.params) <= 0.02);
}

TEST_CASE("cli stream emits one line per input row") {
  const auto s = StarModel(0.5, {0.7, 0.6, 0.8}, {0.1, 0.1, 0.0}).sample(300, 5);
  std::string input;
  for (std::size_t r = 0; r < s.labels.rows(); ++r) {
    for (int i = 0; i < 3; ++i) input += (i ? "," : "") + std::to_string(s.labels(r, i));
    input += "\n";
  }
  const auto res = run({"stream", "--balance", "0.5", "--window", "100", "--warmup", "50"}, input);
  REQUIRE(res.code == 0);
  std::istringstream lines(res.out);
  std::vector<double> p;
  for (std::string line; std::getline(lines, line);) p.push_back(std::stod(line));
  REQUIRE(p.size() == 300);
  for (std::size_t t = 0; t < 49; ++t) CHECK(p[t] == 0.5);
  CHECK(std::any_of(p.begin() + 49, p.end(), [](double x) { return x != 0.5; }));

  const auto bad = run({"stream", "--balance", "0.5"}, "1,0,1\n1,0\n");
  CHECK(bad.code == 2);
  CHECK(bad.out == "0.5\n");
}

TEST_CASE("cli sweep prints one line per window") {
  const auto r = run({"sweep", "--accuracies", "0.8,0.7,0.8,0.75,0.7", "--flip", "1,2", "--period", "200",
                      "--steps", "1500", "--windows", "50,200,800", "--seed", "3"});
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("window,param_error,label_error\n50,", 0) == 0);
  CHECK(r.out.find("\nbest window ") != std::string::npos);
  CHECK(run({"sweep", "--accuracies", "0.8,x"}).code == 1);
}
