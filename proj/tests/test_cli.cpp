#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "cli.hpp"
#include "io.hpp"

namespace fs = std::filesystem;
using tpbn::cli::run;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome call(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("tpbn_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string write(const std::string& name, const std::string& text) {
    const auto p = dir_ / name;
    std::ofstream(p) << text;
    return p.string();
  }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::string toy_csv() {
    return write("toy.csv", "y,x1,x2\n1.2,0.5,-1.0\n-0.3,1.5,0.2\n2.1,-0.7,1.1\n0.4,0.3,0.9\n-1.0,-1.2,-0.4\n");
  }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, FitVbSmoke) {
  const auto r = call({"fit", "--method", "vb", "--input", toy_csv(), "--header", "--phi", "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto doc = nlohmann::json::parse(r.out);
  EXPECT_EQ(doc["result"]["coefficients"].size(), 2u);
  EXPECT_TRUE(doc["result"]["converged"].get<bool>());
  EXPECT_EQ(doc["config"]["method"], "vb");
}

TEST_F(CliTest, FitEveryMethodWithEveryPhiMode) {
  for (const std::string method : {"vb", "gibbs", "map"}) {
    for (const std::string phi : {"0.5", "auto", "cauchy"}) {
      if (method == "map" && phi == "cauchy") continue;
      const auto r = call({"fit", "--method", method, "--input", toy_csv(), "--header", "--phi", phi, "--iters", "300",
                           "--burnin", "100", "--standardize"});
      EXPECT_EQ(r.code, 0) << method << " " << phi << " " << r.err;
    }
  }
  const auto bad = call({"fit", "--method", "map", "--input", toy_csv(), "--header", "--phi", "cauchy"});
  EXPECT_EQ(bad.code, 2);
}

TEST_F(CliTest, MapWarnsWhenExactZerosImpossible) {
  const auto r = call({"fit", "--method", "map", "--a", "1.5", "--phi", "1", "--input", toy_csv(), "--header"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("warning"), std::string::npos);
  EXPECT_NE(r.err.find("0 < a <= 1"), std::string::npos) << r.err;
  EXPECT_FALSE(nlohmann::json::parse(r.out)["result"]["warnings"].empty());
}

TEST_F(CliTest, GibbsChainsAreByteIdentical) {
  const auto in = toy_csv();
  for (const char* name : {"c1.csv", "c2.csv"}) {
    const auto r = call({"fit", "--method", "gibbs", "--seed", "7", "--input", in, "--header", "--iters", "500",
                         "--burnin", "100", "--chain-out", path(name), "--output", path(std::string(name) + ".json")});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  const auto a = slurp(path("c1.csv"));
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, slurp(path("c2.csv")));
  EXPECT_EQ(slurp(path("c1.csv.json")), slurp(path("c2.csv.json")));
  const auto other = call({"fit", "--method", "gibbs", "--seed", "8", "--input", in, "--header", "--iters", "500",
                           "--burnin", "100", "--chain-out", path("c3.csv")});
  EXPECT_NE(a, slurp(path("c3.csv")));
}

TEST_F(CliTest, EmbeddedConfigReproducesArtifacts) {
  const auto in = toy_csv();
  ASSERT_EQ(call({"fit", "--method", "gibbs", "--seed", "3", "--input", in, "--header", "--iters", "400", "--burnin", "100", "--phi", "auto",
                  "--output", path("r1.json")})
                .code,
            0);
  const auto r = call({"fit", "--config", path("r1.json"), "--output", path("r2.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(path("r1.json")), slurp(path("r2.json")));

  ASSERT_EQ(call({"fit", "--method", "vb", "--input", in, "--header", "--tol", "1e-10", "--output", path("v1.json")}).code, 0);
  ASSERT_EQ(call({"fit", "--config", path("v1.json"), "--output", path("v2.json")}).code, 0);
  EXPECT_EQ(slurp(path("v1.json")), slurp(path("v2.json")));

  // Explicit flags override the file.
  ASSERT_EQ(call({"fit", "--config", path("v1.json"), "--a", "0.7", "--output", path("v3.json")}).code, 0);
  EXPECT_EQ(nlohmann::json::parse(slurp(path("v3.json")))["config"]["a"], 0.7);

  ASSERT_EQ(call({"simulate", "--case", "2", "--n", "12", "--p", "4", "--replicates", "2", "--out-dir", path("s1")}).code, 0);
  ASSERT_EQ(call({"simulate", "--config", path("s1/manifest.json"), "--out-dir", path("s2")}).code, 0);
  EXPECT_EQ(slurp(path("s1/manifest.json")), slurp(path("s2/manifest.json")));

  ASSERT_EQ(call({"benchmark", "--case", "1", "--n", "30", "--p", "5", "--replicates", "2", "--methods",
                  "lasso,vb:0.5:0.5:cauchy", "--bootstrap", "20", "--out", path("b1")})
                .code,
            0);
  ASSERT_EQ(call({"benchmark", "--config", path("b1/summary.json"), "--out", path("b2")}).code, 0);
  EXPECT_EQ(slurp(path("b1/summary.json")), slurp(path("b2/summary.json")));
  EXPECT_EQ(slurp(path("b1/benchmark.csv")), slurp(path("b2/benchmark.csv")));
}

TEST_F(CliTest, SimulateWritesFilesAndIsDeterministic) {
  const auto r = call({"simulate", "--case", "1", "--replicates", "3", "--seed", "1", "--out-dir", path("a")});
  ASSERT_EQ(r.code, 0) << r.err;
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(path("a"))) files += e.path().extension() == ".csv";
  EXPECT_EQ(files, 6u);  // data and covariance per replicate
  const auto manifest = nlohmann::json::parse(slurp(path("a/manifest.json")));
  ASSERT_EQ(manifest["replicates"].size(), 3u);
  EXPECT_EQ(manifest["replicates"][0]["true_beta"].size(), 20u);
  EXPECT_EQ(manifest["config"]["n"], 50);
  ASSERT_EQ(call({"simulate", "--case", "1", "--replicates", "3", "--seed", "1", "--out-dir", path("b")}).code, 0);
  for (const auto& e : fs::directory_iterator(path("a"))) {
    EXPECT_EQ(slurp(e.path()), slurp(path("b") / e.path().filename())) << e.path();
  }
  // A simulated file fits back through the CLI.
  const auto fit = call({"fit", "--method", "vb", "--header", "--input", path("a/replicate_0000.csv")});
  EXPECT_EQ(fit.code, 0) << fit.err;
}

TEST_F(CliTest, SimulateHighdimDefaults) {
  const auto r = call({"simulate", "--case", "highdim", "--replicates", "1", "--out-dir", path("h")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto manifest = nlohmann::json::parse(slurp(path("h/manifest.json")));
  EXPECT_EQ(manifest["config"]["n"], 100);
  EXPECT_EQ(manifest["config"]["p"], 10000);
  EXPECT_EQ(manifest["replicates"][0]["nonzero"], 10);
  EXPECT_EQ(manifest["replicates"][0]["design_cov"], "identity");
}

TEST_F(CliTest, BenchmarkLassoOnly) {
  const auto r = call({"benchmark", "--case", "1", "--replicates", "3", "--methods", "lasso", "--bootstrap", "30",
                       "--out", path("bench")});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream csv(slurp(path("bench/benchmark.csv")));
  std::string line;
  std::getline(csv, line);
  const auto cols = line;
  std::size_t rows = 0;
  while (std::getline(csv, line)) {
    ++rows;
    EXPECT_NE(line.find(",1,"), std::string::npos) << cols << "\n" << line;
  }
  const auto summary = nlohmann::json::parse(slurp(path("bench/summary.json")));
  EXPECT_EQ(rows + summary["methods"][0]["failures"].get<std::size_t>(), 3u);
  EXPECT_EQ(summary["methods"][0]["median_rme"], 1.0);
}

TEST_F(CliTest, BenchmarkRowCount) {
  const auto r = call({"benchmark", "--case", "2", "--n", "30", "--p", "6", "--replicates", "2", "--methods",
                       "lasso,vb:0.5:0.5:cauchy,map:1:0.5:1", "--bootstrap", "10", "--out", path("bench")});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream csv(slurp(path("bench/benchmark.csv")));
  std::string line;
  std::size_t rows = 0;
  std::getline(csv, line);
  while (std::getline(csv, line)) ++rows;
  const auto summary = nlohmann::json::parse(slurp(path("bench/summary.json")));
  std::size_t excluded = 0;
  for (const auto& m : summary["methods"]) excluded += m["failures"].get<std::size_t>();
  EXPECT_EQ(rows + excluded, 6u);
  EXPECT_EQ(summary["methods"].size(), 3u);
}

TEST_F(CliTest, CalibratePhi) {
  auto value = [](const std::string& text, const std::string& key) {
    const auto pos = text.find(key + " ");
    return std::stod(text.substr(pos + key.size() + 1));
  };
  const auto r = call({"calibrate-phi", "--a", "1", "--b", "0.5", "--threshold", "0.5", "--target", "0.99"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NEAR(value(r.out, "phi"), 1e-4, 1e-5);
  EXPECT_NEAR(value(r.out, "p_above_threshold"), 0.99, 1e-6);
  const auto s = call({"calibrate-phi", "--a", "0.5", "--b", "0.5", "--threshold", "0.5", "--target", "0.5"});
  ASSERT_EQ(s.code, 0);
  EXPECT_NEAR(value(s.out, "phi"), 1.0, 1e-7);
  const auto bad = call({"calibrate-phi", "--a", "1", "--b", "0.5", "--threshold", "0.5", "--target", "1.5"});
  EXPECT_NE(bad.code, 0);
  EXPECT_EQ(std::count(bad.err.begin(), bad.err.end(), '\n'), 1);
}

TEST_F(CliTest, ExitCodesAndDiagnostics) {
  const auto in = toy_csv();
  auto one_line = [](const Outcome& o) { return std::count(o.err.begin(), o.err.end(), '\n') == 1; };

  auto r = call({"fit", "--method", "lasso", "--input", in, "--header"});
  EXPECT_EQ(r.code, 2);
  EXPECT_TRUE(one_line(r)) << r.err;
  r = call({"fit", "--method", "vb", "--input", in, "--header", "--bogus"});
  EXPECT_EQ(r.code, 2);
  r = call({"fit", "--method", "vb", "--input", in, "--header", "--chain-out", path("x.csv")});
  EXPECT_EQ(r.code, 2);
  r = call({"fit", "--method", "vb", "--input", in, "--header", "--a", "-1"});
  EXPECT_EQ(r.code, 2);
  r = call({"fit", "--method", "vb", "--input", path("missing.csv")});
  EXPECT_EQ(r.code, 4);
  EXPECT_TRUE(one_line(r)) << r.err;
  r = call({});
  EXPECT_EQ(r.code, 2);
  r = call({"simulate", "--case", "3", "--out-dir", path("z")});
  EXPECT_EQ(r.code, 2);
  r = call({"simulate", "--case", "1", "--replicates", "1", "--out-dir", write("file", "x") + "/sub"});
  EXPECT_EQ(r.code, 4);
  for (const std::string method : {"gibbs", "vb", "map"}) {
    r = call({"fit", "--method", method, "--input", write("big.csv", "1e300,1\n-1e300,2\n1e300,3\n")});
    EXPECT_EQ(r.code, 3) << method << " " << r.err;
    EXPECT_TRUE(one_line(r)) << r.err;
  }
  r = call({"fit", "--config", path("missing.json"), "--input", in});
  EXPECT_EQ(r.code, 4);
  r = call({"fit", "--config", write("bad.json", "{not json"), "--input", in});
  EXPECT_EQ(r.code, 2);
}

TEST_F(CliTest, MalformedCsv) {
  auto r = call({"fit", "--method", "vb", "--header", "--input", write("ragged.csv", "y,x1\n1,2\n3\n")});
  EXPECT_EQ(r.code, 4);
  EXPECT_NE(r.err.find(":3:"), std::string::npos) << r.err;
  r = call({"fit", "--method", "vb", "--input", write("text.csv", "1,2\n3,abc\n")});
  EXPECT_EQ(r.code, 4);
  EXPECT_NE(r.err.find("field 2"), std::string::npos) << r.err;
  r = call({"fit", "--method", "vb", "--input", write("nan.csv", "1,2\n3,nan\n")});
  EXPECT_EQ(r.code, 4);
  r = call({"fit", "--method", "vb", "--header", "--input", write("empty.csv", "y,x1\n")});
  EXPECT_EQ(r.code, 4);
  r = call({"fit", "--method", "vb", "--input", write("noparams.csv", "1\n2\n3\n")});
  EXPECT_EQ(r.code, 2) << r.err;
}

TEST(CliIo, FloatFormattingRoundTrips) {
  for (double x : {0.1, 1.0 / 3.0, 1e-300, 123456789.123456789, -2.5e17}) {
    EXPECT_EQ(std::stod(tpbn::cli::format_double(x)), x);
  }
  EXPECT_EQ(tpbn::cli::format_double(std::numeric_limits<double>::quiet_NaN()), "null");
}
