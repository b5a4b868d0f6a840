#include "doctest.h"

#include "sgqif/experiment.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace sgqif;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.scenario.n = 40;
  c.scenario.k = 3;
  c.scenario.p = 8;
  c.scenario.q = 2;
  c.scenario.n_true = 6;
  c.scenario.seed = 2024;
  c.grid = TuningGrid::log_spaced(0.02, 0.3, 2);
  c.replicates = 2;
  return c;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ReplicateRow row(int tp, int fp, double mse, bool ok = true) {
  ReplicateRow r;
  r.ok = ok;
  r.metrics.tp_overall = tp;
  r.metrics.fp_overall = fp;
  r.metrics.mse = mse;
  return r;
}

}  // namespace

TEST_SUITE("experiment") {

TEST_CASE("mean and sample sd") {
  const auto m = mean_sd({1.0, 2.0, 6.0});
  CHECK(m.mean == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(m.sd == doctest::Approx(std::sqrt(7.0)).epsilon(1e-15));
  CHECK(mean_sd({4.2}).sd == 0.0);
  CHECK(format_mean_sd({21.43, 1.06}) == "21.4(1.1)");
  CHECK(format_mean_sd({1.1234, 0.0456}, 3) == "1.123(0.046)");
}

TEST_CASE("summary of a hand-made table") {
  const std::vector<ReplicateRow> rows{row(20, 3, 1.0), row(22, 1, 1.5), row(21, 2, 2.0), row(0, 0, 0.0, false)};
  const auto s = summarize(rows);
  REQUIRE(s.size() == 1);
  CHECK(s[0].succeeded == 3);
  CHECK(s[0].failed == 1);
  CHECK(s[0].tp.mean == doctest::Approx(21.0));
  CHECK(s[0].tp.sd == doctest::Approx(1.0));
  CHECK(s[0].fp.mean == doctest::Approx(2.0));
  CHECK(s[0].fp.sd == doctest::Approx(1.0));
  CHECK(s[0].mse.mean == doctest::Approx(1.5));
  CHECK(s[0].mse.sd == doctest::Approx(0.5));
}

TEST_CASE("rows group by method and structure") {
  std::vector<ReplicateRow> rows{row(1, 0, 1.0), row(2, 0, 1.0), row(3, 0, 1.0)};
  rows[1].method = PenaltyKind::Group;
  rows[2].structure = CorrelationKind::Ar1;
  CHECK(summarize(rows).size() == 3);
}

TEST_CASE("same seed gives identical output files") {
  auto config = small_config();
  const auto base = std::filesystem::temp_directory_path() / "sgqif_experiment_det";
  std::filesystem::remove_all(base);
  std::string first[3];
  for (int run = 0; run < 2; ++run) {
    config.out_dir = base / std::to_string(run);
    config.threads = run == 0 ? 1 : 2;
    const auto report = run_experiment(config);
    CHECK(report.rows.size() == 6);
    write_experiment(report);
    const std::string files[3] = {"replicates.csv", "summary.txt", "summary.json"};
    for (int f = 0; f < 3; ++f) {
      const std::string text = slurp(config.out_dir / files[f]);
      CHECK_FALSE(text.empty());
      if (run == 0) first[f] = text;
      else CHECK(text == first[f]);
    }
    CHECK(std::filesystem::exists(config.out_dir / "timings.csv"));
  }
  // the config travels with the outputs, with the seed
  const auto j = Json::parse(first[2]);
  CHECK(j.at("config").at("seed") == 2024);
  CHECK(j.at("config").get<ExperimentConfig>().grid.lambda1 == config.grid.lambda1);
  CHECK(first[1].rfind("# config ", 0) == 0);
  std::filesystem::remove_all(base);
}

TEST_CASE("config JSON round trip") {
  auto c = small_config();
  c.structures = {CorrelationKind::Ar1, CorrelationKind::Independence};
  c.methods = {PenaltyKind::Group};
  c.tuning.warm_start = WarmStart::Descending;
  const auto back = Json(c).get<ExperimentConfig>();
  CHECK(Json(back) == Json(c));
  CHECK(back.structures == c.structures);
  CHECK(back.tuning.warm_start == WarmStart::Descending);
}

TEST_CASE("bench with one replicate reports zero sd") {
  auto c = small_config();
  c.replicates = 1;
  c.structures = {CorrelationKind::Independence, CorrelationKind::Exchangeable};
  c.methods = {PenaltyKind::SparseGroup};
  const auto rows = bench(c, 0.05, 0.05);
  REQUIRE(rows.size() == 2);
  for (const auto& r : rows) {
    CHECK(r.seconds.size() == 1);
    CHECK(r.stats.sd == 0.0);
    CHECK(r.seconds[0] > 0.0);
  }
  const Json j = bench_json(c, 0.05, 0.05, rows);
  CHECK(j.at("timings").size() == 2);
  CHECK(j.at("config").at("seed") == 2024);
}

TEST_CASE("invalid experiment configs are rejected") {
  auto c = small_config();
  c.replicates = 0;
  CHECK_THROWS(run_experiment(c));
  c = small_config();
  c.methods.clear();
  CHECK_THROWS(run_experiment(c));
}

}
