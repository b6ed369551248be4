#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "qsync/harness.hpp"

using namespace qsync;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("qsync_test_" + std::to_string(::getpid()) + "_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

SweepConfig small_config(const fs::path& out) {
  json j = {{"model", {{"preset", "spin_half_pair"}}},
            {"eta_values", {1e-3, 1.0}},
            {"samples_per_eta", 3},
            {"master_seed", 5},
            {"chi_samples_per_record", 40},
            {"grid_points", 64},
            {"bootstrap_resamples", 50},
            {"output_dir", out.string()}};
  return parse_config(j);
}

}  // namespace

TEST_CASE("config parsing fills defaults and rejects bad input") {
  const auto cfg = parse_config(json{{"model", {{"preset", "spin1_chain"}}}});
  CHECK(cfg.samples_per_eta == 200);
  CHECK(cfg.threshold == 0.95);
  CHECK(cfg.chi_samples_per_record == 1000);
  CHECK(cfg.eta_values.size() == 9);
  CHECK(cfg.eta_values.front() == doctest::Approx(1e-7));
  CHECK(cfg.to_json()["model"]["gamma"] == 2.0);
  CHECK(parse_config(json{{"model", {{"preset", "spin_half_pair"}}}}).eta_values.back() == doctest::Approx(1.0));
  CHECK_THROWS_AS(parse_config(json{{"bogus", 1}}), ConfigError);
  CHECK_THROWS_AS(parse_config(json{{"threshold", 0.0}}), ConfigError);
  CHECK_THROWS_AS(parse_config(json{{"samples_per_eta", 0}}), ConfigError);
  CHECK_THROWS_AS(parse_config(json{{"eta_values", {-1.0}}}), ConfigError);
  CHECK_THROWS_AS(parse_config(json{{"model", {{"preset", "nope"}}}}), ConfigError);
  CHECK_THROWS_AS(parse_config(json{{"model", {{"preset", "spin1_chain"}, {"B", 1.0}}}}), ConfigError);
  CHECK_THROWS_AS(parse_config(json{{"perturbation", "model"}}), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
  CHECK(parse_config(json{{"model", {{"preset", "coupled_spin1_pair"}}}, {"perturbation", "model"}}).perturbation ==
        PerturbationKind::model);
}

TEST_CASE("config hash ignores the output directory only") {
  auto a = small_config("/tmp/a");
  auto b = small_config("/tmp/b");
  CHECK(a.hash() == b.hash());
  b.master_seed = 6;
  CHECK(a.hash() != b.hash());
}

TEST_CASE("sweeps are deterministic, worker independent and resumable") {
  const fs::path d1 = scratch("sweep1"), d2 = scratch("sweep2");
  setenv("QSYNC_WORKERS", "1", 1);
  const auto s1 = run_sweep(small_config(d1));
  setenv("QSYNC_WORKERS", "3", 1);
  const auto s2 = run_sweep(small_config(d2));
  unsetenv("QSYNC_WORKERS");
  CHECK(s1.records.size() == 6);
  CHECK(slurp(d1 / "records.csv") == slurp(d2 / "records.csv"));
  CHECK(slurp(d1 / "chi.csv") == slurp(d2 / "chi.csv"));
  for (const auto& r : s1.records) {
    CHECK(r.multiplicity == 1);
    CHECK(r.included());
    CHECK(r.s_max >= -1e-10);
    CHECK(r.chi.size() == 40);
  }

  const std::string records = slurp(d1 / "records.csv");
  fs::remove(d1 / "parts" / "sample_00000001.records.csv");
  fs::remove(d1 / "records.csv");
  const auto s3 = run_sweep(small_config(d1));
  CHECK(s3.samples_resumed == 2);
  CHECK(s3.samples_run == 1);
  CHECK(slurp(d1 / "records.csv") == records);

  auto other = small_config(d1);
  other.master_seed = 99;
  CHECK_THROWS_AS(run_sweep(other), ConfigError);

  const auto manifest = json::parse(slurp(d1 / "manifest.json"));
  CHECK(manifest["master_seed"] == 5);
  CHECK(manifest["version"] == kToolVersion);
  CHECK(manifest.contains("started_at"));

  const RunData run = load_run(d1);
  CHECK(run.records.size() == 6);
  CHECK(run.records[3].chi == s1.records[3].chi);
  CHECK(run.records[3].argmax == s1.records[3].argmax);
  fs::remove_all(d1);
  fs::remove_all(d2);
}

TEST_CASE("unperturbed chain records are flagged and excluded") {
  const fs::path d = scratch("eta0");
  json j = {{"model", {{"preset", "spin1_chain"}}}, {"eta_values", {0.0, 1e-2}}, {"samples_per_eta", 1},
            {"chi_samples_per_record", 20}, {"grid_points", 64}, {"bootstrap_resamples", 20},
            {"output_dir", d.string()}};
  const auto summary = run_sweep(parse_config(j));
  REQUIRE(summary.records.size() == 2);
  CHECK(summary.records[0].multiplicity == 8);
  CHECK(summary.records[0].reason == "multiplicity");
  CHECK(summary.records[1].multiplicity == 1);
  const auto table = aggregate(summary.records, {64, 20, 1});
  REQUIRE(table.rows.size() == 2);
  CHECK(table.rows[0].records == 1);
  CHECK(table.rows[0].included == 0);
  CHECK(table.rows[0].excluded.at("multiplicity") == 1);
  CHECK(table.rows[1].included == 1);
  CHECK(table.rows[1].chi_hist.total == 20);
  fs::remove_all(d);
}

TEST_CASE("aggregate tables and their CSV schema") {
  std::vector<SweepRecord> recs;
  for (int i = 0; i < 10; ++i) {
    SweepRecord r;
    r.sample_id = static_cast<std::uint64_t>(i);
    r.eta = i < 5 ? 0.1 : 1.0;
    r.s_max = 0.01 * i;
    r.multiplicity = 1;
    r.argmax = {{0.0, 3.14}};
    r.chi = {0.0, 0.25, 1.0, 0.5};
    recs.push_back(r);
  }
  recs[0].reason = "solver_failure";
  const auto table = aggregate(recs, {16, 100, 3});
  REQUIRE(table.rows.size() == 2);
  CHECK(table.rows[0].records == 5);
  CHECK(table.rows[0].included == 4);
  CHECK(table.rows[0].mean_s_max == doctest::Approx(0.025));
  CHECK(table.rows[1].intervals.point.p1 == doctest::Approx(0.25));
  CHECK(*table.rows[1].intervals.point.ratio == doctest::Approx(1.0 / 3.0));
  std::ostringstream out;
  write_aggregate_csv(out, table);
  CHECK(out.str().rfind("eta,mean_s_max,p1,p2,p3,ratio,ratio_ci_lo,ratio_ci_hi", 0) == 0);

  std::ostringstream rs, cs;
  write_records_csv(rs, recs);
  write_chi_csv(cs, recs);
  CHECK(rs.str().rfind("sample_id,eta,seed,s_max,multiplicity,reason_code,argmax_phi1p,argmax_phi2p", 0) == 0);
  CHECK(cs.str().rfind("sample_id,eta,chi\n", 0) == 0);
  std::istringstream ri(rs.str()), ci(cs.str());
  const auto back = read_records(ri, ci);
  REQUIRE(back.size() == recs.size());
  CHECK(back[7].chi == recs[7].chi);
  CHECK(back[7].argmax == recs[7].argmax);
  CHECK(back[0].reason == "solver_failure");

  const fs::path d = scratch("agg");
  write_aggregate_outputs(d, table);
  CHECK(fs::exists(d / "aggregate.csv"));
  CHECK(fs::exists(d / "aggregate.json"));
  CHECK(fs::exists(d / "chi_hist_eta_0.1.csv"));
  fs::remove_all(d);
}

TEST_CASE("runs of different models are not merged") {
  RunData a, b;
  a.manifest = json{{"config", {{"model", {{"preset", "spin1_chain"}}}}}};
  b.manifest = json{{"config", {{"model", {{"preset", "spin_half_pair"}}}}}};
  CHECK_THROWS_AS(merge_runs({a, b}), ConfigError);
  CHECK(merge_runs({a, a}).records.empty());
}

TEST_CASE("model presets") {
  CHECK(make_model(json{{"preset", "spin1_chain"}}).base.spec.dim() == 27);
  CHECK(make_model(json{{"preset", "spin1_chain"}, {"n", 2}}).base.spec.dim() == 9);
  CHECK(make_model(json{{"preset", "spin_half_pair"}}).base.spec.dim() == 4);
  const auto c = make_model(json{{"preset", "coupled_spin1_pair"}});
  CHECK(c.base.spec.dim() == 9);
  CHECK(c.structured.has_value());
  CHECK_THROWS_AS(make_model(json{{"preset", "spin1_chain"}, {"n", 5}}), ConfigError);
}
