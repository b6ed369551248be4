#include <CLI11.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "qsync/harness.hpp"
#include "qsync/liouvillian.hpp"
#include "qsync/models.hpp"
#include "qsync/phasespace.hpp"
#include "qsync/randliouv.hpp"
#include "qsync/syncstats.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace qsync;

namespace {

// Files written by the current subcommand; removed again if it fails.
class Outputs {
 public:
  void write(const fs::path& path, const std::string& content) {
    write_atomically(path, content);
    written_.push_back(path);
  }
  void rollback() {
    std::error_code ec;
    for (const auto& p : written_) fs::remove(p, ec);
    written_.clear();
  }

 private:
  std::vector<fs::path> written_;
};

struct ModelFlags {
  std::string preset = "spin1_chain";
  std::map<std::string, double> values;

  void attach(CLI::App* app) {
    app->add_option("--model", preset, "spin1_chain | spin_half_pair | coupled_spin1_pair");
    const std::vector<std::pair<std::string, std::string>> flags = {
        {"--n", "n"},           {"--omega", "omega"},       {"--j", "J"},
        {"--delta", "Delta"},   {"--gamma", "gamma"},       {"--b", "B"},
        {"--gamma1-g", "gamma1_g"}, {"--gamma2-d", "gamma2_d"}, {"--epsilon", "epsilon"},
        {"--delta1", "Delta1"}, {"--delta2", "Delta2"},     {"--gamma1-d", "gamma1_d"},
        {"--gamma2-g", "gamma2_g"}};
    for (const auto& [flag, key] : flags) {
      auto* slot = &storage_[key];
      app->add_option(flag, *slot, "model parameter " + key)->each([this, key](const std::string& raw) {
        values[key] = std::stod(raw);
      });
    }
  }

  json to_json() const {
    json j{{"preset", preset}};
    for (const auto& [k, v] : values) j[k] = v;
    return j;
  }

 private:
  std::map<std::string, double> storage_;
};

json manifest_base(const std::string& command, const json& flags) {
  json m;
  m["tool"] = "qsync";
  m["version"] = kToolVersion;
  m["command"] = command;
  m["flags"] = flags;
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(flags.dump())));
  m["config_hash"] = buf;
  m["timestamp"] = utc_timestamp();
  return m;
}

std::string rho_file(const Operator& rho, const SpinSpec& spec) {
  std::ostringstream out;
  out << "# spins=";
  for (std::size_t j = 0; j < spec.sites(); ++j) out << (j ? "," : "") << format_double(spec.spin(j));
  out << "\nrow,col,re,im\n";
  for (Eigen::Index r = 0; r < rho.rows(); ++r)
    for (Eigen::Index c = 0; c < rho.cols(); ++c)
      out << r << ',' << c << ',' << format_double(rho(r, c).real()) << ',' << format_double(rho(r, c).imag())
          << '\n';
  return out.str();
}

std::pair<Operator, SpinSpec> read_rho_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  const std::string tag = "# spins=";
  if (line.rfind(tag, 0) != 0) throw std::runtime_error("rho file must start with '# spins=...'");
  std::vector<double> spins;
  std::stringstream ss(line.substr(tag.size()));
  for (std::string tok; std::getline(ss, tok, ',');) spins.push_back(std::stod(tok));
  const SpinSpec spec = SpinSpec::from_spins(spins);
  if (!std::getline(in, line) || line != "row,col,re,im") throw std::runtime_error("rho file: expected header row,col,re,im");
  Operator rho = Operator::Zero(spec.dim(), spec.dim());
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ls(line);
    std::string f[4];
    for (auto& x : f)
      if (!std::getline(ls, x, ',')) throw std::runtime_error("rho file: malformed line '" + line + "'");
    const int r = std::stoi(f[0]), c = std::stoi(f[1]);
    if (r < 0 || c < 0 || r >= spec.dim() || c >= spec.dim()) throw std::runtime_error("rho file: index out of range");
    rho(r, c) = cplx(std::stod(f[2]), std::stod(f[3]));
  }
  if (std::abs(rho.trace() - cplx(1)) > 1e-8) throw std::runtime_error("rho file: trace is not 1");
  return {rho, spec};
}

std::string sd_file(const PhaseGrid& grid) {
  std::ostringstream out;
  write_sd_csv(out, grid);
  return out.str();
}

std::string describe_argmax(const SyncMeasure& s) {
  std::string out;
  for (const auto& pt : s.argmax) {
    out += "(";
    for (std::size_t a = 0; a < pt.size(); ++a) out += (a ? ", " : "") + format_double(pt[a]);
    out += ") ";
  }
  return out;
}

int selftest() {
  int failures = 0;
  auto report = [&](const std::string& name, bool ok, const std::string& detail) {
    std::cout << (ok ? "PASS " : "FAIL ") << name << " " << detail << "\n";
    if (!ok) ++failures;
  };
  const Superoperator L0 = build_superoperator(spin1_chain({}));
  report("trace_preservation", trace_preservation_defect(L0) < 1e-12, format_double(trace_preservation_defect(L0)));
  const auto dec = full_spectrum(L0);
  int zeros = 0;
  for (Eigen::Index k = 0; k < dec.eigenvalues.size(); ++k) zeros += std::abs(dec.eigenvalues(k)) < 1e-9;
  report("spin1_chain_zero_modes", zeros == 8, std::to_string(zeros));
  report("spectrum_stable", dec.max_real_part < 1e-9, format_double(dec.max_real_part));

  Rng rng(12345);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const SpinSpec spec({2, 1, 2});
    Operator rho = Operator::Zero(spec.dim(), spec.dim());
    for (int i = 0; i < spec.dim(); ++i) rho(i, i) = u(rng);
    rho /= rho.trace();
    const auto sd = reduce_over_global_phase(phase_distribution(rho, spec));
    worst = std::max(worst, std::abs(sync_measure(sd, 64).s_max));
  }
  report("diagonal_states_unsynchronized", worst <= 1e-10, format_double(worst));

  const auto uni = uniformity_oracle(20000, rng);
  report("chi_uniformity", uni.ks_chi < 0.02 && uni.ks_l < 0.02, format_double(uni.ks_chi));

  double tp = 0.0, choi = 0.0;
  for (int t = 0; t < 20; ++t) {
    const auto s = random_liouvillian(4, derive_seed(99, static_cast<std::uint64_t>(t)));
    tp = std::max(tp, trace_preservation_defect(s.generator));
    choi = std::min(choi, choi_min_eigenvalue(s.generator, 1e-3));
  }
  report("random_liouvillian_trace_preserving", tp <= 1e-12, format_double(tp));
  report("random_liouvillian_cp", choi >= -1e-8, format_double(choi));
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Steady-state synchronization of perturbed open spin systems"};
  app.require_subcommand(1);
  std::string manifest_path;
  app.add_option("--manifest", manifest_path, "write a JSON run manifest to this path");

  ModelFlags spec_model, steady_model;
  double tol = 1e-9;
  double spec_eta = 0.0, steady_eta = 0.0;
  std::uint64_t spec_seed = 1, steady_seed = 1;
  std::string spec_pert = "random", steady_pert = "random";
  std::string spec_out, rho_out, sd_out, rho_in, pd_out, config_path, sweep_out;
  std::vector<std::string> runs;
  std::string agg_out;
  int grid_points = 256;

  auto* spectrum = app.add_subcommand("spectrum", "Liouvillian spectrum as CSV");
  spec_model.attach(spectrum);
  spectrum->add_option("--eta", spec_eta, "perturbation strength");
  spectrum->add_option("--seed", spec_seed, "perturbation seed");
  spectrum->add_option("--perturbation", spec_pert, "random | model")->check(CLI::IsMember({"random", "model"}));
  spectrum->add_option("--tol", tol, "|Re|, |Im| tolerance for the zero/oscillating classes");
  spectrum->add_option("--out", spec_out, "output CSV (stdout when omitted)");

  auto* steady = app.add_subcommand("steady", "steady state, S_d and S_max");
  steady_model.attach(steady);
  steady->add_option("--eta", steady_eta, "perturbation strength");
  steady->add_option("--seed", steady_seed, "perturbation seed");
  steady->add_option("--perturbation", steady_pert, "random | model")->check(CLI::IsMember({"random", "model"}));
  steady->add_option("--rho-out", rho_out, "density matrix file");
  steady->add_option("--sd-out", sd_out, "S_d grid CSV");
  steady->add_option("--grid", grid_points, "grid points per axis");

  auto* pdist = app.add_subcommand("phase-dist", "S_d of a density matrix file");
  pdist->add_option("--rho", rho_in, "density matrix file")->required();
  pdist->add_option("--out", pd_out, "S_d grid CSV")->required();
  pdist->add_option("--grid", grid_points, "grid points per axis");

  auto* sweep = app.add_subcommand("sweep", "seeded eta sweep over random perturbations");
  sweep->add_option("--config", config_path, "JSON config file")->required();
  sweep->add_option("--output-dir", sweep_out, "overrides output_dir from the config");

  auto* agg = app.add_subcommand("aggregate", "per-eta tables from sweep outputs");
  agg->add_option("--run", runs, "sweep output directory (repeatable)")->required();
  agg->add_option("--out", agg_out, "directory for aggregate outputs (default: first run)");

  auto* self = app.add_subcommand("selftest", "invariant suite");

  CLI11_PARSE(app, argc, argv);

  Outputs outputs;
  try {
    json flags;
    for (const auto* sub : app.get_subcommands())
      for (const auto* opt : sub->get_options())
        if (opt->count() > 0 && opt->get_name() != "--help") flags[opt->get_name()] = opt->as<std::string>();
    const std::string command = app.get_subcommands().front()->get_name();
    json manifest = manifest_base(command, flags);

    if (spectrum->parsed()) {
      const ModelInstance m = make_model(spec_model.to_json());
      Superoperator L = m.generator;
      if (spec_eta != 0.0)
        L += spec_eta * sample_perturbation(m, spec_pert == "model" ? PerturbationKind::model : PerturbationKind::random,
                                            spec_seed);
      const auto dec = full_spectrum(L);
      std::ostringstream csv;
      write_spectrum_csv(csv, dec, tol, tol);
      if (spec_out.empty())
        std::cout << csv.str();
      else
        outputs.write(spec_out, csv.str());
      manifest["seeds"] = {spec_seed};
    } else if (steady->parsed()) {
      const ModelInstance m = make_model(steady_model.to_json());
      Superoperator L = m.generator;
      if (steady_eta != 0.0)
        L += steady_eta * sample_perturbation(
                              m, steady_pert == "model" ? PerturbationKind::model : PerturbationKind::random, steady_seed);
      const SteadyState ss = steady_state(L);
      Rng rng(steady_seed);
      const auto a = analyze_state(ss.rho, m.base.spec, 0.95, grid_points, 0, rng);
      std::cout << "multiplicity " << ss.multiplicity << "\n"
                << "residual " << format_double(ss.residual) << "\n"
                << "s_max " << format_double(a.sync.s_max) << "\n"
                << "argmax " << describe_argmax(a.sync) << "\n";
      for (const auto& w : ss.warnings) std::cerr << "warning: " << w << "\n";
      if (!rho_out.empty()) outputs.write(rho_out, rho_file(ss.rho, m.base.spec));
      if (!sd_out.empty()) outputs.write(sd_out, sd_file(a.grid));
      manifest["seeds"] = {steady_seed};
      manifest["s_max"] = a.sync.s_max;
      manifest["multiplicity"] = ss.multiplicity;
    } else if (pdist->parsed()) {
      const auto [rho, spec] = read_rho_file(rho_in);
      const auto sd = reduce_over_global_phase(phase_distribution(rho, spec));
      const auto grid = evaluate_on_grid(sd, grid_points);
      const auto sm = sync_measure(sd, grid_points);
      std::cout << "s_max " << format_double(sm.s_max) << "\nargmax " << describe_argmax(sm) << "\n";
      outputs.write(pd_out, sd_file(grid));
    } else if (sweep->parsed()) {
      SweepConfig cfg = load_config(config_path);
      if (!sweep_out.empty()) cfg.output_dir = sweep_out;
      const auto summary = run_sweep(cfg);
      std::size_t ok = 0;
      for (const auto& r : summary.records) ok += r.included();
      std::cout << "records " << summary.records.size() << " included " << ok << " samples_run "
                << summary.samples_run << " resumed " << summary.samples_resumed << "\n";
      manifest["seeds"] = {cfg.master_seed};
      manifest["config_hash_sweep"] = cfg.hash();
    } else if (agg->parsed()) {
      std::vector<RunData> loaded;
      for (const auto& r : runs) loaded.push_back(load_run(r));
      const RunData merged = merge_runs(loaded);
      AggregateOptions opts;
      const auto& cfg = merged.manifest.at("config");
      opts.histogram_bins = cfg.value("histogram_bins", 64);
      opts.bootstrap_resamples = cfg.value("bootstrap_resamples", 1000);
      opts.bootstrap_seed = merged.manifest.value("master_seed", std::uint64_t{1});
      const auto table = aggregate(merged.records, opts);
      const fs::path dir = agg_out.empty() ? fs::path(runs.front()) : fs::path(agg_out);
      write_aggregate_outputs(dir, table);
      std::ostringstream csv;
      write_aggregate_csv(csv, table);
      std::cout << csv.str();
      manifest["seeds"] = {opts.bootstrap_seed};
    } else if (self->parsed()) {
      const int rc = selftest();
      if (rc != 0) return rc;
    }
    if (!manifest_path.empty()) {
      manifest["finished_at"] = utc_timestamp();
      outputs.write(manifest_path, manifest.dump(2) + "\n");
    }
  } catch (const std::exception& e) {
    outputs.rollback();
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
