#include "qsync/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "qsync/models.hpp"
#include "qsync/randliouv.hpp"

namespace qsync {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string utc_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_atomically(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

namespace {

double take(json& params, const char* key, double fallback) {
  if (!params.contains(key)) {
    params[key] = fallback;
    return fallback;
  }
  if (!params[key].is_number()) throw ConfigError(std::string("model parameter '") + key + "' must be a number");
  return params[key].get<double>();
}

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
}

}  // namespace

ModelInstance make_model(const json& model) {
  if (!model.is_object() || !model.contains("preset") || !model["preset"].is_string())
    throw ConfigError("model needs a string 'preset'");
  ModelInstance out;
  out.preset = model["preset"].get<std::string>();
  json p = model;
  if (out.preset == "spin1_chain") {
    reject_unknown(model, {"preset", "n", "omega", "J", "Delta", "gamma"}, "model");
    Spin1ChainParams q;
    const double n = take(p, "n", q.n);
    if (n != std::floor(n) || n < 2 || n > 3) throw ConfigError("spin1_chain: n must be 2 or 3");
    q.n = static_cast<int>(n);
    q.omega = take(p, "omega", q.omega);
    q.J = take(p, "J", q.J);
    q.Delta = take(p, "Delta", q.Delta);
    q.gamma = take(p, "gamma", q.gamma);
    out.base = spin1_chain(q);
    out.scale = std::abs(q.omega);
  } else if (out.preset == "spin_half_pair") {
    reject_unknown(model, {"preset", "J", "Delta", "B", "gamma"}, "model");
    SpinHalfPairParams q;
    q.J = take(p, "J", q.J);
    q.Delta = take(p, "Delta", q.Delta);
    q.B = take(p, "B", q.B);
    q.gamma = take(p, "gamma", q.gamma);
    out.base = spin_half_pair(q).model;
    out.scale = std::abs(q.J);
  } else if (out.preset == "coupled_spin1_pair") {
    reject_unknown(model,
                   {"preset", "omega", "gamma1_g", "gamma2_d", "epsilon", "Delta1", "Delta2", "gamma1_d", "gamma2_g"},
                   "model");
    CoupledSpin1Params q;
    q.omega = take(p, "omega", q.omega);
    q.gamma1_g = take(p, "gamma1_g", q.gamma1_g);
    q.gamma2_d = take(p, "gamma2_d", q.gamma2_d);
    q.epsilon = take(p, "epsilon", 1.0);
    q.Delta1 = take(p, "Delta1", 1.0);
    q.Delta2 = take(p, "Delta2", 1.0);
    q.gamma1_d = take(p, "gamma1_d", 1.0);
    q.gamma2_g = take(p, "gamma2_g", 1.0);
    const auto pair = coupled_spin1_pair(q);
    out.base = pair.base;
    out.structured = build_superoperator(pair.perturbation);
    out.scale = std::abs(q.omega);
  } else {
    throw ConfigError("unknown model preset '" + out.preset + "'");
  }
  if (!(out.scale > 0)) throw ConfigError("model scale (omega or J) must be nonzero");
  out.base.validate();
  out.generator = build_superoperator(out.base);
  out.params = std::move(p);
  return out;
}

std::vector<double> default_eta_grid(const std::string& preset, double scale) {
  const int lo = preset == "spin1_chain" ? -7 : -5;
  const int hi = preset == "spin1_chain" ? 1 : 0;
  std::vector<double> out;
  for (int e = lo; e <= hi; ++e) out.push_back(scale * std::pow(10.0, e));
  return out;
}

void SweepConfig::validate() const {
  if (eta_values.empty()) throw ConfigError("eta_values must not be empty");
  for (double eta : eta_values)
    if (!(eta >= 0.0) || !std::isfinite(eta)) throw ConfigError("eta values must be finite and non-negative");
  std::set<double> unique(eta_values.begin(), eta_values.end());
  if (unique.size() != eta_values.size()) throw ConfigError("eta values must be distinct");
  if (samples_per_eta < 1) throw ConfigError("samples_per_eta must be >= 1");
  if (!(threshold > 0.0 && threshold <= 1.0)) throw ConfigError("threshold must lie in (0, 1]");
  if (chi_samples_per_record < 1) throw ConfigError("chi_samples_per_record must be >= 1");
  if (grid_points < 8) throw ConfigError("grid_points must be >= 8");
  if (histogram_bins < 1) throw ConfigError("histogram_bins must be >= 1");
  if (bootstrap_resamples < 2) throw ConfigError("bootstrap_resamples must be >= 2");
}

json SweepConfig::to_json() const {
  json j;
  j["model"] = make_model(model).params;
  j["eta_values"] = eta_values;
  j["samples_per_eta"] = samples_per_eta;
  j["master_seed"] = master_seed;
  j["threshold"] = threshold;
  j["chi_samples_per_record"] = chi_samples_per_record;
  j["grid_points"] = grid_points;
  j["histogram_bins"] = histogram_bins;
  j["bootstrap_resamples"] = bootstrap_resamples;
  j["perturbation"] = perturbation == PerturbationKind::random ? "random" : "model";
  j["sampling"] = sampling == RegionSampling::weighted ? "weighted" : "uniform";
  return j;
}

std::uint64_t SweepConfig::hash() const { return fnv1a(to_json().dump()); }

SweepConfig parse_config(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  reject_unknown(j,
                 {"model", "eta_values", "samples_per_eta", "master_seed", "threshold", "chi_samples_per_record",
                  "grid_points", "histogram_bins", "bootstrap_resamples", "perturbation", "sampling",
                  "output_dir"},
                 "config");
  SweepConfig cfg;
  try {
    if (j.contains("model")) cfg.model = j["model"];
    const ModelInstance m = make_model(cfg.model);
    if (j.contains("eta_values"))
      cfg.eta_values = j["eta_values"].get<std::vector<double>>();
    else
      cfg.eta_values = default_eta_grid(m.preset, m.scale);
    if (j.contains("samples_per_eta")) cfg.samples_per_eta = j["samples_per_eta"].get<int>();
    if (j.contains("master_seed")) cfg.master_seed = j["master_seed"].get<std::uint64_t>();
    if (j.contains("threshold")) cfg.threshold = j["threshold"].get<double>();
    if (j.contains("chi_samples_per_record")) cfg.chi_samples_per_record = j["chi_samples_per_record"].get<int>();
    if (j.contains("grid_points")) cfg.grid_points = j["grid_points"].get<int>();
    if (j.contains("histogram_bins")) cfg.histogram_bins = j["histogram_bins"].get<int>();
    if (j.contains("bootstrap_resamples")) cfg.bootstrap_resamples = j["bootstrap_resamples"].get<int>();
    if (j.contains("perturbation")) {
      const auto kind = j["perturbation"].get<std::string>();
      if (kind == "random")
        cfg.perturbation = PerturbationKind::random;
      else if (kind == "model")
        cfg.perturbation = PerturbationKind::model;
      else
        throw ConfigError("perturbation must be 'random' or 'model'");
      if (cfg.perturbation == PerturbationKind::model && !m.structured)
        throw ConfigError("preset '" + m.preset + "' has no model perturbation");
    }
    if (j.contains("sampling")) {
      const auto mode = j["sampling"].get<std::string>();
      if (mode == "weighted")
        cfg.sampling = RegionSampling::weighted;
      else if (mode == "uniform")
        cfg.sampling = RegionSampling::uniform;
      else
        throw ConfigError("sampling must be 'weighted' or 'uniform'");
    }
    if (j.contains("output_dir")) cfg.output_dir = j["output_dir"].get<std::string>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

SweepConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("cannot parse " + path.string() + ": " + e.what());
  }
  return parse_config(j);
}

StateAnalysis analyze_state(const Operator& rho, const SpinSpec& spec, double threshold, int grid_points,
                            int chi_samples, Rng& rng, RegionSampling mode) {
  StateAnalysis a;
  a.sd = reduce_over_global_phase(phase_distribution(rho, spec));
  a.grid = evaluate_on_grid(a.sd, grid_points);
  a.sync = sync_measure(a.sd, grid_points);
  a.region = threshold_region(a.sd, a.grid, threshold);
  if (chi_samples > 0) a.chi = sample_chi(a.region, static_cast<std::size_t>(chi_samples), rng, mode);
  return a;
}

Superoperator sample_perturbation(const ModelInstance& model, PerturbationKind kind, std::uint64_t seed) {
  if (kind == PerturbationKind::model) {
    if (!model.structured) throw ConfigError("preset '" + model.preset + "' has no model perturbation");
    return *model.structured;
  }
  return random_liouvillian(model.base.spec.dim(), seed).generator;
}

std::vector<SweepRecord> run_sample(const ModelInstance& model, const SweepConfig& cfg, std::uint64_t sample_id) {
  const std::uint64_t seed = derive_seed(cfg.master_seed, sample_id);
  const Superoperator L1 = sample_perturbation(model, cfg.perturbation, seed);
  std::vector<SweepRecord> out;
  for (std::size_t e = 0; e < cfg.eta_values.size(); ++e) {
    SweepRecord r;
    r.sample_id = sample_id;
    r.eta = cfg.eta_values[e];
    r.seed = seed;
    try {
      const Superoperator L = r.eta == 0.0 ? model.generator : model.generator + r.eta * L1;
      const SteadyState ss = steady_state(L);
      r.multiplicity = ss.multiplicity;
      r.hermitian_defect = ss.hermitian_defect;
      r.min_eigenvalue = ss.min_eigenvalue;
      Rng rng(derive_seed(seed, e));
      const bool ok = ss.multiplicity == 1;
      const StateAnalysis a = analyze_state(ss.rho, model.base.spec, cfg.threshold, cfg.grid_points,
                                            ok ? cfg.chi_samples_per_record : 0, rng, cfg.sampling);
      r.s_max = a.sync.s_max;
      r.argmax = a.sync.argmax;
      if (ok)
        r.chi = a.chi.values;
      else
        r.reason = "multiplicity";
    } catch (const std::exception&) {
      r.reason = "solver_failure";
      r.s_max = std::numeric_limits<double>::quiet_NaN();
      r.chi.clear();
    }
    out.push_back(std::move(r));
  }
  return out;
}

int worker_count() {
  if (const char* env = std::getenv("QSYNC_WORKERS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

const char* kRecordsHeader =
    "sample_id,eta,seed,s_max,multiplicity,reason_code,argmax_phi1p,argmax_phi2p,hermitian_defect,"
    "min_eigenvalue,chi_count\n";
const char* kChiHeader = "sample_id,eta,chi\n";

std::string argmax_field(const SweepRecord& r, std::size_t axis) {
  if (r.argmax.empty()) return "nan";
  std::string out;
  for (std::size_t i = 0; i < r.argmax.size(); ++i) {
    if (i) out += ';';
    out += axis < r.argmax[i].size() ? format_double(r.argmax[i][axis]) : "nan";
  }
  return out;
}

std::string record_rows(const std::vector<SweepRecord>& records) {
  std::string s;
  for (const auto& r : records) {
    s += std::to_string(r.sample_id) + ',' + format_double(r.eta) + ',' + std::to_string(r.seed) + ',' +
         format_double(r.s_max) + ',' + std::to_string(r.multiplicity) + ',' + r.reason + ',' + argmax_field(r, 0) +
         ',' + argmax_field(r, 1) + ',' + format_double(r.hermitian_defect) + ',' + format_double(r.min_eigenvalue) +
         ',' + std::to_string(r.chi.size()) + '\n';
  }
  return s;
}

std::string chi_rows(const std::vector<SweepRecord>& records) {
  std::string s;
  for (const auto& r : records) {
    const std::string prefix = std::to_string(r.sample_id) + ',' + format_double(r.eta) + ',';
    for (double c : r.chi) s += prefix + format_double(c) + '\n';
  }
  return s;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double parse_double(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw std::runtime_error("bad number '" + s + "'");
  return v;
}

std::uint64_t parse_u64(const std::string& s) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw std::runtime_error("bad integer '" + s + "'");
  return v;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string shard_name(std::uint64_t id, const char* kind) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "sample_%08llu.%s.csv", static_cast<unsigned long long>(id), kind);
  return buf;
}

}  // namespace

void write_records_csv(std::ostream& out, const std::vector<SweepRecord>& records) {
  out << kRecordsHeader << record_rows(records);
}

void write_chi_csv(std::ostream& out, const std::vector<SweepRecord>& records) {
  out << kChiHeader << chi_rows(records);
}

std::vector<SweepRecord> read_records(std::istream& records_csv, std::istream& chi_csv) {
  std::string line;
  if (!std::getline(records_csv, line) || line + '\n' != kRecordsHeader)
    throw std::runtime_error("records CSV: unexpected header");
  std::vector<SweepRecord> out;
  std::map<std::pair<std::uint64_t, double>, std::size_t> index;
  while (std::getline(records_csv, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 11) throw std::runtime_error("records CSV: expected 11 fields in '" + line + "'");
    SweepRecord r;
    r.sample_id = parse_u64(f[0]);
    r.eta = parse_double(f[1]);
    r.seed = parse_u64(f[2]);
    r.s_max = parse_double(f[3]);
    r.multiplicity = static_cast<int>(parse_double(f[4]));
    r.reason = f[5];
    if (f[6] != "nan") {
      const auto a = split(f[6], ';');
      const auto b = split(f[7], ';');
      for (std::size_t i = 0; i < a.size(); ++i) {
        std::vector<double> pt{parse_double(a[i])};
        if (f[7] != "nan") pt.push_back(parse_double(b.at(i)));
        r.argmax.push_back(std::move(pt));
      }
    }
    r.hermitian_defect = parse_double(f[8]);
    r.min_eigenvalue = parse_double(f[9]);
    r.chi.reserve(parse_u64(f[10]));
    index[{r.sample_id, r.eta}] = out.size();
    out.push_back(std::move(r));
  }
  if (!std::getline(chi_csv, line) || line + '\n' != kChiHeader) throw std::runtime_error("chi CSV: unexpected header");
  while (std::getline(chi_csv, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 3) throw std::runtime_error("chi CSV: expected 3 fields");
    const auto it = index.find({parse_u64(f[0]), parse_double(f[1])});
    if (it == index.end()) throw std::runtime_error("chi CSV: row without a record");
    out[it->second].chi.push_back(parse_double(f[2]));
  }
  return out;
}

SweepSummary run_sweep(const SweepConfig& cfg) {
  cfg.validate();
  const ModelInstance model = make_model(cfg.model);
  if (model.base.spec.dim() > 32) throw ConfigError("model dimension exceeds the dense cap of 32");
  const fs::path dir = cfg.output_dir;
  const fs::path parts = dir / "parts";
  fs::create_directories(parts);

  const json cfg_json = cfg.to_json();
  char hash_buf[17];
  std::snprintf(hash_buf, sizeof hash_buf, "%016llx", static_cast<unsigned long long>(cfg.hash()));
  const std::string hash = hash_buf;
  const fs::path stamp = parts / "config.json";
  if (fs::exists(stamp)) {
    const json old = json::parse(read_file(stamp));
    if (old.value("config_hash", std::string()) != hash)
      throw ConfigError("output directory " + dir.string() + " holds shards from a different config");
  } else {
    write_atomically(stamp, json{{"config_hash", hash}, {"config", cfg_json}}.dump(2) + "\n");
  }

  const std::string started = utc_timestamp();
  const auto n = static_cast<std::uint64_t>(cfg.samples_per_eta);
  std::vector<std::uint64_t> todo;
  SweepSummary summary;
  for (std::uint64_t id = 0; id < n; ++id) {
    if (fs::exists(parts / shard_name(id, "records")) && fs::exists(parts / shard_name(id, "chi")))
      ++summary.samples_resumed;
    else
      todo.push_back(id);
  }

  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    while (!stop) {
      const std::size_t k = next++;
      if (k >= todo.size()) return;
      try {
        const auto recs = run_sample(model, cfg, todo[k]);
        write_atomically(parts / shard_name(todo[k], "chi"), chi_rows(recs));
        write_atomically(parts / shard_name(todo[k], "records"), record_rows(recs));
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        stop = true;
      }
    }
  };
  const int workers = std::min<int>(worker_count(), static_cast<int>(std::max<std::size_t>(1, todo.size())));
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  summary.samples_run = todo.size();

  std::string records = kRecordsHeader, chis = kChiHeader;
  for (std::uint64_t id = 0; id < n; ++id) {
    records += read_file(parts / shard_name(id, "records"));
    chis += read_file(parts / shard_name(id, "chi"));
  }
  write_atomically(dir / "chi.csv", chis);
  write_atomically(dir / "records.csv", records);

  json manifest;
  manifest["tool"] = "qsync";
  manifest["version"] = kToolVersion;
  manifest["config_hash"] = hash;
  manifest["master_seed"] = cfg.master_seed;
  manifest["config"] = cfg_json;
  manifest["started_at"] = started;
  manifest["finished_at"] = utc_timestamp();
  manifest["samples_run"] = summary.samples_run;
  manifest["samples_resumed"] = summary.samples_resumed;
  write_atomically(dir / "manifest.json", manifest.dump(2) + "\n");

  std::istringstream rs(records), cs(chis);
  summary.records = read_records(rs, cs);
  return summary;
}

namespace {

double quantile(std::vector<double> v, double q) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

AggregateTable aggregate(const std::vector<SweepRecord>& records, const AggregateOptions& opts) {
  std::map<double, std::vector<const SweepRecord*>> by_eta;
  for (const auto& r : records) by_eta[r.eta].push_back(&r);
  AggregateTable table;
  std::size_t eta_index = 0;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& [eta, recs] : by_eta) {
    EtaAggregate row;
    row.eta = eta;
    row.records = recs.size();
    std::vector<double> smax, pooled;
    std::vector<IntervalCounts> groups;
    for (const auto* r : recs) {
      if (!r->included()) {
        ++row.excluded[r->reason];
        continue;
      }
      ++row.included;
      smax.push_back(r->s_max);
      pooled.insert(pooled.end(), r->chi.begin(), r->chi.end());
      groups.push_back(interval_counts(r->chi));
    }
    row.chi_hist = histogram(pooled, static_cast<std::size_t>(opts.histogram_bins));
    if (smax.empty()) {
      row.mean_s_max = row.sem_s_max = nan;
      row.s_max_quantiles.fill(nan);
      row.intervals.point.p1 = row.intervals.point.p2 = row.intervals.point.p3 = nan;
    } else {
      double mean = 0.0;
      for (double x : smax) mean += x;
      mean /= static_cast<double>(smax.size());
      double ss = 0.0;
      for (double x : smax) ss += (x - mean) * (x - mean);
      row.mean_s_max = mean;
      row.sem_s_max = smax.size() > 1 ? std::sqrt(ss / static_cast<double>(smax.size() - 1)) /
                                            std::sqrt(static_cast<double>(smax.size()))
                                      : 0.0;
      const std::array<double, 5> qs{0.05, 0.25, 0.5, 0.75, 0.95};
      for (std::size_t i = 0; i < qs.size(); ++i) row.s_max_quantiles[i] = quantile(smax, qs[i]);
      if (!pooled.empty())
        row.intervals = bootstrap_intervals(groups, opts.bootstrap_resamples, derive_seed(opts.bootstrap_seed, eta_index));
      else
        row.intervals.point.p1 = row.intervals.point.p2 = row.intervals.point.p3 = nan;
    }
    table.rows.push_back(std::move(row));
    ++eta_index;
  }
  return table;
}

void write_aggregate_csv(std::ostream& out, const AggregateTable& table) {
  out << "eta,mean_s_max,p1,p2,p3,ratio,ratio_ci_lo,ratio_ci_hi,n_records,n_included,sem_s_max,p1_sd,p2_sd,p3_sd,"
         "s_max_q05,s_max_q25,s_max_q50,s_max_q75,s_max_q95\n";
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& r : table.rows) {
    const auto& iv = r.intervals;
    out << format_double(r.eta) << ',' << format_double(r.mean_s_max) << ',' << format_double(iv.point.p1) << ','
        << format_double(iv.point.p2) << ',' << format_double(iv.point.p3) << ','
        << format_double(iv.point.ratio.value_or(nan)) << ',' << format_double(iv.ratio_lo.value_or(nan)) << ','
        << format_double(iv.ratio_hi.value_or(nan)) << ',' << r.records << ',' << r.included << ','
        << format_double(r.sem_s_max) << ',' << format_double(iv.p_sigma[0]) << ',' << format_double(iv.p_sigma[1])
        << ',' << format_double(iv.p_sigma[2]);
    for (double q : r.s_max_quantiles) out << ',' << format_double(q);
    out << '\n';
  }
}

void write_aggregate_outputs(const fs::path& dir, const AggregateTable& table) {
  std::ostringstream csv;
  write_aggregate_csv(csv, table);
  write_atomically(dir / "aggregate.csv", csv.str());
  json rows = json::array();
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  for (const auto& r : table.rows) {
    const std::string hist_name = "chi_hist_eta_" + format_double(r.eta) + ".csv";
    std::ostringstream h;
    write_histogram_csv(h, r.chi_hist);
    write_atomically(dir / hist_name, h.str());
    json row;
    row["eta"] = r.eta;
    row["records"] = r.records;
    row["included"] = r.included;
    row["excluded"] = r.excluded;
    row["mean_s_max"] = num(r.mean_s_max);
    row["sem_s_max"] = num(r.sem_s_max);
    row["s_max_quantiles"] = {{"q05", num(r.s_max_quantiles[0])}, {"q25", num(r.s_max_quantiles[1])},
                              {"q50", num(r.s_max_quantiles[2])}, {"q75", num(r.s_max_quantiles[3])},
                              {"q95", num(r.s_max_quantiles[4])}};
    row["p"] = {num(r.intervals.point.p1), num(r.intervals.point.p2), num(r.intervals.point.p3)};
    row["p_sd"] = r.intervals.p_sigma;
    row["p_diff_sd"] = r.intervals.diff_sigma;
    row["ratio"] = opt(r.intervals.point.ratio);
    row["ratio_ci"] = {opt(r.intervals.ratio_lo), opt(r.intervals.ratio_hi)};
    row["chi_histogram"] = hist_name;
    rows.push_back(std::move(row));
  }
  write_atomically(dir / "aggregate.json", json{{"rows", rows}}.dump(2) + "\n");
}

RunData load_run(const fs::path& dir) {
  RunData run;
  try {
    run.manifest = json::parse(read_file(dir / "manifest.json"));
  } catch (const json::exception& e) {
    throw std::runtime_error("cannot parse manifest in " + dir.string() + ": " + e.what());
  }
  std::ifstream rs(dir / "records.csv"), cs(dir / "chi.csv");
  if (!rs || !cs) throw std::runtime_error("missing records.csv or chi.csv in " + dir.string());
  run.records = read_records(rs, cs);
  return run;
}

RunData merge_runs(const std::vector<RunData>& runs) {
  if (runs.empty()) throw std::invalid_argument("merge_runs: nothing to merge");
  RunData out;
  out.manifest = runs.front().manifest;
  const json model = runs.front().manifest.at("config").at("model");
  for (const auto& r : runs) {
    if (r.manifest.at("config").at("model") != model)
      throw ConfigError("cannot aggregate records from different models");
    out.records.insert(out.records.end(), r.records.begin(), r.records.end());
  }
  return out;
}

}  // namespace qsync
