#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "qsync/liouvillian.hpp"
#include "qsync/phasespace.hpp"
#include "qsync/syncstats.hpp"

namespace qsync {

inline constexpr const char* kToolVersion = "0.1.0";

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A named model preset with its unperturbed generator. `structured` holds the
/// model's own perturbation when it has one (coupled_spin1_pair).
struct ModelInstance {
  std::string preset;
  nlohmann::json params;  ///< parameters with defaults filled in
  LindbladModel base;
  Superoperator generator;
  std::optional<Superoperator> structured;
  double scale = 1.0;  ///< omega or J, the unit for eta
};

/// {"preset": "spin1_chain" | "spin_half_pair" | "coupled_spin1_pair", ...params}.
ModelInstance make_model(const nlohmann::json& model);

enum class PerturbationKind { random, model };

struct SweepConfig {
  nlohmann::json model = {{"preset", "spin1_chain"}};
  std::vector<double> eta_values;
  int samples_per_eta = 200;
  std::uint64_t master_seed = 1;
  double threshold = 0.95;
  int chi_samples_per_record = 1000;
  int grid_points = 256;
  int histogram_bins = 64;
  int bootstrap_resamples = 1000;
  PerturbationKind perturbation = PerturbationKind::random;
  RegionSampling sampling = RegionSampling::weighted;
  std::filesystem::path output_dir = "qsync-out";

  /// Throws ConfigError.
  void validate() const;
  /// Everything except output_dir, with defaults filled in.
  nlohmann::json to_json() const;
  std::uint64_t hash() const;
};

/// Missing eta_values default to the preset's logarithmic grid.
SweepConfig parse_config(const nlohmann::json& j);
SweepConfig load_config(const std::filesystem::path& path);

/// Default eta grid: one point per decade over [1e-7, 1e1] (spin-1 chain) or
/// [1e-5, 1e0] (others), in units of the model scale.
std::vector<double> default_eta_grid(const std::string& preset, double scale);

struct SweepRecord {
  std::uint64_t sample_id = 0;
  double eta = 0.0;
  std::uint64_t seed = 0;
  double s_max = 0.0;
  std::vector<std::vector<double>> argmax;
  int multiplicity = 0;
  std::string reason = "ok";  ///< ok | multiplicity | solver_failure
  double hermitian_defect = 0.0;
  double min_eigenvalue = 0.0;
  std::vector<double> chi;

  bool included() const { return reason == "ok"; }
};

/// Per-state analysis shared by the sweep and the CLI.
struct StateAnalysis {
  ReducedPhaseDistribution sd;
  PhaseGrid grid;
  SyncMeasure sync;
  ThresholdRegion region;
  ChiSampleSet chi;
};

StateAnalysis analyze_state(const Operator& rho, const SpinSpec& spec, double threshold, int grid_points,
                            int chi_samples, Rng& rng, RegionSampling mode = RegionSampling::weighted);

/// Perturbation for one ensemble sample: a random draw seeded with `seed`, or
/// the preset's own perturbation.
Superoperator sample_perturbation(const ModelInstance& model, PerturbationKind kind, std::uint64_t seed);

/// All eta values of one sample; per-eta failures become reason codes.
std::vector<SweepRecord> run_sample(const ModelInstance& model, const SweepConfig& cfg, std::uint64_t sample_id);

struct SweepSummary {
  std::size_t samples_run = 0;
  std::size_t samples_resumed = 0;
  std::vector<SweepRecord> records;  ///< sorted by (sample_id, eta index)
};

/// Runs every sample, persisting per-sample shards under output_dir/parts and
/// assembling records.csv, chi.csv and manifest.json. Existing shards from a
/// run with the same config hash are reused. Worker count comes from the
/// QSYNC_WORKERS environment variable (default: hardware concurrency).
SweepSummary run_sweep(const SweepConfig& cfg);

int worker_count();

struct EtaAggregate {
  double eta = 0.0;
  std::size_t records = 0;
  std::size_t included = 0;
  std::map<std::string, std::size_t> excluded;  ///< by reason code
  double mean_s_max = 0.0;
  double sem_s_max = 0.0;
  std::array<double, 5> s_max_quantiles{};  ///< 5, 25, 50, 75, 95 %
  Histogram chi_hist;
  BootstrapSummary intervals;
};

struct AggregateTable {
  std::vector<EtaAggregate> rows;  ///< ascending eta
};

struct AggregateOptions {
  int histogram_bins = 64;
  int bootstrap_resamples = 1000;
  std::uint64_t bootstrap_seed = 1;
};

AggregateTable aggregate(const std::vector<SweepRecord>& records, const AggregateOptions& opts = {});

/// records.csv and chi.csv.
void write_records_csv(std::ostream& out, const std::vector<SweepRecord>& records);
void write_chi_csv(std::ostream& out, const std::vector<SweepRecord>& records);
std::vector<SweepRecord> read_records(std::istream& records_csv, std::istream& chi_csv);

/// aggregate.csv: eta, mean_s_max, p1, p2, p3, ratio, ratio_ci_lo, ratio_ci_hi, then extras.
void write_aggregate_csv(std::ostream& out, const AggregateTable& table);
/// aggregate.csv, aggregate.json and one histogram CSV per eta.
void write_aggregate_outputs(const std::filesystem::path& dir, const AggregateTable& table);

struct RunData {
  nlohmann::json manifest;
  std::vector<SweepRecord> records;
};

RunData load_run(const std::filesystem::path& dir);
/// Concatenates runs of the same model; mixed presets or parameters throw.
RunData merge_runs(const std::vector<RunData>& runs);

/// Writes to `path` through a temporary file and rename.
void write_atomically(const std::filesystem::path& path, const std::string& content);

std::string format_double(double x);
std::uint64_t fnv1a(const std::string& s);
std::string utc_timestamp();

}  // namespace qsync
