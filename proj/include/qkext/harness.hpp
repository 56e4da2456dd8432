#pragma once

#include "qkext/kernel.hpp"
#include "qkext/pqc.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace qkext::harness {

enum class PatternKind { band, two_block };

std::string to_string(PatternKind kind);
PatternKind pattern_kind_from_string(const std::string& name);

struct DataConfig {
    kernel::DataSource source = kernel::DataSource::uniform_random;
    int d = -1; // -1: match the circuit's parameter count
    std::uint64_t seed = 0;
    std::optional<double> correlation; // AR(1) rho, correlated source only
    std::optional<int> modes;          // cluster count, correlated source only
    std::string path;                  // CSV path, file source only
};

struct ExperimentConfig {
    std::string circuit = "ry_cx_linear"; // built-in id or template file path
    int width = 2;
    int layers = 1;
    int n = 100;     // existing points (total matrix size for band sweeps)
    int n_new = 20;  // extension points (two-block sweeps only)
    PatternKind pattern = PatternKind::two_block;
    std::vector<int> sweep;   // bandwidths or overlaps
    std::vector<long> shots{0};
    int trials = 1;
    DataConfig data;
    std::string out_dir = ".";
};

/// Experiment config JSON with the field names above ("N" for n).
ExperimentConfig load_config(const std::string& path);

struct SweepRecord {
    std::string pattern;
    int sweep_value = 0; // bandwidth or overlap u
    long shots = 0;
    int trial = 0;
    double error = 0.0;
    int rank = 0;        // numerical rank of the exact (noise-free) truth
    double u_over_r = 0.0;
    double sampling_fraction = 0.0;
    double wall_time = 0.0;     // seconds; kept out of the CSV so outputs
                                // are byte-identical for a fixed seed
    std::string truth_checksum; // checksum of the (trial, shots) ground truth
};

/// Synthetic data: uniform i.i.d. on [0, 2pi), or an AR(1) Gaussian copula
/// with optional cluster means mapped through the normal CDF onto [0, 2pi).
/// Deterministic for a fixed seed. The file source must be loaded from CSV
/// instead.
kernel::DataSet generate_data(kernel::DataSource source, int n, int d, std::uint64_t seed,
                              std::optional<double> correlation = {},
                              std::optional<int> modes = {});

/// A built-in template id at the given width/layers, or a template file.
pqc::CircuitTemplate resolve_template(const std::string& id_or_path, int width, int layers);

/// Band sweep: one ground truth per (trial, shots), subsampled at every
/// bandwidth in config.sweep, completed (repair on iff shots > 0), scored.
/// Writes <out_dir>/band_sweep.csv; records are returned in canonical order
/// (sweep value, shots, trial).
std::vector<SweepRecord> run_band_sweep(const ExperimentConfig& config);

/// Extension sweep over two-block overlaps u; same contract, writing
/// <out_dir>/extend_sweep.csv.
std::vector<SweepRecord> run_extension_sweep(const ExperimentConfig& config);

struct RankSurveyRow {
    std::string source; // "haar" or a template id
    int width = 0;
    int n = 0;
    int trial = 0;
    int rank = 0;
    long bound = 0;
    bool saturated = false;
};

/// Rank per (source, width, N, trial) against min(N, 4^w). Sources are
/// template ids or "haar". Writes CSV to out_csv unless empty.
std::vector<RankSurveyRow> run_rank_survey(const std::vector<int>& widths,
                                           const std::vector<int>& ns, int trials,
                                           const std::vector<std::string>& sources, int layers,
                                           std::uint64_t seed, const std::string& out_csv);

void write_sweep_csv(const std::string& path, const std::vector<SweepRecord>& records);
void write_rank_survey_csv(const std::string& path, const std::vector<RankSurveyRow>& rows);

/// Entry point behind the qkext binary: subcommands gen-kernel, subsample,
/// complete, error, rank, expressibility, sweep-band, sweep-extend,
/// rank-survey. Returns 0 on success, 1 on validation/usage errors, 2 on
/// numerical failures.
int cli_main(int argc, const char* const* argv);

} // namespace qkext::harness
