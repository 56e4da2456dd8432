#include "qkext/harness.hpp"

#include "qkext/analysis.hpp"
#include "qkext/completion.hpp"
#include "qkext/errors.hpp"
#include "qkext/io.hpp"
#include "qkext/rng.hpp"
#include "qkext/sparsity.hpp"

#include "json.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <tuple>

namespace qkext::harness {

namespace {

using nlohmann::json;

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Seed streams, kept apart so trial data, noise draws and survey draws
// never share an rng sequence.
constexpr std::uint64_t kDataStream = 0x100000;
constexpr std::uint64_t kNoiseStream = 0x200000;
constexpr std::uint64_t kSurveyStream = 0x300000;

double wall_seconds(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

} // namespace

std::string to_string(PatternKind kind) {
    return kind == PatternKind::band ? "band" : "two_block";
}

PatternKind pattern_kind_from_string(const std::string& name) {
    if (name == "band") return PatternKind::band;
    if (name == "two_block" || name == "two-block") return PatternKind::two_block;
    throw ValidationError("unknown pattern kind: " + name);
}

kernel::DataSet generate_data(kernel::DataSource source, int n, int d, std::uint64_t seed,
                              std::optional<double> correlation, std::optional<int> modes) {
    if (n < 1 || d < 1) {
        throw ValidationError("generate_data requires N >= 1 and d >= 1");
    }
    if (correlation && !(*correlation >= 0.0 && *correlation < 1.0)) {
        throw ValidationError("correlation must lie in [0, 1)");
    }
    if (modes && *modes < 1) {
        throw ValidationError("modes must be >= 1");
    }
    std::mt19937_64 rng = make_rng(seed);
    kernel::DataSet data;
    data.source = source;
    data.points.resize(n, d);
    switch (source) {
    case kernel::DataSource::uniform_random: {
        std::uniform_real_distribution<double> u(0.0, kTwoPi);
        for (int l = 0; l < n; ++l) {
            for (int j = 0; j < d; ++j) {
                data.points(l, j) = u(rng);
            }
        }
        return data;
    }
    case kernel::DataSource::correlated_synthetic: {
        const double rho = correlation.value_or(0.0);
        const int m = modes.value_or(1);
        std::normal_distribution<double> gauss(0.0, 1.0);
        Eigen::MatrixXd means = Eigen::MatrixXd::Zero(m, d);
        if (m > 1) {
            for (int k = 0; k < m; ++k) {
                for (int j = 0; j < d; ++j) {
                    means(k, j) = gauss(rng);
                }
            }
        }
        std::uniform_int_distribution<int> pick(0, m - 1);
        const double innovation = std::sqrt(1.0 - rho * rho);
        for (int l = 0; l < n; ++l) {
            const int k = m > 1 ? pick(rng) : 0;
            double z = 0.0;
            for (int j = 0; j < d; ++j) {
                // AR(1) recursion gives latent covariance rho^|i-j| exactly.
                z = (j == 0) ? gauss(rng) : rho * z + innovation * gauss(rng);
                const double shifted = z + means(k, j);
                data.points(l, j) = kTwoPi * 0.5 * std::erfc(-shifted / std::numbers::sqrt2);
            }
        }
        return data;
    }
    case kernel::DataSource::file:
        throw ValidationError("file-sourced data must be loaded from CSV, not generated");
    }
    throw ValidationError("unknown data source");
}

pqc::CircuitTemplate resolve_template(const std::string& id_or_path, int width, int layers) {
    if (pqc::is_builtin_template(id_or_path)) {
        if (width < 1 || layers < 1) {
            throw ValidationError("built-in template '" + id_or_path +
                                  "' needs width >= 1 and layers >= 1");
        }
        return pqc::builtin_template(id_or_path, width, layers);
    }
    pqc::CircuitTemplate tmpl = io::load_template(id_or_path);
    if (width >= 1 && tmpl.width() != width) {
        throw ValidationError("template file declares width " + std::to_string(tmpl.width()) +
                              " but " + std::to_string(width) + " was requested");
    }
    if (layers >= 1 && tmpl.layers() != layers) {
        throw ValidationError("template file declares layers " +
                              std::to_string(tmpl.layers()) + " but " +
                              std::to_string(layers) + " was requested");
    }
    return tmpl;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open " + path);
    }
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ValidationError("malformed JSON in " + path + ": " + e.what());
    }
    ExperimentConfig cfg;
    try {
        cfg.circuit = j.value("circuit", cfg.circuit);
        cfg.width = j.value("width", cfg.width);
        cfg.layers = j.value("layers", cfg.layers);
        cfg.n = j.value("N", cfg.n);
        cfg.n_new = j.value("n_new", cfg.n_new);
        if (j.contains("pattern")) {
            cfg.pattern = pattern_kind_from_string(j.at("pattern").get<std::string>());
        }
        cfg.sweep = j.value("sweep", cfg.sweep);
        cfg.shots = j.value("shots", cfg.shots);
        cfg.trials = j.value("trials", cfg.trials);
        cfg.out_dir = j.value("out_dir", cfg.out_dir);
        if (j.contains("data")) {
            const json& jd = j.at("data");
            if (jd.contains("source")) {
                cfg.data.source =
                    kernel::data_source_from_string(jd.at("source").get<std::string>());
            }
            cfg.data.d = jd.value("d", cfg.data.d);
            cfg.data.seed = jd.value("seed", cfg.data.seed);
            if (jd.contains("correlation")) {
                cfg.data.correlation = jd.at("correlation").get<double>();
            }
            if (jd.contains("modes")) {
                cfg.data.modes = jd.at("modes").get<int>();
            }
            cfg.data.path = jd.value("path", cfg.data.path);
        }
    } catch (const json::exception& e) {
        throw ValidationError("bad config field in " + path + ": " + e.what());
    }
    return cfg;
}

namespace {

struct SweepContext {
    pqc::CircuitTemplate tmpl;
    int n_total = 0;
};

SweepContext prepare_sweep(const ExperimentConfig& config, PatternKind kind) {
    if (config.pattern != kind) {
        throw ValidationError("config pattern is '" + to_string(config.pattern) +
                              "' but this sweep runs '" + to_string(kind) + "'");
    }
    if (config.sweep.empty()) {
        throw ValidationError("config needs a non-empty sweep list");
    }
    if (config.trials < 1) {
        throw ValidationError("trials must be >= 1");
    }
    if (config.shots.empty()) {
        throw ValidationError("config needs a non-empty shots list (0 = exact)");
    }
    for (const long r : config.shots) {
        if (r < 0) {
            throw ValidationError("shot counts must be >= 0");
        }
    }
    SweepContext ctx{resolve_template(config.circuit, config.width, config.layers), 0};
    ctx.n_total = kind == PatternKind::band ? config.n : config.n + config.n_new;
    if (config.n < 1 || (kind == PatternKind::two_block && config.n_new < 1)) {
        throw ValidationError("config needs N >= 1 (and n_new >= 1 for two-block sweeps)");
    }
    for (const int v : config.sweep) {
        if (kind == PatternKind::band && (v < 0 || v > ctx.n_total - 1)) {
            throw ValidationError("bandwidth " + std::to_string(v) + " out of [0, N-1]");
        }
        if (kind == PatternKind::two_block && (v < 0 || v > config.n)) {
            throw ValidationError("overlap " + std::to_string(v) + " out of [0, N]");
        }
    }
    return ctx;
}

kernel::DataSet trial_data(const ExperimentConfig& config, const SweepContext& ctx, int trial) {
    const int p = ctx.tmpl.param_count();
    kernel::DataSet data;
    if (config.data.source == kernel::DataSource::file) {
        if (config.data.path.empty()) {
            throw ValidationError("file data source needs a 'path'");
        }
        data.points = io::load_matrix_csv(config.data.path);
        data.source = kernel::DataSource::file;
        if (data.points.rows() != ctx.n_total) {
            throw ValidationError("data file has " + std::to_string(data.points.rows()) +
                                  " rows but the sweep needs " + std::to_string(ctx.n_total));
        }
    } else {
        const int d = config.data.d < 0 ? p : config.data.d;
        data = generate_data(config.data.source, ctx.n_total, d,
                             derive_seed(config.data.seed, kDataStream + std::uint64_t(trial)),
                             config.data.correlation, config.data.modes);
    }
    if (data.points.cols() < p) {
        throw ValidationError("data has " + std::to_string(data.points.cols()) +
                              " features but the circuit needs " + std::to_string(p));
    }
    if (data.points.cols() > p) {
        data.points = data.points.leftCols(p).eval(); // truncate extra features
    }
    return data;
}

std::vector<SweepRecord> run_sweep(const ExperimentConfig& config, PatternKind kind) {
    const SweepContext ctx = prepare_sweep(config, kind);
    std::vector<SweepRecord> records;
    const std::string csv_path =
        (std::filesystem::path(config.out_dir) /
         (kind == PatternKind::band ? "band_sweep.csv" : "extend_sweep.csv"))
            .string();
    std::filesystem::create_directories(config.out_dir);

    auto flush = [&]() {
        std::sort(records.begin(), records.end(), [](const SweepRecord& a, const SweepRecord& b) {
            return std::tie(a.sweep_value, a.shots, a.trial) <
                   std::tie(b.sweep_value, b.shots, b.trial);
        });
        write_sweep_csv(csv_path, records);
    };

    try {
        for (int trial = 0; trial < config.trials; ++trial) {
            const kernel::DataSet data = trial_data(config, ctx, trial);
            kernel::KernelMatrix exact = kernel::build_kernel_matrix(ctx.tmpl, data);
            exact.meta.seed = config.data.seed;
            const int rank = analysis::numerical_rank(exact.values);
            for (size_t ri = 0; ri < config.shots.size(); ++ri) {
                const long shots = config.shots[ri];
                kernel::KernelMatrix truth;
                if (shots == 0) {
                    truth = exact;
                } else {
                    std::mt19937_64 noise_rng = make_rng(derive_seed(
                        config.data.seed,
                        kNoiseStream + std::uint64_t(trial) * 4096 + std::uint64_t(ri)));
                    truth = kernel::apply_shot_noise(exact, shots, noise_rng);
                }
                const std::string checksum = io::checksum_hex(truth.values);
                for (const int v : config.sweep) {
                    const auto t0 = std::chrono::steady_clock::now();
                    const sparsity::SparsityPattern pattern =
                        kind == PatternKind::band
                            ? sparsity::band_pattern(ctx.n_total, v)
                            : sparsity::two_block_pattern(config.n, config.n_new, v);
                    const sparsity::SparseKernelView view(pattern, truth.values);
                    completion::CompletionOptions opts;
                    opts.repair = shots > 0;
                    const completion::CompletionResult res =
                        completion::complete_max_det(view, opts);
                    const analysis::ErrorReport err =
                        analysis::completion_error(truth.values, res.matrix, pattern);
                    SweepRecord rec;
                    rec.pattern = to_string(kind);
                    rec.sweep_value = v;
                    rec.shots = shots;
                    rec.trial = trial;
                    rec.error = err.error;
                    rec.rank = rank;
                    rec.u_over_r = double(v) / double(rank);
                    rec.sampling_fraction = pattern.sampling_fraction();
                    rec.wall_time = wall_seconds(t0);
                    rec.truth_checksum = checksum;
                    records.push_back(std::move(rec));
                }
            }
        }
    } catch (...) {
        flush(); // keep partial results on disk before propagating
        throw;
    }
    flush();
    return records;
}

} // namespace

std::vector<SweepRecord> run_band_sweep(const ExperimentConfig& config) {
    return run_sweep(config, PatternKind::band);
}

std::vector<SweepRecord> run_extension_sweep(const ExperimentConfig& config) {
    return run_sweep(config, PatternKind::two_block);
}

std::vector<RankSurveyRow> run_rank_survey(const std::vector<int>& widths,
                                           const std::vector<int>& ns, int trials,
                                           const std::vector<std::string>& sources, int layers,
                                           std::uint64_t seed, const std::string& out_csv) {
    if (widths.empty() || ns.empty() || sources.empty()) {
        throw ValidationError("rank survey needs widths, sizes and sources");
    }
    if (trials < 1) {
        throw ValidationError("trials must be >= 1");
    }
    std::vector<RankSurveyRow> rows;
    std::uint64_t stream = kSurveyStream;
    for (const std::string& source : sources) {
        for (const int w : widths) {
            for (const int n : ns) {
                for (int trial = 0; trial < trials; ++trial) {
                    ++stream;
                    RankSurveyRow row;
                    row.source = source;
                    row.width = w;
                    row.n = n;
                    row.trial = trial;
                    row.bound = analysis::rank_bound(n, w);
                    if (source == "haar") {
                        std::mt19937_64 rng = make_rng(derive_seed(seed, stream));
                        const analysis::HaarRankReport rep =
                            analysis::haar_rank_conjecture_check(w, n, 1, rng);
                        row.rank = rep.ranks.front();
                    } else {
                        const pqc::CircuitTemplate tmpl = resolve_template(source, w, layers);
                        const kernel::DataSet data =
                            generate_data(kernel::DataSource::uniform_random, n,
                                          tmpl.param_count(), derive_seed(seed, stream));
                        const kernel::KernelMatrix k = kernel::build_kernel_matrix(tmpl, data);
                        row.rank = analysis::numerical_rank(k.values);
                    }
                    row.saturated = row.rank == row.bound;
                    rows.push_back(std::move(row));
                }
            }
        }
    }
    if (!out_csv.empty()) {
        write_rank_survey_csv(out_csv, rows);
    }
    return rows;
}

void write_sweep_csv(const std::string& path, const std::vector<SweepRecord>& records) {
    std::ofstream out(path);
    if (!out) {
        throw ValidationError("cannot write " + path);
    }
    out << "pattern,sweep_value,shots,trial,error,rank,u_over_r,sampling_fraction,"
           "truth_checksum\n";
    for (const SweepRecord& r : records) {
        out << r.pattern << ',' << r.sweep_value << ',' << r.shots << ',' << r.trial << ','
            << io::format_double(r.error) << ',' << r.rank << ','
            << io::format_double(r.u_over_r) << ',' << io::format_double(r.sampling_fraction)
            << ',' << r.truth_checksum << '\n';
    }
}

void write_rank_survey_csv(const std::string& path, const std::vector<RankSurveyRow>& rows) {
    std::ofstream out(path);
    if (!out) {
        throw ValidationError("cannot write " + path);
    }
    out << "source,width,N,trial,rank,bound,saturated\n";
    for (const RankSurveyRow& r : rows) {
        out << r.source << ',' << r.width << ',' << r.n << ',' << r.trial << ',' << r.rank
            << ',' << r.bound << ',' << (r.saturated ? 1 : 0) << '\n';
    }
}

} // namespace qkext::harness
