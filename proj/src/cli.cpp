#include "qkext/harness.hpp"

#include "qkext/analysis.hpp"
#include "qkext/completion.hpp"
#include "qkext/errors.hpp"
#include "qkext/io.hpp"
#include "qkext/rng.hpp"

#include "CLI11.hpp"

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace qkext::harness {

namespace {

// Stream ids for CLI-side rng derivations (distinct from the sweep streams).
constexpr std::uint64_t kCliNoiseStream = 0x10;
constexpr std::uint64_t kCliExprStream = 0x20;
constexpr std::uint64_t kCliVerifyStream = 0x30;

struct GenKernelArgs {
    std::string tmpl;
    int width = 0;
    int layers = 1;
    int n = 0;
    int d = -1;
    std::string data = "uniform_random";
    std::string data_file;
    double rho = -1.0;
    int modes = 0;
    long shots = 0;
    std::uint64_t seed = 0;
    std::string out;
    std::string csv;
};

void run_gen_kernel(const GenKernelArgs& a) {
    kernel::DataSet data;
    pqc::CircuitTemplate tmpl = resolve_template(a.tmpl, a.width, a.layers);
    const int p = tmpl.param_count();
    if (!a.data_file.empty()) {
        data.points = io::load_matrix_csv(a.data_file);
        data.source = kernel::DataSource::file;
    } else {
        if (a.n < 1) {
            throw ValidationError("--n is required for generated data");
        }
        const kernel::DataSource source = kernel::data_source_from_string(a.data);
        std::optional<double> correlation;
        if (a.rho >= 0.0) {
            correlation = a.rho;
        }
        std::optional<int> modes;
        if (a.modes > 0) {
            modes = a.modes;
        }
        data = generate_data(source, a.n, a.d < 0 ? p : a.d, a.seed, correlation, modes);
    }
    if (data.points.cols() < p) {
        throw ValidationError("data has " + std::to_string(data.points.cols()) +
                              " features but the circuit needs " + std::to_string(p));
    }
    if (data.points.cols() > p) {
        data.points = data.points.leftCols(p).eval();
    }
    kernel::KernelMatrix k = kernel::build_kernel_matrix(tmpl, data);
    k.meta.seed = a.seed;
    if (a.shots > 0) {
        std::mt19937_64 rng = make_rng(derive_seed(a.seed, kCliNoiseStream));
        k = kernel::apply_shot_noise(k, a.shots, rng);
    }
    io::save_kernel(a.out, k);
    if (!a.csv.empty()) {
        io::save_matrix_csv(a.csv, k.values);
    }
    std::cout << "wrote " << k.size() << "x" << k.size() << " kernel to " << a.out
              << " (shots = " << k.meta.shots << ")\n";
}

struct SubsampleArgs {
    std::string in;
    std::string pattern = "band";
    int bandwidth = -1;
    int overlap = -1;
    int n_new = 0;
    std::string out;
};

void run_subsample(const SubsampleArgs& a) {
    const kernel::KernelMatrix k = io::load_kernel(a.in);
    const int n = int(k.size());
    const PatternKind kind = pattern_kind_from_string(a.pattern);
    std::optional<sparsity::SparsityPattern> pattern;
    if (kind == PatternKind::band) {
        if (a.bandwidth < 0) {
            throw ValidationError("band pattern needs --bandwidth");
        }
        pattern = sparsity::band_pattern(n, a.bandwidth);
    } else {
        if (a.overlap < 0 || a.n_new < 1) {
            throw ValidationError("two-block pattern needs --overlap and --n-new");
        }
        pattern = sparsity::two_block_pattern(n - a.n_new, a.n_new, a.overlap);
    }
    const sparsity::SparseKernelView view(*pattern, k.values);
    io::save_view(a.out, view, k.meta);
    std::cout << "wrote view (" << pattern->block_count() << " blocks, sampling fraction "
              << io::format_double(pattern->sampling_fraction()) << ") to " << a.out << "\n";
}

struct CompleteArgs {
    std::string in;
    std::string out;
    bool repair = false;
    double rank_tol = -1.0;
    std::string diagnostics;
};

void run_complete(const CompleteArgs& a) {
    const io::LoadedView loaded = io::load_view(a.in);
    completion::CompletionOptions opts;
    opts.repair = a.repair;
    opts.rank_tol = a.rank_tol;
    const completion::CompletionResult result = completion::complete_max_det(loaded.view, opts);
    kernel::KernelMatrix out;
    out.values = result.matrix;
    out.meta = loaded.meta;
    io::save_kernel(a.out, out);
    std::mt19937_64 rng = make_rng(derive_seed(loaded.meta.seed, kCliVerifyStream));
    const completion::MaxDetReport verify =
        completion::verify_max_det(result, loaded.view, 0, rng);
    const std::string diag_path = a.diagnostics.empty() ? a.out + ".diag.json" : a.diagnostics;
    io::save_completion_diagnostics(diag_path, result, &verify);
    std::cout << "completed matrix written to " << a.out << " (min eigenvalue "
              << io::format_double(result.min_eigenvalue) << ", diagnostics " << diag_path
              << ")\n";
}

struct ErrorArgs {
    std::string truth;
    std::string estimate;
    std::string view;
    std::string out;
};

void run_error(const ErrorArgs& a) {
    const kernel::KernelMatrix truth = io::load_kernel(a.truth);
    const kernel::KernelMatrix estimate = io::load_kernel(a.estimate);
    const sparsity::SparsityPattern pattern = io::load_pattern(a.view);
    const analysis::ErrorReport report =
        analysis::completion_error(truth.values, estimate.values, pattern);
    if (!a.out.empty()) {
        io::save_error_report(a.out, report);
    }
    std::cout << "error = " << io::format_double(report.error) << " over "
              << report.unknown_count << " unknown entries\n";
}

struct RankArgs {
    std::string in;
    double rel_tol = -1.0;
};

void run_rank(const RankArgs& a) {
    const kernel::KernelMatrix k = io::load_kernel(a.in);
    std::cout << analysis::numerical_rank(k.values, a.rel_tol) << "\n";
}

struct ExpressibilityArgs {
    std::string tmpl;
    int width = 0;
    int layers = 1;
    long samples = 5000;
    int bins = 75;
    std::uint64_t seed = 0;
    std::string out;
    std::string histogram;
};

void run_expressibility(const ExpressibilityArgs& a) {
    const pqc::CircuitTemplate tmpl = resolve_template(a.tmpl, a.width, a.layers);
    std::mt19937_64 rng = make_rng(derive_seed(a.seed, kCliExprStream));
    const analysis::ExpressibilityReport report =
        analysis::expressibility(tmpl, a.samples, a.bins, rng);
    if (!a.out.empty()) {
        io::save_expressibility_report(a.out, report);
    }
    if (!a.histogram.empty()) {
        io::save_expressibility_histogram_csv(a.histogram, report);
    }
    std::cout << "kl = " << io::format_double(report.kl)
              << (report.degenerate ? " (degenerate: parameterless circuit)" : "") << "\n";
}

struct SurveyArgs {
    std::vector<int> widths;
    std::vector<int> ns;
    int trials = 5;
    std::vector<std::string> sources{"haar"};
    int layers = 1;
    std::uint64_t seed = 0;
    std::string out;
};

void run_survey(const SurveyArgs& a) {
    const std::vector<RankSurveyRow> rows =
        run_rank_survey(a.widths, a.ns, a.trials, a.sources, a.layers, a.seed, a.out);
    long saturated = 0;
    for (const RankSurveyRow& r : rows) {
        saturated += r.saturated ? 1 : 0;
    }
    std::cout << rows.size() << " survey rows (" << saturated << " saturate the rank bound)";
    if (!a.out.empty()) {
        std::cout << " written to " << a.out;
    }
    std::cout << "\n";
}

} // namespace

int cli_main(int argc, const char* const* argv) {
    CLI::App app{"Quantum kernel matrices: simulation, subsampling, max-det completion and "
                 "rank/expressibility analysis"};
    app.require_subcommand(1);

    GenKernelArgs gen;
    CLI::App* gen_cmd = app.add_subcommand(
        "gen-kernel", "Simulate a circuit over a data set and write the kernel matrix");
    gen_cmd->add_option("--template", gen.tmpl, "built-in template id or JSON file")
        ->required();
    gen_cmd->add_option("--width", gen.width, "qubits (built-in templates)");
    gen_cmd->add_option("--layers", gen.layers, "layer repetitions");
    gen_cmd->add_option("--n", gen.n, "number of data points");
    gen_cmd->add_option("--d", gen.d, "features per point (default: circuit parameter count)");
    gen_cmd->add_option("--data", gen.data, "uniform_random | correlated_synthetic");
    gen_cmd->add_option("--data-file", gen.data_file, "CSV of data points (rows)");
    gen_cmd->add_option("--rho", gen.rho, "AR(1) correlation for correlated data");
    gen_cmd->add_option("--modes", gen.modes, "cluster count for correlated data");
    gen_cmd->add_option("--shots", gen.shots, "finite shots R (0 = exact)");
    gen_cmd->add_option("--seed", gen.seed, "rng seed")->required();
    gen_cmd->add_option("--out", gen.out, "output kernel path (binary + .json sidecar)")
        ->required();
    gen_cmd->add_option("--csv", gen.csv, "also dump the matrix as CSV");

    SubsampleArgs sub;
    CLI::App* sub_cmd =
        app.add_subcommand("subsample", "Restrict a kernel matrix to a sparsity pattern");
    sub_cmd->add_option("--in", sub.in, "kernel file")->required();
    sub_cmd->add_option("--pattern", sub.pattern, "band | two-block")->required();
    sub_cmd->add_option("--bandwidth", sub.bandwidth, "band: half-width");
    sub_cmd->add_option("--overlap", sub.overlap, "two-block: shared rows u");
    sub_cmd->add_option("--n-new", sub.n_new, "two-block: size of the new block");
    sub_cmd->add_option("--out", sub.out, "output view JSON")->required();

    CompleteArgs comp;
    CLI::App* comp_cmd =
        app.add_subcommand("complete", "Maximum-determinant completion of a sparse view");
    comp_cmd->add_option("--in", comp.in, "view JSON")->required();
    comp_cmd->add_option("--out", comp.out, "output kernel path")->required();
    comp_cmd->add_flag("--repair", comp.repair, "nearest-correlation repair of noisy blocks");
    comp_cmd->add_option("--rank-tol", comp.rank_tol, "pseudoinverse relative cutoff");
    comp_cmd->add_option("--diagnostics", comp.diagnostics,
                         "diagnostics JSON path (default <out>.diag.json)");

    ErrorArgs err;
    CLI::App* err_cmd =
        app.add_subcommand("error", "Completion error over the unknown entries");
    err_cmd->add_option("--truth", err.truth, "ground-truth kernel file")->required();
    err_cmd->add_option("--estimate", err.estimate, "completed kernel file")->required();
    err_cmd->add_option("--view", err.view, "view or pattern JSON")->required();
    err_cmd->add_option("--out", err.out, "write the report as JSON");

    RankArgs rank;
    CLI::App* rank_cmd = app.add_subcommand("rank", "Numerical rank of a kernel matrix");
    rank_cmd->add_option("--in", rank.in, "kernel file")->required();
    rank_cmd->add_option("--rel-tol", rank.rel_tol, "singular value cutoff / sigma_max");

    ExpressibilityArgs expr;
    CLI::App* expr_cmd = app.add_subcommand(
        "expressibility", "KL divergence of a circuit's fidelity histogram vs the Haar law");
    expr_cmd->add_option("--template", expr.tmpl, "built-in template id or JSON file")
        ->required();
    expr_cmd->add_option("--width", expr.width, "qubits (built-in templates)");
    expr_cmd->add_option("--layers", expr.layers, "layer repetitions");
    expr_cmd->add_option("--samples", expr.samples, "fidelity samples");
    expr_cmd->add_option("--bins", expr.bins, "histogram bins");
    expr_cmd->add_option("--seed", expr.seed, "rng seed")->required();
    expr_cmd->add_option("--out", expr.out, "report JSON path");
    expr_cmd->add_option("--histogram", expr.histogram, "histogram CSV path");

    std::string band_config;
    CLI::App* band_cmd =
        app.add_subcommand("sweep-band", "Band-pattern completion sweep from a config file");
    band_cmd->add_option("--config", band_config, "experiment config JSON")->required();

    std::string extend_config;
    CLI::App* extend_cmd = app.add_subcommand(
        "sweep-extend", "Two-block extension sweep over overlaps from a config file");
    extend_cmd->add_option("--config", extend_config, "experiment config JSON")->required();

    SurveyArgs survey;
    CLI::App* survey_cmd = app.add_subcommand(
        "rank-survey", "Kernel rank vs the min(N, 4^w) bound across widths and sizes");
    survey_cmd->add_option("--widths", survey.widths, "circuit widths")
        ->required()
        ->delimiter(',');
    survey_cmd->add_option("--ns", survey.ns, "matrix sizes")->required()->delimiter(',');
    survey_cmd->add_option("--trials", survey.trials, "trials per cell");
    survey_cmd->add_option("--sources", survey.sources, "template ids and/or 'haar'")
        ->delimiter(',');
    survey_cmd->add_option("--layers", survey.layers, "layer repetitions for templates");
    survey_cmd->add_option("--seed", survey.seed, "rng seed")->required();
    survey_cmd->add_option("--out", survey.out, "output CSV path");

    try {
        app.parse(argc, argv);
        if (gen_cmd->parsed()) {
            run_gen_kernel(gen);
        } else if (sub_cmd->parsed()) {
            run_subsample(sub);
        } else if (comp_cmd->parsed()) {
            run_complete(comp);
        } else if (err_cmd->parsed()) {
            run_error(err);
        } else if (rank_cmd->parsed()) {
            run_rank(rank);
        } else if (expr_cmd->parsed()) {
            run_expressibility(expr);
        } else if (band_cmd->parsed()) {
            const auto records = run_band_sweep(load_config(band_config));
            std::cout << records.size() << " sweep records written\n";
        } else if (extend_cmd->parsed()) {
            const auto records = run_extension_sweep(load_config(extend_config));
            std::cout << records.size() << " sweep records written\n";
        } else if (survey_cmd->parsed()) {
            run_survey(survey);
        }
        return 0;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1; // --help exits 0; any usage problem is 1
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "unexpected failure: " << e.what() << "\n";
        return 2;
    }
}

} // namespace qkext::harness
