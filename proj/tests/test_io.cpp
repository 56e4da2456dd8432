#include "oracles.hpp"
#include "qkext/errors.hpp"
#include "qkext/io.hpp"
#include "qkext/rng.hpp"

#include <catch2/catch_amalgamated.hpp>
#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <string>
#include <unistd.h>
#include <vector>

using Catch::Approx;
using qkext::ValidationError;
namespace fs = std::filesystem;

namespace {

// Scratch directory unique to this process, removed on destruction.
struct TempDir {
    fs::path path;

    TempDir() {
        auto rng = std::random_device{};
        path = fs::temp_directory_path() /
               ("qkext_io_" + std::to_string(rng()) + "_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

} // namespace

TEST_CASE("fnv1a64 reference vectors", "[io]") {
    CHECK(qkext::io::fnv1a64("", 0) == 0xcbf29ce484222325ULL);
    CHECK(qkext::io::fnv1a64("a", 1) == 0xaf63dc4c8601ec8cULL);
    CHECK(qkext::io::fnv1a64("foobar", 6) == 0x85944171f73967e8ULL);
}

TEST_CASE("matrix checksums are stable and sensitive", "[io]") {
    Eigen::MatrixXd m(2, 2);
    m << 1.0, 0.5, 0.5, 1.0;
    const std::string sum = qkext::io::checksum_hex(m);
    CHECK(sum.size() == 16);
    CHECK(qkext::io::checksum_hex(m) == sum);
    Eigen::MatrixXd other = m;
    other(0, 1) += 1e-15;
    CHECK(qkext::io::checksum_hex(other) != sum);
}

TEST_CASE("template files round-trip", "[io]") {
    TempDir dir;
    const auto tmpl = qkext::pqc::builtin_template("ry_rz_crx_full", 3, 2);
    qkext::io::save_template(dir.file("t.json"), tmpl);
    const auto loaded = qkext::io::load_template(dir.file("t.json"));

    CHECK(loaded.id() == tmpl.id());
    CHECK(loaded.width() == tmpl.width());
    CHECK(loaded.layers() == tmpl.layers());
    CHECK(loaded.param_count() == tmpl.param_count());

    // Same program: identical states on random parameters.
    auto rng = qkext::make_rng(4);
    std::uniform_real_distribution<double> angle(0.0, 6.28);
    std::vector<double> params(size_t(tmpl.param_count()));
    for (double& p : params) {
        p = angle(rng);
    }
    const auto a = qkext::pqc::simulate(tmpl, params);
    const auto b = qkext::pqc::simulate(loaded, params);
    CHECK((a - b).norm() == 0.0);

    CHECK_THROWS_AS(qkext::io::load_template(dir.file("missing.json")), ValidationError);
    std::ofstream(dir.file("broken.json")) << "{\"id\": \"x\", \"width\": 1}";
    CHECK_THROWS_AS(qkext::io::load_template(dir.file("broken.json")), ValidationError);
    std::ofstream(dir.file("notjson.json")) << "not json at all";
    CHECK_THROWS_AS(qkext::io::load_template(dir.file("notjson.json")), ValidationError);
}

TEST_CASE("kernel files round-trip byte-exactly", "[io]") {
    TempDir dir;
    auto rng = qkext::make_rng(21);
    qkext::kernel::KernelMatrix k;
    k.values = oracles::random_correlation(7, rng);
    k.meta = {"ry_cx_linear", 2, 1, 512, 99};

    qkext::io::save_kernel(dir.file("k.bin"), k);
    const auto loaded = qkext::io::load_kernel(dir.file("k.bin"));
    CHECK(loaded.values == k.values);
    CHECK(loaded.meta.circuit_id == "ry_cx_linear");
    CHECK(loaded.meta.width == 2);
    CHECK(loaded.meta.layers == 1);
    CHECK(loaded.meta.shots == 512);
    CHECK(loaded.meta.seed == 99);
}

TEST_CASE("kernel loading detects corruption", "[io]") {
    TempDir dir;
    qkext::kernel::KernelMatrix k;
    k.values = Eigen::MatrixXd::Identity(3, 3);
    k.meta = {"rx_rz", 1, 1, 0, 1};
    qkext::io::save_kernel(dir.file("k.bin"), k);

    // Flip one payload byte: checksum must catch it.
    {
        std::fstream f(dir.file("k.bin"), std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(4);
        f.put(char(0x7f));
    }
    CHECK_THROWS_AS(qkext::io::load_kernel(dir.file("k.bin")), ValidationError);

    // Truncated payload.
    qkext::io::save_kernel(dir.file("t.bin"), k);
    fs::resize_file(dir.file("t.bin"), 8);
    CHECK_THROWS_AS(qkext::io::load_kernel(dir.file("t.bin")), ValidationError);

    // Missing sidecar.
    qkext::io::save_kernel(dir.file("s.bin"), k);
    fs::remove(dir.file("s.bin.json"));
    CHECK_THROWS_AS(qkext::io::load_kernel(dir.file("s.bin")), ValidationError);
}

TEST_CASE("pattern files round-trip", "[io]") {
    TempDir dir;
    const auto pattern = qkext::sparsity::two_block_pattern(5, 3, 2);
    qkext::io::save_pattern(dir.file("p.json"), pattern);
    const auto loaded = qkext::io::load_pattern(dir.file("p.json"));
    CHECK(loaded.size() == pattern.size());
    CHECK(loaded.blocks() == pattern.blocks());

    std::ofstream(dir.file("bad.json")) << R"({"N": 4, "blocks": [{"start": 1, "end": 3}]})";
    CHECK_THROWS_AS(qkext::io::load_pattern(dir.file("bad.json")), ValidationError);
}

TEST_CASE("view files carry pattern, entries, and meta", "[io]") {
    TempDir dir;
    auto rng = qkext::make_rng(33);
    const Eigen::MatrixXd full = oracles::random_correlation(6, rng);
    const qkext::sparsity::SparseKernelView view(qkext::sparsity::band_pattern(6, 2), full);
    const qkext::kernel::KernelMeta meta{"ry_cz_ring", 2, 3, 0, 7};

    qkext::io::save_view(dir.file("v.json"), view, meta);
    const qkext::io::LoadedView loaded = qkext::io::load_view(dir.file("v.json"));
    CHECK(loaded.view.zero_filled() == view.zero_filled());
    CHECK(loaded.view.pattern().blocks() == view.pattern().blocks());
    CHECK(loaded.meta.circuit_id == "ry_cz_ring");
    CHECK(loaded.meta.layers == 3);

    // A view file doubles as a pattern file.
    const auto pattern = qkext::io::load_pattern(dir.file("v.json"));
    CHECK(pattern.blocks() == view.pattern().blocks());
}

TEST_CASE("csv matrices round-trip exactly", "[io]") {
    TempDir dir;
    auto rng = qkext::make_rng(77);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd m(4, 3);
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        m.data()[i] = gauss(rng);
    }
    m(0, 0) = 0.0;
    m(1, 0) = 1.0 / 3.0;
    qkext::io::save_matrix_csv(dir.file("m.csv"), m);
    CHECK(qkext::io::load_matrix_csv(dir.file("m.csv")) == m);

    std::ofstream(dir.file("ragged.csv")) << "1,2\n3\n";
    CHECK_THROWS_AS(qkext::io::load_matrix_csv(dir.file("ragged.csv")), ValidationError);
    std::ofstream(dir.file("words.csv")) << "1,two\n";
    CHECK_THROWS_AS(qkext::io::load_matrix_csv(dir.file("words.csv")), ValidationError);
    std::ofstream(dir.file("empty.csv")) << "";
    CHECK_THROWS_AS(qkext::io::load_matrix_csv(dir.file("empty.csv")), ValidationError);
}

TEST_CASE("format_double is canonical and lossless", "[io]") {
    CHECK(qkext::io::format_double(0.0) == "0");
    CHECK(qkext::io::format_double(1.0) == "1");
    CHECK(qkext::io::format_double(-0.5) == "-0.5");

    auto rng = qkext::make_rng(123);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        const double v = std::ldexp(gauss(rng), i % 40 - 20);
        CHECK(std::stod(qkext::io::format_double(v)) == v);
    }
}

TEST_CASE("error reports serialise", "[io]") {
    TempDir dir;
    qkext::analysis::ErrorReport report;
    report.error = 0.25;
    report.unknown_count = 12;
    report.frobenius_num = 1.5;
    report.frobenius_den = 6.0;
    qkext::io::save_error_report(dir.file("e.json"), report);

    std::ifstream in(dir.file("e.json"));
    const auto j = nlohmann::json::parse(in);
    CHECK(j.at("error").get<double>() == 0.25);
    CHECK(j.at("unknown_count").get<long>() == 12);
    CHECK(j.at("frobenius_num").get<double>() == 1.5);
    CHECK(j.at("frobenius_den").get<double>() == 6.0);
    CHECK_FALSE(j.at("unknown_set_empty").get<bool>());
}

TEST_CASE("expressibility reports serialise", "[io]") {
    TempDir dir;
    qkext::analysis::ExpressibilityReport report;
    report.kl = 0.05;
    report.neg_log_kl = -std::log(0.05);
    report.samples = 5000;
    report.bins = 5;
    report.width = 1;
    report.empirical_mass = {0.2, 0.2, 0.2, 0.2, 0.2};
    report.haar_mass = {0.2, 0.2, 0.2, 0.2, 0.2};
    qkext::io::save_expressibility_report(dir.file("x.json"), report);
    qkext::io::save_expressibility_histogram_csv(dir.file("x.csv"), report);

    std::ifstream in(dir.file("x.json"));
    const auto j = nlohmann::json::parse(in);
    CHECK(j.at("kl").get<double>() == 0.05);
    CHECK(j.at("samples").get<long>() == 5000);
    CHECK(j.at("neg_log_kl").get<double>() == Approx(-std::log(0.05)));

    std::ifstream csv(dir.file("x.csv"));
    std::string header;
    std::getline(csv, header);
    CHECK(header == "bin_lo,bin_hi,empirical_mass,haar_mass");
    int rows = 0;
    std::string line;
    while (std::getline(csv, line)) {
        ++rows;
    }
    CHECK(rows == 5);

    // Infinite neg-log becomes null.
    report.kl = 0.0;
    report.neg_log_kl = std::numeric_limits<double>::infinity();
    qkext::io::save_expressibility_report(dir.file("x0.json"), report);
    std::ifstream in0(dir.file("x0.json"));
    CHECK(nlohmann::json::parse(in0).at("neg_log_kl").is_null());
}

TEST_CASE("completion diagnostics serialise", "[io]") {
    TempDir dir;
    auto rng = qkext::make_rng(60);
    const Eigen::MatrixXd truth = oracles::random_correlation(5, rng, 0.2);
    const qkext::sparsity::SparseKernelView view(qkext::sparsity::two_block_pattern(3, 2, 1),
                                                 truth);
    const auto result = qkext::completion::complete_max_det(view);
    const auto verify = qkext::completion::verify_max_det(result, view, 5, rng);

    qkext::io::save_completion_diagnostics(dir.file("d.json"), result, &verify);
    std::ifstream in(dir.file("d.json"));
    const auto j = nlohmann::json::parse(in);
    REQUIRE(j.at("steps").size() == result.steps.size());
    CHECK(j.at("steps")[0].at("rows").get<std::vector<int>>() == result.steps[0].supernode);
    CHECK(j.at("steps")[0].at("overlap").get<int>() == result.steps[0].overlap);
    CHECK(j.at("repaired_blocks").get<int>() == 0);
    CHECK(j.at("min_eigenvalue").get<double>() == result.min_eigenvalue);
    CHECK(j.at("inverse_sparsity_max_violation").get<double>() ==
          verify.inverse_sparsity_max_violation);

    // Without a verification report the violation field is null.
    qkext::io::save_completion_diagnostics(dir.file("d0.json"), result, nullptr);
    std::ifstream in0(dir.file("d0.json"));
    CHECK(nlohmann::json::parse(in0).at("inverse_sparsity_max_violation").is_null());
}
