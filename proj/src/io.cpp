#include "qkext/io.hpp"

#include "qkext/errors.hpp"

#include "json.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

namespace qkext::io {

namespace {

using nlohmann::json;

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open " + path);
    }
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ValidationError("malformed JSON in " + path + ": " + e.what());
    }
}

void write_json_file(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) {
        throw ValidationError("cannot write " + path);
    }
    out << j.dump(2) << '\n';
}

// Field access that reports which file/key was bad instead of a raw
// type_error.
template <typename T>
T get_field(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) {
        throw ValidationError(where + ": missing field '" + key + "'");
    }
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ValidationError(where + ": field '" + key + "' has the wrong type");
    }
}

json meta_to_json(const kernel::KernelMeta& meta, Eigen::Index n) {
    return json{{"N", n},
                {"circuit_id", meta.circuit_id},
                {"width", meta.width},
                {"layers", meta.layers},
                {"shots", meta.shots},
                {"seed", meta.seed}};
}

kernel::KernelMeta meta_from_json(const json& j, const std::string& where) {
    kernel::KernelMeta meta;
    meta.circuit_id = get_field<std::string>(j, "circuit_id", where);
    meta.width = get_field<int>(j, "width", where);
    meta.layers = get_field<int>(j, "layers", where);
    meta.shots = get_field<long>(j, "shots", where);
    meta.seed = get_field<std::uint64_t>(j, "seed", where);
    return meta;
}

std::vector<unsigned char> matrix_payload(const Eigen::MatrixXd& values) {
    // Canonical payload: row-major float64, little-endian (native here).
    std::vector<unsigned char> bytes(size_t(values.size()) * sizeof(double));
    size_t offset = 0;
    for (Eigen::Index r = 0; r < values.rows(); ++r) {
        for (Eigen::Index c = 0; c < values.cols(); ++c) {
            const double v = values(r, c);
            std::memcpy(bytes.data() + offset, &v, sizeof(double));
            offset += sizeof(double);
        }
    }
    return bytes;
}

json pattern_to_json(const sparsity::SparsityPattern& pattern) {
    json blocks = json::array();
    for (const sparsity::Block& b : pattern.blocks()) {
        blocks.push_back({{"start", b.start}, {"end", b.end}});
    }
    return json{{"N", pattern.size()}, {"blocks", std::move(blocks)}};
}

sparsity::SparsityPattern pattern_from_json(const json& j, const std::string& where) {
    const int n = get_field<int>(j, "N", where);
    if (!j.contains("blocks") || !j.at("blocks").is_array()) {
        throw ValidationError(where + ": missing 'blocks' array");
    }
    std::vector<sparsity::Block> blocks;
    for (const json& jb : j.at("blocks")) {
        blocks.push_back(
            {get_field<int>(jb, "start", where), get_field<int>(jb, "end", where)});
    }
    return sparsity::SparsityPattern(n, std::move(blocks));
}

} // namespace

std::uint64_t fnv1a64(const void* data, std::size_t size) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    std::uint64_t hash = 0xCBF29CE484222325ULL;
    for (std::size_t i = 0; i < size; ++i) {
        hash ^= bytes[i];
        hash *= 0x100000001B3ULL;
    }
    return hash;
}

std::string checksum_hex(const Eigen::MatrixXd& values) {
    const std::vector<unsigned char> payload = matrix_payload(values);
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(payload.data(), payload.size())));
    return buf;
}

pqc::CircuitTemplate load_template(const std::string& path) {
    const json j = read_json_file(path);
    const std::string id = get_field<std::string>(j, "id", path);
    const int width = get_field<int>(j, "width", path);
    const int layers = get_field<int>(j, "layers", path);
    if (!j.contains("gates") || !j.at("gates").is_array()) {
        throw ValidationError(path + ": missing 'gates' array");
    }
    std::vector<pqc::Gate> gates;
    for (const json& jg : j.at("gates")) {
        pqc::Gate g;
        g.kind = pqc::gate_kind_from_string(get_field<std::string>(jg, "kind", path));
        g.target = get_field<int>(jg, "target", path);
        if (jg.contains("control")) {
            g.control = get_field<int>(jg, "control", path);
        }
        if (jg.contains("param_slot")) {
            g.param_slot = get_field<int>(jg, "param_slot", path);
        }
        gates.push_back(g);
    }
    return pqc::CircuitTemplate(id, width, std::move(gates), layers);
}

void save_template(const std::string& path, const pqc::CircuitTemplate& tmpl) {
    json gates = json::array();
    for (const pqc::Gate& g : tmpl.base_layer()) {
        json jg{{"kind", pqc::to_string(g.kind)}, {"target", g.target}};
        if (g.control) {
            jg["control"] = *g.control;
        }
        if (g.param_slot) {
            jg["param_slot"] = *g.param_slot;
        }
        gates.push_back(std::move(jg));
    }
    write_json_file(path, json{{"id", tmpl.id()},
                               {"width", tmpl.width()},
                               {"layers", tmpl.layers()},
                               {"gates", std::move(gates)}});
}

void save_kernel(const std::string& path, const kernel::KernelMatrix& k) {
    const std::vector<unsigned char> payload = matrix_payload(k.values);
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ValidationError("cannot write " + path);
    }
    out.write(reinterpret_cast<const char*>(payload.data()),
              std::streamsize(payload.size()));
    if (!out) {
        throw ValidationError("short write to " + path);
    }
    json sidecar = meta_to_json(k.meta, k.size());
    sidecar["checksum"] = checksum_hex(k.values);
    write_json_file(path + ".json", sidecar);
}

kernel::KernelMatrix load_kernel(const std::string& path) {
    const std::string sidecar_path = path + ".json";
    const json sidecar = read_json_file(sidecar_path);
    const Eigen::Index n = get_field<Eigen::Index>(sidecar, "N", sidecar_path);
    if (n < 1) {
        throw ValidationError(sidecar_path + ": N must be >= 1");
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ValidationError("cannot open " + path);
    }
    std::vector<unsigned char> payload(size_t(n) * size_t(n) * sizeof(double));
    in.read(reinterpret_cast<char*>(payload.data()), std::streamsize(payload.size()));
    if (in.gcount() != std::streamsize(payload.size()) || in.peek() != EOF) {
        throw ValidationError(path + ": payload size does not match N = " + std::to_string(n));
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(payload.data(), payload.size())));
    if (get_field<std::string>(sidecar, "checksum", sidecar_path) != buf) {
        throw ValidationError(path + ": checksum mismatch (corrupt or edited payload)");
    }
    kernel::KernelMatrix k;
    k.meta = meta_from_json(sidecar, sidecar_path);
    k.values.resize(n, n);
    size_t offset = 0;
    for (Eigen::Index r = 0; r < n; ++r) {
        for (Eigen::Index c = 0; c < n; ++c) {
            double v;
            std::memcpy(&v, payload.data() + offset, sizeof(double));
            k.values(r, c) = v;
            offset += sizeof(double);
        }
    }
    return k;
}

void save_pattern(const std::string& path, const sparsity::SparsityPattern& pattern) {
    write_json_file(path, pattern_to_json(pattern));
}

sparsity::SparsityPattern load_pattern(const std::string& path) {
    return pattern_from_json(read_json_file(path), path);
}

void save_view(const std::string& path, const sparsity::SparseKernelView& view,
               const kernel::KernelMeta& meta) {
    const sparsity::SparsityPattern& pattern = view.pattern();
    json j = pattern_to_json(pattern);
    j["meta"] = meta_to_json(meta, pattern.size());
    json entries = json::array();
    for (int l = 0; l < pattern.size(); ++l) {
        for (int m = 0; m <= l; ++m) {
            if (pattern.contains(l, m)) {
                entries.push_back({l, m, view.at(l, m)});
            }
        }
    }
    j["entries"] = std::move(entries);
    write_json_file(path, j);
}

LoadedView load_view(const std::string& path) {
    const json j = read_json_file(path);
    sparsity::SparsityPattern pattern = pattern_from_json(j, path);
    if (!j.contains("entries") || !j.at("entries").is_array()) {
        throw ValidationError(path + ": missing 'entries' array");
    }
    std::vector<std::tuple<int, int, double>> entries;
    for (const json& je : j.at("entries")) {
        if (!je.is_array() || je.size() != 3) {
            throw ValidationError(path + ": entries must be [l, m, value] triples");
        }
        try {
            entries.emplace_back(je.at(0).get<int>(), je.at(1).get<int>(),
                                 je.at(2).get<double>());
        } catch (const json::exception&) {
            throw ValidationError(path + ": entries must be [l, m, value] triples");
        }
    }
    kernel::KernelMeta meta;
    if (j.contains("meta")) {
        meta = meta_from_json(j.at("meta"), path);
    }
    return LoadedView{sparsity::SparseKernelView::from_entries(std::move(pattern), entries),
                      meta};
}

void save_matrix_csv(const std::string& path, const Eigen::MatrixXd& m) {
    std::ofstream out(path);
    if (!out) {
        throw ValidationError("cannot write " + path);
    }
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            if (c > 0) {
                out << ',';
            }
            out << format_double(m(r, c));
        }
        out << '\n';
    }
}

Eigen::MatrixXd load_matrix_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open " + path);
    }
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw ValidationError(path + ": non-numeric CSV cell '" + cell + "'");
            }
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw ValidationError(path + ": ragged CSV rows");
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty() || rows.front().empty()) {
        throw ValidationError(path + ": empty CSV");
    }
    Eigen::MatrixXd m(Eigen::Index(rows.size()), Eigen::Index(rows.front().size()));
    for (size_t r = 0; r < rows.size(); ++r) {
        for (size_t c = 0; c < rows[r].size(); ++c) {
            m(Eigen::Index(r), Eigen::Index(c)) = rows[r][c];
        }
    }
    return m;
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void save_error_report(const std::string& path, const analysis::ErrorReport& report) {
    write_json_file(path, json{{"error", report.error},
                               {"unknown_count", report.unknown_count},
                               {"frobenius_num", report.frobenius_num},
                               {"frobenius_den", report.frobenius_den},
                               {"unknown_set_empty", report.unknown_set_empty}});
}

void save_expressibility_report(const std::string& path,
                                const analysis::ExpressibilityReport& report) {
    json j{{"kl", report.kl},
           {"samples", report.samples},
           {"bins", report.bins},
           {"width", report.width},
           {"degenerate", report.degenerate}};
    if (std::isfinite(report.neg_log_kl)) {
        j["neg_log_kl"] = report.neg_log_kl;
    } else {
        j["neg_log_kl"] = nullptr;
    }
    write_json_file(path, j);
}

void save_expressibility_histogram_csv(const std::string& path,
                                       const analysis::ExpressibilityReport& report) {
    std::ofstream out(path);
    if (!out) {
        throw ValidationError("cannot write " + path);
    }
    out << "bin_lo,bin_hi,empirical_mass,haar_mass\n";
    for (int b = 0; b < report.bins; ++b) {
        out << format_double(double(b) / report.bins) << ','
            << format_double(double(b + 1) / report.bins) << ','
            << format_double(report.empirical_mass[size_t(b)]) << ','
            << format_double(report.haar_mass[size_t(b)]) << '\n';
    }
}

void save_completion_diagnostics(const std::string& path,
                                 const completion::CompletionResult& result,
                                 const completion::MaxDetReport* verify) {
    json steps = json::array();
    for (const completion::CompletionStep& s : result.steps) {
        steps.push_back({{"rows", s.supernode},
                         {"overlap", s.overlap},
                         {"overlap_rank", s.overlap_rank}});
    }
    json j{{"steps", std::move(steps)},
           {"repaired_blocks", result.repaired_blocks},
           {"min_eigenvalue", result.min_eigenvalue}};
    if (verify && !verify->skipped) {
        j["inverse_sparsity_max_violation"] = verify->inverse_sparsity_max_violation;
    } else {
        j["inverse_sparsity_max_violation"] = nullptr;
    }
    write_json_file(path, j);
}

} // namespace qkext::io
