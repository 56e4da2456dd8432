#pragma once

#include "qkext/analysis.hpp"
#include "qkext/completion.hpp"
#include "qkext/kernel.hpp"
#include "qkext/pqc.hpp"
#include "qkext/sparsity.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <string>

namespace qkext::io {

/// FNV-1a 64-bit hash of a byte buffer.
std::uint64_t fnv1a64(const void* data, std::size_t size);

/// Checksum of a matrix's canonical payload (row-major float64), as the
/// 16-digit hex string stored in sidecars and sweep records.
std::string checksum_hex(const Eigen::MatrixXd& values);

/// Circuit template JSON: {id, width, layers, gates:[{kind, target,
/// control?, param_slot?}]}. Gate kinds accepted case-insensitively.
pqc::CircuitTemplate load_template(const std::string& path);
void save_template(const std::string& path, const pqc::CircuitTemplate& tmpl);

/// Kernel matrix files: raw little-endian float64 row-major payload at
/// `path`, JSON sidecar at `path` + ".json" with {N, circuit_id, width,
/// layers, shots, seed, checksum}. load verifies dimensions and checksum.
void save_kernel(const std::string& path, const kernel::KernelMatrix& k);
kernel::KernelMatrix load_kernel(const std::string& path);

/// Pattern JSON: {N, blocks: [{start, end}]}. load_pattern also accepts a
/// view file (which is a pattern file with extra keys).
void save_pattern(const std::string& path, const sparsity::SparsityPattern& pattern);
sparsity::SparsityPattern load_pattern(const std::string& path);

/// View JSON: pattern fields plus entries [[l, m, value]] for l >= m and a
/// meta object carried over from the source kernel.
void save_view(const std::string& path, const sparsity::SparseKernelView& view,
               const kernel::KernelMeta& meta);

struct LoadedView {
    sparsity::SparseKernelView view;
    kernel::KernelMeta meta;
};
LoadedView load_view(const std::string& path);

/// Plain numeric CSV (no header), cells formatted with %.17g.
void save_matrix_csv(const std::string& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd load_matrix_csv(const std::string& path);

/// Canonical CSV cell for a double: shortest %.17g rendering, stable across
/// runs for identical values.
std::string format_double(double v);

void save_error_report(const std::string& path, const analysis::ErrorReport& report);
void save_expressibility_report(const std::string& path,
                                const analysis::ExpressibilityReport& report);
void save_expressibility_histogram_csv(const std::string& path,
                                       const analysis::ExpressibilityReport& report);

/// Completion diagnostics JSON: {steps, repaired_blocks, min_eigenvalue,
/// inverse_sparsity_max_violation}; the last is null when `verify` is null
/// or was skipped.
void save_completion_diagnostics(const std::string& path,
                                 const completion::CompletionResult& result,
                                 const completion::MaxDetReport* verify);

} // namespace qkext::io
