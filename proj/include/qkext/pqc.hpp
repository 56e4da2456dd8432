#pragma once

#include <Eigen/Dense>

#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace qkext::pqc {

enum class GateKind { RX, RY, RZ, H, CX, CZ, CRX, CRY, CRZ };

bool is_rotation(GateKind kind);
bool is_controlled(GateKind kind);
GateKind gate_kind_from_string(const std::string& name);
std::string to_string(GateKind kind);

struct Gate {
    GateKind kind = GateKind::H;
    int target = 0;
    std::optional<int> control;
    std::optional<int> param_slot; // present iff the gate is a (controlled) rotation
};

/// A layered, data-parameterised gate program. The base layer is repeated
/// `layers` times and every repetition binds a fresh group of parameter
/// slots, so param_count() == slots_per_layer() * layers().
class CircuitTemplate {
public:
    CircuitTemplate(std::string id, int width, std::vector<Gate> base_layer, int layers);

    const std::string& id() const { return id_; }
    int width() const { return width_; }
    int layers() const { return layers_; }
    const std::vector<Gate>& base_layer() const { return base_layer_; }
    int slots_per_layer() const { return slots_per_layer_; }
    int param_count() const { return slots_per_layer_ * layers_; }

private:
    std::string id_;
    int width_ = 1;
    std::vector<Gate> base_layer_;
    int layers_ = 1;
    int slots_per_layer_ = 0;
};

using StateVector = Eigen::VectorXcd;

/// Simulator width cap. QKEXT_MAX_QUBITS overrides the default of 6.
int max_qubits();

/// Applies the full circuit to an explicit initial state (unit norm required).
StateVector apply_circuit(const CircuitTemplate& tmpl, std::span<const double> params,
                          StateVector state);

/// U(params)|0...0>.
StateVector simulate(const CircuitTemplate& tmpl, std::span<const double> params);

/// |<0|U'(a)U(b)|0>|^2, clamped into [0,1] against roundoff.
double fidelity(const CircuitTemplate& tmpl, std::span<const double> params_a,
                std::span<const double> params_b);

/// Haar-distributed unitary on `width` qubits (QR of a complex Gaussian
/// matrix with the R-diagonal phase correction).
Eigen::MatrixXcd haar_unitary(int width, std::mt19937_64& rng);

/// Haar-random pure state (normalised complex Gaussian vector; same law as
/// haar_unitary(width).col(0)).
StateVector haar_state(int width, std::mt19937_64& rng);

/// Density of the pairwise fidelity of Haar-random states:
/// (2^w - 1)(1 - F)^(2^w - 2) on [0,1].
double haar_fidelity_pdf(int width, double fidelity);

/// Matching CDF: 1 - (1-F)^(2^w - 1).
double haar_fidelity_cdf(int width, double fidelity);

// Built-in template catalogue. Each entry is instantiated at a chosen
// width/layer count; ids:
//   rx_rz          per-qubit RX then RZ, no entanglement
//   ry_cx_linear   per-qubit RY, then a linear CX chain
//   ry_cz_ring     per-qubit RY, then a CZ ring
//   ry_rz_crx_full per-qubit RY then RZ, then parameterised CRX on every
//                  ordered qubit pair
const std::vector<std::string>& builtin_template_ids();
bool is_builtin_template(const std::string& id);
CircuitTemplate builtin_template(const std::string& id, int width, int layers);

} // namespace qkext::pqc
