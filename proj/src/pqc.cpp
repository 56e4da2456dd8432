#include "qkext/pqc.hpp"

#include "qkext/errors.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <set>

namespace qkext::pqc {

namespace {

using Complex = std::complex<double>;

constexpr Complex kImag(0.0, 1.0);

Eigen::Matrix2cd rotation_matrix(GateKind kind, double theta) {
    const double c = std::cos(theta / 2.0);
    const double s = std::sin(theta / 2.0);
    Eigen::Matrix2cd m;
    switch (kind) {
    case GateKind::RX:
    case GateKind::CRX:
        m << c, -kImag * s, -kImag * s, c;
        return m;
    case GateKind::RY:
    case GateKind::CRY:
        m << c, -s, s, c;
        return m;
    case GateKind::RZ:
    case GateKind::CRZ:
        m << std::exp(-kImag * (theta / 2.0)), 0.0, 0.0, std::exp(kImag * (theta / 2.0));
        return m;
    default:
        throw ValidationError("rotation_matrix: gate kind has no angle");
    }
}

Eigen::Matrix2cd fixed_matrix(GateKind kind) {
    Eigen::Matrix2cd m;
    switch (kind) {
    case GateKind::H:
        m << 1.0, 1.0, 1.0, -1.0;
        return m / std::sqrt(2.0);
    case GateKind::CX:
        m << 0.0, 1.0, 1.0, 0.0;
        return m;
    case GateKind::CZ:
        m << 1.0, 0.0, 0.0, -1.0;
        return m;
    default:
        throw ValidationError("fixed_matrix: gate kind needs an angle");
    }
}

// Single-qubit update over amplitude pairs differing in bit `qubit`
// (qubit 0 is the least significant index bit).
void apply_single(StateVector& state, int qubit, const Eigen::Matrix2cd& m) {
    const Eigen::Index step = Eigen::Index(1) << qubit;
    for (Eigen::Index base = 0; base < state.size(); base += 2 * step) {
        for (Eigen::Index i = base; i < base + step; ++i) {
            const Complex a0 = state[i];
            const Complex a1 = state[i + step];
            state[i] = m(0, 0) * a0 + m(0, 1) * a1;
            state[i + step] = m(1, 0) * a0 + m(1, 1) * a1;
        }
    }
}

// Same update restricted to indices where the control bit is set.
void apply_controlled(StateVector& state, int control, int target, const Eigen::Matrix2cd& m) {
    const Eigen::Index cmask = Eigen::Index(1) << control;
    const Eigen::Index tmask = Eigen::Index(1) << target;
    for (Eigen::Index i = 0; i < state.size(); ++i) {
        if ((i & cmask) != 0 && (i & tmask) == 0) {
            const Complex a0 = state[i];
            const Complex a1 = state[i | tmask];
            state[i] = m(0, 0) * a0 + m(0, 1) * a1;
            state[i | tmask] = m(1, 0) * a0 + m(1, 1) * a1;
        }
    }
}

void apply_gate(StateVector& state, const Gate& gate, double theta) {
    const Eigen::Matrix2cd m =
        is_rotation(gate.kind) ? rotation_matrix(gate.kind, theta) : fixed_matrix(gate.kind);
    if (is_controlled(gate.kind)) {
        apply_controlled(state, *gate.control, gate.target, m);
    } else {
        apply_single(state, gate.target, m);
    }
}

} // namespace

bool is_rotation(GateKind kind) {
    switch (kind) {
    case GateKind::RX:
    case GateKind::RY:
    case GateKind::RZ:
    case GateKind::CRX:
    case GateKind::CRY:
    case GateKind::CRZ:
        return true;
    default:
        return false;
    }
}

bool is_controlled(GateKind kind) {
    switch (kind) {
    case GateKind::CX:
    case GateKind::CZ:
    case GateKind::CRX:
    case GateKind::CRY:
    case GateKind::CRZ:
        return true;
    default:
        return false;
    }
}

GateKind gate_kind_from_string(const std::string& name) {
    std::string up = name;
    std::transform(up.begin(), up.end(), up.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    if (up == "RX") return GateKind::RX;
    if (up == "RY") return GateKind::RY;
    if (up == "RZ") return GateKind::RZ;
    if (up == "H") return GateKind::H;
    if (up == "CX") return GateKind::CX;
    if (up == "CZ") return GateKind::CZ;
    if (up == "CRX") return GateKind::CRX;
    if (up == "CRY") return GateKind::CRY;
    if (up == "CRZ") return GateKind::CRZ;
    throw ValidationError("unknown gate kind: " + name);
}

std::string to_string(GateKind kind) {
    switch (kind) {
    case GateKind::RX: return "RX";
    case GateKind::RY: return "RY";
    case GateKind::RZ: return "RZ";
    case GateKind::H: return "H";
    case GateKind::CX: return "CX";
    case GateKind::CZ: return "CZ";
    case GateKind::CRX: return "CRX";
    case GateKind::CRY: return "CRY";
    case GateKind::CRZ: return "CRZ";
    }
    return "?";
}

int max_qubits() {
    if (const char* env = std::getenv("QKEXT_MAX_QUBITS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v >= 1 && v <= 30) {
            return static_cast<int>(v);
        }
        throw ValidationError("QKEXT_MAX_QUBITS must be an integer in [1,30]");
    }
    return 6;
}

CircuitTemplate::CircuitTemplate(std::string id, int width, std::vector<Gate> base_layer,
                                 int layers)
    : id_(std::move(id)), width_(width), base_layer_(std::move(base_layer)), layers_(layers) {
    if (width_ < 1) {
        throw ValidationError("circuit width must be >= 1");
    }
    if (width_ > max_qubits()) {
        throw ValidationError("circuit width " + std::to_string(width_) +
                              " exceeds the simulator cap of " + std::to_string(max_qubits()) +
                              " qubits");
    }
    if (layers_ < 1) {
        throw ValidationError("layer count must be >= 1");
    }
    std::set<int> slots;
    for (const Gate& g : base_layer_) {
        if (g.target < 0 || g.target >= width_) {
            throw ValidationError("gate target out of range");
        }
        if (is_controlled(g.kind)) {
            if (!g.control) {
                throw ValidationError(to_string(g.kind) + " gate requires a control qubit");
            }
            if (*g.control < 0 || *g.control >= width_ || *g.control == g.target) {
                throw ValidationError("gate control out of range or equal to target");
            }
        } else if (g.control) {
            throw ValidationError(to_string(g.kind) + " gate must not carry a control qubit");
        }
        if (is_rotation(g.kind)) {
            if (!g.param_slot) {
                throw ValidationError(to_string(g.kind) + " gate requires a parameter slot");
            }
            if (*g.param_slot < 0) {
                throw ValidationError("parameter slot must be non-negative");
            }
            slots.insert(*g.param_slot);
        } else if (g.param_slot) {
            throw ValidationError(to_string(g.kind) + " gate must not carry a parameter slot");
        }
    }
    slots_per_layer_ = static_cast<int>(slots.size());
    // Slots must be the contiguous range 0..s-1 so layer expansion is unambiguous.
    if (!slots.empty() && (*slots.begin() != 0 || *slots.rbegin() != slots_per_layer_ - 1)) {
        throw ValidationError("parameter slots must form a gap-free range starting at 0");
    }
}

StateVector apply_circuit(const CircuitTemplate& tmpl, std::span<const double> params,
                          StateVector state) {
    if (static_cast<int>(params.size()) != tmpl.param_count()) {
        throw ValidationError("parameter arity mismatch: expected " +
                              std::to_string(tmpl.param_count()) + ", got " +
                              std::to_string(params.size()));
    }
    for (double p : params) {
        if (!std::isfinite(p)) {
            throw ValidationError("circuit parameters must be finite");
        }
    }
    const Eigen::Index dim = Eigen::Index(1) << tmpl.width();
    if (state.size() != dim) {
        throw ValidationError("initial state dimension does not match circuit width");
    }
    const int slots = tmpl.slots_per_layer();
    for (int layer = 0; layer < tmpl.layers(); ++layer) {
        for (const Gate& g : tmpl.base_layer()) {
            const double theta = g.param_slot ? params[layer * slots + *g.param_slot] : 0.0;
            apply_gate(state, g, theta);
        }
    }
    return state;
}

StateVector simulate(const CircuitTemplate& tmpl, std::span<const double> params) {
    StateVector state = StateVector::Zero(Eigen::Index(1) << tmpl.width());
    state[0] = 1.0;
    return apply_circuit(tmpl, params, std::move(state));
}

double fidelity(const CircuitTemplate& tmpl, std::span<const double> params_a,
                std::span<const double> params_b) {
    const StateVector a = simulate(tmpl, params_a);
    const StateVector b = simulate(tmpl, params_b);
    const double f = std::norm(a.dot(b));
    return std::clamp(f, 0.0, 1.0);
}

Eigen::MatrixXcd haar_unitary(int width, std::mt19937_64& rng) {
    if (width < 1 || width > max_qubits()) {
        throw ValidationError("haar_unitary width out of range [1, " +
                              std::to_string(max_qubits()) + "]");
    }
    const Eigen::Index dim = Eigen::Index(1) << width;
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXcd g(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
        for (Eigen::Index j = 0; j < dim; ++j) {
            g(i, j) = Complex(gauss(rng), gauss(rng));
        }
    }
    const Eigen::HouseholderQR<Eigen::MatrixXcd> qr(g);
    Eigen::MatrixXcd q = qr.householderQ();
    // Fix the phase ambiguity of QR so the law is exactly Haar.
    const Eigen::VectorXcd diag = qr.matrixQR().diagonal();
    for (Eigen::Index j = 0; j < dim; ++j) {
        const double mag = std::abs(diag[j]);
        q.col(j) *= (mag > 0.0) ? diag[j] / mag : Complex(1.0, 0.0);
    }
    return q;
}

StateVector haar_state(int width, std::mt19937_64& rng) {
    if (width < 1 || width > max_qubits()) {
        throw ValidationError("haar_state width out of range [1, " +
                              std::to_string(max_qubits()) + "]");
    }
    const Eigen::Index dim = Eigen::Index(1) << width;
    std::normal_distribution<double> gauss(0.0, 1.0);
    StateVector psi(dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
        psi[i] = Complex(gauss(rng), gauss(rng));
    }
    psi.normalize();
    return psi;
}

double haar_fidelity_pdf(int width, double fidelity) {
    if (width < 1) {
        throw ValidationError("haar_fidelity_pdf requires width >= 1");
    }
    if (!(fidelity >= 0.0 && fidelity <= 1.0)) {
        throw ValidationError("fidelity outside [0,1]");
    }
    const double dim = std::ldexp(1.0, width);
    return (dim - 1.0) * std::pow(1.0 - fidelity, dim - 2.0);
}

double haar_fidelity_cdf(int width, double fidelity) {
    if (width < 1) {
        throw ValidationError("haar_fidelity_cdf requires width >= 1");
    }
    if (!(fidelity >= 0.0 && fidelity <= 1.0)) {
        throw ValidationError("fidelity outside [0,1]");
    }
    const double dim = std::ldexp(1.0, width);
    return 1.0 - std::pow(1.0 - fidelity, dim - 1.0);
}

const std::vector<std::string>& builtin_template_ids() {
    static const std::vector<std::string> ids = {"rx_rz", "ry_cx_linear", "ry_cz_ring",
                                                 "ry_rz_crx_full"};
    return ids;
}

bool is_builtin_template(const std::string& id) {
    const auto& ids = builtin_template_ids();
    return std::find(ids.begin(), ids.end(), id) != ids.end();
}

CircuitTemplate builtin_template(const std::string& id, int width, int layers) {
    std::vector<Gate> gates;
    if (id == "rx_rz") {
        for (int q = 0; q < width; ++q) {
            gates.push_back({GateKind::RX, q, std::nullopt, 2 * q});
            gates.push_back({GateKind::RZ, q, std::nullopt, 2 * q + 1});
        }
    } else if (id == "ry_cx_linear") {
        for (int q = 0; q < width; ++q) {
            gates.push_back({GateKind::RY, q, std::nullopt, q});
        }
        for (int q = 0; q + 1 < width; ++q) {
            gates.push_back({GateKind::CX, q + 1, q, std::nullopt});
        }
    } else if (id == "ry_cz_ring") {
        for (int q = 0; q < width; ++q) {
            gates.push_back({GateKind::RY, q, std::nullopt, q});
        }
        if (width == 2) {
            gates.push_back({GateKind::CZ, 1, 0, std::nullopt});
        } else if (width > 2) {
            for (int q = 0; q < width; ++q) {
                gates.push_back({GateKind::CZ, (q + 1) % width, q, std::nullopt});
            }
        }
    } else if (id == "ry_rz_crx_full") {
        for (int q = 0; q < width; ++q) {
            gates.push_back({GateKind::RY, q, std::nullopt, 2 * q});
            gates.push_back({GateKind::RZ, q, std::nullopt, 2 * q + 1});
        }
        int slot = 2 * width;
        for (int c = 0; c < width; ++c) {
            for (int t = 0; t < width; ++t) {
                if (t == c) continue;
                gates.push_back({GateKind::CRX, t, c, slot++});
            }
        }
    } else {
        throw ValidationError("unknown built-in template id: " + id);
    }
    return CircuitTemplate(id, width, std::move(gates), layers);
}

} // namespace qkext::pqc
