// Copyright 2026 The qdtn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "json.hpp"
#include "qdtn/linalg.hpp"
#include "qdtn/state.hpp"

namespace qdtn {

/// Truncated Fourier series a0 + sum_k [a_k cos(2 pi k t / T) + b_k sin(2 pi k t / T)].
/// Coefficients are laid out as [a0, a1..aF, b1..bF].
struct ParameterSchedule {
    double a0 = 0.0;
    std::vector<double> cos_coeffs;
    std::vector<double> sin_coeffs;
    double period = 1.0;

    explicit ParameterSchedule(int n_harmonics = 0, double period_ = 1.0)
        : cos_coeffs(static_cast<std::size_t>(n_harmonics), 0.0),
          sin_coeffs(static_cast<std::size_t>(n_harmonics), 0.0),
          period(period_) {}

    int n_harmonics() const { return static_cast<int>(cos_coeffs.size()); }
    int n_coeffs() const { return 1 + 2 * n_harmonics(); }

    /// Value of coefficient `c`'s basis function at time t.
    double basis(int c, double t) const { return schedule_basis(c, n_harmonics(), t, period); }

    double value(double t) const {
        double v = a0;
        const double w = 2.0 * std::numbers::pi * t / period;
        for (int k = 0; k < n_harmonics(); ++k) {
            v += cos_coeffs[static_cast<std::size_t>(k)] * std::cos(w * (k + 1));
            v += sin_coeffs[static_cast<std::size_t>(k)] * std::sin(w * (k + 1));
        }
        return v;
    }

    double coeff(int c) const {
        if (c == 0) return a0;
        if (c <= n_harmonics()) return cos_coeffs[static_cast<std::size_t>(c - 1)];
        return sin_coeffs[static_cast<std::size_t>(c - 1 - n_harmonics())];
    }
    double& coeff(int c) {
        if (c == 0) return a0;
        if (c <= n_harmonics()) return cos_coeffs[static_cast<std::size_t>(c - 1)];
        return sin_coeffs[static_cast<std::size_t>(c - 1 - n_harmonics())];
    }

    static double schedule_basis(int c, int n_harmonics, double t, double period) {
        if (c == 0) return 1.0;
        const double w = 2.0 * std::numbers::pi * t / period;
        if (c <= n_harmonics) return std::cos(w * c);
        return std::sin(w * (c - n_harmonics));
    }
};

struct NetworkShape {
    int n_qubits = 2;
    int n_harmonics = 3;
    double t_final = 1.0;
    int n_steps = 200;
    bool lindblad = false;

    int n_pairs() const { return n_qubits * (n_qubits - 1) / 2; }
    /// K, eps and zeta schedules; the decay schedule is appended after them.
    int n_hamiltonian_schedules() const { return 2 * n_qubits + n_pairs(); }
    int n_schedules() const { return n_hamiltonian_schedules() + 1; }
    int coeffs_per_schedule() const { return 1 + 2 * n_harmonics; }
    int n_params() const { return n_schedules() * coeffs_per_schedule(); }
    int n_hamiltonian_params() const { return n_hamiltonian_schedules() * coeffs_per_schedule(); }
    double dt() const { return t_final / n_steps; }

    bool operator==(const NetworkShape&) const = default;
};

/// Operator multiplying each Hamiltonian schedule, in parameter-vector order.
struct HamiltonianTerms {
    std::vector<ComplexMatrix> ops;
    std::vector<std::string> names;

    explicit HamiltonianTerms(int n) {
        for (int i = 0; i < n; ++i) {
            ops.push_back(embed(pauli::x(), i, n));
            names.push_back("K" + std::to_string(i + 1));
        }
        for (int i = 0; i < n; ++i) {
            ops.push_back(embed(pauli::z(), i, n));
            names.push_back("eps" + std::to_string(i + 1));
        }
        // 1/2 sum_{i != j} zeta_ij Zi Zj == sum_{i < j} zeta_ij Zi Zj for symmetric zeta.
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) {
                ops.push_back(embed(pauli::z(), i, n) * embed(pauli::z(), j, n));
                names.push_back("zeta" + std::to_string(i + 1) + std::to_string(j + 1));
            }
    }
};

class QuantumNetwork {
public:
    explicit QuantumNetwork(NetworkShape shape) : shape_(shape) {
        if (shape.n_qubits < 1) throw Error("InvalidArgument", "network needs at least one qubit");
        if (shape.n_steps < 1) throw Error("InvalidArgument", "n_steps must be >= 1");
        if (!(shape.t_final > 0.0)) throw Error("InvalidArgument", "t_final must be positive");
        schedules_.assign(static_cast<std::size_t>(shape.n_schedules()),
                          ParameterSchedule(shape.n_harmonics, shape.t_final));
        terms_ = std::make_shared<const HamiltonianTerms>(shape.n_qubits);
    }

    static QuantumNetwork from_vector(NetworkShape shape, const RealVector& w) {
        QuantumNetwork net(shape);
        net.set_parameters(w);
        return net;
    }

    /// Random Fourier coefficients, N(0, scale^2) each; the decay schedule
    /// gets a positive offset so the Lindblad term is active when enabled.
    static QuantumNetwork random(NetworkShape shape, RandomSource& rng, double scale) {
        QuantumNetwork net(shape);
        RealVector w(shape.n_params());
        for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = scale * rng.normal();
        const int c = shape.coeffs_per_schedule();
        const int g0 = shape.n_hamiltonian_params();
        w(g0) = shape.lindblad ? std::abs(w(g0)) + scale : 0.0;
        for (int k = 1; k < c; ++k) w(g0 + k) = shape.lindblad ? 0.1 * w(g0 + k) : 0.0;
        net.set_parameters(w);
        return net;
    }

    const NetworkShape& shape() const { return shape_; }
    int n_qubits() const { return shape_.n_qubits; }
    int n_params() const { return shape_.n_params(); }
    const HamiltonianTerms& terms() const { return *terms_; }

    ParameterSchedule& schedule(int s) { return schedules_[static_cast<std::size_t>(s)]; }
    const ParameterSchedule& schedule(int s) const { return schedules_[static_cast<std::size_t>(s)]; }

    ParameterSchedule& tunneling(int i) { return schedule(i); }
    ParameterSchedule& bias(int i) { return schedule(shape_.n_qubits + i); }
    ParameterSchedule& coupling(int i, int j) { return schedule(2 * shape_.n_qubits + pair_index(i, j)); }
    ParameterSchedule& decay() { return schedule(shape_.n_hamiltonian_schedules()); }
    const ParameterSchedule& decay() const { return schedule(shape_.n_hamiltonian_schedules()); }

    /// Index of qubit pair (i, j), i < j, in lexicographic order.
    int pair_index(int i, int j) const {
        if (i > j) std::swap(i, j);
        const int n = shape_.n_qubits;
        return i * (2 * n - i - 1) / 2 + (j - i - 1);
    }

    /// Lindblad strength, clamped at zero.
    double decay_rate(double t) const { return std::max(decay().value(t), 0.0); }

    RealVector parameter_vector() const {
        RealVector w(n_params());
        const int c = shape_.coeffs_per_schedule();
        for (int s = 0; s < shape_.n_schedules(); ++s)
            for (int k = 0; k < c; ++k) w(s * c + k) = schedule(s).coeff(k);
        return w;
    }

    void set_parameters(const RealVector& w) {
        if (w.size() != n_params()) throw Error("DimensionMismatch", "parameter vector length mismatch");
        const int c = shape_.coeffs_per_schedule();
        for (int s = 0; s < shape_.n_schedules(); ++s)
            for (int k = 0; k < c; ++k) schedule(s).coeff(k) = w(s * c + k);
    }

private:
    NetworkShape shape_;
    std::vector<ParameterSchedule> schedules_;
    std::shared_ptr<const HamiltonianTerms> terms_;
};

inline double schedule_value(const ParameterSchedule& s, double t) { return s.value(t); }

/// H(t) = sum_i K_i X_i + sum_i eps_i Z_i + sum_{i<j} zeta_ij Z_i Z_j.
inline ComplexMatrix build_hamiltonian(const QuantumNetwork& net, double t) {
    const auto d = static_cast<Eigen::Index>(dim_for(net.n_qubits()));
    ComplexMatrix h = ComplexMatrix::Zero(d, d);
    const auto& terms = net.terms();
    for (std::size_t s = 0; s < terms.ops.size(); ++s) {
        const double v = net.schedule(static_cast<int>(s)).value(t);
        if (v != 0.0) h += v * terms.ops[s];
    }
    return h;
}

inline nlohmann::json to_json(const NetworkShape& s) {
    return {{"n_qubits", s.n_qubits},
            {"n_harmonics", s.n_harmonics},
            {"t_final", s.t_final},
            {"n_steps", s.n_steps},
            {"lindblad", s.lindblad}};
}

inline NetworkShape shape_from_json(const nlohmann::json& j) {
    NetworkShape s;
    s.n_qubits = j.value("n_qubits", s.n_qubits);
    s.n_harmonics = j.value("n_harmonics", s.n_harmonics);
    s.t_final = j.value("t_final", s.t_final);
    s.n_steps = j.value("n_steps", s.n_steps);
    s.lindblad = j.value("lindblad", s.lindblad);
    return s;
}

inline nlohmann::json to_json(const QuantumNetwork& net) {
    const RealVector w = net.parameter_vector();
    return {{"shape", to_json(net.shape())}, {"parameters", std::vector<double>(w.data(), w.data() + w.size())}};
}

inline QuantumNetwork network_from_json(const nlohmann::json& j) {
    const auto params = j.at("parameters").get<std::vector<double>>();
    return QuantumNetwork::from_vector(shape_from_json(j.at("shape")),
                                       Eigen::Map<const RealVector>(params.data(), static_cast<Eigen::Index>(params.size())));
}

}  // namespace qdtn
