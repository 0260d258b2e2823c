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

// Test-only reference computations. Nothing here calls the adjoint code.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <initializer_list>
#include <vector>

#include "qdtn/dynamics.hpp"
#include "qdtn/objective.hpp"

namespace qdtn::testing {

/// Central finite differences of f over every coordinate of w.
inline RealVector central_differences(const std::function<double(const RealVector&)>& f, const RealVector& w,
                                      double h = 1e-6) {
    RealVector g(w.size());
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        RealVector wp = w, wm = w;
        wp(i) += h;
        wm(i) -= h;
        g(i) = (f(wp) - f(wm)) / (2.0 * h);
    }
    return g;
}

/// Independent extended-precision replay of the discretized forward pass.
/// Built from the operator definitions directly; shares no code with the
/// library integrators, so its loss can feed a finite-difference oracle at
/// small steps without double-precision roundoff swamping the result.
namespace precise {

using Real = long double;
using Cx = std::complex<Real>;
using Mat = Eigen::Matrix<Cx, Eigen::Dynamic, Eigen::Dynamic>;

inline Mat from_double(const ComplexMatrix& m) {
    Mat out(m.rows(), m.cols());
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) out(i, j) = Cx(m(i, j).real(), m(i, j).imag());
    return out;
}

inline Mat kron(const Mat& a, const Mat& b) {
    Mat out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

/// Tensor product with `op` on the qubits listed and identity elsewhere.
inline Mat on_qubits(const Mat& op, std::initializer_list<int> qubits, int n) {
    Mat out = Mat::Identity(1, 1);
    for (int q = 0; q < n; ++q) {
        const bool hit = std::find(qubits.begin(), qubits.end(), q) != qubits.end();
        out = kron(out, hit ? op : Mat(Mat::Identity(2, 2)));
    }
    return out;
}

inline Real fourier(const RealVector& w, int offset, int harmonics, Real t, Real period) {
    const Real pi = 3.141592653589793238462643383279502884L;
    Real v = w(offset);
    for (int k = 1; k <= harmonics; ++k) {
        v += w(offset + k) * std::cos(2 * pi * k * t / period);
        v += w(offset + harmonics + k) * std::sin(2 * pi * k * t / period);
    }
    return v;
}

struct Model {
    NetworkShape shape;
    RealVector w;
    std::vector<Mat> terms;  // X_i, Z_i, Z_i Z_j (i<j)
    std::vector<Mat> lower;

    Model(const NetworkShape& s, const RealVector& params) : shape(s), w(params) {
        const int n = s.n_qubits;
        Mat x(2, 2), z(2, 2), sm(2, 2);
        x << 0, 1, 1, 0;
        z << 1, 0, 0, -1;
        sm << 0, 1, 0, 0;
        for (int i = 0; i < n; ++i) terms.push_back(on_qubits(x, {i}, n));
        for (int i = 0; i < n; ++i) terms.push_back(on_qubits(z, {i}, n));
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) terms.push_back(on_qubits(z, {i, j}, n));
        for (int i = 0; i < n; ++i) lower.push_back(on_qubits(sm, {i}, n));
    }

    Real value(int schedule, Real t) const {
        const int c = 1 + 2 * shape.n_harmonics;
        return fourier(w, schedule * c, shape.n_harmonics, t, shape.t_final);
    }

    Mat hamiltonian(Real t) const {
        const auto d = terms.front().rows();
        Mat h = Mat::Zero(d, d);
        for (std::size_t s = 0; s < terms.size(); ++s) h += value(static_cast<int>(s), t) * terms[s];
        return h;
    }

    Mat rhs(Real t, const Mat& r) const {
        const Mat h = hamiltonian(t);
        Mat out = Cx(0, -1) * (h * r - r * h);
        if (shape.lindblad) {
            const Real g = std::max<Real>(value(static_cast<int>(terms.size()), t), 0);
            for (const auto& l : lower) {
                const Mat num = l.adjoint() * l;
                out += g * (l * r * l.adjoint() - Real(0.5) * (num * r + r * num));
            }
        }
        return out;
    }

    static Mat expm(const Mat& a) {
        Real norm = 0;
        for (Eigen::Index i = 0; i < a.size(); ++i) norm += std::abs(a(i));
        int squarings = 0;
        while (norm > 0.25L) {
            norm /= 2;
            ++squarings;
        }
        const Mat b = a / std::pow(Real(2), squarings);
        Mat term = Mat::Identity(a.rows(), a.cols()), sum = term;
        for (int k = 1; k < 30; ++k) {
            term = (term * b / Real(k)).eval();
            sum += term;
        }
        for (int s = 0; s < squarings; ++s) sum = (sum * sum).eval();
        return sum;
    }

    Mat evolve(const Mat& rho0) const {
        const Real dt = Real(shape.t_final) / shape.n_steps;
        Mat rho = rho0;
        for (int k = 0; k < shape.n_steps; ++k) {
            const Real t = Real(shape.t_final) * k / shape.n_steps;
            if (shape.lindblad) {
                const Mat k1 = rhs(t, rho);
                const Mat k2 = rhs(t + dt / 2, rho + dt / 2 * k1);
                const Mat k3 = rhs(t + dt / 2, rho + dt / 2 * k2);
                const Mat k4 = rhs(t + dt, rho + dt * k3);
                rho += dt / 6 * (k1 + Real(2) * k2 + Real(2) * k3 + k4);
            } else {
                const Mat u = expm(Cx(0, -1) * dt * hamiltonian(t + dt / 2));
                rho = (u * rho * u.adjoint()).eval();
            }
        }
        return rho;
    }
};

inline Real loss(const NetworkShape& shape, const RealVector& w, const Example& ex) {
    const Mat rho = Model(shape, w).evolve(from_double(ex.input.matrix()));
    const Mat target = from_double(ex.objective.matrix());
    if (ex.objective.kind() == Objective::Kind::TargetState) return ex.weight * (target - rho).squaredNorm();
    const Real c = (target * rho).trace().real();
    const Real e = c * c - ex.objective.target();
    return ex.weight * e * e / 2;
}

}  // namespace precise

/// Central-difference gradient of one example's loss, evaluated on the
/// extended-precision replay of the discretized dynamics.
inline RealVector fd_example_gradient(const QuantumNetwork& net, const Example& ex, double h = 1e-6) {
    const RealVector w0 = net.parameter_vector();
    RealVector g(w0.size());
    for (Eigen::Index i = 0; i < w0.size(); ++i) {
        RealVector wp = w0, wm = w0;
        wp(i) += h;
        wm(i) -= h;
        const precise::Real diff = precise::loss(net.shape(), wp, ex) - precise::loss(net.shape(), wm, ex);
        g(i) = static_cast<double>(diff / (precise::Real(wp(i)) - precise::Real(wm(i))));
    }
    return g;
}

/// Largest per-component relative error. Components smaller than
/// `floor_fraction` of the largest reference component are compared against
/// that floor instead of their own magnitude.
inline double max_relative_error(const RealVector& got, const RealVector& ref, double floor_fraction = 1e-3) {
    const double scale = std::max(ref.cwiseAbs().maxCoeff(), 1e-300);
    double worst = 0.0;
    for (Eigen::Index i = 0; i < ref.size(); ++i) {
        const double denom = std::max(std::abs(ref(i)), floor_fraction * scale);
        worst = std::max(worst, std::abs(got(i) - ref(i)) / denom);
    }
    return worst;
}

/// Fine-grid reference solution: `substeps` plain RK4 steps of the full
/// right-hand side per network step, independent of the library stepper.
inline ComplexMatrix reference_final_state(const QuantumNetwork& net, const ComplexMatrix& rho0, int substeps) {
    const auto& s = net.shape();
    const int n = s.n_qubits;
    const int steps = s.n_steps * substeps;
    const double dt = s.t_final / steps;
    ComplexMatrix rho = rho0;
    auto rhs = [&](double t, const ComplexMatrix& r) {
        ComplexMatrix h = build_hamiltonian(net, t);
        ComplexMatrix out = -kI * (h * r - r * h);
        if (s.lindblad) out += net.decay_rate(t) * dissipator(r, n);
        return out;
    };
    for (int k = 0; k < steps; ++k) {
        const double t = k * dt;
        const ComplexMatrix k1 = rhs(t, rho);
        const ComplexMatrix k2 = rhs(t + dt / 2, rho + dt / 2 * k1);
        const ComplexMatrix k3 = rhs(t + dt / 2, rho + dt / 2 * k2);
        const ComplexMatrix k4 = rhs(t + dt, rho + dt * k3);
        rho += dt / 6 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return rho;
}

}  // namespace qdtn::testing
