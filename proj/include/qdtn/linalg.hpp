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

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace qdtn {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

inline constexpr Complex kI{0.0, 1.0};

/// Base class for all errors raised by the library. `kind()` is a stable
/// machine-readable tag that the CLI forwards in its error JSON.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(what), kind_(std::move(kind)) {}
    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

inline ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
    ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

namespace pauli {

inline ComplexMatrix identity() { return ComplexMatrix::Identity(2, 2); }

inline ComplexMatrix x() {
    ComplexMatrix m(2, 2);
    m << 0.0, 1.0, 1.0, 0.0;
    return m;
}

inline ComplexMatrix y() {
    ComplexMatrix m(2, 2);
    m << 0.0, -kI, kI, 0.0;
    return m;
}

inline ComplexMatrix z() {
    ComplexMatrix m(2, 2);
    m << 1.0, 0.0, 0.0, -1.0;
    return m;
}

/// Single-qubit lowering operator |0><1| (drives |1> toward |0>).
inline ComplexMatrix lowering() {
    ComplexMatrix m = ComplexMatrix::Zero(2, 2);
    m(0, 1) = 1.0;
    return m;
}

}  // namespace pauli

/// Embeds a single-qubit operator acting on `qubit` into an n-qubit register.
/// Qubit 0 is the leftmost Kronecker factor (most significant basis bit).
inline ComplexMatrix embed(const ComplexMatrix& op, int qubit, int n_qubits) {
    ComplexMatrix out = ComplexMatrix::Identity(1, 1);
    for (int q = 0; q < n_qubits; ++q)
        out = kron(out, q == qubit ? op : pauli::identity());
    return out;
}

inline std::size_t dim_for(int n_qubits) { return std::size_t{1} << n_qubits; }

/// Bit mask of `qubit` within a basis index of an n-qubit register.
inline std::size_t qubit_mask(int qubit, int n_qubits) {
    return std::size_t{1} << (n_qubits - 1 - qubit);
}

inline double hermiticity_defect(const ComplexMatrix& m) {
    return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

/// Frobenius inner product Re tr(a^dagger b).
inline double real_inner(const ComplexMatrix& a, const ComplexMatrix& b) {
    return (a.conjugate().cwiseProduct(b)).sum().real();
}

}  // namespace qdtn
