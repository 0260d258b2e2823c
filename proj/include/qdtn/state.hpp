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
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "json.hpp"
#include "qdtn/linalg.hpp"

namespace qdtn {

/// The single seedable source of randomness. Sub-streams derived with
/// `fork` are independent of each other and of the parent's later draws.
class RandomSource {
public:
    explicit RandomSource(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    double normal() { return normal_(engine_); }
    double uniform(double lo, double hi) {
        return lo + (hi - lo) * std::generate_canonical<double, 53>(engine_);
    }
    std::uint64_t seed() const { return seed_; }

    RandomSource fork(std::uint64_t stream) const {
        std::seed_seq seq{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32),
                          static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                          0x9e3779b9u};
        std::uint32_t words[2];
        seq.generate(words, words + 2);
        return RandomSource((std::uint64_t{words[0]} << 32) | words[1]);
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

class PureState {
public:
    PureState(int n_qubits, ComplexVector amplitudes) : n_qubits_(n_qubits), amps_(std::move(amplitudes)) {
        if (n_qubits < 1 || static_cast<std::size_t>(amps_.size()) != dim_for(n_qubits))
            throw Error("DimensionMismatch", "pure state amplitude count does not match 2^n");
        if (std::abs(amps_.norm() - 1.0) > 1e-12)
            throw Error("NotNormalized", "pure state norm deviates from 1 by " +
                                             std::to_string(std::abs(amps_.norm() - 1.0)));
    }

    static PureState normalized(int n_qubits, const ComplexVector& v) { return PureState(n_qubits, v / v.norm()); }

    int n_qubits() const { return n_qubits_; }
    const ComplexVector& amplitudes() const { return amps_; }
    ComplexMatrix projector() const { return amps_ * amps_.adjoint(); }

private:
    int n_qubits_;
    ComplexVector amps_;
};

struct DensityTolerance {
    double hermitian = 1e-10;
    double trace = 1e-10;
    double min_eigenvalue = -1e-9;

    static DensityTolerance strict() { return {}; }
    /// Used for integrator outputs, which accumulate round-off.
    static DensityTolerance relaxed() { return {1e-10, 1e-9, -1e-8}; }
};

class DensityMatrix;
DensityMatrix validate_density(const ComplexMatrix& mat, DensityTolerance tol = {});

/// Hermitian, trace-one, positive semidefinite 2^n x 2^n matrix.
class DensityMatrix {
public:
    int n_qubits() const { return n_qubits_; }
    std::size_t dim() const { return dim_for(n_qubits_); }
    const ComplexMatrix& matrix() const { return mat_; }

    static DensityMatrix from_pure(const PureState& psi) { return DensityMatrix(psi.n_qubits(), psi.projector()); }

    /// Wraps a matrix the caller has already validated (or that is valid by
    /// construction, such as a Gram matrix normalized by its trace).
    static DensityMatrix unchecked(int n_qubits, ComplexMatrix mat) { return DensityMatrix(n_qubits, std::move(mat)); }

    bool operator==(const DensityMatrix& o) const { return n_qubits_ == o.n_qubits_ && mat_ == o.mat_; }

private:
    DensityMatrix(int n, ComplexMatrix m) : n_qubits_(n), mat_(std::move(m)) {}
    int n_qubits_;
    ComplexMatrix mat_;
};

class DensityError : public Error {
public:
    DensityError(std::string kind, const std::string& what, double magnitude)
        : Error(std::move(kind), what), magnitude_(magnitude) {}
    double magnitude() const noexcept { return magnitude_; }

private:
    double magnitude_;
};

inline int qubits_for_dim(Eigen::Index dim) {
    int n = 0;
    while ((Eigen::Index{1} << n) < dim) ++n;
    if ((Eigen::Index{1} << n) != dim || n < 1) return -1;
    return n;
}

inline double min_eigenvalue(const ComplexMatrix& hermitian) {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(hermitian, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

inline DensityMatrix validate_density(const ComplexMatrix& mat, DensityTolerance tol) {
    if (mat.rows() != mat.cols())
        throw Error("DimensionMismatch", "density matrix must be square");
    const int n = qubits_for_dim(mat.rows());
    if (n < 0) throw Error("DimensionMismatch", "density matrix dimension must be a power of two >= 2");
    if (!mat.allFinite()) throw DensityError("NotHermitian", "density matrix has non-finite entries", INFINITY);

    const double herm = hermiticity_defect(mat);
    if (herm > tol.hermitian) {
        std::ostringstream os;
        os << "NotHermitian: max |rho - rho^dagger| = " << herm;
        throw DensityError("NotHermitian", os.str(), herm);
    }
    const double trace_err = std::abs(mat.trace() - 1.0);
    if (trace_err > tol.trace) {
        std::ostringstream os;
        os << "TraceNotOne: |tr(rho) - 1| = " << trace_err;
        throw DensityError("TraceNotOne", os.str(), trace_err);
    }
    const ComplexMatrix sym = 0.5 * (mat + mat.adjoint());
    const double lam = min_eigenvalue(sym);
    if (lam < tol.min_eigenvalue) {
        std::ostringstream os;
        os << "NotPSD: min eigenvalue = " << lam;
        throw DensityError("NotPSD", os.str(), lam);
    }
    return DensityMatrix::unchecked(n, mat);
}

/// |+><+|^{(x)n}: every entry equals 2^-n.
inline DensityMatrix flat_state(int n_qubits) {
    if (n_qubits < 1) throw Error("InvalidArgument", "flat_state needs at least one qubit");
    const auto d = static_cast<Eigen::Index>(dim_for(n_qubits));
    return DensityMatrix::unchecked(n_qubits, ComplexMatrix::Constant(d, d, 1.0 / static_cast<double>(d)));
}

/// Kronecker product of single-qubit Pauli matrices; squares to identity.
class MeasureOperator {
public:
    static MeasureOperator xx() { return {"XX", kron(pauli::x(), pauli::x())}; }
    static MeasureOperator yy() { return {"YY", kron(pauli::y(), pauli::y())}; }
    static MeasureOperator zz() { return {"ZZ", kron(pauli::z(), pauli::z())}; }
    static MeasureOperator z_string(int n_qubits) {
        ComplexMatrix m = ComplexMatrix::Identity(1, 1);
        for (int q = 0; q < n_qubits; ++q) m = kron(m, pauli::z());
        return {std::string(static_cast<std::size_t>(n_qubits), 'Z'), m};
    }

    const std::string& label() const { return label_; }
    const ComplexMatrix& matrix() const { return mat_; }
    int n_qubits() const { return qubits_for_dim(mat_.rows()); }

private:
    MeasureOperator(std::string label, ComplexMatrix m) : label_(std::move(label)), mat_(std::move(m)) {}
    std::string label_;
    ComplexMatrix mat_;
};

inline double pauli_correlation(const ComplexMatrix& m, const ComplexMatrix& rho) {
    if (m.rows() != rho.rows() || m.cols() != rho.cols())
        throw Error("DimensionMismatch", "measure and state dimensions differ");
    const Complex tr = (m.transpose().cwiseProduct(rho)).sum();
    if (std::abs(tr.imag()) > 1e-10)
        throw Error("NotHermitian", "trace(M rho) has imaginary part " + std::to_string(tr.imag()));
    return tr.real();
}

inline double pauli_correlation(const MeasureOperator& m, const DensityMatrix& rho) {
    return pauli_correlation(m.matrix(), rho.matrix());
}

inline double concurrence_pure(const PureState& psi) {
    if (psi.n_qubits() != 2) throw Error("DimensionMismatch", "concurrence_pure is defined for 2 qubits");
    const auto& a = psi.amplitudes();
    return 2.0 * std::abs(a(0) * a(3) - a(1) * a(2));
}

/// Haar-uniform pure state from a normalized complex-Gaussian vector.
inline PureState random_pure_state(RandomSource& rng, int n_qubits) {
    const auto d = static_cast<Eigen::Index>(dim_for(n_qubits));
    ComplexVector v(d);
    for (Eigen::Index i = 0; i < d; ++i) {
        const double re = rng.normal();
        const double im = rng.normal();
        v(i) = Complex(re, im);
    }
    return PureState::normalized(n_qubits, v);
}

inline PureState random_product_state(RandomSource& rng) {
    const PureState a = random_pure_state(rng, 1);
    const PureState b = random_pure_state(rng, 1);
    ComplexVector v(4);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) v(2 * i + j) = a.amplitudes()(i) * b.amplitudes()(j);
    return PureState::normalized(2, v);
}

/// Rejection-samples Haar 2-qubit states until concurrence >= c_min.
inline PureState random_entangled_state(RandomSource& rng, double c_min) {
    if (!(c_min > 0.0 && c_min <= 1.0)) throw Error("InvalidArgument", "c_min must lie in (0, 1]");
    for (;;) {
        PureState psi = random_pure_state(rng, 2);
        if (concurrence_pure(psi) >= c_min) return psi;
    }
}

// JSON form: {"n_qubits": n, "re": [[...]], "im": [[...]]}
inline nlohmann::json to_json(const ComplexMatrix& m, int n_qubits) {
    nlohmann::json re = nlohmann::json::array(), im = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        nlohmann::json rr = nlohmann::json::array(), ri = nlohmann::json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            rr.push_back(m(i, j).real());
            ri.push_back(m(i, j).imag());
        }
        re.push_back(std::move(rr));
        im.push_back(std::move(ri));
    }
    return {{"n_qubits", n_qubits}, {"re", std::move(re)}, {"im", std::move(im)}};
}

inline nlohmann::json to_json(const DensityMatrix& rho) { return to_json(rho.matrix(), rho.n_qubits()); }

inline ComplexMatrix matrix_from_json(const nlohmann::json& j) {
    const auto& re = j.at("re");
    const auto& im = j.at("im");
    const auto d = static_cast<Eigen::Index>(re.size());
    if (static_cast<Eigen::Index>(im.size()) != d) throw Error("ParseError", "re/im row count mismatch");
    ComplexMatrix m(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
        if (static_cast<Eigen::Index>(re[i].size()) != d || static_cast<Eigen::Index>(im[i].size()) != d)
            throw Error("ParseError", "density matrix rows must be square");
        for (Eigen::Index k = 0; k < d; ++k) m(i, k) = Complex(re[i][k].get<double>(), im[i][k].get<double>());
    }
    return m;
}

inline DensityMatrix density_from_json(const nlohmann::json& j, DensityTolerance tol = {}) {
    DensityMatrix rho = validate_density(matrix_from_json(j), tol);
    if (j.contains("n_qubits") && j.at("n_qubits").get<int>() != rho.n_qubits())
        throw Error("ParseError", "n_qubits field disagrees with matrix dimension");
    return rho;
}

}  // namespace qdtn
