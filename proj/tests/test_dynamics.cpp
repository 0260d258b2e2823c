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

#include <algorithm>
#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "qdtn/dynamics.hpp"
#include "qdtn/objective.hpp"

using namespace qdtn;
using qdtn::testing::fd_example_gradient;
using qdtn::testing::max_relative_error;

namespace {

DensityMatrix basis_density(int n, int index) {
    ComplexVector v = ComplexVector::Zero(static_cast<Eigen::Index>(dim_for(n)));
    v(index) = 1.0;
    return DensityMatrix::from_pure(PureState(n, v));
}

NetworkShape shape(int n, bool lindblad, int steps = 200, double tf = 1.0) {
    NetworkShape s;
    s.n_qubits = n;
    s.lindblad = lindblad;
    s.n_steps = steps;
    s.t_final = tf;
    return s;
}

}  // namespace

TEST(Schedule, FourierValues) {
    ParameterSchedule s(3, 2.0);
    s.a0 = 1.0;
    EXPECT_DOUBLE_EQ(schedule_value(s, 0.37), 1.0);
    s.a0 = 0.0;
    s.cos_coeffs[0] = 1.0;
    EXPECT_DOUBLE_EQ(schedule_value(s, 0.0), 1.0);
    s.cos_coeffs[0] = 0.0;
    s.sin_coeffs[0] = 1.0;
    EXPECT_NEAR(schedule_value(s, 0.5), 1.0, 1e-15);  // t_f / 4
}

TEST(Network, ParameterVectorRoundTrip) {
    RandomSource rng(1);
    const auto net = QuantumNetwork::random(shape(3, true), rng, 0.7);
    const RealVector w = net.parameter_vector();
    EXPECT_EQ(w.size(), (3 + 3 + 3 + 1) * 7);
    EXPECT_EQ(QuantumNetwork::from_vector(net.shape(), w).parameter_vector(), w);
}

TEST(Network, ParameterOrderContract) {
    QuantumNetwork net(shape(3, false));
    net.coupling(1, 2).a0 = 5.0;       // third pair (lexicographic (0,1),(0,2),(1,2))
    net.bias(0).sin_coeffs[2] = 3.0;   // eps_1, last coefficient
    const RealVector w = net.parameter_vector();
    EXPECT_EQ(w((6 + 2) * 7 + 0), 5.0);
    EXPECT_EQ(w(3 * 7 + 6), 3.0);
}

TEST(Hamiltonian, SingleQubitTunneling) {
    QuantumNetwork net(shape(1, false));
    net.tunneling(0).a0 = 1.0;
    EXPECT_EQ(build_hamiltonian(net, 0.3), pauli::x());
}

TEST(Hamiltonian, CouplingOnly) {
    QuantumNetwork net(shape(2, false));
    net.coupling(0, 1).a0 = 1.0;
    const ComplexMatrix h = build_hamiltonian(net, 0.1);
    EXPECT_EQ(h, ComplexMatrix(RealMatrix(RealVector((RealVector(4) << 1, -1, -1, 1).finished()).asDiagonal()).cast<Complex>()));
}

TEST(Hamiltonian, HandAssembledTwoQubit) {
    QuantumNetwork net(shape(2, false));
    net.tunneling(0).a0 = net.tunneling(1).a0 = 1.0;
    net.bias(0).a0 = net.bias(1).a0 = 0.5;
    net.coupling(0, 1).a0 = 0.2;
    // Basis |00>,|01>,|10>,|11>. Diagonal: eps1 s1 + eps2 s2 + zeta s1 s2 with s = +-1.
    // X on qubit 1 couples 0<->2, 1<->3; X on qubit 2 couples 0<->1, 2<->3.
    RealMatrix expect(4, 4);
    expect << 1.2, 1.0, 1.0, 0.0,
              1.0, -0.2, 0.0, 1.0,
              1.0, 0.0, -0.2, 1.0,
              0.0, 1.0, 1.0, -0.8;
    EXPECT_LE((build_hamiltonian(net, 0.5) - expect.cast<Complex>()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Lindblad, JumpOperatorStructure) {
    const LindbladConfig cfg(3);
    for (int q = 0; q < 3; ++q) {
        const ComplexMatrix n = cfg.raising[static_cast<std::size_t>(q)] * cfg.lowering[static_cast<std::size_t>(q)];
        EXPECT_EQ(n, ComplexMatrix(n.diagonal().asDiagonal()));
        for (Eigen::Index i = 0; i < n.rows(); ++i) EXPECT_TRUE(n(i, i) == 0.0 || n(i, i) == 1.0);
    }
}

TEST(Lindblad, IndexKernelsMatchDenseOperators) {
    RandomSource rng(2);
    const int n = 3;
    const LindbladConfig cfg(n);
    ComplexMatrix x(8, 8);
    for (Eigen::Index i = 0; i < 64; ++i) x(i / 8, i % 8) = Complex(rng.normal(), rng.normal());
    ComplexMatrix dense = ComplexMatrix::Zero(8, 8), dense_adj = ComplexMatrix::Zero(8, 8);
    for (int q = 0; q < n; ++q) {
        const auto& lo = cfg.lowering[static_cast<std::size_t>(q)];
        const auto& up = cfg.raising[static_cast<std::size_t>(q)];
        const ComplexMatrix num = up * lo;
        dense += lo * x * up - 0.5 * (num * x + x * num);
        dense_adj += up * x * lo - 0.5 * (num * x + x * num);
    }
    EXPECT_LE((dissipator(x, n) - dense).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_LE((dissipator_adjoint(x, n) - dense_adj).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Forward, ZeroHamiltonianIsIdentity) {
    QuantumNetwork net(shape(2, false, 20));
    RandomSource rng(5);
    const auto rho0 = DensityMatrix::from_pure(random_pure_state(rng, 2));
    const auto traj = propagate_forward(net, rho0);
    ASSERT_EQ(traj.states.size(), 21u);
    EXPECT_TRUE(traj.states[0] == rho0);
    for (const auto& s : traj.states) EXPECT_LE((s.matrix() - rho0.matrix()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Forward, RabiOscillation) {
    const double k = 1.3;
    QuantumNetwork net(shape(1, false, 200, 1.7));
    net.tunneling(0).a0 = k;
    const auto traj = propagate_forward(net, basis_density(1, 0));
    const double z = pauli_correlation(pauli::z(), traj.final_state().matrix());
    EXPECT_NEAR(z, std::cos(2.0 * k * 1.7), 1e-6);
}

TEST(Forward, AmplitudeDampingDecay) {
    const double gamma = 3.0, tf = 2.0;
    QuantumNetwork net(shape(1, true, 200, tf));
    net.decay().a0 = gamma;
    const auto traj = propagate_forward(net, basis_density(1, 1));
    double prev = -2.0;
    for (std::size_t k = 0; k < traj.states.size(); ++k) {
        const double z = pauli_correlation(pauli::z(), traj.states[k].matrix());
        EXPECT_GE(z, prev);
        EXPECT_NEAR(z, 1.0 - 2.0 * std::exp(-gamma * traj.times[k]), 1e-7);
        prev = z;
    }
    EXPECT_GT(prev, 0.99);
}

TEST(Forward, TracePreservationAndHermiticity) {
    RandomSource rng(8);
    for (int trial = 0; trial < 6; ++trial) {
        const bool lind = trial % 2 == 1;
        auto s = shape(2, lind, 200, 1.0 + trial * 0.8);
        auto net = QuantumNetwork::random(s, rng, 1.0);
        // Keep every schedule value within |10|.
        RealVector w = net.parameter_vector();
        w = w.cwiseMax(-1.4).cwiseMin(1.4);
        net.set_parameters(w);
        const auto traj = propagate_forward(net, DensityMatrix::from_pure(random_pure_state(rng, 2)));
        EXPECT_LE(std::abs(traj.final_state().matrix().trace() - 1.0), 1e-9);
        for (const auto& st : traj.states) EXPECT_LE(hermiticity_defect(st.matrix()), 1e-10);
    }
}

TEST(Forward, UnitaryPreservesSpectrumAndPurity) {
    RandomSource rng(12);
    const auto net = QuantumNetwork::random(shape(2, false), rng, 1.5);
    const ComplexMatrix mixed = 0.7 * random_pure_state(rng, 2).projector() + 0.3 * random_pure_state(rng, 2).projector();
    const auto rho0 = validate_density(mixed);
    const auto rhof = propagate_forward(net, rho0).final_state();
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> e0(rho0.matrix()), ef(rhof.matrix());
    EXPECT_LE((e0.eigenvalues() - ef.eigenvalues()).cwiseAbs().maxCoeff(), 1e-7);

    const auto pure = DensityMatrix::from_pure(random_pure_state(rng, 2));
    const auto pf = propagate_forward(net, pure).final_state().matrix();
    EXPECT_NEAR((pf * pf).trace().real(), 1.0, 1e-8);
}

TEST(Forward, Rk4FourthOrderConvergence) {
    RandomSource rng(17);
    auto s = shape(2, true, 20, 1.0);
    auto net = QuantumNetwork::random(s, rng, 1.0);
    const auto rho0 = DensityMatrix::from_pure(random_pure_state(rng, 2));
    // Reference: 10x finer than the finest tested grid.
    auto fine = net;
    auto fs = s;
    fs.n_steps = 40;
    fine = QuantumNetwork::from_vector(fs, net.parameter_vector());
    const ComplexMatrix ref = qdtn::testing::reference_final_state(fine, rho0.matrix(), 10);
    auto err = [&](int steps) {
        auto ss = s;
        ss.n_steps = steps;
        const auto n2 = QuantumNetwork::from_vector(ss, net.parameter_vector());
        return (propagate_forward(n2, rho0).final_state().matrix() - ref).norm();
    };
    const double e20 = err(20), e40 = err(40);
    EXPECT_GE(e20 / e40, 8.0) << e20 << " " << e40;
}

TEST(Forward, UnstableStepReported) {
    auto s = shape(1, true, 10, 1.0);
    QuantumNetwork net(s);
    net.decay().a0 = 1e4;  // Gamma * dt far outside the RK4 stability region
    EXPECT_THROW(propagate_forward(net, basis_density(1, 1)), StepUnstable);
}

TEST(FinalCostate, TargetDifference) {
    const auto r0 = basis_density(1, 0), r1 = basis_density(1, 1);
    EXPECT_EQ(final_costate_target(r0, r0), ComplexMatrix::Zero(2, 2));
    ComplexMatrix expect = ComplexMatrix::Zero(2, 2);
    expect(0, 0) = 1.0;
    expect(1, 1) = -1.0;
    EXPECT_EQ(final_costate_target(r0, r1), expect);
    RandomSource rng(3);
    const auto a = DensityMatrix::from_pure(random_pure_state(rng, 2));
    const auto b = DensityMatrix::from_pure(random_pure_state(rng, 2));
    EXPECT_LE(hermiticity_defect(final_costate_target(a, b)), 1e-15);
}

TEST(FinalCostate, Measure) {
    const auto rho = basis_density(2, 0);
    EXPECT_EQ(final_costate_measure(MeasureOperator::zz(), rho, 1.0), ComplexMatrix::Zero(4, 4));
    EXPECT_EQ(final_costate_measure(MeasureOperator::zz(), rho, 0.0), 2.0 * MeasureOperator::zz().matrix());
}

TEST(FinalCostate, MeasureMatchesFiniteDifferenceOfLoss) {
    // dL/d rho along Hermitian directions E: Re tr(G^dagger E) = d/ds L(rho + s E).
    RandomSource rng(31);
    const auto rho = DensityMatrix::from_pure(random_pure_state(rng, 2));
    const auto obj = Objective::measure(MeasureOperator::xx(), 0.3);
    const ComplexMatrix g = final_costate_measure(MeasureOperator::xx(), rho, 0.3);
    for (int trial = 0; trial < 10; ++trial) {
        ComplexMatrix e(4, 4);
        for (Eigen::Index i = 0; i < 16; ++i) e(i / 4, i % 4) = Complex(rng.normal(), rng.normal());
        e = 0.5 * (e + e.adjoint()).eval();
        const double h = 1e-6;
        auto loss = [&](double s) {
            const double c = pauli_correlation(MeasureOperator::xx().matrix(), rho.matrix() + s * e);
            return 0.5 * (c * c - 0.3) * (c * c - 0.3);
        };
        const double fd = (loss(h) - loss(-h)) / (2 * h);
        EXPECT_NEAR(real_inner(g, e), fd, 1e-8);
    }
    EXPECT_NEAR(obj.loss(rho), [&] {
        const double c = pauli_correlation(MeasureOperator::xx(), rho);
        return 0.5 * (c * c - 0.3) * (c * c - 0.3);
    }(), 1e-15);
}

TEST(Costate, ZeroHamiltonianKeepsCostate) {
    QuantumNetwork net(shape(2, false, 10));
    RandomSource rng(4);
    const auto fwd = propagate_forward(net, flat_state(2));
    const ComplexMatrix gf = random_pure_state(rng, 2).projector();
    const auto bwd = propagate_costate(net, fwd, gf);
    EXPECT_EQ(bwd.costates.back(), gf);
    for (const auto& c : bwd.costates) EXPECT_LE((c - gf).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Costate, UnitaryPairingInvariant) {
    RandomSource rng(41);
    const auto net = QuantumNetwork::random(shape(2, false), rng, 1.0);
    const auto fwd = propagate_forward(net, DensityMatrix::from_pure(random_pure_state(rng, 2)));
    const ComplexMatrix gf = MeasureOperator::yy().matrix() * 0.7;
    const auto bwd = propagate_costate(net, fwd, gf);
    const double ref = real_inner(bwd.costates.back(), fwd.states.back().matrix());
    for (std::size_t k = 0; k < fwd.states.size(); ++k) {
        EXPECT_NEAR(real_inner(bwd.costates[k], fwd.states[k].matrix()), ref, 1e-9);
        EXPECT_LE(hermiticity_defect(bwd.costates[k]), 1e-10);
    }
}

TEST(Gradient, ZeroCostateGivesZeroGradient) {
    RandomSource rng(6);
    const auto net = QuantumNetwork::random(shape(2, true, 50), rng, 1.0);
    const auto fwd = propagate_forward(net, flat_state(2));
    const auto bwd = propagate_costate(net, fwd, ComplexMatrix::Zero(4, 4));
    EXPECT_EQ(assemble_gradient(net, fwd, bwd), GradientVector::Zero(net.n_params()));
}

TEST(Gradient, GridMismatchRejected) {
    RandomSource rng(6);
    const auto net = QuantumNetwork::random(shape(2, false, 50), rng, 1.0);
    const auto fwd = propagate_forward(net, flat_state(2));
    auto bwd = propagate_costate(net, fwd, ComplexMatrix::Zero(4, 4));
    bwd.costates.pop_back();
    EXPECT_THROW(assemble_gradient(net, fwd, bwd), Error);
}

TEST(Gradient, SplitAndFusedSweepsAgree) {
    RandomSource rng(7);
    for (bool lind : {false, true}) {
        const auto net = QuantumNetwork::random(shape(2, lind, 40), rng, 1.0);
        const auto fwd = propagate_forward(net, DensityMatrix::from_pure(random_pure_state(rng, 2)));
        const ComplexMatrix gf = MeasureOperator::zz().matrix();
        const auto split = assemble_gradient(net, fwd, propagate_costate(net, fwd, gf));
        const auto fused = backpropagate(net, fwd, gf);
        EXPECT_LE((split - fused.gradient).cwiseAbs().maxCoeff(), 1e-14);
        EXPECT_LE((propagate_costate(net, fwd, gf).costates.front() - fused.initial_costate).cwiseAbs().maxCoeff(), 1e-14);
    }
}

class GradientVsFiniteDifference : public ::testing::TestWithParam<int> {};

TEST_P(GradientVsFiniteDifference, UnitaryFrobeniusAndMeasure) {
    RandomSource rng(100 + static_cast<std::uint64_t>(GetParam()));
    const auto net = QuantumNetwork::random(shape(2, false), rng, 0.8);
    const auto rho0 = DensityMatrix::from_pure(random_pure_state(rng, 2));
    const Example frob{rho0, Objective::target_state(DensityMatrix::from_pure(random_pure_state(rng, 2)))};
    const Example meas{rho0, Objective::measure(MeasureOperator::xx(), 0.2)};
    for (const auto& ex : {frob, meas}) {
        const auto adj = example_gradient(net, ex);
        const auto fd = fd_example_gradient(net, ex);
        EXPECT_LE(max_relative_error(adj, fd), 1e-6);
    }
}

TEST_P(GradientVsFiniteDifference, LindbladIncludingDecayCoefficients) {
    RandomSource rng(200 + static_cast<std::uint64_t>(GetParam()));
    const auto net = QuantumNetwork::random(shape(2, true), rng, 0.8);
    const auto rho0 = DensityMatrix::from_pure(random_pure_state(rng, 2));
    const Example ex{rho0, Objective::target_state(DensityMatrix::from_pure(random_pure_state(rng, 2)))};
    const auto adj = example_gradient(net, ex);
    const auto fd = fd_example_gradient(net, ex);
    EXPECT_LE(max_relative_error(adj, fd), 1e-4);
    const int g0 = net.shape().n_hamiltonian_params();
    EXPECT_LE(max_relative_error(adj.tail(net.n_params() - g0), fd.tail(net.n_params() - g0)), 1e-4);
    EXPECT_GT(adj.tail(net.n_params() - g0).cwiseAbs().maxCoeff(), 0.0);
}

INSTANTIATE_TEST_SUITE_P(Seeds, GradientVsFiniteDifference, ::testing::Range(0, 4));
