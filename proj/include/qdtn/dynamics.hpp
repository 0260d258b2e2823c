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

// Forward master-equation integration and its exact discrete adjoint.
//
// Costates use the convention dL = Re tr(costate^dagger d rho), i.e. a
// costate is the gradient of the scalar loss with respect to the state at
// that grid point. The backward sweep differentiates the forward stepping
// scheme itself, so gradients are exact for the discretized dynamics.
//
//  * Lindblad disabled: each step is rho <- U rho U^dagger with
//    U = exp(-i H(t_mid) dt) from a Hermitian eigendecomposition; the step
//    derivative uses the Daleckii-Krein divided-difference formula.
//  * Lindblad enabled: classical RK4 on drho/dt = -i[H, rho] + Gamma D(rho),
//    differentiated stage by stage.

#include <bit>
#include <cmath>
#include <optional>
#include <vector>

#include <Eigen/Eigenvalues>

#include "qdtn/linalg.hpp"
#include "qdtn/network.hpp"
#include "qdtn/state.hpp"

namespace qdtn {

class StepUnstable : public Error {
public:
    StepUnstable(int step, const std::string& why)
        : Error("StepUnstable", "integration step " + std::to_string(step) + ": " + why), step_(step) {}
    int step() const noexcept { return step_; }

private:
    int step_;
};

/// Dense per-qubit jump operators; propagation uses the equivalent index
/// kernels below, this form exists for inspection and tests.
struct LindbladConfig {
    std::vector<ComplexMatrix> lowering;
    std::vector<ComplexMatrix> raising;

    explicit LindbladConfig(int n_qubits) {
        for (int q = 0; q < n_qubits; ++q) {
            lowering.push_back(embed(pauli::lowering(), q, n_qubits));
            raising.push_back(lowering.back().adjoint());
        }
    }
};

/// sum_q [ s-_q rho s+_q - 1/2 {s+_q s-_q, rho} ] with s- = |0><1|.
inline ComplexMatrix dissipator(const ComplexMatrix& rho, int n_qubits) {
    const auto d = rho.rows();
    ComplexMatrix out(d, d);
    for (Eigen::Index b = 0; b < d; ++b)
        for (Eigen::Index a = 0; a < d; ++a) {
            const auto ua = static_cast<std::size_t>(a), ub = static_cast<std::size_t>(b);
            Complex acc = -0.5 * static_cast<double>(std::popcount(ua) + std::popcount(ub)) * rho(a, b);
            for (int q = 0; q < n_qubits; ++q) {
                const std::size_t m = qubit_mask(q, n_qubits);
                if (!(ua & m) && !(ub & m))
                    acc += rho(static_cast<Eigen::Index>(ua | m), static_cast<Eigen::Index>(ub | m));
            }
            out(a, b) = acc;
        }
    return out;
}

/// Adjoint of `dissipator` under Re tr(A^dagger B):
/// sum_q [ s+_q X s-_q - 1/2 {s+_q s-_q, X} ].
inline ComplexMatrix dissipator_adjoint(const ComplexMatrix& x, int n_qubits) {
    const auto d = x.rows();
    ComplexMatrix out(d, d);
    for (Eigen::Index b = 0; b < d; ++b)
        for (Eigen::Index a = 0; a < d; ++a) {
            const auto ua = static_cast<std::size_t>(a), ub = static_cast<std::size_t>(b);
            Complex acc = -0.5 * static_cast<double>(std::popcount(ua) + std::popcount(ub)) * x(a, b);
            for (int q = 0; q < n_qubits; ++q) {
                const std::size_t m = qubit_mask(q, n_qubits);
                if ((ua & m) && (ub & m))
                    acc += x(static_cast<Eigen::Index>(ua ^ m), static_cast<Eigen::Index>(ub ^ m));
            }
            out(a, b) = acc;
        }
    return out;
}

inline ComplexMatrix master_rhs(const ComplexMatrix& h, double gamma, const ComplexMatrix& rho, int n_qubits) {
    ComplexMatrix hr = h * rho;
    ComplexMatrix out = -kI * (hr - hr.adjoint());  // rho Hermitian: rho H = (H rho)^dagger
    if (gamma > 0.0) out += gamma * dissipator(rho, n_qubits);
    return out;
}

inline ComplexMatrix master_rhs_adjoint(const ComplexMatrix& h, double gamma, const ComplexMatrix& x, int n_qubits) {
    ComplexMatrix out = kI * (h * x - x * h);
    if (gamma > 0.0) out += gamma * dissipator_adjoint(x, n_qubits);
    return out;
}

struct StateTrajectory {
    std::vector<double> times;
    std::vector<DensityMatrix> states;

    const DensityMatrix& final_state() const { return states.back(); }
};

struct CostateTrajectory {
    std::vector<double> times;
    std::vector<ComplexMatrix> costates;
};

/// Per-coefficient gradient, ordered like QuantumNetwork::parameter_vector().
using GradientVector = RealVector;

namespace detail {

struct StepPropagator {
    ComplexMatrix vecs;
    RealVector vals;
    ComplexMatrix unitary;
};

inline StepPropagator unitary_step(const QuantumNetwork& net, double t_mid) {
    const double dt = net.shape().dt();
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(build_hamiltonian(net, t_mid));
    StepPropagator p{es.eigenvectors(), es.eigenvalues(), {}};
    ComplexVector phase(p.vals.size());
    for (Eigen::Index i = 0; i < p.vals.size(); ++i) phase(i) = std::exp(-kI * dt * p.vals(i));
    p.unitary = p.vecs * phase.asDiagonal() * p.vecs.adjoint();
    return p;
}

inline double grid_time(const NetworkShape& s, int k) { return s.t_final * static_cast<double>(k) / s.n_steps; }

struct Rk4Stages {
    double tau[4];
    ComplexMatrix h[4];
    double gamma[4];
    bool gamma_active[4];
};

inline Rk4Stages rk4_stages(const QuantumNetwork& net, int k) {
    const double t0 = grid_time(net.shape(), k);
    const double dt = net.shape().dt();
    Rk4Stages st;
    const double taus[4] = {t0, t0 + 0.5 * dt, t0 + 0.5 * dt, t0 + dt};
    for (int s = 0; s < 4; ++s) {
        st.tau[s] = taus[s];
        if (s == 2) {
            st.h[2] = st.h[1];
        } else {
            st.h[s] = build_hamiltonian(net, taus[s]);
        }
        const double raw = net.decay().value(taus[s]);
        st.gamma_active[s] = raw > 0.0;
        st.gamma[s] = std::max(raw, 0.0);
    }
    return st;
}

inline ComplexMatrix rk4_step(const QuantumNetwork& net, const Rk4Stages& st, const ComplexMatrix& rho) {
    const double dt = net.shape().dt();
    const int n = net.n_qubits();
    const ComplexMatrix k1 = master_rhs(st.h[0], st.gamma[0], rho, n);
    const ComplexMatrix k2 = master_rhs(st.h[1], st.gamma[1], rho + 0.5 * dt * k1, n);
    const ComplexMatrix k3 = master_rhs(st.h[2], st.gamma[2], rho + 0.5 * dt * k2, n);
    const ComplexMatrix k4 = master_rhs(st.h[3], st.gamma[3], rho + dt * k3, n);
    return rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

inline void check_step(const ComplexMatrix& rho, int step, bool check_psd) {
    if (!rho.allFinite()) throw StepUnstable(step, "non-finite state");
    const auto tol = DensityTolerance::relaxed();
    if (hermiticity_defect(rho) > tol.hermitian) throw StepUnstable(step, "state lost Hermiticity");
    if (std::abs(rho.trace() - 1.0) > tol.trace) throw StepUnstable(step, "state trace drifted");
    if (check_psd && min_eigenvalue(0.5 * (rho + rho.adjoint())) < tol.min_eigenvalue)
        throw StepUnstable(step, "state lost positivity");
}

/// Accumulates coefficient gradients of one schedule given dL/d(value) at time t.
inline void add_schedule_gradient(GradientVector& grad, const NetworkShape& shape, int schedule, double t,
                                  double dl_dvalue) {
    const int c = shape.coeffs_per_schedule();
    for (int k = 0; k < c; ++k)
        grad(schedule * c + k) +=
            dl_dvalue * ParameterSchedule::schedule_basis(k, shape.n_harmonics, t, shape.t_final);
}

/// Adjoint of forward step k: maps the costate at t_{k+1} to t_k and, when
/// `grad` is given, adds the step's parameter-gradient contribution.
inline ComplexMatrix backward_step(const QuantumNetwork& net, int k, const DensityMatrix& rho_k,
                                   const ComplexMatrix& lam_next, GradientVector* grad) {
    const NetworkShape& shape = net.shape();
    const auto& terms = net.terms();
    const double dt = shape.dt();
    if (!shape.lindblad) {
        const double t_mid = grid_time(shape, k) + 0.5 * dt;
        const StepPropagator p = unitary_step(net, t_mid);
        const ComplexMatrix lam = p.unitary.adjoint() * lam_next * p.unitary;
        if (grad) {
            const auto d = p.vals.size();
            // Divided differences of f(e) = exp(-i dt e), in a form stable for
            // degenerate eigenvalues: -i dt sinc(dt de / 2) exp(-i dt (ea + eb) / 2).
            ComplexMatrix phi(d, d);
            for (Eigen::Index a = 0; a < d; ++a)
                for (Eigen::Index b = 0; b < d; ++b) {
                    const double x = 0.5 * dt * (p.vals(a) - p.vals(b));
                    const double sinc = std::abs(x) < 1e-8 ? 1.0 - x * x / 6.0 : std::sin(x) / x;
                    phi(a, b) = -kI * dt * sinc * std::exp(-kI * 0.5 * dt * (p.vals(a) + p.vals(b)));
                }
            const ComplexMatrix a = p.vecs.adjoint() * rho_k.matrix() * p.unitary.adjoint() * lam_next * p.vecs;
            const ComplexMatrix y = a.transpose().cwiseProduct(phi);
            const ComplexMatrix q = p.vecs * y.transpose() * p.vecs.adjoint();
            for (std::size_t s = 0; s < terms.ops.size(); ++s) {
                const double g = 2.0 * q.cwiseProduct(terms.ops[s].transpose()).sum().real();
                add_schedule_gradient(*grad, shape, static_cast<int>(s), t_mid, g);
            }
        }
        return lam;
    }

    const int n = net.n_qubits();
    const Rk4Stages st = rk4_stages(net, k);
    ComplexMatrix x[4], kk[3];
    x[0] = rho_k.matrix();
    kk[0] = master_rhs(st.h[0], st.gamma[0], x[0], n);
    x[1] = x[0] + 0.5 * dt * kk[0];
    kk[1] = master_rhs(st.h[1], st.gamma[1], x[1], n);
    x[2] = x[0] + 0.5 * dt * kk[1];
    kk[2] = master_rhs(st.h[2], st.gamma[2], x[2], n);
    x[3] = x[0] + dt * kk[2];

    ComplexMatrix gk[4], gx[4];
    gk[3] = (dt / 6.0) * lam_next;
    gx[3] = master_rhs_adjoint(st.h[3], st.gamma[3], gk[3], n);
    gk[2] = (dt / 3.0) * lam_next + dt * gx[3];
    gx[2] = master_rhs_adjoint(st.h[2], st.gamma[2], gk[2], n);
    gk[1] = (dt / 3.0) * lam_next + 0.5 * dt * gx[2];
    gx[1] = master_rhs_adjoint(st.h[1], st.gamma[1], gk[1], n);
    gk[0] = (dt / 6.0) * lam_next + 0.5 * dt * gx[1];
    gx[0] = master_rhs_adjoint(st.h[0], st.gamma[0], gk[0], n);
    ComplexMatrix lam = lam_next + gx[0] + gx[1] + gx[2] + gx[3];

    if (grad) {
        const int decay_schedule = shape.n_hamiltonian_schedules();
        for (int s = 0; s < 4; ++s) {
            const ComplexMatrix gdag = gk[s].adjoint();
            const ComplexMatrix c = x[s] * gdag - gdag * x[s];
            for (std::size_t o = 0; o < terms.ops.size(); ++o) {
                const double g = terms.ops[o].cwiseProduct(c.transpose()).sum().imag();
                add_schedule_gradient(*grad, shape, static_cast<int>(o), st.tau[s], g);
            }
            if (st.gamma_active[s]) {
                const double g = real_inner(gk[s], dissipator(x[s], n));
                add_schedule_gradient(*grad, shape, decay_schedule, st.tau[s], g);
            }
        }
    }
    return lam;
}

}  // namespace detail

/// Integrates rho0 over the network's uniform grid. Throws StepUnstable if an
/// intermediate state fails (relaxed) density-matrix validation.
inline StateTrajectory propagate_forward(const QuantumNetwork& net, const DensityMatrix& rho0,
                                         int psd_check_stride = 10) {
    const NetworkShape& shape = net.shape();
    if (rho0.n_qubits() != shape.n_qubits) throw Error("DimensionMismatch", "initial state qubit count");
    StateTrajectory traj;
    traj.times.reserve(static_cast<std::size_t>(shape.n_steps) + 1);
    traj.states.reserve(static_cast<std::size_t>(shape.n_steps) + 1);
    traj.times.push_back(0.0);
    traj.states.push_back(rho0);
    ComplexMatrix rho = rho0.matrix();
    for (int k = 0; k < shape.n_steps; ++k) {
        if (shape.lindblad) {
            rho = detail::rk4_step(net, detail::rk4_stages(net, k), rho);
        } else {
            const auto p = detail::unitary_step(net, detail::grid_time(shape, k) + 0.5 * shape.dt());
            rho = p.unitary * rho * p.unitary.adjoint();
        }
        const bool last = k + 1 == shape.n_steps;
        detail::check_step(rho, k + 1,
                           last || (shape.lindblad && psd_check_stride > 0 && (k + 1) % psd_check_stride == 0));
        traj.times.push_back(detail::grid_time(shape, k + 1));
        traj.states.push_back(DensityMatrix::unchecked(shape.n_qubits, rho));
    }
    return traj;
}

/// T - rho(t_f).
inline ComplexMatrix final_costate_target(const DensityMatrix& target, const DensityMatrix& rho_f) {
    if (target.n_qubits() != rho_f.n_qubits()) throw Error("DimensionMismatch", "target and state qubit counts");
    return target.matrix() - rho_f.matrix();
}

/// 2 (tr(M rho)^2 - target) tr(M rho) M, the gradient of
/// 1/2 (tr(M rho)^2 - target)^2 with respect to rho.
inline ComplexMatrix final_costate_measure(const MeasureOperator& m, const DensityMatrix& rho_f, double target) {
    const double c = pauli_correlation(m, rho_f);
    return 2.0 * (c * c - target) * c * m.matrix();
}

inline void check_costate(const ComplexMatrix& g, int dim) {
    if (g.rows() != dim || g.cols() != dim) throw Error("DimensionMismatch", "costate dimension");
}

/// Backward sweep storing the costate at every grid point.
inline CostateTrajectory propagate_costate(const QuantumNetwork& net, const StateTrajectory& fwd,
                                           const ComplexMatrix& gamma_f) {
    const int steps = net.shape().n_steps;
    if (static_cast<int>(fwd.states.size()) != steps + 1) throw Error("GridMismatch", "trajectory length");
    check_costate(gamma_f, static_cast<int>(dim_for(net.n_qubits())));
    CostateTrajectory bwd;
    bwd.times = fwd.times;
    bwd.costates.resize(static_cast<std::size_t>(steps) + 1);
    bwd.costates.back() = gamma_f;
    for (int k = steps - 1; k >= 0; --k) {
        const auto uk = static_cast<std::size_t>(k);
        bwd.costates[uk] = detail::backward_step(net, k, fwd.states[uk], bwd.costates[uk + 1], nullptr);
        if (!bwd.costates[uk].allFinite()) throw StepUnstable(k, "non-finite costate");
    }
    return bwd;
}

/// Parameter gradient from a forward trajectory and its costates.
inline GradientVector assemble_gradient(const QuantumNetwork& net, const StateTrajectory& fwd,
                                        const CostateTrajectory& bwd) {
    const int steps = net.shape().n_steps;
    if (static_cast<int>(fwd.states.size()) != steps + 1 || bwd.costates.size() != fwd.states.size() ||
        bwd.times != fwd.times)
        throw Error("GridMismatch", "forward and backward trajectories are on different grids");
    GradientVector grad = GradientVector::Zero(net.n_params());
    for (int k = 0; k < steps; ++k) {
        const auto uk = static_cast<std::size_t>(k);
        detail::backward_step(net, k, fwd.states[uk], bwd.costates[uk + 1], &grad);
    }
    return grad;
}

struct AdjointResult {
    GradientVector gradient;
    /// dL/d rho(0); feeds an upstream network's final-time costate.
    ComplexMatrix initial_costate;
};

/// Single backward sweep producing both the gradient and dL/d rho(0).
inline AdjointResult backpropagate(const QuantumNetwork& net, const StateTrajectory& fwd, const ComplexMatrix& gamma_f) {
    const int steps = net.shape().n_steps;
    if (static_cast<int>(fwd.states.size()) != steps + 1) throw Error("GridMismatch", "trajectory length");
    check_costate(gamma_f, static_cast<int>(dim_for(net.n_qubits())));
    AdjointResult r{GradientVector::Zero(net.n_params()), gamma_f};
    for (int k = steps - 1; k >= 0; --k) {
        r.initial_costate =
            detail::backward_step(net, k, fwd.states[static_cast<std::size_t>(k)], r.initial_costate, &r.gradient);
        if (!r.initial_costate.allFinite()) throw StepUnstable(k, "non-finite costate");
    }
    return r;
}

}  // namespace qdtn
