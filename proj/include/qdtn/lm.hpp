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

// Levenberg-Marquardt trainer for loss functions whose per-example
// gradients come from the adjoint sweep.
//
// The Hessian is the rank-structured outer-product form
//     H = mean_i(g_i g_i^T) / L,   L = batch-mean loss,
// and a step solves (H + lambda * diag(D^T D)) delta = mean_i(g_i), then
// moves by -eta * delta. D^T D holds the largest Hessian diagonal seen so
// far (floored at 1e-6), which keeps rarely-excited directions damped.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <limits>
#include <vector>

#include <Eigen/Cholesky>

#include "qdtn/linalg.hpp"
#include "qdtn/objective.hpp"

namespace qdtn {

template <class P>
concept LmProblem = requires(const P& p, const RealVector& w) {
    { p.losses(w) } -> std::convertible_to<std::vector<double>>;
    { p.jacobian(w) } -> std::convertible_to<JacobianStack>;
};

struct LmOptions {
    enum class Mode { LevenbergMarquardt, GradientDescent };

    Mode mode = Mode::LevenbergMarquardt;
    double lambda0 = 1e-2;
    double eta = 1.0;
    double lambda_up = 10.0;
    double lambda_down = 10.0;
    double lambda_min = 1e-12;
    double lambda_max = 1e12;
    int max_retries = 8;
    /// Relative RMS increase tolerated for an uphill step.
    double uphill_tolerance = 1e-3;
    bool identity_damping = false;
    double dtd_floor = 1e-6;
    /// Loss at or below this is treated as converged.
    double degenerate_loss = 1e-14;
};

struct LMState {
    double lambda = 1e-2;
    double eta = 1.0;
    RealVector dtd_diag;
    int epoch = 0;
    double last_rms = std::numeric_limits<double>::infinity();
    double last_step_norm = std::numeric_limits<double>::infinity();

    static LMState initial(int n_params, const LmOptions& opt = {}) {
        LMState s;
        s.lambda = opt.lambda0;
        s.eta = opt.eta;
        s.dtd_diag = RealVector::Constant(n_params, opt.dtd_floor);
        return s;
    }
};

enum class EpochStatus { Accepted, Degenerate, NoAcceptableStep };

inline const char* to_string(EpochStatus s) {
    switch (s) {
        case EpochStatus::Accepted: return "accepted";
        case EpochStatus::Degenerate: return "degenerate";
        case EpochStatus::NoAcceptableStep: return "rejected";
    }
    return "?";
}

struct EpochReport {
    int epoch = 0;
    double rms_before = 0.0;
    double rms_after = 0.0;
    double lambda = 0.0;
    std::vector<double> lambda_trace;
    int retries = 0;
    EpochStatus status = EpochStatus::Accepted;
    double step_norm = 0.0;

    bool accepted() const { return status == EpochStatus::Accepted; }
    bool operator==(const EpochReport&) const = default;
};

/// mean_i(g_i g_i^T) / mean_loss.
inline RealMatrix assemble_hessian(const JacobianStack& j, double mean_loss, double degenerate_loss = 1e-14) {
    if (j.rows.empty()) throw Error("EmptyBatch", "Jacobian stack has no rows");
    if (!(mean_loss > degenerate_loss))
        throw Error("DegenerateLoss", "mean loss " + std::to_string(mean_loss) + " is at the training floor");
    const auto n = j.rows.front().size();
    RealMatrix jac(static_cast<Eigen::Index>(j.rows.size()), n);
    for (std::size_t i = 0; i < j.rows.size(); ++i) jac.row(static_cast<Eigen::Index>(i)) = j.rows[i].transpose();
    RealMatrix h = RealMatrix::Zero(n, n);
    h.selfadjointView<Eigen::Lower>().rankUpdate(jac.transpose(), 1.0 / (static_cast<double>(j.rows.size()) * mean_loss));
    return h.selfadjointView<Eigen::Lower>();
}

/// -eta (H + lambda diag(dtd))^{-1} grad. Retries the Cholesky factorization
/// with growing diagonal jitter before giving up with SingularSystem.
inline RealVector lm_step(const LMState& state, const RealMatrix& hess, const RealVector& grad,
                          bool identity_damping = false) {
    const auto n = grad.size();
    RealMatrix a = hess;
    for (Eigen::Index i = 0; i < n; ++i) a(i, i) += state.lambda * (identity_damping ? 1.0 : state.dtd_diag(i));
    const double scale = std::max(1.0, a.diagonal().cwiseAbs().maxCoeff());
    double jitter = 0.0;
    for (int attempt = 0; attempt < 12; ++attempt) {
        RealMatrix m = a;
        m.diagonal().array() += jitter;
        Eigen::LLT<RealMatrix> llt(m);
        if (llt.info() == Eigen::Success) {
            RealVector delta = llt.solve(grad);
            if (delta.allFinite()) return -state.eta * delta;
        }
        jitter = jitter == 0.0 ? 1e-14 * scale : jitter * 10.0;
    }
    throw Error("SingularSystem", "damped Hessian could not be factorized");
}

namespace detail {
inline double rms_of(const std::vector<double>& losses) {
    double s = 0.0;
    for (double l : losses) s += l;
    return std::sqrt(s / static_cast<double>(losses.size()));
}
}  // namespace detail

/// One training epoch:
///   1. per-example gradients at the current parameters,
///   2. damping for this attempt,
///   3. candidate update,
///   4. accept on RMS decrease or a bounded uphill step,
///   5. otherwise reject, raise lambda and retry,
///   6. on acceptance lower lambda and keep the new parameters.
/// An integration failure at a candidate point counts as a rejection.
template <LmProblem P>
EpochReport run_epoch(const P& problem, RealVector& w, LMState& state, const LmOptions& opt = {}) {
    EpochReport rep;
    rep.epoch = state.epoch;
    const JacobianStack js = problem.jacobian(w);
    const double mean_loss = js.mean_loss();
    rep.rms_before = std::sqrt(mean_loss);
    rep.rms_after = rep.rms_before;
    rep.lambda = state.lambda;
    if (!(mean_loss > opt.degenerate_loss)) {
        rep.status = EpochStatus::Degenerate;
        return rep;
    }
    const RealVector grad = js.mean_gradient();
    // Gradient-descent mode drops the curvature term and damps with the
    // identity, so each candidate is -eta * grad / lambda.
    const bool lm = opt.mode == LmOptions::Mode::LevenbergMarquardt;
    RealMatrix hess = RealMatrix::Zero(grad.size(), grad.size());
    if (lm) {
        hess = assemble_hessian(js, mean_loss, opt.degenerate_loss);
        state.dtd_diag = state.dtd_diag.cwiseMax(hess.diagonal()).cwiseMax(opt.dtd_floor);
    }

    rep.status = EpochStatus::NoAcceptableStep;
    for (int attempt = 0; attempt <= opt.max_retries; ++attempt) {
        rep.lambda_trace.push_back(state.lambda);
        const RealVector delta = lm_step(state, hess, grad, opt.identity_damping || !lm);
        const RealVector trial = w + delta;
        double new_rms = std::numeric_limits<double>::infinity();
        try {
            new_rms = detail::rms_of(problem.losses(trial));
        } catch (const StepUnstable&) {
        }
        const double step = delta.norm();
        const bool downhill = new_rms < rep.rms_before;
        const bool uphill_ok = new_rms <= rep.rms_before * (1.0 + opt.uphill_tolerance) &&
                               std::isfinite(state.last_step_norm) && step < state.last_step_norm;
        if (std::isfinite(new_rms) && (downhill || uphill_ok)) {
            w = trial;
            rep.rms_after = new_rms;
            rep.step_norm = step;
            rep.status = EpochStatus::Accepted;
            state.lambda = std::max(opt.lambda_min, state.lambda / opt.lambda_down);
            state.last_step_norm = step;
            state.last_rms = new_rms;
            ++state.epoch;
            break;
        }
        ++rep.retries;
        state.lambda = std::min(opt.lambda_max, state.lambda * opt.lambda_up);
    }
    rep.lambda = state.lambda;
    return rep;
}

}  // namespace qdtn
