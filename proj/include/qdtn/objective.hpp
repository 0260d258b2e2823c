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

#include <vector>

#include "qdtn/dynamics.hpp"
#include "qdtn/network.hpp"
#include "qdtn/parallel.hpp"
#include "qdtn/state.hpp"

namespace qdtn {

/// Final-time cost of one training example: either the squared Frobenius
/// distance to a target state, or 1/2 (tr(M rho)^2 - target)^2.
class Objective {
public:
    enum class Kind { TargetState, Measure };

    static Objective target_state(const DensityMatrix& t) { return Objective(Kind::TargetState, t.matrix(), 0.0); }
    static Objective measure(const MeasureOperator& m, double target) {
        return Objective(Kind::Measure, m.matrix(), target);
    }

    Kind kind() const { return kind_; }
    const ComplexMatrix& matrix() const { return mat_; }
    double target() const { return target_; }

    /// Squared trace correlation tr(M rho)^2 (Measure objectives only).
    double output(const ComplexMatrix& rho) const {
        const double c = pauli_correlation(mat_, rho);
        return c * c;
    }

    double loss(const DensityMatrix& rho_f) const {
        if (kind_ == Kind::TargetState) return (mat_ - rho_f.matrix()).squaredNorm();
        const double e = output(rho_f.matrix()) - target_;
        return 0.5 * e * e;
    }

    /// dL/d rho(t_f): -2 (T - rho) for target states, the measure costate otherwise.
    ComplexMatrix loss_gradient(const DensityMatrix& rho_f) const {
        if (kind_ == Kind::TargetState)
            return -2.0 * final_costate_target(DensityMatrix::unchecked(rho_f.n_qubits(), mat_), rho_f);
        const double c = pauli_correlation(mat_, rho_f.matrix());
        return 2.0 * (c * c - target_) * c * mat_;
    }

private:
    Objective(Kind k, ComplexMatrix m, double t) : kind_(k), mat_(std::move(m)), target_(t) {}
    Kind kind_;
    ComplexMatrix mat_;
    double target_;
};

struct Example {
    DensityMatrix input;
    Objective objective;
    /// Scales both the loss and the final-time costate of this example.
    double weight = 1.0;
};

struct Batch {
    std::vector<Example> examples;
};

/// Per-example weighted losses and loss gradients.
struct JacobianStack {
    std::vector<GradientVector> rows;
    std::vector<double> losses;

    double mean_loss() const {
        double s = 0.0;
        for (double l : losses) s += l;
        return losses.empty() ? 0.0 : s / static_cast<double>(losses.size());
    }
    GradientVector mean_gradient() const {
        GradientVector g = GradientVector::Zero(rows.empty() ? 0 : rows.front().size());
        for (const auto& r : rows) g += r;
        return rows.empty() ? g : GradientVector(g / static_cast<double>(rows.size()));
    }
};

inline double example_loss(const QuantumNetwork& net, const Example& ex) {
    if (ex.weight == 0.0) return 0.0;
    return ex.weight * ex.objective.loss(propagate_forward(net, ex.input).final_state());
}

inline GradientVector example_gradient(const QuantumNetwork& net, const Example& ex, double* loss = nullptr) {
    if (ex.weight == 0.0) {
        if (loss) *loss = 0.0;
        return GradientVector::Zero(net.n_params());
    }
    const StateTrajectory fwd = propagate_forward(net, ex.input);
    if (loss) *loss = ex.weight * ex.objective.loss(fwd.final_state());
    return backpropagate(net, fwd, ex.weight * ex.objective.loss_gradient(fwd.final_state())).gradient;
}

/// Mean weighted loss over the batch.
inline double batch_loss(const QuantumNetwork& net, const Batch& batch) {
    std::vector<double> losses(batch.examples.size());
    parallel_for(losses.size(), [&](std::size_t i) { losses[i] = example_loss(net, batch.examples[i]); });
    double s = 0.0;
    for (double l : losses) s += l;
    return batch.examples.empty() ? 0.0 : s / static_cast<double>(losses.size());
}

/// LM problem over the full parameter vector of a network for a fixed batch.
class NetworkBatchProblem {
public:
    NetworkBatchProblem(NetworkShape shape, const Batch& batch) : shape_(shape), batch_(&batch) {
        if (batch.examples.empty()) throw Error("EmptyBatch", "training batch is empty");
    }

    std::vector<double> losses(const RealVector& w) const {
        const QuantumNetwork net = QuantumNetwork::from_vector(shape_, w);
        std::vector<double> out(batch_->examples.size());
        parallel_for(out.size(), [&](std::size_t i) { out[i] = example_loss(net, batch_->examples[i]); });
        return out;
    }

    JacobianStack jacobian(const RealVector& w) const {
        const QuantumNetwork net = QuantumNetwork::from_vector(shape_, w);
        JacobianStack js;
        js.rows.resize(batch_->examples.size());
        js.losses.resize(batch_->examples.size());
        parallel_for(js.rows.size(),
                     [&](std::size_t i) { js.rows[i] = example_gradient(net, batch_->examples[i], &js.losses[i]); });
        return js;
    }

private:
    NetworkShape shape_;
    const Batch* batch_;
};

}  // namespace qdtn
