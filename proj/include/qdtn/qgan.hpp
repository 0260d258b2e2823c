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

// Two-qubit product-state GAN. The generator is a quantum network driven from
// the flat state whose Hamiltonian coefficients are shifted per sample by a
// small classical "style" network; the discriminator is a second quantum
// network read out through XX, YY and ZZ correlations.

#include <array>
#include <cmath>
#include <vector>

#include "qdtn/lm.hpp"
#include "qdtn/objective.hpp"

namespace qdtn {

enum class Verdict { Real, Fake };

inline const char* to_string(Verdict v) { return v == Verdict::Real ? "real" : "fake"; }

/// Three separating planes on tr(M_k rho)^2, one per correlation measure.
struct DiscriminatorHead {
    std::array<MeasureOperator, 3> measures{MeasureOperator::xx(), MeasureOperator::yy(), MeasureOperator::zz()};
    std::array<double, 3> thresholds{0.25, 0.25, 0.25};
    double real_target = 0.05;
    double fake_target = 0.6;

    void validate() const {
        for (double t : thresholds)
            if (!(real_target < t && t < fake_target))
                throw Error("InvalidArgument", "need real_target < threshold < fake_target on every plane");
    }

    /// Real iff every output is below its plane's threshold.
    Verdict verdict(const std::array<double, 3>& outputs) const {
        for (int k = 0; k < 3; ++k)
            if (outputs[k] >= thresholds[k]) return Verdict::Fake;
        return Verdict::Real;
    }

    bool plane_says_real(int k, double output) const { return output < thresholds[static_cast<std::size_t>(k)]; }
};

struct Discrimination {
    std::array<double, 3> outputs{};
    Verdict verdict = Verdict::Real;
};

inline std::array<double, 3> head_outputs(const DiscriminatorHead& head, const DensityMatrix& rho_f) {
    std::array<double, 3> out{};
    for (int k = 0; k < 3; ++k) {
        const double c = pauli_correlation(head.measures[k], rho_f);
        out[k] = c * c;
    }
    return out;
}

inline Discrimination discriminate(const DiscriminatorHead& head, const QuantumNetwork& disc, const DensityMatrix& rho_in) {
    if (rho_in.n_qubits() != 2 || disc.n_qubits() != 2) throw Error("DimensionMismatch", "discriminator works on 2 qubits");
    const auto out = head_outputs(head, propagate_forward(disc, rho_in).final_state());
    return {out, head.verdict(out)};
}

/// Number of style parameters: every Fourier coefficient of K, eps and zeta.
inline int style_param_count(const NetworkShape& s) { return s.n_hamiltonian_params(); }

/// Classical map z (length 6) -> style delta: W2 tanh(W1 z + b1) + b2.
class StyleNet {
public:
    static constexpr int input_dim = 6;
    static constexpr int hidden_dim = 16;

    explicit StyleNet(int output_dim) : out_(output_dim), theta_(RealVector::Zero(param_count(output_dim))) {
        if (output_dim < 1) throw Error("InvalidArgument", "style output must be nonempty");
    }

    /// W1 ~ N(0, 1), b1 ~ N(0, 0.1^2); the output layer starts at zero so an
    /// untrained net leaves the common generator unchanged.
    static StyleNet random(int output_dim, RandomSource& rng) {
        StyleNet net(output_dim);
        for (int i = 0; i < hidden_dim * input_dim; ++i) net.theta_(i) = rng.normal();
        for (int i = 0; i < hidden_dim; ++i) net.theta_(hidden_dim * input_dim + i) = 0.1 * rng.normal();
        return net;
    }

    static int param_count(int output_dim) { return hidden_dim * (input_dim + 1) + output_dim * (hidden_dim + 1); }

    int output_dim() const { return out_; }
    const RealVector& parameters() const { return theta_; }
    void set_parameters(const RealVector& p) {
        if (p.size() != theta_.size()) throw Error("DimensionMismatch", "style net parameter length");
        theta_ = p;
    }

    RealVector forward(const RealVector& z) const {
        const RealVector h = hidden(z);
        return w2() * h + b2();
    }

    /// d(g . forward(z)) / d theta for an upstream gradient g on the output.
    RealVector backward(const RealVector& z, const RealVector& g) const {
        if (g.size() != out_) throw Error("DimensionMismatch", "style gradient length");
        const RealVector h = hidden(z);
        const RealVector da = (w2().transpose() * g).cwiseProduct(RealVector::Ones(hidden_dim) - h.cwiseAbs2());
        RealVector grad(theta_.size());
        Eigen::Map<RealMatrix>(grad.data(), hidden_dim, input_dim) = da * z.transpose();
        grad.segment(hidden_dim * input_dim, hidden_dim) = da;
        Eigen::Map<RealMatrix>(grad.data() + hidden_dim * (input_dim + 1), out_, hidden_dim) = g * h.transpose();
        grad.tail(out_) = g;
        return grad;
    }

private:
    Eigen::Map<const RealMatrix> w1() const { return {theta_.data(), hidden_dim, input_dim}; }
    Eigen::Map<const RealVector> b1() const { return {theta_.data() + hidden_dim * input_dim, hidden_dim}; }
    Eigen::Map<const RealMatrix> w2() const { return {theta_.data() + hidden_dim * (input_dim + 1), out_, hidden_dim}; }
    Eigen::Map<const RealVector> b2() const { return {theta_.data() + theta_.size() - out_, out_}; }

    RealVector hidden(const RealVector& z) const {
        if (z.size() != input_dim) throw Error("DimensionMismatch", "style input must have length 6");
        return (w1() * z + b1()).array().tanh().matrix();
    }

    int out_;
    RealVector theta_;
};

/// Plain gradient descent with momentum: v <- mu v - rate g; theta <- theta + v.
struct MomentumDescent {
    double rate = 1e-2;
    double momentum = 0.9;
    RealVector velocity;

    void step(RealVector& theta, const RealVector& g) {
        if (velocity.size() != theta.size()) velocity = RealVector::Zero(theta.size());
        velocity = momentum * velocity - rate * g;
        theta += velocity;
    }
};

struct StyledGenerator {
    QuantumNetwork common;
    RealVector style_delta;

    /// The common network with style_delta added to its K, eps, zeta coefficients.
    QuantumNetwork styled() const {
        const int ns = style_param_count(common.shape());
        if (style_delta.size() != ns) throw Error("DimensionMismatch", "style delta length");
        RealVector w = common.parameter_vector();
        w.head(ns) += style_delta;
        return QuantumNetwork::from_vector(common.shape(), w);
    }
};

inline DensityMatrix generate(const StyledGenerator& g) {
    return propagate_forward(g.styled(), flat_state(g.common.n_qubits())).final_state();
}

/// Length-6 latent vectors, uniform on (-1, 1).
struct RandomPool {
    std::vector<RealVector> vectors;

    static RandomPool draw(RandomSource rng, int size) {
        RandomPool p;
        for (int i = 0; i < size; ++i) {
            RealVector z(StyleNet::input_dim);
            for (int k = 0; k < StyleNet::input_dim; ++k) z(k) = rng.uniform(-1.0, 1.0);
            p.vectors.push_back(z);
        }
        return p;
    }

    std::size_t size() const { return vectors.size(); }
};

/// Real and fake pools from separate sub-streams of `rng`.
inline std::pair<RandomPool, RandomPool> disjoint_pools(const RandomSource& rng, int n_real, int n_fake) {
    std::pair<RandomPool, RandomPool> p{RandomPool::draw(rng.fork(101), n_real), RandomPool::draw(rng.fork(202), n_fake)};
    for (const auto& a : p.first.vectors)
        for (const auto& b : p.second.vectors)
            if (a == b) throw Error("InvalidArgument", "random pools collide");
    return p;
}

/// Gradient of L with respect to the style delta of one sample, given the
/// loss gradient dL/d rho at the generator output.
inline RealVector style_gradient(const QuantumNetwork& styled, const StateTrajectory& fwd, const ComplexMatrix& gamma_f) {
    const GradientVector g = backpropagate(styled, fwd, gamma_f).gradient;
    return g.head(style_param_count(styled.shape()));
}

// ---------------------------------------------------------------------------
// Stage 1: common generator parameters.

inline std::vector<EpochReport> train_generator_common(QuantumNetwork& g, const std::vector<DensityMatrix>& reals,
                                                       int epochs, const LmOptions& opt = {}) {
    if (reals.empty()) throw Error("EmptyBatch", "no reals to train on");
    Batch batch;
    const DensityMatrix flat = flat_state(g.n_qubits());
    for (const auto& r : reals) batch.examples.push_back({flat, Objective::target_state(r), 1.0});
    const NetworkBatchProblem problem(g.shape(), batch);
    RealVector w = g.parameter_vector();
    LMState state = LMState::initial(static_cast<int>(w.size()), opt);
    std::vector<EpochReport> out;
    for (int e = 1; e <= epochs; ++e) {
        EpochReport r = run_epoch(problem, w, state, opt);
        r.epoch = e;
        out.push_back(r);
        if (r.status != EpochStatus::Accepted) break;
    }
    g.set_parameters(w);
    return out;
}

// ---------------------------------------------------------------------------
// Stage 2: style network, one latent vector per real.

struct StyleEpoch {
    int epoch = 0;
    /// sqrt of the Frobenius loss per real.
    std::vector<double> per_real_rms;
    double rms = 0.0;
    bool operator==(const StyleEpoch&) const = default;
};

struct StyleTrainOptions {
    int epochs = 300;
    double rate = 1e-2;
    double momentum = 0.9;
    bool per_sample = false;
};

/// Frobenius loss and style-delta gradient of one styled sample against `target`.
inline double frobenius_style_gradient(const QuantumNetwork& common, const StyleNet& net, const RealVector& z,
                                       const DensityMatrix& target, RealVector* grad) {
    const StyledGenerator sg{common, net.forward(z)};
    const QuantumNetwork styled = sg.styled();
    const StateTrajectory fwd = propagate_forward(styled, flat_state(common.n_qubits()));
    const Objective obj = Objective::target_state(target);
    const double loss = obj.loss(fwd.final_state());
    if (grad) *grad = style_gradient(styled, fwd, obj.loss_gradient(fwd.final_state()));
    return loss;
}

/// One pass of momentum descent over the pool. `loss_grad(i, net, grad)`
/// returns sample i's loss and its style-delta gradient. Per-sample mode
/// updates the style net after every sample, in pool order; otherwise the
/// mean gradient over the pool is applied once. Returns the losses seen.
template <class LossGrad>
std::vector<double> style_descent_pass(StyleNet& net, MomentumDescent& md, const RandomPool& pool, bool per_sample,
                                       LossGrad&& loss_grad) {
    const std::size_t n = pool.size();
    std::vector<double> losses(n);
    RealVector theta = net.parameters();
    if (per_sample) {
        for (std::size_t i = 0; i < n; ++i) {
            RealVector g;
            losses[i] = loss_grad(i, net, g);
            md.step(theta, net.backward(pool.vectors[i], g));
            net.set_parameters(theta);
        }
        return losses;
    }
    std::vector<RealVector> grads(n);
    parallel_for(n, [&](std::size_t i) {
        RealVector g;
        losses[i] = loss_grad(i, net, g);
        grads[i] = net.backward(pool.vectors[i], g);
    });
    RealVector mean = RealVector::Zero(theta.size());
    for (const auto& g : grads) mean += g;
    md.step(theta, mean / static_cast<double>(n));
    net.set_parameters(theta);
    return losses;
}

/// Momentum descent on the Frobenius loss, chaining the generator
/// adjoint through the style network. The common network is fixed. Entry e
/// holds the per-real errors after e passes.
inline std::vector<StyleEpoch> train_styles(const QuantumNetwork& common, StyleNet& net, const RandomPool& pool,
                                            const std::vector<DensityMatrix>& reals, const StyleTrainOptions& opt = {}) {
    if (pool.size() != reals.size()) throw Error("DimensionMismatch", "pool size must equal the number of reals");
    if (reals.empty()) throw Error("EmptyBatch", "no reals to train on");
    if (net.output_dim() != style_param_count(common.shape())) throw Error("DimensionMismatch", "style net output");
    const std::size_t n = reals.size();
    const auto measure = [&](int e) {
        std::vector<double> loss(n);
        parallel_for(n, [&](std::size_t i) {
            loss[i] = frobenius_style_gradient(common, net, pool.vectors[i], reals[i], nullptr);
        });
        StyleEpoch se;
        se.epoch = e;
        double mean = 0.0;
        for (double l : loss) {
            se.per_real_rms.push_back(std::sqrt(l));
            mean += l / static_cast<double>(n);
        }
        se.rms = std::sqrt(mean);
        return se;
    };
    MomentumDescent md{opt.rate, opt.momentum, {}};
    std::vector<StyleEpoch> out{measure(0)};
    for (int e = 1; e <= opt.epochs; ++e) {
        style_descent_pass(net, md, pool, opt.per_sample, [&](std::size_t i, const StyleNet& sn, RealVector& g) {
            return frobenius_style_gradient(common, sn, pool.vectors[i], reals[i], &g);
        });
        out.push_back(measure(e));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Stage 3 and the discriminator side of the loop.

/// Per-plane and aggregate percent correct over one set of states.
struct PlaneScores {
    std::array<double, 3> plane_pct{};
    double aggregate_pct = 0.0;
    bool operator==(const PlaneScores&) const = default;
};

inline std::vector<Discrimination> discriminate_all(const DiscriminatorHead& head, const QuantumNetwork& disc,
                                                    const std::vector<DensityMatrix>& states) {
    std::vector<Discrimination> out(states.size());
    parallel_for(states.size(), [&](std::size_t i) { out[i] = discriminate(head, disc, states[i]); });
    return out;
}

/// Reals are correct only when every plane says real; fakes when any plane
/// says fake. Per-plane scores count each plane on its own.
inline PlaneScores score(const DiscriminatorHead& head, const std::vector<Discrimination>& d, Verdict truth) {
    PlaneScores s;
    if (d.empty()) return s;
    std::array<int, 3> plane{};
    int agg = 0;
    for (const auto& x : d) {
        for (int k = 0; k < 3; ++k) plane[k] += (head.plane_says_real(k, x.outputs[k]) == (truth == Verdict::Real));
        agg += x.verdict == truth;
    }
    const double n = static_cast<double>(d.size());
    for (int k = 0; k < 3; ++k) s.plane_pct[k] = 100.0 * plane[k] / n;
    s.aggregate_pct = 100.0 * agg / n;
    return s;
}

struct DiscriminatorEpoch {
    EpochReport lm;
    /// RMS of the plane-k errors over the reals, before the epoch.
    std::array<double, 3> plane_rms{};
    PlaneScores reals;
    bool operator==(const DiscriminatorEpoch&) const = default;
};

/// Examples pushing the planes that misclassify a real toward real_target.
/// Planes already on the real side get weight zero.
inline Batch real_side_batch(const DiscriminatorHead& head, const std::vector<DensityMatrix>& reals,
                             const std::vector<Discrimination>& d) {
    Batch b;
    for (std::size_t i = 0; i < reals.size(); ++i)
        for (int k = 0; k < 3; ++k)
            b.examples.push_back({reals[i], Objective::measure(head.measures[k], head.real_target),
                                  head.plane_says_real(k, d[i].outputs[k]) ? 0.0 : 1.0});
    return b;
}

inline std::vector<DiscriminatorEpoch> train_discriminator_initial(QuantumNetwork& d, const DiscriminatorHead& head,
                                                                   const std::vector<DensityMatrix>& reals, int epochs,
                                                                   const LmOptions& opt = {}) {
    head.validate();
    if (reals.empty()) throw Error("EmptyBatch", "no reals to train on");
    RealVector w = d.parameter_vector();
    LMState state = LMState::initial(static_cast<int>(w.size()), opt);
    std::vector<DiscriminatorEpoch> out;
    std::vector<Discrimination> dis = discriminate_all(head, d, reals);
    for (int e = 1; e <= epochs; ++e) {
        DiscriminatorEpoch de;
        for (int k = 0; k < 3; ++k) {
            double s = 0.0;
            for (const auto& x : dis)
                if (!head.plane_says_real(k, x.outputs[k])) s += std::pow(x.outputs[k] - head.real_target, 2);
            de.plane_rms[k] = std::sqrt(s / static_cast<double>(reals.size()));
        }
        const Batch batch = real_side_batch(head, reals, dis);
        bool any = false;
        for (const auto& ex : batch.examples) any = any || ex.weight != 0.0;
        if (!any) {
            // Every plane already calls every real real: nothing to train.
            de.lm.epoch = e;
            de.lm.status = EpochStatus::Degenerate;
            de.reals = score(head, dis, Verdict::Real);
            out.push_back(de);
            break;
        }
        const NetworkBatchProblem problem(d.shape(), batch);
        de.lm = run_epoch(problem, w, state, opt);
        de.lm.epoch = e;
        d.set_parameters(w);
        dis = discriminate_all(head, d, reals);
        de.reals = score(head, dis, Verdict::Real);
        out.push_back(de);
        if (de.lm.status != EpochStatus::Accepted) break;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Stage 4: minimax loop on generated fakes.

/// Discriminator loss on one fake that no plane detects: push the plane with
/// the largest output toward fake_target. Detected fakes carry no error.
inline Batch fake_side_batch(const DiscriminatorHead& head, const std::vector<DensityMatrix>& fakes,
                             const std::vector<Discrimination>& d) {
    Batch b;
    for (std::size_t i = 0; i < fakes.size(); ++i) {
        int kmax = 0;
        for (int k = 1; k < 3; ++k)
            if (d[i].outputs[k] > d[i].outputs[kmax]) kmax = k;
        b.examples.push_back({fakes[i], Objective::measure(head.measures[kmax], head.fake_target),
                              d[i].verdict == Verdict::Real ? 1.0 : 0.0});
    }
    return b;
}

/// Generator-side loss on one fake: every plane that detects it is pushed
/// back toward real_target. Returns the loss and dL/d rho at the
/// discriminator output.
inline double reversed_loss(const DiscriminatorHead& head, const DensityMatrix& rho_f, ComplexMatrix* gamma_f) {
    const auto out = head_outputs(head, rho_f);
    double loss = 0.0;
    if (gamma_f) *gamma_f = ComplexMatrix::Zero(static_cast<Eigen::Index>(rho_f.dim()), static_cast<Eigen::Index>(rho_f.dim()));
    for (int k = 0; k < 3; ++k) {
        if (head.plane_says_real(k, out[k])) continue;
        const Objective obj = Objective::measure(head.measures[k], head.real_target);
        loss += obj.loss(rho_f);
        if (gamma_f) *gamma_f += obj.loss_gradient(rho_f);
    }
    return loss;
}

/// Reversed discriminator loss of one styled fake and its gradient with
/// respect to the style delta. The discriminator's costate at its initial
/// time is dL/d(generator output) and seeds the generator's backward sweep.
inline double chained_style_gradient(const DiscriminatorHead& head, const QuantumNetwork& disc,
                                     const StyledGenerator& sg, RealVector* grad) {
    const QuantumNetwork styled = sg.styled();
    const StateTrajectory gen = propagate_forward(styled, flat_state(styled.n_qubits()));
    const StateTrajectory dis = propagate_forward(disc, gen.final_state());
    ComplexMatrix gamma;
    const double loss = reversed_loss(head, dis.final_state(), grad ? &gamma : nullptr);
    if (grad) {
        if (loss == 0.0) {
            *grad = RealVector::Zero(style_param_count(styled.shape()));
        } else {
            const ComplexMatrix gamma_gen = backpropagate(disc, dis, gamma).initial_costate;
            *grad = style_gradient(styled, gen, gamma_gen);
        }
    }
    return loss;
}

struct GanEpoch {
    int epoch = 0;
    /// Real scores are the post-initial-training values: the loop never
    /// trains on reals, so their identification is reported as static.
    PlaneScores reals;
    PlaneScores fakes;
    /// Real scores re-evaluated with the current discriminator, for reference.
    PlaneScores reals_live;
    EpochReport disc_lm;
    double gen_loss_before = 0.0;
    bool operator==(const GanEpoch&) const = default;
};

struct GanMetrics {
    std::vector<GanEpoch> epochs;
    bool operator==(const GanMetrics&) const = default;
};

struct GanLoopOptions {
    int epochs = 50;
    int disc_epochs_per_round = 1;
    int gen_epochs_per_round = 1;
    LmOptions disc_lm;
    double style_rate = 1e-2;
    double style_momentum = 0.9;
    bool style_per_sample = false;
};

inline std::vector<DensityMatrix> generate_all(const QuantumNetwork& common, const StyleNet& net, const RandomPool& pool) {
    std::vector<DensityMatrix> out(pool.size(), flat_state(common.n_qubits()));
    parallel_for(pool.size(), [&](std::size_t i) { out[i] = generate({common, net.forward(pool.vectors[i])}); });
    return out;
}

/// Alternates discriminator LM epochs on the current fakes with momentum
/// descent on the style network against the reversed discriminator loss.
/// Entry 0 holds the scores before the first round.
inline GanMetrics gan_loop(const QuantumNetwork& gen, StyleNet& style, QuantumNetwork& disc,
                           const DiscriminatorHead& head, const RandomPool& fake_pool,
                           const std::vector<DensityMatrix>& reals, const GanLoopOptions& opt = {}) {
    head.validate();
    if (fake_pool.size() == 0) throw Error("EmptyBatch", "fake pool is empty");
    const PlaneScores real_static = score(head, discriminate_all(head, disc, reals), Verdict::Real);
    GanMetrics m;
    {
        GanEpoch e0;
        e0.reals = real_static;
        e0.reals_live = real_static;
        e0.fakes = score(head, discriminate_all(head, disc, generate_all(gen, style, fake_pool)), Verdict::Fake);
        m.epochs.push_back(e0);
    }
    RealVector wd = disc.parameter_vector();
    LMState dstate = LMState::initial(static_cast<int>(wd.size()), opt.disc_lm);
    MomentumDescent md{opt.style_rate, opt.style_momentum, {}};
    const std::size_t n = fake_pool.size();

    for (int e = 1; e <= opt.epochs; ++e) {
        GanEpoch ge;
        ge.epoch = e;
        for (int k = 0; k < opt.disc_epochs_per_round; ++k) {
            const auto fakes = generate_all(gen, style, fake_pool);
            const auto dis = discriminate_all(head, disc, fakes);
            const Batch batch = fake_side_batch(head, fakes, dis);
            bool any = false;
            for (const auto& ex : batch.examples) any = any || ex.weight != 0.0;
            if (!any) break;
            const NetworkBatchProblem problem(disc.shape(), batch);
            ge.disc_lm = run_epoch(problem, wd, dstate, opt.disc_lm);
            disc.set_parameters(wd);
            if (ge.disc_lm.status != EpochStatus::Accepted) break;
        }
        for (int k = 0; k < opt.gen_epochs_per_round; ++k) {
            const auto losses = style_descent_pass(style, md, fake_pool, opt.style_per_sample, [&](std::size_t i, const StyleNet& sn, RealVector& g) {
                return chained_style_gradient(head, disc, {gen, sn.forward(fake_pool.vectors[i])}, &g);
            });
            if (k == 0) {
                for (double l : losses) ge.gen_loss_before += l / static_cast<double>(n);
            }
        }
        ge.reals = real_static;
        ge.reals_live = score(head, discriminate_all(head, disc, reals), Verdict::Real);
        ge.fakes = score(head, discriminate_all(head, disc, generate_all(gen, style, fake_pool)), Verdict::Fake);
        m.epochs.push_back(ge);
    }
    return m;
}

}  // namespace qdtn
