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

// Binary classifier over image states: one Z...Z correlation output compared
// against a separator, trained with per-example error discounts.

#include <string>
#include <vector>

#include "qdtn/lm.hpp"
#include "qdtn/objective.hpp"

namespace qdtn {

enum class Label { ClassA, ClassB };

inline const char* to_string(Label l) { return l == Label::ClassA ? "ClassA" : "ClassB"; }

inline Label label_from_string(const std::string& s) {
    if (s == "ClassA") return Label::ClassA;
    if (s == "ClassB") return Label::ClassB;
    throw Error("InvalidArgument", "unknown label " + s);
}

/// Separator and per-class targets on the squared-correlation output. The
/// "magenta" lines sit a quarter of the way from the separator to each target.
struct SeparatorGeometry {
    double separator = 0.25;
    double target_low = 0.05;
    double target_high = 0.6;

    double magenta_low() const { return separator - 0.25 * (separator - target_low); }
    double magenta_high() const { return separator + 0.25 * (target_high - separator); }
    double target_for(Label l) const { return l == Label::ClassA ? target_low : target_high; }

    void validate() const {
        if (!(target_low < separator && separator < target_high))
            throw Error("InvalidArgument", "need target_low < separator < target_high");
    }
};

struct LabeledState {
    DensityMatrix state;
    Label label;
    std::string source_id;
};

enum class DiscountTier { Clear, Correct, Marginal };

inline const char* to_string(DiscountTier t) {
    switch (t) {
        case DiscountTier::Clear: return "clear";
        case DiscountTier::Correct: return "correct";
        case DiscountTier::Marginal: return "marginal";
    }
    return "?";
}

inline double multiplier(DiscountTier t) {
    switch (t) {
        case DiscountTier::Clear: return 0.01;
        case DiscountTier::Correct: return 0.2;
        case DiscountTier::Marginal: return 1.0;
    }
    return 1.0;
}

/// Clear: at or beyond the target. Correct: from the magenta line (inclusive)
/// up to the target. Marginal: anything on the separator side of magenta.
inline DiscountTier discount_tier(double output, Label label, const SeparatorGeometry& geo) {
    if (label == Label::ClassA) {
        if (output <= geo.target_low) return DiscountTier::Clear;
        if (output <= geo.magenta_low()) return DiscountTier::Correct;
        return DiscountTier::Marginal;
    }
    if (output >= geo.target_high) return DiscountTier::Clear;
    if (output >= geo.magenta_high()) return DiscountTier::Correct;
    return DiscountTier::Marginal;
}

/// multiplier * 1/2 (output - target)^2.
inline double discounted_error(double output, Label label, const SeparatorGeometry& geo) {
    const double e = output - geo.target_for(label);
    return multiplier(discount_tier(output, label, geo)) * 0.5 * e * e;
}

inline Label verdict_for(double output, const SeparatorGeometry& geo) {
    return output >= geo.separator ? Label::ClassB : Label::ClassA;
}

struct Classification {
    double output = 0.0;
    Label verdict = Label::ClassA;
};

inline Classification classify(const QuantumNetwork& net, const SeparatorGeometry& geo, const LabeledState& x) {
    const auto m = MeasureOperator::z_string(net.n_qubits());
    const auto rho_f = propagate_forward(net, x.state).final_state();
    const double c = pauli_correlation(m, rho_f);
    return {c * c, verdict_for(c * c, geo)};
}

struct ClassifierReport {
    int epoch = 0;
    std::vector<std::string> ids;
    std::vector<double> outputs;
    std::vector<DiscountTier> tiers;
    std::vector<Label> labels;
    std::vector<Label> verdicts;
    std::vector<bool> correct;
    double percent_correct = 0.0;
    /// RMS of the discounted training errors, when produced by training.
    double rms = 0.0;
    double lambda = 0.0;
    bool operator==(const ClassifierReport&) const = default;
};

inline ClassifierReport evaluate(const QuantumNetwork& net, const SeparatorGeometry& geo,
                                 const std::vector<LabeledState>& corpus) {
    ClassifierReport r;
    const std::size_t n = corpus.size();
    std::vector<Classification> cls(n);
    parallel_for(n, [&](std::size_t i) { cls[i] = classify(net, geo, corpus[i]); });
    int hits = 0;
    for (std::size_t i = 0; i < n; ++i) {
        r.ids.push_back(corpus[i].source_id);
        r.outputs.push_back(cls[i].output);
        r.labels.push_back(corpus[i].label);
        r.tiers.push_back(discount_tier(cls[i].output, corpus[i].label, geo));
        r.verdicts.push_back(cls[i].verdict);
        r.correct.push_back(cls[i].verdict == corpus[i].label);
        hits += r.correct.back() ? 1 : 0;
    }
    r.percent_correct = n == 0 ? 0.0 : 100.0 * hits / static_cast<double>(n);
    return r;
}

/// Measure-objective batch whose weights are the discount multipliers of `tiers`.
inline Batch discounted_batch(const std::vector<LabeledState>& corpus, const SeparatorGeometry& geo,
                              const std::vector<DiscountTier>& tiers) {
    Batch b;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const int n = corpus[i].state.n_qubits();
        b.examples.push_back({corpus[i].state, Objective::measure(MeasureOperator::z_string(n), geo.target_for(corpus[i].label)),
                              multiplier(tiers[i])});
    }
    return b;
}

struct ClassifierTrainOptions {
    int epochs = 100;
    LmOptions lm;
    /// Stop once every example is classified correctly.
    bool stop_when_perfect = false;
};

/// LM training of `net` on the corpus. Each epoch fixes the discount weights
/// from the current outputs, then takes one LM epoch. Returns the evaluation
/// before training followed by one report per epoch.
inline std::vector<ClassifierReport> train_binary(QuantumNetwork& net, const std::vector<LabeledState>& corpus,
                                                  const SeparatorGeometry& geo, const ClassifierTrainOptions& opt = {}) {
    geo.validate();
    if (corpus.empty()) throw Error("EmptyBatch", "classifier corpus is empty");
    bool has_a = false, has_b = false;
    for (const auto& x : corpus) (x.label == Label::ClassA ? has_a : has_b) = true;
    if (!has_a || !has_b) throw Error("InvalidArgument", "classifier corpus needs both classes");

    std::vector<ClassifierReport> reports;
    reports.push_back(evaluate(net, geo, corpus));
    RealVector w = net.parameter_vector();
    LMState state = LMState::initial(static_cast<int>(w.size()), opt.lm);
    for (int e = 1; e <= opt.epochs; ++e) {
        if (opt.stop_when_perfect && reports.back().percent_correct == 100.0) break;
        const Batch batch = discounted_batch(corpus, geo, reports.back().tiers);
        const NetworkBatchProblem problem(net.shape(), batch);
        const EpochReport er = run_epoch(problem, w, state, opt.lm);
        net.set_parameters(w);
        ClassifierReport r = evaluate(net, geo, corpus);
        r.epoch = e;
        r.rms = er.rms_after;
        r.lambda = er.lambda;
        reports.push_back(std::move(r));
        if (er.status == EpochStatus::Degenerate) break;
    }
    return reports;
}

}  // namespace qdtn
