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

// qdtn command line: corpus generation, image transforms, training runs and
// gradient checks. Results go to stdout as JSON; failures print an error
// object to stderr and exit nonzero.

#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "qdtn/harness.hpp"

using namespace qdtn;

namespace {

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("IoError", path + ": cannot open config");
    return config_from_json(json::parse(in));
}

void print_result(const RunResult& r) {
    json out = r.summary;
    out["artifacts"] = r.dir.string();
    std::cout << out.dump(2) << std::endl;
}

int fail(const std::string& kind, const std::string& message) {
    std::cerr << json{{"error", kind}, {"message", message}}.dump() << std::endl;
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quantum deep-time network toolkit"};
    app.require_subcommand(1);
    std::string out_root = "runs";
    int threads = 0;
    app.add_option("--out", out_root, "Artifact root directory");
    app.add_option("--threads", threads, "Worker threads (overrides QDTN_THREADS)")->check(CLI::PositiveNumber);

    // gen-letters
    auto* letters = app.add_subcommand("gen-letters", "Render letters and their inversions plus manifest.json");
    std::string letters_dir = "letters";
    int letters_per_class = 15, letter_size = 64;
    letters->add_option("--dir", letters_dir, "Output folder");
    letters->add_option("--letters", letters_per_class, "Letters per class (A, B, ...)")->check(CLI::Range(1, 26));
    letters->add_option("--size", letter_size, "Frame size in pixels")->check(CLI::Range(16, 4096));

    // transform-image
    auto* transform = app.add_subcommand("transform-image", "Image -> density matrix JSON");
    std::string input, state_out, cache_dir;
    int qubits = 4;
    transform->add_option("--input", input, "PNG or JPEG file")->required();
    transform->add_option("--qubits", qubits, "Qubit count n (image is reduced to 2^n x 2^n)")->check(CLI::Range(1, 10));
    transform->add_option("--out", state_out, "Output JSON (stdout when omitted)");
    transform->add_option("--cache", cache_dir, "Transform cache folder");

    // train-gan
    auto* gan = app.add_subcommand("train-gan", "Product-state GAN: stages 1-3 and the minimax loop");
    std::string gan_config;
    std::uint64_t seed = 2024;
    int gan_epochs = -1;
    gan->add_option("--config", gan_config, "Experiment config JSON");
    gan->add_option("--seed", seed, "Seed");
    gan->add_option("--gan-epochs", gan_epochs, "Minimax epochs");

    // train-classifier
    auto* cls = app.add_subcommand("train-classifier", "Binary image classifier");
    std::string cls_kind = "letters-3q", manifest, class_a, class_b, cls_config;
    int cls_epochs = -1, cls_qubits = -1, cls_letters = -1, holdout = 0;
    bool until_perfect = false;
    cls->add_option("--kind", cls_kind, "letters-3q | letters-4q | birds-cats | dogs-cats")
        ->check(CLI::IsMember({"letters-3q", "letters-4q", "birds-cats", "dogs-cats"}));
    cls->add_option("--config", cls_config, "Experiment config JSON");
    cls->add_option("--manifest", manifest, "Corpus manifest JSON");
    cls->add_option("--class-a", class_a, "Folder of low-side images (birds, dogs)");
    cls->add_option("--class-b", class_b, "Folder of high-side images (cats)");
    cls->add_option("--epochs", cls_epochs, "Training epochs");
    cls->add_option("--qubits", cls_qubits, "Qubit count");
    cls->add_option("--letters", cls_letters, "Letters per class");
    cls->add_option("--holdout", holdout, "Hold out every k-th example (0 = off)");
    cls->add_option("--seed", seed, "Seed");
    cls->add_option("--cache", cache_dir, "Transform cache folder");
    cls->add_flag("--until-perfect", until_perfect, "Stop once every training example is correct");

    // evaluate
    auto* eval = app.add_subcommand("evaluate", "Classify a corpus with a saved network");
    std::string net_path, eval_manifest;
    double separator = 0.25;
    eval->add_option("--network", net_path, "network.json from a classifier run")->required();
    eval->add_option("--manifest", eval_manifest, "Corpus manifest JSON")->required();
    eval->add_option("--separator", separator, "Separator on tr(Z..Z rho)^2");
    eval->add_option("--cache", cache_dir, "Transform cache folder");

    // gradcheck
    auto* grad = app.add_subcommand("gradcheck", "Adjoint vs finite-difference gradients");
    int grad_networks = 20;
    grad->add_option("--networks", grad_networks, "Random networks per decay setting")->check(CLI::PositiveNumber);
    grad->add_option("--seed", seed, "Seed");

    // run
    auto* run = app.add_subcommand("run", "Run an experiment from a config file");
    std::string run_config;
    run->add_option("--config", run_config, "Experiment config JSON")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }
    if (threads > 0) setenv("QDTN_THREADS", std::to_string(threads).c_str(), 1);

    try {
        if (*letters) {
            const auto m = write_letter_corpus(letters_dir, letters_per_class, letter_size);
            std::cout << json{{"images", m.size()}, {"manifest", (fs::path(letters_dir) / "manifest.json").string()}}.dump(2)
                      << std::endl;
        } else if (*transform) {
            const DensityMatrix rho = cached_image_state(input, qubits, cache_dir);
            const std::string body = to_json(rho).dump(2);
            if (state_out.empty()) {
                std::cout << body << std::endl;
            } else {
                std::ofstream(state_out) << body << "\n";
            }
        } else if (*gan) {
            ExperimentConfig cfg = gan_config.empty() ? ExperimentConfig::for_kind("gan-product") : load_config(gan_config);
            if (cfg.kind != "gan-product") return fail("InvalidArgument", "config kind is not gan-product");
            if (gan->count("--seed")) cfg.seed = seed;
            if (gan_epochs >= 0) cfg.gan.gan_epochs = gan_epochs;
            print_result(run_gan(cfg, out_root));
        } else if (*cls) {
            ExperimentConfig cfg = cls_config.empty() ? ExperimentConfig::for_kind(cls_kind) : load_config(cls_config);
            if (!cfg.is_classifier()) return fail("InvalidArgument", "config kind is not a classifier run");
            if (cls->count("--seed")) cfg.seed = seed;
            if (!manifest.empty()) cfg.classifier.manifest = manifest;
            if (!class_a.empty()) cfg.classifier.class_a_dir = class_a;
            if (!class_b.empty()) cfg.classifier.class_b_dir = class_b;
            if (cls_epochs >= 0) cfg.classifier.epochs = cls_epochs;
            if (cls_qubits > 0) cfg.classifier.n_qubits = cls_qubits;
            if (cls_letters > 0) cfg.classifier.letters_per_class = cls_letters;
            if (holdout > 0) cfg.classifier.holdout_every = holdout;
            if (!cache_dir.empty()) cfg.classifier.cache_dir = cache_dir;
            if (until_perfect) cfg.classifier.stop_when_perfect = true;
            print_result(run_classifier(cfg, out_root));
        } else if (*eval) {
            std::ifstream nin(net_path);
            if (!nin) return fail("IoError", net_path + ": cannot open");
            const QuantumNetwork net = network_from_json(json::parse(nin));
            std::ifstream min(eval_manifest);
            if (!min) return fail("IoError", eval_manifest + ": cannot open");
            const auto entries = corpus_from_json(json::parse(min), fs::path(eval_manifest).parent_path());
            SeparatorGeometry geo;
            geo.separator = separator;
            const ClassifierReport r = evaluate(net, geo, load_corpus(entries, net.n_qubits(), cache_dir));
            json rows = json::array();
            for (std::size_t i = 0; i < r.ids.size(); ++i)
                rows.push_back({{"id", r.ids[i]}, {"label", to_string(r.labels[i])}, {"output", r.outputs[i]},
                                {"verdict", to_string(r.verdicts[i])}, {"correct", static_cast<bool>(r.correct[i])}});
            std::cout << json{{"percent_correct", r.percent_correct}, {"examples", rows}}.dump(2) << std::endl;
        } else if (*grad) {
            ExperimentConfig cfg = ExperimentConfig::for_kind("gradcheck");
            cfg.seed = seed;
            cfg.gradcheck.n_networks = grad_networks;
            const RunResult r = run_gradcheck(cfg, out_root);
            print_result(r);
            if (!r.summary.at("pass").get<bool>()) return fail("GradcheckFailed", "relative error above tolerance");
        } else if (*run) {
            const RunResult r = run_experiment(load_config(run_config), out_root);
            print_result(r);
            if (r.summary.contains("pass") && !r.summary.at("pass").get<bool>())
                return fail("GradcheckFailed", "relative error above tolerance");
        }
    } catch (const Error& e) {
        return fail(e.kind(), e.what());
    } catch (const json::exception& e) {
        return fail("JsonError", e.what());
    } catch (const std::exception& e) {
        return fail("Failure", e.what());
    }
    return 0;
}
