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

// Experiment configs, artifact directories and metric CSVs. Every run is
// named by a hash of its canonical config; every artifact carries the config.

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qdtn/classifier.hpp"
#include "qdtn/image_io.hpp"
#include "qdtn/letters.hpp"
#include "qdtn/qgan.hpp"

namespace qdtn {

namespace fs = std::filesystem;
using nlohmann::json;

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
    return buf;
}

/// Shortest round-trip decimal form used in every CSV.
inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// ---------------------------------------------------------------------------
// Config

struct NetworkConfig {
    int n_harmonics = 3;
    double t_final = 1.0;
    int n_steps = 200;
    double init_scale = 0.5;
};

struct GanConfig {
    int n_reals = 80;
    int n_fakes = 80;
    std::array<double, 3> thresholds{0.25, 0.25, 0.25};
    double real_target = 0.05;
    double fake_target = 0.6;
    int stage1_epochs = 30;
    /// Stage 1 accepts only downhill steps by default.
    double stage1_uphill_tolerance = 0.0;
    int stage2_epochs = 300;
    double style_rate = 1e-2;
    double style_momentum = 0.9;
    bool style_per_sample = false;
    int stage3_epochs = 40;
    int gan_epochs = 50;
    int disc_epochs_per_round = 1;
    /// The generator takes several small momentum steps per discriminator epoch.
    int gen_epochs_per_round = 10;
    /// Size of the entangled diagnostic set (concurrence >= entangled_min_concurrence).
    int n_entangled = 80;
    double entangled_min_concurrence = 0.3;
};

struct ClassifierConfig {
    int letters_per_class = 6;
    int n_qubits = 3;
    int epochs = 100;
    bool stop_when_perfect = false;
    double separator = 0.25;
    double target_low = 0.05;
    double target_high = 0.6;
    int image_size = 64;
    /// Corpus manifest ([{path, label}]) for image corpora; letters are rendered when empty.
    std::string manifest;
    /// Alternative to a manifest: one folder per class.
    std::string class_a_dir;
    std::string class_b_dir;
    /// 0 = train and evaluate on the whole corpus; k > 0 holds out every k-th example.
    int holdout_every = 0;
    std::string cache_dir;
};

struct GradcheckConfig {
    int n_networks = 20;
    double fd_step = 1e-5;
    double unitary_tolerance = 1e-5;
    double lindblad_tolerance = 1e-4;
    int n_steps = 50;
};

struct ExperimentConfig {
    /// gan-product | letters-3q | letters-4q | birds-cats | dogs-cats | gradcheck
    std::string kind = "gan-product";
    std::uint64_t seed = 2024;
    NetworkConfig network;
    LmOptions lm;
    GanConfig gan;
    ClassifierConfig classifier;
    GradcheckConfig gradcheck;

    /// Defaults that go with a kind.
    static ExperimentConfig for_kind(const std::string& kind) {
        ExperimentConfig c;
        c.kind = kind;
        if (kind == "letters-3q") {
            c.classifier.letters_per_class = 6;
            c.classifier.n_qubits = 3;
        } else if (kind == "letters-4q") {
            c.classifier.letters_per_class = 8;
            c.classifier.n_qubits = 4;
        } else if (kind == "birds-cats" || kind == "dogs-cats") {
            c.classifier.n_qubits = 4;
        } else if (kind != "gan-product" && kind != "gradcheck") {
            throw Error("InvalidArgument", "unknown experiment kind " + kind);
        }
        return c;
    }

    bool is_classifier() const { return kind != "gan-product" && kind != "gradcheck"; }
};

inline json to_json(const LmOptions& o) {
    return {{"mode", o.mode == LmOptions::Mode::LevenbergMarquardt ? "lm" : "gd"},
            {"lambda0", o.lambda0},
            {"eta", o.eta},
            {"lambda_up", o.lambda_up},
            {"lambda_down", o.lambda_down},
            {"lambda_min", o.lambda_min},
            {"lambda_max", o.lambda_max},
            {"max_retries", o.max_retries},
            {"uphill_tolerance", o.uphill_tolerance},
            {"identity_damping", o.identity_damping}};
}

inline LmOptions lm_options_from_json(const json& j) {
    LmOptions o;
    const std::string mode = j.value("mode", std::string("lm"));
    if (mode != "lm" && mode != "gd") throw Error("InvalidArgument", "lm.mode must be lm or gd");
    o.mode = mode == "lm" ? LmOptions::Mode::LevenbergMarquardt : LmOptions::Mode::GradientDescent;
    o.lambda0 = j.value("lambda0", o.lambda0);
    o.eta = j.value("eta", o.eta);
    o.lambda_up = j.value("lambda_up", o.lambda_up);
    o.lambda_down = j.value("lambda_down", o.lambda_down);
    o.lambda_min = j.value("lambda_min", o.lambda_min);
    o.lambda_max = j.value("lambda_max", o.lambda_max);
    o.max_retries = j.value("max_retries", o.max_retries);
    o.uphill_tolerance = j.value("uphill_tolerance", o.uphill_tolerance);
    o.identity_damping = j.value("identity_damping", o.identity_damping);
    return o;
}

inline json to_json(const ExperimentConfig& c) {
    const auto& g = c.gan;
    const auto& k = c.classifier;
    return {
        {"kind", c.kind},
        {"seed", c.seed},
        {"network",
         {{"n_harmonics", c.network.n_harmonics},
          {"t_final", c.network.t_final},
          {"n_steps", c.network.n_steps},
          {"init_scale", c.network.init_scale}}},
        {"lm", to_json(c.lm)},
        {"gan",
         {{"n_reals", g.n_reals},
          {"n_fakes", g.n_fakes},
          {"thresholds", g.thresholds},
          {"real_target", g.real_target},
          {"fake_target", g.fake_target},
          {"stage1_epochs", g.stage1_epochs},
          {"stage1_uphill_tolerance", g.stage1_uphill_tolerance},
          {"stage2_epochs", g.stage2_epochs},
          {"style_rate", g.style_rate},
          {"style_momentum", g.style_momentum},
          {"style_per_sample", g.style_per_sample},
          {"stage3_epochs", g.stage3_epochs},
          {"gan_epochs", g.gan_epochs},
          {"disc_epochs_per_round", g.disc_epochs_per_round},
          {"gen_epochs_per_round", g.gen_epochs_per_round},
          {"n_entangled", g.n_entangled},
          {"entangled_min_concurrence", g.entangled_min_concurrence}}},
        {"classifier",
         {{"letters_per_class", k.letters_per_class},
          {"n_qubits", k.n_qubits},
          {"epochs", k.epochs},
          {"stop_when_perfect", k.stop_when_perfect},
          {"separator", k.separator},
          {"target_low", k.target_low},
          {"target_high", k.target_high},
          {"image_size", k.image_size},
          {"manifest", k.manifest},
          {"class_a_dir", k.class_a_dir},
          {"class_b_dir", k.class_b_dir},
          {"holdout_every", k.holdout_every},
          {"cache_dir", k.cache_dir}}},
        {"gradcheck",
         {{"n_networks", c.gradcheck.n_networks},
          {"fd_step", c.gradcheck.fd_step},
          {"unitary_tolerance", c.gradcheck.unitary_tolerance},
          {"lindblad_tolerance", c.gradcheck.lindblad_tolerance},
          {"n_steps", c.gradcheck.n_steps}}},
    };
}

/// Missing fields take the defaults of the config's kind.
inline ExperimentConfig config_from_json(const json& j) {
    ExperimentConfig c = ExperimentConfig::for_kind(j.value("kind", std::string("gan-product")));
    c.seed = j.value("seed", c.seed);
    if (j.contains("network")) {
        const json& n = j["network"];
        c.network.n_harmonics = n.value("n_harmonics", c.network.n_harmonics);
        c.network.t_final = n.value("t_final", c.network.t_final);
        c.network.n_steps = n.value("n_steps", c.network.n_steps);
        c.network.init_scale = n.value("init_scale", c.network.init_scale);
    }
    if (j.contains("lm")) c.lm = lm_options_from_json(j["lm"]);
    if (j.contains("gan")) {
        const json& n = j["gan"];
        auto& g = c.gan;
        g.n_reals = n.value("n_reals", g.n_reals);
        g.n_fakes = n.value("n_fakes", g.n_fakes);
        g.thresholds = n.value("thresholds", g.thresholds);
        g.real_target = n.value("real_target", g.real_target);
        g.fake_target = n.value("fake_target", g.fake_target);
        g.stage1_epochs = n.value("stage1_epochs", g.stage1_epochs);
        g.stage1_uphill_tolerance = n.value("stage1_uphill_tolerance", g.stage1_uphill_tolerance);
        g.stage2_epochs = n.value("stage2_epochs", g.stage2_epochs);
        g.style_rate = n.value("style_rate", g.style_rate);
        g.style_momentum = n.value("style_momentum", g.style_momentum);
        g.style_per_sample = n.value("style_per_sample", g.style_per_sample);
        g.stage3_epochs = n.value("stage3_epochs", g.stage3_epochs);
        g.gan_epochs = n.value("gan_epochs", g.gan_epochs);
        g.disc_epochs_per_round = n.value("disc_epochs_per_round", g.disc_epochs_per_round);
        g.gen_epochs_per_round = n.value("gen_epochs_per_round", g.gen_epochs_per_round);
        g.n_entangled = n.value("n_entangled", g.n_entangled);
        g.entangled_min_concurrence = n.value("entangled_min_concurrence", g.entangled_min_concurrence);
    }
    if (j.contains("classifier")) {
        const json& n = j["classifier"];
        auto& k = c.classifier;
        k.letters_per_class = n.value("letters_per_class", k.letters_per_class);
        k.n_qubits = n.value("n_qubits", k.n_qubits);
        k.epochs = n.value("epochs", k.epochs);
        k.stop_when_perfect = n.value("stop_when_perfect", k.stop_when_perfect);
        k.separator = n.value("separator", k.separator);
        k.target_low = n.value("target_low", k.target_low);
        k.target_high = n.value("target_high", k.target_high);
        k.image_size = n.value("image_size", k.image_size);
        k.manifest = n.value("manifest", k.manifest);
        k.class_a_dir = n.value("class_a_dir", k.class_a_dir);
        k.class_b_dir = n.value("class_b_dir", k.class_b_dir);
        k.holdout_every = n.value("holdout_every", k.holdout_every);
        k.cache_dir = n.value("cache_dir", k.cache_dir);
    }
    if (j.contains("gradcheck")) {
        const json& n = j["gradcheck"];
        auto& g = c.gradcheck;
        g.n_networks = n.value("n_networks", g.n_networks);
        g.fd_step = n.value("fd_step", g.fd_step);
        g.unitary_tolerance = n.value("unitary_tolerance", g.unitary_tolerance);
        g.lindblad_tolerance = n.value("lindblad_tolerance", g.lindblad_tolerance);
        g.n_steps = n.value("n_steps", g.n_steps);
    }
    return c;
}

/// Compact canonical form; object keys are sorted by the JSON library.
inline std::string canonical(const ExperimentConfig& c) { return to_json(c).dump(); }

inline std::string config_hash(const ExperimentConfig& c) { return hex64(fnv1a(canonical(c))); }

inline NetworkShape network_shape(const ExperimentConfig& c, int n_qubits, bool lindblad) {
    NetworkShape s;
    s.n_qubits = n_qubits;
    s.n_harmonics = c.network.n_harmonics;
    s.t_final = c.network.t_final;
    s.n_steps = c.network.n_steps;
    s.lindblad = lindblad;
    return s;
}

// ---------------------------------------------------------------------------
// Artifacts

/// A CSV whose first line is "# config=<canonical config>".
class CsvWriter {
public:
    CsvWriter(const fs::path& path, const ExperimentConfig& cfg, const std::vector<std::string>& header) : out_(path) {
        if (!out_) throw Error("IoError", path.string() + ": cannot open for writing");
        out_ << "# config=" << canonical(cfg) << "\n";
        row(header);
    }

    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
        out_ << "\n";
    }

private:
    std::ofstream out_;
};

struct ArtifactDir {
    fs::path path;

    static ArtifactDir create(const fs::path& root, const ExperimentConfig& cfg) {
        ArtifactDir d{root / (cfg.kind + "-" + config_hash(cfg))};
        fs::create_directories(d.path);
        std::ofstream(d.path / "config.json") << to_json(cfg).dump(2) << "\n";
        return d;
    }

    fs::path operator/(const std::string& name) const { return path / name; }

    void write_json(const std::string& name, json body, const ExperimentConfig& cfg) const {
        body["config"] = to_json(cfg);
        std::ofstream out(path / name);
        if (!out) throw Error("IoError", (path / name).string() + ": cannot open for writing");
        out << body.dump(2) << "\n";
    }
};

inline void write_epoch_reports(const fs::path& path, const ExperimentConfig& cfg, const std::vector<EpochReport>& reps) {
    CsvWriter csv(path, cfg, {"epoch", "rms_before", "rms_after", "lambda", "retries", "accepted"});
    for (const auto& r : reps)
        csv.row({std::to_string(r.epoch), fmt(r.rms_before), fmt(r.rms_after), fmt(r.lambda), std::to_string(r.retries),
                 r.accepted() ? "1" : "0"});
}

// ---------------------------------------------------------------------------
// Image corpora

/// Transformed states cached as density JSON keyed by file content hash and
/// qubit count. An empty cache dir disables caching.
inline DensityMatrix cached_image_state(const std::string& image_path, int n_qubits, const std::string& cache_dir) {
    if (cache_dir.empty()) return image_to_state(load_image(image_path), n_qubits);
    const std::string bytes = read_file_bytes(image_path);
    const fs::path entry = fs::path(cache_dir) / (hex64(fnv1a(bytes)) + "-n" + std::to_string(n_qubits) + ".json");
    if (fs::exists(entry)) {
        std::ifstream in(entry);
        return density_from_json(json::parse(in));
    }
    DensityMatrix rho = image_to_state(load_image(image_path), n_qubits);
    fs::create_directories(cache_dir);
    std::ofstream(entry) << to_json(rho).dump() << "\n";
    return rho;
}

/// Images in a folder, sorted by file name.
inline std::vector<fs::path> image_files(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw Error("IoError", dir.string() + ": not a directory");
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        std::string ext = e.path().extension().string();
        for (auto& ch : ext) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
        if (ext == ".png" || ext == ".jpg" || ext == ".jpeg") out.push_back(e.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

inline std::vector<CorpusEntry> folder_manifest(const fs::path& class_a, const fs::path& class_b) {
    std::vector<CorpusEntry> out;
    for (const auto& p : image_files(class_a)) out.push_back({"A_" + p.stem().string(), p.string(), "ClassA"});
    for (const auto& p : image_files(class_b)) out.push_back({"B_" + p.stem().string(), p.string(), "ClassB"});
    return out;
}

inline std::vector<LabeledState> load_corpus(const std::vector<CorpusEntry>& manifest, int n_qubits,
                                             const std::string& cache_dir) {
    std::vector<LabeledState> out;
    for (const auto& e : manifest)
        out.push_back({cached_image_state(e.path, n_qubits, cache_dir), label_from_string(e.label), e.id});
    return out;
}

// ---------------------------------------------------------------------------
// Runs

struct RunResult {
    fs::path dir;
    json summary;
};

inline void write_classifier_reports(const ArtifactDir& dir, const ExperimentConfig& cfg,
                                     const std::vector<ClassifierReport>& reps,
                                     const std::vector<ClassifierReport>& holdout) {
    CsvWriter per(dir / "classifier_epochs.csv", cfg,
                  {"epoch", "example_id", "label", "output", "tier", "verdict", "correct"});
    for (const auto& r : reps)
        for (std::size_t i = 0; i < r.ids.size(); ++i)
            per.row({std::to_string(r.epoch), r.ids[i], to_string(r.labels[i]), fmt(r.outputs[i]), to_string(r.tiers[i]),
                     to_string(r.verdicts[i]), r.correct[i] ? "1" : "0"});
    std::vector<std::string> header{"epoch", "percent_correct", "rms", "lambda"};
    if (!holdout.empty()) header.push_back("holdout_percent_correct");
    CsvWriter agg(dir / "classifier_aggregate.csv", cfg, header);
    for (std::size_t e = 0; e < reps.size(); ++e) {
        std::vector<std::string> row{std::to_string(reps[e].epoch), fmt(reps[e].percent_correct), fmt(reps[e].rms),
                                     fmt(reps[e].lambda)};
        if (!holdout.empty()) row.push_back(fmt(holdout[e].percent_correct));
        agg.row(row);
    }
}

inline RunResult run_classifier(const ExperimentConfig& cfg, const fs::path& out_root) {
    const auto& k = cfg.classifier;
    const ArtifactDir dir = ArtifactDir::create(out_root, cfg);
    std::vector<CorpusEntry> manifest;
    if (!k.manifest.empty()) {
        std::ifstream in(k.manifest);
        if (!in) throw Error("IoError", k.manifest + ": cannot open manifest");
        manifest = corpus_from_json(json::parse(in), fs::path(k.manifest).parent_path());
    } else if (!k.class_a_dir.empty() || !k.class_b_dir.empty()) {
        manifest = folder_manifest(k.class_a_dir, k.class_b_dir);
    } else if (cfg.kind == "letters-3q" || cfg.kind == "letters-4q") {
        manifest = write_letter_corpus(dir / "corpus", k.letters_per_class, k.image_size);
        for (auto& e : manifest) e.path = (dir / "corpus" / e.path).string();
    } else {
        throw Error("InvalidArgument", cfg.kind + " needs classifier.manifest or class_a_dir/class_b_dir");
    }
    const std::vector<LabeledState> all = load_corpus(manifest, k.n_qubits, k.cache_dir);
    std::vector<LabeledState> train, held;
    for (std::size_t i = 0; i < all.size(); ++i)
        (k.holdout_every > 0 && static_cast<int>(i % static_cast<std::size_t>(k.holdout_every)) == k.holdout_every - 1
             ? held
             : train)
            .push_back(all[i]);

    RandomSource rng(cfg.seed);
    QuantumNetwork net = QuantumNetwork::random(network_shape(cfg, k.n_qubits, true), rng, cfg.network.init_scale);
    const SeparatorGeometry geo{k.separator, k.target_low, k.target_high};
    ClassifierTrainOptions opt;
    opt.epochs = k.epochs;
    opt.lm = cfg.lm;
    opt.stop_when_perfect = k.stop_when_perfect;
    const auto reps = train_binary(net, train, geo, opt);
    std::vector<ClassifierReport> holdout;
    if (!held.empty()) {
        // Hold-out scores for the final network only; earlier rows repeat it.
        const ClassifierReport h = evaluate(net, geo, held);
        holdout.assign(reps.size(), h);
    }
    write_classifier_reports(dir, cfg, reps, holdout);
    std::ofstream(dir / "network.json") << to_json(net).dump(2) << "\n";

    json summary{{"kind", cfg.kind},
                 {"examples", train.size()},
                 {"epochs_run", reps.back().epoch},
                 {"initial_percent_correct", reps.front().percent_correct},
                 {"final_percent_correct", reps.back().percent_correct}};
    if (!held.empty()) summary["holdout_percent_correct"] = holdout.back().percent_correct;
    dir.write_json("summary.json", summary, cfg);
    return {dir.path, summary};
}

struct GanRun {
    std::vector<EpochReport> stage1;
    std::vector<StyleEpoch> stage2;
    std::vector<DiscriminatorEpoch> stage3;
    GanMetrics metrics;
    PlaneScores entangled_before;
    PlaneScores entangled_after;
};

inline void write_gan_artifacts(const ArtifactDir& dir, const ExperimentConfig& cfg, const GanRun& run) {
    write_epoch_reports(dir / "stage1_generator.csv", cfg, run.stage1);
    {
        CsvWriter csv(dir / "stage2_styles.csv", cfg, {"epoch", "real_index", "rms"});
        for (const auto& e : run.stage2)
            for (std::size_t i = 0; i < e.per_real_rms.size(); ++i)
                csv.row({std::to_string(e.epoch), std::to_string(i), fmt(e.per_real_rms[i])});
    }
    {
        CsvWriter csv(dir / "stage3_discriminator.csv", cfg,
                      {"epoch", "rms_before", "rms_after", "lambda", "retries", "accepted", "rms_xx", "rms_yy", "rms_zz",
                       "real_pct_xx", "real_pct_yy", "real_pct_zz", "real_pct_aggregate"});
        for (const auto& e : run.stage3)
            csv.row({std::to_string(e.lm.epoch), fmt(e.lm.rms_before), fmt(e.lm.rms_after), fmt(e.lm.lambda),
                     std::to_string(e.lm.retries), e.lm.accepted() ? "1" : "0", fmt(e.plane_rms[0]), fmt(e.plane_rms[1]),
                     fmt(e.plane_rms[2]), fmt(e.reals.plane_pct[0]), fmt(e.reals.plane_pct[1]), fmt(e.reals.plane_pct[2]),
                     fmt(e.reals.aggregate_pct)});
    }
    CsvWriter csv(dir / "gan_metrics.csv", cfg, {"epoch", "plane", "real_pct", "fake_pct", "real_pct_live"});
    static const char* planes[] = {"XX", "YY", "ZZ"};
    for (const auto& e : run.metrics.epochs) {
        for (int k = 0; k < 3; ++k)
            csv.row({std::to_string(e.epoch), planes[k], fmt(e.reals.plane_pct[k]), fmt(e.fakes.plane_pct[k]),
                     fmt(e.reals_live.plane_pct[k])});
        csv.row({std::to_string(e.epoch), "aggregate", fmt(e.reals.aggregate_pct), fmt(e.fakes.aggregate_pct),
                 fmt(e.reals_live.aggregate_pct)});
    }
}

inline json density_dump(const std::vector<DensityMatrix>& states, const DiscriminatorHead& head,
                         const QuantumNetwork& disc) {
    json arr = json::array();
    const auto d = discriminate_all(head, disc, states);
    for (std::size_t i = 0; i < states.size(); ++i)
        arr.push_back({{"index", i}, {"state", to_json(states[i])}, {"outputs", d[i].outputs},
                       {"verdict", to_string(d[i].verdict)}});
    return arr;
}

/// Stages 1-3 followed by the minimax loop, with artifacts.
inline RunResult run_gan(const ExperimentConfig& cfg, const fs::path& out_root, GanRun* out = nullptr) {
    const auto& g = cfg.gan;
    const ArtifactDir dir = ArtifactDir::create(out_root, cfg);
    const RandomSource root(cfg.seed);
    const NetworkShape shape = network_shape(cfg, 2, false);

    RandomSource data = root.fork(1);
    std::vector<DensityMatrix> reals;
    for (int i = 0; i < g.n_reals; ++i) reals.push_back(DensityMatrix::from_pure(random_product_state(data)));
    RandomSource ent = root.fork(6);
    std::vector<DensityMatrix> entangled;
    for (int i = 0; i < g.n_entangled; ++i)
        entangled.push_back(DensityMatrix::from_pure(random_entangled_state(ent, g.entangled_min_concurrence)));

    DiscriminatorHead head;
    head.thresholds = g.thresholds;
    head.real_target = g.real_target;
    head.fake_target = g.fake_target;
    head.validate();

    GanRun run;
    RandomSource gr = root.fork(2);
    QuantumNetwork gen = QuantumNetwork::random(shape, gr, cfg.network.init_scale);
    LmOptions lm1 = cfg.lm;
    lm1.uphill_tolerance = g.stage1_uphill_tolerance;
    run.stage1 = train_generator_common(gen, reals, g.stage1_epochs, lm1);

    const auto pools = disjoint_pools(root.fork(3), g.n_reals, g.n_fakes);
    RandomSource sr = root.fork(4);
    StyleNet style = StyleNet::random(style_param_count(shape), sr);
    StyleTrainOptions so{g.stage2_epochs, g.style_rate, g.style_momentum, g.style_per_sample};
    run.stage2 = train_styles(gen, style, pools.first, reals, so);

    RandomSource dr = root.fork(5);
    QuantumNetwork disc = QuantumNetwork::random(shape, dr, cfg.network.init_scale);
    run.stage3 = train_discriminator_initial(disc, head, reals, g.stage3_epochs, cfg.lm);

    const auto fakes_pre = generate_all(gen, style, pools.second);
    dir.write_json("fakes_pre_gan.json", {{"fakes", density_dump(fakes_pre, head, disc)}}, cfg);
    run.entangled_before = score(head, discriminate_all(head, disc, entangled), Verdict::Fake);

    GanLoopOptions lo;
    lo.epochs = g.gan_epochs;
    lo.disc_epochs_per_round = g.disc_epochs_per_round;
    lo.gen_epochs_per_round = g.gen_epochs_per_round;
    lo.disc_lm = cfg.lm;
    lo.style_rate = g.style_rate;
    lo.style_momentum = g.style_momentum;
    lo.style_per_sample = g.style_per_sample;
    run.metrics = gan_loop(gen, style, disc, head, pools.second, reals, lo);

    const auto fakes_post = generate_all(gen, style, pools.second);
    dir.write_json("fakes_post_gan.json", {{"fakes", density_dump(fakes_post, head, disc)}}, cfg);
    run.entangled_after = score(head, discriminate_all(head, disc, entangled), Verdict::Fake);
    write_gan_artifacts(dir, cfg, run);
    std::ofstream(dir / "networks.json") << json{{"generator", to_json(gen)}, {"discriminator", to_json(disc)}}.dump(2)
                                         << "\n";

    const auto& first = run.metrics.epochs.front();
    const auto& last = run.metrics.epochs.back();
    json summary{{"kind", cfg.kind},
                 {"stage1_rms_first", run.stage1.empty() ? 0.0 : run.stage1.front().rms_before},
                 {"stage1_rms_last", run.stage1.empty() ? 0.0 : run.stage1.back().rms_after},
                 {"stage2_rms_first", run.stage2.front().rms},
                 {"stage2_rms_last", run.stage2.back().rms},
                 {"stage3_real_pct", run.stage3.empty() ? 0.0 : run.stage3.back().reals.aggregate_pct},
                 {"gan_epochs", last.epoch},
                 {"fake_pct_initial", first.fakes.aggregate_pct},
                 {"fake_pct_final", last.fakes.aggregate_pct},
                 {"real_pct", last.reals.aggregate_pct},
                 {"real_pct_live_final", last.reals_live.aggregate_pct},
                 {"entangled_detected_pct_before", run.entangled_before.aggregate_pct},
                 {"entangled_detected_pct_after", run.entangled_after.aggregate_pct}};
    dir.write_json("summary.json", summary, cfg);
    if (out) *out = std::move(run);
    return {dir.path, summary};
}

/// Central differences in double precision on one example.
inline RealVector central_difference_gradient(const QuantumNetwork& net, const Example& ex, double h) {
    const RealVector w0 = net.parameter_vector();
    RealVector g(w0.size());
    for (Eigen::Index i = 0; i < w0.size(); ++i) {
        RealVector wp = w0, wm = w0;
        wp(i) += h;
        wm(i) -= h;
        g(i) = (example_loss(QuantumNetwork::from_vector(net.shape(), wp), ex) -
                example_loss(QuantumNetwork::from_vector(net.shape(), wm), ex)) /
               (wp(i) - wm(i));
    }
    return g;
}

/// Largest componentwise relative error, with components below 1e-3 of the
/// largest reference entry measured against that floor.
inline double relative_error(const RealVector& got, const RealVector& ref) {
    const double floor = 1e-3 * std::max(ref.cwiseAbs().maxCoeff(), 1e-300);
    double worst = 0.0;
    for (Eigen::Index i = 0; i < ref.size(); ++i)
        worst = std::max(worst, std::abs(got(i) - ref(i)) / std::max(std::abs(ref(i)), floor));
    return worst;
}

/// Adjoint vs finite-difference gradients on random 2-qubit networks, both
/// objective kinds, with and without decay.
inline RunResult run_gradcheck(const ExperimentConfig& cfg, const fs::path& out_root) {
    const auto& gc = cfg.gradcheck;
    const ArtifactDir dir = ArtifactDir::create(out_root, cfg);
    CsvWriter csv(dir / "gradcheck.csv", cfg, {"network", "lindblad", "objective", "max_relative_error", "tolerance", "pass"});
    double worst_unitary = 0.0, worst_lindblad = 0.0;
    bool ok = true;
    for (int i = 0; i < gc.n_networks; ++i) {
        for (bool lindblad : {false, true}) {
            NetworkShape s = network_shape(cfg, 2, lindblad);
            s.n_steps = gc.n_steps;
            RandomSource rng = RandomSource(cfg.seed).fork(static_cast<std::uint64_t>(2 * i + (lindblad ? 1 : 0)));
            const QuantumNetwork net = QuantumNetwork::random(s, rng, cfg.network.init_scale);
            const DensityMatrix rho0 = DensityMatrix::from_pure(random_pure_state(rng, 2));
            const DensityMatrix target = DensityMatrix::from_pure(random_pure_state(rng, 2));
            const std::vector<std::pair<std::string, Objective>> objectives{
                {"frobenius", Objective::target_state(target)}, {"measure", Objective::measure(MeasureOperator::zz(), 0.6)}};
            for (const auto& [name, obj] : objectives) {
                const Example ex{rho0, obj, 1.0};
                const double err = relative_error(example_gradient(net, ex), central_difference_gradient(net, ex, gc.fd_step));
                const double tol = lindblad ? gc.lindblad_tolerance : gc.unitary_tolerance;
                (lindblad ? worst_lindblad : worst_unitary) = std::max(lindblad ? worst_lindblad : worst_unitary, err);
                ok = ok && err <= tol;
                csv.row({std::to_string(i), lindblad ? "1" : "0", name, fmt(err), fmt(tol), err <= tol ? "1" : "0"});
            }
        }
    }
    json summary{{"kind", cfg.kind},
                 {"max_relative_error_unitary", worst_unitary},
                 {"max_relative_error_lindblad", worst_lindblad},
                 {"pass", ok}};
    dir.write_json("summary.json", summary, cfg);
    return {dir.path, summary};
}

inline RunResult run_experiment(const ExperimentConfig& cfg, const fs::path& out_root) {
    if (cfg.kind == "gan-product") return run_gan(cfg, out_root);
    if (cfg.kind == "gradcheck") return run_gradcheck(cfg, out_root);
    return run_classifier(cfg, out_root);
}

}  // namespace qdtn
