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
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include <gtest/gtest.h>

#include "qdtn/harness.hpp"

using namespace qdtn;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("qdtn_harness_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::map<std::string, std::string> tree(const fs::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = slurp(e.path());
    return out;
}

ExperimentConfig tiny_gan() {
    ExperimentConfig c = ExperimentConfig::for_kind("gan-product");
    c.seed = 9;
    c.network.n_steps = 40;
    c.gan.n_reals = 6;
    c.gan.n_fakes = 6;
    c.gan.n_entangled = 4;
    c.gan.stage1_epochs = 2;
    c.gan.stage2_epochs = 3;
    c.gan.stage3_epochs = 2;
    c.gan.gan_epochs = 2;
    return c;
}

}  // namespace

TEST(Config, JsonRoundTripPreservesEveryField) {
    ExperimentConfig c = ExperimentConfig::for_kind("letters-4q");
    c.seed = 77;
    c.network.t_final = 0.75;
    c.lm.lambda0 = 3e-2;
    c.gan.thresholds = {0.1, 0.2, 0.3};
    c.gan.style_per_sample = true;
    c.classifier.holdout_every = 3;
    c.classifier.cache_dir = "cache";
    c.gradcheck.fd_step = 2e-6;
    const ExperimentConfig back = config_from_json(to_json(c));
    EXPECT_EQ(canonical(back), canonical(c));
    EXPECT_EQ(config_hash(back), config_hash(c));
}

TEST(Config, MissingFieldsTakeDefaults) {
    const ExperimentConfig c = config_from_json(json{{"kind", "letters-3q"}});
    EXPECT_EQ(canonical(c), canonical(ExperimentConfig::for_kind("letters-3q")));
    EXPECT_THROW(ExperimentConfig::for_kind("mnist"), Error);
}

TEST(Config, HashIsStableAndSensitive) {
    const ExperimentConfig a = ExperimentConfig::for_kind("gan-product");
    EXPECT_EQ(config_hash(a), config_hash(ExperimentConfig::for_kind("gan-product")));
    EXPECT_EQ(config_hash(a).size(), 16u);
    ExperimentConfig b = a;
    b.seed += 1;
    EXPECT_NE(config_hash(a), config_hash(b));
    b = a;
    b.gan.style_rate *= 1.0 + 1e-12;
    EXPECT_NE(config_hash(a), config_hash(b));
}

TEST(Artifacts, CsvStartsWithTheConfigLine) {
    const fs::path dir = scratch("csv");
    const ExperimentConfig c = ExperimentConfig::for_kind("gradcheck");
    {
        CsvWriter csv(dir / "x.csv", c, {"a", "b"});
        csv.row({"1", fmt(0.1)});
    }
    std::ifstream in(dir / "x.csv");
    std::string l1, l2, l3;
    std::getline(in, l1);
    std::getline(in, l2);
    std::getline(in, l3);
    EXPECT_EQ(l1, "# config=" + canonical(c));
    EXPECT_EQ(l2, "a,b");
    EXPECT_EQ(l3, "1,0.10000000000000001");
    EXPECT_EQ(config_from_json(json::parse(l1.substr(9))).seed, c.seed);
}

TEST(Artifacts, DirectoryNameCarriesKindAndHash) {
    const fs::path root = scratch("dir");
    const ExperimentConfig c = ExperimentConfig::for_kind("gradcheck");
    const ArtifactDir d = ArtifactDir::create(root, c);
    EXPECT_EQ(d.path.filename().string(), "gradcheck-" + config_hash(c));
    std::ifstream in(d.path / "config.json");
    EXPECT_EQ(canonical(config_from_json(json::parse(in))), canonical(c));
}

TEST(ImageCache, HitReturnsTheSameState) {
    const fs::path dir = scratch("cache");
    write_letter_corpus(dir / "img", 1, 32);
    const std::string img = (dir / "img" / letter_manifest(1).front().path).string();
    const std::string cache = (dir / "c").string();
    const DensityMatrix cold = cached_image_state(img, 2, cache);
    ASSERT_EQ(std::distance(fs::directory_iterator(cache), fs::directory_iterator{}), 1);
    const DensityMatrix warm = cached_image_state(img, 2, cache);
    const DensityMatrix direct = cached_image_state(img, 2, "");
    EXPECT_EQ(warm.matrix(), cold.matrix());
    EXPECT_EQ(direct.matrix(), cold.matrix());
    // A different qubit count is a different entry.
    cached_image_state(img, 3, cache);
    EXPECT_EQ(std::distance(fs::directory_iterator(cache), fs::directory_iterator{}), 2);
}

TEST(ImageCache, FolderManifestLabelsByFolder) {
    const fs::path dir = scratch("folders");
    write_letter_corpus(dir / "img", 2, 32);
    fs::create_directories(dir / "a");
    fs::create_directories(dir / "b");
    for (const auto& e : letter_manifest(2))
        fs::copy_file(dir / "img" / e.path, dir / (e.label == "ClassA" ? "a" : "b") / fs::path(e.path).filename());
    const auto m = folder_manifest(dir / "a", dir / "b");
    ASSERT_EQ(m.size(), 4u);
    EXPECT_EQ(m[0].label, "ClassA");
    EXPECT_EQ(m[3].label, "ClassB");
    EXPECT_THROW(folder_manifest(dir / "missing", dir / "b"), Error);
}

TEST(Gradcheck, AdjointMatchesFiniteDifferences) {
    ExperimentConfig c = ExperimentConfig::for_kind("gradcheck");
    c.gradcheck.n_networks = 3;
    const RunResult r = run_gradcheck(c, scratch("grad"));
    EXPECT_TRUE(r.summary.at("pass").get<bool>());
    EXPECT_LE(r.summary.at("max_relative_error_unitary").get<double>(), c.gradcheck.unitary_tolerance);
    EXPECT_LE(r.summary.at("max_relative_error_lindblad").get<double>(), c.gradcheck.lindblad_tolerance);
}

TEST(Gradcheck, RelativeErrorFloorsTinyComponents) {
    RealVector ref(3), got(3);
    ref << 1.0, 1e-9, -2.0;
    got << 1.0, 2e-9, -2.0;
    EXPECT_NEAR(relative_error(got, ref), 1e-9 / 2e-3, 1e-15);
    got(0) = 1.1;
    EXPECT_NEAR(relative_error(got, ref), 0.1, 1e-12);
}

TEST(Runs, ClassifierRerunIsByteIdentical) {
    ExperimentConfig c = ExperimentConfig::for_kind("letters-3q");
    c.classifier.letters_per_class = 2;
    c.classifier.epochs = 3;
    c.classifier.holdout_every = 4;
    const RunResult a = run_experiment(c, scratch("cls_a"));
    const RunResult b = run_experiment(c, scratch("cls_b"));
    EXPECT_EQ(a.dir.filename(), b.dir.filename());
    EXPECT_EQ(tree(a.dir), tree(b.dir));
    EXPECT_TRUE(fs::exists(a.dir / "network.json"));
    EXPECT_TRUE(a.summary.contains("holdout_percent_correct"));
}

TEST(Runs, GanRerunIsByteIdenticalAndComplete) {
    const ExperimentConfig c = tiny_gan();
    GanRun run;
    const RunResult a = run_gan(c, scratch("gan_a"), &run);
    const RunResult b = run_experiment(c, scratch("gan_b"));
    const auto ta = tree(a.dir);
    EXPECT_EQ(ta, tree(b.dir));
    for (const char* f : {"config.json", "summary.json", "stage1_generator.csv", "stage2_styles.csv",
                          "stage3_discriminator.csv", "gan_metrics.csv", "fakes_pre_gan.json", "fakes_post_gan.json",
                          "networks.json"})
        EXPECT_TRUE(ta.count(f)) << f;
    EXPECT_EQ(run.stage2.size(), 4u);
    EXPECT_EQ(run.metrics.epochs.size(), 3u);
    // One row per plane plus the aggregate, for entries 0..gan_epochs.
    const std::string& metrics = ta.at("gan_metrics.csv");
    EXPECT_EQ(std::count(metrics.begin(), metrics.end(), '\n'), 2 + 4 * 3);
}

TEST(Runs, SeedChangesTheArtifacts) {
    ExperimentConfig c = tiny_gan();
    const RunResult a = run_gan(c, scratch("seed_a"));
    c.seed += 1;
    const RunResult b = run_gan(c, scratch("seed_b"));
    const auto body = [](const fs::path& p) {
        const std::string s = slurp(p);
        return s.substr(s.find('\n'));
    };
    EXPECT_NE(body(a.dir / "stage1_generator.csv"), body(b.dir / "stage1_generator.csv"));
}

TEST(Runs, ThreadCountDoesNotChangeTheBytes) {
    const ExperimentConfig c = tiny_gan();
    setenv("QDTN_THREADS", "1", 1);
    const RunResult a = run_gan(c, scratch("threads_1"));
    setenv("QDTN_THREADS", "3", 1);
    const RunResult b = run_gan(c, scratch("threads_3"));
    unsetenv("QDTN_THREADS");
    EXPECT_EQ(tree(a.dir), tree(b.dir));
}
