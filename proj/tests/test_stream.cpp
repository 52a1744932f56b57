#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "banditforest/stream.hpp"

using namespace bf;

namespace {

std::string write_temp(const char* name, const std::string& body) {
    const std::string path = std::string("/tmp/bf_stream_") + name;
    std::ofstream out(path);
    out << body;
    return path;
}

const char* kTinyDataset =
    "continuous categorical binary label\n"
    "1 a 0 yes\n"
    "2 b 1 no\n"
    "3 a 1 yes\n"
    "4 c 0 no\n"
    "5 b 0 yes\n"
    "6 a 1 no\n"
    "7 c 0 yes\n"
    "8 b 1 no\n"
    "9 a 0 yes\n"
    "10 c 1 no\n";

}  // namespace

TEST_CASE("dataset loader: schema, labels, vocabulary") {
    const auto path = write_temp("tiny.txt", kTinyDataset);
    const LabeledDataset data = LabeledDataset::load(path);
    REQUIRE(data.schema.size() == 3);
    CHECK(data.schema[0] == ColumnKind::Continuous);
    CHECK(data.schema[1] == ColumnKind::Categorical);
    CHECK(data.schema[2] == ColumnKind::Binary);
    REQUIRE(data.size() == 10);
    CHECK(data.K() == 2);
    CHECK(data.label_names[0] == "yes");
    CHECK(data.labels[0] == 0);
    CHECK(data.labels[1] == 1);
    std::remove(path.c_str());
}

TEST_CASE("dataset loader rejects malformed input") {
    const auto no_label = write_temp("nolabel.txt", "continuous binary\n1 0\n");
    CHECK_THROWS((void)LabeledDataset::load(no_label));
    std::remove(no_label.c_str());

    const auto two_labels = write_temp("twolabels.txt", "label binary label\na 0 b\n");
    CHECK_THROWS((void)LabeledDataset::load(two_labels));
    std::remove(two_labels.c_str());

    const auto ragged = write_temp("ragged.txt", "continuous label\n1 yes\n2\n");
    CHECK_THROWS((void)LabeledDataset::load(ragged));
    std::remove(ragged.c_str());
}

TEST_CASE("binarization: quintile cuts, one-hot widths, encoding") {
    const auto path = write_temp("tiny2.txt", kTinyDataset);
    const LabeledDataset data = LabeledDataset::load(path);
    const BinarizationSpec spec = fit_binarization(data);
    spec.validate();
    REQUIRE(spec.columns.size() == 3);

    // Type-7 quantiles of 1..10 at 0.2 / 0.4 / 0.6 / 0.8.
    const auto& cuts = spec.columns[0].thresholds;
    REQUIRE(cuts.size() == 4);
    CHECK(cuts[0] == doctest::Approx(2.8).epsilon(1e-12));
    CHECK(cuts[1] == doctest::Approx(4.6).epsilon(1e-12));
    CHECK(cuts[2] == doctest::Approx(6.4).epsilon(1e-12));
    CHECK(cuts[3] == doctest::Approx(8.2).epsilon(1e-12));
    CHECK(spec.columns[0].width() == 5);

    CHECK(spec.columns[1].categories == std::vector<std::string>{"a", "b", "c"});
    CHECK(spec.columns[1].width() == 3);
    CHECK(spec.columns[2].width() == 1);
    CHECK(spec.width() == 9);

    // Lowest bin, category "b", binary 1.
    const ContextVector x = encode(spec, {"1", "b", "1"});
    CHECK(x == ContextVector{1, 0, 0, 0, 0, 0, 1, 0, 1});
    // Above the last cut.
    const ContextVector y = encode(spec, {"9.5", "c", "0"});
    CHECK(y == ContextVector{0, 0, 0, 0, 1, 0, 0, 1, 0});
    // Unseen category: all-zero block and a counter bump.
    std::int64_t unseen = 0;
    const ContextVector z = encode(spec, {"3", "zz", "0"}, &unseen);
    CHECK(z == ContextVector{0, 1, 0, 0, 0, 0, 0, 0, 0});
    CHECK(unseen == 1);

    // Exactly one bit per continuous bin, at every cut boundary too.
    for (const char* v : {"2.8", "2.81", "4.6", "8.2", "8.3"}) {
        const ContextVector e = encode(spec, {v, "a", "0"});
        int bits = 0;
        for (int j = 0; j < 5; ++j) bits += e[static_cast<std::size_t>(j)];
        CHECK(bits == 1);
    }
    std::remove(path.c_str());
}

TEST_CASE("binarization spec save/load round-trip") {
    const auto path = write_temp("tiny3.txt", kTinyDataset);
    const BinarizationSpec spec = fit_binarization(LabeledDataset::load(path));
    const auto spec_path = write_temp("spec.txt", "");
    spec.save(spec_path);
    const BinarizationSpec back = BinarizationSpec::load(spec_path);
    REQUIRE(back.columns.size() == spec.columns.size());
    CHECK(back.width() == spec.width());
    CHECK(back.columns[0].thresholds == spec.columns[0].thresholds);
    CHECK(back.columns[1].categories == spec.columns[1].categories);
    std::remove(path.c_str());
    std::remove(spec_path.c_str());
}

TEST_CASE("noise: identity at 0, complement at 1, calibrated at 0.05") {
    std::mt19937_64 rng(7);
    const ContextVector x = {1, 0, 1, 1, 0};
    CHECK(apply_noise(x, 0.0, rng) == x);
    CHECK(apply_noise(x, 1.0, rng) == ContextVector{0, 1, 0, 0, 1});

    const ContextVector wide(1000, 1);
    std::int64_t flips = 0;
    const int draws = 200;
    for (int d = 0; d < draws; ++d) {
        const ContextVector n = apply_noise(wide, 0.05, rng);
        for (std::size_t j = 0; j < n.size(); ++j) flips += n[j] == 0;
    }
    const double total = 1000.0 * draws;
    const double sigma = std::sqrt(total * 0.05 * 0.95);
    CHECK(std::abs(flips - 0.05 * total) < 3.0 * sigma);
}

TEST_CASE("dataset stream: shuffled epochs, loop, exhaustion") {
    const auto path = write_temp("tiny4.txt", kTinyDataset);
    const LabeledDataset data = LabeledDataset::load(path);
    const BinarizationSpec spec = fit_binarization(data);

    StreamConfig cfg;
    cfg.noise_flip_prob = 0.0;
    cfg.loop = true;
    cfg.shuffle_seed = 42;
    cfg.T = 30;
    DatasetStream stream(data, spec, cfg);
    std::mt19937_64 rng(1);

    std::vector<ContextVector> epoch1, epoch2;
    for (int t = 0; t < 10; ++t) {
        epoch1.push_back(stream.next(rng));
        // Reward is the one-hot of the hidden label.
        const int label = stream.mean_reward(0) == 1.0 ? 0 : 1;
        CHECK(stream.reward(label, rng) == 1.0);
        CHECK(stream.reward(1 - label, rng) == 0.0);
    }
    for (int t = 0; t < 10; ++t) epoch2.push_back(stream.next(rng));

    // Every row appears exactly once per epoch, with the same fixed order.
    auto sorted1 = epoch1, sorted2 = epoch2;
    std::sort(sorted1.begin(), sorted1.end());
    std::sort(sorted2.begin(), sorted2.end());
    CHECK(sorted1 == sorted2);
    CHECK(epoch1 == epoch2);

    // Same seed reproduces the stream; another seed permutes differently.
    DatasetStream again(data, spec, cfg);
    std::mt19937_64 rng2(1);
    for (int t = 0; t < 10; ++t) CHECK(again.next(rng2) == epoch1[static_cast<std::size_t>(t)]);
    cfg.shuffle_seed = 43;
    DatasetStream other(data, spec, cfg);
    std::vector<ContextVector> alt;
    for (int t = 0; t < 10; ++t) alt.push_back(other.next(rng2));
    CHECK(alt != epoch1);

    // Without looping the stream runs dry after one epoch.
    cfg.shuffle_seed = 42;
    cfg.loop = false;
    cfg.T = 10;
    DatasetStream finite(data, spec, cfg);
    for (int t = 0; t < 10; ++t) (void)finite.next(rng);
    CHECK_THROWS((void)finite.next(rng));
    std::remove(path.c_str());
}

TEST_CASE("empirical distribution matches row and label frequencies") {
    const auto path = write_temp("tiny5.txt", kTinyDataset);
    const LabeledDataset data = LabeledDataset::load(path);
    const BinarizationSpec spec = fit_binarization(data);
    const KnownDistribution dist = empirical_distribution(data, spec);
    dist.validate();
    CHECK(dist.M == spec.width());
    CHECK(dist.K == 2);
    double mass = 0.0, mean_mass = 0.0;
    for (const auto& row : dist.rows) {
        mass += row.p;
        mean_mass += row.p * (row.means[0] + row.means[1]);
    }
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
    // One-hot labels: conditional means sum to 1 everywhere.
    CHECK(mean_mass == doctest::Approx(1.0).epsilon(1e-12));
    std::remove(path.c_str());
}

TEST_CASE("two-variable benchmark sampler matches its law") {
    Table1Env env;
    std::mt19937_64 rng(1234);
    const std::int64_t n = 1000000;
    std::map<std::pair<int, int>, std::int64_t> counts;
    std::map<std::pair<int, int>, double> pay1;
    std::int64_t pay0_x0 = 0, n_x0 = 0;
    for (std::int64_t t = 0; t < n; ++t) {
        const ContextVector x = env.next(rng);
        const std::pair<int, int> key{x[0], x[1]};
        counts[key] += 1;
        // Action 1 is random; action 0 is checked via its mean.
        pay1[key] += env.reward(1, rng);
        if (x[0] == 1) {
            ++n_x0;
            pay0_x0 += env.mean_reward(0) == 1.0;
        } else {
            CHECK(env.mean_reward(0) == 0.0);
        }
    }
    CHECK(pay0_x0 == n_x0);  // action 0 pays 1 exactly when x0 = 1

    const KnownDistribution law = Table1Env::sampler_distribution();
    for (const auto& row : law.rows) {
        const std::pair<int, int> key{row.x[0], row.x[1]};
        const double m = static_cast<double>(counts[key]);
        const double p_sigma = std::sqrt(n * row.p * (1.0 - row.p));
        CHECK(std::abs(m - n * row.p) < 3.0 * p_sigma);
        const double q = row.means[1];
        const double q_sigma = std::sqrt(m * q * (1.0 - q));
        CHECK(std::abs(pay1[key] - m * q) < 3.0 * q_sigma + 1.0);
    }
}

TEST_CASE("xor environment: uniform bits, exact reward rule") {
    XorEnv env(4);
    std::mt19937_64 rng(9);
    std::int64_t ones[4] = {0, 0, 0, 0};
    const std::int64_t n = 100000;
    for (std::int64_t t = 0; t < n; ++t) {
        const ContextVector x = env.next(rng);
        for (int j = 0; j < 4; ++j) ones[j] += x[static_cast<std::size_t>(j)];
        const int good = x[0] ^ x[1];
        CHECK(env.reward(good, rng) == 1.0);
        CHECK(env.reward(1 - good, rng) == 0.0);
    }
    const double sigma = std::sqrt(n * 0.25);
    for (int j = 0; j < 4; ++j) CHECK(std::abs(ones[j] - n / 2.0) < 3.0 * sigma);
}

TEST_CASE("gap environment hits its configured gaps") {
    CHECK_THROWS_AS(GapEnv(2, 4, 0.3, 0.4), std::invalid_argument);   // delta1 > delta2/2
    CHECK_THROWS_AS(GapEnv(2, 4, 0.0, 0.4), std::invalid_argument);   // delta1 = 0
    CHECK_THROWS_AS(GapEnv(2, 4, 0.1, 1.2), std::invalid_argument);   // delta2 > 1

    GapEnv env(3, 5, 0.1, 0.4);
    std::mt19937_64 rng(21);
    const std::int64_t n = 400000;
    std::int64_t agree01 = 0;
    double sum[2][3] = {{0, 0, 0}, {0, 0, 0}};
    std::int64_t n_x0[2] = {0, 0};
    for (std::int64_t t = 0; t < n; ++t) {
        const ContextVector x = env.next(rng);
        agree01 += x[0] == x[1];
        const int v = x[0];
        ++n_x0[v];
        for (int k = 0; k < 3; ++k) sum[v][k] += env.reward(k, rng);
    }
    // x1 copies x0 with flip probability delta1/delta2 = 1/4.
    const double flip_sigma = std::sqrt(n * 0.25 * 0.75);
    CHECK(std::abs(agree01 - 0.75 * n) < 3.0 * flip_sigma);
    // Conditional means: the tracking action gains delta2 over the field.
    const double expect[2][3] = {{0.3, 0.7, 0.3}, {0.7, 0.3, 0.3}};
    for (int v = 0; v < 2; ++v)
        for (int k = 0; k < 3; ++k) {
            const double m = static_cast<double>(n_x0[v]);
            const double e = expect[v][k];
            CHECK(std::abs(sum[v][k] - m * e) < 3.0 * std::sqrt(m * e * (1.0 - e)));
        }
}
