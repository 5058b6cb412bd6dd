#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "vmfkd/common.hpp"
#include "vmfkd/dataset.hpp"
#include "vmfkd/digits.hpp"
#include "vmfkd/network.hpp"
#include "vmfkd/viz.hpp"
#include "vmfkd/activation_model.hpp"

using namespace vmfkd;

namespace {

struct TempFiles {
    std::vector<std::string> paths;
    ~TempFiles() {
        for (const auto& p : paths) std::remove(p.c_str());
    }
    const char* add(const std::string& p) {
        paths.push_back(p);
        return paths.back().c_str();
    }
};

// Minimal hand-rolled IDX pair: n images of 2x2, labels 0..n-1 mod c.
void write_tiny_idx(const std::string& images, const std::string& labels,
                    std::uint32_t n, std::uint32_t img_magic = 0x803,
                    std::uint32_t lab_magic = 0x801,
                    std::uint32_t label_count_override = 0) {
    auto be32 = [](std::ofstream& out, std::uint32_t v) {
        const unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                                    static_cast<unsigned char>(v >> 16),
                                    static_cast<unsigned char>(v >> 8),
                                    static_cast<unsigned char>(v)};
        out.write(reinterpret_cast<const char*>(b), 4);
    };
    std::ofstream img(images, std::ios::binary);
    be32(img, img_magic);
    be32(img, n);
    be32(img, 2);
    be32(img, 2);
    for (std::uint32_t i = 0; i < n; ++i) {
        const unsigned char px[4] = {0, 85, 170, 255};
        img.write(reinterpret_cast<const char*>(px), 4);
    }
    std::ofstream lab(labels, std::ios::binary);
    be32(lab, lab_magic);
    be32(lab, label_count_override ? label_count_override : n);
    for (std::uint32_t i = 0; i < (label_count_override ? label_count_override : n);
         ++i) {
        const auto b = static_cast<unsigned char>(i % 3);
        lab.write(reinterpret_cast<const char*>(&b), 1);
    }
}

}  // namespace

TEST_CASE("IDX load, round trip, and error paths") {
    TempFiles tmp;
    write_tiny_idx(tmp.add("tiny-images"), tmp.add("tiny-labels"), 9);
    const Dataset ds = load_idx("tiny-images", "tiny-labels");
    CHECK(ds.size() == 9);
    CHECK(ds.image_rows == 2);
    CHECK(ds.image_cols == 2);
    CHECK(ds.class_count == 3);
    CHECK(ds.features.at(0, 3) == doctest::Approx(1.0));
    CHECK(ds.features.at(0, 1) == doctest::Approx(85.0 / 255.0));

    // round trip is value-identical
    save_idx(ds, tmp.add("tiny-images-2"), tmp.add("tiny-labels-2"));
    const Dataset again = load_idx("tiny-images-2", "tiny-labels-2");
    CHECK(again.features.data == ds.features.data);
    CHECK(again.labels == ds.labels);
    // and the rewritten bytes match the originals too
    std::ifstream a("tiny-images", std::ios::binary),
        b("tiny-images-2", std::ios::binary);
    const std::string bytes_a((std::istreambuf_iterator<char>(a)),
                              std::istreambuf_iterator<char>());
    const std::string bytes_b((std::istreambuf_iterator<char>(b)),
                              std::istreambuf_iterator<char>());
    CHECK(bytes_a == bytes_b);

    // bad magic names the observed value
    write_tiny_idx(tmp.add("badmagic-images"), tmp.add("badmagic-labels"), 4,
                   0x805);
    CHECK_THROWS_WITH_AS(load_idx("badmagic-images", "badmagic-labels"),
                         doctest::Contains("0x00000805"), IoError);
    write_tiny_idx(tmp.add("badlab-images"), tmp.add("badlab-labels"), 4, 0x803,
                   0x807);
    CHECK_THROWS_WITH_AS(load_idx("badlab-images", "badlab-labels"),
                         doctest::Contains("0x00000807"), IoError);

    // image/label count mismatch is its own error
    write_tiny_idx(tmp.add("mis-images"), tmp.add("mis-labels"), 6, 0x803, 0x801,
                   5);
    CHECK_THROWS_WITH_AS(load_idx("mis-images", "mis-labels"),
                         doctest::Contains("mismatch"), IoError);

    // truncation is detected
    {
        std::ofstream cut("cut-images", std::ios::binary | std::ios::trunc);
        std::ifstream src("tiny-images", std::ios::binary);
        std::string head(20, '\0');
        src.read(head.data(), 20);
        cut.write(head.data(), 20);
    }
    tmp.add("cut-images");
    CHECK_THROWS_WITH_AS(load_idx("cut-images", "tiny-labels"),
                         doctest::Contains("truncated"), IoError);

    CHECK_THROWS_AS(load_idx("does-not-exist", "tiny-labels"), IoError);
}

TEST_CASE("synthetic blobs") {
    SyntheticSpec spec;
    spec.classes = 2;
    spec.n_per_class = 50;
    spec.d_in = 2;
    spec.noise_scale = 0.0;
    const Dataset ds = make_synthetic(spec);
    CHECK(ds.size() == 100);

    // noiseless two-blob set is linearly separable with positive margin:
    // project on the difference of the class means
    std::vector<double> m0(2, 0.0), m1(2, 0.0);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        auto& m = ds.labels[i] == 0 ? m0 : m1;
        m[0] += ds.features.at(i, 0);
        m[1] += ds.features.at(i, 1);
    }
    for (auto& v : m0) v /= 50.0;
    for (auto& v : m1) v /= 50.0;
    const double wx = m1[0] - m0[0], wy = m1[1] - m0[1];
    double max0 = -1e9, min1 = 1e9;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const double proj = wx * ds.features.at(i, 0) + wy * ds.features.at(i, 1);
        if (ds.labels[i] == 0)
            max0 = std::max(max0, proj);
        else
            min1 = std::min(min1, proj);
    }
    CHECK(min1 - max0 > 0.0);

    // always exactly balanced
    spec.classes = 7;
    spec.n_per_class = 13;
    spec.noise_scale = 0.3;
    spec.d_in = 5;
    const Dataset noisy = make_synthetic(spec);
    const auto balance = class_balance(noisy);
    for (double f : balance) CHECK(f == doctest::Approx(1.0 / 7.0));
    // determinism
    const Dataset noisy2 = make_synthetic(spec);
    CHECK(noisy.features.data == noisy2.features.data);
}

TEST_CASE("ring dataset trains a d=2-penultimate network to 0.9") {
    SyntheticSpec spec;
    spec.kind = SyntheticSpec::Kind::ring;
    spec.classes = 10;
    spec.n_per_class = 60;
    spec.d_in = 12;
    spec.seed = 44;
    const Dataset ring = make_synthetic(spec);
    NetworkArch arch;
    arch.layer_sizes = {12, 32, 2, 10};
    arch.activations = {Activation::tanh_act, Activation::identity};
    Network net(arch, 6);
    TrainConfig cfg;
    cfg.epochs = 150;
    cfg.batch_size = 32;
    cfg.seed = 3;
    cfg.learning_rate = 3e-3;
    const TrainResult result = train(net, ring, cfg, label_loss());
    CHECK(result.epochs.back().train_accuracy >= 0.9);
}

TEST_CASE("subsample") {
    SyntheticSpec spec;
    spec.classes = 10;
    spec.n_per_class = 100;
    spec.d_in = 3;
    const Dataset ds = make_synthetic(spec);

    // n = ds.n keeps everything (a trivial permutation in source order)
    const Dataset all = subsample(ds, ds.size(), 5, false);
    CHECK(all.features.data == ds.features.data);
    CHECK(all.labels == ds.labels);

    // stratified 100 from balanced 10 classes: exactly 10 per class
    const Dataset strat = subsample(ds, 100, 5, true);
    std::vector<std::size_t> counts(10, 0);
    for (std::size_t l : strat.labels) ++counts[l];
    for (std::size_t c : counts) CHECK(c == 10);

    // deterministic
    const Dataset strat2 = subsample(ds, 100, 5, true);
    CHECK(strat.features.data == strat2.features.data);
    const Dataset strat3 = subsample(ds, 100, 6, true);
    CHECK(strat.features.data != strat3.features.data);

    CHECK_THROWS_AS(subsample(ds, ds.size() + 1, 1, false), ConfigError);
}

TEST_CASE("decimal formatting is locale-independent and exact") {
    CHECK(fmt_double(0.5) == "0.5");
    CHECK(fmt_double(-1.25) == "-1.25");
    for (double v : {1.0 / 3.0, 2.7182818284590452, 1e-17, -0.1}) {
        CHECK(parse_double(fmt_double(v)) == v);
        CHECK(fmt_double(v).find(',') == std::string::npos);
    }
}

TEST_CASE("digit corpus sanity") {
    const Dataset digits = make_digits(200, 5);
    CHECK(digits.size() == 200);
    CHECK(digits.class_count == 10);
    CHECK(digits.image_rows == 28);
    const auto balance = class_balance(digits);
    for (double f : balance) CHECK(f == doctest::Approx(0.1));
    // images have ink and background
    double mean = 0.0, mx = 0.0;
    for (double v : digits.features.data) {
        mean += v;
        mx = std::max(mx, v);
    }
    mean /= static_cast<double>(digits.features.data.size());
    CHECK(mean > 0.02);
    CHECK(mean < 0.5);
    CHECK(mx > 0.8);
    // deterministic, and distinct samples of the same class differ
    const Dataset again = make_digits(200, 5);
    CHECK(again.features.data == digits.features.data);
    bool differs = false;
    for (std::size_t j = 0; j < digits.feature_dim(); ++j)
        differs = differs || digits.features.at(0, j) != digits.features.at(10, j);
    CHECK(differs);
}

TEST_CASE("viz export") {
    TempFiles tmp;
    SyntheticSpec spec;
    spec.kind = SyntheticSpec::Kind::ring;
    spec.classes = 4;
    spec.n_per_class = 30;
    spec.d_in = 2;
    const Dataset ring = make_synthetic(spec);
    NetworkArch arch;
    arch.layer_sizes = {2, 8, 2, 4};
    arch.activations = {Activation::tanh_act, Activation::identity};
    const Network net(arch, 12);
    const auto model = derive_model(net.prototypes(), 20.0, false);

    viz_export(net, ring, model, "viztest", true);
    tmp.add("viztest_activations.csv");
    tmp.add("viztest_density.csv");
    tmp.add("viztest_polar.svg");

    // activations CSV: one row per example + header
    std::ifstream acts("viztest_activations.csv");
    std::string line;
    std::getline(acts, line);
    CHECK(line == "angle_rad,label");
    std::size_t rows = 0;
    while (std::getline(acts, line)) ++rows;
    CHECK(rows == ring.size());

    // density rows integrate to ~1 per class (trapezoid over 720 angles)
    std::ifstream dens("viztest_density.csv");
    std::getline(dens, line);
    std::vector<double> integral(4, 0.0);
    while (std::getline(dens, line)) {
        const auto c1 = line.find(',');
        const auto c2 = line.find(',', c1 + 1);
        const std::size_t cls = std::stoul(line.substr(0, c1));
        integral[cls] += parse_double(line.substr(c2 + 1));
    }
    const double dtheta = 2.0 * M_PI / 720.0;
    for (double v : integral)
        CHECK(v * dtheta == doctest::Approx(1.0).epsilon(1e-3));

    // non-planar networks are rejected with guidance
    NetworkArch wide;
    wide.layer_sizes = {2, 8, 3, 4};
    wide.activations = {Activation::tanh_act, Activation::identity};
    const Network wide_net(wide, 1);
    const auto wide_model = derive_model(wide_net.prototypes(), 20.0, false);
    CHECK_THROWS_WITH_AS(viz_export(wide_net, ring, wide_model, "nope", false),
                         doctest::Contains("2-d"), NumericError);
}
