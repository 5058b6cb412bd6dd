#include "doctest.h"

#include <cmath>
#include <cstdio>

#include "oracles.hpp"
#include "vmfkd/activation_model.hpp"
#include "vmfkd/common.hpp"
#include "vmfkd/dataset.hpp"
#include "vmfkd/quadrature.hpp"

using namespace vmfkd;

namespace {

Matrix matrix_from_rows(std::vector<std::vector<double>> rows) {
    Matrix m(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            m.at(i, j) = rows[i][j];
    return m;
}

Network trained_ring_teacher() {
    SyntheticSpec spec;
    spec.kind = SyntheticSpec::Kind::ring;
    spec.classes = 6;
    spec.n_per_class = 80;
    spec.d_in = 2;
    spec.noise_scale = 0.0;
    spec.seed = 31;
    const Dataset ring = make_synthetic(spec);
    NetworkArch arch;
    arch.layer_sizes = {2, 16, 2, 6};
    arch.activations = {Activation::tanh_act, Activation::identity};
    Network net(arch, 5);
    TrainConfig cfg;
    cfg.epochs = 60;
    cfg.batch_size = 16;
    cfg.seed = 2;
    train(net, ring, cfg, label_loss());
    return net;
}

}  // namespace

TEST_CASE("derive_model") {
    // identity prototypes stay put
    const Matrix eye = matrix_from_rows({{1.0, 0.0}, {0.0, 1.0}});
    const auto model = derive_model(eye, 80.0, false);
    CHECK(model.class_directions[0][0] == doctest::Approx(1.0));
    CHECK(model.class_directions[1][1] == doctest::Approx(1.0));
    CHECK(model.concentration(0) == 80.0);
    CHECK(model.concentration(1) == 80.0);
    CHECK_FALSE(model.per_class_kappa.has_value());

    // per-class scaling: norms 3 and 4, mean 3.5
    const Matrix w34 = matrix_from_rows({{3.0, 0.0}, {0.0, 4.0}});
    const auto scaled = derive_model(w34, 10.0, true);
    CHECK(scaled.concentration(0) == doctest::Approx(10.0 * 3.0 / 3.5).epsilon(1e-12));
    CHECK(scaled.concentration(1) == doctest::Approx(10.0 * 4.0 / 3.5).epsilon(1e-12));
    CHECK(scaled.concentration(0) == doctest::Approx(8.571).epsilon(1e-3));
    CHECK(scaled.concentration(1) == doctest::Approx(11.429).epsilon(1e-3));
    CHECK(scaled.source_norms == std::vector<double>{3.0, 4.0});

    // zero column names the class
    const Matrix with_zero = matrix_from_rows({{1.0, 0.0}, {0.0, 0.0}});
    CHECK_THROWS_WITH_AS(derive_model(with_zero, 5.0, false),
                         doctest::Contains("class 1"), NumericError);

    // trained teacher: distinct unit directions
    const Network teacher = trained_ring_teacher();
    const auto tm = derive_model(teacher.prototypes(), 80.0, false);
    for (std::size_t i = 0; i < tm.class_count(); ++i) {
        CHECK(std::abs(norm(tm.class_directions[i].span()) - 1.0) < 1e-9);
        for (std::size_t j = i + 1; j < tm.class_count(); ++j)
            CHECK(dot(tm.class_directions[i].span(),
                      tm.class_directions[j].span()) < 1.0 - 1e-6);
    }
}

TEST_CASE("posterior_from_model") {
    // symmetric prototypes on the circle, a_bar at prototype 1
    const std::size_t c = 5;
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < c; ++i) {
        const double t = 2.0 * M_PI * static_cast<double>(i) / c;
        rows.push_back({std::cos(t), std::sin(t)});
    }
    const auto model = derive_model(matrix_from_rows(rows), 4.0, false);
    const auto q = posterior_from_model(model, model.class_directions[1]);
    for (std::size_t i = 0; i < c; ++i)
        if (i != 1) CHECK(q[1] > q[i]);
    double sum = 0.0;
    for (double v : q) {
        CHECK(v >= 0.0);
        sum += v;
    }
    CHECK(std::abs(sum - 1.0) < 1e-9);

    // equal concentrations: exact softmax equality (normalizers cancel)
    Rng rng(3);
    for (const std::size_t d : {2u, 16u}) {
        Matrix protos(6, d);
        for (auto& v : protos.data) v = rng.uniform(-1.0, 1.0);
        const auto m = derive_model(protos, 37.5, false);
        for (int rep = 0; rep < 30; ++rep) {
            const auto a = UnitVector::from_unit(rng.unit_vector(d));
            std::vector<double> logits(6);
            for (std::size_t i = 0; i < 6; ++i)
                logits[i] = 37.5 * dot(m.class_directions[i].span(), a.span());
            const auto direct = softmax(logits);
            const auto q2 = posterior_from_model(m, a);
            for (std::size_t i = 0; i < 6; ++i)
                CHECK(std::abs(q2[i] - direct[i]) < 1e-12);
        }
    }

    // kappa -> 0 gives the uniform posterior
    const auto tiny = derive_model(matrix_from_rows(rows), 1e-12, false);
    const auto u = posterior_from_model(
        tiny, UnitVector::normalize(std::vector<double>{0.3, 0.9}));
    for (double v : u) CHECK(v == doctest::Approx(1.0 / c).epsilon(1e-9));
}

TEST_CASE("class_relations basics") {
    const Network teacher = trained_ring_teacher();
    const auto model = derive_model(teacher.prototypes(), 80.0, false);
    const auto rel = class_relations(teacher, model, 2048, 4.0, 99);

    // rows sum to one, entries nonnegative (validate() enforces both, run it
    // through anyway)
    rel.validate();

    // concentrated sampling near each prototype makes the diagonal dominant
    for (std::size_t i = 0; i < rel.class_count(); ++i)
        for (std::size_t j = 0; j < rel.class_count(); ++j)
            if (i != j) CHECK(rel.entries.at(i, i) > rel.entries.at(i, j));

    // bitwise determinism
    const auto rel2 = class_relations(teacher, model, 2048, 4.0, 99);
    CHECK(rel.entries.data == rel2.entries.data);
    const auto rel3 = class_relations(teacher, model, 2048, 4.0, 100);
    CHECK(rel.entries.data != rel3.entries.data);
}

TEST_CASE("class_relations near-uniform for orthogonal prototypes at tiny kappa") {
    NetworkArch arch;
    arch.layer_sizes = {4, 4, 4};
    arch.activations = {Activation::identity};
    Network teacher(arch, 1);
    teacher.prototypes() = Matrix(4, 4);
    for (std::size_t i = 0; i < 4; ++i) teacher.prototypes().at(i, i) = 1.5;

    const auto model = derive_model(teacher.prototypes(), 1e-6, false);
    const auto rel = class_relations(teacher, model, 20000, 1.0, 5);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j)
            CHECK(rel.entries.at(i, j) == doctest::Approx(0.25).epsilon(0.05));
}

namespace {

// Quadrature version of the class-relation row for a d=2 final layer.
std::vector<double> relation_row_quadrature(const Matrix& prototypes,
                                            const ClassActivationModel& model,
                                            std::size_t row, double temperature,
                                            const SphereQuadrature& quad) {
    std::vector<double> out(prototypes.rows, 0.0);
    const VmfDistribution comp(model.class_directions[row],
                               model.concentration(row));
    for (std::size_t n = 0; n < quad.size(); ++n) {
        const auto& node = quad.nodes()[n];
        const double w =
            quad.weights()[n] * std::exp(log_density(comp, node));
        std::vector<double> logits(prototypes.rows, 0.0);
        matvec(prototypes, node.span(), logits);
        const auto p = tempered_softmax(logits, temperature);
        for (std::size_t j = 0; j < out.size(); ++j) out[j] += w * p[j];
    }
    return out;
}

}  // namespace

TEST_CASE("Monte Carlo rows match circle quadrature within TV 0.02") {
    // hand-built d=2, c=3 final layer
    NetworkArch arch;
    arch.layer_sizes = {2, 2, 3};
    arch.activations = {Activation::identity};
    Network teacher(arch, 7);
    teacher.prototypes() = matrix_from_rows(
        {{1.8, 0.3}, {-0.9, 1.2}, {-0.4, -1.6}});

    const auto model = derive_model(teacher.prototypes(), 80.0, false);
    const auto quad = SphereQuadrature::circle(4096);
    const auto mc = class_relations(teacher, model, 100000, 4.0, 11);
    double worst_tv_large = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
        const auto oracle = relation_row_quadrature(teacher.prototypes(), model,
                                                    i, 4.0, quad);
        const double tv = oracles::tv_distance(mc.entries.row_span(i), oracle);
        worst_tv_large = std::max(worst_tv_large, tv);
        CHECK(tv <= 0.02);
    }

    // MC converges: N = 1e3 is worse than N = 1e5 against the oracle
    const auto mc_small = class_relations(teacher, model, 1000, 4.0, 11);
    double worst_tv_small = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
        const auto oracle = relation_row_quadrature(teacher.prototypes(), model,
                                                    i, 4.0, quad);
        worst_tv_small = std::max(
            worst_tv_small,
            oracles::tv_distance(mc_small.entries.row_span(i), oracle));
    }
    CHECK(worst_tv_large < worst_tv_small);
}

TEST_CASE("gen_disc_gap") {
    // equal prototype norms + per-sample |w||a| concentrations: exact pairing
    NetworkArch arch;
    arch.layer_sizes = {3, 4, 3};
    arch.activations = {Activation::tanh_act};
    Network net(arch, 15);
    for (std::size_t i = 0; i < net.prototypes().rows; ++i) {
        const double n = norm(net.prototypes().row_span(i));
        for (std::size_t j = 0; j < net.prototypes().cols; ++j)
            net.prototypes().at(i, j) *= 2.0 / n;  // all norms exactly 2
    }
    SyntheticSpec spec;
    spec.classes = 3;
    spec.n_per_class = 40;
    spec.d_in = 3;
    spec.seed = 8;
    const Dataset ds = make_synthetic(spec);

    const auto model = derive_model(net.prototypes(), 80.0, false);
    const auto exact = gen_disc_gap(net, model, ds, true);
    CHECK(exact.mean_kl >= 0.0);
    CHECK(exact.mean_kl < 1e-10);

    // untrained net, shared kappa: finite gap, sane norm stats
    const auto report = gen_disc_gap(net, model, ds, false);
    CHECK(std::isfinite(report.mean_kl));
    CHECK(report.mean_kl >= 0.0);
    CHECK(report.prototype_norm_mean == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(report.prototype_norm_stddev == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(report.mean_activation_norm > 0.0);
}

TEST_CASE("prior file round trip") {
    const Network teacher = trained_ring_teacher();
    for (const double kappa : {20.0, 5.0}) {
        const auto model = derive_model(teacher.prototypes(), kappa, kappa == 5.0);
        const std::string path = "prior_roundtrip_test.txt";
        save_prior(model, path);
        const auto loaded = load_prior(path);
        CHECK(loaded.kappa == kappa);  // file records the exact kappa
        CHECK(loaded.class_count() == model.class_count());
        CHECK(loaded.per_class_kappa.has_value() ==
              model.per_class_kappa.has_value());
        for (std::size_t i = 0; i < model.class_count(); ++i) {
            for (std::size_t j = 0; j < model.dim(); ++j)
                CHECK(std::abs(loaded.class_directions[i][j] -
                               model.class_directions[i][j]) < 1e-12);
            CHECK(loaded.source_norms[i] == model.source_norms[i]);
            CHECK(loaded.concentration(i) == model.concentration(i));
        }
        std::remove(path.c_str());
    }
}

TEST_CASE("relations CSV round trip and sidecar") {
    const Network teacher = trained_ring_teacher();
    const auto model = derive_model(teacher.prototypes(), 80.0, false);
    const auto rel = class_relations(teacher, model, 512, 4.0, 13);
    const std::string path = "relations_roundtrip_test.csv";
    save_relations_csv(rel, path, "deadbeef00000000");
    const auto loaded = load_relations_csv(path);
    CHECK(loaded.entries.data == rel.entries.data);  // value-identical
    CHECK(loaded.sample_count == rel.sample_count);
    CHECK(loaded.kappa_used == rel.kappa_used);
    CHECK(loaded.temperature_used == rel.temperature_used);
    CHECK(loaded.seed == rel.seed);
    std::remove(path.c_str());
    std::remove((path + ".meta.json").c_str());
}
