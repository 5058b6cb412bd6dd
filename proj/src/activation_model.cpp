#include "vmfkd/activation_model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "vmfkd/common.hpp"
#include "vmfkd/dataset.hpp"

#include "json.hpp"

namespace vmfkd {

void ClassActivationModel::validate() const {
    if (class_directions.empty())
        throw NumericError("activation model has no components");
    if (!(kappa > 0.0)) throw NumericError("model kappa must be > 0");
    if (per_class_kappa && per_class_kappa->size() != class_count())
        throw NumericError("per-class kappa count mismatch");
    if (source_norms.size() != class_count())
        throw NumericError("source norm count mismatch");
}

ClassActivationModel derive_model(const Matrix& prototypes, double kappa,
                                  bool per_class_scaling) {
    if (!(kappa > 0.0)) throw NumericError("derive_model requires kappa > 0");
    ClassActivationModel model;
    model.kappa = kappa;
    double norm_sum = 0.0;
    for (std::size_t i = 0; i < prototypes.rows; ++i) {
        const double n = norm(prototypes.row_span(i));
        if (!(n > 0.0))
            throw NumericError("zero prototype column for class " +
                               std::to_string(i));
        model.source_norms.push_back(n);
        norm_sum += n;
        model.class_directions.push_back(
            UnitVector::normalize(prototypes.row_span(i)));
    }
    if (per_class_scaling) {
        const double mean_norm = norm_sum / static_cast<double>(prototypes.rows);
        std::vector<double> pck;
        for (double n : model.source_norms) pck.push_back(kappa * n / mean_norm);
        model.per_class_kappa = std::move(pck);
    }
    model.validate();
    return model;
}

std::vector<double> posterior_from_model(const ClassActivationModel& model,
                                         const UnitVector& a_bar) {
    model.validate();
    if (a_bar.dim() != model.dim())
        throw NumericError("posterior dimension mismatch");
    const std::size_t c = model.class_count();
    std::vector<double> log_joint(c);
    for (std::size_t i = 0; i < c; ++i) {
        const double k = model.concentration(i);
        const double cosine = dot(model.class_directions[i].span(), a_bar.span());
        log_joint[i] = log_norm_const(model.dim(), k) + k * cosine;
    }
    return softmax(log_joint);
}

void ClassRelationMatrix::validate() const {
    if (entries.rows != entries.cols || entries.rows == 0)
        throw NumericError("relation matrix must be square and nonempty");
    for (std::size_t i = 0; i < entries.rows; ++i) {
        double row_sum = 0.0;
        for (std::size_t j = 0; j < entries.cols; ++j) {
            if (entries.at(i, j) < 0.0)
                throw NumericError("relation matrix has a negative entry");
            row_sum += entries.at(i, j);
        }
        if (std::abs(row_sum - 1.0) > 1e-9)
            throw NumericError("relation matrix row " + std::to_string(i) +
                               " sums to " + fmt_double(row_sum));
    }
}

ClassRelationMatrix class_relations(const Network& teacher,
                                    const ClassActivationModel& model,
                                    std::size_t n_samples, double temperature,
                                    std::uint64_t seed) {
    model.validate();
    if (n_samples < 1) throw NumericError("class_relations requires N >= 1");
    if (!(temperature > 0.0)) throw NumericError("temperature must be > 0");
    if (teacher.final_bias())
        throw ConfigError(
            "class_relations requires a bias-free final layer; the vMF model "
            "is derived from prototype directions only");
    const std::size_t c = teacher.class_count();
    const std::size_t d = teacher.penultimate_dim();
    if (model.class_count() != c || model.dim() != d)
        throw NumericError("model does not match the teacher's final layer");

    ClassRelationMatrix rel;
    rel.entries = Matrix(c, c);
    rel.sample_count = n_samples;
    rel.kappa_used = model.kappa;
    rel.temperature_used = temperature;
    rel.seed = seed;

    const Rng master(seed);
    std::vector<double> logits(c, 0.0);
    for (std::size_t i = 0; i < c; ++i) {
        // Independent stream per class; classes can be computed in any order.
        Rng rng = master.split(i);
        const VmfDistribution component(model.class_directions[i],
                                        model.concentration(i));
        double* row = rel.entries.row(i);
        for (std::size_t s = 0; s < n_samples; ++s) {
            const std::vector<double> a_bar = sample_one(component, rng);
            matvec(teacher.prototypes(), a_bar, logits);
            const std::vector<double> p = tempered_softmax(logits, temperature);
            for (std::size_t j = 0; j < c; ++j) row[j] += p[j];
        }
        const double inv = 1.0 / static_cast<double>(n_samples);
        for (std::size_t j = 0; j < c; ++j) row[j] *= inv;
    }
    rel.validate();
    return rel;
}

GenDiscReport gen_disc_gap(const Network& teacher,
                           const ClassActivationModel& model,
                           const Dataset& data, bool per_sample_kappa) {
    model.validate();
    data.validate();
    const std::size_t c = teacher.class_count();
    GenDiscReport report;
    report.per_class_mean_activation_norm.assign(c, 0.0);
    report.per_class_stddev_activation_norm.assign(c, 0.0);
    std::vector<double> per_class_sq(c, 0.0);
    std::vector<std::size_t> per_class_n(c, 0);

    for (std::size_t i = 0; i < c; ++i)
        report.prototype_norms.push_back(norm(teacher.prototypes().row_span(i)));
    double wm = 0.0, ws = 0.0;
    for (double n : report.prototype_norms) wm += n;
    wm /= static_cast<double>(c);
    for (double n : report.prototype_norms) ws += (n - wm) * (n - wm);
    report.prototype_norm_mean = wm;
    report.prototype_norm_stddev = std::sqrt(ws / static_cast<double>(c));

    ClassActivationModel scratch = model;
    double kl_sum = 0.0, an_sum = 0.0, an_sq = 0.0;
    for (std::size_t n = 0; n < data.size(); ++n) {
        const auto x = data.features.row_span(n);
        const std::vector<double> a = teacher.penultimate(x);
        const double an = norm(a);
        if (!(an > 0.0)) continue;  // degenerate activation carries no direction
        an_sum += an;
        an_sq += an * an;
        const std::size_t label = data.labels[n];
        report.per_class_mean_activation_norm[label] += an;
        per_class_sq[label] += an * an;
        ++per_class_n[label];

        std::vector<double> logits(c, 0.0);
        matvec(teacher.prototypes(), a, logits);
        const std::vector<double> p = softmax(logits);

        const UnitVector a_bar = UnitVector::normalize(a);
        const ClassActivationModel* m = &model;
        if (per_sample_kappa) {
            std::vector<double> pck;
            for (double wn : report.prototype_norms) pck.push_back(wn * an);
            scratch.per_class_kappa = std::move(pck);
            m = &scratch;
        }
        const std::vector<double> q = posterior_from_model(*m, a_bar);
        double kl = 0.0;
        for (std::size_t j = 0; j < c; ++j)
            if (p[j] > 0.0) kl += p[j] * (std::log(p[j]) - std::log(q[j]));
        kl_sum += kl;
    }
    const double n_total = static_cast<double>(data.size());
    report.mean_kl = kl_sum / n_total;
    report.mean_activation_norm = an_sum / n_total;
    report.stddev_activation_norm =
        std::sqrt(std::max(0.0, an_sq / n_total - report.mean_activation_norm *
                                                      report.mean_activation_norm));
    for (std::size_t i = 0; i < c; ++i) {
        if (per_class_n[i] == 0) continue;
        const double cn = static_cast<double>(per_class_n[i]);
        const double mean = report.per_class_mean_activation_norm[i] / cn;
        report.per_class_mean_activation_norm[i] = mean;
        report.per_class_stddev_activation_norm[i] =
            std::sqrt(std::max(0.0, per_class_sq[i] / cn - mean * mean));
    }
    return report;
}

// ---------------------------------------------------------------- files

void save_prior(const ClassActivationModel& model, const std::string& path) {
    model.validate();
    std::ofstream out(path);
    if (!out) throw IoError("cannot open prior file for writing: " + path);
    out << "vmfkd-prior v1\n";
    out << "classes " << model.class_count() << '\n';
    out << "dim " << model.dim() << '\n';
    out << "kappa " << fmt_double(model.kappa) << '\n';
    if (model.per_class_kappa) {
        out << "per_class_kappa";
        for (double k : *model.per_class_kappa) out << ' ' << fmt_double(k);
        out << '\n';
    } else {
        out << "per_class_kappa none\n";
    }
    out << "source_norms";
    for (double n : model.source_norms) out << ' ' << fmt_double(n);
    out << '\n';
    for (std::size_t i = 0; i < model.class_count(); ++i) {
        out << "direction " << i;
        for (double v : model.class_directions[i].components())
            out << ' ' << fmt_double(v);
        out << '\n';
    }
    out << "end\n";
    if (!out) throw IoError("write failed for prior file: " + path);
}

namespace {

void expect_tok(std::istream& in, const std::string& want,
                const std::string& path) {
    std::string got;
    if (!(in >> got) || got != want)
        throw IoError("prior file '" + path + "': expected '" + want +
                      "', got '" + got + "'");
}

}  // namespace

ClassActivationModel load_prior(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open prior file: " + path);
    expect_tok(in, "vmfkd-prior", path);
    expect_tok(in, "v1", path);
    ClassActivationModel model;
    std::size_t c = 0, d = 0;
    std::string tok;
    expect_tok(in, "classes", path);
    in >> c;
    expect_tok(in, "dim", path);
    in >> d;
    expect_tok(in, "kappa", path);
    in >> tok;
    model.kappa = parse_double(tok);
    expect_tok(in, "per_class_kappa", path);
    in >> tok;
    if (tok != "none") {
        std::vector<double> pck{parse_double(tok)};
        for (std::size_t i = 1; i < c; ++i) {
            in >> tok;
            pck.push_back(parse_double(tok));
        }
        model.per_class_kappa = std::move(pck);
    }
    expect_tok(in, "source_norms", path);
    for (std::size_t i = 0; i < c; ++i) {
        if (!(in >> tok)) throw IoError("prior file '" + path + "': truncated");
        model.source_norms.push_back(parse_double(tok));
    }
    for (std::size_t i = 0; i < c; ++i) {
        expect_tok(in, "direction", path);
        std::size_t idx = 0;
        in >> idx;
        if (idx != i) throw IoError("prior file '" + path + "': direction order");
        std::vector<double> v(d, 0.0);
        for (auto& x : v) {
            if (!(in >> tok))
                throw IoError("prior file '" + path + "': truncated");
            x = parse_double(tok);
        }
        model.class_directions.push_back(UnitVector::from_unit(std::move(v)));
    }
    expect_tok(in, "end", path);
    model.validate();
    return model;
}

void save_relations_csv(const ClassRelationMatrix& rel, const std::string& path,
                        const std::string& teacher_checkpoint_hash) {
    rel.validate();
    std::ofstream out(path);
    if (!out) throw IoError("cannot open relations CSV for writing: " + path);
    const std::size_t c = rel.class_count();
    for (std::size_t j = 0; j < c; ++j) out << (j ? "," : "") << j;
    out << '\n';
    for (std::size_t i = 0; i < c; ++i) {
        for (std::size_t j = 0; j < c; ++j)
            out << (j ? "," : "") << fmt_double(rel.entries.at(i, j));
        out << '\n';
    }
    if (!out) throw IoError("write failed for relations CSV: " + path);

    nlohmann::json meta{{"format_version", 1},
                        {"n_samples", rel.sample_count},
                        {"kappa", rel.kappa_used},
                        {"temperature", rel.temperature_used},
                        {"seed", rel.seed},
                        {"teacher_checkpoint_hash", teacher_checkpoint_hash}};
    std::ofstream mout(path + ".meta.json");
    if (!mout) throw IoError("cannot write sidecar: " + path + ".meta.json");
    mout << meta.dump(2) << '\n';
}

ClassRelationMatrix load_relations_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open relations CSV: " + path);
    std::string line;
    if (!std::getline(in, line))
        throw IoError("relations CSV '" + path + "': empty file");
    std::size_t c = 1;
    for (char ch : line)
        if (ch == ',') ++c;
    ClassRelationMatrix rel;
    rel.entries = Matrix(c, c);
    for (std::size_t i = 0; i < c; ++i) {
        if (!std::getline(in, line))
            throw IoError("relations CSV '" + path + "': truncated");
        std::stringstream ss(line);
        std::string cell;
        for (std::size_t j = 0; j < c; ++j) {
            if (!std::getline(ss, cell, ','))
                throw IoError("relations CSV '" + path + "': short row " +
                              std::to_string(i));
            rel.entries.at(i, j) = parse_double(cell);
        }
    }
    std::ifstream min(path + ".meta.json");
    if (min) {
        nlohmann::json meta = nlohmann::json::parse(min);
        rel.sample_count = meta.value("n_samples", std::size_t{0});
        rel.kappa_used = meta.value("kappa", 0.0);
        rel.temperature_used = meta.value("temperature", 1.0);
        rel.seed = meta.value("seed", std::uint64_t{0});
    }
    rel.validate();
    return rel;
}

}  // namespace vmfkd
