#include "vmfkd/distill.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>

#include "vmfkd/common.hpp"
#include "vmfkd/rng.hpp"

namespace vmfkd {

DistillMode distill_mode_from_name(const std::string& name) {
    if (name == "label") return DistillMode::label;
    if (name == "kd") return DistillMode::kd;
    if (name == "ckd") return DistillMode::ckd;
    if (name == "ckd_plus_kd" || name == "ckd+kd") return DistillMode::ckd_plus_kd;
    throw ConfigError("unknown distillation mode '" + name + "'");
}

const char* distill_mode_name(DistillMode m) {
    switch (m) {
        case DistillMode::label: return "label";
        case DistillMode::kd: return "kd";
        case DistillMode::ckd: return "ckd";
        case DistillMode::ckd_plus_kd: return "ckd_plus_kd";
    }
    return "?";
}

void DistillSpec::validate(std::size_t class_count) const {
    if (!(temperature > 0.0)) throw ConfigError("temperature must be > 0");
    if (alpha < 0.0 || alpha > 1.0) throw ConfigError("alpha must be in [0, 1]");
    const bool needs_teacher =
        mode == DistillMode::kd || mode == DistillMode::ckd_plus_kd;
    const bool needs_relations =
        mode == DistillMode::ckd || mode == DistillMode::ckd_plus_kd;
    if (needs_teacher && teacher == nullptr)
        throw ConfigError(std::string(distill_mode_name(mode)) +
                          " mode requires a teacher network");
    if (needs_relations && relations == nullptr)
        throw ConfigError(std::string(distill_mode_name(mode)) +
                          " mode requires a class-relation matrix");
    if (needs_teacher && teacher->class_count() != class_count)
        throw ConfigError("teacher class count mismatch");
    if (needs_relations && relations->class_count() != class_count)
        throw ConfigError("relation matrix class count mismatch");
}

double kd_loss(const Prediction& student, const Prediction& teacher,
               double temperature) {
    if (student.logits.size() != teacher.logits.size())
        throw NumericError("kd_loss class count mismatch");
    if (!(temperature > 0.0)) throw NumericError("temperature must be > 0");
    const auto target = tempered_softmax(teacher.logits, temperature);
    std::vector<double> scaled(student.logits);
    for (auto& v : scaled) v /= temperature;
    const auto lp = log_softmax(scaled);
    double loss = 0.0;
    for (std::size_t i = 0; i < lp.size(); ++i) loss -= target[i] * lp[i];
    return loss;
}

double ckd_loss(const Prediction& student, std::size_t label,
                const ClassRelationMatrix& relations, double temperature) {
    if (label >= relations.class_count())
        throw NumericError("ckd_loss: class index " + std::to_string(label) +
                           " out of range");
    if (student.logits.size() != relations.class_count())
        throw NumericError("ckd_loss class count mismatch");
    if (!(temperature > 0.0)) throw NumericError("temperature must be > 0");
    std::vector<double> scaled(student.logits);
    for (auto& v : scaled) v /= temperature;
    const auto lp = log_softmax(scaled);
    double loss = 0.0;
    for (std::size_t i = 0; i < lp.size(); ++i)
        loss -= relations.entries.at(label, i) * lp[i];
    return loss;
}

namespace {

// d/dlogits of the tempered cross-entropy -sum target log softmax(z/tau):
// (softmax(z/tau) - target) / tau.
void add_soft_grad(std::span<const double> student_logits,
                   std::span<const double> target, double tau, double weight,
                   std::vector<double>& dlogits) {
    const auto p = tempered_softmax(student_logits, tau);
    for (std::size_t i = 0; i < p.size(); ++i)
        dlogits[i] += weight * (p[i] - target[i]) / tau;
}

}  // namespace

LossFn make_loss(const DistillSpec& spec) {
    // Copy scalars; teacher/relations stay as caller-owned pointers.
    const DistillSpec s = spec;
    return [s](const Prediction& pred, std::span<const double> x,
               std::size_t label) {
        const std::size_t c = pred.logits.size();
        s.validate(c);
        const double tau = s.temperature;
        const double soft_scale = s.tau_squared_scale ? tau * tau : 1.0;
        LossGrad out;
        out.dlogits.assign(c, 0.0);

        double w_xent = 1.0, w_kd = 0.0, w_ckd = 0.0;
        switch (s.mode) {
            case DistillMode::label: break;
            case DistillMode::kd:
                w_xent = 1.0 - s.alpha;
                w_kd = s.alpha;
                break;
            case DistillMode::ckd:
                w_xent = 1.0 - s.alpha;
                w_ckd = s.alpha;
                break;
            case DistillMode::ckd_plus_kd:
                w_xent = 1.0 - s.alpha;
                w_kd = 0.5 * s.alpha;
                w_ckd = 0.5 * s.alpha;
                break;
        }

        if (w_xent != 0.0) {
            const double xent = cross_entropy_loss(pred, label);
            out.value += w_xent * xent;
            for (std::size_t i = 0; i < c; ++i)
                out.dlogits[i] +=
                    w_xent * (pred.probabilities[i] - (i == label ? 1.0 : 0.0));
            out.terms.emplace_back("xent", xent);
        }
        if (w_kd != 0.0) {
            const Prediction teacher_pred = s.teacher->forward(x);
            const double kd = kd_loss(pred, teacher_pred, tau);
            out.value += w_kd * soft_scale * kd;
            add_soft_grad(pred.logits,
                          tempered_softmax(teacher_pred.logits, tau), tau,
                          w_kd * soft_scale, out.dlogits);
            out.terms.emplace_back("kd", kd);
        }
        if (w_ckd != 0.0) {
            const double ckd = ckd_loss(pred, label, *s.relations, tau);
            out.value += w_ckd * soft_scale * ckd;
            add_soft_grad(pred.logits, s.relations->entries.row_span(label),
                          tau, w_ckd * soft_scale, out.dlogits);
            out.terms.emplace_back("ckd", ckd);
        }
        return out;
    };
}

// ---------------------------------------------------------------- shift

ShiftConfig::Kind shift_kind_from_name(const std::string& name) {
    if (name == "none") return ShiftConfig::Kind::none;
    if (name == "photometric") return ShiftConfig::Kind::photometric;
    if (name == "downsample") return ShiftConfig::Kind::downsample;
    throw ConfigError("unknown shift kind '" + name + "'");
}

const char* shift_kind_name(ShiftConfig::Kind k) {
    switch (k) {
        case ShiftConfig::Kind::none: return "none";
        case ShiftConfig::Kind::photometric: return "photometric";
        case ShiftConfig::Kind::downsample: return "downsample";
    }
    return "?";
}

void ShiftConfig::validate() const {
    if (kind == Kind::photometric && (degree < 0.0 || degree >= 1.0))
        throw ConfigError("photometric degree must be in [0, 1)");
    if (kind == Kind::downsample && (!(factor > 0.0) || factor > 1.0))
        throw ConfigError("downsample factor must be in (0, 1]");
}

double ShiftConfig::param() const {
    switch (kind) {
        case Kind::none: return 0.0;
        case Kind::photometric: return degree;
        case Kind::downsample: return factor;
    }
    return 0.0;
}

std::string ShiftConfig::label() const {
    if (kind == Kind::none) return "none";
    return std::string(shift_kind_name(kind)) + ":" + fmt_double(param());
}

Dataset apply_shift(const Dataset& ds, const ShiftConfig& cfg) {
    cfg.validate();
    ds.validate();
    if (cfg.kind == ShiftConfig::Kind::none) return ds;
    const std::size_t side = ds.image_rows;
    if (side == 0 || ds.image_cols != side || side * side != ds.feature_dim())
        throw ConfigError("apply_shift requires square image features");

    if (cfg.kind == ShiftConfig::Kind::photometric) {
        if (cfg.degree == 0.0) return ds;
        Dataset out = ds;
        const Rng master(cfg.seed);
        for (std::size_t n = 0; n < out.size(); ++n) {
            Rng rng = master.split(n);
            const double b = rng.uniform(-cfg.degree, cfg.degree);
            const double s = rng.uniform(1.0 - cfg.degree, 1.0 + cfg.degree);
            double* px = out.features.row(n);
            for (std::size_t i = 0; i < out.feature_dim(); ++i)
                px[i] = std::clamp(s * (px[i] - 0.5) + 0.5 + b, 0.0, 1.0);
        }
        return out;
    }

    // downsample
    if (cfg.factor == 1.0) return ds;
    const auto small_side = static_cast<std::size_t>(
        std::floor(cfg.factor * static_cast<double>(side)));
    if (small_side < 1) throw ConfigError("downsample factor collapses the image");
    Dataset out = ds;
    std::vector<double> small(small_side * small_side, 0.0);
    for (std::size_t n = 0; n < out.size(); ++n) {
        double* px = out.features.row(n);
        for (std::size_t i = 0; i < small_side; ++i) {
            const std::size_t si = i * side / small_side;
            for (std::size_t j = 0; j < small_side; ++j) {
                const std::size_t sj = j * side / small_side;
                small[i * small_side + j] = px[si * side + sj];
            }
        }
        for (std::size_t i = 0; i < side; ++i) {
            const std::size_t si = i * small_side / side;
            for (std::size_t j = 0; j < side; ++j) {
                const std::size_t sj = j * small_side / side;
                px[i * side + j] = small[si * small_side + sj];
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------- runs

RunResult run_experiment(const Network* teacher, const NetworkArch& student_arch,
                         const RunSettings& settings,
                         const ClassRelationMatrix* relations,
                         const ShiftConfig& shift, const Dataset& train_set,
                         const Dataset& eval_set, const TrainConfig& train_cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    const Dataset shifted = apply_shift(train_set, shift);

    const bool needs_relations = settings.mode == DistillMode::ckd ||
                                 settings.mode == DistillMode::ckd_plus_kd;
    ClassRelationMatrix derived;
    if (needs_relations && relations == nullptr) {
        if (teacher == nullptr)
            throw ConfigError("ckd without a precomputed relation matrix needs "
                              "the teacher to derive one");
        // The single up-front teacher consultation of the class-wise scheme.
        const ClassActivationModel model =
            derive_model(teacher->prototypes(), settings.kappa, false);
        derived = class_relations(
            *teacher, model, settings.relation_samples,
            settings.temper_relations ? settings.temperature : 1.0,
            train_cfg.seed);
        relations = &derived;
    }

    DistillSpec spec;
    spec.mode = settings.mode;
    spec.temperature = settings.temperature;
    spec.alpha = settings.alpha;
    spec.tau_squared_scale = settings.tau_squared_scale;
    spec.teacher = teacher;
    spec.relations = relations;
    // CKD training must not depend on the teacher object at all.
    if (settings.mode == DistillMode::ckd) spec.teacher = nullptr;
    spec.validate(train_set.class_count);

    RunResult result;
    result.mode = settings.mode;
    result.shift = shift;
    result.seed = train_cfg.seed;

    Network student(student_arch, train_cfg.seed);
    const Dataset& eval_used =
        settings.eval_on_shifted ? apply_shift(eval_set, shift) : eval_set;
    TrainResult tr = train(student, shifted, train_cfg, make_loss(spec),
                           [&](std::size_t, const Network& net) {
                               result.eval_accuracy_per_epoch.push_back(
                                   accuracy(net, eval_used));
                           });
    result.epochs = std::move(tr.epochs);
    result.final_eval_accuracy = result.eval_accuracy_per_epoch.empty()
                                     ? accuracy(student, eval_used)
                                     : result.eval_accuracy_per_epoch.back();
    result.student.emplace(std::move(student));
    result.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    return result;
}

// ---------------------------------------------------------------- CSVs

void write_metrics_csv(const std::vector<RunResult>& runs,
                       const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open metrics CSV for writing: " + path);
    out << "mode,shift_kind,shift_param,seed,epoch,train_loss,eval_accuracy\n";
    for (const auto& run : runs)
        for (std::size_t e = 0; e < run.epochs.size(); ++e)
            out << distill_mode_name(run.mode) << ','
                << shift_kind_name(run.shift.kind) << ','
                << fmt_double(run.shift.param()) << ',' << run.seed << ','
                << run.epochs[e].epoch << ','
                << fmt_double(run.epochs[e].train_loss) << ','
                << fmt_double(run.eval_accuracy_per_epoch[e]) << '\n';
    if (!out) throw IoError("write failed for metrics CSV: " + path);
}

void write_summary_csv(const std::vector<RunResult>& runs,
                       const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open summary CSV for writing: " + path);
    out << "mode,shift_kind,shift_param,seed,final_train_loss,eval_accuracy,"
           "wall_seconds\n";
    for (const auto& run : runs)
        out << distill_mode_name(run.mode) << ','
            << shift_kind_name(run.shift.kind) << ','
            << fmt_double(run.shift.param()) << ',' << run.seed << ','
            << fmt_double(run.epochs.empty() ? 0.0
                                             : run.epochs.back().train_loss)
            << ',' << fmt_double(run.final_eval_accuracy) << ','
            << fmt_double(run.wall_seconds) << '\n';
    if (!out) throw IoError("write failed for summary CSV: " + path);
}

void write_aggregate_csv(const std::vector<RunResult>& runs,
                         const std::string& path) {
    std::map<std::pair<std::string, std::string>, std::vector<double>> groups;
    std::vector<std::pair<std::string, std::string>> order;
    for (const auto& run : runs) {
        const std::pair<std::string, std::string> key{
            distill_mode_name(run.mode), run.shift.label()};
        if (groups.find(key) == groups.end()) order.push_back(key);
        groups[key].push_back(run.final_eval_accuracy);
    }
    std::ofstream out(path);
    if (!out) throw IoError("cannot open aggregate CSV for writing: " + path);
    out << "mode,shift,n_seeds,mean_accuracy,stddev_accuracy\n";
    for (const auto& key : order) {
        const auto& accs = groups[key];
        double mean = 0.0;
        for (double a : accs) mean += a;
        mean /= static_cast<double>(accs.size());
        double var = 0.0;
        for (double a : accs) var += (a - mean) * (a - mean);
        var /= static_cast<double>(accs.size());
        out << key.first << ',' << key.second << ',' << accs.size() << ','
            << fmt_double(mean) << ',' << fmt_double(std::sqrt(var)) << '\n';
    }
    if (!out) throw IoError("write failed for aggregate CSV: " + path);
}

}  // namespace vmfkd
