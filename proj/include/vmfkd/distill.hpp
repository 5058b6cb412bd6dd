#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vmfkd/activation_model.hpp"
#include "vmfkd/dataset.hpp"
#include "vmfkd/network.hpp"

namespace vmfkd {

enum class DistillMode { label, kd, ckd, ckd_plus_kd };

DistillMode distill_mode_from_name(const std::string& name);
const char* distill_mode_name(DistillMode m);

struct DistillSpec {
    DistillMode mode = DistillMode::label;
    double temperature = 4.0;
    // Weight on the distillation term(s); 1 - alpha goes to the hard-label
    // cross-entropy. ckd_plus_kd splits alpha evenly over its two terms.
    double alpha = 0.5;
    // Multiply soft-target terms by temperature^2 (the usual convention that
    // keeps their gradient scale comparable to the hard loss).
    bool tau_squared_scale = true;
    const Network* teacher = nullptr;                // required for kd modes
    const ClassRelationMatrix* relations = nullptr;  // required for ckd modes

    void validate(std::size_t class_count) const;
};

// Cross-entropy of tempered student log-probabilities against the tempered
// teacher distribution (no temperature^2 factor here; composite applies it).
double kd_loss(const Prediction& student, const Prediction& teacher,
               double temperature);

// Same, against the fixed relation row for the example's label. The teacher
// network is never consulted.
double ckd_loss(const Prediction& student, std::size_t label,
                const ClassRelationMatrix& relations, double temperature);

// Composite per-example training loss for the spec's mode; reports each
// sub-term by name. The spec's teacher/relations must outlive the LossFn.
LossFn make_loss(const DistillSpec& spec);

// ---------------------------------------------------------------- shift

struct ShiftConfig {
    enum class Kind { none, photometric, downsample };
    Kind kind = Kind::none;
    double degree = 0.0;   // photometric amplitude in [0, 1)
    double factor = 1.0;   // downsample ratio in (0, 1]
    std::uint64_t seed = 0;

    // "photometric:0.4", "downsample:0.5", "none" -- used in CSV columns.
    std::string label() const;
    double param() const;
    void validate() const;
};

ShiftConfig::Kind shift_kind_from_name(const std::string& name);
const char* shift_kind_name(ShiftConfig::Kind k);

// Photometric: per image, brightness b ~ U(-degree, degree) and contrast
// s ~ U(1-degree, 1+degree), pixel -> clamp(s (x - 0.5) + 0.5 + b, 0, 1).
// Downsample: nearest-neighbor shrink to floor(factor * side), then
// nearest-neighbor expand back. Identity presets return an exact copy.
Dataset apply_shift(const Dataset& ds, const ShiftConfig& cfg);

// ---------------------------------------------------------------- runs

struct RunSettings {
    DistillMode mode = DistillMode::label;
    double temperature = 4.0;
    double alpha = 0.5;
    bool tau_squared_scale = true;
    // Used only when relations must be derived from the teacher (ckd modes
    // without a precomputed matrix).
    double kappa = 80.0;
    std::size_t relation_samples = 4096;
    bool temper_relations = true;
    // Evaluate on the shifted eval set instead of the clean one.
    bool eval_on_shifted = false;
};

struct RunResult {
    DistillMode mode = DistillMode::label;
    ShiftConfig shift;
    std::uint64_t seed = 0;
    std::vector<EpochMetrics> epochs;
    std::vector<double> eval_accuracy_per_epoch;
    double final_eval_accuracy = 0.0;
    double wall_seconds = 0.0;
    std::optional<Network> student;
};

// Trains one student on the shifted train split and evaluates top-1 accuracy
// on the (by default clean) eval split. kd modes forward the teacher on the
// same shifted inputs the student sees; ckd modes use only `relations`
// (derived once up front when absent).
RunResult run_experiment(const Network* teacher, const NetworkArch& student_arch,
                         const RunSettings& settings,
                         const ClassRelationMatrix* relations,
                         const ShiftConfig& shift, const Dataset& train_set,
                         const Dataset& eval_set, const TrainConfig& train_cfg);

// metrics CSV: one row per epoch per run.
void write_metrics_csv(const std::vector<RunResult>& runs,
                       const std::string& path);
// summary CSV: one row per run (final accuracy).
void write_summary_csv(const std::vector<RunResult>& runs,
                       const std::string& path);
// aggregate CSV: mean/stddev over seeds per (mode, shift).
void write_aggregate_csv(const std::vector<RunResult>& runs,
                         const std::string& path);

}  // namespace vmfkd
