#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vmfkd/network.hpp"
#include "vmfkd/vmf.hpp"

namespace vmfkd {

// Per-class vMF components q(a|i) read off the final layer: directions are
// the normalized prototype rows, the concentration is a shared
// hyperparameter (optionally scaled per class by |w_i| / mean |w_j|).
struct ClassActivationModel {
    std::vector<UnitVector> class_directions;
    double kappa = 0.0;
    std::optional<std::vector<double>> per_class_kappa;
    std::vector<double> source_norms;

    std::size_t class_count() const { return class_directions.size(); }
    std::size_t dim() const { return class_directions.front().dim(); }
    double concentration(std::size_t i) const {
        return per_class_kappa ? (*per_class_kappa)[i] : kappa;
    }
    void validate() const;
};

// prototypes: c x d, row i is w_i. Throws naming the class on a zero row.
ClassActivationModel derive_model(const Matrix& prototypes, double kappa,
                                  bool per_class_scaling);

// q(i|a) = vMF(a; w_i, k_i) / sum_j vMF(a; w_j, k_j), in log space.
std::vector<double> posterior_from_model(const ClassActivationModel& model,
                                         const UnitVector& a_bar);

// Monte Carlo estimate of the teacher's average prediction per class:
// row i = (1/N) sum_j softmax(P a_j / temperature), a_j ~ vMF(w_i, k_i).
struct ClassRelationMatrix {
    Matrix entries;  // c x c, row-stochastic
    std::size_t sample_count = 0;
    double kappa_used = 0.0;
    double temperature_used = 1.0;
    std::uint64_t seed = 0;

    std::size_t class_count() const { return entries.rows; }
    void validate() const;
};

ClassRelationMatrix class_relations(const Network& teacher,
                                    const ClassActivationModel& model,
                                    std::size_t n_samples, double temperature,
                                    std::uint64_t seed);

// Mean KL(softmax(P a) || posterior_from_model(a_bar)) over a dataset, plus
// the norm statistics that control how close the pairing is to exact. With
// per_sample_kappa, each example's component concentrations are set to
// |w_i| * |a| (the exact-identity configuration).
struct GenDiscReport {
    double mean_kl = 0.0;
    double mean_activation_norm = 0.0;
    double stddev_activation_norm = 0.0;
    std::vector<double> per_class_mean_activation_norm;
    std::vector<double> per_class_stddev_activation_norm;
    std::vector<double> prototype_norms;
    double prototype_norm_mean = 0.0;
    double prototype_norm_stddev = 0.0;
};

GenDiscReport gen_disc_gap(const Network& teacher,
                           const ClassActivationModel& model,
                           const Dataset& data, bool per_sample_kappa = false);

// ---------------------------------------------------------------- files

// Versioned text prior file p(z|i); re-importing yields identical values.
void save_prior(const ClassActivationModel& model, const std::string& path);
ClassActivationModel load_prior(const std::string& path);

// Relation matrix CSV (header row of class ids, then c rows of c decimals)
// plus a JSON sidecar '<path>.meta.json' recording N, kappa, temperature,
// seed, and the teacher checkpoint hash.
void save_relations_csv(const ClassRelationMatrix& rel, const std::string& path,
                        const std::string& teacher_checkpoint_hash);
ClassRelationMatrix load_relations_csv(const std::string& path);

}  // namespace vmfkd
