#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vmfkd/linalg.hpp"

namespace vmfkd {

enum class Activation { relu, tanh_act, identity };

Activation activation_from_name(const std::string& name);
const char* activation_name(Activation a);

struct NetworkArch {
    // input, hidden widths..., class count. The last hidden width is the
    // penultimate dimension d fed into the final layer.
    std::vector<std::size_t> layer_sizes;
    // One activation per hidden layer (layer_sizes.size() - 2 entries).
    std::vector<Activation> activations;
    bool final_bias = false;

    std::size_t input_dim() const { return layer_sizes.front(); }
    std::size_t penultimate_dim() const {
        return layer_sizes[layer_sizes.size() - 2];
    }
    std::size_t class_count() const { return layer_sizes.back(); }
    void validate() const;
};

struct DenseLayer {
    Matrix weights;  // out x in, row-major
    std::vector<double> bias;
    Activation act = Activation::relu;
};

struct Prediction {
    std::vector<double> logits;
    std::vector<double> probabilities;  // softmax of logits
    std::vector<double> penultimate;    // activation fed into the final layer
};

class Network {
  public:
    // Fan-in-scaled uniform initialization, deterministic in the seed.
    Network(NetworkArch arch, std::uint64_t seed);

    const NetworkArch& arch() const { return arch_; }
    std::size_t input_dim() const { return arch_.input_dim(); }
    std::size_t penultimate_dim() const { return arch_.penultimate_dim(); }
    std::size_t class_count() const { return arch_.class_count(); }
    std::uint64_t init_seed() const { return init_seed_; }
    const std::string& init_spec() const { return init_spec_; }

    std::vector<DenseLayer>& hidden() { return hidden_; }
    const std::vector<DenseLayer>& hidden() const { return hidden_; }
    // Final layer stored as c x d; row i is the prototype for class i.
    Matrix& prototypes() { return prototypes_; }
    const Matrix& prototypes() const { return prototypes_; }
    std::optional<std::vector<double>>& final_bias() { return final_bias_; }
    const std::optional<std::vector<double>>& final_bias() const {
        return final_bias_;
    }

    Prediction forward(std::span<const double> x) const;
    // Logits are cosines between the normalized activation and normalized
    // prototypes; the final bias is dropped.
    Prediction normalized_forward(std::span<const double> x) const;

    // Trunk up to (and including) the penultimate activation.
    std::vector<double> penultimate(std::span<const double> x) const;

    bool same_values(const Network& other) const;

  private:
    friend Network load_checkpoint(const std::string& path);
    Network() = default;

    NetworkArch arch_;
    std::vector<DenseLayer> hidden_;
    Matrix prototypes_;
    std::optional<std::vector<double>> final_bias_;
    std::uint64_t init_seed_ = 0;
    std::string init_spec_;
};

// --------------------------------------------------------------- softmax

std::vector<double> softmax(std::span<const double> logits);
std::vector<double> log_softmax(std::span<const double> logits);
// softmax(logits / temperature)
std::vector<double> tempered_softmax(std::span<const double> logits,
                                     double temperature);

// --------------------------------------------------------------- losses

double cross_entropy_loss(const Prediction& pred, std::size_t label);
double cross_entropy_loss(const Prediction& pred,
                          std::span<const double> soft_target);

// Per-example training loss: value, gradient w.r.t. student logits, and the
// named sub-terms for reporting.
struct LossGrad {
    double value = 0.0;
    std::vector<double> dlogits;
    std::vector<std::pair<std::string, double>> terms;
};
using LossFn = std::function<LossGrad(
    const Prediction& pred, std::span<const double> x, std::size_t label)>;

LossFn label_loss();

// --------------------------------------------------------------- gradients

struct Gradients {
    std::vector<Matrix> hidden_weights;
    std::vector<std::vector<double>> hidden_bias;
    Matrix prototypes;
    std::vector<double> final_bias;

    static Gradients zeros_like(const Network& net);
    void scale(double s);
};

struct Example {
    std::span<const double> x;
    std::size_t label;
};

// Exact mean-batch gradients of the loss w.r.t. every parameter.
Gradients backward(const Network& net, std::span<const Example> batch,
                   const LossFn& loss, double* mean_loss = nullptr);

// --------------------------------------------------------------- training

struct TrainConfig {
    enum class Optimizer { sgd, adam };
    Optimizer optimizer = Optimizer::adam;
    double learning_rate = 1e-3;
    std::size_t batch_size = 64;
    std::size_t epochs = 30;
    std::uint64_t seed = 0;
    double weight_decay = 0.0;

    void validate() const;
};

struct EpochMetrics {
    std::size_t epoch = 0;  // 1-based
    double train_loss = 0.0;
    double train_accuracy = 0.0;
};

struct Dataset;  // see dataset.hpp

struct TrainResult {
    std::vector<EpochMetrics> epochs;
};

// Trains in place, single-threaded, bit-deterministic in cfg.seed. Throws
// NumericError naming the epoch and batch if the loss goes non-finite.
// on_epoch (optional) runs after each epoch with the current network.
TrainResult train(Network& net, const Dataset& data, const TrainConfig& cfg,
                  const LossFn& loss,
                  const std::function<void(std::size_t, const Network&)>&
                      on_epoch = nullptr);

double accuracy(const Network& net, const Dataset& data);

// --------------------------------------------------------------- checkpoint

// Versioned text format; decimal floats printed in shortest exact form, so
// load -> save round-trips value-identically.
void save_checkpoint(const Network& net, const std::string& path);
Network load_checkpoint(const std::string& path);

}  // namespace vmfkd
