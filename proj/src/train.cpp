#include <cmath>
#include <numeric>

#include "vmfkd/common.hpp"
#include "vmfkd/dataset.hpp"
#include "vmfkd/network.hpp"
#include "vmfkd/rng.hpp"

namespace vmfkd {

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (weight_decay < 0.0) throw ConfigError("weight_decay must be >= 0");
}

namespace {

constexpr std::uint64_t kShuffleStream = 0x22;

// Flat views over every parameter / gradient array, so the optimizers are a
// single loop.
std::vector<std::span<double>> param_views(Network& net) {
    std::vector<std::span<double>> views;
    for (auto& layer : net.hidden()) {
        views.push_back(layer.weights.data);
        views.push_back(layer.bias);
    }
    views.push_back(net.prototypes().data);
    if (net.final_bias()) views.push_back(*net.final_bias());
    return views;
}

std::vector<std::span<const double>> grad_views(const Gradients& g,
                                                bool has_bias) {
    std::vector<std::span<const double>> views;
    for (std::size_t l = 0; l < g.hidden_weights.size(); ++l) {
        views.push_back(g.hidden_weights[l].data);
        views.push_back(g.hidden_bias[l]);
    }
    views.push_back(g.prototypes.data);
    if (has_bias) views.push_back(g.final_bias);
    return views;
}

struct AdamState {
    std::vector<std::vector<double>> m, v;
    std::size_t step = 0;
    static constexpr double beta1 = 0.9;
    static constexpr double beta2 = 0.999;
    static constexpr double eps = 1e-8;

    void init(const std::vector<std::span<double>>& params) {
        for (const auto& p : params) {
            m.emplace_back(p.size(), 0.0);
            v.emplace_back(p.size(), 0.0);
        }
    }
};

}  // namespace

TrainResult train(Network& net, const Dataset& data, const TrainConfig& cfg,
                  const LossFn& loss,
                  const std::function<void(std::size_t, const Network&)>& on_epoch) {
    cfg.validate();
    data.validate();
    if (data.feature_dim() != net.input_dim())
        throw ConfigError("dataset feature dimension does not match network input");

    TrainResult result;
    auto params = param_views(net);
    AdamState adam;
    if (cfg.optimizer == TrainConfig::Optimizer::adam) adam.init(params);

    Rng rng = Rng(cfg.seed).split(kShuffleStream);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        std::size_t n_batches = 0;
        for (std::size_t start = 0; start < order.size();
             start += cfg.batch_size) {
            const std::size_t stop =
                std::min(order.size(), start + cfg.batch_size);
            std::vector<Example> batch;
            batch.reserve(stop - start);
            for (std::size_t k = start; k < stop; ++k)
                batch.push_back(
                    {data.features.row_span(order[k]), data.labels[order[k]]});

            double batch_loss = 0.0;
            Gradients grads;
            try {
                grads = backward(net, batch, loss, &batch_loss);
            } catch (const NumericError& e) {
                throw NumericError("training failed at epoch " +
                                   std::to_string(epoch) + ", batch " +
                                   std::to_string(n_batches) + ": " + e.what());
            }
            if (!std::isfinite(batch_loss))
                throw NumericError("training diverged (non-finite loss) at epoch " +
                                   std::to_string(epoch) + ", batch " +
                                   std::to_string(n_batches));
            epoch_loss += batch_loss;
            ++n_batches;

            auto gviews = grad_views(grads, net.final_bias().has_value());
            if (cfg.optimizer == TrainConfig::Optimizer::sgd) {
                for (std::size_t p = 0; p < params.size(); ++p) {
                    auto& w = params[p];
                    const auto& g = gviews[p];
                    for (std::size_t i = 0; i < w.size(); ++i) {
                        const double gi = g[i] + cfg.weight_decay * w[i];
                        w[i] -= cfg.learning_rate * gi;
                    }
                }
            } else {
                ++adam.step;
                const double bc1 =
                    1.0 - std::pow(AdamState::beta1, static_cast<double>(adam.step));
                const double bc2 =
                    1.0 - std::pow(AdamState::beta2, static_cast<double>(adam.step));
                for (std::size_t p = 0; p < params.size(); ++p) {
                    auto& w = params[p];
                    const auto& g = gviews[p];
                    auto& m = adam.m[p];
                    auto& v = adam.v[p];
                    for (std::size_t i = 0; i < w.size(); ++i) {
                        const double gi = g[i] + cfg.weight_decay * w[i];
                        m[i] = AdamState::beta1 * m[i] + (1.0 - AdamState::beta1) * gi;
                        v[i] = AdamState::beta2 * v[i] +
                               (1.0 - AdamState::beta2) * gi * gi;
                        const double mhat = m[i] / bc1;
                        const double vhat = v[i] / bc2;
                        w[i] -= cfg.learning_rate * mhat /
                                (std::sqrt(vhat) + AdamState::eps);
                    }
                }
            }
        }
        EpochMetrics em;
        em.epoch = epoch;
        em.train_loss = n_batches ? epoch_loss / static_cast<double>(n_batches) : 0.0;
        em.train_accuracy = accuracy(net, data);
        result.epochs.push_back(em);
        if (on_epoch) on_epoch(epoch, net);
    }
    return result;
}

double accuracy(const Network& net, const Dataset& data) {
    data.validate();
    std::size_t correct = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const Prediction pred = net.forward(data.features.row_span(i));
        std::size_t best = 0;
        for (std::size_t c = 1; c < pred.logits.size(); ++c)
            if (pred.logits[c] > pred.logits[best]) best = c;  // ties -> lowest
        if (best == data.labels[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(data.size());
}

}  // namespace vmfkd
