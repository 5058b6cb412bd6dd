#include "vmfkd/network.hpp"

#include <algorithm>
#include <cmath>

#include "vmfkd/common.hpp"
#include "vmfkd/rng.hpp"

namespace vmfkd {

Activation activation_from_name(const std::string& name) {
    if (name == "relu") return Activation::relu;
    if (name == "tanh") return Activation::tanh_act;
    if (name == "identity") return Activation::identity;
    throw ConfigError("unknown activation '" + name + "'");
}

const char* activation_name(Activation a) {
    switch (a) {
        case Activation::relu: return "relu";
        case Activation::tanh_act: return "tanh";
        case Activation::identity: return "identity";
    }
    return "?";
}

void NetworkArch::validate() const {
    if (layer_sizes.size() < 3)
        throw ConfigError("architecture needs input, >= 1 hidden, and class sizes");
    if (activations.size() != layer_sizes.size() - 2)
        throw ConfigError("need one activation per hidden layer");
    for (std::size_t s : layer_sizes)
        if (s == 0) throw ConfigError("zero-width layer");
    if (penultimate_dim() < 2)
        throw ConfigError("penultimate dimension must be >= 2");
    if (class_count() < 2) throw ConfigError("class count must be >= 2");
}

namespace {

constexpr std::uint64_t kInitStream = 0x11;

double apply_act(Activation a, double z) {
    switch (a) {
        case Activation::relu: return z > 0.0 ? z : 0.0;
        case Activation::tanh_act: return std::tanh(z);
        case Activation::identity: return z;
    }
    return z;
}

double act_derivative(Activation a, double z) {
    switch (a) {
        case Activation::relu: return z > 0.0 ? 1.0 : 0.0;
        case Activation::tanh_act: {
            const double t = std::tanh(z);
            return 1.0 - t * t;
        }
        case Activation::identity: return 1.0;
    }
    return 1.0;
}

void fill_fan_in_uniform(Matrix& w, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(w.cols));
    for (auto& v : w.data) v = rng.uniform(-bound, bound);
}

}  // namespace

Network::Network(NetworkArch arch, std::uint64_t seed)
    : arch_(std::move(arch)), init_seed_(seed), init_spec_("fanin_uniform_v1") {
    arch_.validate();
    Rng rng = Rng(seed).split(kInitStream);
    const auto& sizes = arch_.layer_sizes;
    for (std::size_t l = 0; l + 2 < sizes.size(); ++l) {
        DenseLayer layer;
        layer.weights = Matrix(sizes[l + 1], sizes[l]);
        layer.bias.assign(sizes[l + 1], 0.0);
        layer.act = arch_.activations[l];
        fill_fan_in_uniform(layer.weights, rng);
        hidden_.push_back(std::move(layer));
    }
    prototypes_ = Matrix(arch_.class_count(), arch_.penultimate_dim());
    fill_fan_in_uniform(prototypes_, rng);
    if (arch_.final_bias)
        final_bias_ = std::vector<double>(arch_.class_count(), 0.0);
}

std::vector<double> Network::penultimate(std::span<const double> x) const {
    if (x.size() != input_dim())
        throw NumericError("input dimension mismatch: expected " +
                           std::to_string(input_dim()) + ", got " +
                           std::to_string(x.size()));
    std::vector<double> h(x.begin(), x.end());
    std::vector<double> z;
    for (const auto& layer : hidden_) {
        z.assign(layer.weights.rows, 0.0);
        matvec(layer.weights, h, z);
        for (std::size_t i = 0; i < z.size(); ++i)
            z[i] = apply_act(layer.act, z[i] + layer.bias[i]);
        h = z;
    }
    return h;
}

Prediction Network::forward(std::span<const double> x) const {
    Prediction pred;
    pred.penultimate = penultimate(x);
    pred.logits.assign(class_count(), 0.0);
    matvec(prototypes_, pred.penultimate, pred.logits);
    if (final_bias_)
        for (std::size_t i = 0; i < pred.logits.size(); ++i)
            pred.logits[i] += (*final_bias_)[i];
    for (double v : pred.logits)
        if (!std::isfinite(v))
            throw NumericError("non-finite logit in forward pass");
    pred.probabilities = softmax(pred.logits);
    return pred;
}

Prediction Network::normalized_forward(std::span<const double> x) const {
    Prediction pred;
    std::vector<double> a = penultimate(x);
    const double an = norm(a);
    if (!(an > 0.0))
        throw NumericError("normalized_forward: zero penultimate activation");
    kernels::scal(1.0 / an, a.data(), a.size());
    pred.logits.assign(class_count(), 0.0);
    for (std::size_t i = 0; i < class_count(); ++i) {
        const double wn = norm(prototypes_.row_span(i));
        if (!(wn > 0.0))
            throw NumericError("normalized_forward: zero prototype for class " +
                               std::to_string(i));
        pred.logits[i] = dot(prototypes_.row_span(i), a) / wn;
    }
    pred.probabilities = softmax(pred.logits);
    pred.penultimate = std::move(a);
    return pred;
}

bool Network::same_values(const Network& other) const {
    if (arch_.layer_sizes != other.arch_.layer_sizes) return false;
    if (hidden_.size() != other.hidden_.size()) return false;
    for (std::size_t l = 0; l < hidden_.size(); ++l) {
        if (hidden_[l].weights.data != other.hidden_[l].weights.data) return false;
        if (hidden_[l].bias != other.hidden_[l].bias) return false;
    }
    if (prototypes_.data != other.prototypes_.data) return false;
    return final_bias_ == other.final_bias_;
}

// --------------------------------------------------------------- softmax

std::vector<double> softmax(std::span<const double> logits) {
    std::vector<double> p(logits.begin(), logits.end());
    const double mx = *std::max_element(p.begin(), p.end());
    double sum = 0.0;
    for (auto& v : p) {
        v = std::exp(v - mx);
        sum += v;
    }
    for (auto& v : p) v /= sum;
    return p;
}

std::vector<double> log_softmax(std::span<const double> logits) {
    std::vector<double> lp(logits.begin(), logits.end());
    const double mx = *std::max_element(lp.begin(), lp.end());
    double sum = 0.0;
    for (double v : lp) sum += std::exp(v - mx);
    const double lse = mx + std::log(sum);
    for (auto& v : lp) v -= lse;
    return lp;
}

std::vector<double> tempered_softmax(std::span<const double> logits,
                                     double temperature) {
    if (!(temperature > 0.0)) throw NumericError("temperature must be > 0");
    std::vector<double> scaled(logits.begin(), logits.end());
    for (auto& v : scaled) v /= temperature;
    return softmax(scaled);
}

// --------------------------------------------------------------- losses

double cross_entropy_loss(const Prediction& pred, std::size_t label) {
    if (label >= pred.logits.size())
        throw NumericError("class index " + std::to_string(label) +
                           " out of range (c = " +
                           std::to_string(pred.logits.size()) + ")");
    return -log_softmax(pred.logits)[label];
}

double cross_entropy_loss(const Prediction& pred,
                          std::span<const double> soft_target) {
    if (soft_target.size() != pred.logits.size())
        throw NumericError("soft target size mismatch");
    const auto lp = log_softmax(pred.logits);
    double loss = 0.0;
    for (std::size_t i = 0; i < lp.size(); ++i)
        loss -= soft_target[i] * lp[i];
    return loss;
}

LossFn label_loss() {
    return [](const Prediction& pred, std::span<const double>, std::size_t label) {
        LossGrad out;
        out.value = cross_entropy_loss(pred, label);
        out.dlogits = pred.probabilities;
        out.dlogits[label] -= 1.0;
        out.terms.emplace_back("xent", out.value);
        return out;
    };
}

// --------------------------------------------------------------- gradients

Gradients Gradients::zeros_like(const Network& net) {
    Gradients g;
    for (const auto& layer : net.hidden()) {
        g.hidden_weights.emplace_back(layer.weights.rows, layer.weights.cols);
        g.hidden_bias.emplace_back(layer.bias.size(), 0.0);
    }
    g.prototypes = Matrix(net.prototypes().rows, net.prototypes().cols);
    if (net.final_bias()) g.final_bias.assign(net.class_count(), 0.0);
    return g;
}

void Gradients::scale(double s) {
    for (auto& m : hidden_weights) kernels::scal(s, m.data.data(), m.data.size());
    for (auto& b : hidden_bias) kernels::scal(s, b.data(), b.size());
    kernels::scal(s, prototypes.data.data(), prototypes.data.size());
    if (!final_bias.empty()) kernels::scal(s, final_bias.data(), final_bias.size());
}

namespace detail {

struct ForwardTrace {
    // pre[l] holds W h + b for hidden layer l; act[l] the activated output.
    std::vector<std::vector<double>> pre;
    std::vector<std::vector<double>> act;
};

Prediction forward_traced(const Network& net, std::span<const double> x,
                          ForwardTrace& trace) {
    trace.pre.clear();
    trace.act.clear();
    std::vector<double> h(x.begin(), x.end());
    for (const auto& layer : net.hidden()) {
        std::vector<double> z(layer.weights.rows, 0.0);
        matvec(layer.weights, h, z);
        for (std::size_t i = 0; i < z.size(); ++i) z[i] += layer.bias[i];
        trace.pre.push_back(z);
        for (std::size_t i = 0; i < z.size(); ++i)
            z[i] = apply_act(layer.act, z[i]);
        trace.act.push_back(z);
        h = std::move(z);
    }
    Prediction pred;
    pred.penultimate = std::move(h);
    pred.logits.assign(net.class_count(), 0.0);
    matvec(net.prototypes(), pred.penultimate, pred.logits);
    if (net.final_bias())
        for (std::size_t i = 0; i < pred.logits.size(); ++i)
            pred.logits[i] += (*net.final_bias())[i];
    pred.probabilities = softmax(pred.logits);
    return pred;
}

// Accumulates one example's parameter gradients given dLoss/dlogits.
void backprop_into(const Network& net, std::span<const double> x,
                   const ForwardTrace& trace, const Prediction& pred,
                   std::span<const double> dlogits, Gradients& grads) {
    const std::size_t n_hidden = net.hidden().size();
    rank1_update(grads.prototypes, 1.0, dlogits, pred.penultimate);
    if (!grads.final_bias.empty())
        kernels::axpy(1.0, dlogits.data(), grads.final_bias.data(),
                      dlogits.size());
    std::vector<double> delta(net.penultimate_dim(), 0.0);
    matvec_t(net.prototypes(), dlogits, delta);
    for (std::size_t l = n_hidden; l-- > 0;) {
        const auto& layer = net.hidden()[l];
        for (std::size_t i = 0; i < delta.size(); ++i)
            delta[i] *= act_derivative(layer.act, trace.pre[l][i]);
        std::span<const double> input =
            l == 0 ? x : std::span<const double>(trace.act[l - 1]);
        rank1_update(grads.hidden_weights[l], 1.0, delta, input);
        kernels::axpy(1.0, delta.data(), grads.hidden_bias[l].data(),
                      delta.size());
        if (l > 0) {
            std::vector<double> next(layer.weights.cols, 0.0);
            matvec_t(layer.weights, delta, next);
            delta = std::move(next);
        }
    }
}

}  // namespace detail

Gradients backward(const Network& net, std::span<const Example> batch,
                   const LossFn& loss, double* mean_loss) {
    if (batch.empty()) throw NumericError("backward: empty batch");
    Gradients grads = Gradients::zeros_like(net);
    detail::ForwardTrace trace;
    double total = 0.0;
    for (const auto& ex : batch) {
        const Prediction pred = detail::forward_traced(net, ex.x, trace);
        LossGrad lg = loss(pred, ex.x, ex.label);
        total += lg.value;
        detail::backprop_into(net, ex.x, trace, pred, lg.dlogits, grads);
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    grads.scale(inv);
    if (mean_loss) *mean_loss = total * inv;
    return grads;
}

}  // namespace vmfkd
