#include <fstream>
#include <sstream>

#include "vmfkd/common.hpp"
#include "vmfkd/network.hpp"

namespace vmfkd {
namespace {

void expect(std::istream& in, const std::string& token, const std::string& path) {
    std::string got;
    if (!(in >> got) || got != token)
        throw IoError("checkpoint '" + path + "': expected '" + token +
                      "', got '" + got + "'");
}

double read_double(std::istream& in, const std::string& path) {
    std::string tok;
    if (!(in >> tok)) throw IoError("checkpoint '" + path + "': truncated");
    return parse_double(tok);
}

std::size_t read_size(std::istream& in, const std::string& path) {
    long long v = -1;
    if (!(in >> v) || v < 0)
        throw IoError("checkpoint '" + path + "': bad integer field");
    return static_cast<std::size_t>(v);
}

void write_array(std::ostream& out, std::span<const double> values) {
    for (std::size_t i = 0; i < values.size(); ++i) {
        out << fmt_double(values[i]);
        out << ((i + 1) % 8 == 0 || i + 1 == values.size() ? '\n' : ' ');
    }
}

void read_array(std::istream& in, std::span<double> values,
                const std::string& path) {
    for (auto& v : values) v = read_double(in, path);
}

}  // namespace

void save_checkpoint(const Network& net, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open checkpoint for writing: " + path);
    out << "vmfkd-checkpoint v1\n";
    out << "layer_sizes";
    for (std::size_t s : net.arch().layer_sizes) out << ' ' << s;
    out << "\nactivations";
    for (Activation a : net.arch().activations) out << ' ' << activation_name(a);
    out << "\nfinal_bias " << (net.final_bias() ? 1 : 0) << '\n';
    out << "seed " << net.init_seed() << '\n';
    out << "init " << net.init_spec() << '\n';
    for (std::size_t l = 0; l < net.hidden().size(); ++l) {
        const auto& layer = net.hidden()[l];
        out << "hidden " << l << ' ' << layer.weights.rows << ' '
            << layer.weights.cols << '\n';
        write_array(out, layer.weights.data);
        out << "bias " << l << '\n';
        write_array(out, layer.bias);
    }
    out << "final " << net.prototypes().rows << ' ' << net.prototypes().cols
        << '\n';
    write_array(out, net.prototypes().data);
    if (net.final_bias()) {
        out << "final_bias_values\n";
        write_array(out, *net.final_bias());
    }
    out << "end\n";
    if (!out) throw IoError("write failed for checkpoint: " + path);
}

Network load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open checkpoint: " + path);
    expect(in, "vmfkd-checkpoint", path);
    expect(in, "v1", path);

    Network net;
    expect(in, "layer_sizes", path);
    // Sizes run until the 'activations' token.
    std::string tok;
    std::vector<std::size_t> sizes;
    while (in >> tok && tok != "activations")
        sizes.push_back(static_cast<std::size_t>(std::stoull(tok)));
    if (tok != "activations")
        throw IoError("checkpoint '" + path + "': missing activations");
    net.arch_.layer_sizes = sizes;
    for (std::size_t i = 0; i + 2 < sizes.size(); ++i) {
        if (!(in >> tok)) throw IoError("checkpoint '" + path + "': truncated");
        net.arch_.activations.push_back(activation_from_name(tok));
    }
    expect(in, "final_bias", path);
    net.arch_.final_bias = read_size(in, path) != 0;
    expect(in, "seed", path);
    in >> net.init_seed_;
    expect(in, "init", path);
    in >> net.init_spec_;
    net.arch_.validate();

    for (std::size_t l = 0; l + 2 < sizes.size(); ++l) {
        expect(in, "hidden", path);
        if (read_size(in, path) != l)
            throw IoError("checkpoint '" + path + "': layer index mismatch");
        DenseLayer layer;
        const std::size_t rows = read_size(in, path);
        const std::size_t cols = read_size(in, path);
        if (rows != sizes[l + 1] || cols != sizes[l])
            throw IoError("checkpoint '" + path + "': layer shape mismatch");
        layer.weights = Matrix(rows, cols);
        read_array(in, layer.weights.data, path);
        expect(in, "bias", path);
        read_size(in, path);
        layer.bias.assign(rows, 0.0);
        read_array(in, layer.bias, path);
        layer.act = net.arch_.activations[l];
        net.hidden_.push_back(std::move(layer));
    }
    expect(in, "final", path);
    const std::size_t c = read_size(in, path);
    const std::size_t d = read_size(in, path);
    if (c != sizes.back() || d != sizes[sizes.size() - 2])
        throw IoError("checkpoint '" + path + "': final layer shape mismatch");
    net.prototypes_ = Matrix(c, d);
    read_array(in, net.prototypes_.data, path);
    if (net.arch_.final_bias) {
        expect(in, "final_bias_values", path);
        std::vector<double> fb(c, 0.0);
        read_array(in, fb, path);
        net.final_bias_ = std::move(fb);
    }
    expect(in, "end", path);
    return net;
}

}  // namespace vmfkd
