#include "vmfkd/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "vmfkd/common.hpp"
#include "vmfkd/rng.hpp"

namespace vmfkd {

void Dataset::validate() const {
    if (size() == 0) throw NumericError("dataset is empty");
    if (features.rows != size())
        throw NumericError("feature/label count mismatch");
    if (class_count < 2) throw NumericError("dataset needs >= 2 classes");
    for (std::size_t l : labels)
        if (l >= class_count)
            throw NumericError("label " + std::to_string(l) +
                               " out of range (c = " +
                               std::to_string(class_count) + ")");
    for (double v : features.data)
        if (!std::isfinite(v) || v < 0.0 || v > 1.0)
            throw NumericError("feature outside [0, 1]");
}

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::uint32_t read_be32(std::ifstream& in, const std::string& path) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4))
        throw IoError("truncated IDX file: " + path);
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
           (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

void write_be32(std::ofstream& out, std::uint32_t v) {
    const unsigned char b[4] = {
        static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
        static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

std::string hex32(std::uint32_t v) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "0x%08x", v);
    return buf;
}

}  // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw IoError("cannot open IDX image file: " + images_path);
    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) throw IoError("cannot open IDX label file: " + labels_path);

    const std::uint32_t img_magic = read_be32(img, images_path);
    if (img_magic != kImageMagic)
        throw IoError("bad IDX image magic " + hex32(img_magic) + " in " +
                      images_path + " (expected " + hex32(kImageMagic) + ")");
    const std::uint32_t lab_magic = read_be32(lab, labels_path);
    if (lab_magic != kLabelMagic)
        throw IoError("bad IDX label magic " + hex32(lab_magic) + " in " +
                      labels_path + " (expected " + hex32(kLabelMagic) + ")");

    const std::uint32_t n_img = read_be32(img, images_path);
    const std::uint32_t rows = read_be32(img, images_path);
    const std::uint32_t cols = read_be32(img, images_path);
    const std::uint32_t n_lab = read_be32(lab, labels_path);
    if (n_img != n_lab)
        throw IoError("IDX count mismatch: " + std::to_string(n_img) +
                      " images vs " + std::to_string(n_lab) + " labels");

    Dataset ds;
    ds.image_rows = rows;
    ds.image_cols = cols;
    ds.features = Matrix(n_img, static_cast<std::size_t>(rows) * cols);
    ds.labels.resize(n_lab);

    std::vector<unsigned char> buf(ds.feature_dim());
    for (std::uint32_t i = 0; i < n_img; ++i) {
        if (!img.read(reinterpret_cast<char*>(buf.data()),
                      static_cast<std::streamsize>(buf.size())))
            throw IoError("truncated IDX file: " + images_path);
        double* row = ds.features.row(i);
        for (std::size_t j = 0; j < buf.size(); ++j)
            row[j] = static_cast<double>(buf[j]) / 255.0;
    }
    std::vector<unsigned char> lbuf(n_lab);
    if (!lab.read(reinterpret_cast<char*>(lbuf.data()),
                  static_cast<std::streamsize>(lbuf.size())))
        throw IoError("truncated IDX file: " + labels_path);
    std::size_t max_label = 0;
    for (std::uint32_t i = 0; i < n_lab; ++i) {
        ds.labels[i] = lbuf[i];
        max_label = std::max<std::size_t>(max_label, lbuf[i]);
    }
    ds.class_count = max_label + 1;
    ds.validate();
    return ds;
}

void save_idx(const Dataset& ds, const std::string& images_path,
              const std::string& labels_path) {
    ds.validate();
    std::size_t rows = ds.image_rows, cols = ds.image_cols;
    if (rows == 0 || cols == 0) {
        rows = ds.feature_dim();
        cols = 1;
    }
    if (rows * cols != ds.feature_dim())
        throw IoError("image dimensions do not match the feature width");

    std::ofstream img(images_path, std::ios::binary);
    if (!img) throw IoError("cannot open IDX image file for writing: " + images_path);
    write_be32(img, kImageMagic);
    write_be32(img, static_cast<std::uint32_t>(ds.size()));
    write_be32(img, static_cast<std::uint32_t>(rows));
    write_be32(img, static_cast<std::uint32_t>(cols));
    std::vector<unsigned char> buf(ds.feature_dim());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const double* row = ds.features.row(i);
        for (std::size_t j = 0; j < buf.size(); ++j)
            buf[j] = static_cast<unsigned char>(
                std::lround(std::clamp(row[j], 0.0, 1.0) * 255.0));
        img.write(reinterpret_cast<const char*>(buf.data()),
                  static_cast<std::streamsize>(buf.size()));
    }
    if (!img) throw IoError("write failed: " + images_path);

    std::ofstream lab(labels_path, std::ios::binary);
    if (!lab) throw IoError("cannot open IDX label file for writing: " + labels_path);
    write_be32(lab, kLabelMagic);
    write_be32(lab, static_cast<std::uint32_t>(ds.size()));
    for (std::size_t l : ds.labels) {
        const auto b = static_cast<unsigned char>(l);
        lab.write(reinterpret_cast<const char*>(&b), 1);
    }
    if (!lab) throw IoError("write failed: " + labels_path);
}

Dataset make_synthetic(const SyntheticSpec& spec) {
    if (spec.classes < 2) throw ConfigError("synthetic spec needs >= 2 classes");
    if (spec.n_per_class < 1) throw ConfigError("n_per_class must be >= 1");
    if (spec.d_in < 2) throw ConfigError("d_in must be >= 2");
    if (spec.noise_scale < 0.0) throw ConfigError("noise_scale must be >= 0");

    Dataset ds;
    ds.class_count = spec.classes;
    const std::size_t n = spec.classes * spec.n_per_class;
    ds.features = Matrix(n, spec.d_in);
    ds.labels.resize(n);
    Rng rng(spec.seed);

    std::size_t idx = 0;
    for (std::size_t c = 0; c < spec.classes; ++c) {
        const double angle =
            2.0 * M_PI * static_cast<double>(c) / static_cast<double>(spec.classes);
        for (std::size_t k = 0; k < spec.n_per_class; ++k, ++idx) {
            double* row = ds.features.row(idx);
            ds.labels[idx] = c;
            if (spec.kind == SyntheticSpec::Kind::blobs) {
                row[0] = 0.5 + 0.3 * std::cos(angle);
                row[1] = 0.5 + 0.3 * std::sin(angle);
                for (std::size_t j = 2; j < spec.d_in; ++j) row[j] = 0.5;
                for (std::size_t j = 0; j < spec.d_in; ++j)
                    row[j] = std::clamp(row[j] + spec.noise_scale * rng.normal(),
                                        0.0, 1.0);
            } else {
                // ring: fixed-radius angular sector per class with gaps; the
                // first two features are the circle point, remaining pairs
                // carry higher harmonics of the angle
                const double sector = 2.0 * M_PI / static_cast<double>(spec.classes);
                const double theta = angle + (0.25 + 0.5 * rng.uniform()) * sector;
                for (std::size_t j = 0; j < spec.d_in; ++j) {
                    const double harmonic = std::floor(j / 2.0) + 1.0;
                    const double phase = theta * harmonic;
                    row[j] = 0.5 + 0.4 * (j % 2 == 0 ? std::cos(phase)
                                                     : std::sin(phase));
                }
                if (spec.noise_scale > 0.0)
                    for (std::size_t j = 0; j < spec.d_in; ++j)
                        row[j] = std::clamp(
                            row[j] + spec.noise_scale * rng.normal(), 0.0, 1.0);
            }
        }
    }
    ds.validate();
    return ds;
}

Dataset subsample(const Dataset& ds, std::size_t n, std::uint64_t seed,
                  bool stratified) {
    ds.validate();
    if (n > ds.size())
        throw ConfigError("subsample of " + std::to_string(n) + " from " +
                          std::to_string(ds.size()) + " examples");
    std::vector<std::size_t> chosen;
    chosen.reserve(n);
    const Rng master(seed);
    if (stratified) {
        std::vector<std::vector<std::size_t>> by_class(ds.class_count);
        for (std::size_t i = 0; i < ds.size(); ++i)
            by_class[ds.labels[i]].push_back(i);
        // Largest-remainder apportionment keeps per-class counts within one
        // item of exact proportionality.
        std::vector<std::size_t> take(ds.class_count, 0);
        std::vector<std::pair<double, std::size_t>> remainders;
        std::size_t assigned = 0;
        for (std::size_t c = 0; c < ds.class_count; ++c) {
            const double exact = static_cast<double>(n) *
                                 static_cast<double>(by_class[c].size()) /
                                 static_cast<double>(ds.size());
            take[c] = static_cast<std::size_t>(std::floor(exact));
            take[c] = std::min(take[c], by_class[c].size());
            assigned += take[c];
            remainders.emplace_back(exact - std::floor(exact), c);
        }
        std::sort(remainders.begin(), remainders.end(), [](auto a, auto b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;
        });
        for (std::size_t k = 0; assigned < n; k = (k + 1) % remainders.size()) {
            const std::size_t c = remainders[k].second;
            if (take[c] < by_class[c].size()) {
                ++take[c];
                ++assigned;
            }
        }
        for (std::size_t c = 0; c < ds.class_count; ++c) {
            Rng rng = master.split(c);
            rng.shuffle(by_class[c]);
            chosen.insert(chosen.end(), by_class[c].begin(),
                          by_class[c].begin() +
                              static_cast<std::ptrdiff_t>(take[c]));
        }
    } else {
        std::vector<std::size_t> all(ds.size());
        std::iota(all.begin(), all.end(), 0);
        Rng rng = master.split(0);
        rng.shuffle(all);
        chosen.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n));
    }
    std::sort(chosen.begin(), chosen.end());  // keep source order

    Dataset out;
    out.class_count = ds.class_count;
    out.split = ds.split;
    out.image_rows = ds.image_rows;
    out.image_cols = ds.image_cols;
    out.features = Matrix(chosen.size(), ds.feature_dim());
    out.labels.resize(chosen.size());
    for (std::size_t k = 0; k < chosen.size(); ++k) {
        const double* src = ds.features.row(chosen[k]);
        std::copy(src, src + ds.feature_dim(), out.features.row(k));
        out.labels[k] = ds.labels[chosen[k]];
    }
    return out;
}

std::vector<double> class_balance(const Dataset& ds) {
    std::vector<double> frac(ds.class_count, 0.0);
    for (std::size_t l : ds.labels) frac[l] += 1.0;
    for (auto& f : frac) f /= static_cast<double>(ds.size());
    return frac;
}

}  // namespace vmfkd
