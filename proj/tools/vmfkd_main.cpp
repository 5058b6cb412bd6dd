// vmfkd: train dense classifiers, derive per-class vMF activation models
// from their final layer, estimate class relations by Monte Carlo, run
// class-wise distillation experiments under domain shift, and export priors.

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "vmfkd/activation_model.hpp"
#include "vmfkd/common.hpp"
#include "vmfkd/dataset.hpp"
#include "vmfkd/digits.hpp"
#include "vmfkd/distill.hpp"
#include "vmfkd/kernels.hpp"
#include "vmfkd/network.hpp"
#include "vmfkd/viz.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace vmfkd;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumeric = 4;

json load_config(const std::string& path,
                 const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config: " + path);
    json cfg;
    try {
        cfg = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("config parse error in " + path + ": " + e.what());
    }
    for (const auto& kv : overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw ConfigError("--set expects key.path=value, got '" + kv + "'");
        std::string ptr = "/" + kv.substr(0, eq);
        for (auto& ch : ptr)
            if (ch == '.') ch = '/';
        const std::string raw = kv.substr(eq + 1);
        json value;
        try {
            value = json::parse(raw);
        } catch (const json::exception&) {
            value = raw;  // plain string
        }
        cfg[json::json_pointer(ptr)] = value;
    }
    return cfg;
}

void apply_kernel_choice(const json& cfg) {
    const std::string want = cfg.value("kernels", "auto");
    if (!kernels::select(want))
        throw ConfigError("kernel backend '" + want +
                          "' is unavailable on this machine");
}

NetworkArch arch_from_json(const json& j) {
    NetworkArch arch;
    if (!j.contains("layer_sizes"))
        throw ConfigError("architecture needs layer_sizes");
    arch.layer_sizes = j.at("layer_sizes").get<std::vector<std::size_t>>();
    for (const auto& name :
         j.value("activations", std::vector<std::string>{}))
        arch.activations.push_back(activation_from_name(name));
    arch.final_bias = j.value("final_bias", false);
    arch.validate();
    return arch;
}

json arch_to_json(const NetworkArch& arch) {
    json j;
    j["layer_sizes"] = arch.layer_sizes;
    std::vector<std::string> acts;
    for (Activation a : arch.activations) acts.emplace_back(activation_name(a));
    j["activations"] = acts;
    j["final_bias"] = arch.final_bias;
    return j;
}

TrainConfig train_from_json(const json& j) {
    TrainConfig cfg;
    const std::string opt = j.value("optimizer", "adam");
    if (opt == "sgd")
        cfg.optimizer = TrainConfig::Optimizer::sgd;
    else if (opt == "adam")
        cfg.optimizer = TrainConfig::Optimizer::adam;
    else
        throw ConfigError("unknown optimizer '" + opt + "'");
    cfg.learning_rate = j.value("learning_rate", 1e-3);
    cfg.batch_size = j.value("batch_size", std::size_t{64});
    cfg.epochs = j.value("epochs", std::size_t{30});
    cfg.seed = j.value("seed", std::uint64_t{42});
    cfg.weight_decay = j.value("weight_decay", 0.0);
    cfg.validate();
    return cfg;
}

json train_to_json(const TrainConfig& cfg) {
    return json{{"optimizer",
                 cfg.optimizer == TrainConfig::Optimizer::sgd ? "sgd" : "adam"},
                {"learning_rate", cfg.learning_rate},
                {"batch_size", cfg.batch_size},
                {"epochs", cfg.epochs},
                {"seed", cfg.seed},
                {"weight_decay", cfg.weight_decay}};
}

ShiftConfig shift_from_json(const json& j) {
    ShiftConfig cfg;
    cfg.kind = shift_kind_from_name(j.value("kind", "none"));
    cfg.degree = j.value("degree", 0.0);
    cfg.factor = j.value("factor", 1.0);
    cfg.seed = j.value("seed", std::uint64_t{7});
    cfg.validate();
    return cfg;
}

json shift_to_json(const ShiftConfig& cfg) {
    return json{{"kind", shift_kind_name(cfg.kind)},
                {"degree", cfg.degree},
                {"factor", cfg.factor},
                {"seed", cfg.seed}};
}

struct DataPaths {
    std::string train_images, train_labels, test_images, test_labels;
    std::size_t subset = 0;
    std::uint64_t subset_seed = 1;
    bool stratified = true;
};

DataPaths data_from_json(const json& j) {
    DataPaths p;
    const std::string dir = j.value("dir", "");
    auto pick = [&](const char* key, const char* fallback) {
        const std::string explicit_path = j.value(key, "");
        if (!explicit_path.empty()) return explicit_path;
        if (dir.empty())
            throw ConfigError(std::string("data.") + key +
                              " (or data.dir) must be set");
        return (fs::path(dir) / fallback).string();
    };
    p.train_images = pick("train_images", "train-images-idx3-ubyte");
    p.train_labels = pick("train_labels", "train-labels-idx1-ubyte");
    p.test_images = pick("test_images", "t10k-images-idx3-ubyte");
    p.test_labels = pick("test_labels", "t10k-labels-idx1-ubyte");
    p.subset = j.value("subset", std::size_t{0});
    p.subset_seed = j.value("subset_seed", std::uint64_t{1});
    p.stratified = j.value("stratified", true);
    return p;
}

json data_to_json(const DataPaths& p) {
    return json{{"train_images", p.train_images},
                {"train_labels", p.train_labels},
                {"test_images", p.test_images},
                {"test_labels", p.test_labels},
                {"subset", p.subset},
                {"subset_seed", p.subset_seed},
                {"stratified", p.stratified}};
}

Dataset load_train_split(const DataPaths& p) {
    Dataset ds = load_idx(p.train_images, p.train_labels);
    ds.split = Dataset::Split::train;
    if (p.subset > 0 && p.subset < ds.size())
        ds = subsample(ds, p.subset, p.subset_seed, p.stratified);
    return ds;
}

void write_resolved_config(const json& resolved, const std::string& out_dir) {
    fs::create_directories(out_dir);
    const std::string path = (fs::path(out_dir) / "config.resolved.json").string();
    std::ofstream out(path);
    if (!out) throw IoError("cannot write resolved config: " + path);
    out << resolved.dump(2) << '\n';
}

std::string checkpoint_hash(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint for hashing: " + path);
    const std::string bytes((std::istreambuf_iterator<char>(in)),
                            std::istreambuf_iterator<char>());
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(
                      fnv1a64(bytes.data(), bytes.size())));
    return buf;
}

void write_epoch_csv(const std::vector<EpochMetrics>& epochs,
                     const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write metrics CSV: " + path);
    out << "epoch,train_loss,train_accuracy\n";
    for (const auto& em : epochs)
        out << em.epoch << ',' << fmt_double(em.train_loss) << ','
            << fmt_double(em.train_accuracy) << '\n';
}

// ------------------------------------------------------------ subcommands

int cmd_gen_digits(const std::string& out_dir, std::size_t n_train,
                   std::size_t n_test, std::uint64_t seed) {
    fs::create_directories(out_dir);
    const Dataset train = make_digits(n_train, seed, Dataset::Split::train);
    const Dataset test = make_digits(n_test, seed + 1, Dataset::Split::test);
    save_idx(train, (fs::path(out_dir) / "train-images-idx3-ubyte").string(),
             (fs::path(out_dir) / "train-labels-idx1-ubyte").string());
    save_idx(test, (fs::path(out_dir) / "t10k-images-idx3-ubyte").string(),
             (fs::path(out_dir) / "t10k-labels-idx1-ubyte").string());
    std::cout << "wrote " << n_train << " train / " << n_test
              << " test digit images to " << out_dir << '\n';
    return kExitOk;
}

int cmd_train_teacher(const json& cfg) {
    apply_kernel_choice(cfg);
    const DataPaths paths = data_from_json(cfg.value("data", json::object()));
    const NetworkArch arch = arch_from_json(cfg.at("arch"));
    const TrainConfig tc = train_from_json(cfg.value("train", json::object()));
    const std::string out_dir = cfg.value("out_dir", "runs/teacher");
    const auto snapshot_epochs =
        cfg.value("snapshot_epochs", std::vector<std::size_t>{});

    const Dataset train_set = load_train_split(paths);
    const Dataset test_set = load_idx(paths.test_images, paths.test_labels);

    fs::create_directories(out_dir);
    json resolved{{"data", data_to_json(paths)},
                  {"arch", arch_to_json(arch)},
                  {"train", train_to_json(tc)},
                  {"out_dir", out_dir},
                  {"snapshot_epochs", snapshot_epochs},
                  {"kernels", kernels::backend_name()}};
    write_resolved_config(resolved, out_dir);

    const auto balance = class_balance(train_set);
    std::cout << "train n=" << train_set.size() << " c=" << train_set.class_count
              << " (balance min=" << fmt_double(*std::min_element(
                                          balance.begin(), balance.end()))
              << " max=" << fmt_double(*std::max_element(balance.begin(),
                                                         balance.end()))
              << "), kernels=" << kernels::backend_name() << '\n';

    Network net(arch, tc.seed);
    const TrainResult result =
        train(net, train_set, tc, label_loss(),
              [&](std::size_t epoch, const Network& snapshot) {
                  if (std::find(snapshot_epochs.begin(), snapshot_epochs.end(),
                                epoch) != snapshot_epochs.end())
                      save_checkpoint(snapshot,
                                      (fs::path(out_dir) /
                                       ("teacher_epoch" + std::to_string(epoch) +
                                        ".ckpt"))
                                          .string());
              });

    const std::string ckpt = (fs::path(out_dir) / "teacher.ckpt").string();
    save_checkpoint(net, ckpt);
    write_epoch_csv(result.epochs, (fs::path(out_dir) / "teacher_metrics.csv").string());

    const double test_acc = accuracy(net, test_set);
    std::cout << "teacher checkpoint: " << ckpt << '\n';
    std::cout << "final train accuracy: "
              << fmt_double(result.epochs.empty()
                                ? accuracy(net, train_set)
                                : result.epochs.back().train_accuracy)
              << '\n';
    std::cout << "test accuracy: " << fmt_double(test_acc) << '\n';
    return kExitOk;
}

int cmd_derive(const std::string& checkpoint, double kappa,
               bool per_class_scaling, std::size_t n_samples,
               double temperature, bool temper, std::uint64_t seed,
               const std::string& out_dir) {
    const Network teacher = load_checkpoint(checkpoint);
    const ClassActivationModel model =
        derive_model(teacher.prototypes(), kappa, per_class_scaling);
    const ClassRelationMatrix rel = class_relations(
        teacher, model, n_samples, temper ? temperature : 1.0, seed);

    fs::create_directories(out_dir);
    const std::string prior_path = (fs::path(out_dir) / "prior.txt").string();
    const std::string rel_path = (fs::path(out_dir) / "relations.csv").string();
    save_prior(model, prior_path);
    save_relations_csv(rel, rel_path, checkpoint_hash(checkpoint));

    json resolved{{"checkpoint", checkpoint},
                  {"kappa", kappa},
                  {"per_class_scaling", per_class_scaling},
                  {"relation_samples", n_samples},
                  {"temperature", temperature},
                  {"temper_relations", temper},
                  {"seed", seed},
                  {"out_dir", out_dir}};
    write_resolved_config(resolved, out_dir);

    std::cout << "prior: " << prior_path << "\nrelations: " << rel_path << '\n';
    std::cout << "row argmax diagnostics (row -> argmax, diagonal mass):\n";
    for (std::size_t i = 0; i < rel.class_count(); ++i) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < rel.class_count(); ++j)
            if (rel.entries.at(i, j) > rel.entries.at(i, best)) best = j;
        std::cout << "  " << i << " -> " << best << "  p(i|i)="
                  << fmt_double(rel.entries.at(i, i))
                  << (best == i ? "" : "  [off-diagonal]") << '\n';
    }
    return kExitOk;
}

int cmd_distill(const json& cfg) {
    apply_kernel_choice(cfg);
    const DataPaths paths = data_from_json(cfg.value("data", json::object()));
    const NetworkArch student_arch = arch_from_json(cfg.at("student_arch"));
    const TrainConfig base_tc = train_from_json(cfg.value("train", json::object()));
    const std::string out_dir = cfg.value("out_dir", "runs/distill");
    const json dj = cfg.value("distill", json::object());

    std::vector<DistillMode> modes;
    for (const auto& name :
         dj.value("modes", std::vector<std::string>{"label", "kd", "ckd"}))
        modes.push_back(distill_mode_from_name(name));
    std::vector<ShiftConfig> shifts;
    if (cfg.contains("shifts"))
        for (const auto& sj : cfg.at("shifts")) shifts.push_back(shift_from_json(sj));
    else
        shifts.push_back(ShiftConfig{});
    const auto seeds = cfg.value("seeds", std::vector<std::uint64_t>{1, 2, 3, 4, 5});

    RunSettings base;
    base.temperature = dj.value("temperature", 4.0);
    base.alpha = dj.value("alpha", 0.5);
    base.tau_squared_scale = dj.value("tau_squared_scale", true);
    base.kappa = dj.value("kappa", 80.0);
    base.relation_samples = dj.value("relation_samples", std::size_t{4096});
    base.temper_relations = dj.value("temper_relations", true);
    base.eval_on_shifted = dj.value("eval_on_shifted", false);
    const double alpha_combined = dj.value("alpha_combined", 2.0 / 3.0);

    const std::string teacher_path = dj.value("teacher_checkpoint", "");
    const std::string relations_path = dj.value("relations_csv", "");

    const bool any_kd =
        std::any_of(modes.begin(), modes.end(), [](DistillMode m) {
            return m == DistillMode::kd || m == DistillMode::ckd_plus_kd;
        });
    const bool any_ckd =
        std::any_of(modes.begin(), modes.end(), [](DistillMode m) {
            return m == DistillMode::ckd || m == DistillMode::ckd_plus_kd;
        });
    const bool need_teacher = any_kd || (any_ckd && relations_path.empty());

    std::optional<Network> teacher;
    if (need_teacher) {
        if (teacher_path.empty())
            throw ConfigError("distill.teacher_checkpoint is required for the "
                              "selected modes");
        teacher = load_checkpoint(teacher_path);
    }

    // Relations are fixed once, before any training (the class-wise scheme's
    // single teacher consultation).
    std::optional<ClassRelationMatrix> relations;
    if (any_ckd) {
        if (!relations_path.empty()) {
            relations = load_relations_csv(relations_path);
        } else {
            const ClassActivationModel model =
                derive_model(teacher->prototypes(), base.kappa, false);
            relations = class_relations(
                *teacher, model, base.relation_samples,
                base.temper_relations ? base.temperature : 1.0,
                dj.value("relation_seed", std::uint64_t{9000}));
        }
    }

    const Dataset train_set = load_train_split(paths);
    const Dataset eval_set = load_idx(paths.test_images, paths.test_labels);

    fs::create_directories(out_dir);
    json resolved{{"data", data_to_json(paths)},
                  {"student_arch", arch_to_json(student_arch)},
                  {"train", train_to_json(base_tc)},
                  {"distill",
                   {{"modes", dj.value("modes", std::vector<std::string>{
                                                    "label", "kd", "ckd"})},
                    {"temperature", base.temperature},
                    {"alpha", base.alpha},
                    {"alpha_combined", alpha_combined},
                    {"tau_squared_scale", base.tau_squared_scale},
                    {"kappa", base.kappa},
                    {"relation_samples", base.relation_samples},
                    {"temper_relations", base.temper_relations},
                    {"eval_on_shifted", base.eval_on_shifted},
                    {"teacher_checkpoint", teacher_path},
                    {"relations_csv", relations_path}}},
                  {"seeds", seeds},
                  {"out_dir", out_dir},
                  {"kernels", kernels::backend_name()}};
    resolved["shifts"] = json::array();
    for (const auto& s : shifts) resolved["shifts"].push_back(shift_to_json(s));
    write_resolved_config(resolved, out_dir);
    if (relations && relations_path.empty())
        save_relations_csv(*relations,
                           (fs::path(out_dir) / "relations.csv").string(),
                           teacher_path.empty() ? ""
                                                : checkpoint_hash(teacher_path));

    struct RunSpec {
        DistillMode mode;
        ShiftConfig shift;
        std::uint64_t seed;
    };
    std::vector<RunSpec> grid;
    for (const auto mode : modes)
        for (const auto& shift : shifts)
            for (const auto seed : seeds) grid.push_back({mode, shift, seed});

    std::vector<RunResult> results(grid.size());
    std::vector<std::string> failures(grid.size());
    std::atomic<std::size_t> next{0};
    std::size_t jobs = cfg.value("jobs", std::size_t{0});
    if (jobs == 0)
        jobs = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    jobs = std::min(jobs, grid.size());

    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= grid.size()) return;
            const auto& g = grid[i];
            RunSettings settings = base;
            settings.mode = g.mode;
            if (g.mode == DistillMode::ckd_plus_kd) settings.alpha = alpha_combined;
            TrainConfig tc = base_tc;
            tc.seed = g.seed;
            try {
                results[i] = run_experiment(
                    teacher ? &*teacher : nullptr, student_arch, settings,
                    relations ? &*relations : nullptr, g.shift, train_set,
                    eval_set, tc);
            } catch (const std::exception& e) {
                failures[i] = e.what();
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    std::vector<RunResult> ok;
    bool any_failed = false;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!failures[i].empty()) {
            any_failed = true;
            std::cerr << "run failed (mode=" << distill_mode_name(grid[i].mode)
                      << ", shift=" << grid[i].shift.label()
                      << ", seed=" << grid[i].seed << "): " << failures[i]
                      << '\n';
            continue;
        }
        std::string shift_tag = grid[i].shift.label();
        for (auto& ch : shift_tag)
            if (ch == ':' || ch == '.') ch = '_';
        save_checkpoint(*results[i].student,
                        (fs::path(out_dir) /
                         ("student_" +
                          std::string(distill_mode_name(grid[i].mode)) + "_" +
                          shift_tag + "_s" + std::to_string(grid[i].seed) +
                          ".ckpt"))
                            .string());
        ok.push_back(std::move(results[i]));
    }
    write_metrics_csv(ok, (fs::path(out_dir) / "metrics.csv").string());
    write_summary_csv(ok, (fs::path(out_dir) / "summary.csv").string());
    write_aggregate_csv(ok, (fs::path(out_dir) / "aggregate.csv").string());

    std::cout << "completed " << ok.size() << "/" << grid.size()
              << " runs; outputs in " << out_dir << '\n';
    return any_failed ? kExitNumeric : kExitOk;
}

int cmd_inspect(const std::string& checkpoint, const std::string& images,
                const std::string& labels, std::size_t subset, double kappa) {
    const Network net = load_checkpoint(checkpoint);
    Dataset ds = load_idx(images, labels);
    if (subset > 0 && subset < ds.size()) ds = subsample(ds, subset, 1, true);

    const double acc = accuracy(net, ds);
    std::size_t correct_norm = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const Prediction pred = net.normalized_forward(ds.features.row_span(i));
        std::size_t best = 0;
        for (std::size_t c = 1; c < pred.logits.size(); ++c)
            if (pred.logits[c] > pred.logits[best]) best = c;
        if (best == ds.labels[i]) ++correct_norm;
    }
    const double acc_norm =
        static_cast<double>(correct_norm) / static_cast<double>(ds.size());

    const ClassActivationModel model = derive_model(net.prototypes(), kappa, false);
    const GenDiscReport gap = gen_disc_gap(net, model, ds, false);
    const GenDiscReport gap_exact = gen_disc_gap(net, model, ds, true);

    std::cout << "checkpoint: " << checkpoint << '\n';
    std::cout << "evaluation examples: " << ds.size() << '\n';
    std::cout << "original accuracy:   " << fmt_double(acc) << '\n';
    std::cout << "normalized accuracy: " << fmt_double(acc_norm) << '\n';
    std::cout << "drop: " << fmt_double((acc - acc_norm) * 100.0)
              << " percentage points\n";
    double wmin = gap.prototype_norms[0], wmax = gap.prototype_norms[0];
    for (double n : gap.prototype_norms) {
        wmin = std::min(wmin, n);
        wmax = std::max(wmax, n);
    }
    std::cout << "prototype norms |w_i|: mean=" << fmt_double(gap.prototype_norm_mean)
              << " stddev=" << fmt_double(gap.prototype_norm_stddev)
              << " min=" << fmt_double(wmin) << " max=" << fmt_double(wmax) << '\n';
    std::cout << "activation norm |a|: mean=" << fmt_double(gap.mean_activation_norm)
              << " stddev=" << fmt_double(gap.stddev_activation_norm) << '\n';
    std::cout << "kappa inspection aid (mean|a| * mean|w|): "
              << fmt_double(gap.mean_activation_norm * gap.prototype_norm_mean)
              << '\n';
    std::cout << "gen-disc gap, shared kappa=" << fmt_double(kappa)
              << ": mean KL = " << fmt_double(gap.mean_kl) << '\n';
    std::cout << "gen-disc gap, per-sample |w||a| kappa: mean KL = "
              << fmt_double(gap_exact.mean_kl) << '\n';
    return kExitOk;
}

int cmd_viz(const std::string& checkpoint, const std::string& images,
            const std::string& labels, const std::string& out_prefix,
            double kappa, bool svg, std::size_t subset) {
    const Network net = load_checkpoint(checkpoint);
    Dataset ds = load_idx(images, labels);
    if (subset > 0 && subset < ds.size()) ds = subsample(ds, subset, 1, true);
    const ClassActivationModel model = derive_model(net.prototypes(), kappa, false);
    if (const auto parent = fs::path(out_prefix).parent_path(); !parent.empty())
        fs::create_directories(parent);
    viz_export(net, ds, model, out_prefix, svg);
    const auto gaps = class_angle_gaps_deg(net, ds);
    std::size_t aligned = 0;
    for (double g : gaps)
        if (g < 15.0) ++aligned;
    std::cout << "wrote " << out_prefix << "_activations.csv, "
              << out_prefix << "_density.csv"
              << (svg ? (", " + out_prefix + "_polar.svg") : std::string{}) << '\n';
    std::cout << "classes within 15 degrees of their prototype direction: "
              << aligned << "/" << gaps.size() << '\n';
    return kExitOk;
}

int cmd_sample(const std::string& prior_path, std::size_t class_id,
               std::size_t n, std::uint64_t seed, double scale,
               const std::string& out_csv) {
    const ClassActivationModel model = load_prior(prior_path);
    if (class_id >= model.class_count())
        throw ConfigError("unknown class id " + std::to_string(class_id) +
                          " (prior has " + std::to_string(model.class_count()) +
                          " classes)");
    std::ofstream out(out_csv);
    if (!out) throw IoError("cannot write sample CSV: " + out_csv);
    for (std::size_t j = 0; j < model.dim(); ++j)
        out << (j ? "," : "") << "z" << j;
    out << '\n';
    if (n > 0) {
        const VmfDistribution dist(model.class_directions[class_id],
                                   model.concentration(class_id));
        Rng rng(seed);
        for (std::size_t i = 0; i < n; ++i) {
            const auto v = sample_one(dist, rng);
            for (std::size_t j = 0; j < v.size(); ++j)
                out << (j ? "," : "") << fmt_double(scale * v[j]);
            out << '\n';
        }
    }
    if (!out) throw IoError("write failed: " + out_csv);
    std::cout << "wrote " << n << " samples for class " << class_id << " to "
              << out_csv << '\n';
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"class-conditional vMF activation models and class-wise "
                 "knowledge distillation"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;

    auto* gen = app.add_subcommand("gen-digits",
                                   "generate a procedural digit IDX corpus");
    std::string gen_out = "data";
    std::size_t gen_train = 12000, gen_test = 2000;
    std::uint64_t gen_seed = 1234;
    gen->add_option("--out", gen_out, "output directory");
    gen->add_option("--train", gen_train, "number of training images");
    gen->add_option("--test", gen_test, "number of test images");
    gen->add_option("--seed", gen_seed, "generator seed");

    auto* tt = app.add_subcommand("train-teacher",
                                  "train a classifier and save its checkpoint");
    tt->add_option("--config", config_path, "JSON config")->required();
    tt->add_option("--set", overrides, "override config values (a.b.c=value)");

    auto* dv = app.add_subcommand(
        "derive", "derive the vMF prior and class-relation matrix");
    std::string dv_ckpt, dv_out = "runs/derive";
    double dv_kappa = 80.0, dv_temp = 4.0;
    bool dv_pcs = false, dv_no_temper = false;
    std::size_t dv_samples = 4096;
    std::uint64_t dv_seed = 9000;
    dv->add_option("--checkpoint", dv_ckpt, "teacher checkpoint")->required();
    dv->add_option("--kappa", dv_kappa, "shared concentration");
    dv->add_flag("--per-class-scaling", dv_pcs,
                 "scale kappa per class by |w_i| / mean |w_j|");
    dv->add_option("--samples", dv_samples, "Monte Carlo samples per class");
    dv->add_option("--temperature", dv_temp, "softmax temperature for relations");
    dv->add_flag("--no-temper", dv_no_temper,
                 "disable tempering of the relation softmax");
    dv->add_option("--seed", dv_seed, "sampling seed");
    dv->add_option("--out", dv_out, "output directory");

    auto* ds_cmd = app.add_subcommand(
        "distill", "run the distillation grid (modes x shifts x seeds)");
    ds_cmd->add_option("--config", config_path, "JSON config")->required();
    ds_cmd->add_option("--set", overrides, "override config values (a.b.c=value)");

    auto* in_cmd = app.add_subcommand(
        "inspect", "original vs normalized accuracy and gen-disc diagnostics");
    std::string in_ckpt, in_images, in_labels;
    std::size_t in_subset = 0;
    double in_kappa = 80.0;
    in_cmd->add_option("--checkpoint", in_ckpt)->required();
    in_cmd->add_option("--images", in_images, "IDX image file")->required();
    in_cmd->add_option("--labels", in_labels, "IDX label file")->required();
    in_cmd->add_option("--subset", in_subset, "evaluate on a stratified subset");
    in_cmd->add_option("--kappa", in_kappa, "model concentration");

    auto* vz = app.add_subcommand("viz",
                                  "export d=2 activation/density CSVs and SVG");
    std::string vz_ckpt, vz_images, vz_labels, vz_out = "runs/viz/panel";
    double vz_kappa = 80.0;
    bool vz_no_svg = false;
    std::size_t vz_subset = 0;
    vz->add_option("--checkpoint", vz_ckpt)->required();
    vz->add_option("--images", vz_images)->required();
    vz->add_option("--labels", vz_labels)->required();
    vz->add_option("--out", vz_out, "output path prefix");
    vz->add_option("--kappa", vz_kappa, "model concentration");
    vz->add_option("--subset", vz_subset, "use a stratified subset");
    vz->add_flag("--no-svg", vz_no_svg, "skip the SVG convenience plot");

    auto* sm = app.add_subcommand("sample",
                                  "sample class-conditional latents from a prior");
    std::string sm_prior, sm_out = "samples.csv";
    std::size_t sm_class = 0, sm_n = 1000;
    std::uint64_t sm_seed = 0;
    double sm_scale = 1.0;
    sm->add_option("--prior", sm_prior, "prior file")->required();
    sm->add_option("--class-id", sm_class, "class index")->required();
    sm->add_option("--n", sm_n, "number of samples");
    sm->add_option("--seed", sm_seed, "sampling seed");
    sm->add_option("--scale", sm_scale, "multiply samples by this factor");
    sm->add_option("--out", sm_out, "output CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (gen->parsed())
            return cmd_gen_digits(gen_out, gen_train, gen_test, gen_seed);
        if (tt->parsed())
            return cmd_train_teacher(load_config(config_path, overrides));
        if (dv->parsed())
            return cmd_derive(dv_ckpt, dv_kappa, dv_pcs, dv_samples, dv_temp,
                              !dv_no_temper, dv_seed, dv_out);
        if (ds_cmd->parsed())
            return cmd_distill(load_config(config_path, overrides));
        if (in_cmd->parsed())
            return cmd_inspect(in_ckpt, in_images, in_labels, in_subset, in_kappa);
        if (vz->parsed())
            return cmd_viz(vz_ckpt, vz_images, vz_labels, vz_out, vz_kappa,
                           !vz_no_svg, vz_subset);
        if (sm->parsed())
            return cmd_sample(sm_prior, sm_class, sm_n, sm_seed, sm_scale, sm_out);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << '\n';
        return kExitIo;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return kExitConfig;
}
