#include <cstdio>
#include <filesystem>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "thetarbm/binary_io.hpp"
#include "thetarbm/error.hpp"
#include "thetarbm/features.hpp"
#include "thetarbm/invariance.hpp"
#include "thetarbm/model_io.hpp"
#include "thetarbm/orientation.hpp"
#include "thetarbm/parallel.hpp"
#include "thetarbm/pgm.hpp"
#include "thetarbm/pipeline.hpp"
#include "thetarbm/svm.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace thetarbm;

namespace {

enum ExitCode { kOk = 0, kUsage = 2, kData = 3, kNumerical = 4 };

struct GlobalOpts {
    std::uint64_t seed = 1;
    unsigned threads = 1;
    fs::path out_dir = "out";
};

struct DataOpts {
    fs::path train_images;
    fs::path train_labels;
    fs::path amat;
    fs::path test_amat;
    std::size_t subsample = 0;
    std::string angles = "0,90,180,270";
    std::string rotation_mode = "exact";
    int bins = kDefaultOrientationBins;
    int perturb_n = 0;
    double perturb_p = 0.0;
};

struct TrainOpts {
    std::string model = "theta";
    std::string unit = "gaussian";
    std::string momentum = "literal";
    std::string init = "rotated";
    double sparsity = -1.0;  // negative: no sparsity penalty
};

GlobalOpts g;

CLI::Option* env(CLI::Option* opt, const std::string& name) { return opt->envname("THETARBM_" + name); }

RotationMode parse_rotation_mode(const std::string& s) {
    if (s == "exact") return RotationMode::exact;
    if (s == "nn" || s == "nearest") return RotationMode::nearest;
    throw ArgumentError("--rotation-mode must be exact or nn, got '" + s + "'");
}

RIndexPolicy parse_policy(const std::string& s) {
    if (s == "tracked") return RIndexPolicy::tracked;
    if (s == "estimated") return RIndexPolicy::estimated;
    throw ArgumentError("--r-policy must be tracked or estimated, got '" + s + "'");
}

void add_data_options(CLI::App* cmd, DataOpts& d, bool with_test) {
    env(cmd->add_option("--train-images", d.train_images, "IDX image file"), "TRAIN_IMAGES");
    env(cmd->add_option("--train-labels", d.train_labels, "IDX label file"), "TRAIN_LABELS");
    env(cmd->add_option("--amat", d.amat, "amat text file (training split)"), "AMAT");
    if (with_test) env(cmd->add_option("--test-amat", d.test_amat, "amat text file (test split)"), "TEST_AMAT");
    cmd->add_option("--subsample", d.subsample, "use N randomly chosen rows (0 = all)");
    cmd->add_option("--angles", d.angles, "support set, comma separated degrees")->capture_default_str();
    cmd->add_option("--rotation-mode", d.rotation_mode, "exact|nn")->capture_default_str();
    cmd->add_option("--bins", d.bins, "orientation histogram bins")->capture_default_str();
    cmd->add_option("--perturb-n", d.perturb_n, "binomial perturbation trials");
    cmd->add_option("--perturb-p", d.perturb_p, "binomial perturbation probability");
}

void add_train_options(CLI::App* cmd, TrainConfig& t, TrainOpts& o) {
    cmd->add_option("--unit", o.unit, "visible units: gaussian|bernoulli")->capture_default_str();
    cmd->add_option("--hidden", t.hidden, "hidden units")->capture_default_str();
    cmd->add_option("--epochs", t.epochs, "training epochs")->capture_default_str();
    cmd->add_option("--eta", t.eta, "learning rate")->capture_default_str();
    cmd->add_option("--alpha", t.alpha, "momentum")->capture_default_str();
    cmd->add_option("--alpha-start", t.alpha_start, "momentum at step 0 when ramping")->capture_default_str();
    cmd->add_option("--alpha-ramp-steps", t.alpha_ramp_steps, "linear momentum ramp length")->capture_default_str();
    cmd->add_option("--momentum", o.momentum, "literal|classical")->capture_default_str();
    cmd->add_option("--cd-k", t.k, "Gibbs steps per update")->capture_default_str();
    cmd->add_option("--batch-size", t.batch_size, "minibatch size")->capture_default_str();
    cmd->add_option("--sparsity", o.sparsity, "target mean hidden activation");
    cmd->add_option("--sparsity-weight", t.sparsity_weight, "sparsity penalty weight")->capture_default_str();
    cmd->add_option("--init", o.init, "rotated|independent")->capture_default_str();
    cmd->add_option("--init-std", t.init_std, "initial weight standard deviation")->capture_default_str();
    cmd->add_flag("--sample-visible", t.sample_visible, "sample visible units in the Gibbs chain");
}

void finish_train_config(TrainConfig& t, const TrainOpts& o) {
    t.model_kind = parse_model_kind(o.model);
    t.unit_type = parse_unit_type(o.unit);
    t.momentum = parse_momentum_mode(o.momentum);
    t.init_mode = parse_init_mode(o.init);
    if (o.sparsity >= 0.0) t.sparsity_target = o.sparsity;
    t.seed = g.seed;
    t.validate();
}

SupportSet make_support_set(const DataOpts& d, int side) {
    return SupportSet(parse_angle_list(d.angles), side, parse_rotation_mode(d.rotation_mode));
}

ImageDataset load_training_data(const DataOpts& d) {
    ImageDataset ds;
    if (!d.amat.empty()) {
        ds = load_amat(d.amat);
    } else if (!d.train_images.empty() && !d.train_labels.empty()) {
        ds = load_idx(d.train_images, d.train_labels);
    } else if (!d.train_images.empty()) {
        throw ArgumentError("--train-labels is required with --train-images");
    } else {
        throw ArgumentError("missing dataset: pass --amat or --train-images with --train-labels");
    }
    if (d.subsample > 0) ds = subsample(ds, d.subsample, g.seed);
    return ds;
}

ImageDataset load_test_data(const DataOpts& d) {
    auto ds = load_amat(d.test_amat);
    if (d.subsample > 0) ds = subsample(ds, std::min(d.subsample, ds.size()), g.seed + 1);
    return ds;
}

std::vector<fs::path> data_inputs(const DataOpts& d) {
    std::vector<fs::path> out;
    for (const auto& p : {d.train_images, d.train_labels, d.amat, d.test_amat})
        if (!p.empty()) out.push_back(p);
    return out;
}

json data_json(const DataOpts& d) {
    return {{"train_images", d.train_images.string()}, {"train_labels", d.train_labels.string()},
            {"amat", d.amat.string()},                 {"test_amat", d.test_amat.string()},
            {"subsample", d.subsample},                {"angles", parse_angle_list(d.angles)},
            {"rotation_mode", d.rotation_mode},        {"bins", d.bins},
            {"perturb_n", d.perturb_n},                {"perturb_p", d.perturb_p}};
}

void write_manifest(const std::string& command, json config, const std::vector<fs::path>& inputs,
                    const std::vector<std::string>& outputs) {
    json m;
    m["command"] = command;
    m["seed"] = g.seed;
    m["threads"] = g.threads;
    m["config"] = std::move(config);
    json in = json::object();
    for (const auto& p : inputs) in[p.string()] = io::file_digest(p);
    m["inputs"] = std::move(in);
    json out = json::object();
    for (const auto& name : outputs) {
        const auto p = g.out_dir / name;
        if (fs::exists(p)) out[name] = io::file_digest(p);
    }
    m["outputs"] = std::move(out);
    io::write_text_atomic(g.out_dir / "manifest.json", m.dump(2) + "\n");
}

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

// ---- train ----

struct TrainCmd {
    DataOpts data;
    TrainConfig train;
    TrainOpts opts;

    void run() {
        finish_train_config(train, opts);
        auto ds = load_training_data(data);
        const SupportSet set = make_support_set(data, ds.side);
        ds = assign_orientations(ds, set, data.bins);
        if (data.perturb_n > 0 && data.perturb_p > 0.0)
            ds = perturb_indices(ds, PerturbationSpec{data.perturb_n, data.perturb_p, g.seed + 100},
                                 static_cast<int>(set.size()));

        std::vector<std::string> outputs;
        std::string metrics_csv = "epoch,recon_error,mean_activation,lemma_residual\n";
        const auto on_epoch = [&](const EpochMetrics& e, const ThetaRbmModel& m) {
            char name[64];
            std::snprintf(name, sizeof name, "checkpoints/epoch_%03d.bin", e.epoch);
            save_model(g.out_dir / name, m);
            outputs.emplace_back(name);
            metrics_csv += std::to_string(e.epoch) + "," + fmt("%.10g", e.recon_error) + "," +
                           fmt("%.10g", e.mean_activation) + "," + fmt("%.6e", e.lemma_residual) + "\n";
            io::write_text_atomic(g.out_dir / "metrics.csv", metrics_csv);
            std::cerr << "epoch " << e.epoch << " recon " << fmt("%.6f", e.recon_error) << " mean h "
                      << fmt("%.4f", e.mean_activation) << "\n";
        };
        const auto run = pipeline::train_run(train.model_kind, train, ds, set, on_epoch);
        for (const auto& w : run.warnings) std::cerr << "warning: " << w << "\n";

        save_model(g.out_dir / "model.bin", run.model);
        save_normalization(g.out_dir / "normalization.bin", run.stats);
        json config;
        config["train"] = json::parse(to_json(train));
        config["data"] = data_json(data);
        io::write_text_atomic(g.out_dir / "config.json", config.dump(2) + "\n");
        outputs.insert(outputs.end(), {"model.bin", "normalization.bin", "metrics.csv", "config.json"});
        write_manifest("train", config, data_inputs(data), outputs);
        std::cout << "wrote " << (g.out_dir / "model.bin").string() << "\n";
    }
};

// ---- shared by gamma / extract ----

struct ModelOpts {
    fs::path model_file;
    fs::path norm_file;
};

void add_model_options(CLI::App* cmd, ModelOpts& m) {
    cmd->add_option("--model-file", m.model_file, "checkpoint written by train")->required()->check(CLI::ExistingFile);
    cmd->add_option("--norm-file", m.norm_file, "normalization statistics written by train")
        ->check(CLI::ExistingFile);
}

std::optional<NormalizationStats> load_stats(const ModelOpts& m) {
    if (m.norm_file.empty()) return std::nullopt;
    return load_normalization(m.norm_file);
}

// ---- gamma ----

struct GammaCmd {
    DataOpts data;
    ModelOpts model;
    double delta = 20.0;
    std::string policy = "tracked";

    void run() {
        const auto m = load_model(model.model_file);
        const auto stats = load_stats(model);
        auto train_ds = load_training_data(data);
        const SupportSet set = make_support_set(data, train_ds.side);
        const FeatureEncoder encoder(m, set, stats);
        GammaOptions opts;
        opts.policy = parse_policy(policy);
        opts.bins = data.bins;
        const auto transforms = shifted_support(set, delta);

        std::string csv = GammaReport::csv_header() + "\n";
        std::vector<std::string> outputs;
        const auto evaluate = [&](const ImageDataset& raw, const std::string& split) {
            const auto ds = assign_orientations(raw, set, data.bins);
            auto rep = gamma_score(encoder, ds, transforms, opts);
            rep.delta = delta;
            io::write_text_atomic(g.out_dir / ("gamma_" + split + ".json"), rep.to_json());
            outputs.push_back("gamma_" + split + ".json");
            csv += rep.csv_row(std::string(to_string(m.kind)) + "_" + split) + "\n";
            std::cout << split << ": mean gamma "
                      << (rep.mean_gamma ? fmt("%.4f", *rep.mean_gamma) : std::string("n/a")) << ", dead units "
                      << rep.dead_count << "\n";
        };
        evaluate(train_ds, "train");
        if (!data.test_amat.empty()) evaluate(load_test_data(data), "test");
        io::write_text_atomic(g.out_dir / "gamma.csv", csv);
        outputs.push_back("gamma.csv");
        json config{{"data", data_json(data)}, {"delta", delta}, {"r_policy", policy},
                    {"model_file", model.model_file.string()}, {"norm_file", model.norm_file.string()}};
        auto inputs = data_inputs(data);
        inputs.push_back(model.model_file);
        if (!model.norm_file.empty()) inputs.push_back(model.norm_file);
        write_manifest("gamma", config, inputs, outputs);
    }
};

// ---- extract ----

struct ExtractCmd {
    DataOpts data;
    ModelOpts model;
    std::string output = "features.bin";

    void run() {
        const auto m = load_model(model.model_file);
        const auto stats = load_stats(model);
        auto ds = load_training_data(data);
        const SupportSet set = make_support_set(data, ds.side);
        const FeatureEncoder encoder(m, set, stats);
        std::vector<std::string> outputs{output};
        save_features(g.out_dir / output, extract_features(encoder, assign_orientations(ds, set, data.bins)));
        if (!data.test_amat.empty()) {
            const auto stem = fs::path(output).stem().string() + "_test" + fs::path(output).extension().string();
            save_features(g.out_dir / stem,
                          extract_features(encoder, assign_orientations(load_test_data(data), set, data.bins)));
            outputs.push_back(stem);
        }
        json config{{"data", data_json(data)},
                    {"model_file", model.model_file.string()},
                    {"norm_file", model.norm_file.string()}};
        auto inputs = data_inputs(data);
        inputs.push_back(model.model_file);
        if (!model.norm_file.empty()) inputs.push_back(model.norm_file);
        write_manifest("extract", config, inputs, outputs);
        for (const auto& o : outputs) std::cout << "wrote " << (g.out_dir / o).string() << "\n";
    }
};

// ---- classify ----

struct ClassifyCmd {
    fs::path train_features;
    fs::path test_features;
    std::vector<double> C{10.0};
    std::vector<double> sigma;
    std::vector<double> gamma;
    double tol = 1e-3;

    void run() {
        if (sigma.empty() && gamma.empty()) sigma.push_back(0.02);
        std::vector<std::pair<double, std::string>> kernels;
        for (double s : sigma) {
            if (s <= 0.0) throw ArgumentError("--kernel-sigma must be positive");
            kernels.emplace_back(kernel_gamma_from_sigma(s), "sigma=" + fmt("%g", s));
        }
        for (double k : gamma) {
            if (k <= 0.0) throw ArgumentError("--kernel-gamma must be positive");
            kernels.emplace_back(k, "gamma=" + fmt("%g", k));
        }
        const auto train = load_features(train_features);
        const std::optional<FeatureMatrix> test =
            test_features.empty() ? std::nullopt : std::optional(load_features(test_features));

        std::string csv = "C,kernel,kernel_gamma,train_error,test_error,converged,max_kkt_violation\n";
        double best = 2.0;
        std::string best_line;
        for (double c : C) {
            for (const auto& [kg, label] : kernels) {
                SvmParams params;
                params.C = c;
                params.gamma = kg;
                params.tol = tol;
                std::vector<std::string> warnings;
                const auto model = svm_train(train, params, &warnings);
                for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
                const double train_err = svm_predict(model, train).error_rate;
                const double test_err = test ? svm_predict(model, *test).error_rate : train_err;
                bool converged = true;
                double kkt = 0.0;
                for (const auto& m : model.machines) {
                    converged = converged && m.converged;
                    kkt = std::max(kkt, m.kkt_violation);
                }
                csv += fmt("%g", c) + "," + label + "," + fmt("%.10g", kg) + "," + fmt("%.6f", train_err) + "," +
                       (test ? fmt("%.6f", test_err) : std::string()) + "," + (converged ? "1" : "0") + "," +
                       fmt("%.3e", kkt) + "\n";
                const std::string line = "C=" + fmt("%g", c) + " " + label + ": train error " +
                                         fmt("%.2f%%", 100 * train_err) +
                                         (test ? ", test error " + fmt("%.2f%%", 100 * test_err) : std::string());
                std::cout << line << "\n";
                if (test_err < best) {
                    best = test_err;
                    best_line = line;
                }
            }
        }
        io::write_text_atomic(g.out_dir / "classify.csv", csv);
        if (C.size() * kernels.size() > 1) std::cout << "best: " << best_line << "\n";
        json config{{"C", C}, {"kernel_sigma", sigma}, {"kernel_gamma", gamma}, {"tol", tol}};
        std::vector<fs::path> inputs{train_features};
        if (!test_features.empty()) inputs.push_back(test_features);
        write_manifest("classify", config, inputs, {"classify.csv"});
    }
};

// ---- export-filters ----

struct ExportCmd {
    fs::path model_file;
    std::vector<std::size_t> filters;
    std::vector<std::size_t> slices;
    std::string output = "filters.pgm";

    void run() {
        const auto m = load_model(model_file);
        if (filters.empty())
            for (std::size_t j = 0; j < std::min<std::size_t>(10, m.hidden()); ++j) filters.push_back(j);
        if (slices.empty())
            for (std::size_t s = 0; s < m.slices(); ++s) slices.push_back(s);
        std::vector<std::pair<std::size_t, std::size_t>> cells;
        for (auto f : filters)
            for (auto s : slices) {
                if (f >= m.hidden())
                    throw ArgumentError("filter " + std::to_string(f) + " out of range (H = " +
                                        std::to_string(m.hidden()) + ")");
                if (s >= m.slices())
                    throw ArgumentError("slice " + std::to_string(s) + " out of range (S = " +
                                        std::to_string(m.slices()) + ")");
                cells.emplace_back(f, s);
            }
        const auto img = tile_filters(m, static_cast<int>(filters.size()), static_cast<int>(slices.size()), cells);
        write_pgm(g.out_dir / output, img);
        json config{{"model_file", model_file.string()}, {"filters", filters}, {"slices", slices}};
        write_manifest("export-filters", config, {model_file}, {output});
        std::cout << "wrote " << (g.out_dir / output).string() << " (" << img.width << "x" << img.height << ")\n";
    }
};

// ---- experiment / perturb ----

struct ExperimentCmd {
    std::string name;
    DataOpts data;
    TrainConfig train;
    TrainOpts opts;
    std::size_t n_test = 2000;
    std::vector<double> sparsities{0.3};
    std::vector<std::string> kinds{"rbm", "orbm", "theta"};
    double delta = 20.0;
    std::string policy = "tracked";
    double C = 10.0;
    double sigma = 0.02;
    double tol = 1e-3;
    std::vector<int> perturb_n{1, 2, 3, 4};
    std::vector<double> perturb_p{0.1, 0.2, 0.3, 0.4};
    int lemma_steps = 200;

    void run() {
        finish_train_config(train, opts);
        pipeline::ExperimentConfig cfg;
        cfg.name = name;
        cfg.data.mnist_images = data.train_images;
        cfg.data.mnist_labels = data.train_labels;
        cfg.data.rot_train = data.amat;
        cfg.data.rot_test = data.test_amat;
        const bool needs_rot = name != "lemma-check";
        if (needs_rot && data.amat.empty() && name != "mnist-generalization")
            throw ArgumentError("--amat is required for experiment " + name);
        if (needs_rot && data.test_amat.empty()) throw ArgumentError("--test-amat is required for experiment " + name);
        if (name == "mnist-generalization" && (data.train_images.empty() || data.train_labels.empty()))
            throw ArgumentError("--train-images and --train-labels are required for mnist-generalization");
        cfg.n_train = data.subsample > 0 ? data.subsample : 2000;
        cfg.n_test = n_test;
        cfg.angles = parse_angle_list(data.angles);
        cfg.rotation_mode = parse_rotation_mode(data.rotation_mode);
        cfg.bins = data.bins;
        cfg.train = train;
        cfg.sparsities = sparsities;
        cfg.kinds.clear();
        for (const auto& k : kinds) cfg.kinds.push_back(parse_model_kind(k));
        cfg.delta = delta;
        cfg.policy = parse_policy(policy);
        cfg.svm_C = C;
        cfg.kernel_sigma = sigma;
        cfg.svm_tol = tol;
        cfg.perturb_n = perturb_n;
        cfg.perturb_p = perturb_p;
        cfg.seed = g.seed;
        cfg.lemma_steps = lemma_steps;
        cfg.out_dir = g.out_dir;
        std::cout << pipeline::run_experiment(cfg);
    }
};

void add_experiment_options(CLI::App* cmd, ExperimentCmd& e, bool table3_only) {
    add_data_options(cmd, e.data, true);
    add_train_options(cmd, e.train, e.opts);
    cmd->add_option("--n-test", e.n_test, "test subsample size")->capture_default_str();
    cmd->add_option("--sparsities", e.sparsities, "sparsity targets")->delimiter(',');
    cmd->add_option("--C", e.C, "SVM box constraint")->capture_default_str();
    cmd->add_option("--kernel-sigma", e.sigma, "kernel width (also tried directly as gamma)")->capture_default_str();
    cmd->add_option("--tol", e.tol, "SMO tolerance")->capture_default_str();
    cmd->add_option("--perturb-ns", e.perturb_n, "perturbation trials grid")->delimiter(',');
    cmd->add_option("--perturb-ps", e.perturb_p, "perturbation probability grid")->delimiter(',');
    if (table3_only) return;
    cmd->add_option("--kinds", e.kinds, "model kinds to compare")->delimiter(',');
    cmd->add_option("--delta", e.delta, "shift of the evaluation rotations in degrees")->capture_default_str();
    cmd->add_option("--r-policy", e.policy, "tracked|estimated")->capture_default_str();
    cmd->add_option("--lemma-steps", e.lemma_steps, "updates for lemma-check")->capture_default_str();
}

int run_guarded(const std::function<void()>& fn) {
    try {
        fn();
        return kOk;
    } catch (const ArgumentError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const RotationModeError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return kNumerical;
    } catch (const Error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kData;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kData;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Rotation-gated RBM training, invariance scoring and classification"};
    app.require_subcommand(1);
    app.set_config("--config", "", "key-value file (TOML/INI); explicit flags take precedence");
    env(app.add_option("--seed", g.seed, "random seed"), "SEED")->capture_default_str();
    env(app.add_option("--threads", g.threads, "worker threads"), "THREADS")->capture_default_str();
    env(app.add_option("--out-dir", g.out_dir, "output directory"), "OUT_DIR")->capture_default_str();
    app.fallthrough();

    TrainCmd train;
    auto* c_train = app.add_subcommand("train", "train a model and write per-epoch checkpoints");
    add_data_options(c_train, train.data, false);
    add_train_options(c_train, train.train, train.opts);
    c_train->add_option("--model", train.opts.model, "theta|rbm|orbm")->capture_default_str();

    GammaCmd gamma;
    auto* c_gamma = app.add_subcommand("gamma", "invariance score of a trained model");
    add_data_options(c_gamma, gamma.data, true);
    add_model_options(c_gamma, gamma.model);
    c_gamma->add_option("--delta", gamma.delta, "shift of the evaluation rotations in degrees")
        ->capture_default_str();
    c_gamma->add_option("--r-policy", gamma.policy, "tracked|estimated")->capture_default_str();

    ExtractCmd extract;
    auto* c_extract = app.add_subcommand("extract", "hidden-probability features for a dataset");
    add_data_options(c_extract, extract.data, true);
    add_model_options(c_extract, extract.model);
    c_extract->add_option("--output", extract.output, "feature file name inside --out-dir")
        ->capture_default_str();

    ClassifyCmd classify;
    auto* c_classify = app.add_subcommand("classify", "one-vs-rest RBF SVM on feature files");
    c_classify->add_option("--train-features", classify.train_features)->required()->check(CLI::ExistingFile);
    c_classify->add_option("--test-features", classify.test_features)->check(CLI::ExistingFile);
    c_classify->add_option("--C", classify.C, "box constraint (comma list sweeps)")->delimiter(',');
    auto* o_sigma = c_classify->add_option("--kernel-sigma", classify.sigma,
                                           "Gaussian width, gamma = 1/(2 sigma^2) (comma list sweeps)")
                        ->delimiter(',');
    c_classify->add_option("--kernel-gamma", classify.gamma, "kernel gamma used directly (comma list sweeps)")
        ->delimiter(',')
        ->excludes(o_sigma);
    c_classify->add_option("--tol", classify.tol, "KKT tolerance")->capture_default_str();

    ExportCmd exporter;
    auto* c_export = app.add_subcommand("export-filters", "tile filters into a PGM image");
    c_export->add_option("--model-file", exporter.model_file)->required()->check(CLI::ExistingFile);
    c_export->add_option("--filters", exporter.filters, "filter rows (default first 10)")->delimiter(',');
    c_export->add_option("--slices", exporter.slices, "slices, one column each (default all)")->delimiter(',');
    c_export->add_option("--output", exporter.output, "image name inside --out-dir")->capture_default_str();

    ExperimentCmd experiment;
    auto* c_experiment = app.add_subcommand("experiment", "run a named end-to-end experiment");
    c_experiment->add_option("name", experiment.name, "table1|table2|table3|mnist-generalization|lemma-check")
        ->required()
        ->check(CLI::IsMember({"table1", "table2", "table3", "mnist-generalization", "lemma-check"}));
    add_experiment_options(c_experiment, experiment, false);

    ExperimentCmd perturb;
    perturb.name = "table3";
    auto* c_perturb = app.add_subcommand("perturb", "classification error under perturbed orientation indices");
    add_experiment_options(c_perturb, perturb, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    return run_guarded([&] {
        set_thread_count(g.threads);
        fs::create_directories(g.out_dir);
        if (c_train->parsed()) train.run();
        if (c_gamma->parsed()) gamma.run();
        if (c_extract->parsed()) extract.run();
        if (c_classify->parsed()) classify.run();
        if (c_export->parsed()) exporter.run();
        if (c_experiment->parsed()) experiment.run();
        if (c_perturb->parsed()) perturb.run();
    });
}
