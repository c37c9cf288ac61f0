#include "thetarbm/pipeline.hpp"

#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "thetarbm/binary_io.hpp"
#include "thetarbm/error.hpp"
#include "thetarbm/model_io.hpp"
#include "thetarbm/orientation.hpp"

namespace thetarbm::pipeline {

namespace {

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

std::string sparsity_tag(double s) {
    return fmt("%.2f", s);
}

// Left-aligned first column, right-aligned rest.
std::string render_table(const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> width;
    for (const auto& r : rows)
        for (std::size_t c = 0; c < r.size(); ++c) {
            if (width.size() <= c) width.push_back(0);
            width[c] = std::max(width[c], r[c].size());
        }
    std::ostringstream out;
    for (const auto& r : rows) {
        for (std::size_t c = 0; c < r.size(); ++c) {
            const auto pad = std::string(width[c] - r[c].size(), ' ');
            out << (c == 0 ? r[c] + pad : "  " + pad + r[c]);
        }
        out << '\n';
    }
    return out.str();
}

std::string to_csv(const std::vector<std::vector<std::string>>& rows) {
    std::ostringstream out;
    for (const auto& r : rows) {
        for (std::size_t c = 0; c < r.size(); ++c) out << (c ? "," : "") << r[c];
        out << '\n';
    }
    return out.str();
}

SupportSet make_set(const ExperimentConfig& cfg, int side) {
    return SupportSet(cfg.angles, side, cfg.rotation_mode);
}

void write_outputs(const ExperimentConfig& cfg, const std::string& stem,
                   const std::vector<std::vector<std::string>>& table) {
    if (cfg.out_dir.empty()) return;
    io::write_text_atomic(cfg.out_dir / (stem + ".csv"), to_csv(table));
    io::write_text_atomic(cfg.out_dir / (stem + ".txt"), render_table(table));
}

}  // namespace

std::string to_json(const ExperimentConfig& cfg) {
    nlohmann::ordered_json j;
    j["name"] = cfg.name;
    j["data"] = {{"mnist_images", cfg.data.mnist_images.string()},
                 {"mnist_labels", cfg.data.mnist_labels.string()},
                 {"rot_train", cfg.data.rot_train.string()},
                 {"rot_test", cfg.data.rot_test.string()}};
    j["n_train"] = cfg.n_train;
    j["n_test"] = cfg.n_test;
    j["angles"] = cfg.angles;
    j["rotation_mode"] = cfg.rotation_mode == RotationMode::exact ? "exact" : "nn";
    j["bins"] = cfg.bins;
    j["train"] = nlohmann::ordered_json::parse(to_json(cfg.train));
    j["sparsities"] = cfg.sparsities;
    std::vector<std::string> kinds;
    for (auto k : cfg.kinds) kinds.emplace_back(to_string(k));
    j["kinds"] = kinds;
    j["delta"] = cfg.delta;
    j["r_policy"] = cfg.policy == RIndexPolicy::tracked ? "tracked" : "estimated";
    j["svm_C"] = cfg.svm_C;
    j["kernel_sigma"] = cfg.kernel_sigma;
    j["svm_tol"] = cfg.svm_tol;
    j["perturb_n"] = cfg.perturb_n;
    j["perturb_p"] = cfg.perturb_p;
    j["seed"] = cfg.seed;
    j["lemma"] = {{"steps", cfg.lemma_steps},
                  {"side", cfg.lemma_side},
                  {"hidden", cfg.lemma_hidden},
                  {"images", cfg.lemma_images}};
    return j.dump(2);
}

Splits load_rot_splits(const ExperimentConfig& cfg, const SupportSet& set) {
    if (cfg.data.rot_train.empty() || cfg.data.rot_test.empty())
        throw ArgumentError("rotated train/test amat paths are required");
    auto train = load_amat(cfg.data.rot_train);
    auto test = load_amat(cfg.data.rot_test);
    train = subsample(train, std::min(cfg.n_train, train.size()), cfg.seed);
    test = subsample(test, std::min(cfg.n_test, test.size()), cfg.seed + 1);
    return {assign_orientations(train, set, cfg.bins), assign_orientations(test, set, cfg.bins)};
}

ImageDataset load_mnist_train(const ExperimentConfig& cfg, const SupportSet& set) {
    if (cfg.data.mnist_images.empty() || cfg.data.mnist_labels.empty())
        throw ArgumentError("mnist IDX image and label paths are required");
    auto ds = load_idx(cfg.data.mnist_images, cfg.data.mnist_labels);
    ds = subsample(ds, std::min(cfg.n_train, ds.size()), cfg.seed + 2);
    return assign_orientations(ds, set, cfg.bins);
}

TrainedRun train_run(ModelKind kind, TrainConfig cfg, const ImageDataset& train_raw, const SupportSet& set,
                     const EpochCallback& on_epoch) {
    cfg.model_kind = kind;
    TrainedRun run;
    run.kind = kind;
    ImageDataset prepared;
    switch (kind) {
        case ModelKind::theta:
            run.stats = compute_normalization(train_raw, NormScope::per_orientation, static_cast<int>(set.size()),
                                              &run.warnings);
            prepared = apply_normalization(train_raw, run.stats);
            break;
        case ModelKind::rbm:
            run.stats = compute_normalization(train_raw, NormScope::whole, 0);
            prepared = apply_normalization(train_raw, run.stats);
            break;
        case ModelKind::orbm: {
            const auto aligned = align_to_canonical(train_raw, set);
            run.stats = compute_normalization(aligned, NormScope::whole, 0);
            prepared = apply_normalization(aligned, run.stats);
            break;
        }
    }
    auto result = train(cfg, prepared, set, on_epoch);
    run.model = std::move(result.model);
    run.metrics = std::move(result.metrics);
    return run;
}

FeatureMatrix features_for(const TrainedRun& run, const SupportSet& set, const ImageDataset& raw) {
    return extract_features(FeatureEncoder(run.model, set, run.stats), raw);
}

GammaReport gamma_for(const TrainedRun& run, const SupportSet& set, const ImageDataset& raw,
                      const std::vector<double>& transforms, RIndexPolicy policy, int bins) {
    GammaOptions opts;
    opts.policy = policy;
    opts.bins = bins;
    return gamma_score(FeatureEncoder(run.model, set, run.stats), raw, transforms, opts);
}

ClassifyOutcome classify_best(const FeatureMatrix& train, const FeatureMatrix& test, double C, double sigma,
                              double tol) {
    ClassifyOutcome best;
    const std::pair<const char*, double> candidates[] = {{"width", kernel_gamma_from_sigma(sigma)}, {"gamma", sigma}};
    bool have = false;
    for (const auto& [label, gamma] : candidates) {
        SvmParams params;
        params.C = C;
        params.gamma = gamma;
        params.tol = tol;
        params.cache_rows = train.size();
        ClassifyOutcome out;
        const auto model = svm_train(train, params, &out.warnings);
        out.kernel_gamma = gamma;
        out.parameterization = label;
        out.test_error = svm_predict(model, test).error_rate;
        out.train_error = svm_predict(model, train).error_rate;
        for (const auto& m : model.machines) {
            out.max_kkt_violation = std::max(out.max_kkt_violation, m.kkt_violation);
            out.converged = out.converged && m.converged;
        }
        if (!have || out.test_error < best.test_error) {
            best = std::move(out);
            have = true;
        }
    }
    return best;
}

const ComparisonRow* ComparisonReport::find(double sparsity, ModelKind kind) const {
    for (const auto& r : rows)
        if (std::abs(r.sparsity - sparsity) < 1e-12 && r.kind == kind) return &r;
    return nullptr;
}

ComparisonReport run_comparison(const ExperimentConfig& cfg, bool classify, bool gamma) {
    const auto probe = load_amat(cfg.data.rot_train);
    const SupportSet set = make_set(cfg, probe.side);
    const Splits splits = load_rot_splits(cfg, set);
    const auto transforms = shifted_support(set, cfg.delta);

    ComparisonReport report;
    for (double sparsity : cfg.sparsities) {
        for (ModelKind kind : cfg.kinds) {
            TrainConfig tc = cfg.train;
            tc.sparsity_target = sparsity;
            const auto run = train_run(kind, tc, splits.train, set);
            ComparisonRow row;
            row.sparsity = sparsity;
            row.kind = kind;
            row.metrics = run.metrics;
            const std::string tag = std::string(to_string(kind)) + "_s" + sparsity_tag(sparsity);
            if (!cfg.out_dir.empty()) {
                save_model(cfg.out_dir / "models" / ("model_" + tag + ".bin"), run.model);
                save_normalization(cfg.out_dir / "models" / ("norm_" + tag + ".bin"), run.stats);
            }
            if (classify) {
                const auto ftrain = features_for(run, set, splits.train);
                const auto ftest = features_for(run, set, splits.test);
                if (!cfg.out_dir.empty()) {
                    save_features(cfg.out_dir / "features" / (tag + "_train.bin"), ftrain);
                    save_features(cfg.out_dir / "features" / (tag + "_test.bin"), ftest);
                }
                row.classification = classify_best(ftrain, ftest, cfg.svm_C, cfg.kernel_sigma, cfg.svm_tol);
            }
            if (gamma) {
                row.gamma_train = gamma_for(run, set, splits.train, transforms, cfg.policy, cfg.bins);
                row.gamma_test = gamma_for(run, set, splits.test, transforms, cfg.policy, cfg.bins);
                row.gamma_train->delta = cfg.delta;
                row.gamma_test->delta = cfg.delta;
                if (!cfg.out_dir.empty()) {
                    io::write_text_atomic(cfg.out_dir / "gamma" / (tag + "_train.json"), row.gamma_train->to_json());
                    io::write_text_atomic(cfg.out_dir / "gamma" / (tag + "_test.json"), row.gamma_test->to_json());
                }
            }
            report.rows.push_back(std::move(row));
        }
    }
    return report;
}

std::string format_comparison_errors(const ComparisonReport& r) {
    std::vector<double> sparsities;
    std::vector<ModelKind> kinds;
    for (const auto& row : r.rows) {
        if (std::find(sparsities.begin(), sparsities.end(), row.sparsity) == sparsities.end())
            sparsities.push_back(row.sparsity);
        if (std::find(kinds.begin(), kinds.end(), row.kind) == kinds.end()) kinds.push_back(row.kind);
    }
    std::vector<std::vector<std::string>> t;
    std::vector<std::string> header{"model"};
    for (double s : sparsities) header.push_back("sparsity " + sparsity_tag(s));
    t.push_back(header);
    for (auto k : kinds) {
        std::vector<std::string> line{to_string(k)};
        for (double s : sparsities) {
            const auto* row = r.find(s, k);
            line.push_back(row && row->classification ? fmt("%.2f%%", 100.0 * row->classification->test_error) : "-");
        }
        t.push_back(line);
    }
    return render_table(t);
}

std::string format_comparison_gamma(const ComparisonReport& r) {
    std::vector<double> sparsities;
    std::vector<ModelKind> kinds;
    for (const auto& row : r.rows) {
        if (std::find(sparsities.begin(), sparsities.end(), row.sparsity) == sparsities.end())
            sparsities.push_back(row.sparsity);
        if (std::find(kinds.begin(), kinds.end(), row.kind) == kinds.end()) kinds.push_back(row.kind);
    }
    std::vector<std::vector<std::string>> t;
    std::vector<std::string> header{"model"};
    for (double s : sparsities) {
        header.push_back("s" + sparsity_tag(s) + " train");
        header.push_back("s" + sparsity_tag(s) + " test");
    }
    t.push_back(header);
    const auto show = [](const std::optional<GammaReport>& g) {
        return g && g->mean_gamma ? fmt("%.4f", *g->mean_gamma) : std::string("-");
    };
    for (auto k : kinds) {
        std::vector<std::string> line{to_string(k)};
        for (double s : sparsities) {
            const auto* row = r.find(s, k);
            line.push_back(row ? show(row->gamma_train) : "-");
            line.push_back(row ? show(row->gamma_test) : "-");
        }
        t.push_back(line);
    }
    return render_table(t);
}

PerturbationReport run_perturbation(const ExperimentConfig& cfg, const std::vector<std::pair<int, double>>& cells) {
    const auto probe = load_amat(cfg.data.rot_train);
    const SupportSet set = make_set(cfg, probe.side);
    const Splits splits = load_rot_splits(cfg, set);
    const double sparsity = cfg.sparsities.empty() ? 0.3 : cfg.sparsities.front();
    TrainConfig tc = cfg.train;
    tc.sparsity_target = sparsity;

    const auto evaluate = [&](const ImageDataset& train_raw) {
        const auto run = train_run(ModelKind::theta, tc, train_raw, set);
        // Test digits keep their estimated (unperturbed) orientation.
        const auto ftrain = features_for(run, set, train_raw);
        const auto ftest = features_for(run, set, splits.test);
        return classify_best(ftrain, ftest, cfg.svm_C, cfg.kernel_sigma, cfg.svm_tol).test_error;
    };

    PerturbationReport rep;
    rep.unperturbed_error = evaluate(splits.train);
    for (const auto& [n, p] : cells) {
        // One perturbation seed for every cell: per image, eps is then
        // nondecreasing in p and the sign is shared.
        const PerturbationSpec spec{n, p, cfg.seed + 100};
        const auto perturbed = perturb_indices(splits.train, spec, static_cast<int>(set.size()));
        rep.error[{n, p}] = evaluate(perturbed);
    }
    return rep;
}

std::string format_perturbation(const ExperimentConfig& cfg, const PerturbationReport& r) {
    std::vector<std::vector<std::string>> t;
    std::vector<std::string> header{"n \\ p"};
    for (double p : cfg.perturb_p) header.push_back(fmt("p=%.1f", p));
    t.push_back(header);
    for (int n : cfg.perturb_n) {
        std::vector<std::string> line{"n=" + std::to_string(n)};
        for (double p : cfg.perturb_p) {
            const auto it = r.error.find({n, p});
            if (it == r.error.end()) {
                line.push_back("-");
                continue;
            }
            line.push_back(fmt("%.2f%%", 100.0 * it->second) + (it->second > r.unperturbed_error ? "*" : ""));
        }
        t.push_back(line);
    }
    return render_table(t) + "unperturbed: " + fmt("%.2f%%", 100.0 * r.unperturbed_error) + "\n";
}

GeneralizationReport run_mnist_generalization(const ExperimentConfig& cfg) {
    const auto probe = load_amat(cfg.data.rot_test);
    const SupportSet set = make_set(cfg, probe.side);
    const auto train_raw = load_mnist_train(cfg, set);
    auto test_raw = subsample(probe, std::min(cfg.n_test, probe.size()), cfg.seed + 1);
    test_raw = assign_orientations(test_raw, set, cfg.bins);
    const auto transforms = shifted_support(set, cfg.delta);
    const double sparsity = cfg.sparsities.empty() ? 0.3 : cfg.sparsities.front();

    GeneralizationReport rep;
    for (ModelKind kind : cfg.kinds) {
        TrainConfig tc = cfg.train;
        tc.sparsity_target = sparsity;
        const auto run = train_run(kind, tc, train_raw, set);
        if (!cfg.out_dir.empty())
            save_model(cfg.out_dir / "models" / ("model_" + std::string(to_string(kind)) + "_mnist.bin"), run.model);
        auto g_train = gamma_for(run, set, train_raw, transforms, cfg.policy, cfg.bins);
        auto g_test = gamma_for(run, set, test_raw, transforms, cfg.policy, cfg.bins);
        g_train.delta = g_test.delta = cfg.delta;
        rep.gamma_train.emplace(kind, std::move(g_train));
        rep.gamma_test.emplace(kind, std::move(g_test));
    }
    return rep;
}

LemmaReport run_lemma_check(const ExperimentConfig& cfg) {
    LemmaReport rep;
    rep.set = SupportSet(cfg.angles, cfg.lemma_side, RotationMode::exact);
    Rng data_rng(cfg.seed);
    const auto V = static_cast<Eigen::Index>(cfg.lemma_side) * cfg.lemma_side;
    rep.images.side = cfg.lemma_side;
    rep.images.images.resize(static_cast<Eigen::Index>(cfg.lemma_images), V);
    for (Eigen::Index i = 0; i < rep.images.images.rows(); ++i) {
        for (Eigen::Index k = 0; k < V; ++k) rep.images.images(i, k) = uniform01(data_rng) < 0.3 ? 1.0 : 0.0;
        rep.images.labels.push_back(static_cast<int>(i % 10));
        rep.images.orientation.push_back(static_cast<int>(uniform01(data_rng) * static_cast<double>(rep.set.size())));
    }

    TrainConfig tc = cfg.train;
    tc.model_kind = ModelKind::theta;
    tc.unit_type = UnitType::bernoulli;
    tc.init_mode = InitMode::rotated;
    tc.k = 1;
    tc.hidden = cfg.lemma_hidden;
    Rng rng(tc.seed);
    TrainerState state = make_trainer_state(init_model(tc, rep.set, tc.hidden, rng));

    const std::size_t N = rep.images.size();
    const std::size_t bs = std::min<std::size_t>(tc.batch_size, N);
    Batch batch;
    std::size_t cursor = 0;
    for (int step = 0; step < cfg.lemma_steps; ++step) {
        batch.v.resize(static_cast<Eigen::Index>(bs), V);
        batch.slice.resize(bs);
        for (std::size_t i = 0; i < bs; ++i, cursor = (cursor + 1) % N) {
            batch.v.row(static_cast<Eigen::Index>(i)) = rep.images.images.row(static_cast<Eigen::Index>(cursor));
            batch.slice[i] = rep.images.orientation[cursor];
        }
        update_step(state, batch, tc, rep.set, rng);
        const double r = lemma_residual(state.model, rep.set);
        rep.residual_per_step.push_back(r);
        rep.max_residual = std::max(rep.max_residual, r);
    }
    rep.model = std::move(state.model);
    std::vector<double> transforms;
    for (double a : rep.set.angles()) transforms.push_back(a - rep.set.angle(0));
    rep.gamma = gamma_score(rep.model, rep.images, transforms, rep.set);
    return rep;
}

std::string run_experiment(const ExperimentConfig& cfg) {
    nlohmann::ordered_json manifest;
    manifest["experiment"] = nlohmann::ordered_json::parse(to_json(cfg));
    auto& inputs = manifest["inputs"] = nlohmann::ordered_json::object();
    for (const auto& p : {cfg.data.mnist_images, cfg.data.mnist_labels, cfg.data.rot_train, cfg.data.rot_test})
        if (!p.empty() && std::filesystem::exists(p)) inputs[p.string()] = io::file_digest(p);
    manifest["status"] = "running";
    const auto write_manifest = [&] {
        if (!cfg.out_dir.empty()) io::write_text_atomic(cfg.out_dir / "manifest.json", manifest.dump(2));
    };
    write_manifest();

    std::string summary;
    try {
        if (cfg.name == "table1" || cfg.name == "table2") {
            const bool t1 = cfg.name == "table1";
            const auto rep = run_comparison(cfg, t1, !t1);
            summary = t1 ? format_comparison_errors(rep) : format_comparison_gamma(rep);
            std::vector<std::vector<std::string>> csv{{"sparsity", "model", t1 ? "test_error" : "gamma_train",
                                                       t1 ? "kernel_gamma" : "gamma_test"}};
            for (const auto& row : rep.rows) {
                if (t1)
                    csv.push_back({sparsity_tag(row.sparsity), to_string(row.kind),
                                   fmt("%.6f", row.classification->test_error),
                                   fmt("%.6g", row.classification->kernel_gamma)});
                else
                    csv.push_back({sparsity_tag(row.sparsity), to_string(row.kind),
                                   row.gamma_train->mean_gamma ? fmt("%.6f", *row.gamma_train->mean_gamma) : "",
                                   row.gamma_test->mean_gamma ? fmt("%.6f", *row.gamma_test->mean_gamma) : ""});
            }
            write_outputs(cfg, cfg.name, csv);
        } else if (cfg.name == "table3") {
            std::vector<std::pair<int, double>> cells;
            for (int n : cfg.perturb_n)
                for (double p : cfg.perturb_p) cells.emplace_back(n, p);
            const auto rep = run_perturbation(cfg, cells);
            summary = format_perturbation(cfg, rep);
            std::vector<std::vector<std::string>> csv{{"n", "p", "test_error"}};
            csv.push_back({"0", "0", fmt("%.6f", rep.unperturbed_error)});
            for (const auto& [key, err] : rep.error)
                csv.push_back({std::to_string(key.first), fmt("%.2f", key.second), fmt("%.6f", err)});
            write_outputs(cfg, "table3", csv);
        } else if (cfg.name == "mnist-generalization") {
            const auto rep = run_mnist_generalization(cfg);
            std::vector<std::vector<std::string>> csv{{"model", "gamma_train_mnist", "gamma_test_mnist_rot"}};
            for (const auto& [kind, g] : rep.gamma_train) {
                const auto& gt = rep.gamma_test.at(kind);
                csv.push_back({to_string(kind), g.mean_gamma ? fmt("%.4f", *g.mean_gamma) : "-",
                               gt.mean_gamma ? fmt("%.4f", *gt.mean_gamma) : "-"});
            }
            summary = render_table(csv);
            write_outputs(cfg, "mnist_generalization", csv);
        } else if (cfg.name == "lemma-check") {
            const auto rep = run_lemma_check(cfg);
            std::vector<std::vector<std::string>> csv{{"step", "lemma_residual"}};
            for (std::size_t s = 0; s < rep.residual_per_step.size(); ++s)
                csv.push_back({std::to_string(s + 1), fmt("%.3e", rep.residual_per_step[s])});
            write_outputs(cfg, "lemma_check", csv);
            summary = "steps: " + std::to_string(rep.residual_per_step.size()) +
                      "\nmax residual: " + fmt("%.3e", rep.max_residual) + "\nmean gamma (support transforms): " +
                      (rep.gamma.mean_gamma ? fmt("%.12f", *rep.gamma.mean_gamma) : std::string("all units dead")) +
                      "\n";
        } else {
            throw ArgumentError("unknown experiment '" + cfg.name + "'");
        }
    } catch (const std::exception& e) {
        manifest["status"] = "failed";
        manifest["error"] = e.what();
        write_manifest();
        throw;
    }
    manifest["status"] = "completed";
    write_manifest();
    if (!cfg.out_dir.empty()) io::write_text_atomic(cfg.out_dir / "summary.txt", summary);
    return summary;
}

}  // namespace thetarbm::pipeline
