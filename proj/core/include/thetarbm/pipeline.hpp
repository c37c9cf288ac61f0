#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "thetarbm/dataset.hpp"
#include "thetarbm/features.hpp"
#include "thetarbm/invariance.hpp"
#include "thetarbm/rotation.hpp"
#include "thetarbm/svm.hpp"
#include "thetarbm/trainer.hpp"

namespace thetarbm::pipeline {

struct DataPaths {
    std::filesystem::path mnist_images;  // upright IDX images
    std::filesystem::path mnist_labels;
    std::filesystem::path rot_train;     // rotated amat, training split
    std::filesystem::path rot_test;      // rotated amat, test split
};

struct ExperimentConfig {
    std::string name;
    DataPaths data;
    std::size_t n_train = 2000;
    std::size_t n_test = 2000;
    std::vector<double> angles{0.0, 90.0, 180.0, 270.0};
    RotationMode rotation_mode = RotationMode::exact;
    int bins = 36;
    TrainConfig train;  // model_kind and sparsity_target are set per run
    std::vector<double> sparsities{0.3};
    std::vector<ModelKind> kinds{ModelKind::rbm, ModelKind::orbm, ModelKind::theta};
    double delta = 20.0;
    RIndexPolicy policy = RIndexPolicy::tracked;
    double svm_C = 10.0;
    double kernel_sigma = 0.02;  // tried both as a Gaussian width and directly as gamma
    double svm_tol = 1e-3;
    std::vector<int> perturb_n{1, 2, 3, 4};
    std::vector<double> perturb_p{0.1, 0.2, 0.3, 0.4};
    std::uint64_t seed = 1;  // subsampling and perturbation draws
    // Synthetic Lemma-1 run.
    int lemma_steps = 200;
    int lemma_side = 16;
    std::size_t lemma_hidden = 32;
    std::size_t lemma_images = 64;
    std::filesystem::path out_dir;  // empty: keep results in memory only
};

std::string to_json(const ExperimentConfig& cfg);

// Raw (unnormalized) images with orientation indices assigned.
struct Splits {
    ImageDataset train;
    ImageDataset test;
};

Splits load_rot_splits(const ExperimentConfig& cfg, const SupportSet& set);
ImageDataset load_mnist_train(const ExperimentConfig& cfg, const SupportSet& set);

struct TrainedRun {
    ModelKind kind = ModelKind::theta;
    ThetaRbmModel model;
    NormalizationStats stats;
    std::vector<EpochMetrics> metrics;
    std::vector<std::string> warnings;
};

// Normalizes the raw training split the way `kind` expects (per orientation
// group for theta, after pre-alignment for orbm) and trains.
TrainedRun train_run(ModelKind kind, TrainConfig cfg, const ImageDataset& train_raw, const SupportSet& set,
                     const EpochCallback& on_epoch = {});

FeatureMatrix features_for(const TrainedRun& run, const SupportSet& set, const ImageDataset& raw);
GammaReport gamma_for(const TrainedRun& run, const SupportSet& set, const ImageDataset& raw,
                      const std::vector<double>& transforms, RIndexPolicy policy, int bins);

struct ClassifyOutcome {
    double test_error = 1.0;
    double train_error = 1.0;
    double kernel_gamma = 0.0;
    std::string parameterization;  // "width" or "gamma"
    double max_kkt_violation = 0.0;
    bool converged = true;
    std::vector<std::string> warnings;
};

// Trains with gamma = 1/(2 sigma^2) and with gamma = sigma; keeps the lower test error.
ClassifyOutcome classify_best(const FeatureMatrix& train, const FeatureMatrix& test, double C, double sigma,
                              double tol);

struct ComparisonRow {
    double sparsity = 0.0;
    ModelKind kind = ModelKind::theta;
    std::optional<ClassifyOutcome> classification;
    std::optional<GammaReport> gamma_train;
    std::optional<GammaReport> gamma_test;
    std::vector<EpochMetrics> metrics;
};

struct ComparisonReport {
    std::vector<ComparisonRow> rows;
    const ComparisonRow* find(double sparsity, ModelKind kind) const;
};

// table1 / table2 experiments: train every kind at every sparsity, then classify and/or
// measure gamma on the shifted support set.
ComparisonReport run_comparison(const ExperimentConfig& cfg, bool classify, bool gamma);

struct PerturbationReport {
    double unperturbed_error = 0.0;
    std::map<std::pair<int, double>, double> error;  // (n, p) -> test error
};

// table3 experiment: theta model trained on perturbed orientation indices.
PerturbationReport run_perturbation(const ExperimentConfig& cfg,
                                    const std::vector<std::pair<int, double>>& cells);

struct GeneralizationReport {
    std::map<ModelKind, GammaReport> gamma_train;  // on the upright training subsample
    std::map<ModelKind, GammaReport> gamma_test;   // on the rotated test subsample
};

// Trains on upright digits and evaluates invariance on rotated test digits.
GeneralizationReport run_mnist_generalization(const ExperimentConfig& cfg);

struct LemmaReport {
    std::vector<double> residual_per_step;
    double max_residual = 0.0;
    GammaReport gamma;  // transforms = the support set, tracked gating
    ThetaRbmModel model;
    SupportSet set{{0.0}, 1, RotationMode::exact};
    ImageDataset images;
};

// Synthetic binary images, exact 90-degree support set, rotated init,
// Bernoulli units, CD-1 with the configured momentum.
LemmaReport run_lemma_check(const ExperimentConfig& cfg);

// Runs cfg.name and writes reports plus a manifest into cfg.out_dir.
// Returns the human-readable summary table.
std::string run_experiment(const ExperimentConfig& cfg);

std::string format_comparison_errors(const ComparisonReport& r);
std::string format_comparison_gamma(const ComparisonReport& r);
std::string format_perturbation(const ExperimentConfig& cfg, const PerturbationReport& r);

}  // namespace thetarbm::pipeline
