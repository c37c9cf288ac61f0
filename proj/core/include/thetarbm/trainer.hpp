#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "thetarbm/dataset.hpp"
#include "thetarbm/rbm.hpp"
#include "thetarbm/rotation.hpp"

namespace thetarbm {

enum class InitMode { rotated, independent };

// literal:   W += eta * g(t) + alpha * g(t-1)      (previous raw gradient)
// classical: u = eta * g(t) + alpha * u; W += u    (velocity folding)
enum class MomentumMode { literal, classical };

struct TrainConfig {
    ModelKind model_kind = ModelKind::theta;
    UnitType unit_type = UnitType::gaussian;
    std::size_t hidden = 100;
    double eta = 0.01;
    double alpha = 0.9;
    // Optional linear momentum ramp: alpha goes from alpha_start to alpha over
    // the first alpha_ramp_steps updates. Zero steps means constant alpha.
    double alpha_start = 0.9;
    std::uint64_t alpha_ramp_steps = 0;
    MomentumMode momentum = MomentumMode::literal;
    int k = 1;
    int epochs = 50;
    std::size_t batch_size = 100;
    std::optional<double> sparsity_target;
    double sparsity_weight = 1.0;
    double sparsity_decay = 0.9;  // running-mean decay for hidden activations
    std::uint64_t seed = 1;
    InitMode init_mode = InitMode::rotated;
    double init_std = 0.01;
    bool sample_visible = false;

    void validate() const;
    double alpha_at(std::uint64_t step) const;
};

std::string to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const std::string& text);
const char* to_string(InitMode m);
const char* to_string(MomentumMode m);
InitMode parse_init_mode(std::string_view s);
MomentumMode parse_momentum_mode(std::string_view s);

struct TrainerState {
    ThetaRbmModel model;
    std::vector<Matrix> velocity;  // same shape as model.W
    Vector velocity_b;
    Vector velocity_c;
    Vector running_hidden;         // running mean of p(h|v), for sparsity
    bool running_initialized = false;
    std::uint64_t step = 0;
    int epoch = 0;
};

// Rotated: W_s = rotate_rows(M, phi_s) for one M ~ N(0, init_std^2).
// Independent: every slice drawn separately. Biases start at zero.
ThetaRbmModel init_model(const TrainConfig& cfg, const SupportSet& set, std::size_t H, Rng& rng);

TrainerState make_trainer_state(ThetaRbmModel model);

// Fills every slice k from each realized slice s by rotating it through
// phi_k - phi_s; contributions from several realized slices add up.
// Realized slices keep their own content.
void share_gradients(std::vector<Matrix>& dW, const std::vector<bool>& realized, const SupportSet& set);

struct StepReport {
    double recon_error = 0.0;
    double mean_activation = 0.0;
};

StepReport update_step(TrainerState& state, const Batch& batch, const TrainConfig& cfg,
                       const SupportSet& set, Rng& rng);

// Applies an already computed (shared) gradient; exposed for tests that
// drive the update rule with stubbed gradients.
void apply_update(TrainerState& state, const std::vector<Matrix>& dW, const Vector& db,
                  const Vector& dc, const TrainConfig& cfg);

// max over slice pairs (s, s') of |W_s' - R_{phi_s' - phi_s}(W_s)|.
double lemma_residual(const ThetaRbmModel& m, const SupportSet& set);

struct EpochMetrics {
    int epoch = 0;
    double recon_error = 0.0;
    double mean_activation = 0.0;
    double lemma_residual = 0.0;
};

struct TrainResult {
    ThetaRbmModel model;
    std::vector<EpochMetrics> metrics;
};

using EpochCallback = std::function<void(const EpochMetrics&, const ThetaRbmModel&)>;

// theta: slices routed by ds.orientation. rbm: single slice at 0 degrees.
// orbm: inputs already aligned by the caller (see align_to_canonical),
// trained as a plain RBM. Metrics are emitted once per epoch in order.
TrainResult train(const TrainConfig& cfg, const ImageDataset& ds, const SupportSet& set,
                  const EpochCallback& on_epoch = {});

// Rotates each image by -phi_{orientation} so that all share orientation 0.
ImageDataset align_to_canonical(const ImageDataset& ds, const SupportSet& set);

// Support set actually used for the weights of a given model kind.
SupportSet model_support_set(ModelKind kind, const SupportSet& data_set);

}  // namespace thetarbm
