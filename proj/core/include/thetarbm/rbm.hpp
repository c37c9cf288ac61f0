#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "thetarbm/linalg.hpp"
#include "thetarbm/random.hpp"

namespace thetarbm {

enum class UnitType { bernoulli, gaussian };

// Which training recipe produced a model; determines how inputs are
// presented at feature-extraction time.
enum class ModelKind {
    theta,  // gated slices selected by orientation index
    rbm,    // plain RBM, S = 1
    orbm,   // plain RBM on inputs pre-aligned to canonical orientation
};

const char* to_string(UnitType t);
const char* to_string(ModelKind k);
UnitType parse_unit_type(std::string_view s);
ModelKind parse_model_kind(std::string_view s);

// Third-order weight tensor stored as S slices of H x V (row j of slice s is
// filter j for rotation s). Biases are shared by all slices: with a one-hot
// rotation layer the per-slice bias terms of the energy reduce to one b, c.
struct ThetaRbmModel {
    std::vector<Matrix> W;  // S slices, each H x V
    Vector b;               // hidden bias, H
    Vector c;               // visible bias, V
    UnitType unit_type = UnitType::bernoulli;
    ModelKind kind = ModelKind::theta;
    int side = 0;
    std::vector<double> angles;  // one per slice

    static ThetaRbmModel zeros(std::size_t H, int side, std::vector<double> angles,
                               UnitType unit_type = UnitType::bernoulli);

    std::size_t hidden() const { return static_cast<std::size_t>(b.size()); }
    std::size_t visible() const { return static_cast<std::size_t>(c.size()); }
    std::size_t slices() const { return W.size(); }

    bool all_finite() const;
    void validate() const;
};

// p(h_j = 1 | v, r) with r one-hot at r_index.
Vector hidden_given_visible(const ThetaRbmModel& m, const Vector& v, int r_index);

// Bernoulli: p(v_k = 1 | h, r). Gaussian (unit variance): the conditional mean.
Vector visible_given_hidden(const ThetaRbmModel& m, const Vector& h, int r_index);

// Energy with an explicit rotation layer r (length S); no one-hot assumption.
double energy(const ThetaRbmModel& m, const Vector& v, const Vector& h, const Vector& r);

// Single-slice expansion -v'W_r h - b.h - c.v (plus |v|^2/2 for Gaussian units).
double energy(const ThetaRbmModel& m, const Vector& v, const Vector& h, int r_index);

double free_energy(const ThetaRbmModel& m, const Vector& v, int r_index);

// Exact joint distribution over binary (v, h) for tiny Bernoulli models.
// State index packs v in the low V bits and h in the next H bits.
struct JointDistribution {
    std::size_t V = 0;
    std::size_t H = 0;
    std::vector<double> prob;

    double p_hidden_given_visible(std::uint32_t v_bits, std::size_t j) const;
    double p_visible_given_hidden(std::uint32_t h_bits, std::size_t k) const;
    double marginal_visible(std::uint32_t v_bits) const;
};

constexpr std::size_t kMaxEnumerationUnits = 20;

JointDistribution enumerate_oracle(const ThetaRbmModel& m, int r_index);

// Minibatch with one slice index per row.
struct Batch {
    Matrix v;                // n x V
    std::vector<int> slice;  // n
};

struct CdOptions {
    int k = 1;
    // Sample visible units during the chain instead of using their mean.
    bool sample_visible = false;
};

// Per-slice raw CD statistics, averaged over the whole batch. Slices that no
// batch item selected stay exactly zero and are flagged in `realized`.
struct CdGradient {
    std::vector<Matrix> dW;
    Vector db;
    Vector dc;
    std::vector<bool> realized;
    Vector mean_hidden;          // batch mean of p(h|v0)
    double recon_error = 0.0;    // mean squared error |v0 - vk|^2 / V
};

CdGradient cd_gradient(const ThetaRbmModel& m, const Batch& batch, const CdOptions& opts, Rng& rng);

}  // namespace thetarbm
