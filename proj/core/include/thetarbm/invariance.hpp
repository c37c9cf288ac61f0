#pragma once

#include <optional>
#include <string>
#include <vector>

#include "thetarbm/dataset.hpp"
#include "thetarbm/features.hpp"
#include "thetarbm/rbm.hpp"
#include "thetarbm/rotation.hpp"

namespace thetarbm {

// How the gating index is chosen for a transformed input.
enum class RIndexPolicy {
    tracked,    // support angle nearest to phi_{r(x)} + theta
    estimated,  // re-estimate the dominant orientation of the rotated image
};

struct GammaOptions {
    RIndexPolicy policy = RIndexPolicy::tracked;
    int bins = 36;
    double dead_tolerance = 1e-12;
};

struct GammaReport {
    std::vector<double> gamma;      // per hidden unit; NaN for dead units
    std::vector<bool> dead;
    std::vector<double> var_mean;   // var over x of mu_j(x)
    std::vector<double> var_hidden; // var over x of h_j(x)
    std::optional<double> mean_gamma;  // over live units; empty when all dead
    std::size_t dead_count = 0;
    std::vector<double> transforms;
    double delta = 0.0;

    std::string to_json() const;
    std::string csv_row(const std::string& label) const;
    static std::string csv_header();
};

// mu_j(x) = mean over theta of h_j(R_theta x), with the gating index chosen
// per `opts.policy`. Rotations of x use nearest-neighbour tables.
Vector mean_activation(const FeatureEncoder& encoder, std::span<const double> raw, int r_index,
                       const std::vector<double>& transforms, const GammaOptions& opts = {});

Vector mean_activation(const ThetaRbmModel& m, const Vector& x, int r_index,
                       const std::vector<double>& transforms, const SupportSet& set,
                       const GammaOptions& opts = {});

// gamma_j = var{mu_j(x)} / var{h_j(x)} with population variances over ds.
GammaReport gamma_score(const FeatureEncoder& encoder, const ImageDataset& ds,
                        const std::vector<double>& transforms, const GammaOptions& opts = {});

GammaReport gamma_score(const ThetaRbmModel& m, const ImageDataset& ds,
                        const std::vector<double>& transforms, const SupportSet& set,
                        const GammaOptions& opts = {});

// gamma from precomputed responses: responses[t] is the N x H matrix of
// activations under transform t, base is the untransformed N x H matrix.
GammaReport gamma_from_responses(const Matrix& base, const std::vector<Matrix>& responses,
                                 double dead_tolerance = 1e-12);

// {phi_s + delta mod 360}.
std::vector<double> shifted_support(const SupportSet& set, double delta);
std::vector<double> shifted_support(const std::vector<double>& angles, double delta);

}  // namespace thetarbm
