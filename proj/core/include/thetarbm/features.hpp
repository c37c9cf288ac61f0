#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "thetarbm/dataset.hpp"
#include "thetarbm/rbm.hpp"
#include "thetarbm/rotation.hpp"

namespace thetarbm {

// Maps a raw image plus its orientation index to hidden probabilities the
// way the model was trained: optional standardization, pre-alignment for
// O-RBM, slice selection for the theta model.
class FeatureEncoder {
public:
    FeatureEncoder(const ThetaRbmModel& model, const SupportSet& data_set,
                   std::optional<NormalizationStats> stats = std::nullopt);

    Vector encode(std::span<const double> raw, int r_index) const;

    const ThetaRbmModel& model() const { return model_; }
    const SupportSet& data_set() const { return data_set_; }

private:
    const ThetaRbmModel& model_;
    const SupportSet& data_set_;
    std::optional<NormalizationStats> stats_;
};

struct FeatureMatrix {
    Matrix rows;  // N x H
    std::vector<int> labels;

    std::size_t size() const { return static_cast<std::size_t>(rows.rows()); }
    std::size_t dim() const { return static_cast<std::size_t>(rows.cols()); }
};

// Row i = encoder.encode(ds.images.row(i), ds.orientation[i]); orientation
// may be absent for single-slice models.
FeatureMatrix extract_features(const FeatureEncoder& encoder, const ImageDataset& ds);

// Convenience for already-prepared data: no normalization, no alignment.
FeatureMatrix extract_features(const ThetaRbmModel& m, const ImageDataset& ds);

// "TFEA" | u32 version | u64 N | u64 H | f64[N*H] rows | i32[N] labels
void save_features(const std::filesystem::path& path, const FeatureMatrix& f);
FeatureMatrix load_features(const std::filesystem::path& path);

}  // namespace thetarbm
