#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "thetarbm/linalg.hpp"

namespace thetarbm {

// Flattened square gray images (one row per image, row-major pixels) with
// digit labels and, once assigned, an index into a rotation support set.
struct ImageDataset {
    Matrix images;                 // N x V
    std::vector<int> labels;       // N entries in 0..9
    int side = 0;                  // side * side == V
    std::vector<int> orientation;  // empty, or N entries in 0..S-1

    std::size_t size() const { return static_cast<std::size_t>(images.rows()); }
    std::size_t dim() const { return static_cast<std::size_t>(images.cols()); }
    bool has_orientation() const { return !orientation.empty(); }

    // Throws ShapeError / ArgumentError when the fields are inconsistent.
    void validate() const;
};

// Loads an IDX image/label pair (magic 0x803 / 0x801). Pixels scaled to [0,1].
ImageDataset load_idx(const std::filesystem::path& images_path,
                      const std::filesystem::path& labels_path);

// Loads whitespace-separated text rows of V pixels followed by the label.
// V is inferred from the first row and must be a perfect square.
// Pixels are clamped to [0,1]; the label may be written as a float ("7.0").
ImageDataset load_amat(const std::filesystem::path& path);

// Writes the dataset in the same text layout load_amat reads.
void save_amat(const std::filesystem::path& path, const ImageDataset& ds);

enum class NormScope { whole, per_orientation };

// Per-pixel standardization parameters. For per_orientation scope there is
// one (mean, std) pair per support-set index; groups with fewer than two
// training samples fall back to the whole-dataset pair.
struct NormalizationStats {
    NormScope scope = NormScope::whole;
    Vector mean;                     // whole-dataset statistics, always present
    Vector stddev;
    std::vector<Vector> group_mean;  // per_orientation only
    std::vector<Vector> group_std;

    // Divisor actually applied: std, with 0 replaced by 1.
    static double divisor(double s) { return s > 0.0 ? s : 1.0; }

    const Vector& mean_for(int group) const;
    const Vector& std_for(int group) const;
};

struct NormalizeResult {
    ImageDataset train;
    ImageDataset test;
    NormalizationStats stats;
    std::vector<std::string> warnings;
};

// Computes stats on `train` only and applies them to both splits.
NormalizeResult normalize(const ImageDataset& train, const ImageDataset& test, NormScope scope,
                          int group_count = 0);

NormalizationStats compute_normalization(const ImageDataset& train, NormScope scope,
                                         int group_count, std::vector<std::string>* warnings = nullptr);

ImageDataset apply_normalization(const ImageDataset& ds, const NormalizationStats& stats);
ImageDataset denormalize(const ImageDataset& ds, const NormalizationStats& stats);

// Standardizes one raw image with the statistics of `group` (ignored for whole scope).
Vector normalize_image(std::span<const double> raw, const NormalizationStats& stats, int group);

void save_normalization(const std::filesystem::path& path, const NormalizationStats& stats);
NormalizationStats load_normalization(const std::filesystem::path& path);

// n rows drawn without replacement; identical output for identical seed.
ImageDataset subsample(const ImageDataset& ds, std::size_t n, std::uint64_t seed);

// Rows at the given indices, in order.
ImageDataset select_rows(const ImageDataset& ds, std::span<const std::size_t> indices);

}  // namespace thetarbm
