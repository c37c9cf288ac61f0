#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "thetarbm/linalg.hpp"

namespace thetarbm {

enum class RotationMode {
    exact,    // multiples of 90 degrees only; every table is a bijection
    nearest,  // arbitrary angles via nearest-neighbour inverse mapping
};

// Index mapping for one rotation angle: target pixel t takes its value from
// source pixel `source[t]`, or is zero-filled when the entry is kSentinel.
// Positive angles rotate counter-clockwise about ((side-1)/2, (side-1)/2).
struct RotationTable {
    static constexpr std::int32_t kSentinel = -1;

    double degrees = 0.0;
    int side = 0;
    std::vector<std::int32_t> source;

    bool is_permutation() const;
    std::size_t sentinel_count() const;
};

// Reduces an angle to [0, 360).
double wrap_degrees(double degrees);

// Smallest absolute angular difference, in [0, 180].
double circular_distance(double a, double b);

RotationTable make_rotation_table(double degrees, int side, RotationMode mode);

// Table equivalent to applying `first` and then `second`.
RotationTable compose(const RotationTable& first, const RotationTable& second);

// Inverse of a permutation table. Throws RotationModeError for lossy tables.
RotationTable invert(const RotationTable& table);

// Ordered rotation angles plus cached tables for every pairwise difference.
// Further angles are built on demand (nearest mode, or 90-degree multiples in
// exact mode) and cached; lookups are thread-safe.
class SupportSet {
public:
    SupportSet(std::vector<double> angles, int side, RotationMode mode);

    const std::vector<double>& angles() const { return angles_; }
    std::size_t size() const { return angles_.size(); }
    int side() const { return side_; }
    std::size_t dim() const { return static_cast<std::size_t>(side_) * side_; }
    RotationMode mode() const { return mode_; }
    double angle(std::size_t s) const { return angles_.at(s); }

    // Index of the nearest support angle (circular); ties go to the lower index.
    int nearest_index(double degrees) const;

    const RotationTable& table(double degrees) const;

private:
    static std::int64_t key(double degrees);

    struct Cache {
        std::mutex mutex;
        std::map<std::int64_t, std::unique_ptr<const RotationTable>> tables;
    };

    std::vector<double> angles_;
    int side_;
    RotationMode mode_;
    // Shared between copies; tables are immutable once inserted.
    std::shared_ptr<Cache> cache_;
};

std::vector<double> parse_angle_list(std::string_view csv);

// Pixel gather with zero-fill. `out` must not alias `in`.
void apply_table(const RotationTable& table, std::span<const double> in, std::span<double> out);

// Rotates every row of `a` (each row a side x side image) by `degrees`.
Matrix rotate_rows(const Matrix& a, double degrees, const SupportSet& set);
void rotate_rows_into(const Matrix& a, const RotationTable& table, Matrix& out);

// Column-vector form of the same rotation.
Vector rotate_column(const Vector& x, double degrees, const SupportSet& set);

}  // namespace thetarbm
