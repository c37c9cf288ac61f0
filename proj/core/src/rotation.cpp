#include "thetarbm/rotation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <string>

#include "thetarbm/error.hpp"

namespace thetarbm {

namespace {

constexpr double kAngleEps = 1e-9;

// Quarter turns for angles that are multiples of 90 degrees, else -1.
int quarter_turns(double degrees) {
    const double w = wrap_degrees(degrees);
    const double q = std::round(w / 90.0);
    if (std::abs(w - 90.0 * q) > kAngleEps) return -1;
    return static_cast<int>(q) % 4;
}

}  // namespace

double wrap_degrees(double degrees) {
    double w = std::fmod(degrees, 360.0);
    if (w < 0.0) w += 360.0;
    if (w >= 360.0 - kAngleEps) w = 0.0;
    return w;
}

double circular_distance(double a, double b) {
    const double d = wrap_degrees(a - b);
    return std::min(d, 360.0 - d);
}

bool RotationTable::is_permutation() const {
    std::vector<bool> seen(source.size(), false);
    for (auto s : source) {
        if (s < 0 || static_cast<std::size_t>(s) >= source.size() || seen[static_cast<std::size_t>(s)]) return false;
        seen[static_cast<std::size_t>(s)] = true;
    }
    return true;
}

std::size_t RotationTable::sentinel_count() const {
    return static_cast<std::size_t>(std::count(source.begin(), source.end(), kSentinel));
}

RotationTable make_rotation_table(double degrees, int side, RotationMode mode) {
    if (side <= 0) throw ArgumentError("rotation table needs a positive side length");
    RotationTable t;
    t.degrees = wrap_degrees(degrees);
    t.side = side;
    const auto V = static_cast<std::size_t>(side) * side;
    t.source.assign(V, RotationTable::kSentinel);

    const int q = quarter_turns(degrees);
    if (q >= 0) {
        // Doubled coordinates keep the centre ((side-1)/2, (side-1)/2) on the integer grid.
        static constexpr int kCos[4] = {1, 0, -1, 0};
        static constexpr int kSin[4] = {0, 1, 0, -1};
        const int cs = kCos[q];
        const int sn = kSin[q];
        const int span = side - 1;
        for (int r = 0; r < side; ++r) {
            for (int c = 0; c < side; ++c) {
                const int X = 2 * c - span;
                const int Y = span - 2 * r;
                // Inverse map: source = Rot(-theta) * target.
                const int Xs = cs * X + sn * Y;
                const int Ys = -sn * X + cs * Y;
                const int cs_col = (Xs + span) / 2;
                const int cs_row = (span - Ys) / 2;
                t.source[static_cast<std::size_t>(r) * side + c] = cs_row * side + cs_col;
            }
        }
        return t;
    }
    if (mode == RotationMode::exact)
        throw RotationModeError("exact rotation mode cannot represent " + std::to_string(degrees) + " degrees");

    const double rad = t.degrees * std::numbers::pi / 180.0;
    const double cs = std::cos(rad);
    const double sn = std::sin(rad);
    const double ctr = (side - 1) / 2.0;
    for (int r = 0; r < side; ++r) {
        for (int c = 0; c < side; ++c) {
            const double x = c - ctr;
            const double y = ctr - r;
            const double xs = cs * x + sn * y;
            const double ys = -sn * x + cs * y;
            const long col = std::lround(xs + ctr);
            const long row = std::lround(ctr - ys);
            if (col >= 0 && col < side && row >= 0 && row < side)
                t.source[static_cast<std::size_t>(r) * side + c] = static_cast<std::int32_t>(row * side + col);
        }
    }
    return t;
}

RotationTable compose(const RotationTable& first, const RotationTable& second) {
    if (first.source.size() != second.source.size()) throw ShapeError("cannot compose tables of different sizes");
    RotationTable t;
    t.degrees = wrap_degrees(first.degrees + second.degrees);
    t.side = first.side;
    t.source.resize(first.source.size());
    for (std::size_t i = 0; i < t.source.size(); ++i) {
        const auto mid = second.source[i];
        t.source[i] = mid == RotationTable::kSentinel ? RotationTable::kSentinel
                                                      : first.source[static_cast<std::size_t>(mid)];
    }
    return t;
}

RotationTable invert(const RotationTable& table) {
    if (!table.is_permutation()) throw RotationModeError("only permutation tables are invertible");
    RotationTable t;
    t.degrees = wrap_degrees(-table.degrees);
    t.side = table.side;
    t.source.resize(table.source.size());
    for (std::size_t i = 0; i < table.source.size(); ++i)
        t.source[static_cast<std::size_t>(table.source[i])] = static_cast<std::int32_t>(i);
    return t;
}

SupportSet::SupportSet(std::vector<double> angles, int side, RotationMode mode)
    : angles_(std::move(angles)), side_(side), mode_(mode), cache_(std::make_shared<Cache>()) {
    if (angles_.empty()) throw ArgumentError("support set needs at least one angle");
    if (side_ <= 0) throw ArgumentError("support set needs a positive image side");
    for (std::size_t i = 0; i < angles_.size(); ++i) {
        if (angles_[i] < 0.0 || angles_[i] >= 360.0) throw ArgumentError("support angles must lie in [0, 360)");
        if (i > 0 && !(angles_[i] > angles_[i - 1])) throw ArgumentError("support angles must be strictly increasing");
    }
    if (mode_ == RotationMode::exact) {
        for (double a : angles_)
            if (quarter_turns(a - angles_.front()) < 0)
                throw RotationModeError("exact mode needs pairwise angle differences that are multiples of 90 degrees");
    }
    for (double a : angles_)
        for (double b : angles_) table(a - b);
}

std::int64_t SupportSet::key(double degrees) {
    auto k = static_cast<std::int64_t>(std::llround(wrap_degrees(degrees) * 1e6));
    return k % 360'000'000;
}

int SupportSet::nearest_index(double degrees) const {
    int best = 0;
    double best_d = circular_distance(degrees, angles_[0]);
    for (std::size_t s = 1; s < angles_.size(); ++s) {
        const double d = circular_distance(degrees, angles_[s]);
        if (d < best_d - kAngleEps) {
            best_d = d;
            best = static_cast<int>(s);
        }
    }
    return best;
}

const RotationTable& SupportSet::table(double degrees) const {
    const auto k = key(degrees);
    std::lock_guard lock(cache_->mutex);
    auto it = cache_->tables.find(k);
    if (it != cache_->tables.end()) return *it->second;
    auto t = std::make_unique<const RotationTable>(make_rotation_table(degrees, side_, mode_));
    return *cache_->tables.emplace(k, std::move(t)).first->second;
}

std::vector<double> parse_angle_list(std::string_view csv) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= csv.size()) {
        const auto comma = csv.find(',', pos);
        auto tok = csv.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
        while (!tok.empty() && tok.front() == ' ') tok.remove_prefix(1);
        while (!tok.empty() && tok.back() == ' ') tok.remove_suffix(1);
        double v = 0.0;
        auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (tok.empty() || ec != std::errc() || p != tok.data() + tok.size())
            throw ArgumentError("bad angle list '" + std::string(csv) + "'");
        out.push_back(v);
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return out;
}

void apply_table(const RotationTable& table, std::span<const double> in, std::span<double> out) {
    if (in.size() != table.source.size() || out.size() != table.source.size())
        throw ShapeError("vector length does not match the rotation table");
    for (std::size_t t = 0; t < out.size(); ++t) {
        const auto s = table.source[t];
        out[t] = s == RotationTable::kSentinel ? 0.0 : in[static_cast<std::size_t>(s)];
    }
}

void rotate_rows_into(const Matrix& a, const RotationTable& table, Matrix& out) {
    if (static_cast<std::size_t>(a.cols()) != table.source.size())
        throw ShapeError("row length " + std::to_string(a.cols()) + " does not match side^2");
    out.resize(a.rows(), a.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        const double* src = a.row(i).data();
        double* dst = out.row(i).data();
        for (std::size_t t = 0; t < table.source.size(); ++t) {
            const auto s = table.source[t];
            dst[t] = s == RotationTable::kSentinel ? 0.0 : src[s];
        }
    }
}

Matrix rotate_rows(const Matrix& a, double degrees, const SupportSet& set) {
    if (static_cast<std::size_t>(a.cols()) != set.dim())
        throw ShapeError("row length " + std::to_string(a.cols()) + " does not match side^2");
    Matrix out;
    rotate_rows_into(a, set.table(degrees), out);
    return out;
}

Vector rotate_column(const Vector& x, double degrees, const SupportSet& set) {
    if (static_cast<std::size_t>(x.size()) != set.dim())
        throw ShapeError("vector length " + std::to_string(x.size()) + " does not match side^2");
    Vector out(x.size());
    apply_table(set.table(degrees), {x.data(), static_cast<std::size_t>(x.size())},
                {out.data(), static_cast<std::size_t>(out.size())});
    return out;
}

}  // namespace thetarbm
