#include "thetarbm/orientation.hpp"

#include <cmath>
#include <numbers>

#include "thetarbm/error.hpp"
#include "thetarbm/random.hpp"

namespace thetarbm {

OrientationEstimate estimate_orientation(std::span<const double> image, int side, int bins) {
    if (side <= 0 || image.size() != static_cast<std::size_t>(side) * side)
        throw ShapeError("image length does not match side^2");
    if (bins < 1) throw ArgumentError("orientation histogram needs at least one bin");

    OrientationEstimate est;
    est.histogram.assign(static_cast<std::size_t>(bins), 0.0);
    const double width = 360.0 / bins;
    const auto at = [&](int r, int c) { return image[static_cast<std::size_t>(r) * side + c]; };

    double total = 0.0;
    for (int r = 1; r + 1 < side; ++r) {
        for (int c = 1; c + 1 < side; ++c) {
            const double gx = 0.5 * (at(r, c + 1) - at(r, c - 1));
            const double gy = 0.5 * (at(r - 1, c) - at(r + 1, c));
            const double mag = std::hypot(gx, gy);
            if (mag == 0.0) continue;
            const double deg = wrap_degrees(std::atan2(gy, gx) * 180.0 / std::numbers::pi);
            auto bin = static_cast<int>(std::floor((deg + 0.5 * width) / width)) % bins;
            est.histogram[static_cast<std::size_t>(bin)] += mag;
            total += mag;
        }
    }
    if (total == 0.0) {
        est.flat = true;
        est.angle = 0.0;
        return est;
    }
    std::size_t best = 0;
    for (std::size_t b = 1; b < est.histogram.size(); ++b)
        if (est.histogram[b] > est.histogram[best]) best = b;
    est.angle = wrap_degrees(static_cast<double>(best) * width);
    return est;
}

ImageDataset assign_orientations(const ImageDataset& ds, const SupportSet& set, int bins) {
    if (static_cast<std::size_t>(ds.side) != static_cast<std::size_t>(set.side()))
        throw ShapeError("dataset side does not match support set side");
    if (bins < static_cast<int>(set.size())) throw ArgumentError("need at least as many bins as support angles");
    ImageDataset out = ds;
    out.orientation.resize(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto row = ds.images.row(static_cast<Eigen::Index>(i));
        const auto est = estimate_orientation({row.data(), static_cast<std::size_t>(row.size())}, ds.side, bins);
        out.orientation[i] = set.nearest_index(est.angle);
    }
    return out;
}

int binomial_inverse_cdf(int n, double p, double u) {
    if (n < 0) throw ArgumentError("binomial n must be nonnegative");
    if (p < 0.0 || p > 1.0) throw ArgumentError("binomial p must lie in [0, 1]");
    double cdf = 0.0;
    double choose = 1.0;
    for (int k = 0; k < n; ++k) {
        cdf += choose * std::pow(p, k) * std::pow(1.0 - p, n - k);
        if (u < cdf) return k;
        choose = choose * (n - k) / (k + 1);
    }
    return n;
}

ImageDataset perturb_indices(const ImageDataset& ds, const PerturbationSpec& spec, int S) {
    if (!ds.has_orientation()) throw ArgumentError("perturbation needs assigned orientation indices");
    if (S < 1) throw ArgumentError("support size must be positive");
    ImageDataset out = ds;
    if (spec.n == 0 || spec.p == 0.0) return out;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        CounterStream stream(spec.seed, i);
        const int eps = binomial_inverse_cdf(spec.n, spec.p, stream.next_uniform());
        const int sign = stream.next_uniform() < 0.5 ? -1 : 1;
        out.orientation[i] = ((ds.orientation[i] + sign * eps) % S + S) % S;
    }
    return out;
}

}  // namespace thetarbm
