#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"
#include "thetarbm/orientation.hpp"
#include "thetarbm/rotation.hpp"

using namespace thetarbm;

namespace {

std::vector<double> vertical_edge(int side) {
    std::vector<double> img(static_cast<std::size_t>(side * side));
    for (int r = 0; r < side; ++r)
        for (int c = 0; c < side; ++c) img[static_cast<std::size_t>(r * side + c)] = c < side / 2 ? -1.0 : 1.0;
    return img;
}

// A wedge-shaped blob whose gradients are not symmetric under any rotation.
std::vector<double> asymmetric_blob(int side, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 0.2);
    std::vector<double> img(static_cast<std::size_t>(side * side));
    for (int r = 0; r < side; ++r)
        for (int c = 0; c < side; ++c)
            img[static_cast<std::size_t>(r * side + c)] = (c > side / 3 && r > c / 2) ? 1.0 + u(rng) : u(rng);
    return img;
}

}  // namespace

TEST(EstimateOrientation, VerticalEdgePointsAlongPlusX) {
    const auto img = vertical_edge(8);
    const auto est = estimate_orientation(img, 8, 36);
    EXPECT_FALSE(est.flat);
    EXPECT_DOUBLE_EQ(est.angle, 0.0);
    // Hand computation: only columns 3 and 4 have a nonzero central difference,
    // gx = (1 - (-1)) / 2 = 1, on the 6 interior rows.
    EXPECT_DOUBLE_EQ(est.histogram[0], 12.0);
    for (std::size_t b = 1; b < est.histogram.size(); ++b) EXPECT_EQ(est.histogram[b], 0.0);
}

TEST(EstimateOrientation, QuarterTurnShiftsDominantBin) {
    const SupportSet set({0, 90, 180, 270}, 8, RotationMode::exact);
    const auto img = vertical_edge(8);
    Vector x = Eigen::Map<const Vector>(img.data(), 64);
    const Vector y = rotate_column(x, 90, set);
    const auto est = estimate_orientation({y.data(), 64}, 8, 36);
    EXPECT_LE(circular_distance(est.angle, 90.0), 10.0);
}

TEST(EstimateOrientation, EquivariantUnderExactRotation) {
    std::mt19937_64 rng(21);
    const int side = 12;
    const SupportSet set({0, 90, 180, 270}, side, RotationMode::exact);
    for (int trial = 0; trial < 20; ++trial) {
        const auto img = asymmetric_blob(side, rng);
        const auto base = estimate_orientation(img, side, 36);
        ASSERT_FALSE(base.flat);
        Vector x = Eigen::Map<const Vector>(img.data(), side * side);
        for (double a : {90.0, 180.0, 270.0}) {
            const Vector y = rotate_column(x, a, set);
            const auto est = estimate_orientation({y.data(), static_cast<std::size_t>(y.size())}, side, 36);
            EXPECT_LE(circular_distance(est.angle, base.angle + a), 10.0 + 1e-9);
        }
    }
}

TEST(EstimateOrientation, ConstantImageIsFlat) {
    const std::vector<double> img(25, 0.4);
    const auto est = estimate_orientation(img, 5, 36);
    EXPECT_TRUE(est.flat);
    EXPECT_EQ(est.angle, 0.0);
}

TEST(EstimateOrientation, HistogramNonNegative) {
    std::mt19937_64 rng(5);
    const auto ds = testing_support::random_images(10, 9, rng);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto row = ds.images.row(static_cast<Eigen::Index>(i));
        const auto est = estimate_orientation({row.data(), 81}, 9, 36);
        for (double h : est.histogram) EXPECT_GE(h, 0.0);
        EXPECT_GE(est.angle, 0.0);
        EXPECT_LT(est.angle, 360.0);
    }
}

TEST(AssignOrientations, QuantizesToNearestSupportAngle) {
    const int side = 8;
    const SupportSet set({0, 90, 180, 270}, side, RotationMode::exact);
    ImageDataset ds;
    ds.side = side;
    ds.images.resize(4, side * side);
    const auto img = vertical_edge(side);
    Vector x = Eigen::Map<const Vector>(img.data(), side * side);
    for (int s = 0; s < 4; ++s) ds.images.row(s) = rotate_column(x, 90.0 * s, set).transpose();
    ds.labels = {0, 1, 2, 3};
    const auto out = assign_orientations(ds, set, 36);
    EXPECT_EQ(out.orientation, (std::vector<int>{0, 1, 2, 3}));
}

TEST(AssignOrientations, CommutesWithSubsample) {
    std::mt19937_64 rng(6);
    const auto ds = testing_support::random_images(40, 8, rng);
    const SupportSet set({0, 90, 180, 270}, 8, RotationMode::exact);
    const auto a = assign_orientations(subsample(ds, 15, 3), set);
    const auto b = subsample(assign_orientations(ds, set), 15, 3);
    EXPECT_EQ(a.orientation, b.orientation);
}

TEST(PerturbIndices, ZeroTrialsOrZeroProbabilityUnchanged) {
    std::mt19937_64 rng(7);
    auto ds = testing_support::random_images(50, 2, rng);
    ds.orientation.resize(50);
    for (std::size_t i = 0; i < 50; ++i) ds.orientation[i] = static_cast<int>(i % 9);
    EXPECT_EQ(perturb_indices(ds, {0, 0.5, 1}, 9).orientation, ds.orientation);
    EXPECT_EQ(perturb_indices(ds, {3, 0.0, 1}, 9).orientation, ds.orientation);
}

TEST(PerturbIndices, CertainSingleStepShiftsEveryIndex) {
    const std::size_t n = 1000;
    ImageDataset ds;
    ds.side = 1;
    ds.images = Matrix::Zero(static_cast<Eigen::Index>(n), 1);
    ds.labels.assign(n, 0);
    ds.orientation.assign(n, 4);
    const auto out = perturb_indices(ds, {1, 1.0, 99}, 9);
    std::size_t up = 0, down = 0;
    for (int r : out.orientation) {
        if (r == 5) ++up;
        else if (r == 3) ++down;
    }
    EXPECT_EQ(up + down, n);
    EXPECT_NEAR(static_cast<double>(up) / n, 0.5, 0.05);
}

TEST(PerturbIndices, WrapsAroundAndIsReproducible) {
    ImageDataset ds;
    ds.side = 1;
    ds.images = Matrix::Zero(200, 1);
    ds.labels.assign(200, 0);
    ds.orientation.assign(200, 0);
    const auto a = perturb_indices(ds, {4, 0.7, 5}, 9);
    const auto b = perturb_indices(ds, {4, 0.7, 5}, 9);
    EXPECT_EQ(a.orientation, b.orientation);
    for (int r : a.orientation) {
        EXPECT_GE(r, 0);
        EXPECT_LT(r, 9);
    }
}

TEST(PerturbIndices, PerturbedFractionMatchesBinomial) {
    const std::size_t n = 10000;
    ImageDataset ds;
    ds.side = 1;
    ds.images = Matrix::Zero(static_cast<Eigen::Index>(n), 1);
    ds.labels.assign(n, 0);
    ds.orientation.assign(n, 0);
    for (const auto& [trials, p] : std::vector<std::pair<int, double>>{{1, 0.1}, {2, 0.3}, {4, 0.2}}) {
        // S larger than 2n so that +eps and -eps never land on the same index.
        const auto out = perturb_indices(ds, {trials, p, 17}, 20);
        std::size_t moved = 0;
        for (int r : out.orientation) moved += r != 0;
        const double expect = 1.0 - std::pow(1.0 - p, trials);
        const double sd = std::sqrt(expect * (1 - expect) / n);
        EXPECT_NEAR(static_cast<double>(moved) / n, expect, 3 * sd) << trials << " " << p;
    }
}

TEST(BinomialInverseCdf, MatchesDirectCdf) {
    const int n = 4;
    const double p = 0.3;
    std::vector<double> cdf;
    double acc = 0.0;
    for (int k = 0; k <= n; ++k) {
        acc += std::tgamma(n + 1) / (std::tgamma(k + 1) * std::tgamma(n - k + 1)) * std::pow(p, k) *
               std::pow(1 - p, n - k);
        cdf.push_back(acc);
    }
    for (double u : {0.0, 0.1, 0.2401 - 1e-9, 0.2401 + 1e-9, 0.5, 0.9, 0.999}) {
        int k = 0;
        while (k < n && u >= cdf[static_cast<std::size_t>(k)]) ++k;
        EXPECT_EQ(binomial_inverse_cdf(n, p, u), k) << u;
    }
}

TEST(BinomialInverseCdf, MonotoneInProbability) {
    for (double u = 0.0; u < 1.0; u += 0.013) {
        int prev = 0;
        for (double p : {0.1, 0.2, 0.3, 0.4}) {
            const int k = binomial_inverse_cdf(4, p, u);
            EXPECT_GE(k, prev);
            prev = k;
        }
    }
}
