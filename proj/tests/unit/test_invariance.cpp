#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"
#include "thetarbm/error.hpp"
#include "thetarbm/invariance.hpp"
#include "thetarbm/orientation.hpp"
#include "thetarbm/trainer.hpp"

using namespace thetarbm;

namespace {

double population_var(const Vector& x) {
    return (x.array() - x.mean()).square().mean();
}

struct TrainedQuarterModel {
    SupportSet set{{0, 90, 180, 270}, 8, RotationMode::exact};
    ThetaRbmModel model;
    ImageDataset data;
};

const TrainedQuarterModel& trained_quarter_model() {
    static const TrainedQuarterModel t = [] {
        TrainedQuarterModel out;
        std::mt19937_64 gen(44);
        out.data = testing_support::random_images(60, 8, gen);
        out.data = assign_orientations(out.data, out.set);
        TrainConfig cfg;
        cfg.unit_type = UnitType::bernoulli;
        cfg.hidden = 6;
        cfg.epochs = 3;
        cfg.batch_size = 10;
        out.model = train(cfg, out.data, out.set).model;
        return out;
    }();
    return t;
}

}  // namespace

TEST(ShiftedSupport, Shifts) {
    EXPECT_EQ(shifted_support(std::vector<double>{0, 90, 180}, 0), (std::vector<double>{0, 90, 180}));
    EXPECT_EQ(shifted_support(std::vector<double>{0, 90, 180}, 360), (std::vector<double>{0, 90, 180}));
    const auto nine = shifted_support(parse_angle_list("0,40,80,120,160,200,240,280,320"), 20);
    EXPECT_EQ(nine, parse_angle_list("20,60,100,140,180,220,260,300,340"));
    EXPECT_EQ(shifted_support(std::vector<double>{300}, 100), (std::vector<double>{40}));
}

TEST(MeanActivation, IdentityTransformGivesActivation) {
    const auto& t = trained_quarter_model();
    const Vector x = t.data.images.row(0).transpose();
    const int r = t.data.orientation[0];
    const Vector mu = mean_activation(t.model, x, r, {0.0}, t.set);
    EXPECT_TRUE(mu == hidden_given_visible(t.model, x, r));
}

TEST(MeanActivation, ConstantResponseAveragesToConstant) {
    auto m = ThetaRbmModel::zeros(3, 4, {0, 90, 180, 270});
    m.b << -1, 0, 2;
    const SupportSet set({0, 90, 180, 270}, 4, RotationMode::exact);
    const Vector mu = mean_activation(m, Vector::Ones(16), 0, {20, 110, 200}, set);
    for (int j = 0; j < 3; ++j) EXPECT_DOUBLE_EQ(mu[j], sigmoid(m.b[j]));
}

TEST(MeanActivation, EmptyTransformsIsArgumentError) {
    const auto& t = trained_quarter_model();
    EXPECT_THROW(mean_activation(t.model, t.data.images.row(0).transpose(), 0, {}, t.set), ArgumentError);
}

TEST(MeanActivation, SupportTransformsLeaveActivationUnchanged) {
    const auto& t = trained_quarter_model();
    for (std::size_t i = 0; i < t.data.size(); ++i) {
        const Vector x = t.data.images.row(static_cast<Eigen::Index>(i)).transpose();
        const int r = t.data.orientation[i];
        const Vector mu = mean_activation(t.model, x, r, {0, 90, 180, 270}, t.set);
        EXPECT_LT((mu - hidden_given_visible(t.model, x, r)).cwiseAbs().maxCoeff(), 1e-9);
    }
}

TEST(GammaScore, ExactModelIsFullyInvariant) {
    const auto& t = trained_quarter_model();
    const auto rep = gamma_score(t.model, t.data, {0, 90, 180, 270}, t.set);
    ASSERT_TRUE(rep.mean_gamma.has_value());
    for (std::size_t j = 0; j < rep.gamma.size(); ++j) {
        if (!rep.dead[j]) {
            EXPECT_NEAR(rep.gamma[j], 1.0, 1e-9);
        }
    }
    EXPECT_EQ(rep.gamma.size(), t.model.hidden());
}

TEST(GammaScore, MatchesDirectVarianceRatio) {
    const auto& t = trained_quarter_model();
    const std::vector<double> transforms{20, 110, 200, 290};
    const auto rep = gamma_score(t.model, t.data, transforms, t.set);
    const auto N = static_cast<Eigen::Index>(t.data.size());
    Matrix h(N, 6), mu(N, 6);
    for (Eigen::Index i = 0; i < N; ++i) {
        const Vector x = t.data.images.row(i).transpose();
        const int r = t.data.orientation[static_cast<std::size_t>(i)];
        h.row(i) = hidden_given_visible(t.model, x, r).transpose();
        Vector acc = Vector::Zero(6);
        for (double a : transforms) {
            Vector xr(x.size());
            apply_table(make_rotation_table(a, 8, RotationMode::nearest), {x.data(), 64}, {xr.data(), 64});
            acc += hidden_given_visible(t.model, xr, t.set.nearest_index(t.set.angle(static_cast<std::size_t>(r)) + a));
        }
        mu.row(i) = (acc / 4.0).transpose();
    }
    for (Eigen::Index j = 0; j < 6; ++j)
        EXPECT_NEAR(rep.gamma[static_cast<std::size_t>(j)], population_var(mu.col(j)) / population_var(h.col(j)),
                    1e-12);
}

TEST(GammaScore, DeterministicAcrossCalls) {
    const auto& t = trained_quarter_model();
    const auto a = gamma_score(t.model, t.data, {20, 110}, t.set);
    const auto b = gamma_score(t.model, t.data, {20, 110}, t.set);
    EXPECT_EQ(a.gamma, b.gamma);
    EXPECT_EQ(a.to_json(), b.to_json());
}

TEST(GammaScore, EstimatedPolicyRuns) {
    const auto& t = trained_quarter_model();
    GammaOptions opts;
    opts.policy = RIndexPolicy::estimated;
    const auto rep = gamma_score(t.model, t.data, {0, 90, 180, 270}, t.set, opts);
    EXPECT_EQ(rep.gamma.size(), 6u);
}

TEST(GammaScore, AllDeadReportsNoMean) {
    const auto m = ThetaRbmModel::zeros(3, 8, {0, 90, 180, 270});
    const auto& t = trained_quarter_model();
    const auto rep = gamma_score(m, t.data, {20}, t.set);
    EXPECT_FALSE(rep.mean_gamma.has_value());
    EXPECT_EQ(rep.dead_count, 3u);
    EXPECT_TRUE(std::isnan(rep.gamma[0]));
}

TEST(GammaFromResponses, RadialProfileUnitIsInvariant) {
    // h(x) depends only on the multiset of distances of lit pixels from the
    // centre, which quarter turns preserve.
    const int side = 6;
    const SupportSet set({0, 90, 180, 270}, side, RotationMode::exact);
    std::mt19937_64 gen(50);
    const auto ds = testing_support::random_images(40, side, gen);
    const double ctr = (side - 1) / 2.0;
    const auto radial = [&](const Vector& x) {
        Vector h(2);
        h << 0, 0;
        for (int r = 0; r < side; ++r)
            for (int c = 0; c < side; ++c) {
                const double d = std::hypot(r - ctr, c - ctr);
                h[0] += x[r * side + c] * d;
                h[1] += x[r * side + c] * d * d;
            }
        return h;
    };
    Matrix base(40, 2);
    std::vector<Matrix> responses(4, Matrix(40, 2));
    for (Eigen::Index i = 0; i < 40; ++i) {
        const Vector x = ds.images.row(i).transpose();
        base.row(i) = radial(x).transpose();
        for (int t = 0; t < 4; ++t) responses[static_cast<std::size_t>(t)].row(i) = radial(rotate_column(x, 90.0 * t, set)).transpose();
    }
    const auto rep = gamma_from_responses(base, responses);
    EXPECT_NEAR(rep.gamma[0], 1.0, 1e-12);
    EXPECT_NEAR(rep.gamma[1], 1.0, 1e-12);
}

TEST(GammaFromResponses, ScaleInvariant) {
    std::mt19937_64 gen(51);
    std::normal_distribution<double> nd(0, 1);
    Matrix base(30, 1);
    std::vector<Matrix> responses(3, Matrix(30, 1));
    for (Eigen::Index i = 0; i < 30; ++i) {
        base(i, 0) = nd(gen);
        for (auto& r : responses) r(i, 0) = nd(gen);
    }
    const double g = gamma_from_responses(base, responses).gamma[0];
    std::vector<Matrix> scaled = responses;
    for (auto& r : scaled) r *= 7.5;
    EXPECT_NEAR(gamma_from_responses(base * 7.5, scaled).gamma[0], g, 1e-12);
}

TEST(GammaFromResponses, TransformIndependentResponseIsOne) {
    std::mt19937_64 gen(52);
    std::normal_distribution<double> nd(0, 1);
    Matrix base(25, 2);
    for (Eigen::Index i = 0; i < base.size(); ++i) base.data()[i] = nd(gen);
    const auto rep = gamma_from_responses(base, {base, base, base});
    EXPECT_NEAR(rep.gamma[0], 1.0, 1e-12);
    EXPECT_NEAR(rep.gamma[1], 1.0, 1e-12);
}

TEST(GammaReport, JsonAndCsvShapes) {
    const auto& t = trained_quarter_model();
    auto rep = gamma_score(t.model, t.data, {20, 110, 200, 290}, t.set);
    rep.delta = 20;
    const auto json = rep.to_json();
    EXPECT_NE(json.find("\"mean_gamma\""), std::string::npos);
    EXPECT_NE(json.find("\"dead_count\""), std::string::npos);
    const auto row = rep.csv_row("theta_train");
    const auto header = GammaReport::csv_header();
    EXPECT_EQ(std::count(row.begin(), row.end(), ','), std::count(header.begin(), header.end(), ','));
}
