#include <gtest/gtest.h>

#include "support.hpp"
#include "thetarbm/error.hpp"
#include "thetarbm/model_io.hpp"
#include "thetarbm/orientation.hpp"
#include "thetarbm/trainer.hpp"

using namespace thetarbm;

namespace {

const SupportSet& quarter_set(int side) {
    static std::map<int, SupportSet> sets;
    auto it = sets.find(side);
    if (it == sets.end()) it = sets.emplace(side, SupportSet({0, 90, 180, 270}, side, RotationMode::exact)).first;
    return it->second;
}

std::vector<Matrix> random_slices(std::size_t S, std::size_t H, std::size_t V, std::mt19937_64& rng) {
    std::normal_distribution<double> nd(0, 1);
    std::vector<Matrix> out(S, Matrix(static_cast<Eigen::Index>(H), static_cast<Eigen::Index>(V)));
    for (auto& m : out)
        for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = nd(rng);
    return out;
}

ImageDataset binary_images(std::size_t n, int side, int S, std::uint64_t seed) {
    Rng rng(seed);
    ImageDataset ds;
    ds.side = side;
    ds.images.resize(static_cast<Eigen::Index>(n), side * side);
    for (Eigen::Index i = 0; i < ds.images.size(); ++i) ds.images.data()[i] = uniform01(rng) < 0.3;
    for (std::size_t i = 0; i < n; ++i) {
        ds.labels.push_back(static_cast<int>(i % 10));
        ds.orientation.push_back(static_cast<int>(i % static_cast<std::size_t>(S)));
    }
    return ds;
}

}  // namespace

TEST(TrainConfig, ValidatesRanges) {
    TrainConfig cfg;
    EXPECT_NO_THROW(cfg.validate());
    cfg.eta = 0;
    EXPECT_THROW(cfg.validate(), ArgumentError);
    cfg = {};
    cfg.alpha = 1.0;
    EXPECT_THROW(cfg.validate(), ArgumentError);
    cfg = {};
    cfg.batch_size = 0;
    EXPECT_THROW(cfg.validate(), ArgumentError);
    cfg = {};
    cfg.sparsity_target = 1.5;
    EXPECT_THROW(cfg.validate(), ArgumentError);
}

TEST(TrainConfig, JsonRoundTrip) {
    TrainConfig cfg;
    cfg.model_kind = ModelKind::orbm;
    cfg.sparsity_target = 0.2;
    cfg.momentum = MomentumMode::classical;
    cfg.seed = 99;
    const auto back = train_config_from_json(to_json(cfg));
    EXPECT_EQ(back.model_kind, ModelKind::orbm);
    EXPECT_EQ(back.sparsity_target, 0.2);
    EXPECT_EQ(back.momentum, MomentumMode::classical);
    EXPECT_EQ(back.seed, 99u);
    EXPECT_EQ(to_json(back), to_json(cfg));
}

TEST(TrainConfig, MomentumRamp) {
    TrainConfig cfg;
    EXPECT_EQ(cfg.alpha_at(0), 0.9);
    cfg.alpha_start = 0.5;
    cfg.alpha_ramp_steps = 10;
    EXPECT_DOUBLE_EQ(cfg.alpha_at(0), 0.5);
    EXPECT_DOUBLE_EQ(cfg.alpha_at(5), 0.7);
    EXPECT_DOUBLE_EQ(cfg.alpha_at(50), 0.9);
}

TEST(InitModel, RotatedInitSatisfiesRelationExactly) {
    const auto& set = quarter_set(6);
    TrainConfig cfg;
    Rng rng(1);
    const auto m = init_model(cfg, set, 5, rng);
    EXPECT_EQ(lemma_residual(m, set), 0.0);
    EXPECT_EQ(m.b.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(m.c.cwiseAbs().maxCoeff(), 0.0);
}

TEST(InitModel, IndependentSlicesDiffer) {
    const auto& set = quarter_set(6);
    TrainConfig cfg;
    cfg.init_mode = InitMode::independent;
    Rng rng(1);
    const auto m = init_model(cfg, set, 5, rng);
    EXPECT_GT(lemma_residual(m, set), 0.0);
}

TEST(InitModel, SingleSliceModesCoincide) {
    const SupportSet one({0}, 4, RotationMode::exact);
    TrainConfig a, b;
    b.init_mode = InitMode::independent;
    Rng ra(3), rb(3);
    EXPECT_TRUE(init_model(a, one, 3, ra).W[0] == init_model(b, one, 3, rb).W[0]);
}

TEST(ShareGradients, SingleSliceIsIdentity) {
    std::mt19937_64 rng(2);
    const SupportSet one({0}, 3, RotationMode::exact);
    auto g = random_slices(1, 2, 9, rng);
    const auto before = g;
    share_gradients(g, {true}, one);
    EXPECT_TRUE(g[0] == before[0]);
}

TEST(ShareGradients, QuarterTurnCopyIsExact) {
    std::mt19937_64 rng(3);
    const SupportSet set({0, 90}, 4, RotationMode::exact);
    auto g = random_slices(2, 3, 16, rng);
    g[1].setZero();
    share_gradients(g, {true, false}, set);
    EXPECT_TRUE(g[1] == rotate_rows(g[0], 90, set));
}

TEST(ShareGradients, AllRealizedSatisfiesEveryPairRelation) {
    std::mt19937_64 rng(4);
    const auto& set = quarter_set(5);
    auto g = random_slices(4, 3, 25, rng);
    share_gradients(g, {true, true, true, true}, set);
    int checked = 0;
    for (std::size_t s = 0; s < 4; ++s)
        for (std::size_t t = 0; t < 4; ++t) {
            if (s == t) continue;
            EXPECT_TRUE(g[t] == rotate_rows(g[s], set.angle(t) - set.angle(s), set)) << s << "->" << t;
            ++checked;
        }
    EXPECT_EQ(checked, 12);
}

TEST(ShareGradients, ContributionsSum) {
    std::mt19937_64 rng(5);
    const auto& set = quarter_set(3);
    auto g = random_slices(4, 2, 9, rng);
    g[1].setZero();
    g[3].setZero();
    const auto raw = g;
    share_gradients(g, {true, false, true, false}, set);
    // Oracle: slice k receives the sum over realized s of R_{phi_k - phi_s}(raw_s).
    const Matrix expect1 = rotate_rows(raw[0], 90, set) + rotate_rows(raw[2], -90, set);
    EXPECT_LT((g[1] - expect1).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(UpdateStep, ZeroMomentumFixedPointLeavesWeights) {
    const SupportSet one({0}, 2, RotationMode::exact);
    auto state = make_trainer_state(ThetaRbmModel::zeros(3, 2, {0}, UnitType::gaussian));
    TrainConfig cfg;
    cfg.alpha = cfg.alpha_start = 0.0;
    Batch batch{Matrix::Zero(4, 4), {0, 0, 0, 0}};
    Rng rng(1);
    update_step(state, batch, cfg, one, rng);
    EXPECT_EQ(state.model.W[0].cwiseAbs().maxCoeff(), 0.0);
}

TEST(ApplyUpdate, TwoStepLiteralMomentumTrace) {
    auto state = make_trainer_state(ThetaRbmModel::zeros(1, 1, {0}));
    TrainConfig cfg;
    cfg.eta = 0.01;
    cfg.alpha = cfg.alpha_start = 0.9;
    const std::vector<Matrix> g1{Matrix::Constant(1, 1, 1.0)};
    const std::vector<Matrix> g2{Matrix::Constant(1, 1, 2.0)};
    const Vector zb = Vector::Zero(1), zc = Vector::Zero(1);
    apply_update(state, g1, zb, zc, cfg);
    EXPECT_DOUBLE_EQ(state.model.W[0](0, 0), 0.01);
    apply_update(state, g2, zb, zc, cfg);
    // W2 = W1 + eta * g2 + alpha * g1
    EXPECT_DOUBLE_EQ(state.model.W[0](0, 0), 0.01 + 0.01 * 2.0 + 0.9 * 1.0);
}

TEST(ApplyUpdate, TwoStepClassicalMomentumTrace) {
    auto state = make_trainer_state(ThetaRbmModel::zeros(1, 1, {0}));
    TrainConfig cfg;
    cfg.momentum = MomentumMode::classical;
    const std::vector<Matrix> g1{Matrix::Constant(1, 1, 1.0)};
    const std::vector<Matrix> g2{Matrix::Constant(1, 1, 2.0)};
    const Vector zb = Vector::Zero(1), zc = Vector::Zero(1);
    apply_update(state, g1, zb, zc, cfg);
    apply_update(state, g2, zb, zc, cfg);
    const double u1 = 0.01, u2 = 0.01 * 2.0 + 0.9 * u1;
    EXPECT_DOUBLE_EQ(state.model.W[0](0, 0), u1 + u2);
}

TEST(ApplyUpdate, NonFiniteWeightsAbort) {
    auto state = make_trainer_state(ThetaRbmModel::zeros(1, 1, {0}));
    TrainConfig cfg;
    const std::vector<Matrix> g{Matrix::Constant(1, 1, std::numeric_limits<double>::infinity())};
    EXPECT_THROW(apply_update(state, g, Vector::Zero(1), Vector::Zero(1), cfg), NumericalError);
}

TEST(UpdateStep, PreservesRotationRelationEveryStep) {
    const int side = 8;
    const auto& set = quarter_set(side);
    TrainConfig cfg;
    cfg.unit_type = UnitType::bernoulli;
    cfg.sparsity_target = 0.1;
    Rng rng(7);
    auto state = make_trainer_state(init_model(cfg, set, 6, rng));
    const auto ds = binary_images(40, side, 4, 9);
    for (int step = 0; step < 100; ++step) {
        Batch batch;
        const std::size_t start = static_cast<std::size_t>(step * 10) % ds.size();
        batch.v = ds.images.middleRows(static_cast<Eigen::Index>(start), 10);
        batch.slice.assign(ds.orientation.begin() + static_cast<long>(start),
                           ds.orientation.begin() + static_cast<long>(start + 10));
        update_step(state, batch, cfg, set, rng);
        ASSERT_LE(lemma_residual(state.model, set), 1e-12) << "step " << step;
    }
}

TEST(UpdateStep, SparsityPushesHiddenBiasTowardTarget) {
    const SupportSet one({0}, 2, RotationMode::exact);
    auto m = ThetaRbmModel::zeros(2, 2, {0});
    m.b << 3.0, -3.0;  // mean activations ~0.95 and ~0.05
    TrainConfig cfg;
    cfg.unit_type = UnitType::bernoulli;
    cfg.sparsity_target = 0.5;
    cfg.sparsity_weight = 100.0;
    cfg.alpha = cfg.alpha_start = 0.0;
    auto state = make_trainer_state(m);
    Batch batch{Matrix::Zero(8, 4), std::vector<int>(8, 0)};
    Rng rng(3);
    update_step(state, batch, cfg, one, rng);
    EXPECT_LT(state.model.b[0], 3.0);
    EXPECT_GT(state.model.b[1], -3.0);
}

TEST(Train, ZeroEpochsReturnsInitialModel) {
    const auto& set = quarter_set(4);
    TrainConfig cfg;
    cfg.epochs = 0;
    cfg.hidden = 3;
    const auto ds = binary_images(12, 4, 4, 1);
    Rng rng(cfg.seed);
    const auto init = init_model(cfg, set, 3, rng);
    const auto r = train(cfg, ds, set);
    EXPECT_TRUE(r.metrics.empty());
    for (std::size_t s = 0; s < 4; ++s) EXPECT_TRUE(r.model.W[s] == init.W[s]);
}

TEST(Train, RbmEqualsSingleSliceThetaBitwise) {
    const auto ds0 = binary_images(30, 4, 1, 5);
    TrainConfig cfg;
    cfg.unit_type = UnitType::bernoulli;
    cfg.hidden = 4;
    cfg.epochs = 3;
    cfg.batch_size = 7;
    cfg.sparsity_target = 0.2;
    const SupportSet one({0}, 4, RotationMode::exact);
    auto ds = ds0;
    ds.orientation.assign(ds.size(), 0);
    cfg.model_kind = ModelKind::theta;
    const auto a = train(cfg, ds, one);
    cfg.model_kind = ModelKind::rbm;
    const auto b = train(cfg, ds0, quarter_set(4));
    EXPECT_TRUE(a.model.W[0] == b.model.W[0]);
    EXPECT_TRUE(a.model.b == b.model.b);
    EXPECT_TRUE(a.model.c == b.model.c);
}

TEST(Train, MetricsPerEpochAndDeterministic) {
    const auto& set = quarter_set(4);
    const auto ds = binary_images(24, 4, 4, 6);
    TrainConfig cfg;
    cfg.unit_type = UnitType::bernoulli;
    cfg.hidden = 3;
    cfg.epochs = 4;
    cfg.batch_size = 5;
    std::vector<int> seen;
    const auto a = train(cfg, ds, set, [&](const EpochMetrics& e, const ThetaRbmModel&) { seen.push_back(e.epoch); });
    const auto b = train(cfg, ds, set);
    EXPECT_EQ(seen, (std::vector<int>{1, 2, 3, 4}));
    EXPECT_EQ(serialize_model(a.model), serialize_model(b.model));
    for (const auto& e : a.metrics) EXPECT_LE(e.lemma_residual, 1e-12);
}

TEST(Train, ReconstructionImprovesOnStructuredData) {
    // Two prototype patterns plus noise; a trained model reconstructs them better.
    const int side = 4;
    const SupportSet one({0}, side, RotationMode::exact);
    ImageDataset ds;
    ds.side = side;
    ds.images.resize(200, 16);
    Rng rng(12);
    for (Eigen::Index i = 0; i < 200; ++i)
        for (Eigen::Index k = 0; k < 16; ++k) {
            const bool on = (i % 2 == 0) ? k < 8 : k % 2 == 0;
            ds.images(i, k) = (uniform01(rng) < 0.05) ? !on : on;
        }
    ds.labels.assign(200, 0);
    TrainConfig cfg;
    cfg.model_kind = ModelKind::rbm;
    cfg.unit_type = UnitType::bernoulli;
    cfg.hidden = 8;
    cfg.epochs = 20;
    cfg.batch_size = 10;
    cfg.eta = 0.1;
    cfg.momentum = MomentumMode::classical;
    cfg.alpha = cfg.alpha_start = 0.5;
    const auto r = train(cfg, ds, one);
    EXPECT_GT(r.metrics.front().recon_error, r.metrics.back().recon_error);
}

TEST(AlignToCanonical, UndoesKnownRotation) {
    const auto& set = quarter_set(5);
    std::mt19937_64 gen(3);
    auto base = testing_support::random_images(4, 5, gen);
    ImageDataset rotated = base;
    rotated.orientation = {0, 1, 2, 3};
    for (Eigen::Index i = 0; i < 4; ++i)
        rotated.images.row(i) = rotate_column(base.images.row(i).transpose(), 90.0 * i, set).transpose();
    const auto aligned = align_to_canonical(rotated, set);
    EXPECT_TRUE(aligned.images == base.images);
    EXPECT_EQ(aligned.orientation, (std::vector<int>{0, 0, 0, 0}));
}

TEST(ModelSupportSet, BaselinesUseSingleSlice) {
    const auto& set = quarter_set(4);
    EXPECT_EQ(model_support_set(ModelKind::rbm, set).size(), 1u);
    EXPECT_EQ(model_support_set(ModelKind::orbm, set).size(), 1u);
    EXPECT_EQ(model_support_set(ModelKind::theta, set).size(), 4u);
}
