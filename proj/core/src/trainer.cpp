#include "thetarbm/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "thetarbm/error.hpp"

namespace thetarbm {

const char* to_string(InitMode m) {
    return m == InitMode::rotated ? "rotated" : "independent";
}

const char* to_string(MomentumMode m) {
    return m == MomentumMode::literal ? "literal" : "classical";
}

InitMode parse_init_mode(std::string_view s) {
    if (s == "rotated") return InitMode::rotated;
    if (s == "independent" || s == "independent-random") return InitMode::independent;
    throw ArgumentError("unknown init mode '" + std::string(s) + "'");
}

MomentumMode parse_momentum_mode(std::string_view s) {
    if (s == "literal") return MomentumMode::literal;
    if (s == "classical") return MomentumMode::classical;
    throw ArgumentError("unknown momentum mode '" + std::string(s) + "'");
}

void TrainConfig::validate() const {
    if (!(eta > 0.0)) throw ArgumentError("learning rate must be positive");
    if (!(alpha >= 0.0 && alpha < 1.0)) throw ArgumentError("momentum must lie in [0, 1)");
    if (!(alpha_start >= 0.0 && alpha_start < 1.0)) throw ArgumentError("initial momentum must lie in [0, 1)");
    if (batch_size < 1) throw ArgumentError("batch size must be at least 1");
    if (k < 1) throw ArgumentError("CD steps must be at least 1");
    if (epochs < 0) throw ArgumentError("epochs must be nonnegative");
    if (hidden < 1) throw ArgumentError("need at least one hidden unit");
    if (sparsity_target && (*sparsity_target < 0.0 || *sparsity_target > 1.0))
        throw ArgumentError("sparsity target must lie in [0, 1]");
    if (!(init_std >= 0.0)) throw ArgumentError("init std must be nonnegative");
}

double TrainConfig::alpha_at(std::uint64_t step) const {
    if (alpha_ramp_steps == 0 || step >= alpha_ramp_steps) return alpha;
    const double f = static_cast<double>(step) / static_cast<double>(alpha_ramp_steps);
    return alpha_start + f * (alpha - alpha_start);
}

std::string to_json(const TrainConfig& cfg) {
    nlohmann::ordered_json j;
    j["model_kind"] = to_string(cfg.model_kind);
    j["unit_type"] = to_string(cfg.unit_type);
    j["hidden"] = cfg.hidden;
    j["eta"] = cfg.eta;
    j["alpha"] = cfg.alpha;
    j["alpha_start"] = cfg.alpha_start;
    j["alpha_ramp_steps"] = cfg.alpha_ramp_steps;
    j["momentum"] = to_string(cfg.momentum);
    j["k"] = cfg.k;
    j["epochs"] = cfg.epochs;
    j["batch_size"] = cfg.batch_size;
    j["sparsity_target"] = cfg.sparsity_target ? nlohmann::ordered_json(*cfg.sparsity_target) : nullptr;
    j["sparsity_weight"] = cfg.sparsity_weight;
    j["sparsity_decay"] = cfg.sparsity_decay;
    j["seed"] = cfg.seed;
    j["init_mode"] = to_string(cfg.init_mode);
    j["init_std"] = cfg.init_std;
    j["sample_visible"] = cfg.sample_visible;
    return j.dump(2);
}

TrainConfig train_config_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    TrainConfig cfg;
    cfg.model_kind = parse_model_kind(j.value("model_kind", "theta"));
    cfg.unit_type = parse_unit_type(j.value("unit_type", "gaussian"));
    cfg.hidden = j.value("hidden", cfg.hidden);
    cfg.eta = j.value("eta", cfg.eta);
    cfg.alpha = j.value("alpha", cfg.alpha);
    cfg.alpha_start = j.value("alpha_start", cfg.alpha_start);
    cfg.alpha_ramp_steps = j.value("alpha_ramp_steps", cfg.alpha_ramp_steps);
    cfg.momentum = parse_momentum_mode(j.value("momentum", "literal"));
    cfg.k = j.value("k", cfg.k);
    cfg.epochs = j.value("epochs", cfg.epochs);
    cfg.batch_size = j.value("batch_size", cfg.batch_size);
    if (j.contains("sparsity_target") && !j["sparsity_target"].is_null())
        cfg.sparsity_target = j["sparsity_target"].get<double>();
    cfg.sparsity_weight = j.value("sparsity_weight", cfg.sparsity_weight);
    cfg.sparsity_decay = j.value("sparsity_decay", cfg.sparsity_decay);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.init_mode = parse_init_mode(j.value("init_mode", "rotated"));
    cfg.init_std = j.value("init_std", cfg.init_std);
    cfg.sample_visible = j.value("sample_visible", cfg.sample_visible);
    cfg.validate();
    return cfg;
}

SupportSet model_support_set(ModelKind kind, const SupportSet& data_set) {
    if (kind == ModelKind::theta) return data_set;
    return SupportSet({0.0}, data_set.side(), RotationMode::exact);
}

ThetaRbmModel init_model(const TrainConfig& cfg, const SupportSet& set, std::size_t H, Rng& rng) {
    auto m = ThetaRbmModel::zeros(H, set.side(), set.angles(), cfg.unit_type);
    m.kind = cfg.model_kind;
    std::normal_distribution<double> normal(0.0, cfg.init_std);
    auto draw = [&](Matrix& w) {
        for (Eigen::Index i = 0; i < w.rows(); ++i)
            for (Eigen::Index k = 0; k < w.cols(); ++k) w(i, k) = normal(rng);
    };
    if (cfg.init_mode == InitMode::rotated) {
        Matrix base(static_cast<Eigen::Index>(H), static_cast<Eigen::Index>(set.dim()));
        draw(base);
        for (std::size_t s = 0; s < set.size(); ++s)
            rotate_rows_into(base, set.table(set.angle(s) - set.angle(0)), m.W[s]);
    } else {
        for (auto& w : m.W) draw(w);
    }
    return m;
}

TrainerState make_trainer_state(ThetaRbmModel model) {
    TrainerState st;
    st.velocity.assign(model.slices(), Matrix::Zero(static_cast<Eigen::Index>(model.hidden()),
                                                    static_cast<Eigen::Index>(model.visible())));
    st.velocity_b = Vector::Zero(model.b.size());
    st.velocity_c = Vector::Zero(model.c.size());
    st.running_hidden = Vector::Zero(model.b.size());
    st.model = std::move(model);
    return st;
}

void share_gradients(std::vector<Matrix>& dW, const std::vector<bool>& realized, const SupportSet& set) {
    const std::size_t S = dW.size();
    if (S != set.size() || realized.size() != S) throw ShapeError("gradient slices do not match the support set");
    if (S == 1) return;
    std::vector<Matrix> shared(S, Matrix::Zero(dW[0].rows(), dW[0].cols()));
    Matrix rotated;
    // Every target slice sums its contributions in ascending source order, so
    // the result for slice k' is an exact permutation of the result for k.
    for (std::size_t src = 0; src < S; ++src) {
        if (!realized[src]) continue;
        for (std::size_t dst = 0; dst < S; ++dst) {
            if (dst == src) {
                shared[dst] += dW[src];
            } else {
                rotate_rows_into(dW[src], set.table(set.angle(dst) - set.angle(src)), rotated);
                shared[dst] += rotated;
            }
        }
    }
    dW = std::move(shared);
}

void apply_update(TrainerState& state, const std::vector<Matrix>& dW, const Vector& db, const Vector& dc,
                  const TrainConfig& cfg) {
    auto& m = state.model;
    const double a = cfg.alpha_at(state.step);
    const double eta = cfg.eta;
    if (cfg.momentum == MomentumMode::literal) {
        for (std::size_t s = 0; s < m.slices(); ++s) {
            m.W[s] += eta * dW[s] + a * state.velocity[s];
            state.velocity[s] = dW[s];
        }
        m.b += eta * db + a * state.velocity_b;
        m.c += eta * dc + a * state.velocity_c;
        state.velocity_b = db;
        state.velocity_c = dc;
    } else {
        for (std::size_t s = 0; s < m.slices(); ++s) {
            state.velocity[s] = eta * dW[s] + a * state.velocity[s];
            m.W[s] += state.velocity[s];
        }
        state.velocity_b = eta * db + a * state.velocity_b;
        state.velocity_c = eta * dc + a * state.velocity_c;
        m.b += state.velocity_b;
        m.c += state.velocity_c;
    }
    ++state.step;
    if (!m.all_finite()) {
        std::ostringstream msg;
        msg << "non-finite weights after update step " << state.step << " (eta=" << eta << ", alpha=" << a
            << ", momentum=" << to_string(cfg.momentum) << "); lower the learning rate";
        throw NumericalError(msg.str());
    }
}

StepReport update_step(TrainerState& state, const Batch& batch, const TrainConfig& cfg, const SupportSet& set,
                       Rng& rng) {
    auto g = cd_gradient(state.model, batch, CdOptions{cfg.k, cfg.sample_visible}, rng);
    share_gradients(g.dW, g.realized, set);

    if (!state.running_initialized) {
        state.running_hidden = g.mean_hidden;
        state.running_initialized = true;
    } else {
        state.running_hidden = cfg.sparsity_decay * state.running_hidden + (1.0 - cfg.sparsity_decay) * g.mean_hidden;
    }
    if (cfg.sparsity_target)
        g.db += cfg.sparsity_weight * (Vector::Constant(g.db.size(), *cfg.sparsity_target) - state.running_hidden);

    apply_update(state, g.dW, g.db, g.dc, cfg);
    return {g.recon_error, g.mean_hidden.mean()};
}

double lemma_residual(const ThetaRbmModel& m, const SupportSet& set) {
    if (m.slices() != set.size()) throw ConsistencyError("model slices do not match the support set");
    double worst = 0.0;
    Matrix rotated;
    for (std::size_t s = 0; s < m.slices(); ++s) {
        for (std::size_t t = 0; t < m.slices(); ++t) {
            if (s == t) continue;
            rotate_rows_into(m.W[s], set.table(set.angle(t) - set.angle(s)), rotated);
            worst = std::max(worst, (m.W[t] - rotated).cwiseAbs().maxCoeff());
        }
    }
    return worst;
}

ImageDataset align_to_canonical(const ImageDataset& ds, const SupportSet& set) {
    if (!ds.has_orientation()) throw ArgumentError("alignment needs orientation indices");
    ImageDataset out = ds;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto& table = set.table(-set.angle(static_cast<std::size_t>(ds.orientation[i])));
        const auto row = ds.images.row(static_cast<Eigen::Index>(i));
        auto dst = out.images.row(static_cast<Eigen::Index>(i));
        apply_table(table, {row.data(), static_cast<std::size_t>(row.size())},
                    {dst.data(), static_cast<std::size_t>(dst.size())});
    }
    std::fill(out.orientation.begin(), out.orientation.end(), 0);
    return out;
}

TrainResult train(const TrainConfig& cfg, const ImageDataset& ds, const SupportSet& set,
                  const EpochCallback& on_epoch) {
    cfg.validate();
    ds.validate();
    if (ds.size() == 0) throw ArgumentError("training set is empty");
    if (static_cast<std::size_t>(ds.side) != static_cast<std::size_t>(set.side()))
        throw ShapeError("dataset side does not match support set side");
    const SupportSet model_set = model_support_set(cfg.model_kind, set);
    if (cfg.model_kind == ModelKind::theta && set.size() > 1 && !ds.has_orientation())
        throw ArgumentError("theta-RBM training needs orientation indices");

    Rng rng(cfg.seed);
    TrainerState state = make_trainer_state(init_model(cfg, model_set, cfg.hidden, rng));
    TrainResult result;

    const std::size_t N = ds.size();
    std::vector<std::size_t> order(N);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Batch batch;
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        for (std::size_t i = N; i > 1; --i) {
            const auto j = std::min(i - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i)));
            std::swap(order[i - 1], order[j]);
        }
        double recon = 0.0;
        double act = 0.0;
        for (std::size_t start = 0; start < N; start += cfg.batch_size) {
            const std::size_t len = std::min(cfg.batch_size, N - start);
            batch.v.resize(static_cast<Eigen::Index>(len), ds.images.cols());
            batch.slice.assign(len, 0);
            for (std::size_t i = 0; i < len; ++i) {
                const auto src = order[start + i];
                batch.v.row(static_cast<Eigen::Index>(i)) = ds.images.row(static_cast<Eigen::Index>(src));
                if (cfg.model_kind == ModelKind::theta && model_set.size() > 1) batch.slice[i] = ds.orientation[src];
            }
            const auto rep = update_step(state, batch, cfg, model_set, rng);
            recon += rep.recon_error * static_cast<double>(len);
            act += rep.mean_activation * static_cast<double>(len);
        }
        state.epoch = epoch;
        EpochMetrics em;
        em.epoch = epoch;
        em.recon_error = recon / static_cast<double>(N);
        em.mean_activation = act / static_cast<double>(N);
        em.lemma_residual = model_set.size() > 1 ? lemma_residual(state.model, model_set) : 0.0;
        result.metrics.push_back(em);
        if (on_epoch) on_epoch(em, state.model);
    }
    result.model = std::move(state.model);
    return result;
}

}  // namespace thetarbm
