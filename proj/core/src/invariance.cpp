#include "thetarbm/invariance.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "thetarbm/error.hpp"
#include "thetarbm/orientation.hpp"
#include "thetarbm/parallel.hpp"

namespace thetarbm {

std::vector<double> shifted_support(const std::vector<double>& angles, double delta) {
    std::vector<double> out;
    out.reserve(angles.size());
    for (double a : angles) out.push_back(wrap_degrees(a + delta));
    return out;
}

std::vector<double> shifted_support(const SupportSet& set, double delta) {
    return shifted_support(set.angles(), delta);
}

namespace {

int transformed_index(const FeatureEncoder& enc, std::span<const double> rotated, int r_index, double theta,
                      const GammaOptions& opts) {
    const SupportSet& set = enc.data_set();
    if (set.size() == 1 && enc.model().kind != ModelKind::orbm) return 0;
    if (opts.policy == RIndexPolicy::estimated) {
        const auto est = estimate_orientation(rotated, set.side(), opts.bins);
        return set.nearest_index(est.angle);
    }
    if (r_index < 0) throw ArgumentError("tracked gating needs an orientation index");
    return set.nearest_index(set.angle(static_cast<std::size_t>(r_index)) + theta);
}

}  // namespace

Vector mean_activation(const FeatureEncoder& encoder, std::span<const double> raw, int r_index,
                       const std::vector<double>& transforms, const GammaOptions& opts) {
    if (transforms.empty()) throw ArgumentError("mean activation needs at least one transform");
    const int side = encoder.model().side;
    Vector mu = Vector::Zero(static_cast<Eigen::Index>(encoder.model().hidden()));
    std::vector<double> rotated(raw.size());
    for (double theta : transforms) {
        const auto table = make_rotation_table(theta, side, RotationMode::nearest);
        apply_table(table, raw, rotated);
        mu += encoder.encode(rotated, transformed_index(encoder, rotated, r_index, theta, opts));
    }
    return mu / static_cast<double>(transforms.size());
}

Vector mean_activation(const ThetaRbmModel& m, const Vector& x, int r_index, const std::vector<double>& transforms,
                       const SupportSet& set, const GammaOptions& opts) {
    const FeatureEncoder enc(m, set);
    return mean_activation(enc, {x.data(), static_cast<std::size_t>(x.size())}, r_index, transforms, opts);
}

GammaReport gamma_from_responses(const Matrix& base, const std::vector<Matrix>& responses, double dead_tolerance) {
    if (responses.empty()) throw ArgumentError("gamma needs at least one transform");
    const auto N = base.rows();
    const auto H = base.cols();
    if (N == 0) throw ArgumentError("gamma needs a nonempty dataset");
    Matrix mu = Matrix::Zero(N, H);
    for (const auto& r : responses) {
        if (r.rows() != N || r.cols() != H) throw ShapeError("response matrices differ in shape");
        mu += r;
    }
    mu /= static_cast<double>(responses.size());

    GammaReport rep;
    rep.gamma.resize(static_cast<std::size_t>(H));
    rep.dead.resize(static_cast<std::size_t>(H));
    rep.var_mean.resize(static_cast<std::size_t>(H));
    rep.var_hidden.resize(static_cast<std::size_t>(H));
    double sum = 0.0;
    std::size_t live = 0;
    for (Eigen::Index j = 0; j < H; ++j) {
        const double vh = (base.col(j).array() - base.col(j).mean()).square().mean();
        const double vm = (mu.col(j).array() - mu.col(j).mean()).square().mean();
        const auto ju = static_cast<std::size_t>(j);
        rep.var_hidden[ju] = vh;
        rep.var_mean[ju] = vm;
        rep.dead[ju] = vh < dead_tolerance;
        if (rep.dead[ju]) {
            rep.gamma[ju] = std::numeric_limits<double>::quiet_NaN();
            ++rep.dead_count;
        } else {
            rep.gamma[ju] = vm / vh;
            sum += rep.gamma[ju];
            ++live;
        }
    }
    if (live > 0) rep.mean_gamma = sum / static_cast<double>(live);
    return rep;
}

GammaReport gamma_score(const FeatureEncoder& encoder, const ImageDataset& ds, const std::vector<double>& transforms,
                        const GammaOptions& opts) {
    if (ds.size() == 0) throw ArgumentError("gamma needs a nonempty dataset");
    if (transforms.empty()) throw ArgumentError("gamma needs at least one transform");
    if (ds.dim() != encoder.model().visible()) throw ShapeError("dataset image size does not match the model");
    const bool needs_r = encoder.data_set().size() > 1 || encoder.model().kind == ModelKind::orbm;
    if (needs_r && opts.policy == RIndexPolicy::tracked && !ds.has_orientation())
        throw ArgumentError("tracked gating needs orientation indices");

    const auto N = static_cast<Eigen::Index>(ds.size());
    const auto H = static_cast<Eigen::Index>(encoder.model().hidden());
    const int side = encoder.model().side;
    std::vector<RotationTable> tables;
    for (double theta : transforms) tables.push_back(make_rotation_table(theta, side, RotationMode::nearest));

    Matrix base(N, H);
    std::vector<Matrix> responses(transforms.size(), Matrix(N, H));
    parallel_for(ds.size(), [&](std::size_t i) {
        const auto row = ds.images.row(static_cast<Eigen::Index>(i));
        const std::span<const double> raw{row.data(), static_cast<std::size_t>(row.size())};
        const int r = ds.has_orientation() ? ds.orientation[i] : 0;
        base.row(static_cast<Eigen::Index>(i)) = encoder.encode(raw, r).transpose();
        std::vector<double> rotated(raw.size());
        for (std::size_t t = 0; t < transforms.size(); ++t) {
            apply_table(tables[t], raw, rotated);
            const int rt = transformed_index(encoder, rotated, r, transforms[t], opts);
            responses[t].row(static_cast<Eigen::Index>(i)) = encoder.encode(rotated, rt).transpose();
        }
    });
    auto rep = gamma_from_responses(base, responses, opts.dead_tolerance);
    rep.transforms = transforms;
    return rep;
}

GammaReport gamma_score(const ThetaRbmModel& m, const ImageDataset& ds, const std::vector<double>& transforms,
                        const SupportSet& set, const GammaOptions& opts) {
    return gamma_score(FeatureEncoder(m, set), ds, transforms, opts);
}

std::string GammaReport::to_json() const {
    nlohmann::ordered_json j;
    j["mean_gamma"] = mean_gamma ? nlohmann::ordered_json(*mean_gamma) : nullptr;
    j["all_dead"] = !mean_gamma.has_value();
    j["hidden_units"] = gamma.size();
    j["dead_count"] = dead_count;
    j["delta"] = delta;
    j["transforms"] = transforms;
    auto& units = j["units"] = nlohmann::ordered_json::array();
    for (std::size_t u = 0; u < gamma.size(); ++u) {
        nlohmann::ordered_json e;
        e["unit"] = u;
        e["gamma"] = dead[u] ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(gamma[u]);
        e["dead"] = static_cast<bool>(dead[u]);
        e["var_mean"] = var_mean[u];
        e["var_hidden"] = var_hidden[u];
        units.push_back(e);
    }
    return j.dump(2);
}

std::string GammaReport::csv_header() {
    return "label,mean_gamma,hidden_units,dead_count,delta";
}

std::string GammaReport::csv_row(const std::string& label) const {
    std::ostringstream out;
    out.precision(10);
    out << label << ',';
    if (mean_gamma) out << *mean_gamma;
    out << ',' << gamma.size() << ',' << dead_count << ',' << delta;
    return out.str();
}

}  // namespace thetarbm
