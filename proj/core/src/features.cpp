#include "thetarbm/features.hpp"

#include <cmath>

#include "thetarbm/binary_io.hpp"
#include "thetarbm/error.hpp"
#include "thetarbm/parallel.hpp"

namespace thetarbm {

FeatureEncoder::FeatureEncoder(const ThetaRbmModel& model, const SupportSet& data_set,
                               std::optional<NormalizationStats> stats)
    : model_(model), data_set_(data_set), stats_(std::move(stats)) {
    model_.validate();
    if (static_cast<std::size_t>(model_.side) != static_cast<std::size_t>(data_set_.side()))
        throw ConsistencyError("model side does not match the support set side");
    if (model_.kind == ModelKind::theta && model_.slices() > 1) {
        if (model_.slices() != data_set_.size())
            throw ConsistencyError("checkpoint has " + std::to_string(model_.slices()) +
                                   " slices but the support set has " + std::to_string(data_set_.size()) + " angles");
        for (std::size_t s = 0; s < model_.slices(); ++s)
            if (std::abs(model_.angles[s] - data_set_.angle(s)) > 1e-9)
                throw ConsistencyError("checkpoint angles do not match the support set");
    }
    if (stats_ && static_cast<std::size_t>(stats_->mean.size()) != model_.visible())
        throw ConsistencyError("normalization statistics do not match the model's visible size");
}

Vector FeatureEncoder::encode(std::span<const double> raw, int r_index) const {
    if (raw.size() != model_.visible()) throw ShapeError("image length does not match the model");
    const bool gated = model_.kind == ModelKind::theta && model_.slices() > 1;
    Vector x(static_cast<Eigen::Index>(raw.size()));
    if (model_.kind == ModelKind::orbm && r_index >= 0) {
        const auto& table = data_set_.table(-data_set_.angle(static_cast<std::size_t>(r_index)));
        apply_table(table, raw, {x.data(), static_cast<std::size_t>(x.size())});
    } else {
        std::copy(raw.begin(), raw.end(), x.data());
    }
    if (stats_) x = normalize_image({x.data(), static_cast<std::size_t>(x.size())}, *stats_, gated ? r_index : -1);
    return hidden_given_visible(model_, x, gated ? r_index : 0);
}

FeatureMatrix extract_features(const FeatureEncoder& encoder, const ImageDataset& ds) {
    if (ds.dim() != encoder.model().visible()) throw ShapeError("dataset image size does not match the model");
    const bool needs_r = encoder.model().slices() > 1 || encoder.model().kind == ModelKind::orbm;
    if (needs_r && !ds.has_orientation()) throw ArgumentError("feature extraction needs orientation indices");
    FeatureMatrix f;
    f.rows.resize(static_cast<Eigen::Index>(ds.size()), static_cast<Eigen::Index>(encoder.model().hidden()));
    f.labels = ds.labels;
    parallel_for(ds.size(), [&](std::size_t i) {
        const auto row = ds.images.row(static_cast<Eigen::Index>(i));
        const int r = ds.has_orientation() ? ds.orientation[i] : 0;
        f.rows.row(static_cast<Eigen::Index>(i)) =
            encoder.encode({row.data(), static_cast<std::size_t>(row.size())}, r).transpose();
    });
    return f;
}

FeatureMatrix extract_features(const ThetaRbmModel& m, const ImageDataset& ds) {
    const SupportSet set = m.slices() > 1 || m.kind == ModelKind::theta
                               ? SupportSet(m.angles, m.side, RotationMode::nearest)
                               : SupportSet({0.0}, m.side, RotationMode::exact);
    return extract_features(FeatureEncoder(m, set), ds);
}

void save_features(const std::filesystem::path& path, const FeatureMatrix& f) {
    if (f.labels.size() != f.size()) throw ShapeError("feature rows and labels differ in count");
    io::ByteWriter w;
    w.raw("TFEA");
    w.u32(1);
    w.u64(f.size());
    w.u64(f.dim());
    w.f64s({f.rows.data(), static_cast<std::size_t>(f.rows.size())});
    for (int l : f.labels) w.u32(static_cast<std::uint32_t>(l));
    io::write_file_atomic(path, w.bytes());
}

FeatureMatrix load_features(const std::filesystem::path& path) {
    io::ByteReader r(io::read_file(path));
    if (r.raw(4) != "TFEA") throw FormatError(path.string() + ": not a feature file");
    if (r.u32() != 1) throw FormatError(path.string() + ": unsupported feature file version");
    const auto n = static_cast<Eigen::Index>(r.u64());
    const auto h = static_cast<Eigen::Index>(r.u64());
    FeatureMatrix f;
    f.rows.resize(n, h);
    r.f64s({f.rows.data(), static_cast<std::size_t>(f.rows.size())});
    f.labels.resize(static_cast<std::size_t>(n));
    for (auto& l : f.labels) l = static_cast<int>(r.u32());
    if (r.remaining() != 0) throw FormatError(path.string() + ": trailing bytes");
    return f;
}

}  // namespace thetarbm
