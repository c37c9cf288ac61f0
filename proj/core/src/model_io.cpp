#include "thetarbm/model_io.hpp"

#include "thetarbm/binary_io.hpp"
#include "thetarbm/error.hpp"

namespace thetarbm {

std::vector<std::uint8_t> serialize_model(const ThetaRbmModel& m) {
    m.validate();
    io::ByteWriter w;
    w.raw("TRBM");
    w.u32(kModelFormatVersion);
    w.u32(static_cast<std::uint32_t>(m.hidden()));
    w.u32(static_cast<std::uint32_t>(m.visible()));
    w.u32(static_cast<std::uint32_t>(m.slices()));
    w.u32(static_cast<std::uint32_t>(m.side));
    w.u8(m.unit_type == UnitType::bernoulli ? 0 : 1);
    w.u8(static_cast<std::uint8_t>(m.kind));
    w.f64s(m.angles);
    for (const auto& slice : m.W) w.f64s({slice.data(), static_cast<std::size_t>(slice.size())});
    w.f64s({m.b.data(), static_cast<std::size_t>(m.b.size())});
    w.f64s({m.c.data(), static_cast<std::size_t>(m.c.size())});
    return w.bytes();
}

ThetaRbmModel deserialize_model(std::vector<std::uint8_t> bytes) {
    io::ByteReader r(std::move(bytes));
    if (r.raw(4) != "TRBM") throw FormatError("not a theta-RBM checkpoint");
    const auto version = r.u32();
    if (version != kModelFormatVersion)
        throw FormatError("unsupported checkpoint version " + std::to_string(version));
    const auto H = r.u32();
    const auto V = r.u32();
    const auto S = r.u32();
    const auto side = r.u32();
    if (static_cast<std::uint64_t>(side) * side != V) throw FormatError("checkpoint V is not side^2");
    const auto unit = r.u8();
    const auto kind = r.u8();
    if (unit > 1 || kind > 2) throw FormatError("checkpoint has an unknown unit type or model kind");
    std::vector<double> angles(S);
    r.f64s(angles);
    auto m = ThetaRbmModel::zeros(H, static_cast<int>(side), std::move(angles),
                                  unit == 0 ? UnitType::bernoulli : UnitType::gaussian);
    m.kind = static_cast<ModelKind>(kind);
    for (auto& slice : m.W) r.f64s({slice.data(), static_cast<std::size_t>(slice.size())});
    r.f64s({m.b.data(), static_cast<std::size_t>(m.b.size())});
    r.f64s({m.c.data(), static_cast<std::size_t>(m.c.size())});
    if (r.remaining() != 0) throw FormatError("trailing bytes after checkpoint payload");
    return m;
}

void save_model(const std::filesystem::path& path, const ThetaRbmModel& m) {
    io::write_file_atomic(path, serialize_model(m));
}

ThetaRbmModel load_model(const std::filesystem::path& path) {
    return deserialize_model(io::read_file(path));
}

}  // namespace thetarbm
