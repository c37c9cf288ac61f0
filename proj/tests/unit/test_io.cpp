#include <gtest/gtest.h>

#include <cstring>

#include "support.hpp"
#include "thetarbm/binary_io.hpp"
#include "thetarbm/error.hpp"
#include "thetarbm/features.hpp"
#include "thetarbm/orientation.hpp"
#include "thetarbm/pgm.hpp"

using namespace thetarbm;
using testing_support::TempDir;

TEST(ByteIo, LittleEndianLayout) {
    io::ByteWriter w;
    w.u32(0x01020304u);
    w.u64(0x0807060504030201ull);
    w.f64(1.0);
    const auto& b = w.bytes();
    ASSERT_EQ(b.size(), 20u);
    EXPECT_EQ(b[0], 0x04);
    EXPECT_EQ(b[3], 0x01);
    EXPECT_EQ(b[4], 0x01);
    EXPECT_EQ(b[11], 0x08);
    EXPECT_EQ(b[19], 0x3f);
    EXPECT_EQ(b[18], 0xf0);
}

TEST(ByteIo, RoundTripAndTruncation) {
    io::ByteWriter w;
    w.raw("ABCD");
    w.u8(7);
    w.u32(123456);
    w.u64(1ull << 40);
    const std::vector<double> xs{-0.0, 3.25, 1e-300};
    w.f64s(xs);
    io::ByteReader r(w.bytes());
    EXPECT_EQ(r.raw(4), "ABCD");
    EXPECT_EQ(r.u8(), 7);
    EXPECT_EQ(r.u32(), 123456u);
    EXPECT_EQ(r.u64(), 1ull << 40);
    std::vector<double> back(3);
    r.f64s(back);
    EXPECT_EQ(std::memcmp(back.data(), xs.data(), 24), 0);
    EXPECT_EQ(r.remaining(), 0u);
    EXPECT_THROW(r.u8(), FormatError);
}

TEST(ByteIo, Fnv1aKnownVectors) {
    EXPECT_EQ(io::fnv1a64_hex({}), "cbf29ce484222325");
    const std::string a = "a";
    EXPECT_EQ(io::fnv1a64_hex({reinterpret_cast<const std::uint8_t*>(a.data()), 1}), "af63dc4c8601ec8c");
}

TEST(ByteIo, AtomicWriteReplacesFile) {
    TempDir dir("atomic");
    const auto p = dir / "f.txt";
    io::write_text_atomic(p, "first");
    io::write_text_atomic(p, "second");
    const auto bytes = io::read_file(p);
    EXPECT_EQ(std::string(bytes.begin(), bytes.end()), "second");
    std::size_t entries = 0;
    for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir.path())) ++entries;
    EXPECT_EQ(entries, 1u);
    EXPECT_THROW(io::read_file(dir / "missing"), Error);
}

TEST(Pgm, EncodeDecodeRoundTrip) {
    GrayImage img;
    img.width = 3;
    img.height = 2;
    img.pixels = {0, 10, 20, 255, 128, 1};
    const auto bytes = encode_pgm(img);
    const std::string header(bytes.begin(), bytes.begin() + 11);
    EXPECT_EQ(header, "P5\n3 2\n255\n");
    const auto back = decode_pgm(bytes);
    EXPECT_EQ(back.width, 3);
    EXPECT_EQ(back.height, 2);
    EXPECT_EQ(back.pixels, img.pixels);
    EXPECT_EQ(back.at(1, 0), 255);
}

TEST(Pgm, RejectsMalformed) {
    const std::string p2 = "P2\n1 1\n255\n0";
    EXPECT_THROW(decode_pgm({p2.begin(), p2.end()}), FormatError);
    const std::string shortp = "P5\n2 2\n255\nab";
    EXPECT_THROW(decode_pgm({shortp.begin(), shortp.end()}), FormatError);
    const std::string maxval = "P5\n1 1\n65535\nab";
    EXPECT_THROW(decode_pgm({maxval.begin(), maxval.end()}), FormatError);
}

TEST(Pgm, FilterScaling) {
    const std::vector<double> f{-2.0, 0.0, 2.0};
    EXPECT_EQ(filter_to_gray(f), (std::vector<std::uint8_t>{0, 128, 255}));
    EXPECT_EQ(filter_to_gray(std::vector<double>{0.3, 0.3}), (std::vector<std::uint8_t>{128, 128}));
}

TEST(Pgm, TileLayoutAndSeparators) {
    std::mt19937_64 rng(70);
    const auto m = testing_support::random_model(3, 4, {0, 90, 180, 270}, UnitType::gaussian, rng);
    const auto img = filter_grid(m, {0, 2});
    EXPECT_EQ(img.width, 4 * 4 + 3);
    EXPECT_EQ(img.height, 2 * 4 + 1);
    for (int r = 0; r < img.height; ++r) EXPECT_EQ(img.at(r, 4), 0);
    for (int c = 0; c < img.width; ++c) EXPECT_EQ(img.at(4, c), 0);
    const auto row = m.W[1].row(2);
    const auto gray = filter_to_gray({row.data(), 16});
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) EXPECT_EQ(img.at(5 + r, 5 + c), gray[static_cast<std::size_t>(r * 4 + c)]);
    EXPECT_THROW(tile_filters(m, 1, 1, {{0, 0}, {1, 0}}), ArgumentError);
    EXPECT_THROW(tile_filters(m, 1, 1, {{0, 4}}), ArgumentError);
    EXPECT_THROW(tile_filters(m, 1, 1, {{3, 0}}), ArgumentError);

    TempDir dir("pgm");
    write_pgm(dir / "g.pgm", img);
    EXPECT_EQ(read_pgm(dir / "g.pgm").pixels, img.pixels);
}

TEST(Features, SaveLoadBitIdentical) {
    TempDir dir("feat");
    FeatureMatrix f;
    f.rows.resize(3, 2);
    f.rows << 0.1, -0.0, 1e-310, 5, 0.5, 0.25;
    f.labels = {3, 1, 9};
    save_features(dir / "f.bin", f);
    const auto g = load_features(dir / "f.bin");
    EXPECT_EQ(std::memcmp(g.rows.data(), f.rows.data(), 6 * sizeof(double)), 0);
    EXPECT_EQ(g.labels, f.labels);

    auto bytes = io::read_file(dir / "f.bin");
    bytes.push_back(0);
    testing_support::write_bytes(dir / "trail.bin", bytes);
    EXPECT_THROW(load_features(dir / "trail.bin"), FormatError);
    bytes.resize(bytes.size() - 9);
    testing_support::write_bytes(dir / "short.bin", bytes);
    EXPECT_THROW(load_features(dir / "short.bin"), FormatError);
    bytes[0] = 'X';
    testing_support::write_bytes(dir / "magic.bin", bytes);
    EXPECT_THROW(load_features(dir / "magic.bin"), FormatError);
}

TEST(Features, ThetaSelectsSliceByOrientation) {
    std::mt19937_64 rng(71);
    const auto m = testing_support::random_model(4, 4, {0, 90, 180, 270}, UnitType::gaussian, rng, 0.3);
    auto ds = testing_support::random_images(8, 4, rng);
    ds.orientation = {0, 1, 2, 3, 3, 2, 1, 0};
    const auto f = extract_features(m, ds);
    ASSERT_EQ(f.size(), 8u);
    ASSERT_EQ(f.dim(), 4u);
    for (std::size_t i = 0; i < 8; ++i) {
        const Vector x = ds.images.row(static_cast<Eigen::Index>(i)).transpose();
        const Vector h = hidden_given_visible(m, x, ds.orientation[i]);
        EXPECT_TRUE(f.rows.row(static_cast<Eigen::Index>(i)).transpose() == h);
    }
    EXPECT_EQ(f.labels, ds.labels);
    ds.orientation.clear();
    EXPECT_THROW(extract_features(m, ds), ArgumentError);
}

TEST(Features, EncoderChecksConsistency) {
    std::mt19937_64 rng(72);
    const auto m = testing_support::random_model(2, 4, {0, 90, 180, 270}, UnitType::gaussian, rng);
    const SupportSet wrong_side({0, 90, 180, 270}, 6, RotationMode::exact);
    EXPECT_THROW(FeatureEncoder(m, wrong_side), ConsistencyError);
    const SupportSet wrong_angles({0, 180}, 4, RotationMode::exact);
    EXPECT_THROW(FeatureEncoder(m, wrong_angles), ConsistencyError);
    const SupportSet ok({0, 90, 180, 270}, 4, RotationMode::exact);
    const FeatureEncoder enc(m, ok);
    EXPECT_THROW(enc.encode(std::vector<double>(15, 0.0), 0), ShapeError);
}
