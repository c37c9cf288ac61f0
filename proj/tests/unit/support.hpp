#pragma once

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "thetarbm/dataset.hpp"
#include "thetarbm/rbm.hpp"

namespace testing_support {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("thetarbm_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline thetarbm::ThetaRbmModel random_model(std::size_t H, int side, std::vector<double> angles,
                                            thetarbm::UnitType unit, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> nd(0.0, scale);
    auto m = thetarbm::ThetaRbmModel::zeros(H, side, std::move(angles), unit);
    for (auto& w : m.W)
        for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = nd(rng);
    for (Eigen::Index j = 0; j < m.b.size(); ++j) m.b[j] = nd(rng);
    for (Eigen::Index k = 0; k < m.c.size(); ++k) m.c[k] = nd(rng);
    return m;
}

inline thetarbm::ImageDataset random_images(std::size_t n, int side, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    thetarbm::ImageDataset ds;
    ds.side = side;
    ds.images.resize(static_cast<Eigen::Index>(n), side * side);
    for (Eigen::Index i = 0; i < ds.images.size(); ++i) ds.images.data()[i] = u(rng);
    for (std::size_t i = 0; i < n; ++i) ds.labels.push_back(static_cast<int>(i % 10));
    return ds;
}

inline void write_bytes(const std::filesystem::path& p, const std::vector<std::uint8_t>& bytes) {
    std::ofstream(p, std::ios::binary).write(reinterpret_cast<const char*>(bytes.data()),
                                             static_cast<std::streamsize>(bytes.size()));
}

inline void write_text(const std::filesystem::path& p, const std::string& s) { std::ofstream(p) << s; }

}  // namespace testing_support
