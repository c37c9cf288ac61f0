#include "thetarbm/pgm.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "thetarbm/binary_io.hpp"
#include "thetarbm/error.hpp"

namespace thetarbm {

std::vector<std::uint8_t> encode_pgm(const GrayImage& img) {
    const std::string header = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), img.pixels.begin(), img.pixels.end());
    return out;
}

GrayImage decode_pgm(const std::vector<std::uint8_t>& bytes) {
    std::size_t pos = 0;
    auto token = [&]() {
        while (pos < bytes.size()) {
            if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (std::isspace(bytes[pos])) {
                ++pos;
            } else {
                break;
            }
        }
        std::string t;
        while (pos < bytes.size() && !std::isspace(bytes[pos])) t.push_back(static_cast<char>(bytes[pos++]));
        return t;
    };
    if (token() != "P5") throw FormatError("not a binary PGM file");
    GrayImage img;
    try {
        img.width = std::stoi(token());
        img.height = std::stoi(token());
        if (std::stoi(token()) != 255) throw FormatError("only maxval 255 PGM files are supported");
    } catch (const std::logic_error&) {
        throw FormatError("malformed PGM header");
    }
    ++pos;  // single whitespace after maxval
    const auto n = static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height);
    if (bytes.size() < pos + n) throw FormatError("truncated PGM payload");
    img.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                      bytes.begin() + static_cast<std::ptrdiff_t>(pos + n));
    return img;
}

void write_pgm(const std::filesystem::path& path, const GrayImage& img) {
    io::write_file_atomic(path, encode_pgm(img));
}

GrayImage read_pgm(const std::filesystem::path& path) {
    return decode_pgm(io::read_file(path));
}

std::vector<std::uint8_t> filter_to_gray(std::span<const double> filter) {
    std::vector<std::uint8_t> out(filter.size(), 128);
    if (filter.empty()) return out;
    const auto [lo, hi] = std::minmax_element(filter.begin(), filter.end());
    const double range = *hi - *lo;
    if (!(range > 0.0)) return out;
    for (std::size_t i = 0; i < filter.size(); ++i)
        out[i] = static_cast<std::uint8_t>(std::lround(255.0 * (filter[i] - *lo) / range));
    return out;
}

GrayImage tile_filters(const ThetaRbmModel& m, int rows, int cols,
                       const std::vector<std::pair<std::size_t, std::size_t>>& cells) {
    if (rows < 1 || cols < 1) throw ArgumentError("filter grid needs at least one row and one column");
    if (cells.size() > static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols))
        throw ArgumentError("more cells selected than the grid holds");
    const int side = m.side;
    GrayImage img;
    img.width = cols * side + (cols - 1);
    img.height = rows * side + (rows - 1);
    img.pixels.assign(static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height), 0);
    for (std::size_t n = 0; n < cells.size(); ++n) {
        const auto [filter, slice] = cells[n];
        if (slice >= m.slices()) throw ArgumentError("slice " + std::to_string(slice) + " out of range");
        if (filter >= m.hidden()) throw ArgumentError("filter " + std::to_string(filter) + " out of range");
        const auto row = m.W[slice].row(static_cast<Eigen::Index>(filter));
        const auto gray = filter_to_gray({row.data(), static_cast<std::size_t>(row.size())});
        const int r0 = static_cast<int>(n / static_cast<std::size_t>(cols)) * (side + 1);
        const int c0 = static_cast<int>(n % static_cast<std::size_t>(cols)) * (side + 1);
        for (int r = 0; r < side; ++r)
            for (int c = 0; c < side; ++c)
                img.pixels[static_cast<std::size_t>(r0 + r) * img.width + (c0 + c)] =
                    gray[static_cast<std::size_t>(r) * side + c];
    }
    return img;
}

GrayImage filter_grid(const ThetaRbmModel& m, const std::vector<std::size_t>& filters) {
    std::vector<std::pair<std::size_t, std::size_t>> cells;
    for (auto f : filters)
        for (std::size_t s = 0; s < m.slices(); ++s) cells.emplace_back(f, s);
    return tile_filters(m, static_cast<int>(filters.size()), static_cast<int>(m.slices()), cells);
}

}  // namespace thetarbm
