#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "thetarbm/rbm.hpp"

namespace thetarbm {

struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;  // row-major

    std::uint8_t at(int row, int col) const { return pixels[static_cast<std::size_t>(row) * width + col]; }
};

// Binary PGM (P5, maxval 255).
std::vector<std::uint8_t> encode_pgm(const GrayImage& img);
GrayImage decode_pgm(const std::vector<std::uint8_t>& bytes);
void write_pgm(const std::filesystem::path& path, const GrayImage& img);
GrayImage read_pgm(const std::filesystem::path& path);

// Maps one filter to 8-bit gray with per-filter min-max scaling; a constant
// filter becomes uniform mid-gray (128).
std::vector<std::uint8_t> filter_to_gray(std::span<const double> filter);

// Tiles (filter, slice) cells row-major into a rows x cols grid, each cell a
// side x side tile with 1-pixel separators (value 0) between tiles.
GrayImage tile_filters(const ThetaRbmModel& m, int rows, int cols,
                       const std::vector<std::pair<std::size_t, std::size_t>>& cells);

// Default layout: row r shows filter filters[r], column c shows slice c.
GrayImage filter_grid(const ThetaRbmModel& m, const std::vector<std::size_t>& filters);

}  // namespace thetarbm
