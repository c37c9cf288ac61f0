#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "thetarbm/dataset.hpp"
#include "thetarbm/rotation.hpp"

namespace thetarbm {

// Dominant gradient orientation of one image.
struct OrientationEstimate {
    double angle = 0.0;             // degrees in [0, 360), centre of the winning bin
    int index = -1;                 // nearest support angle, -1 until quantized
    std::vector<double> histogram;  // magnitude-weighted, bin b centred on b * 360 / bins
    bool flat = false;              // no gradient anywhere
};

constexpr int kDefaultOrientationBins = 36;

// Central differences on interior pixels, y axis pointing up (row index
// decreasing) so angles follow the counter-clockwise rotation convention.
OrientationEstimate estimate_orientation(std::span<const double> image, int side,
                                         int bins = kDefaultOrientationBins);

// Fills ds.orientation with the support index nearest each image's estimate.
ImageDataset assign_orientations(const ImageDataset& ds, const SupportSet& set,
                                 int bins = kDefaultOrientationBins);

struct PerturbationSpec {
    int n = 0;           // maximum index error
    double p = 0.0;      // success probability
    std::uint64_t seed = 0;
};

// Draws eps ~ Binomial(n, p) and a uniform sign per image, then shifts the
// index by +-eps modulo S. Each image uses its own counter-based stream keyed
// by (seed, image index); eps is drawn by CDF inversion so that, for a fixed
// seed, eps is nondecreasing in p.
ImageDataset perturb_indices(const ImageDataset& ds, const PerturbationSpec& spec, int S);

// eps for one uniform draw u by CDF inversion of Binomial(n, p).
int binomial_inverse_cdf(int n, double p, double u);

}  // namespace thetarbm
