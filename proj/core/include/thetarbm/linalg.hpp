#pragma once

#include <Eigen/Dense>

namespace thetarbm {

// Row-major so that a row (one image, one filter) is contiguous.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

inline double sigmoid(double x) {
    return 1.0 / (1.0 + std::exp(-x));
}

// log(1 + e^x) without overflow for large x.
inline double softplus(double x) {
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& m) {
    return m.allFinite();
}

}  // namespace thetarbm
