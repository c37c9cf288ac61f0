#pragma once

#include <cstdint>
#include <list>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "thetarbm/features.hpp"
#include "thetarbm/linalg.hpp"

namespace thetarbm {

// Gaussian width sigma -> gamma = 1 / (2 sigma^2) in exp(-gamma |a-b|^2).
inline double kernel_gamma_from_sigma(double sigma) {
    return 1.0 / (2.0 * sigma * sigma);
}

double rbf_kernel(std::span<const double> a, std::span<const double> b, double gamma);

// Rows of the N x N RBF Gram matrix, computed on demand and kept in a
// least-recently-used cache bounded by `max_rows`. Not thread-safe.
class KernelCache {
public:
    KernelCache(const Matrix& points, double gamma, std::size_t max_rows);

    std::span<const double> row(std::size_t i);
    double diag(std::size_t) const { return 1.0; }
    std::size_t size() const { return static_cast<std::size_t>(points_.rows()); }

    std::size_t hits() const { return hits_; }
    std::size_t misses() const { return misses_; }

private:
    const Matrix& points_;
    double gamma_;
    std::size_t max_rows_;
    std::list<std::size_t> lru_;  // front = most recent
    struct Entry {
        std::vector<double> values;
        std::list<std::size_t>::iterator pos;
    };
    std::unordered_map<std::size_t, Entry> rows_;
    std::size_t hits_ = 0;
    std::size_t misses_ = 0;
};

struct SvmParams {
    double C = 10.0;
    double gamma = 1.0;
    double tol = 1e-3;
    std::size_t max_iter = 10'000'000;
    std::size_t cache_rows = 4096;
};

// Dual solution of one binary soft-margin problem, f(x) = sum a_i y_i K(x_i, x) + bias.
struct BinarySolution {
    std::vector<double> alpha;
    double bias = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
};

// SMO with second-order working-set selection. y entries must be +1 / -1.
BinarySolution solve_binary(KernelCache& kernel, std::span<const int> y, double C, double tol,
                            std::size_t max_iter);

// Largest KKT violation of a solution, in units of the margin y f(x):
// a = 0 needs y f >= 1, 0 < a < C needs y f = 1, a = C needs y f <= 1.
double max_kkt_violation(KernelCache& kernel, std::span<const int> y, const BinarySolution& sol,
                         double C);

struct BinaryMachine {
    int positive_class = 0;
    std::vector<std::size_t> sv;  // rows of SvmModel::support_vectors
    std::vector<double> coef;     // alpha_i * y_i
    double bias = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
    double kkt_violation = 0.0;
};

struct SvmModel {
    double C = 0.0;
    double gamma = 0.0;
    std::vector<int> classes;
    Matrix support_vectors;
    std::vector<BinaryMachine> machines;  // one per class, one-vs-rest

    Vector decision_values(std::span<const double> x) const;
    int predict(std::span<const double> x) const;
};

// One-vs-rest training; the binary machines run on the worker pool and share
// nothing but the read-only feature matrix. Non-converged machines are kept
// and reported through `warnings`.
SvmModel svm_train(const FeatureMatrix& f, const SvmParams& params,
                   std::vector<std::string>* warnings = nullptr);

struct Prediction {
    std::vector<int> labels;
    double error_rate = 0.0;
};

Prediction svm_predict(const SvmModel& m, const FeatureMatrix& f);

}  // namespace thetarbm
