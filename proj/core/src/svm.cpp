#include "thetarbm/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "thetarbm/error.hpp"
#include "thetarbm/parallel.hpp"

namespace thetarbm {

double rbf_kernel(std::span<const double> a, std::span<const double> b, double gamma) {
    if (a.size() != b.size()) throw ShapeError("kernel arguments differ in length");
    double d2 = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        d2 += d * d;
    }
    return std::exp(-gamma * d2);
}

KernelCache::KernelCache(const Matrix& points, double gamma, std::size_t max_rows)
    : points_(points), gamma_(gamma), max_rows_(std::max<std::size_t>(2, max_rows)) {}

std::span<const double> KernelCache::row(std::size_t i) {
    auto it = rows_.find(i);
    if (it != rows_.end()) {
        ++hits_;
        lru_.splice(lru_.begin(), lru_, it->second.pos);
        return it->second.values;
    }
    ++misses_;
    if (rows_.size() >= max_rows_) {
        rows_.erase(lru_.back());
        lru_.pop_back();
    }
    lru_.push_front(i);
    Entry e;
    e.pos = lru_.begin();
    const auto n = points_.rows();
    e.values.resize(static_cast<std::size_t>(n));
    const auto xi = points_.row(static_cast<Eigen::Index>(i));
    for (Eigen::Index t = 0; t < n; ++t)
        e.values[static_cast<std::size_t>(t)] = std::exp(-gamma_ * (points_.row(t) - xi).squaredNorm());
    return rows_.emplace(i, std::move(e)).first->second.values;
}

BinarySolution solve_binary(KernelCache& kernel, std::span<const int> y, double C, double tol, std::size_t max_iter) {
    const std::size_t n = kernel.size();
    if (y.size() != n) throw ShapeError("label count does not match kernel size");
    if (!(C > 0.0)) throw ArgumentError("SVM box constraint C must be positive");
    constexpr double kTau = 1e-12;

    BinarySolution sol;
    sol.alpha.assign(n, 0.0);
    std::vector<double> G(n, -1.0);  // gradient of 1/2 a'Qa - e'a
    auto& alpha = sol.alpha;
    const auto upper = [&](std::size_t t) { return alpha[t] >= C; };
    const auto lower = [&](std::size_t t) { return alpha[t] <= 0.0; };

    for (sol.iterations = 0; sol.iterations < max_iter; ++sol.iterations) {
        // Maximal violating i, then second-order choice of j.
        double gmax = -std::numeric_limits<double>::infinity();
        std::size_t i = n;
        for (std::size_t t = 0; t < n; ++t) {
            if (y[t] == 1 ? !upper(t) : !lower(t)) {
                const double v = -y[t] * G[t];
                if (v >= gmax) {
                    gmax = v;
                    i = t;
                }
            }
        }
        double gmax2 = -std::numeric_limits<double>::infinity();
        std::size_t j = n;
        double best = std::numeric_limits<double>::infinity();
        std::span<const double> Ki;
        if (i < n) Ki = kernel.row(i);
        for (std::size_t t = 0; t < n && i < n; ++t) {
            if (y[t] == 1 ? !lower(t) : !upper(t)) {
                const double yg = y[t] * G[t];
                gmax2 = std::max(gmax2, yg);
                const double grad_diff = gmax + yg;
                if (grad_diff > 0.0) {
                    double quad = kernel.diag(i) + kernel.diag(t) - 2.0 * Ki[t];
                    if (quad <= 0.0) quad = kTau;
                    const double obj = -(grad_diff * grad_diff) / quad;
                    if (obj <= best) {
                        best = obj;
                        j = t;
                    }
                }
            }
        }
        if (i == n || j == n || gmax + gmax2 < tol) {
            sol.converged = true;
            break;
        }

        const auto Kj = kernel.row(j);
        Ki = kernel.row(i);
        const double old_i = alpha[i];
        const double old_j = alpha[j];
        if (y[i] != y[j]) {
            double quad = kernel.diag(i) + kernel.diag(j) + 2.0 * (-Ki[j]);
            if (quad <= 0.0) quad = kTau;
            const double delta = (-G[i] - G[j]) / quad;
            const double diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if (diff > 0.0) {
                if (alpha[j] < 0.0) {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if (alpha[i] < 0.0) {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if (diff > 0.0) {
                if (alpha[i] > C) {
                    alpha[i] = C;
                    alpha[j] = C - diff;
                }
            } else if (alpha[j] > C) {
                alpha[j] = C;
                alpha[i] = C + diff;
            }
        } else {
            double quad = kernel.diag(i) + kernel.diag(j) - 2.0 * Ki[j];
            if (quad <= 0.0) quad = kTau;
            const double delta = (G[i] - G[j]) / quad;
            const double sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if (sum > C) {
                if (alpha[i] > C) {
                    alpha[i] = C;
                    alpha[j] = sum - C;
                }
            } else if (alpha[j] < 0.0) {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if (sum > C) {
                if (alpha[j] > C) {
                    alpha[j] = C;
                    alpha[i] = sum - C;
                }
            } else if (alpha[i] < 0.0) {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        const double di = alpha[i] - old_i;
        const double dj = alpha[j] - old_j;
        for (std::size_t t = 0; t < n; ++t)
            G[t] += y[t] * (y[i] * Ki[t] * di + y[j] * Kj[t] * dj);
    }

    // Bias from free vectors, or the midpoint of the feasible interval.
    double ub = std::numeric_limits<double>::infinity();
    double lb = -std::numeric_limits<double>::infinity();
    double sum_free = 0.0;
    std::size_t n_free = 0;
    for (std::size_t t = 0; t < n; ++t) {
        const double yg = y[t] * G[t];
        if (upper(t)) {
            if (y[t] == -1) ub = std::min(ub, yg);
            else lb = std::max(lb, yg);
        } else if (lower(t)) {
            if (y[t] == 1) ub = std::min(ub, yg);
            else lb = std::max(lb, yg);
        } else {
            ++n_free;
            sum_free += yg;
        }
    }
    const double rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : 0.5 * (ub + lb);
    sol.bias = -rho;
    return sol;
}

double max_kkt_violation(KernelCache& kernel, std::span<const int> y, const BinarySolution& sol, double C) {
    const std::size_t n = kernel.size();
    std::vector<double> f(n, sol.bias);
    for (std::size_t j = 0; j < n; ++j) {
        if (sol.alpha[j] == 0.0) continue;
        const auto Kj = kernel.row(j);
        for (std::size_t t = 0; t < n; ++t) f[t] += sol.alpha[j] * y[j] * Kj[t];
    }
    double worst = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        const double m = y[t] * f[t];
        double v = 0.0;
        if (sol.alpha[t] <= 0.0) v = std::max(0.0, 1.0 - m);
        else if (sol.alpha[t] >= C) v = std::max(0.0, m - 1.0);
        else v = std::abs(m - 1.0);
        worst = std::max(worst, v);
    }
    return worst;
}

Vector SvmModel::decision_values(std::span<const double> x) const {
    if (x.size() != static_cast<std::size_t>(support_vectors.cols())) throw ShapeError("feature length mismatch");
    const Eigen::Map<const RowVector> xv(x.data(), static_cast<Eigen::Index>(x.size()));
    Vector k(support_vectors.rows());
    for (Eigen::Index i = 0; i < support_vectors.rows(); ++i)
        k[i] = std::exp(-gamma * (support_vectors.row(i) - xv).squaredNorm());
    Vector out(static_cast<Eigen::Index>(machines.size()));
    for (std::size_t c = 0; c < machines.size(); ++c) {
        const auto& mc = machines[c];
        double f = mc.bias;
        for (std::size_t s = 0; s < mc.sv.size(); ++s) f += mc.coef[s] * k[static_cast<Eigen::Index>(mc.sv[s])];
        out[static_cast<Eigen::Index>(c)] = f;
    }
    return out;
}

int SvmModel::predict(std::span<const double> x) const {
    const Vector d = decision_values(x);
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < d.size(); ++c)
        if (d[c] > d[best]) best = c;
    return classes[static_cast<std::size_t>(best)];
}

SvmModel svm_train(const FeatureMatrix& f, const SvmParams& params, std::vector<std::string>* warnings) {
    if (f.labels.size() != f.size()) throw ShapeError("feature rows and labels differ in count");
    if (!(params.C > 0.0)) throw ArgumentError("SVM box constraint C must be positive");
    if (!(params.gamma > 0.0)) throw ArgumentError("kernel gamma must be positive");
    const std::set<int> distinct(f.labels.begin(), f.labels.end());
    if (distinct.size() < 2) throw ArgumentError("SVM training needs at least two classes");

    SvmModel model;
    model.C = params.C;
    model.gamma = params.gamma;
    model.classes.assign(distinct.begin(), distinct.end());
    // Two classes still train one machine per class so prediction stays argmax.
    const std::size_t M = model.classes.size();
    std::vector<BinarySolution> solutions(M);
    std::vector<double> violations(M, 0.0);
    std::vector<std::vector<int>> ys(M, std::vector<int>(f.size()));
    for (std::size_t c = 0; c < M; ++c)
        for (std::size_t i = 0; i < f.size(); ++i) ys[c][i] = f.labels[i] == model.classes[c] ? 1 : -1;

    const auto run = [&](std::size_t c, KernelCache& cache) {
        solutions[c] = solve_binary(cache, ys[c], params.C, params.tol, params.max_iter);
        violations[c] = solutions[c].converged ? max_kkt_violation(cache, ys[c], solutions[c], params.C) : 0.0;
    };
    if (thread_count() <= 1) {
        KernelCache cache(f.rows, params.gamma, params.cache_rows);
        for (std::size_t c = 0; c < M; ++c) run(c, cache);
    } else {
        parallel_for(M, [&](std::size_t c) {
            KernelCache cache(f.rows, params.gamma, params.cache_rows);
            run(c, cache);
        });
    }

    std::map<std::size_t, std::size_t> sv_slot;
    for (const auto& s : solutions)
        for (std::size_t i = 0; i < s.alpha.size(); ++i)
            if (s.alpha[i] > 0.0) sv_slot.emplace(i, 0);
    model.support_vectors.resize(static_cast<Eigen::Index>(sv_slot.size()), f.rows.cols());
    std::size_t next = 0;
    for (auto& [row, slot] : sv_slot) {
        slot = next;
        model.support_vectors.row(static_cast<Eigen::Index>(next++)) = f.rows.row(static_cast<Eigen::Index>(row));
    }
    for (std::size_t c = 0; c < M; ++c) {
        BinaryMachine mc;
        mc.positive_class = model.classes[c];
        mc.bias = solutions[c].bias;
        mc.iterations = solutions[c].iterations;
        mc.converged = solutions[c].converged;
        mc.kkt_violation = violations[c];
        for (std::size_t i = 0; i < f.size(); ++i) {
            if (solutions[c].alpha[i] > 0.0) {
                mc.sv.push_back(sv_slot.at(i));
                mc.coef.push_back(solutions[c].alpha[i] * ys[c][i]);
            }
        }
        if (!mc.converged && warnings)
            warnings->push_back("SVM machine for class " + std::to_string(mc.positive_class) +
                                " stopped at the iteration limit before reaching tolerance");
        model.machines.push_back(std::move(mc));
    }
    return model;
}

Prediction svm_predict(const SvmModel& m, const FeatureMatrix& f) {
    if (f.size() > 0 && f.dim() != static_cast<std::size_t>(m.support_vectors.cols()))
        throw ShapeError("feature length does not match the SVM model");
    Prediction p;
    p.labels.resize(f.size());
    parallel_for(f.size(), [&](std::size_t i) {
        const auto row = f.rows.row(static_cast<Eigen::Index>(i));
        p.labels[i] = m.predict({row.data(), static_cast<std::size_t>(row.size())});
    });
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < f.size(); ++i)
        if (i < f.labels.size() && p.labels[i] != f.labels[i]) ++wrong;
    p.error_rate = f.size() == 0 ? 0.0 : static_cast<double>(wrong) / static_cast<double>(f.size());
    return p;
}

}  // namespace thetarbm
