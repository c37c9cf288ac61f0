#include "thetarbm/rbm.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "thetarbm/error.hpp"

namespace thetarbm {

const char* to_string(UnitType t) {
    return t == UnitType::bernoulli ? "bernoulli" : "gaussian";
}

const char* to_string(ModelKind k) {
    switch (k) {
        case ModelKind::theta: return "theta";
        case ModelKind::rbm: return "rbm";
        case ModelKind::orbm: return "orbm";
    }
    return "?";
}

UnitType parse_unit_type(std::string_view s) {
    if (s == "bernoulli") return UnitType::bernoulli;
    if (s == "gaussian") return UnitType::gaussian;
    throw ArgumentError("unknown unit type '" + std::string(s) + "'");
}

ModelKind parse_model_kind(std::string_view s) {
    if (s == "theta") return ModelKind::theta;
    if (s == "rbm") return ModelKind::rbm;
    if (s == "orbm") return ModelKind::orbm;
    throw ArgumentError("unknown model kind '" + std::string(s) + "'");
}

ThetaRbmModel ThetaRbmModel::zeros(std::size_t H, int side, std::vector<double> angles, UnitType unit_type) {
    ThetaRbmModel m;
    const auto V = static_cast<Eigen::Index>(side) * side;
    m.W.assign(angles.size(), Matrix::Zero(static_cast<Eigen::Index>(H), V));
    m.b = Vector::Zero(static_cast<Eigen::Index>(H));
    m.c = Vector::Zero(V);
    m.unit_type = unit_type;
    m.side = side;
    m.angles = std::move(angles);
    return m;
}

bool ThetaRbmModel::all_finite() const {
    return std::all_of(W.begin(), W.end(), [](const Matrix& w) { return w.allFinite(); }) && b.allFinite() &&
           c.allFinite();
}

void ThetaRbmModel::validate() const {
    if (W.empty()) throw ShapeError("model has no slices");
    if (W.size() != angles.size()) throw ShapeError("slice count does not match angle count");
    if (side <= 0 || static_cast<std::size_t>(side) * side != visible())
        throw ShapeError("visible size is not side^2");
    for (const auto& w : W)
        if (static_cast<std::size_t>(w.rows()) != hidden() || static_cast<std::size_t>(w.cols()) != visible())
            throw ShapeError("slice shape does not match H x V");
}

namespace {

const Matrix& slice_at(const ThetaRbmModel& m, int r_index) {
    if (r_index < 0 || static_cast<std::size_t>(r_index) >= m.slices())
        throw ArgumentError("rotation index " + std::to_string(r_index) + " outside 0.." +
                            std::to_string(m.slices() - 1));
    return m.W[static_cast<std::size_t>(r_index)];
}

void sigmoid_inplace(Matrix& x) {
    x = x.unaryExpr([](double v) { return sigmoid(v); });
}

void sample_bernoulli(Matrix& x, Rng& rng) {
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = uniform01(rng) < x(i, j) ? 1.0 : 0.0;
}

}  // namespace

Vector hidden_given_visible(const ThetaRbmModel& m, const Vector& v, int r_index) {
    const Matrix& w = slice_at(m, r_index);
    if (v.size() != w.cols()) throw ShapeError("visible vector length does not match model");
    return (m.b + w * v).unaryExpr([](double x) { return sigmoid(x); });
}

Vector visible_given_hidden(const ThetaRbmModel& m, const Vector& h, int r_index) {
    const Matrix& w = slice_at(m, r_index);
    if (h.size() != w.rows()) throw ShapeError("hidden vector length does not match model");
    Vector act = m.c + w.transpose() * h;
    if (m.unit_type == UnitType::bernoulli) act = act.unaryExpr([](double x) { return sigmoid(x); });
    return act;
}

double energy(const ThetaRbmModel& m, const Vector& v, const Vector& h, const Vector& r) {
    if (static_cast<std::size_t>(r.size()) != m.slices()) throw ShapeError("rotation layer length != S");
    double e = 0.0;
    const double quad = m.unit_type == UnitType::gaussian ? 0.5 * v.squaredNorm() : 0.0;
    for (std::size_t s = 0; s < m.slices(); ++s) {
        if (r[static_cast<Eigen::Index>(s)] == 0.0) continue;
        e += r[static_cast<Eigen::Index>(s)] * (-h.dot(m.W[s] * v) - m.b.dot(h) - m.c.dot(v) + quad);
    }
    return e;
}

double energy(const ThetaRbmModel& m, const Vector& v, const Vector& h, int r_index) {
    const Matrix& w = slice_at(m, r_index);
    double e = -v.dot(w.transpose() * h) - m.b.dot(h) - m.c.dot(v);
    if (m.unit_type == UnitType::gaussian) e += 0.5 * v.squaredNorm();
    return e;
}

double free_energy(const ThetaRbmModel& m, const Vector& v, int r_index) {
    const Matrix& w = slice_at(m, r_index);
    const Vector pre = m.b + w * v;
    double f = -m.c.dot(v);
    if (m.unit_type == UnitType::gaussian) f += 0.5 * v.squaredNorm();
    for (Eigen::Index j = 0; j < pre.size(); ++j) f -= softplus(pre[j]);
    return f;
}

JointDistribution enumerate_oracle(const ThetaRbmModel& m, int r_index) {
    if (m.unit_type != UnitType::bernoulli) throw ArgumentError("enumeration oracle needs Bernoulli units");
    const std::size_t V = m.visible();
    const std::size_t H = m.hidden();
    if (V + H > kMaxEnumerationUnits)
        throw ArgumentError("enumeration needs H + V <= " + std::to_string(kMaxEnumerationUnits) + ", got " +
                            std::to_string(V + H));
    slice_at(m, r_index);

    JointDistribution d;
    d.V = V;
    d.H = H;
    const std::size_t states = std::size_t{1} << (V + H);
    d.prob.resize(states);
    Vector v(static_cast<Eigen::Index>(V));
    Vector h(static_cast<Eigen::Index>(H));
    double max_log = -std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < states; ++s) {
        for (std::size_t k = 0; k < V; ++k) v[static_cast<Eigen::Index>(k)] = static_cast<double>((s >> k) & 1U);
        for (std::size_t j = 0; j < H; ++j) h[static_cast<Eigen::Index>(j)] = static_cast<double>((s >> (V + j)) & 1U);
        d.prob[s] = -energy(m, v, h, r_index);
        max_log = std::max(max_log, d.prob[s]);
    }
    double z = 0.0;
    for (auto& p : d.prob) {
        p = std::exp(p - max_log);
        z += p;
    }
    for (auto& p : d.prob) p /= z;
    return d;
}

double JointDistribution::p_hidden_given_visible(std::uint32_t v_bits, std::size_t j) const {
    double num = 0.0;
    double den = 0.0;
    for (std::uint32_t h = 0; h < (1U << H); ++h) {
        const double p = prob[v_bits | (static_cast<std::size_t>(h) << V)];
        den += p;
        if ((h >> j) & 1U) num += p;
    }
    return num / den;
}

double JointDistribution::p_visible_given_hidden(std::uint32_t h_bits, std::size_t k) const {
    double num = 0.0;
    double den = 0.0;
    for (std::uint32_t v = 0; v < (1U << V); ++v) {
        const double p = prob[v | (static_cast<std::size_t>(h_bits) << V)];
        den += p;
        if ((v >> k) & 1U) num += p;
    }
    return num / den;
}

double JointDistribution::marginal_visible(std::uint32_t v_bits) const {
    double total = 0.0;
    for (std::uint32_t h = 0; h < (1U << H); ++h) total += prob[v_bits | (static_cast<std::size_t>(h) << V)];
    return total;
}

CdGradient cd_gradient(const ThetaRbmModel& m, const Batch& batch, const CdOptions& opts, Rng& rng) {
    const auto n = static_cast<std::size_t>(batch.v.rows());
    if (n == 0) throw ArgumentError("cd_gradient needs a nonempty batch");
    if (batch.slice.size() != n) throw ShapeError("one slice index per batch row is required");
    if (static_cast<std::size_t>(batch.v.cols()) != m.visible()) throw ShapeError("batch width does not match model");
    if (opts.k < 1) throw ArgumentError("CD needs k >= 1");

    const auto H = static_cast<Eigen::Index>(m.hidden());
    const auto V = static_cast<Eigen::Index>(m.visible());
    CdGradient g;
    g.dW.assign(m.slices(), Matrix::Zero(H, V));
    g.db = Vector::Zero(H);
    g.dc = Vector::Zero(V);
    g.realized.assign(m.slices(), false);
    g.mean_hidden = Vector::Zero(H);

    std::vector<std::vector<Eigen::Index>> groups(m.slices());
    for (std::size_t i = 0; i < n; ++i) {
        const int s = batch.slice[i];
        if (s < 0 || static_cast<std::size_t>(s) >= m.slices()) throw ArgumentError("batch slice index out of range");
        groups[static_cast<std::size_t>(s)].push_back(static_cast<Eigen::Index>(i));
    }

    const double inv_n = 1.0 / static_cast<double>(n);
    double recon = 0.0;
    std::normal_distribution<double> noise(0.0, 1.0);
    for (std::size_t s = 0; s < m.slices(); ++s) {
        const auto& rows = groups[s];
        if (rows.empty()) continue;
        g.realized[s] = true;
        const Matrix& w = m.W[s];
        const auto gsize = static_cast<Eigen::Index>(rows.size());

        Matrix v0(gsize, V);
        for (Eigen::Index i = 0; i < gsize; ++i) v0.row(i) = batch.v.row(rows[static_cast<std::size_t>(i)]);

        Matrix h0 = (v0 * w.transpose()).rowwise() + m.b.transpose();
        sigmoid_inplace(h0);

        Matrix h_state = h0;
        sample_bernoulli(h_state, rng);
        Matrix vk;
        Matrix hk;
        for (int step = 1; step <= opts.k; ++step) {
            vk = (h_state * w).rowwise() + m.c.transpose();
            if (m.unit_type == UnitType::bernoulli) {
                sigmoid_inplace(vk);
                if (opts.sample_visible) sample_bernoulli(vk, rng);
            } else if (opts.sample_visible) {
                for (Eigen::Index i = 0; i < vk.rows(); ++i)
                    for (Eigen::Index k = 0; k < vk.cols(); ++k) vk(i, k) += noise(rng);
            }
            hk = (vk * w.transpose()).rowwise() + m.b.transpose();
            sigmoid_inplace(hk);
            if (step < opts.k) {
                h_state = hk;
                sample_bernoulli(h_state, rng);
            }
        }

        g.dW[s].noalias() = h0.transpose() * v0;
        g.dW[s].noalias() -= hk.transpose() * vk;
        g.dW[s] *= inv_n;
        g.db += (h0 - hk).colwise().sum().transpose() * inv_n;
        g.dc += (v0 - vk).colwise().sum().transpose() * inv_n;
        g.mean_hidden += h0.colwise().sum().transpose() * inv_n;
        recon += (v0 - vk).squaredNorm();
    }
    g.recon_error = recon * inv_n / static_cast<double>(V);
    return g;
}

}  // namespace thetarbm
