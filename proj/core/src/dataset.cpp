#include "thetarbm/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "thetarbm/binary_io.hpp"
#include "thetarbm/error.hpp"
#include "thetarbm/random.hpp"

namespace thetarbm {

namespace {

constexpr std::uint32_t kIdxImageMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

std::uint32_t read_be32(const std::vector<std::uint8_t>& bytes, std::size_t offset, const std::string& what) {
    if (bytes.size() < offset + 4) throw FormatError(what + ": truncated IDX header");
    return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
           (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

int side_of(std::size_t V) {
    const auto s = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(V))));
    if (s == 0 || s * s != V) return 0;
    return static_cast<int>(s);
}

}  // namespace

void ImageDataset::validate() const {
    if (side <= 0 || static_cast<std::size_t>(side) * side != dim())
        throw ShapeError("image width " + std::to_string(dim()) + " is not side^2 for side " + std::to_string(side));
    if (labels.size() != size()) throw ShapeError("label count does not match image count");
    for (int l : labels)
        if (l < 0 || l > 9) throw ArgumentError("label out of range 0..9: " + std::to_string(l));
    if (!orientation.empty() && orientation.size() != size())
        throw ShapeError("orientation count does not match image count");
}

ImageDataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path) {
    const auto img = io::read_file(images_path);
    const auto lab = io::read_file(labels_path);
    const std::string iname = images_path.string();
    const std::string lname = labels_path.string();

    if (read_be32(img, 0, iname) != kIdxImageMagic) throw FormatError(iname + ": not an IDX image file (magic)");
    if (read_be32(lab, 0, lname) != kIdxLabelMagic) throw FormatError(lname + ": not an IDX label file (magic)");

    const std::size_t n = read_be32(img, 4, iname);
    const std::size_t rows = read_be32(img, 8, iname);
    const std::size_t cols = read_be32(img, 12, iname);
    const std::size_t n_labels = read_be32(lab, 4, lname);
    if (rows != cols || rows == 0) throw FormatError(iname + ": images are not square");
    if (n != n_labels)
        throw ConsistencyError("image count " + std::to_string(n) + " != label count " + std::to_string(n_labels));
    const std::size_t V = rows * cols;
    if (img.size() < 16 + n * V) throw FormatError(iname + ": truncated pixel payload");
    if (lab.size() < 8 + n) throw FormatError(lname + ": truncated label payload");

    ImageDataset ds;
    ds.side = static_cast<int>(rows);
    ds.images.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(V));
    ds.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < V; ++k)
            ds.images(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = img[16 + i * V + k] / 255.0;
        ds.labels[i] = lab[8 + i];
    }
    ds.validate();
    return ds;
}

ImageDataset load_amat(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path.string());

    std::vector<double> pixels;
    std::vector<int> labels;
    std::size_t width = 0;
    std::string line;
    std::vector<double> row;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        row.clear();
        const char* p = line.data();
        const char* end = p + line.size();
        while (p < end) {
            while (p < end && std::isspace(static_cast<unsigned char>(*p))) ++p;
            if (p == end) break;
            double v = 0.0;
            auto [next, ec] = std::from_chars(p, end, v);
            if (ec != std::errc() || (next < end && !std::isspace(static_cast<unsigned char>(*next))))
                throw ParseError(path.string() + ":" + std::to_string(line_no) + ": non-numeric token");
            row.push_back(v);
            p = next;
        }
        if (row.empty()) continue;
        if (width == 0) {
            width = row.size();
            if (width < 2 || side_of(width - 1) == 0)
                throw FormatError(path.string() + ": row length " + std::to_string(width) +
                                  " is not side^2 + 1");
        } else if (row.size() != width) {
            throw FormatError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                              std::to_string(width) + " numbers, got " + std::to_string(row.size()));
        }
        const double label = row.back();
        if (label != std::floor(label) || label < 0 || label > 9)
            throw FormatError(path.string() + ":" + std::to_string(line_no) + ": bad label");
        labels.push_back(static_cast<int>(label));
        for (std::size_t k = 0; k + 1 < width; ++k) pixels.push_back(std::clamp(row[k], 0.0, 1.0));
    }

    ImageDataset ds;
    const std::size_t V = width == 0 ? 0 : width - 1;
    ds.side = side_of(V);
    ds.labels = std::move(labels);
    ds.images = Eigen::Map<const Matrix>(pixels.data(), static_cast<Eigen::Index>(ds.labels.size()),
                                         static_cast<Eigen::Index>(V));
    if (ds.labels.empty()) throw FormatError(path.string() + ": no rows");
    return ds;
}

void save_amat(const std::filesystem::path& path, const ImageDataset& ds) {
    std::ostringstream out;
    out.precision(17);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        for (std::size_t k = 0; k < ds.dim(); ++k)
            out << ds.images(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) << ' ';
        out << ds.labels[i] << '\n';
    }
    io::write_text_atomic(path, out.str());
}

const Vector& NormalizationStats::mean_for(int group) const {
    if (scope == NormScope::per_orientation && group >= 0 && static_cast<std::size_t>(group) < group_mean.size())
        return group_mean[static_cast<std::size_t>(group)];
    return mean;
}

const Vector& NormalizationStats::std_for(int group) const {
    if (scope == NormScope::per_orientation && group >= 0 && static_cast<std::size_t>(group) < group_std.size())
        return group_std[static_cast<std::size_t>(group)];
    return stddev;
}

namespace {

// Population mean and standard deviation of the selected rows.
void column_stats(const Matrix& x, const std::vector<std::size_t>& rows, Vector& mean, Vector& sd) {
    const auto V = x.cols();
    mean = Vector::Zero(V);
    sd = Vector::Zero(V);
    if (rows.empty()) return;
    for (auto i : rows) mean += x.row(static_cast<Eigen::Index>(i)).transpose();
    mean /= static_cast<double>(rows.size());
    for (auto i : rows) sd += (x.row(static_cast<Eigen::Index>(i)).transpose() - mean).array().square().matrix();
    sd = (sd / static_cast<double>(rows.size())).array().sqrt();
}

}  // namespace

NormalizationStats compute_normalization(const ImageDataset& train, NormScope scope, int group_count,
                                         std::vector<std::string>* warnings) {
    NormalizationStats st;
    st.scope = scope;
    std::vector<std::size_t> all(train.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    column_stats(train.images, all, st.mean, st.stddev);
    if (scope == NormScope::whole) return st;

    if (!train.has_orientation())
        throw ArgumentError("per-orientation normalization needs orientation indices on the training split");
    int groups = group_count;
    for (int r : train.orientation) groups = std::max(groups, r + 1);
    std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(groups));
    for (std::size_t i = 0; i < train.size(); ++i) members[static_cast<std::size_t>(train.orientation[i])].push_back(i);
    st.group_mean.resize(members.size());
    st.group_std.resize(members.size());
    for (std::size_t g = 0; g < members.size(); ++g) {
        if (members[g].size() < 2) {
            if (warnings)
                warnings->push_back("orientation group " + std::to_string(g) + " has " +
                                    std::to_string(members[g].size()) +
                                    " training samples; using whole-dataset statistics");
            st.group_mean[g] = st.mean;
            st.group_std[g] = st.stddev;
        } else {
            column_stats(train.images, members[g], st.group_mean[g], st.group_std[g]);
        }
    }
    return st;
}

Vector normalize_image(std::span<const double> raw, const NormalizationStats& stats, int group) {
    const Vector& mu = stats.mean_for(group);
    const Vector& sd = stats.std_for(group);
    if (raw.size() != static_cast<std::size_t>(mu.size())) throw ShapeError("image size does not match statistics");
    Vector out(mu.size());
    for (Eigen::Index k = 0; k < mu.size(); ++k)
        out[k] = (raw[static_cast<std::size_t>(k)] - mu[k]) / NormalizationStats::divisor(sd[k]);
    return out;
}

ImageDataset apply_normalization(const ImageDataset& ds, const NormalizationStats& stats) {
    if (stats.scope == NormScope::per_orientation && !ds.has_orientation())
        throw ArgumentError("per-orientation normalization needs orientation indices");
    ImageDataset out = ds;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const int g = ds.has_orientation() ? ds.orientation[i] : -1;
        const auto row = ds.images.row(static_cast<Eigen::Index>(i));
        out.images.row(static_cast<Eigen::Index>(i)) =
            normalize_image({row.data(), static_cast<std::size_t>(row.size())}, stats, g).transpose();
    }
    return out;
}

ImageDataset denormalize(const ImageDataset& ds, const NormalizationStats& stats) {
    ImageDataset out = ds;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const int g = ds.has_orientation() ? ds.orientation[i] : -1;
        const Vector& mu = stats.mean_for(g);
        const Vector& sd = stats.std_for(g);
        for (Eigen::Index k = 0; k < mu.size(); ++k) {
            auto& v = out.images(static_cast<Eigen::Index>(i), k);
            v = v * NormalizationStats::divisor(sd[k]) + mu[k];
        }
    }
    return out;
}

NormalizeResult normalize(const ImageDataset& train, const ImageDataset& test, NormScope scope, int group_count) {
    if (scope == NormScope::per_orientation && (!train.has_orientation() || !test.has_orientation()))
        throw ArgumentError("per-orientation normalization needs orientation indices on both splits");
    if (train.dim() != test.dim()) throw ShapeError("train and test image sizes differ");
    NormalizeResult r;
    r.stats = compute_normalization(train, scope, group_count, &r.warnings);
    r.train = apply_normalization(train, r.stats);
    r.test = apply_normalization(test, r.stats);
    return r;
}

void save_normalization(const std::filesystem::path& path, const NormalizationStats& stats) {
    io::ByteWriter w;
    w.raw("TNRM");
    w.u32(1);
    w.u8(stats.scope == NormScope::whole ? 0 : 1);
    w.u64(static_cast<std::uint64_t>(stats.mean.size()));
    w.u64(stats.group_mean.size());
    w.f64s({stats.mean.data(), static_cast<std::size_t>(stats.mean.size())});
    w.f64s({stats.stddev.data(), static_cast<std::size_t>(stats.stddev.size())});
    for (std::size_t g = 0; g < stats.group_mean.size(); ++g) {
        w.f64s({stats.group_mean[g].data(), static_cast<std::size_t>(stats.group_mean[g].size())});
        w.f64s({stats.group_std[g].data(), static_cast<std::size_t>(stats.group_std[g].size())});
    }
    io::write_file_atomic(path, w.bytes());
}

NormalizationStats load_normalization(const std::filesystem::path& path) {
    io::ByteReader r(io::read_file(path));
    if (r.raw(4) != "TNRM") throw FormatError(path.string() + ": not a normalization file");
    if (r.u32() != 1) throw FormatError(path.string() + ": unsupported normalization version");
    NormalizationStats st;
    st.scope = r.u8() == 0 ? NormScope::whole : NormScope::per_orientation;
    const auto V = static_cast<Eigen::Index>(r.u64());
    const auto G = static_cast<std::size_t>(r.u64());
    st.mean.resize(V);
    st.stddev.resize(V);
    r.f64s({st.mean.data(), static_cast<std::size_t>(V)});
    r.f64s({st.stddev.data(), static_cast<std::size_t>(V)});
    st.group_mean.resize(G);
    st.group_std.resize(G);
    for (std::size_t g = 0; g < G; ++g) {
        st.group_mean[g].resize(V);
        st.group_std[g].resize(V);
        r.f64s({st.group_mean[g].data(), static_cast<std::size_t>(V)});
        r.f64s({st.group_std[g].data(), static_cast<std::size_t>(V)});
    }
    return st;
}

ImageDataset select_rows(const ImageDataset& ds, std::span<const std::size_t> indices) {
    ImageDataset out;
    out.side = ds.side;
    out.images.resize(static_cast<Eigen::Index>(indices.size()), ds.images.cols());
    out.labels.reserve(indices.size());
    if (ds.has_orientation()) out.orientation.reserve(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const auto src = indices[i];
        if (src >= ds.size()) throw ArgumentError("row index out of range");
        out.images.row(static_cast<Eigen::Index>(i)) = ds.images.row(static_cast<Eigen::Index>(src));
        out.labels.push_back(ds.labels[src]);
        if (ds.has_orientation()) out.orientation.push_back(ds.orientation[src]);
    }
    return out;
}

ImageDataset subsample(const ImageDataset& ds, std::size_t n, std::uint64_t seed) {
    if (n > ds.size())
        throw ArgumentError("subsample size " + std::to_string(n) + " exceeds dataset size " + std::to_string(ds.size()));
    std::vector<std::size_t> idx(ds.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Rng rng(seed);
    // Partial Fisher-Yates; the first n slots are the sample.
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t span = ds.size() - i;
        const auto j = i + std::min(span - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(span)));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(n);
    return select_rows(ds, idx);
}

}  // namespace thetarbm
