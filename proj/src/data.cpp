#include "slacc/data.hpp"

#include "slacc/errors.hpp"
#include "slacc/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace slacc::data {

namespace {

struct BeReader {
    std::ifstream in;
    std::size_t offset = 0;
    std::string path;

    explicit BeReader(const std::string& p) : in(p, std::ios::binary), path(p) {
        if (!in) throw FormatError(0, "cannot open " + p);
    }

    std::uint32_t u32(const char* what) {
        unsigned char b[4];
        in.read(reinterpret_cast<char*>(b), 4);
        if (in.gcount() != 4)
            throw FormatError(offset, std::string("truncated ") + what + " in " + path);
        offset += 4;
        return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
               (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
    }

    void bytes(unsigned char* dst, std::size_t n, const char* what) {
        in.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in.gcount()) != n)
            throw FormatError(offset + static_cast<std::size_t>(std::max<std::streamsize>(in.gcount(), 0)),
                              std::string("truncated ") + what + " in " + path);
        offset += n;
    }
};

} // namespace

Tensor Dataset::sample(std::size_t i) const {
    const std::size_t c = images.dim(1), h = images.dim(2), w = images.dim(3);
    const std::size_t n = c * h * w;
    std::vector<double> buf(n);
    std::copy_n(images.data().begin() + i * n, n, buf.begin());
    return Tensor::from({1, c, h, w}, std::move(buf));
}

std::pair<Tensor, std::vector<int>> Dataset::batch(const std::vector<std::size_t>& indices) const {
    if (indices.empty()) throw std::invalid_argument("batch needs at least one index");
    const std::size_t c = images.dim(1), h = images.dim(2), w = images.dim(3);
    const std::size_t n = c * h * w;
    std::vector<double> buf(indices.size() * n);
    std::vector<int> y(indices.size());
    for (std::size_t k = 0; k < indices.size(); ++k) {
        const std::size_t i = indices[k];
        if (i >= size()) throw std::out_of_range("sample index out of range");
        std::copy_n(images.data().begin() + i * n, n, buf.begin() + k * n);
        y[k] = labels[i];
    }
    return {Tensor::from({indices.size(), c, h, w}, std::move(buf)), std::move(y)};
}

std::size_t Partition::total() const {
    std::size_t t = 0;
    for (const auto& d : device_indices) t += d.size();
    return t;
}

Dataset load_mnist_idx(const std::string& images_path, const std::string& labels_path) {
    BeReader img(images_path);
    const std::uint32_t magic = img.u32("image magic");
    if (magic != 0x00000803u) throw FormatError(0, "bad image magic in " + images_path);
    const std::uint32_t m = img.u32("image count");
    const std::size_t count_at = 4;
    if (m == 0) throw FormatError(count_at, "empty image file " + images_path);
    const std::uint32_t rows = img.u32("row count");
    const std::uint32_t cols = img.u32("column count");
    if (rows == 0 || cols == 0) throw FormatError(8, "zero image dimension in " + images_path);
    const std::size_t pixels = static_cast<std::size_t>(m) * rows * cols;

    std::vector<unsigned char> raw(pixels);
    img.bytes(raw.data(), pixels, "pixel data");
    // A correct file ends exactly at the payload.
    char extra;
    if (img.in.read(&extra, 1); img.in.gcount() != 0)
        throw FormatError(img.offset, "trailing bytes in " + images_path);

    BeReader lab(labels_path);
    const std::uint32_t lmagic = lab.u32("label magic");
    if (lmagic != 0x00000801u) throw FormatError(0, "bad label magic in " + labels_path);
    const std::uint32_t lm = lab.u32("label count");
    if (lm != m)
        throw FormatError(4, "label count " + std::to_string(lm) + " does not match image count " +
                                 std::to_string(m));
    std::vector<unsigned char> lraw(lm);
    lab.bytes(lraw.data(), lm, "label data");
    if (lab.in.read(&extra, 1); lab.in.gcount() != 0)
        throw FormatError(lab.offset, "trailing bytes in " + labels_path);

    Dataset ds;
    ds.num_classes = 10;
    ds.labels.resize(lm);
    for (std::size_t i = 0; i < lm; ++i) {
        if (lraw[i] > 9) throw FormatError(8 + i, "label out of range in " + labels_path);
        ds.labels[i] = lraw[i];
    }
    std::vector<double> px(pixels);
    for (std::size_t i = 0; i < pixels; ++i) px[i] = static_cast<double>(raw[i]) / 255.0;
    ds.images = Tensor::from({m, 1, rows, cols}, std::move(px));
    return ds;
}

Dataset synth_blobs(int num_classes, std::size_t per_class, double noise_sigma,
                    std::uint64_t seed) {
    if (num_classes < 2) throw std::invalid_argument("synth_blobs needs at least two classes");
    if (per_class == 0) throw std::invalid_argument("synth_blobs needs per_class >= 1");
    if (noise_sigma < 0.0) throw std::invalid_argument("noise_sigma must be non-negative");
    constexpr std::size_t H = 28, W = 28;

    // Fixed templates: one Gaussian bump per class, centers spread on a
    // circle so every pair of classes is separable.
    std::vector<std::vector<double>> templates(static_cast<std::size_t>(num_classes),
                                               std::vector<double>(H * W));
    for (int k = 0; k < num_classes; ++k) {
        const double ang = 2.0 * 3.14159265358979323846 * k / num_classes;
        const double cy = H / 2.0 + 8.0 * std::sin(ang);
        const double cx = W / 2.0 + 8.0 * std::cos(ang);
        for (std::size_t y = 0; y < H; ++y)
            for (std::size_t x = 0; x < W; ++x) {
                const double dy = (static_cast<double>(y) + 0.5) - cy;
                const double dx = (static_cast<double>(x) + 0.5) - cx;
                templates[static_cast<std::size_t>(k)][y * W + x] =
                    std::exp(-(dy * dy + dx * dx) / (2.0 * 3.0 * 3.0));
            }
    }

    const std::size_t total = static_cast<std::size_t>(num_classes) * per_class;
    std::vector<double> px(total * H * W);
    std::vector<int> labels(total);
    SplitMix64 rng(mix_seed(seed, 0x73796e7468ULL)); // "synth"
    std::size_t at = 0;
    for (int k = 0; k < num_classes; ++k) {
        for (std::size_t i = 0; i < per_class; ++i) {
            labels[at] = k;
            double* dst = px.data() + at * H * W;
            const auto& t = templates[static_cast<std::size_t>(k)];
            for (std::size_t p = 0; p < H * W; ++p) {
                const double v = t[p] + noise_sigma * rng.next_gaussian();
                dst[p] = std::clamp(v, 0.0, 1.0);
            }
            ++at;
        }
    }

    Dataset ds;
    ds.num_classes = num_classes;
    ds.labels = std::move(labels);
    ds.images = Tensor::from({total, 1, H, W}, std::move(px));
    return ds;
}

Partition partition_iid(std::size_t total, std::size_t num_devices, std::uint64_t seed) {
    if (num_devices == 0) throw std::invalid_argument("need at least one device");
    if (total < num_devices)
        throw std::invalid_argument("fewer samples than devices; every shard must be non-empty");
    std::vector<std::size_t> order(total);
    std::iota(order.begin(), order.end(), std::size_t{0});
    SplitMix64 rng(mix_seed(seed, 0x696964ULL)); // "iid"
    rng.shuffle(std::span<std::size_t>(order));

    Partition p;
    p.device_indices.resize(num_devices);
    const std::size_t base = total / num_devices;
    const std::size_t extra = total % num_devices;
    std::size_t at = 0;
    for (std::size_t d = 0; d < num_devices; ++d) {
        const std::size_t take = base + (d < extra ? 1 : 0);
        p.device_indices[d].assign(order.begin() + at, order.begin() + at + take);
        at += take;
    }
    return p;
}

Partition partition_dirichlet(const std::vector<int>& labels, std::size_t num_devices,
                              double beta, std::uint64_t seed) {
    if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
    if (num_devices == 0) throw std::invalid_argument("need at least one device");
    if (labels.size() < num_devices)
        throw std::invalid_argument("fewer samples than devices; every shard must be non-empty");

    int max_label = 0;
    for (int y : labels) {
        if (y < 0) throw std::invalid_argument("negative label");
        max_label = std::max(max_label, y);
    }
    const std::size_t num_classes = static_cast<std::size_t>(max_label) + 1;

    std::vector<std::vector<std::size_t>> by_class(num_classes);
    for (std::size_t i = 0; i < labels.size(); ++i)
        by_class[static_cast<std::size_t>(labels[i])].push_back(i);

    SplitMix64 rng(mix_seed(seed, 0x646972ULL)); // "dir"
    Partition p;
    p.device_indices.resize(num_devices);
    for (std::size_t c = 0; c < num_classes; ++c) {
        const auto& idx = by_class[c];
        if (idx.empty()) continue;
        const std::vector<double> prop = rng.next_dirichlet(num_devices, beta);

        // Largest-remainder rounding: every sample is assigned.
        std::vector<std::size_t> quota(num_devices);
        std::vector<std::pair<double, std::size_t>> frac(num_devices);
        std::size_t assigned = 0;
        for (std::size_t d = 0; d < num_devices; ++d) {
            const double want = prop[d] * static_cast<double>(idx.size());
            quota[d] = static_cast<std::size_t>(std::floor(want));
            frac[d] = {want - std::floor(want), d};
            assigned += quota[d];
        }
        std::sort(frac.begin(), frac.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;
        });
        for (std::size_t r = 0; r < idx.size() - assigned; ++r) ++quota[frac[r].second];

        std::size_t at = 0;
        for (std::size_t d = 0; d < num_devices; ++d) {
            p.device_indices[d].insert(p.device_indices[d].end(), idx.begin() + at,
                                       idx.begin() + at + quota[d]);
            at += quota[d];
        }
    }

    // Repair empties from the currently largest shard.
    for (std::size_t d = 0; d < num_devices; ++d) {
        while (p.device_indices[d].empty()) {
            std::size_t donor = 0;
            for (std::size_t e = 1; e < num_devices; ++e)
                if (p.device_indices[e].size() > p.device_indices[donor].size()) donor = e;
            if (p.device_indices[donor].size() <= 1)
                throw std::invalid_argument("cannot repair empty shard");
            p.device_indices[d].push_back(p.device_indices[donor].back());
            p.device_indices[donor].pop_back();
        }
    }
    return p;
}

Dataset take_subset(const Dataset& full, std::size_t count, std::uint64_t seed) {
    if (count == 0) throw std::invalid_argument("subset must keep at least one sample");
    count = std::min(count, full.size());
    std::vector<std::size_t> order(full.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    SplitMix64 rng(mix_seed(seed, 0x737562ULL)); // "sub"
    rng.shuffle(std::span<std::size_t>(order));
    order.resize(count);

    auto [images, labels] = full.batch(order);
    Dataset ds;
    ds.images = std::move(images);
    ds.labels = std::move(labels);
    ds.num_classes = full.num_classes;
    return ds;
}

} // namespace slacc::data
