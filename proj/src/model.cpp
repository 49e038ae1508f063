#include "slacc/model.hpp"

#include "slacc/errors.hpp"
#include "slacc/parallel.hpp"
#include "slacc/rng.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace slacc::model {

namespace {

void he_uniform(Tensor& w, std::size_t fan_in, SplitMix64& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (double& v : w.data()) v = rng.uniform(-limit, limit);
}

/// Clip a kernel offset d to the rows/columns where position + d stays inside
/// [0, n); returns the [lo, hi) range for the unshifted index.
struct ShiftRange {
    std::size_t lo;
    std::size_t hi;
};

ShiftRange shift_range(long d, std::size_t n) {
    const long lo = std::max(0L, -d);
    const long hi = std::min(static_cast<long>(n), static_cast<long>(n) - d);
    return {static_cast<std::size_t>(lo), static_cast<std::size_t>(std::max(lo, hi))};
}

/// out[b,co,:,:] += conv(in[b,:,:,:], w[co]) with zero padding. One output
/// plane per call so callers can parallelize without write races. Each kernel
/// tap is applied as a shifted row sweep, which keeps the inner loop
/// branch-free; the accumulation order per output pixel is still
/// ci-major then kernel-row then kernel-column.
void conv_plane_forward(std::span<const double> in, std::size_t ci_count, std::size_t h,
                        std::size_t w, std::span<const double> weight, double bias,
                        std::size_t k, std::span<double> out) {
    const long pad = static_cast<long>(k / 2);
    std::fill(out.begin(), out.end(), bias);
    for (std::size_t ci = 0; ci < ci_count; ++ci) {
        const double* plane = in.data() + ci * h * w;
        const double* kern = weight.data() + ci * k * k;
        for (std::size_t ky = 0; ky < k; ++ky) {
            const long dy = static_cast<long>(ky) - pad;
            const ShiftRange ys = shift_range(dy, h);
            for (std::size_t kx = 0; kx < k; ++kx) {
                const long dx = static_cast<long>(kx) - pad;
                const ShiftRange xs = shift_range(dx, w);
                const double wv = kern[ky * k + kx];
                for (std::size_t y = ys.lo; y < ys.hi; ++y) {
                    double* orow = out.data() + y * w;
                    const double* irow =
                        plane + (static_cast<long>(y) + dy) * static_cast<long>(w) + dx;
                    for (std::size_t x = xs.lo; x < xs.hi; ++x) orow[x] += wv * irow[x];
                }
            }
        }
    }
}

/// z = conv(in) for a whole batch; out shape [B, C_out, H, W].
Tensor conv_forward(const Conv2d& conv, const Tensor& in) {
    const std::size_t B = in.dim(0), H = in.dim(2), W = in.dim(3);
    if (in.dim(1) != conv.in_channels)
        throw std::invalid_argument("conv input channel mismatch");
    Tensor out({B, conv.out_channels, H, W});
    const std::size_t plane = H * W;
    const std::size_t in_stride = conv.in_channels * plane;
    const std::size_t ksz = conv.ksize * conv.ksize * conv.in_channels;
    parallel_for(0, B * conv.out_channels, [&](std::size_t i) {
        const std::size_t b = i / conv.out_channels;
        const std::size_t co = i % conv.out_channels;
        conv_plane_forward(in.data().subspan(b * in_stride, in_stride), conv.in_channels, H, W,
                           conv.weight.data().subspan(co * ksz, ksz), conv.bias.data()[co],
                           conv.ksize, out.data().subspan((b * conv.out_channels + co) * plane, plane));
    });
    return out;
}

struct ConvGrads {
    Tensor dweight;
    Tensor dbias;
    Tensor dinput;
};

/// Gradients of a conv layer. Ownership is arranged so every parallel task
/// writes a disjoint slice: dweight/dbias sum over the batch inside one task
/// per output channel, dinput is one task per (sample, input channel).
ConvGrads conv_backward(const Conv2d& conv, const Tensor& in, const Tensor& dout) {
    const std::size_t B = in.dim(0), H = in.dim(2), W = in.dim(3);
    const std::size_t plane = H * W;
    const long pad = static_cast<long>(conv.ksize / 2);
    const std::size_t k = conv.ksize;
    ConvGrads g{Tensor(conv.weight.shape()), Tensor(conv.bias.shape()), Tensor(in.shape())};

    parallel_for(0, conv.out_channels, [&](std::size_t co) {
        double db = 0.0;
        std::span<double> dw = g.dweight.data().subspan(co * conv.in_channels * k * k,
                                                        conv.in_channels * k * k);
        for (std::size_t b = 0; b < B; ++b) {
            const double* dplane = dout.data().data() + (b * conv.out_channels + co) * plane;
            for (std::size_t i = 0; i < plane; ++i) db += dplane[i];
            for (std::size_t ci = 0; ci < conv.in_channels; ++ci) {
                const double* iplane = in.data().data() + (b * conv.in_channels + ci) * plane;
                for (std::size_t ky = 0; ky < k; ++ky) {
                    const long dy = static_cast<long>(ky) - pad;
                    const ShiftRange ys = shift_range(dy, H);
                    for (std::size_t kx = 0; kx < k; ++kx) {
                        const long dx = static_cast<long>(kx) - pad;
                        const ShiftRange xs = shift_range(dx, W);
                        double acc = 0.0;
                        for (std::size_t y = ys.lo; y < ys.hi; ++y) {
                            const double* drow = dplane + y * W;
                            const double* irow =
                                iplane + (static_cast<long>(y) + dy) * static_cast<long>(W) + dx;
                            for (std::size_t x = xs.lo; x < xs.hi; ++x) acc += drow[x] * irow[x];
                        }
                        dw[(ci * k + ky) * k + kx] += acc;
                    }
                }
            }
        }
        g.dbias.data()[co] = db;
    });

    parallel_for(0, B * conv.in_channels, [&](std::size_t i) {
        const std::size_t b = i / conv.in_channels;
        const std::size_t ci = i % conv.in_channels;
        double* din = g.dinput.data().data() + (b * conv.in_channels + ci) * plane;
        for (std::size_t co = 0; co < conv.out_channels; ++co) {
            const double* dplane = dout.data().data() + (b * conv.out_channels + co) * plane;
            const double* kern = conv.weight.data().data() + (co * conv.in_channels + ci) * k * k;
            for (std::size_t ky = 0; ky < k; ++ky) {
                const long dy = static_cast<long>(ky) - pad;
                const ShiftRange ys = shift_range(dy, H);
                for (std::size_t kx = 0; kx < k; ++kx) {
                    const long dx = static_cast<long>(kx) - pad;
                    const ShiftRange xs = shift_range(dx, W);
                    const double wv = kern[ky * k + kx];
                    for (std::size_t y = ys.lo; y < ys.hi; ++y) {
                        const double* drow = dplane + y * W;
                        double* dirow =
                            din + (static_cast<long>(y) + dy) * static_cast<long>(W) + dx;
                        for (std::size_t x = xs.lo; x < xs.hi; ++x) dirow[x] += wv * drow[x];
                    }
                }
            }
        }
    });
    return g;
}

Tensor relu(const Tensor& z) {
    Tensor a(z.shape());
    std::span<const double> src = z.data();
    std::span<double> dst = a.data();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] > 0.0 ? src[i] : 0.0;
    return a;
}

/// relu'(0) = 0 by convention.
void relu_backward_inplace(Tensor& dz, const Tensor& z) {
    std::span<const double> zz = z.data();
    std::span<double> d = dz.data();
    for (std::size_t i = 0; i < d.size(); ++i)
        if (!(zz[i] > 0.0)) d[i] = 0.0;
}

} // namespace

ClientModel ClientModel::init(std::uint64_t seed, std::size_t in_channels, std::size_t width,
                              std::size_t stages) {
    if (stages == 0 || width == 0 || in_channels == 0)
        throw std::invalid_argument("client model needs at least one stage and one channel");
    ClientModel m;
    std::size_t ci = in_channels;
    for (std::size_t s = 0; s < stages; ++s) {
        Conv2d conv;
        conv.in_channels = ci;
        conv.out_channels = width;
        conv.ksize = 3;
        conv.weight = Tensor({width, ci, conv.ksize, conv.ksize});
        conv.bias = Tensor({width});
        SplitMix64 rng(mix_seed(seed, s));
        he_uniform(conv.weight, ci * conv.ksize * conv.ksize, rng);
        m.convs.push_back(std::move(conv));
        ci = width;
    }
    return m;
}

std::vector<Tensor*> ClientModel::parameters() {
    std::vector<Tensor*> ps;
    for (auto& c : convs) {
        ps.push_back(&c.weight);
        ps.push_back(&c.bias);
    }
    return ps;
}

std::vector<const Tensor*> ClientModel::parameters() const {
    std::vector<const Tensor*> ps;
    for (const auto& c : convs) {
        ps.push_back(&c.weight);
        ps.push_back(&c.bias);
    }
    return ps;
}

std::vector<std::string> ClientModel::parameter_names() const {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < convs.size(); ++i) {
        names.push_back("client.conv" + std::to_string(i) + ".weight");
        names.push_back("client.conv" + std::to_string(i) + ".bias");
    }
    return names;
}

SmashedData ClientModel::forward(const Tensor& batch, std::uint32_t round) const {
    if (batch.rank() != 4) throw std::invalid_argument("client input must be rank 4");
    Tensor a = batch;
    for (const auto& conv : convs) a = relu(conv_forward(conv, a));
    return SmashedData(std::move(a), round, Direction::Activations);
}

Grads ClientModel::backward(const Tensor& batch, const SmashedData& grad_smashed) const {
    if (grad_smashed.direction != Direction::Gradients)
        throw std::invalid_argument("client_backward expects a Gradients-direction tensor");
    if (batch.rank() != 4) throw std::invalid_argument("client input must be rank 4");

    // Recompute the forward intermediates (cheap at desk scale, keeps
    // forward() stateless).
    std::vector<Tensor> pre;  // z_i
    std::vector<Tensor> post; // relu(z_i); post.back() is the smashed output
    const Tensor* cur = &batch;
    for (const auto& conv : convs) {
        pre.push_back(conv_forward(conv, *cur));
        post.push_back(relu(pre.back()));
        cur = &post.back();
    }
    if (!post.back().same_shape(grad_smashed.tensor))
        throw std::invalid_argument("gradient shape does not match client output");

    Grads grads(convs.size() * 2);
    Tensor d = grad_smashed.tensor;
    for (std::size_t i = convs.size(); i-- > 0;) {
        relu_backward_inplace(d, pre[i]);
        const Tensor& input = i == 0 ? batch : post[i - 1];
        ConvGrads g = conv_backward(convs[i], input, d);
        grads[2 * i] = std::move(g.dweight);
        grads[2 * i + 1] = std::move(g.dbias);
        d = std::move(g.dinput);
    }
    return grads;
}

ServerModel ServerModel::init(std::uint64_t seed, std::size_t in_channels, std::size_t in_h,
                              std::size_t in_w, std::size_t hidden_units, std::size_t classes) {
    if (in_channels == 0 || hidden_units == 0 || classes == 0)
        throw std::invalid_argument("server model dimensions must be positive");
    ServerModel m;
    m.in_channels = in_channels;
    m.in_h = in_h;
    m.in_w = in_w;
    if (in_h % m.pool != 0 || in_w % m.pool != 0)
        throw std::invalid_argument("input height/width must be divisible by the pool size");
    const std::size_t flat = in_channels * (in_h / m.pool) * (in_w / m.pool);

    m.hidden.in_features = flat;
    m.hidden.out_features = hidden_units;
    m.hidden.weight = Tensor({hidden_units, flat});
    m.hidden.bias = Tensor({hidden_units});
    SplitMix64 rng1(mix_seed(seed, 0));
    he_uniform(m.hidden.weight, flat, rng1);

    m.output.in_features = hidden_units;
    m.output.out_features = classes;
    m.output.weight = Tensor({classes, hidden_units});
    m.output.bias = Tensor({classes});
    SplitMix64 rng2(mix_seed(seed, 1));
    he_uniform(m.output.weight, hidden_units, rng2);
    return m;
}

std::vector<Tensor*> ServerModel::parameters() {
    return {&hidden.weight, &hidden.bias, &output.weight, &output.bias};
}

std::vector<const Tensor*> ServerModel::parameters() const {
    return {&hidden.weight, &hidden.bias, &output.weight, &output.bias};
}

std::vector<std::string> ServerModel::parameter_names() const {
    return {"server.hidden.weight", "server.hidden.bias", "server.output.weight",
            "server.output.bias"};
}

namespace {

struct ServerForward {
    Tensor pooled;  // [B, flat]
    Tensor preact;  // [B, hidden]
    Tensor act;     // [B, hidden]
    Tensor logits;  // [B, classes]
};

ServerForward server_forward(const ServerModel& m, const SmashedData& s) {
    if (s.direction != Direction::Activations)
        throw std::invalid_argument("server expects an Activations-direction tensor");
    if (s.channels() != m.in_channels || s.height() != m.in_h || s.width() != m.in_w)
        throw std::invalid_argument("smashed shape does not match server model");
    const std::size_t B = s.batch();
    const std::size_t ph = m.in_h / m.pool, pw = m.in_w / m.pool;
    const std::size_t flat = m.in_channels * ph * pw;
    ServerForward f{Tensor({B, flat}), Tensor({B, m.hidden.out_features}),
                    Tensor({B, m.hidden.out_features}), Tensor({B, m.output.out_features})};

    const double inv_area = 1.0 / static_cast<double>(m.pool * m.pool);
    parallel_for(0, B, [&](std::size_t b) {
        const double* in = s.tensor.data().data() + b * m.in_channels * m.in_h * m.in_w;
        double* out = f.pooled.data().data() + b * flat;
        for (std::size_t c = 0; c < m.in_channels; ++c) {
            const double* plane = in + c * m.in_h * m.in_w;
            for (std::size_t py = 0; py < ph; ++py)
                for (std::size_t px = 0; px < pw; ++px) {
                    double acc = 0.0;
                    for (std::size_t dy = 0; dy < m.pool; ++dy)
                        for (std::size_t dx = 0; dx < m.pool; ++dx)
                            acc += plane[(py * m.pool + dy) * m.in_w + px * m.pool + dx];
                    out[(c * ph + py) * pw + px] = acc * inv_area;
                }
        }

        const double* fv = out;
        double* h = f.preact.data().data() + b * m.hidden.out_features;
        double* a = f.act.data().data() + b * m.hidden.out_features;
        for (std::size_t j = 0; j < m.hidden.out_features; ++j) {
            const double* wrow = m.hidden.weight.data().data() + j * flat;
            double acc = m.hidden.bias.data()[j];
            for (std::size_t i = 0; i < flat; ++i) acc += wrow[i] * fv[i];
            h[j] = acc;
            a[j] = acc > 0.0 ? acc : 0.0;
        }

        double* lg = f.logits.data().data() + b * m.output.out_features;
        for (std::size_t o = 0; o < m.output.out_features; ++o) {
            const double* wrow = m.output.weight.data().data() + o * m.hidden.out_features;
            double acc = m.output.bias.data()[o];
            for (std::size_t j = 0; j < m.hidden.out_features; ++j) acc += wrow[j] * a[j];
            lg[o] = acc;
        }
    });
    return f;
}

} // namespace

Tensor ServerModel::logits(const SmashedData& s) const { return server_forward(*this, s).logits; }

std::vector<int> ServerModel::predict(const SmashedData& s) const {
    const Tensor lg = logits(s);
    const std::size_t B = lg.dim(0), K = lg.dim(1);
    std::vector<int> out(B);
    for (std::size_t b = 0; b < B; ++b) {
        const double* row = lg.data().data() + b * K;
        out[b] = static_cast<int>(std::max_element(row, row + K) - row);
    }
    return out;
}

ServerModel::ForwardBackward ServerModel::forward_backward(const SmashedData& s,
                                                           std::span<const int> labels) const {
    const std::size_t B = s.batch();
    const std::size_t K = output.out_features;
    if (labels.size() != B) throw std::invalid_argument("label count does not match batch size");
    for (int y : labels)
        if (y < 0 || static_cast<std::size_t>(y) >= K)
            throw std::invalid_argument("label out of range");

    ServerForward f = server_forward(*this, s);
    const std::size_t ph = in_h / pool, pw = in_w / pool;
    const std::size_t flat = in_channels * ph * pw;
    const std::size_t Hn = hidden.out_features;

    // Softmax cross-entropy; dlogits = (softmax - onehot) / B.
    Tensor dlogits({B, K});
    double loss = 0.0;
    for (std::size_t b = 0; b < B; ++b) {
        const double* lg = f.logits.data().data() + b * K;
        double* dl = dlogits.data().data() + b * K;
        double mx = lg[0];
        for (std::size_t o = 1; o < K; ++o) mx = std::max(mx, lg[o]);
        double z = 0.0;
        for (std::size_t o = 0; o < K; ++o) z += std::exp(lg[o] - mx);
        const double log_z = std::log(z);
        loss += -(lg[static_cast<std::size_t>(labels[b])] - mx - log_z);
        for (std::size_t o = 0; o < K; ++o) {
            const double p = std::exp(lg[o] - mx) / z;
            dl[o] = (p - (static_cast<std::size_t>(labels[b]) == o ? 1.0 : 0.0)) /
                    static_cast<double>(B);
        }
    }
    loss /= static_cast<double>(B);

    ForwardBackward r;
    r.loss = loss;
    r.grads.resize(4);
    Tensor dw2({K, Hn}), db2({K}), dw1({Hn, flat}), db1({Hn});

    parallel_for(0, K, [&](std::size_t o) {
        double* wrow = dw2.data().data() + o * Hn;
        double acc_b = 0.0;
        for (std::size_t b = 0; b < B; ++b) {
            const double d = dlogits.data()[b * K + o];
            acc_b += d;
            const double* a = f.act.data().data() + b * Hn;
            for (std::size_t j = 0; j < Hn; ++j) wrow[j] += d * a[j];
        }
        db2.data()[o] = acc_b;
    });

    // dh = (dlogits @ W2) masked by relu'. One task per sample.
    Tensor dh({B, Hn});
    parallel_for(0, B, [&](std::size_t b) {
        const double* dl = dlogits.data().data() + b * K;
        const double* h = f.preact.data().data() + b * Hn;
        double* row = dh.data().data() + b * Hn;
        for (std::size_t o = 0; o < K; ++o) {
            const double d = dl[o];
            const double* wrow = output.weight.data().data() + o * Hn;
            for (std::size_t j = 0; j < Hn; ++j) row[j] += d * wrow[j];
        }
        for (std::size_t j = 0; j < Hn; ++j)
            if (!(h[j] > 0.0)) row[j] = 0.0;
    });

    parallel_for(0, Hn, [&](std::size_t j) {
        double* wrow = dw1.data().data() + j * flat;
        double acc_b = 0.0;
        for (std::size_t b = 0; b < B; ++b) {
            const double d = dh.data()[b * Hn + j];
            acc_b += d;
            if (d == 0.0) continue;
            const double* fv = f.pooled.data().data() + b * flat;
            for (std::size_t i = 0; i < flat; ++i) wrow[i] += d * fv[i];
        }
        db1.data()[j] = acc_b;
    });

    // df = dh @ W1, then unpool: each source pixel receives its cell's
    // gradient divided by the pool area.
    Tensor grad_in(s.tensor.shape());
    const double inv_area = 1.0 / static_cast<double>(pool * pool);
    parallel_for(0, B, [&](std::size_t b) {
        std::vector<double> df(flat, 0.0);
        const double* row = dh.data().data() + b * Hn;
        for (std::size_t j = 0; j < Hn; ++j) {
            const double d = row[j];
            if (d == 0.0) continue;
            const double* wrow = hidden.weight.data().data() + j * flat;
            for (std::size_t i = 0; i < flat; ++i) df[i] += d * wrow[i];
        }
        double* out = grad_in.data().data() + b * in_channels * in_h * in_w;
        for (std::size_t c = 0; c < in_channels; ++c) {
            double* plane = out + c * in_h * in_w;
            for (std::size_t py = 0; py < ph; ++py)
                for (std::size_t px = 0; px < pw; ++px) {
                    const double d = df[(c * ph + py) * pw + px] * inv_area;
                    for (std::size_t dy = 0; dy < pool; ++dy)
                        for (std::size_t dx = 0; dx < pool; ++dx)
                            plane[(py * pool + dy) * in_w + px * pool + dx] = d;
                }
        }
    });

    r.grad_smashed = SmashedData(std::move(grad_in), s.round, Direction::Gradients);
    r.grads[0] = std::move(dw1);
    r.grads[1] = std::move(db1);
    r.grads[2] = std::move(dw2);
    r.grads[3] = std::move(db2);
    return r;
}

void sgd_step(const std::vector<Tensor*>& params, const Grads& grads, double lr) {
    if (params.size() != grads.size())
        throw std::invalid_argument("parameter/gradient count mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (!params[i]->same_shape(grads[i]))
            throw std::invalid_argument("parameter/gradient shape mismatch");
        std::span<double> p = params[i]->data();
        std::span<const double> g = grads[i].data();
        for (std::size_t j = 0; j < p.size(); ++j) p[j] -= lr * g[j];
    }
}

void average_parameters(const std::vector<ClientModel*>& replicas) {
    if (replicas.empty()) return;
    const auto first = replicas.front()->parameters();
    const double inv = 1.0 / static_cast<double>(replicas.size());
    for (std::size_t pi = 0; pi < first.size(); ++pi) {
        Tensor avg(first[pi]->shape());
        std::span<double> acc = avg.data();
        for (ClientModel* m : replicas) {
            const auto ps = m->parameters();
            if (ps.size() != first.size() || !ps[pi]->same_shape(avg))
                throw std::invalid_argument("replica architectures differ");
            std::span<const double> src = ps[pi]->data();
            for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += src[j];
        }
        for (double& v : acc) v *= inv;
        for (ClientModel* m : replicas)
            std::copy(acc.begin(), acc.end(), m->parameters()[pi]->data().begin());
    }
}

void save_checkpoint(const std::string& dir, const ClientModel& client, const ServerModel& server,
                     std::uint64_t seed, std::uint32_t round) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);

    nlohmann::json manifest;
    manifest["seed"] = seed;
    manifest["round"] = round;
    manifest["client"] = {{"stages", client.convs.size()},
                          {"in_channels", client.convs.front().in_channels},
                          {"width", client.out_channels()}};
    manifest["server"] = {{"in_channels", server.in_channels},
                          {"in_h", server.in_h},
                          {"in_w", server.in_w},
                          {"hidden", server.hidden.out_features},
                          {"classes", server.classes()}};

    auto dump = [&](const std::vector<const Tensor*>& params,
                    const std::vector<std::string>& names) {
        for (std::size_t i = 0; i < params.size(); ++i) {
            const std::string file = names[i] + ".slt1";
            write_slt1_file((fs::path(dir) / file).string(), *params[i]);
            manifest["params"].push_back(
                {{"name", names[i]}, {"file", file}, {"shape", params[i]->shape()}});
        }
    };
    dump(client.parameters(), client.parameter_names());
    dump(server.parameters(), server.parameter_names());

    std::ofstream out(fs::path(dir) / "manifest.json");
    if (!out) throw std::runtime_error("cannot write checkpoint manifest in " + dir);
    out << manifest.dump(2) << "\n";
}

Checkpoint load_checkpoint(const std::string& dir) {
    namespace fs = std::filesystem;
    std::ifstream in(fs::path(dir) / "manifest.json");
    if (!in) throw FormatError(0, "missing checkpoint manifest in " + dir);
    nlohmann::json manifest;
    try {
        in >> manifest;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(0, std::string("bad checkpoint manifest: ") + e.what());
    }

    Checkpoint ck;
    try {
        ck.seed = manifest.at("seed").get<std::uint64_t>();
        ck.round = manifest.at("round").get<std::uint32_t>();
        const auto& c = manifest.at("client");
        ck.client = ClientModel::init(ck.seed, c.at("in_channels").get<std::size_t>(),
                                      c.at("width").get<std::size_t>(),
                                      c.at("stages").get<std::size_t>());
        const auto& sv = manifest.at("server");
        ck.server = ServerModel::init(
            ck.seed, sv.at("in_channels").get<std::size_t>(), sv.at("in_h").get<std::size_t>(),
            sv.at("in_w").get<std::size_t>(), sv.at("hidden").get<std::size_t>(),
            sv.at("classes").get<std::size_t>());
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(0, std::string("bad checkpoint manifest: ") + e.what());
    }

    auto restore = [&](const std::vector<Tensor*>& params, const std::vector<std::string>& names) {
        for (std::size_t i = 0; i < params.size(); ++i) {
            Tensor t = read_slt1_file((fs::path(dir) / (names[i] + ".slt1")).string());
            if (!t.same_shape(*params[i]))
                throw FormatError(0, "checkpoint tensor shape mismatch for " + names[i]);
            *params[i] = std::move(t);
        }
    };
    restore(ck.client.parameters(), ck.client.parameter_names());
    restore(ck.server.parameters(), ck.server.parameter_names());
    return ck;
}

} // namespace slacc::model
