// Copyright (c) 2026 The tilewise Authors
// SPDX-License-Identifier: Apache-2.0

#include "tilewise/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "tilewise/parallel.hpp"
#include "tilewise/pruner.hpp"

namespace tilewise {
namespace {

Activation relu(const Activation& in) {
    Activation out = in;
    for (float& v : out.data) v = std::max(0.0f, v);
    return out;
}

Activation run_linear(const LayerNode& n, const Activation& in) {
    if (in.spatial && in.height * in.width != 1)
        throw ShapeError("node " + std::to_string(n.id) + " needs a flat input");
    const WeightTensor& w = *n.weight;
    if (static_cast<int>(in.size()) != w.cols)
        throw ShapeError("node " + std::to_string(n.id) + " expects " + std::to_string(w.cols) +
                         " features, got " + std::to_string(in.size()));
    std::vector<float> out(static_cast<std::size_t>(w.rows));
    for (int r = 0; r < w.rows; ++r) {
        double acc = w.has_bias() ? static_cast<double>(w.bias[static_cast<std::size_t>(r)]) : 0.0;
        for (int c = 0; c < w.cols; ++c)
            acc += static_cast<double>(w.at(r, c)) * static_cast<double>(in.data[static_cast<std::size_t>(c)]);
        out[static_cast<std::size_t>(r)] = static_cast<float>(acc);
    }
    return Activation::flat(std::move(out));
}

Activation run_conv(const LayerNode& n, const Activation& in_raw) {
    const ConvMeta& m = *n.conv;
    Activation in = in_raw;
    if (!in.spatial) {  // a flat vector is a 1x1 image
        in.spatial = true;
        in.channels = static_cast<int>(in.data.size());
        in.height = in.width = 1;
    }
    if (in.channels != m.in_channels)
        throw ShapeError("node " + std::to_string(n.id) + " expects " +
                         std::to_string(m.in_channels) + " channels, got " +
                         std::to_string(in.channels));
    const int oh = (in.height + 2 * m.padding - m.kernel_h) / m.stride + 1;
    const int ow = (in.width + 2 * m.padding - m.kernel_w) / m.stride + 1;
    if (in.height + 2 * m.padding < m.kernel_h || in.width + 2 * m.padding < m.kernel_w)
        throw ShapeError("node " + std::to_string(n.id) + " kernel exceeds its padded input");

    const WeightTensor& w = *n.weight;
    std::vector<float> out(static_cast<std::size_t>(m.out_channels) * oh * ow);
    for (int oc = 0; oc < m.out_channels; ++oc)
        for (int oy = 0; oy < oh; ++oy)
            for (int ox = 0; ox < ow; ++ox) {
                double acc = w.has_bias()
                                 ? static_cast<double>(w.bias[static_cast<std::size_t>(oc)])
                                 : 0.0;
                for (int ic = 0; ic < m.in_channels; ++ic)
                    for (int kr = 0; kr < m.kernel_h; ++kr)
                        for (int kc = 0; kc < m.kernel_w; ++kc) {
                            const int y = oy * m.stride + kr - m.padding;
                            const int x = ox * m.stride + kc - m.padding;
                            if (y < 0 || y >= in.height || x < 0 || x >= in.width) continue;
                            // Lowered column order is channel-major.
                            const int col = ic * m.kernel_h * m.kernel_w + kr * m.kernel_w + kc;
                            acc += static_cast<double>(w.at(oc, col)) *
                                   static_cast<double>(in.at(ic, y, x));
                        }
                out[(static_cast<std::size_t>(oc) * oh + oy) * ow + ox] =
                    static_cast<float>(acc);
            }
    return Activation::image(m.out_channels, oh, ow, std::move(out));
}

Activation run_pool(const LayerNode& n, const Activation& in) {
    if (!in.spatial)
        throw ShapeError("node " + std::to_string(n.id) + " needs a spatial input");
    const int k = n.pool->kernel;
    const int s = n.pool->stride == 0 ? k : n.pool->stride;
    if (in.height < k || in.width < k)
        throw ShapeError("node " + std::to_string(n.id) + " pool window exceeds its input");
    const int oh = (in.height - k) / s + 1;
    const int ow = (in.width - k) / s + 1;
    std::vector<float> out(static_cast<std::size_t>(in.channels) * oh * ow);
    for (int c = 0; c < in.channels; ++c)
        for (int oy = 0; oy < oh; ++oy)
            for (int ox = 0; ox < ow; ++ox) {
                float best = in.at(c, oy * s, ox * s);
                for (int dy = 0; dy < k; ++dy)
                    for (int dx = 0; dx < k; ++dx)
                        best = std::max(best, in.at(c, oy * s + dy, ox * s + dx));
                out[(static_cast<std::size_t>(c) * oh + oy) * ow + ox] = best;
            }
    return Activation::image(in.channels, oh, ow, std::move(out));
}

Activation run_flatten(const LayerNode& n, const Activation& in) {
    if (!in.spatial) {
        if (n.spatial_area != 1)
            throw ShapeError("node " + std::to_string(n.id) + " got a flat input but declares area " +
                             std::to_string(n.spatial_area));
        return in;
    }
    if (in.height * in.width != n.spatial_area)
        throw ShapeError("node " + std::to_string(n.id) + " declares area " +
                         std::to_string(n.spatial_area) + " but its input is " +
                         std::to_string(in.height) + "x" + std::to_string(in.width));
    // Channel-major storage means flattening is a reinterpretation.
    return Activation::flat(in.data);
}

Activation run_affine(const LayerNode& n, const Activation& in) {
    if (in.channels != static_cast<int>(n.scale.size()))
        throw ShapeError("node " + std::to_string(n.id) + " scales " +
                         std::to_string(n.scale.size()) + " channels, got " +
                         std::to_string(in.channels));
    Activation out = in;
    const int area = in.height * in.width;
    for (int c = 0; c < in.channels; ++c)
        for (int i = 0; i < area; ++i) {
            const std::size_t idx = static_cast<std::size_t>(c) * area + i;
            const double v = static_cast<double>(n.scale[static_cast<std::size_t>(c)]) *
                                 static_cast<double>(in.data[idx]) +
                             static_cast<double>(n.shift[static_cast<std::size_t>(c)]);
            out.data[idx] = static_cast<float>(v);
        }
    return out;
}

Activation sum_all(int id, const std::vector<const Activation*>& feeds) {
    const Activation& first = *feeds.front();
    for (const Activation* f : feeds)
        if (f->spatial != first.spatial || f->channels != first.channels ||
            f->height != first.height || f->width != first.width)
            throw ShapeError("node " + std::to_string(id) + " adds mismatched shapes");
    Activation out = first;
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        double acc = 0.0;
        for (const Activation* f : feeds) acc += static_cast<double>(f->data[i]);
        out.data[i] = static_cast<float>(acc);
    }
    return out;
}

// Shape expected by the nodes the model input feeds, found by walking through
// shape-preserving nodes.
struct InputShape {
    bool spatial = false;
    int channels = 0;
};

InputShape infer_input_shape(const WeightGraph& g) {
    const Adjacency adj = Adjacency::build(g);
    std::set<int> visited;
    std::vector<int> stack(g.input_ids.begin(), g.input_ids.end());
    while (!stack.empty()) {
        const int id = stack.back();
        stack.pop_back();
        if (!visited.insert(id).second) continue;
        const LayerNode& n = g.node(id);
        switch (n.kind) {
            case LayerKind::conv2d: return {true, n.conv->in_channels};
            case LayerKind::linear: return {false, n.weight->cols};
            case LayerKind::per_channel_affine:
                return {false, static_cast<int>(n.scale.size())};
            case LayerKind::elementwise:
            case LayerKind::add:
                for (int c : adj.consumers(g, id)) stack.push_back(c);
                break;
            case LayerKind::pool:
            case LayerKind::flatten:
                throw DataError("cannot infer the input shape of this graph");
        }
    }
    throw DataError("cannot infer the input shape of this graph");
}

EvalInput random_input_impl(const WeightGraph& g, std::uint64_t seed, int h, int w, bool integer) {
    const InputShape shape = infer_input_shape(g);
    Rng rng(seed);
    const std::size_t count = shape.spatial
                                  ? static_cast<std::size_t>(shape.channels) * h * w
                                  : static_cast<std::size_t>(shape.channels);
    std::vector<float> values(count);
    for (float& v : values)
        v = integer ? static_cast<float>(rng.uniform_int(0, 3))
                    : static_cast<float>(rng.uniform(-1.0, 1.0));
    return shape.spatial ? Activation::image(shape.channels, h, w, std::move(values))
                         : Activation::flat(std::move(values));
}

}  // namespace

Activation Activation::flat(std::vector<float> values) {
    Activation a;
    a.channels = static_cast<int>(values.size());
    a.data = std::move(values);
    return a;
}

Activation Activation::image(int c, int h, int w, std::vector<float> values) {
    if (values.size() != static_cast<std::size_t>(c) * h * w)
        throw ShapeError("activation data does not match its declared shape");
    Activation a;
    a.channels = c;
    a.height = h;
    a.width = w;
    a.spatial = true;
    a.data = std::move(values);
    return a;
}

std::vector<Activation> evaluate(const WeightGraph& g, const EvalInput& input) {
    const Adjacency adj = Adjacency::build(g);
    std::map<int, Activation> value;

    for (int id : adj.topo) {
        const LayerNode& n = g.node(id);
        std::vector<const Activation*> feeds;
        for (int p : adj.producers(g, id)) feeds.push_back(&value.at(p));
        if (std::find(g.input_ids.begin(), g.input_ids.end(), id) != g.input_ids.end())
            feeds.push_back(&input);
        internal_check(!feeds.empty(), "validated node has no inputs");

        Activation out;
        if (n.kind == LayerKind::add) {
            out = sum_all(id, feeds);
        } else {
            const Activation& in = *feeds.front();
            switch (n.kind) {
                case LayerKind::linear: out = run_linear(n, in); break;
                case LayerKind::conv2d: out = run_conv(n, in); break;
                case LayerKind::elementwise: out = relu(in); break;
                case LayerKind::pool: out = run_pool(n, in); break;
                case LayerKind::flatten: out = run_flatten(n, in); break;
                case LayerKind::per_channel_affine: out = run_affine(n, in); break;
                case LayerKind::add: break;  // handled above
            }
        }
        value.emplace(id, std::move(out));
    }

    std::vector<Activation> outputs;
    for (int id : g.output_ids) outputs.push_back(value.at(id));
    return outputs;
}

EvalInput random_eval_input(const WeightGraph& g, std::uint64_t seed, int h, int w) {
    return random_input_impl(g, seed, h, w, false);
}

EvalInput random_integer_eval_input(const WeightGraph& g, std::uint64_t seed, int h, int w) {
    return random_input_impl(g, seed, h, w, true);
}

double permuted_difference(const WeightTensor& w, const Permutation& p, TileShape t,
                           double sparsity, Criterion c) {
    WeightTensor permuted = w;
    permute_rows(permuted, p);
    return loss_difference({&permuted, 1}, t, sparsity, c).difference;
}

BruteResult brute_force_best_perm(const WeightTensor& w, TileShape t, double sparsity,
                                  Criterion c) {
    if (w.rows > kBruteForceRowLimit)
        throw ConfigError("exhaustive search is limited to " +
                          std::to_string(kBruteForceRowLimit) + " rows");
    const int n = w.rows;

    // One chunk per leading element; each chunk walks its permutations in
    // lexicographic order and keeps the first minimum, so the merged result
    // does not depend on the thread split.
    std::vector<BruteResult> best(static_cast<std::size_t>(n));
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t chunk) {
        std::vector<int> perm(static_cast<std::size_t>(n));
        std::iota(perm.begin(), perm.end(), 0);
        std::swap(perm[0], perm[static_cast<std::size_t>(chunk)]);
        std::sort(perm.begin() + 1, perm.end());

        BruteResult local;
        local.difference = std::numeric_limits<double>::infinity();
        do {
            Permutation p;
            p.forward = perm;
            const double d = permuted_difference(w, p, t, sparsity, c);
            if (d < local.difference) {
                local.difference = d;
                local.perm = std::move(p);
            }
        } while (std::next_permutation(perm.begin() + 1, perm.end()));
        best[chunk] = std::move(local);
    });

    BruteResult out = std::move(best.front());
    for (std::size_t i = 1; i < best.size(); ++i)
        if (best[i].difference < out.difference) out = std::move(best[i]);
    return out;
}

WeightTensor gen_synthetic(const SyntheticSpec& spec) {
    if (spec.rows < 1 || spec.cols < 1) throw ConfigError("synthetic tensors need a positive shape");
    Rng rng(spec.seed);
    WeightTensor w(spec.rows, spec.cols);
    for (int r = 0; r < spec.rows; ++r) {
        const double m = rng.normal(spec.mean, spec.row_std);
        for (int c = 0; c < spec.cols; ++c)
            w.at(r, c) = static_cast<float>(m + rng.normal(0.0, spec.noise_std));
    }
    return w;
}

double Rng::uniform() {
    // 53 high bits of the engine output, the standard double-in-[0,1) recipe.
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

int Rng::uniform_int(int lo, int hi) {
    internal_check(lo <= hi, "empty integer range");
    const std::uint64_t span = static_cast<std::uint64_t>(hi) - static_cast<std::uint64_t>(lo) + 1;
    // Rejection sampling: unbiased and identical on every platform.
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % span;
    std::uint64_t r;
    do {
        r = engine_();
    } while (r >= limit);
    return lo + static_cast<int>(r % span);
}

double Rng::normal(double mean, double std) {
    if (have_spare_) {
        have_spare_ = false;
        return mean + std * spare_;
    }
    double u, v, s;
    do {
        u = uniform(-1.0, 1.0);
        v = uniform(-1.0, 1.0);
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double k = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * k;
    have_spare_ = true;
    return mean + std * u * k;
}

}  // namespace tilewise
