// Copyright (c) 2026 The tilewise Authors
// SPDX-License-Identifier: Apache-2.0
//
// Verification machinery: a reference forward evaluator, an exhaustive
// row-permutation search on small matrices, and row-structured synthetic
// weight generators.

#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "tilewise/graph.hpp"
#include "tilewise/importance.hpp"
#include "tilewise/reparam.hpp"

namespace tilewise {

// A value flowing along a graph edge, or the model input itself. Spatial
// activations are channel-major (c, then y, then x); flat ones are plain
// feature vectors.
struct Activation {
    std::vector<float> data;
    int channels = 0;
    int height = 1;
    int width = 1;
    bool spatial = false;

    static Activation flat(std::vector<float> values);
    static Activation image(int c, int h, int w, std::vector<float> values);
    std::size_t size() const { return data.size(); }
    float at(int c, int y, int x) const {
        return data[(static_cast<std::size_t>(c) * height + y) * width + x];
    }
};

using EvalInput = Activation;

// Executes the DAG in topological order with double accumulators and float
// storage between layers. Deliberately naive; it is a correctness oracle, not
// a performance target. Returns one activation per output id.
std::vector<Activation> evaluate(const WeightGraph& g, const EvalInput& input);

// Uniform random input matching the graph's input nodes: conv inputs get a
// spatial h x w image, linear inputs a flat vector. Values in [-1, 1).
EvalInput random_eval_input(const WeightGraph& g, std::uint64_t seed, int h = 8, int w = 8);
// Same shape, small-integer values in [0, 3]; exactly representable so
// evaluation is bit-exact under reparameterization of integer-weight models.
EvalInput random_integer_eval_input(const WeightGraph& g, std::uint64_t seed, int h = 8, int w = 8);

inline constexpr int kBruteForceRowLimit = 8;

struct BruteResult {
    Permutation perm;
    double difference = 0.0;
};

// Exhaustively evaluates the tile-vs-unstructured difference for every row
// permutation of w and returns an argmin (ties by lexicographic permutation
// order, so the result is independent of the thread split). Throws
// ConfigError beyond kBruteForceRowLimit rows.
BruteResult brute_force_best_perm(const WeightTensor& w, TileShape t, double sparsity, Criterion c);

// Convenience: difference achieved by a given row permutation of w.
double permuted_difference(const WeightTensor& w, const Permutation& p, TileShape t, double sparsity,
                           Criterion c);

// w[i][j] = m_i + eta_ij with m_i ~ Normal(mean, row_std) and
// eta_ij ~ Normal(0, noise_std): row means normally distributed, small
// within-row variance.
struct SyntheticSpec {
    int rows = 0;
    int cols = 0;
    double mean = 0.0;
    double row_std = 1.0;
    double noise_std = 0.0;
    std::uint64_t seed = 0;
};

WeightTensor gen_synthetic(const SyntheticSpec& spec);

// Gaussian and uniform helpers on top of std::mt19937_64 (whose raw output is
// pinned by the standard). The transforms are hand-rolled because the
// std::*_distribution output sequences vary between standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    double uniform();                      // [0, 1)
    double uniform(double lo, double hi);  // [lo, hi)
    int uniform_int(int lo, int hi);       // [lo, hi] inclusive
    double normal(double mean, double std);  // polar method

private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace tilewise
