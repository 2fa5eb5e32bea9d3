// Copyright (c) 2026 The tilewise Authors
// SPDX-License-Identifier: Apache-2.0
//
// Shared test fixtures: deterministic graphs from toy chains up to
// AlexNet/ResNet-shaped models, plus random-DAG and synthetic generators.
//
// The "integer" variants use small integer weights and power-of-two affine
// scales so every accumulation is exact in 64-bit floats; evaluation of such
// models is bit-for-bit reproducible under any permutation transform.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "tilewise/graph.hpp"

namespace tilewise::fixtures {

WeightTensor random_tensor(int rows, int cols, std::uint64_t seed);      // uniform, fan-scaled
WeightTensor random_int_tensor(int rows, int cols, std::uint64_t seed);  // integers in [-2, 2]

// linear 4x4 -> relu; the smallest well-formed graph.
WeightGraph two_node_chain();

// k linear layers of width x width, optionally with relu between them.
WeightGraph chain_linears(int k, int width, bool with_relu, std::uint64_t seed);

// The four-layer residual topology: A feeds B and an add; B feeds C; C feeds
// the add; the add feeds D. Parents of D are {A, C}.
WeightGraph fig2_graph(std::uint64_t seed);

// 5 conv + 3 linear with relu/pool/flatten interleaved and two per-channel
// affine nodes; no residuals. Input: 3 channels, 8x8.
WeightGraph alexnet_like(bool integer_weights, std::uint64_t seed);

// Conv stem + two residual blocks (affine after every conv) + pool, flatten,
// classifier. The stem and both block exits merge into one layer group.
WeightGraph resnet_like(bool integer_weights, std::uint64_t seed);

// Random linear/relu/affine/add DAG, <= 20 nodes, width 6. Occasionally wires
// the raw input into an add to exercise the input-merged forbidden rule.
WeightGraph random_residual_dag(std::uint64_t seed);

// layers linear nodes of width x width with relu between, weights drawn with
// normally distributed row means (std 1) and small within-row noise.
WeightGraph synthetic_chain(int layers, int width, double noise, std::uint64_t seed);

// Unique writable directory under the system temp root.
std::filesystem::path fresh_temp_dir(const std::string& tag);

}  // namespace tilewise::fixtures
