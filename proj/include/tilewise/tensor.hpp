// Copyright (c) 2026 The tilewise Authors
// SPDX-License-Identifier: Apache-2.0
//
// Dense row-major tensors: f32 weights as stored on disk, f64 score planes.

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "tilewise/error.hpp"

namespace tilewise {

// A layer's parameters viewed as a 2D matrix. Rows are output channels or
// features, columns are lowered input features. Values are kept in 32-bit
// floats so file round-trips are bit-preserving.
struct WeightTensor {
    int rows = 0;
    int cols = 0;
    std::vector<float> data;  // rows * cols, row-major
    std::vector<float> bias;  // empty, or one entry per row

    WeightTensor() = default;
    WeightTensor(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0f) {}

    float& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
    float at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
    std::size_t size() const { return data.size(); }
    bool has_bias() const { return !bias.empty(); }

    void check_consistent() const {
        if (rows < 0 || cols < 0 || data.size() != static_cast<std::size_t>(rows) * cols)
            throw ShapeError("weight tensor data length does not match rows*cols");
        if (!bias.empty() && bias.size() != static_cast<std::size_t>(rows))
            throw ShapeError("bias length does not match row count");
    }
};

// Importance scores for one tensor, accumulated and stored in 64-bit floats.
struct ScoreMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> v;  // rows * cols, row-major

    ScoreMatrix() = default;
    ScoreMatrix(int r, int c) : rows(r), cols(c), v(static_cast<std::size_t>(r) * c, 0.0) {}

    double& at(int r, int c) { return v[static_cast<std::size_t>(r) * cols + c]; }
    double at(int r, int c) const { return v[static_cast<std::size_t>(r) * cols + c]; }
    std::size_t size() const { return v.size(); }
};

// Element-level keep/delete marks for one tensor (true = keep).
struct MaskMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<std::uint8_t> keep;  // rows * cols, row-major

    MaskMatrix() = default;
    MaskMatrix(int r, int c, bool keep_all = true)
        : rows(r), cols(c), keep(static_cast<std::size_t>(r) * c, keep_all ? 1 : 0) {}

    bool kept(int r, int c) const { return keep[static_cast<std::size_t>(r) * cols + c] != 0; }
    void set(int r, int c, bool k) { keep[static_cast<std::size_t>(r) * cols + c] = k ? 1 : 0; }
    std::size_t size() const { return keep.size(); }
};

}  // namespace tilewise
