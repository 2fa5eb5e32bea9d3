// Copyright (c) 2026 The tilewise Authors
// SPDX-License-Identifier: Apache-2.0
//
// Error taxonomy; the CLI maps each category to a distinct exit code.

#pragma once

#include <stdexcept>
#include <string>

namespace tilewise {

// Bad user input: flags, tile strings, sparsity ranges. Exit code 2.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Bad data on disk or malformed structures. Exit code 3.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

class ParseError : public DataError {
public:
    explicit ParseError(const std::string& what) : DataError(what) {}
};

// Blob/tensor/activation dimensions disagree.
class ShapeError : public DataError {
public:
    explicit ShapeError(const std::string& what) : DataError(what) {}
};

// Cycles, dangling edges, width mismatches in the layer DAG.
class TopologyError : public DataError {
public:
    explicit TopologyError(const std::string& what) : DataError(what) {}
};

// A violated internal invariant, i.e. a bug. Exit code 4.
class InternalError : public std::logic_error {
public:
    explicit InternalError(const std::string& what) : std::logic_error(what) {}
};

inline void internal_check(bool ok, const std::string& what) {
    if (!ok) throw InternalError(what);
}

}  // namespace tilewise
