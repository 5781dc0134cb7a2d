// Copyright 2026 The rpres Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rpres {

/// Uniform rectangular grid over prod_i [lows_i, highs_i]. Cells are
/// half-open [a, b) except the last one along each dimension, which is
/// closed. Boxes are numbered row-major (first dimension slowest).
class GridPartition {
public:
    GridPartition(std::vector<double> lows, std::vector<double> highs,
                  std::vector<std::size_t> cells);

    std::size_t dim() const noexcept { return lows_.size(); }
    std::size_t size() const noexcept { return size_; }
    const std::vector<double>& lows() const noexcept { return lows_; }
    const std::vector<double>& highs() const noexcept { return highs_; }
    const std::vector<std::size_t>& cells() const noexcept { return cells_; }

    /// Box containing `point`, or nullopt outside the domain.
    std::optional<std::size_t> locate(std::span<const double> point) const;
    /// Unchecked variant for hot loops; returns size() when outside.
    std::size_t locate_unchecked(const double* point) const noexcept;

    std::vector<double> center(std::size_t idx) const;

    friend bool operator==(const GridPartition&, const GridPartition&) = default;

private:
    std::vector<double> lows_;
    std::vector<double> highs_;
    std::vector<std::size_t> cells_;
    std::vector<double> inv_widths_;  // cells_i / (highs_i - lows_i)
    std::size_t size_ = 0;
};

inline std::optional<std::size_t> locate(const GridPartition& p, std::span<const double> point) {
    return p.locate(point);
}
inline std::vector<double> center(const GridPartition& p, std::size_t idx) { return p.center(idx); }

/// {"dim": p, "lows": [...], "highs": [...], "cells": [...]}
std::string to_json(const GridPartition& partition);
GridPartition partition_from_json(std::string_view text);

}  // namespace rpres
