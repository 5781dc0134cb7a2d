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

#include "rpres/partition.hpp"

#include <cmath>
#include <limits>

#include "json_io.hpp"
#include "rpres/error.hpp"

namespace rpres {

GridPartition::GridPartition(std::vector<double> lows, std::vector<double> highs,
                             std::vector<std::size_t> cells)
    : lows_(std::move(lows)), highs_(std::move(highs)), cells_(std::move(cells)) {
    if (lows_.empty()) throw ArgumentError("partition needs at least one dimension");
    if (highs_.size() != lows_.size() || cells_.size() != lows_.size()) {
        throw ArgumentError("partition lows/highs/cells must have equal length");
    }
    size_ = 1;
    for (std::size_t i = 0; i < lows_.size(); ++i) {
        if (!std::isfinite(lows_[i]) || !std::isfinite(highs_[i]) || !(lows_[i] < highs_[i])) {
            throw ArgumentError("partition requires finite lows < highs in every dimension");
        }
        if (cells_[i] == 0) throw ArgumentError("partition cell counts must be positive");
        if (size_ > std::numeric_limits<std::size_t>::max() / cells_[i]) {
            throw ArgumentError("partition box count overflows");
        }
        size_ *= cells_[i];
        inv_widths_.push_back(static_cast<double>(cells_[i]) / (highs_[i] - lows_[i]));
    }
}

std::size_t GridPartition::locate_unchecked(const double* point) const noexcept {
    std::size_t idx = 0;
    for (std::size_t i = 0; i < lows_.size(); ++i) {
        const double x = point[i];
        if (!(x >= lows_[i] && x <= highs_[i])) return size_;
        auto k = static_cast<std::size_t>((x - lows_[i]) * inv_widths_[i]);
        if (k >= cells_[i]) k = cells_[i] - 1;
        idx = idx * cells_[i] + k;
    }
    return idx;
}

std::optional<std::size_t> GridPartition::locate(std::span<const double> point) const {
    if (point.size() != dim()) throw ArgumentError("locate: point dimension mismatch");
    for (double x : point) {
        if (!std::isfinite(x)) throw ArgumentError("locate: point must be finite");
    }
    const std::size_t idx = locate_unchecked(point.data());
    if (idx == size_) return std::nullopt;
    return idx;
}

std::vector<double> GridPartition::center(std::size_t idx) const {
    if (idx >= size_) {
        throw ArgumentError("box index " + std::to_string(idx) + " out of range [0, " +
                            std::to_string(size_) + ")");
    }
    std::vector<double> c(dim());
    for (std::size_t i = dim(); i-- > 0;) {
        const std::size_t k = idx % cells_[i];
        idx /= cells_[i];
        c[i] = lows_[i] + (static_cast<double>(k) + 0.5) / inv_widths_[i];
    }
    return c;
}

std::string to_json(const GridPartition& partition) {
    return detail::partition_json(partition).dump();
}

GridPartition partition_from_json(std::string_view text) {
    return detail::partition_from(detail::parse_json(text));
}

}  // namespace rpres
