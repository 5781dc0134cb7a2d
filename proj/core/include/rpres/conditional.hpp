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
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "rpres/partition.hpp"
#include "rpres/sde.hpp"

namespace rpres {

/// Per-box averages of the projected drift and diffusion tensor over the
/// samples whose observed coordinates fall in each box.
class ConditionalField {
public:
    ConditionalField(GridPartition partition, std::vector<std::size_t> projection,
                     std::vector<std::size_t> extra_components, std::size_t min_count,
                     std::vector<std::int64_t> counts, std::vector<double> drift_bar,
                     std::vector<double> sigma_bar, std::vector<double> extra);

    const GridPartition& partition() const noexcept { return partition_; }
    const std::vector<std::size_t>& projection() const noexcept { return projection_; }
    const std::vector<std::size_t>& extra_components() const noexcept { return extra_components_; }
    std::size_t dim() const noexcept { return projection_.size(); }
    std::size_t min_count() const noexcept { return min_count_; }
    std::int64_t count(std::size_t box) const { return counts_[box]; }
    bool usable(std::size_t box) const {
        return counts_[box] > 0 && static_cast<std::size_t>(counts_[box]) >= min_count_;
    }
    std::span<const double> drift_bar(std::size_t box) const {
        return {drift_bar_.data() + box * dim(), dim()};
    }
    /// Row-major p x p.
    std::span<const double> sigma_bar(std::size_t box) const {
        return {sigma_bar_.data() + box * dim() * dim(), dim() * dim()};
    }
    std::span<const double> extra(std::size_t box) const {
        return {extra_.data() + box * extra_components_.size(), extra_components_.size()};
    }
    std::size_t usable_count() const;

private:
    GridPartition partition_;
    std::vector<std::size_t> projection_;
    std::vector<std::size_t> extra_components_;
    std::size_t min_count_;
    std::vector<std::int64_t> counts_;
    std::vector<double> drift_bar_;
    std::vector<double> sigma_bar_;
    std::vector<double> extra_;
};

struct ConditionalOptions {
    std::size_t min_count = 1;
    /// Unobserved coordinates whose per-box means are also recorded.
    std::vector<std::size_t> extra_components;
    unsigned threads = 0;
};

/// Throws InsufficientData when no box reaches min_count.
ConditionalField estimate_conditional_field(const TimeSeries& full_series, const SdeModel& model,
                                            const GridPartition& partition,
                                            std::span<const std::size_t> projection,
                                            const ConditionalOptions& options = {});

enum class ExitPolicy { Stop, Reflect };

struct ReducedSimulation {
    TimeSeries series;
    /// Usable boxes whose averaged diffusion had negative eigenvalues.
    std::size_t clipped_boxes = 0;
    /// Steps folded back or rejected under ExitPolicy::Reflect.
    std::size_t reflections = 0;
};

/// Euler-Maruyama for dv = Fbar(v) dt + sigma(v) dW with sigma sigma^T =
/// Sigmabar, both piecewise constant on the boxes. Under Stop a step that
/// lands outside the domain or in an unusable box throws DomainExit. Under
/// Reflect the step is mirrored at the domain walls and, if the box is still
/// unusable, rejected.
ReducedSimulation simulate_reduced(const ConditionalField& field, const SimulationConfig& config,
                                   ExitPolicy policy = ExitPolicy::Stop);

/// CSV `box,count,Fbar_1..Fbar_p,Sigmabar_ij (i <= j)[,<label>bar...]` over
/// visited boxes.
void write_csv(const ConditionalField& field, const std::filesystem::path& path,
               std::span<const std::string> extra_labels = {});

}  // namespace rpres
