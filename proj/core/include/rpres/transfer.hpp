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
#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "rpres/partition.hpp"
#include "rpres/sde.hpp"

namespace rpres {

/// Column-stochastic maximum-likelihood estimate of the reduced Markov
/// operator at lag tau = lag_steps * sample_dt, restricted to the active
/// (visited) boxes:
///
///   gamma(i, j) = #{Y_n in B_j and Y_{n+l} in B_i} / #{Y_n in B_j, Y_{n+l} active}
///
/// Indices i, j are compact; active_boxes()[i] maps back to the partition.
class TransitionMatrix {
public:
    using CountMatrix = Eigen::SparseMatrix<std::int64_t>;
    using ProbMatrix = Eigen::SparseMatrix<double>;

    /// `counts(i, j)` is the number of j -> i transitions. Every column must
    /// have a positive total. `measure` is renormalized to sum 1.
    TransitionMatrix(std::vector<std::size_t> active_boxes, CountMatrix counts,
                     std::vector<double> measure, std::size_t lag_steps, double lag_time,
                     double dropped_pair_fraction = 0.0,
                     std::optional<GridPartition> partition = std::nullopt);

    /// Synthetic chain on boxes 0..n-1 with m proportional to column totals.
    static TransitionMatrix from_counts(const Eigen::MatrixX<std::int64_t>& counts,
                                        std::size_t lag_steps = 1, double lag_time = 1.0);

    std::size_t size() const noexcept { return active_boxes_.size(); }
    const std::vector<std::size_t>& active_boxes() const noexcept { return active_boxes_; }
    const CountMatrix& counts() const noexcept { return counts_; }
    const ProbMatrix& gamma() const noexcept { return gamma_; }
    Eigen::MatrixXd dense_gamma() const { return Eigen::MatrixXd(gamma_); }
    const std::vector<double>& measure() const noexcept { return measure_; }
    std::size_t lag_steps() const noexcept { return lag_steps_; }
    double lag_time() const noexcept { return lag_time_; }
    double sample_dt() const noexcept { return lag_time_ / static_cast<double>(lag_steps_); }
    /// Fraction of (Y_n, Y_{n+l}) pairs discarded because an endpoint was
    /// outside the domain or in a pruned box.
    double dropped_pair_fraction() const noexcept { return dropped_pair_fraction_; }
    const std::optional<GridPartition>& partition() const noexcept { return partition_; }

    /// Compact index of an original box, if active.
    std::optional<std::size_t> compact_index(std::size_t box) const;

private:
    std::vector<std::size_t> active_boxes_;
    CountMatrix counts_;
    ProbMatrix gamma_;
    std::vector<double> measure_;
    std::size_t lag_steps_;
    double lag_time_;
    double dropped_pair_fraction_;
    std::optional<GridPartition> partition_;
};

struct EstimateOptions {
    std::size_t min_count = 1;
    /// 0 = default thread cap (RPRES_THREADS or hardware concurrency).
    unsigned threads = 0;
};

TransitionMatrix estimate_transition(const TimeSeries& series, const GridPartition& partition,
                                     std::size_t lag_steps, const EstimateOptions& options = {});

struct StationaryOptions {
    std::size_t max_iterations = 1'000'000;
    double tolerance = 1e-14;
};

/// Probability vector pi with gamma pi = pi (power iteration on the lazy
/// chain (I + gamma)/2 from the uniform vector).
std::vector<double> stationary_vector(const TransitionMatrix& tm,
                                      const StationaryOptions& options = {});

/// Writes `<prefix>.json` (header), `<prefix>_counts.csv` (`i,j,count,prob`,
/// original box indices) and `<prefix>_measure.csv` (`box,mass`).
void export_transition(const TransitionMatrix& tm, const std::filesystem::path& prefix);
TransitionMatrix import_transition(const std::filesystem::path& prefix);

}  // namespace rpres
