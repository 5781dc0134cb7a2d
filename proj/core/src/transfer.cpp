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

#include "rpres/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <unordered_map>

#include "csv_util.hpp"
#include "json_io.hpp"
#include "rpres/error.hpp"
#include "rpres/parallel.hpp"

namespace rpres {

namespace {

constexpr std::size_t kChunk = 1 << 16;
constexpr std::uint32_t kOutside = 0xffffffffu;

std::uint64_t pair_key(std::uint32_t src, std::uint32_t dst) {
    return (static_cast<std::uint64_t>(src) << 32) | dst;
}

}  // namespace

TransitionMatrix::TransitionMatrix(std::vector<std::size_t> active_boxes, CountMatrix counts,
                                   std::vector<double> measure, std::size_t lag_steps,
                                   double lag_time, double dropped_pair_fraction,
                                   std::optional<GridPartition> partition)
    : active_boxes_(std::move(active_boxes)),
      counts_(std::move(counts)),
      measure_(std::move(measure)),
      lag_steps_(lag_steps),
      lag_time_(lag_time),
      dropped_pair_fraction_(dropped_pair_fraction),
      partition_(std::move(partition)) {
    const auto n = static_cast<Eigen::Index>(active_boxes_.size());
    if (n == 0) throw EmptyEstimate("transition matrix has no active boxes");
    if (counts_.rows() != n || counts_.cols() != n) {
        throw ArgumentError("count matrix shape does not match active box count");
    }
    if (measure_.size() != active_boxes_.size()) {
        throw ArgumentError("measure length does not match active box count");
    }
    if (lag_steps_ == 0 || !(lag_time_ > 0.0)) throw ArgumentError("lag must be positive");
    if (partition_) {
        for (std::size_t b : active_boxes_) {
            if (b >= partition_->size()) throw ArgumentError("active box outside partition");
        }
    }
    counts_.makeCompressed();

    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(static_cast<std::size_t>(counts_.nonZeros()));
    for (Eigen::Index j = 0; j < n; ++j) {
        std::int64_t total = 0;
        for (CountMatrix::InnerIterator it(counts_, j); it; ++it) {
            if (it.value() < 0) throw ArgumentError("transition counts must be nonnegative");
            total += it.value();
        }
        if (total == 0) {
            throw ArgumentError("column " + std::to_string(j) + " has no outgoing transitions");
        }
        const double inv = 1.0 / static_cast<double>(total);
        for (CountMatrix::InnerIterator it(counts_, j); it; ++it) {
            if (it.value() != 0) {
                triplets.emplace_back(static_cast<int>(it.row()), static_cast<int>(j),
                                      static_cast<double>(it.value()) * inv);
            }
        }
    }
    gamma_.resize(n, n);
    gamma_.setFromTriplets(triplets.begin(), triplets.end());
    gamma_.makeCompressed();

    double mass = 0.0;
    for (double v : measure_) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw ArgumentError("measure must be nonnegative");
        mass += v;
    }
    if (!(mass > 0.0)) throw ArgumentError("measure must have positive mass");
    for (double& v : measure_) v /= mass;
}

TransitionMatrix TransitionMatrix::from_counts(const Eigen::MatrixX<std::int64_t>& counts,
                                               std::size_t lag_steps, double lag_time) {
    if (counts.rows() != counts.cols()) throw ArgumentError("count matrix must be square");
    const auto n = static_cast<std::size_t>(counts.cols());
    std::vector<std::size_t> boxes(n);
    std::iota(boxes.begin(), boxes.end(), std::size_t{0});
    std::vector<double> measure(n);
    for (std::size_t j = 0; j < n; ++j) {
        measure[j] = static_cast<double>(counts.col(static_cast<Eigen::Index>(j)).sum());
    }
    CountMatrix sparse = counts.sparseView();
    return TransitionMatrix(std::move(boxes), std::move(sparse), std::move(measure), lag_steps,
                            lag_time);
}

std::optional<std::size_t> TransitionMatrix::compact_index(std::size_t box) const {
    // active_boxes_ is sorted when produced by estimate_transition, but not
    // necessarily for hand-built matrices.
    if (std::is_sorted(active_boxes_.begin(), active_boxes_.end())) {
        auto it = std::lower_bound(active_boxes_.begin(), active_boxes_.end(), box);
        if (it != active_boxes_.end() && *it == box) {
            return static_cast<std::size_t>(it - active_boxes_.begin());
        }
        return std::nullopt;
    }
    auto it = std::find(active_boxes_.begin(), active_boxes_.end(), box);
    if (it == active_boxes_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - active_boxes_.begin());
}

TransitionMatrix estimate_transition(const TimeSeries& series, const GridPartition& partition,
                                     std::size_t lag_steps, const EstimateOptions& options) {
    if (lag_steps < 1) throw ArgumentError("lag_steps must be >= 1");
    if (series.dim() != partition.dim()) {
        throw ArgumentError("series dimension " + std::to_string(series.dim()) +
                            " does not match partition dimension " +
                            std::to_string(partition.dim()));
    }
    const std::size_t n_samples = series.size();
    if (n_samples <= lag_steps) {
        throw SeriesTooShort("series of length " + std::to_string(n_samples) +
                             " is too short for lag " + std::to_string(lag_steps));
    }

    // Box of every sample.
    std::vector<std::size_t> box(n_samples);
    for_each_chunk(n_samples, kChunk, options.threads,
                   [&](std::size_t, std::size_t begin, std::size_t end) {
                       for (std::size_t n = begin; n < end; ++n) {
                           box[n] = partition.locate_unchecked(series.row(n).data());
                       }
                   });

    // Visited boxes, sorted; compact index per sample.
    std::vector<std::size_t> visited;
    {
        std::vector<std::size_t> tmp;
        tmp.reserve(n_samples);
        for (std::size_t b : box) {
            if (b != partition.size()) tmp.push_back(b);
        }
        std::sort(tmp.begin(), tmp.end());
        tmp.erase(std::unique(tmp.begin(), tmp.end()), tmp.end());
        visited = std::move(tmp);
    }
    if (visited.size() >= kOutside) throw ArgumentError("too many visited boxes");
    std::vector<std::uint32_t> compact(n_samples, kOutside);
    for_each_chunk(n_samples, kChunk, options.threads,
                   [&](std::size_t, std::size_t begin, std::size_t end) {
                       for (std::size_t n = begin; n < end; ++n) {
                           if (box[n] == partition.size()) continue;
                           auto it = std::lower_bound(visited.begin(), visited.end(), box[n]);
                           compact[n] = static_cast<std::uint32_t>(it - visited.begin());
                       }
                   });
    box.clear();
    box.shrink_to_fit();

    // Pair counts, chunk-local then merged in chunk order.
    const std::size_t n_pairs = n_samples - lag_steps;
    const std::size_t n_chunks = (n_pairs + kChunk - 1) / kChunk;
    std::vector<std::unordered_map<std::uint64_t, std::int64_t>> partial(n_chunks);
    for_each_chunk(n_pairs, kChunk, options.threads,
                   [&](std::size_t c, std::size_t begin, std::size_t end) {
                       auto& local = partial[c];
                       for (std::size_t n = begin; n < end; ++n) {
                           const std::uint32_t src = compact[n];
                           const std::uint32_t dst = compact[n + lag_steps];
                           if (src == kOutside || dst == kOutside) continue;
                           ++local[pair_key(src, dst)];
                       }
                   });
    std::unordered_map<std::uint64_t, std::int64_t> pair_counts;
    for (auto& local : partial) {
        for (const auto& [key, count] : local) pair_counts[key] += count;
        local = {};
    }
    if (pair_counts.empty()) {
        throw EmptyEstimate("no transition pairs with both endpoints inside the domain");
    }

    // Prune sources below the count threshold; removing a box also removes
    // the transitions into it, so iterate to a fixed point.
    const std::int64_t threshold = std::max<std::int64_t>(1, options.min_count);
    const std::size_t n_visited = visited.size();
    std::vector<char> active(n_visited, 1);
    while (true) {
        std::vector<std::int64_t> totals(n_visited, 0);
        for (const auto& [key, count] : pair_counts) {
            const auto src = static_cast<std::uint32_t>(key >> 32);
            const auto dst = static_cast<std::uint32_t>(key & 0xffffffffu);
            if (active[src] && active[dst]) totals[src] += count;
        }
        bool changed = false;
        for (std::size_t j = 0; j < n_visited; ++j) {
            if (active[j] && totals[j] < threshold) {
                active[j] = 0;
                changed = true;
            }
        }
        if (!changed) break;
    }

    std::vector<std::uint32_t> remap(n_visited, kOutside);
    std::vector<std::size_t> active_boxes;
    for (std::size_t j = 0; j < n_visited; ++j) {
        if (active[j]) {
            remap[j] = static_cast<std::uint32_t>(active_boxes.size());
            active_boxes.push_back(visited[j]);
        }
    }
    if (active_boxes.empty()) {
        throw EmptyEstimate("no box reaches the minimum transition count " +
                            std::to_string(threshold));
    }

    // Sorted triplets so that the sparse layout is independent of hash order.
    std::vector<std::pair<std::uint64_t, std::int64_t>> kept;
    std::int64_t retained = 0;
    for (const auto& [key, count] : pair_counts) {
        const auto src = remap[key >> 32];
        const auto dst = remap[key & 0xffffffffu];
        if (src == kOutside || dst == kOutside) continue;
        kept.emplace_back(pair_key(src, dst), count);
        retained += count;
    }
    std::sort(kept.begin(), kept.end());
    std::vector<Eigen::Triplet<std::int64_t>> triplets;
    triplets.reserve(kept.size());
    for (const auto& [key, count] : kept) {
        triplets.emplace_back(static_cast<int>(key & 0xffffffffu), static_cast<int>(key >> 32),
                              count);
    }
    const auto n_active = static_cast<Eigen::Index>(active_boxes.size());
    TransitionMatrix::CountMatrix counts(n_active, n_active);
    counts.setFromTriplets(triplets.begin(), triplets.end());

    std::vector<double> occupancy(active_boxes.size(), 0.0);
    for (std::uint32_t c : compact) {
        if (c != kOutside && remap[c] != kOutside) occupancy[remap[c]] += 1.0;
    }

    const double dropped = 1.0 - static_cast<double>(retained) / static_cast<double>(n_pairs);
    return TransitionMatrix(std::move(active_boxes), std::move(counts), std::move(occupancy),
                            lag_steps, static_cast<double>(lag_steps) * series.sample_dt(),
                            dropped, partition);
}

std::vector<double> stationary_vector(const TransitionMatrix& tm,
                                      const StationaryOptions& options) {
    const auto n = static_cast<Eigen::Index>(tm.size());
    Eigen::VectorXd pi = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
    Eigen::VectorXd next(n);
    for (std::size_t it = 0; it < options.max_iterations; ++it) {
        next = 0.5 * (pi + tm.gamma() * pi);
        next /= next.sum();
        const double change = (next - pi).lpNorm<1>();
        pi.swap(next);
        if (change < options.tolerance) {
            std::vector<double> out(pi.data(), pi.data() + n);
            for (double& v : out) v = std::max(v, 0.0);
            return out;
        }
    }
    throw ConvergenceError("stationary vector did not converge in " +
                           std::to_string(options.max_iterations) + " iterations");
}

void export_transition(const TransitionMatrix& tm, const std::filesystem::path& prefix) {
    detail::json header{
        {"lag_steps", tm.lag_steps()},
        {"lag_time", tm.lag_time()},
        {"sample_dt", tm.sample_dt()},
        {"size", tm.size()},
        {"active_boxes", tm.active_boxes()},
        {"dropped_pair_fraction", tm.dropped_pair_fraction()},
    };
    if (tm.partition()) header["partition"] = detail::partition_json(*tm.partition());
    auto with_suffix = [&](const std::string& s) {
        return prefix.parent_path() / (prefix.filename().string() + s);
    };
    detail::write_json_file(with_suffix(".json"), header);

    std::ofstream coo(with_suffix("_counts.csv"), std::ios::binary);
    if (!coo) throw IoError("cannot write transition counts");
    coo << "i,j,count,prob\n";
    const auto& boxes = tm.active_boxes();
    std::string line;
    for (Eigen::Index j = 0; j < tm.counts().outerSize(); ++j) {
        TransitionMatrix::ProbMatrix::InnerIterator pit(tm.gamma(), j);
        for (TransitionMatrix::CountMatrix::InnerIterator it(tm.counts(), j); it; ++it) {
            if (it.value() == 0) continue;
            while (pit && pit.row() < it.row()) ++pit;
            line = std::to_string(boxes[static_cast<std::size_t>(it.row())]) + ',' +
                   std::to_string(boxes[static_cast<std::size_t>(j)]) + ',' +
                   std::to_string(it.value()) + ',';
            detail::append_double(line, pit.value());
            line.push_back('\n');
            coo << line;
        }
    }

    std::ofstream meas(with_suffix("_measure.csv"), std::ios::binary);
    if (!meas) throw IoError("cannot write measure");
    meas << "box,mass\n";
    for (std::size_t k = 0; k < tm.size(); ++k) {
        line = std::to_string(boxes[k]) + ',';
        detail::append_double(line, tm.measure()[k]);
        line.push_back('\n');
        meas << line;
    }
}

TransitionMatrix import_transition(const std::filesystem::path& prefix) {
    auto with_suffix = [&](const std::string& s) {
        return prefix.parent_path() / (prefix.filename().string() + s);
    };
    const auto header = detail::read_json_file(with_suffix(".json"));
    std::vector<std::size_t> boxes;
    std::size_t lag_steps = 0;
    double lag_time = 0.0, dropped = 0.0;
    std::optional<GridPartition> partition;
    try {
        boxes = header.at("active_boxes").get<std::vector<std::size_t>>();
        lag_steps = header.at("lag_steps").get<std::size_t>();
        lag_time = header.at("lag_time").get<double>();
        dropped = header.value("dropped_pair_fraction", 0.0);
        if (header.contains("partition")) partition = detail::partition_from(header["partition"]);
    } catch (const detail::json::exception& e) {
        throw IoError(std::string("transition header: ") + e.what());
    }
    std::map<std::size_t, std::size_t> index;
    for (std::size_t k = 0; k < boxes.size(); ++k) index[boxes[k]] = k;
    auto compact = [&](std::int64_t b, std::size_t lineno) {
        auto it = index.find(static_cast<std::size_t>(b));
        if (b < 0 || it == index.end()) {
            throw IoError("transition CSV line " + std::to_string(lineno) +
                          ": box not in active_boxes");
        }
        return it->second;
    };

    std::ifstream coo(with_suffix("_counts.csv"), std::ios::binary);
    if (!coo) throw IoError("cannot open transition counts CSV");
    std::string line;
    std::getline(coo, line);
    std::vector<Eigen::Triplet<std::int64_t>> triplets;
    for (std::size_t lineno = 2; std::getline(coo, line); ++lineno) {
        if (line.empty()) continue;
        auto f = detail::split_csv(line);
        if (f.size() != 4) throw IoError("transition CSV: expected 4 fields");
        const auto i = compact(detail::parse_int(f[0], lineno), lineno);
        const auto j = compact(detail::parse_int(f[1], lineno), lineno);
        triplets.emplace_back(static_cast<int>(i), static_cast<int>(j),
                              detail::parse_int(f[2], lineno));
    }
    const auto n = static_cast<Eigen::Index>(boxes.size());
    TransitionMatrix::CountMatrix counts(n, n);
    counts.setFromTriplets(triplets.begin(), triplets.end());

    std::ifstream meas(with_suffix("_measure.csv"), std::ios::binary);
    if (!meas) throw IoError("cannot open measure CSV");
    std::getline(meas, line);
    std::vector<double> measure(boxes.size(), 0.0);
    for (std::size_t lineno = 2; std::getline(meas, line); ++lineno) {
        if (line.empty()) continue;
        auto f = detail::split_csv(line);
        if (f.size() != 2) throw IoError("measure CSV: expected 2 fields");
        measure[compact(detail::parse_int(f[0], lineno), lineno)] =
            detail::parse_double(f[1], lineno);
    }
    return TransitionMatrix(std::move(boxes), std::move(counts), std::move(measure), lag_steps,
                            lag_time, dropped, std::move(partition));
}

}  // namespace rpres
