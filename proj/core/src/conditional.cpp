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


#include "rpres/conditional.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <Eigen/Eigenvalues>
#include <boost/random/normal_distribution.hpp>

#include "csv_util.hpp"
#include "rpres/error.hpp"
#include "rpres/parallel.hpp"
#include "rpres/random.hpp"

namespace rpres {

ConditionalField::ConditionalField(GridPartition partition, std::vector<std::size_t> projection,
                                   std::vector<std::size_t> extra_components,
                                   std::size_t min_count, std::vector<std::int64_t> counts,
                                   std::vector<double> drift_bar, std::vector<double> sigma_bar,
                                   std::vector<double> extra)
    : partition_(std::move(partition)),
      projection_(std::move(projection)),
      extra_components_(std::move(extra_components)),
      min_count_(min_count),
      counts_(std::move(counts)),
      drift_bar_(std::move(drift_bar)),
      sigma_bar_(std::move(sigma_bar)),
      extra_(std::move(extra)) {
    const std::size_t m = partition_.size();
    const std::size_t p = projection_.size();
    if (p != partition_.dim()) throw ArgumentError("projection size must match the partition dimension");
    if (counts_.size() != m || drift_bar_.size() != m * p || sigma_bar_.size() != m * p * p ||
        extra_.size() != m * extra_components_.size()) {
        throw ArgumentError("conditional field arrays do not match the partition size");
    }
}

std::size_t ConditionalField::usable_count() const {
    std::size_t n = 0;
    for (std::size_t b = 0; b < counts_.size(); ++b) n += usable(b) ? 1 : 0;
    return n;
}

namespace {

struct Accumulator {
    std::vector<std::int64_t> counts;
    std::vector<double> drift, sigma, extra;

    Accumulator(std::size_t m, std::size_t p, std::size_t e)
        : counts(m, 0), drift(m * p, 0.0), sigma(m * p * p, 0.0), extra(m * e, 0.0) {}
};

void projected_sigma(std::span<const double> noise, std::size_t q,
                     std::span<const std::size_t> projection, std::span<double> out) {
    const std::size_t p = projection.size();
    for (std::size_t a = 0; a < p; ++a) {
        for (std::size_t b = a; b < p; ++b) {
            double s = 0.0;
            for (std::size_t j = 0; j < q; ++j) {
                s += noise[projection[a] * q + j] * noise[projection[b] * q + j];
            }
            out[a * p + b] = s;
            out[b * p + a] = s;
        }
    }
}

}  // namespace

ConditionalField estimate_conditional_field(const TimeSeries& full_series, const SdeModel& model,
                                            const GridPartition& partition,
                                            std::span<const std::size_t> projection,
                                            const ConditionalOptions& options) {
    const std::size_t d = model.dim_state();
    const std::size_t q = model.dim_noise();
    const std::size_t p = projection.size();
    if (full_series.dim() != d) {
        throw ArgumentError("series dimension " + std::to_string(full_series.dim()) +
                            " does not match model dimension " + std::to_string(d));
    }
    if (p == 0 || p != partition.dim()) {
        throw ArgumentError("projection must have one index per partition dimension");
    }
    for (std::size_t c : projection) {
        if (c >= d) throw ArgumentError("projection index out of range");
    }
    for (std::size_t c : options.extra_components) {
        if (c >= d) throw ArgumentError("extra component index out of range");
    }
    const std::size_t m = partition.size();
    const std::size_t e = options.extra_components.size();
    const std::size_t n = full_series.size();

    // A fixed chunk count keeps the summation order independent of the
    // number of workers.
    constexpr std::size_t kChunks = 16;
    const std::size_t chunk_size = std::max<std::size_t>(4096, (n + kChunks - 1) / kChunks);
    const std::size_t chunks = (n + chunk_size - 1) / chunk_size;
    std::vector<Accumulator> acc;
    acc.reserve(chunks);
    for (std::size_t c = 0; c < chunks; ++c) acc.emplace_back(m, p, e);

    std::vector<double> fixed_sigma(p * p, 0.0);
    if (model.additive_noise()) {
        std::vector<double> noise(d * q);
        model.diffusion_into(full_series.row(0), noise);
        projected_sigma(noise, q, projection, fixed_sigma);
    }

    for_each_chunk(n, chunk_size, options.threads, [&](std::size_t c, std::size_t begin, std::size_t end) {
        Accumulator& a = acc[c];
        std::vector<double> v(p), f(d), noise(d * q), s(p * p);
        for (std::size_t i = begin; i < end; ++i) {
            const auto x = full_series.row(i);
            for (std::size_t k = 0; k < p; ++k) v[k] = x[projection[k]];
            const std::size_t box = partition.locate_unchecked(v.data());
            if (box == m) continue;
            model.drift_into(x, f);
            const double* sig = fixed_sigma.data();
            if (!model.additive_noise()) {
                model.diffusion_into(x, noise);
                projected_sigma(noise, q, projection, s);
                sig = s.data();
            }
            ++a.counts[box];
            for (std::size_t k = 0; k < p; ++k) a.drift[box * p + k] += f[projection[k]];
            for (std::size_t k = 0; k < p * p; ++k) a.sigma[box * p * p + k] += sig[k];
            for (std::size_t k = 0; k < e; ++k) a.extra[box * e + k] += x[options.extra_components[k]];
        }
    });

    Accumulator total(m, p, e);
    for (const Accumulator& a : acc) {
        for (std::size_t b = 0; b < m; ++b) total.counts[b] += a.counts[b];
        for (std::size_t k = 0; k < total.drift.size(); ++k) total.drift[k] += a.drift[k];
        for (std::size_t k = 0; k < total.sigma.size(); ++k) total.sigma[k] += a.sigma[k];
        for (std::size_t k = 0; k < total.extra.size(); ++k) total.extra[k] += a.extra[k];
    }
    acc.clear();

    const std::size_t min_count = std::max<std::size_t>(options.min_count, 1);
    bool any_usable = false;
    for (std::size_t b = 0; b < m; ++b) {
        const auto cnt = total.counts[b];
        if (cnt == 0) continue;
        any_usable = any_usable || static_cast<std::size_t>(cnt) >= min_count;
        const double inv = 1.0 / static_cast<double>(cnt);
        for (std::size_t k = 0; k < p; ++k) total.drift[b * p + k] *= inv;
        for (std::size_t k = 0; k < p * p; ++k) total.sigma[b * p * p + k] *= inv;
        for (std::size_t k = 0; k < e; ++k) total.extra[b * e + k] *= inv;
        // Symmetrize against rounding in the accumulation.
        for (std::size_t i = 0; i < p; ++i) {
            for (std::size_t j = i + 1; j < p; ++j) {
                const double avg = 0.5 * (total.sigma[b * p * p + i * p + j] +
                                          total.sigma[b * p * p + j * p + i]);
                total.sigma[b * p * p + i * p + j] = avg;
                total.sigma[b * p * p + j * p + i] = avg;
            }
        }
    }
    if (!any_usable) {
        throw InsufficientData("no box reaches min_count = " + std::to_string(min_count));
    }
    return ConditionalField(partition, {projection.begin(), projection.end()},
                            options.extra_components, min_count, std::move(total.counts),
                            std::move(total.drift), std::move(total.sigma), std::move(total.extra));
}

namespace {

bool fold_into_domain(std::vector<double>& v, const GridPartition& partition) {
    bool folded = false;
    for (std::size_t k = 0; k < v.size(); ++k) {
        const double lo = partition.lows()[k];
        const double hi = partition.highs()[k];
        const double width = hi - lo;
        if (v[k] >= lo && v[k] <= hi) continue;
        folded = true;
        // Mirror repeatedly; the period of the reflection is twice the width.
        double r = std::fmod(v[k] - lo, 2.0 * width);
        if (r < 0) r += 2.0 * width;
        v[k] = r <= width ? lo + r : hi - (r - width);
    }
    return folded;
}

}  // namespace

ReducedSimulation simulate_reduced(const ConditionalField& field, const SimulationConfig& config,
                                   ExitPolicy policy) {
    config.validate();
    const std::size_t p = field.dim();
    const GridPartition& partition = field.partition();
    if (config.x0.size() != p) {
        throw ArgumentError("x0 has dimension " + std::to_string(config.x0.size()) +
                            ", reduced field expects " + std::to_string(p));
    }
    const std::size_t m = partition.size();
    std::size_t box = partition.locate_unchecked(config.x0.data());
    if (box == m || !field.usable(box)) {
        throw ArgumentError("initial state must lie in a usable box");
    }

    // Symmetric square roots, computed once per usable box.
    std::vector<double> roots(m * p * p, 0.0);
    std::size_t clipped = 0;
    for (std::size_t b = 0; b < m; ++b) {
        if (!field.usable(b)) continue;
        Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> s(
            field.sigma_bar(b).data(), static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
        Eigen::VectorXd ev = es.eigenvalues();
        if (ev.minCoeff() < 0.0) ++clipped;
        ev = ev.cwiseMax(0.0).cwiseSqrt();
        const Eigen::MatrixXd root = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
        for (std::size_t i = 0; i < p; ++i) {
            for (std::size_t j = 0; j < p; ++j) {
                roots[b * p * p + i * p + j] = root(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            }
        }
    }

    Xoshiro256pp rng(config.seed);
    boost::random::normal_distribution<double> normal(0.0, 1.0);
    const double dt = config.dt;
    const double sqrt_dt = std::sqrt(dt);
    const std::size_t total = config.transient_steps + config.n_steps;

    std::vector<double> v = config.x0, next(p), xi(p);
    std::vector<double> out;
    out.reserve((config.n_steps / config.stride + 1) * p);
    std::size_t reflections = 0;

    for (std::size_t step = 0;; ++step) {
        if (step >= config.transient_steps && (step - config.transient_steps) % config.stride == 0) {
            out.insert(out.end(), v.begin(), v.end());
        }
        if (step == total) break;

        const auto f = field.drift_bar(box);
        const double* root = roots.data() + box * p * p;
        for (auto& z : xi) z = normal(rng);
        for (std::size_t i = 0; i < p; ++i) {
            double dw = 0.0;
            for (std::size_t j = 0; j < p; ++j) dw += root[i * p + j] * xi[j];
            next[i] = v[i] + f[i] * dt + dw * sqrt_dt;
        }
        std::size_t next_box = partition.locate_unchecked(next.data());
        if (next_box == m || !field.usable(next_box)) {
            if (policy == ExitPolicy::Stop) {
                throw DomainExit(step + 1, "reduced trajectory left the usable domain at step " +
                                               std::to_string(step + 1));
            }
            ++reflections;
            if (fold_into_domain(next, partition)) next_box = partition.locate_unchecked(next.data());
            if (next_box == m || !field.usable(next_box)) continue;
        }
        v.swap(next);
        box = next_box;
    }

    std::vector<std::string> labels;
    for (std::size_t c : field.projection()) labels.push_back("v" + std::to_string(c));
    return {TimeSeries(dt * static_cast<double>(config.stride), p, std::move(out), std::move(labels)),
            clipped, reflections};
}

void write_csv(const ConditionalField& field, const std::filesystem::path& path,
               std::span<const std::string> extra_labels) {
    const std::size_t p = field.dim();
    const std::size_t e = field.extra_components().size();
    if (!extra_labels.empty() && extra_labels.size() != e) {
        throw ArgumentError("one label per extra component is required");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << "box,count";
    for (std::size_t k = 0; k < p; ++k) out << ",Fbar_" << k + 1;
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = i; j < p; ++j) out << ",Sigmabar_" << i + 1 << j + 1;
    }
    for (std::size_t k = 0; k < e; ++k) {
        if (extra_labels.empty()) {
            out << ",extra_" << field.extra_components()[k];
        } else {
            out << ',' << extra_labels[k] << "bar";
        }
    }
    out << '\n';
    std::string line;
    for (std::size_t b = 0; b < field.partition().size(); ++b) {
        if (field.count(b) == 0) continue;
        line = std::to_string(b) + ',' + std::to_string(field.count(b));
        for (double x : field.drift_bar(b)) {
            line.push_back(',');
            detail::append_double(line, x);
        }
        const auto s = field.sigma_bar(b);
        for (std::size_t i = 0; i < p; ++i) {
            for (std::size_t j = i; j < p; ++j) {
                line.push_back(',');
                detail::append_double(line, s[i * p + j]);
            }
        }
        for (double x : field.extra(b)) {
            line.push_back(',');
            detail::append_double(line, x);
        }
        line.push_back('\n');
        out << line;
    }
}

}  // namespace rpres
