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
#include <functional>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace rpres {

using ParamMap = std::map<std::string, double>;

/// Autonomous Itô SDE  dX = F(X) dt + D(X) dW  on R^d driven by q Brownian
/// motions. Immutable after construction.
class SdeModel {
public:
    /// Writes F(x) into `out` (length d).
    using DriftFn = std::function<void(std::span<const double> x, std::span<double> out)>;
    /// Writes D(x) row-major into `out` (length d*q).
    using DiffusionFn = std::function<void(std::span<const double> x, std::span<double> out)>;

    SdeModel(std::string name, std::size_t dim_state, std::size_t dim_noise, ParamMap params,
             DriftFn drift, DiffusionFn diffusion, bool additive_noise = false);

    const std::string& name() const noexcept { return name_; }
    std::size_t dim_state() const noexcept { return dim_state_; }
    std::size_t dim_noise() const noexcept { return dim_noise_; }
    const ParamMap& params() const noexcept { return params_; }
    /// True when D does not depend on the state.
    bool additive_noise() const noexcept { return additive_; }
    const std::vector<std::string>& labels() const noexcept { return labels_; }
    SdeModel with_labels(std::vector<std::string> labels) const;

    std::vector<double> drift(std::span<const double> x) const;
    Eigen::MatrixXd diffusion(std::span<const double> x) const;
    /// Sigma(x) = D(x) D(x)^T.
    Eigen::MatrixXd sigma(std::span<const double> x) const;

    // Unchecked hot-path evaluations.
    void drift_into(std::span<const double> x, std::span<double> out) const { drift_(x, out); }
    void diffusion_into(std::span<const double> x, std::span<double> out) const {
        diffusion_(x, out);
    }

private:
    void check_dim(std::span<const double> x) const;

    std::string name_;
    std::size_t dim_state_;
    std::size_t dim_noise_;
    ParamMap params_;
    DriftFn drift_;
    DiffusionFn diffusion_;
    bool additive_;
    std::vector<std::string> labels_;
};

/// Evaluate F(x); throws ArgumentError on a dimension mismatch.
std::vector<double> drift_eval(const SdeModel& model, std::span<const double> x);

/// Built-in model names: "slowfast3d", "hopf2d", "ou1d", "ou2d-rotating".
/// `overrides` replace entries of the model's default parameter record;
/// unknown keys are rejected.
SdeModel builtin_model(const std::string& name, const ParamMap& overrides = {});
std::vector<std::string> builtin_model_names();
ParamMap builtin_default_params(const std::string& name);

struct SimulationConfig {
    double dt = 1e-3;
    std::size_t n_steps = 0;
    std::size_t transient_steps = 0;
    std::size_t stride = 1;
    std::uint64_t seed = 0;
    std::vector<double> x0;

    void validate() const;
};

/// Uniformly sampled trajectory; rows are samples. Entries are finite.
class TimeSeries {
public:
    TimeSeries(double sample_dt, std::size_t dim, std::vector<double> data,
               std::vector<std::string> labels = {});

    double sample_dt() const noexcept { return sample_dt_; }
    std::size_t size() const noexcept { return data_.size() / dim_; }
    std::size_t dim() const noexcept { return dim_; }
    const std::vector<std::string>& labels() const noexcept { return labels_; }
    const std::vector<double>& data() const noexcept { return data_; }

    std::span<const double> row(std::size_t n) const {
        return {data_.data() + n * dim_, dim_};
    }
    double operator()(std::size_t n, std::size_t c) const { return data_[n * dim_ + c]; }
    std::vector<double> column(std::size_t c) const;

    friend bool operator==(const TimeSeries&, const TimeSeries&) = default;

private:
    double sample_dt_;
    std::size_t dim_;
    std::vector<double> data_;
    std::vector<std::string> labels_;
};

/// X_{n+1} = X_n + F(X_n) dt + D(X_n) sqrt(dt) xi_n. The first
/// `transient_steps` steps are discarded, then every stride-th state is kept,
/// starting with the post-transient state. Bit-reproducible from the seed.
TimeSeries euler_maruyama(const SdeModel& model, const SimulationConfig& config);

/// Column projection (duplicates allowed).
TimeSeries observe(const TimeSeries& series, std::span<const std::size_t> components);

// CSV: header `t,<labels...>`, one row per sample, round-trip precision.
void write_csv(const TimeSeries& series, std::ostream& out);
void write_csv(const TimeSeries& series, const std::filesystem::path& path);
TimeSeries read_series_csv(std::istream& in);
TimeSeries read_series_csv(const std::filesystem::path& path);

}  // namespace rpres
