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

#include "rpres/sde.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <boost/random/normal_distribution.hpp>

#include "csv_util.hpp"
#include "rpres/error.hpp"
#include "rpres/random.hpp"

namespace rpres {

SdeModel::SdeModel(std::string name, std::size_t dim_state, std::size_t dim_noise, ParamMap params,
                   DriftFn drift, DiffusionFn diffusion, bool additive_noise)
    : name_(std::move(name)),
      dim_state_(dim_state),
      dim_noise_(dim_noise),
      params_(std::move(params)),
      drift_(std::move(drift)),
      diffusion_(std::move(diffusion)),
      additive_(additive_noise) {
    if (dim_state_ == 0 || dim_noise_ == 0) {
        throw ArgumentError("SdeModel '" + name_ + "': dimensions must be positive");
    }
    if (!drift_ || !diffusion_) {
        throw ArgumentError("SdeModel '" + name_ + "': drift and diffusion are required");
    }
    for (std::size_t i = 0; i < dim_state_; ++i) labels_.push_back("x" + std::to_string(i));
}

SdeModel SdeModel::with_labels(std::vector<std::string> labels) const {
    if (labels.size() != dim_state_) throw ArgumentError("label count must equal dim_state");
    SdeModel copy = *this;
    copy.labels_ = std::move(labels);
    return copy;
}

void SdeModel::check_dim(std::span<const double> x) const {
    if (x.size() != dim_state_) {
        throw ArgumentError("model '" + name_ + "' expects a state of dimension " +
                            std::to_string(dim_state_) + ", got " + std::to_string(x.size()));
    }
}

std::vector<double> SdeModel::drift(std::span<const double> x) const {
    check_dim(x);
    std::vector<double> out(dim_state_);
    drift_(x, out);
    return out;
}

Eigen::MatrixXd SdeModel::diffusion(std::span<const double> x) const {
    check_dim(x);
    std::vector<double> buf(dim_state_ * dim_noise_);
    diffusion_(x, buf);
    Eigen::MatrixXd d(dim_state_, dim_noise_);
    for (std::size_t i = 0; i < dim_state_; ++i) {
        for (std::size_t j = 0; j < dim_noise_; ++j) d(i, j) = buf[i * dim_noise_ + j];
    }
    return d;
}

Eigen::MatrixXd SdeModel::sigma(std::span<const double> x) const {
    const Eigen::MatrixXd d = diffusion(x);
    return d * d.transpose();
}

std::vector<double> drift_eval(const SdeModel& model, std::span<const double> x) {
    return model.drift(x);
}

namespace {

ParamMap merge_params(const std::string& model, ParamMap defaults, const ParamMap& overrides) {
    for (const auto& [key, value] : overrides) {
        auto it = defaults.find(key);
        if (it == defaults.end()) {
            throw ArgumentError("model '" + model + "' has no parameter '" + key + "'");
        }
        if (!std::isfinite(value)) throw ArgumentError("parameter '" + key + "' must be finite");
        it->second = value;
    }
    return defaults;
}

// Diagonal constant noise: D = diag(scales).
SdeModel::DiffusionFn diagonal_noise(std::vector<double> scales) {
    return [scales = std::move(scales)](std::span<const double>, std::span<double> out) {
        const std::size_t n = scales.size();
        std::fill(out.begin(), out.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) out[i * n + i] = scales[i];
    };
}

SdeModel make_slowfast(const ParamMap& p) {
    const double lambda = p.at("lambda"), f = p.at("f"), gamma = p.at("gamma");
    const double eps = p.at("eps"), sigma = p.at("sigma");
    if (eps <= 0.0) throw ArgumentError("slowfast3d: eps must be positive");
    auto drift = [=](std::span<const double> x, std::span<double> out) {
        const double z = x[2];
        out[0] = lambda * x[0] - f * x[1] - gamma * x[0] * z;
        out[1] = f * x[0] + lambda * x[1] - gamma * x[1] * z;
        out[2] = -(z - x[0] * x[0] - x[1] * x[1]) / eps;
    };
    return SdeModel("slowfast3d", 3, 3, p, drift,
                    diagonal_noise({sigma, sigma, sigma / std::sqrt(eps)}), true)
        .with_labels({"x", "y", "z"});
}

SdeModel make_hopf(const ParamMap& p) {
    const double lambda = p.at("lambda"), f = p.at("f"), gamma = p.at("gamma");
    const double sigma = p.at("sigma");
    auto drift = [=](std::span<const double> x, std::span<double> out) {
        const double r2 = x[0] * x[0] + x[1] * x[1];
        out[0] = lambda * x[0] - f * x[1] - gamma * x[0] * r2;
        out[1] = f * x[0] + lambda * x[1] - gamma * x[1] * r2;
    };
    return SdeModel("hopf2d", 2, 2, p, drift, diagonal_noise({sigma, sigma}), true)
        .with_labels({"u", "v"});
}

SdeModel make_ou1d(const ParamMap& p) {
    const double a = p.at("a"), s = p.at("s");
    auto drift = [=](std::span<const double> x, std::span<double> out) { out[0] = -a * x[0]; };
    return SdeModel("ou1d", 1, 1, p, drift, diagonal_noise({s}), true).with_labels({"x"});
}

SdeModel make_ou2d(const ParamMap& p) {
    const double a = p.at("a"), omega = p.at("omega"), s = p.at("s");
    auto drift = [=](std::span<const double> x, std::span<double> out) {
        out[0] = -a * x[0] - omega * x[1];
        out[1] = omega * x[0] - a * x[1];
    };
    return SdeModel("ou2d-rotating", 2, 2, p, drift, diagonal_noise({s, s}), true)
        .with_labels({"x", "y"});
}

}  // namespace

std::vector<std::string> builtin_model_names() {
    return {"slowfast3d", "hopf2d", "ou1d", "ou2d-rotating"};
}

ParamMap builtin_default_params(const std::string& name) {
    // Slow-fast and Hopf defaults are the no-time-scale-separation regime.
    if (name == "slowfast3d") {
        return {{"lambda", 1e-3}, {"f", 10.0}, {"gamma", 1.0}, {"eps", 10.0}, {"sigma", 0.3}};
    }
    if (name == "hopf2d") return {{"lambda", 1e-3}, {"f", 10.0}, {"gamma", 1.0}, {"sigma", 0.3}};
    if (name == "ou1d") return {{"a", 1.0}, {"s", std::sqrt(2.0)}};
    if (name == "ou2d-rotating") return {{"a", 0.5}, {"omega", 2.0}, {"s", 1.0}};
    throw ArgumentError("unknown model '" + name + "'");
}

SdeModel builtin_model(const std::string& name, const ParamMap& overrides) {
    const ParamMap p = merge_params(name, builtin_default_params(name), overrides);
    if (name == "slowfast3d") return make_slowfast(p);
    if (name == "hopf2d") return make_hopf(p);
    if (name == "ou1d") return make_ou1d(p);
    return make_ou2d(p);
}

void SimulationConfig::validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ArgumentError("dt must be positive and finite");
    if (stride < 1) throw ArgumentError("stride must be >= 1");
    if (x0.empty()) throw ArgumentError("x0 must be set");
    for (double v : x0) {
        if (!std::isfinite(v)) throw ArgumentError("x0 must be finite");
    }
}

TimeSeries::TimeSeries(double sample_dt, std::size_t dim, std::vector<double> data,
                       std::vector<std::string> labels)
    : sample_dt_(sample_dt), dim_(dim), data_(std::move(data)), labels_(std::move(labels)) {
    if (!(sample_dt_ > 0.0) || !std::isfinite(sample_dt_)) {
        throw ArgumentError("sample_dt must be positive");
    }
    if (dim_ == 0) throw ArgumentError("time series dimension must be positive");
    if (data_.empty() || data_.size() % dim_ != 0) {
        throw ArgumentError("time series needs at least one complete sample");
    }
    for (double v : data_) {
        if (!std::isfinite(v)) throw ArgumentError("time series entries must be finite");
    }
    if (labels_.empty()) {
        for (std::size_t i = 0; i < dim_; ++i) labels_.push_back("y" + std::to_string(i));
    } else if (labels_.size() != dim_) {
        throw ArgumentError("label count must equal series dimension");
    }
}

std::vector<double> TimeSeries::column(std::size_t c) const {
    if (c >= dim_) throw ArgumentError("column index out of range");
    std::vector<double> out(size());
    for (std::size_t n = 0; n < out.size(); ++n) out[n] = data_[n * dim_ + c];
    return out;
}

TimeSeries euler_maruyama(const SdeModel& model, const SimulationConfig& config) {
    config.validate();
    const std::size_t d = model.dim_state();
    const std::size_t q = model.dim_noise();
    if (config.x0.size() != d) {
        throw ArgumentError("x0 has dimension " + std::to_string(config.x0.size()) +
                            ", model expects " + std::to_string(d));
    }

    Xoshiro256pp rng(config.seed);
    boost::random::normal_distribution<double> normal(0.0, 1.0);

    const double dt = config.dt;
    const double sqrt_dt = std::sqrt(dt);
    const std::size_t total = config.transient_steps + config.n_steps;
    const std::size_t n_out = config.n_steps / config.stride + 1;

    std::vector<double> x = config.x0;
    std::vector<double> f(d), noise(d * q), xi(q);
    std::vector<double> out;
    out.reserve(n_out * d);
    if (model.additive_noise()) model.diffusion_into(x, noise);

    for (std::size_t step = 0;; ++step) {
        if (step >= config.transient_steps && (step - config.transient_steps) % config.stride == 0) {
            out.insert(out.end(), x.begin(), x.end());
        }
        if (step == total) break;

        model.drift_into(x, f);
        if (!model.additive_noise()) model.diffusion_into(x, noise);
        for (auto& v : xi) v = normal(rng);
        bool finite = true;
        for (std::size_t i = 0; i < d; ++i) {
            double dw = 0.0;
            for (std::size_t j = 0; j < q; ++j) dw += noise[i * q + j] * xi[j];
            x[i] += f[i] * dt + dw * sqrt_dt;
            finite = finite && std::isfinite(x[i]);
        }
        if (!finite) {
            throw SimulationDiverged(step + 1, "simulation diverged at step " +
                                                   std::to_string(step + 1) + " of model '" +
                                                   model.name() + "'");
        }
    }
    return TimeSeries(dt * static_cast<double>(config.stride), d, std::move(out), model.labels());
}

TimeSeries observe(const TimeSeries& series, std::span<const std::size_t> components) {
    if (components.empty()) throw ArgumentError("observe: no components selected");
    for (std::size_t c : components) {
        if (c >= series.dim()) {
            throw ArgumentError("observe: component " + std::to_string(c) +
                                " out of range for dimension " + std::to_string(series.dim()));
        }
    }
    const std::size_t p = components.size();
    std::vector<double> data(series.size() * p);
    std::vector<std::string> labels;
    for (std::size_t c : components) labels.push_back(series.labels()[c]);
    for (std::size_t n = 0; n < series.size(); ++n) {
        for (std::size_t k = 0; k < p; ++k) data[n * p + k] = series(n, components[k]);
    }
    return TimeSeries(series.sample_dt(), p, std::move(data), std::move(labels));
}

void write_csv(const TimeSeries& series, std::ostream& out) {
    out << "t";
    for (const auto& l : series.labels()) out << ',' << l;
    out << '\n';
    std::string line;
    for (std::size_t n = 0; n < series.size(); ++n) {
        line.clear();
        detail::append_double(line, static_cast<double>(n) * series.sample_dt());
        for (std::size_t c = 0; c < series.dim(); ++c) {
            line.push_back(',');
            detail::append_double(line, series(n, c));
        }
        line.push_back('\n');
        out << line;
    }
}

void write_csv(const TimeSeries& series, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    write_csv(series, out);
}

TimeSeries read_series_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw IoError("trajectory CSV: missing header");
    auto header = detail::split_csv(line);
    if (header.size() < 2 || header[0] != "t") {
        throw IoError("trajectory CSV: header must be `t,<labels...>`");
    }
    const std::size_t p = header.size() - 1;
    std::vector<std::string> labels(header.begin() + 1, header.end());
    std::vector<double> data, times;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto fields = detail::split_csv(line);
        if (fields.size() != p + 1) {
            throw IoError("trajectory CSV: wrong field count on line " + std::to_string(lineno));
        }
        times.push_back(detail::parse_double(fields[0], lineno));
        for (std::size_t k = 1; k <= p; ++k) data.push_back(detail::parse_double(fields[k], lineno));
    }
    if (times.empty()) throw IoError("trajectory CSV: no samples");
    const double sample_dt =
        times.size() > 1 ? (times.back() - times.front()) / static_cast<double>(times.size() - 1)
                         : 1.0;
    return TimeSeries(sample_dt, p, std::move(data), std::move(labels));
}

TimeSeries read_series_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return read_series_csv(in);
}

}  // namespace rpres
