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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <vector>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "rpres/error.hpp"
#include "rpres/random.hpp"

namespace rpres {
namespace {

const GridPartition kSquare({-2.0, -2.0}, {2.0, 2.0}, {8, 8});
const std::vector<std::size_t> kXY{0, 1};

SdeModel constant_drift(double cx, double cy) {
    return SdeModel(
        "constant", 3, 3, {},
        [cx, cy](std::span<const double>, std::span<double> out) {
            out[0] = cx;
            out[1] = cy;
            out[2] = 0.0;
        },
        [](std::span<const double>, std::span<double> out) {
            for (auto& v : out) v = 0.0;
            out[0] = 0.5;
            out[4] = 0.5;
            out[8] = 1.0;
        },
        true);
}

TimeSeries centers_with_random_z(std::size_t per_box, std::uint64_t seed) {
    Xoshiro256pp rng(seed);
    std::vector<double> data;
    for (std::size_t b = 0; b < kSquare.size(); ++b) {
        const auto c = kSquare.center(b);
        for (std::size_t i = 0; i < per_box; ++i) {
            data.insert(data.end(), {c[0], c[1], static_cast<double>(rng() % 1000) / 100.0});
        }
    }
    return TimeSeries(1.0, 3, std::move(data));
}

TEST(ConditionalField, DriftOfObservedCoordinatesOnly) {
    // With gamma = 0 the x, y drift ignores z.
    const auto model = builtin_model("slowfast3d", {{"gamma", 0.0}});
    const auto field = estimate_conditional_field(centers_with_random_z(5, 1), model, kSquare, kXY);
    for (std::size_t b = 0; b < kSquare.size(); ++b) {
        const auto c = kSquare.center(b);
        const auto f = drift_eval(model, std::vector<double>{c[0], c[1], 0.0});
        EXPECT_NEAR(field.drift_bar(b)[0], f[0], 1e-14);
        EXPECT_NEAR(field.drift_bar(b)[1], f[1], 1e-14);
    }
}

TEST(ConditionalField, ConstantDrift) {
    const auto field =
        estimate_conditional_field(centers_with_random_z(3, 2), constant_drift(0.25, -1.5), kSquare, kXY);
    for (std::size_t b = 0; b < kSquare.size(); ++b) {
        EXPECT_EQ(field.count(b), 3);
        EXPECT_DOUBLE_EQ(field.drift_bar(b)[0], 0.25);
        EXPECT_DOUBLE_EQ(field.drift_bar(b)[1], -1.5);
        EXPECT_DOUBLE_EQ(field.sigma_bar(b)[0], 0.25);
        EXPECT_DOUBLE_EQ(field.sigma_bar(b)[1], 0.0);
        EXPECT_DOUBLE_EQ(field.sigma_bar(b)[3], 0.25);
    }
}

TEST(ConditionalField, ExtraCoordinateMeans) {
    const std::vector<double> data{0.1, 0.1, 1.0, 0.2, 0.2, 3.0, -1.9, -1.9, 7.0};
    ConditionalOptions opts;
    opts.extra_components = {2};
    const auto field = estimate_conditional_field(TimeSeries(1.0, 3, data), constant_drift(0, 0), kSquare, kXY, opts);
    const auto b = *kSquare.locate(std::vector<double>{0.1, 0.1});
    EXPECT_EQ(field.count(b), 2);
    EXPECT_DOUBLE_EQ(field.extra(b)[0], 2.0);
    EXPECT_DOUBLE_EQ(field.extra(0)[0], 7.0);
}

TEST(ConditionalField, InsufficientData) {
    ConditionalOptions opts;
    opts.min_count = 10;
    EXPECT_THROW(estimate_conditional_field(centers_with_random_z(3, 2), constant_drift(0, 0), kSquare, kXY, opts),
                 InsufficientData);
}

TEST(ConditionalField, ArgumentChecks) {
    const std::vector<std::size_t> bad{0, 5};
    EXPECT_THROW(estimate_conditional_field(centers_with_random_z(1, 2), constant_drift(0, 0), kSquare, bad),
                 ArgumentError);
    const std::vector<std::size_t> one{0};
    EXPECT_THROW(estimate_conditional_field(centers_with_random_z(1, 2), constant_drift(0, 0), kSquare, one),
                 ArgumentError);
}

TimeSeries slowfast_run(std::uint64_t seed) {
    SimulationConfig cfg;
    cfg.dt = 1e-3;
    cfg.n_steps = 200000;
    cfg.stride = 5;
    cfg.seed = seed;
    cfg.x0 = {0.5, 0.0, 0.25};
    return euler_maruyama(builtin_model("slowfast3d"), cfg);
}

TEST(ConditionalField, IndependentOfThreadCount) {
    const auto ts = slowfast_run(3);
    const auto model = builtin_model("slowfast3d");
    ConditionalOptions one{.min_count = 1, .extra_components = {2}, .threads = 1};
    ConditionalOptions many{.min_count = 1, .extra_components = {2}, .threads = 3};
    const auto a = estimate_conditional_field(ts, model, kSquare, kXY, one);
    const auto b = estimate_conditional_field(ts, model, kSquare, kXY, many);
    for (std::size_t box = 0; box < kSquare.size(); ++box) {
        EXPECT_EQ(a.count(box), b.count(box));
        for (std::size_t k = 0; k < 2; ++k) EXPECT_EQ(a.drift_bar(box)[k], b.drift_bar(box)[k]);
        EXPECT_EQ(a.extra(box)[0], b.extra(box)[0]);
    }
}

TEST(ConditionalField, SigmaSymmetricPositiveSemidefinite) {
    const auto ts = slowfast_run(4);
    const auto model = builtin_model("slowfast3d");
    const auto field = estimate_conditional_field(ts, model, kSquare, kXY, {.min_count = 10});
    for (std::size_t b = 0; b < kSquare.size(); ++b) {
        if (!field.usable(b)) continue;
        const auto s = field.sigma_bar(b);
        EXPECT_NEAR(s[1], s[2], 1e-12);
        Eigen::Matrix2d m;
        m << s[0], s[1], s[2], s[3];
        EXPECT_GE(Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(m).eigenvalues().minCoeff(), -1e-10);
    }
}

ConditionalField uniform_field(double fx, double fy, double s2) {
    const std::size_t m = kSquare.size();
    std::vector<double> drift, sigma;
    for (std::size_t b = 0; b < m; ++b) {
        drift.insert(drift.end(), {fx, fy});
        sigma.insert(sigma.end(), {s2, 0.0, 0.0, s2});
    }
    return ConditionalField(kSquare, kXY, {}, 1, std::vector<std::int64_t>(m, 1), drift, sigma, {});
}

TEST(SimulateReduced, NoDriftNoNoiseIsConstant) {
    SimulationConfig cfg;
    cfg.dt = 0.01;
    cfg.n_steps = 100;
    cfg.x0 = {0.3, -0.7};
    const auto out = simulate_reduced(uniform_field(0.0, 0.0, 0.0), cfg);
    for (std::size_t n = 0; n < out.series.size(); ++n) {
        EXPECT_EQ(out.series(n, 0), 0.3);
        EXPECT_EQ(out.series(n, 1), -0.7);
    }
}

TEST(SimulateReduced, ConstantDriftStraightLine) {
    SimulationConfig cfg;
    cfg.dt = 0.01;
    cfg.n_steps = 100;
    cfg.x0 = {-1.0, 0.5};
    const auto out = simulate_reduced(uniform_field(0.5, -0.25, 0.0), cfg);
    for (std::size_t n = 0; n < out.series.size(); ++n) {
        const double t = 0.01 * static_cast<double>(n);
        EXPECT_NEAR(out.series(n, 0), -1.0 + 0.5 * t, 1e-12);
        EXPECT_NEAR(out.series(n, 1), 0.5 - 0.25 * t, 1e-12);
    }
}

TEST(SimulateReduced, StopPolicyThrowsOnExit) {
    SimulationConfig cfg;
    cfg.dt = 0.1;
    cfg.n_steps = 100;
    cfg.x0 = {0.0, 0.0};
    try {
        simulate_reduced(uniform_field(1.0, 0.0, 0.0), cfg, ExitPolicy::Stop);
        FAIL() << "expected DomainExit";
    } catch (const DomainExit& e) {
        // x reaches the closed upper wall at step 20; rounding decides that step.
        EXPECT_GE(e.step(), 20u);
        EXPECT_LE(e.step(), 21u);
    }
}

TEST(SimulateReduced, ReflectPolicyStaysInside) {
    SimulationConfig cfg;
    cfg.dt = 0.01;
    cfg.n_steps = 20000;
    cfg.seed = 5;
    cfg.x0 = {0.0, 0.0};
    const auto out = simulate_reduced(uniform_field(0.3, 0.0, 1.0), cfg, ExitPolicy::Reflect);
    EXPECT_GT(out.reflections, 0u);
    for (std::size_t n = 0; n < out.series.size(); ++n) {
        EXPECT_TRUE(kSquare.locate(out.series.row(n)).has_value());
    }
}

TEST(SimulateReduced, RejectsUnusableStart) {
    auto field = uniform_field(0.0, 0.0, 0.0);
    SimulationConfig cfg;
    cfg.x0 = {5.0, 0.0};
    EXPECT_THROW(simulate_reduced(field, cfg), ArgumentError);
}

TEST(SimulateReduced, ReproducesOuVariance) {
    const auto model = builtin_model("ou2d-rotating", {{"a", 0.5}, {"omega", 2.0}, {"s", 1.0}});
    SimulationConfig cfg;
    cfg.dt = 1e-3;
    cfg.n_steps = 2'000'000;
    cfg.stride = 10;
    cfg.seed = 12;
    cfg.x0 = {0.0, 0.0};
    const auto source = euler_maruyama(model, cfg);
    const GridPartition grid({-5.0, -5.0}, {5.0, 5.0}, {50, 50});
    const auto field = estimate_conditional_field(source, model, grid, kXY, {.min_count = 20});
    cfg.seed = 13;
    const auto reduced = simulate_reduced(field, cfg, ExitPolicy::Reflect).series;
    for (std::size_t c = 0; c < 2; ++c) {
        const auto y = reduced.column(c);
        const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
        double var = 0.0;
        for (double v : y) var += (v - mean) * (v - mean);
        var /= static_cast<double>(y.size());
        EXPECT_NEAR(var, 1.0, 0.1) << "component " << c;
    }
}

TEST(ConditionalCsv, Header) {
    ConditionalOptions opts;
    opts.extra_components = {2};
    const auto field = estimate_conditional_field(centers_with_random_z(2, 1), constant_drift(1, 2), kSquare, kXY, opts);
    const auto path = std::filesystem::temp_directory_path() / "rpres_conditional_test.csv";
    const std::vector<std::string> labels{"z"};
    write_csv(field, path, labels);
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header, "box,count,Fbar_1,Fbar_2,Sigmabar_11,Sigmabar_12,Sigmabar_22,zbar");
    std::size_t rows = 0;
    for (std::string line; std::getline(in, line);) ++rows;
    EXPECT_EQ(rows, kSquare.size());
    std::filesystem::remove(path);
}

}  // namespace
}  // namespace rpres
