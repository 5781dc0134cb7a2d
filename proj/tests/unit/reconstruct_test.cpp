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


#include "rpres/reconstruct.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <numeric>
#include <vector>

#include <boost/random/normal_distribution.hpp>
#include <gtest/gtest.h>

#include "rpres/error.hpp"
#include "rpres/random.hpp"

namespace rpres {
namespace {

TransitionMatrix flip_chain() {
    Eigen::MatrixX<std::int64_t> c(2, 2);
    c << 0, 1, 1, 0;
    return TransitionMatrix::from_counts(c);
}

ResonanceSet set_of(std::vector<cplx> lambdas, double tau = 1.0) {
    ResonanceSet rs;
    rs.lag_time = tau;
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
        rs.items.push_back({i + 1, std::exp(lambdas[i] * tau), lambdas[i], 0.0});
    }
    return rs;
}

TEST(Weights, FlipChain) {
    const auto tm = flip_chain();
    const auto spec = leading_eigenpairs(tm, 2);
    const Observable f{{1.0, -1.0}, true};
    const auto w = weights(spec, tm.measure(), f, f);
    ASSERT_EQ(w.size(), 2u);
    EXPECT_EQ(w[0], cplx(0.0));
    EXPECT_NEAR(std::abs(w[1] - cplx(1.0)), 0.0, 1e-12);
}

TEST(Weights, ZeroObservable) {
    const auto tm = flip_chain();
    const auto spec = leading_eigenpairs(tm, 2);
    const Observable f{{0.0, 0.0}, true};
    for (const auto& w : weights(spec, tm.measure(), f, f)) EXPECT_EQ(w, cplx(0.0));
}

TEST(Weights, RejectsUncentered) {
    const auto tm = flip_chain();
    const auto spec = leading_eigenpairs(tm, 2);
    EXPECT_THROW(weights(spec, tm.measure(), Observable{{1.0, 0.0}, true}, Observable{{1.0, -1.0}, true}),
                 ArgumentError);
    EXPECT_THROW(weights(spec, tm.measure(), Observable{{1.0, -1.0}, false}, Observable{{1.0, -1.0}, true}),
                 ArgumentError);
}

TEST(Weights, EigenfunctionObservable) {
    Eigen::MatrixX<std::int64_t> c(3, 3);
    c << 6, 2, 1, 2, 5, 3, 1, 3, 4;
    const auto tm = TransitionMatrix::from_counts(c);
    const auto spec = leading_eigenpairs(tm, 3);
    Observable f;
    for (Eigen::Index j = 0; j < 3; ++j) {
        ASSERT_NEAR(spec.right(j, 1).imag(), 0.0, 1e-14);
        f.values.push_back(spec.right(j, 1).real());
    }
    f = center_observable(f, tm.measure());
    double norm2 = 0.0;
    for (std::size_t j = 0; j < 3; ++j) norm2 += tm.measure()[j] * f.values[j] * f.values[j];
    const auto w = weights(spec, tm.measure(), f, f);
    EXPECT_NEAR(std::abs(w[0]), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(w[1] - cplx(norm2)), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(w[2]), 0.0, 1e-12);
}

TEST(ReconstructCorrelation, SingleTerm) {
    const std::vector<cplx> w{2.0};
    const std::vector<double> lags{0.0, 1.0};
    const auto r = reconstruct_correlation(set_of({-1.0}), w, lags);
    EXPECT_DOUBLE_EQ(r.reconstructed[0], 2.0);
    EXPECT_DOUBLE_EQ(r.reconstructed[1], 2.0 * std::exp(-1.0));
}

TEST(ReconstructCorrelation, FlipChainAlternates) {
    const auto tm = flip_chain();
    const auto spec = leading_eigenpairs(tm, 2);
    const auto rs = resonances(spec, 1.0);
    const Observable f{{1.0, -1.0}, true};
    const auto w = weights(spec, tm.measure(), f, f);
    const std::vector<double> lags{0, 1, 2, 3, 4, 5};
    const auto r = reconstruct_correlation(rs, w, lags);
    for (std::size_t l = 0; l < lags.size(); ++l) EXPECT_NEAR(r.reconstructed[l], l % 2 ? -1.0 : 1.0, 1e-12);

    // The same values come out of the sample estimator on the alternating series.
    std::vector<double> y(1000);
    for (std::size_t n = 0; n < y.size(); ++n) y[n] = n % 2 ? -1.0 : 1.0;
    const auto s = sample_acf(TimeSeries(1.0, 1, y), 0, 5);
    for (std::size_t l = 0; l < lags.size(); ++l) EXPECT_NEAR((*s.sample)[l], r.reconstructed[l], 1e-12);
}

TEST(ReconstructCorrelation, ZeroWeights) {
    const std::vector<cplx> w{0.0, 0.0};
    const std::vector<double> lags{0.0, 0.3, 2.0};
    for (double v : reconstruct_correlation(set_of({0.0, -1.0}), w, lags).reconstructed) EXPECT_EQ(v, 0.0);
}

TEST(ReconstructCorrelation, Errors) {
    const std::vector<cplx> w{1.0};
    const std::vector<double> lags{0.0};
    EXPECT_THROW(reconstruct_correlation(set_of({-1.0, -2.0}), w, lags), ArgumentError);
    const std::vector<double> negative{-1.0};
    EXPECT_THROW(reconstruct_correlation(set_of({-1.0}), w, negative), ArgumentError);
    const std::vector<cplx> unpaired{1.0};
    const std::vector<double> t{0.5};
    EXPECT_THROW(reconstruct_correlation(set_of({{-1.0, 2.0}}), unpaired, t), NonRealResult);
}

TEST(ReconstructCorrelation, ConjugatePairIsReal) {
    const std::vector<cplx> w{{0.5, 0.1}, {0.5, -0.1}};
    const std::vector<double> lags{0.0, 0.37, 1.9};
    const auto r = reconstruct_correlation(set_of({{-0.5, 2.0}, {-0.5, -2.0}}), w, lags);
    EXPECT_LT(r.imag_residue, 1e-15);
    EXPECT_NEAR(r.reconstructed[1], std::exp(-0.5 * 0.37) * (std::cos(0.74) - 0.2 * std::sin(0.74)), 1e-14);
}

TEST(ReconstructPsd, PeakValue) {
    const double a = 0.7, alpha = 1.3;
    const std::vector<cplx> w{alpha};
    const std::vector<double> f{0.0};
    const auto r = reconstruct_psd(set_of({-a}), w, f);
    EXPECT_NEAR(r.reconstructed[0], alpha / (std::numbers::pi * a), 1e-14);
    EXPECT_EQ(r.abscissa_units, "angular");
}

TEST(ReconstructPsd, PairPeaksAtImaginaryParts) {
    const std::vector<cplx> w{0.5, 0.5};
    std::vector<double> grid;
    for (int i = -400; i <= 400; ++i) grid.push_back(i * 0.01);
    const auto r = reconstruct_psd(set_of({{-0.2, 2.0}, {-0.2, -2.0}}), w, grid);
    std::size_t best = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (grid[i] > 0 && r.reconstructed[i] > r.reconstructed[best]) best = i;
    }
    EXPECT_NEAR(grid[best], 2.0, 1e-9);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        EXPECT_NEAR(r.reconstructed[i], r.reconstructed[grid.size() - 1 - i], 1e-14);
    }
}

TEST(ReconstructPsd, IntegralMatchesWeightSum) {
    const std::vector<cplx> w{0.0, {0.3, 0.05}, {0.3, -0.05}, 0.4};
    const auto rs = set_of({0.0, {-0.5, 3.0}, {-0.5, -3.0}, -1.0});
    std::vector<double> grid;
    for (int i = -200000; i <= 200000; ++i) grid.push_back(i * 0.005);
    const auto r = reconstruct_psd(rs, w, grid);
    EXPECT_EQ(r.excluded, std::vector<std::size_t>{1});
    const std::vector<double> t0{0.0};
    const double c0 = reconstruct_correlation(rs, w, t0).reconstructed[0];
    EXPECT_NEAR(trapezoid(grid, r.reconstructed), c0, 2e-3 * c0);
}

TEST(ReconstructPsd, OneSidedFold) {
    const std::vector<cplx> w{1.0};
    const std::vector<double> f{0.0, 1.0};
    const auto one = reconstruct_psd_one_sided(set_of({-1.0}), w, f);
    const auto two = reconstruct_psd(set_of({-1.0}), w, f);
    EXPECT_DOUBLE_EQ(one.reconstructed[0], 2.0 * two.reconstructed[0]);
    EXPECT_DOUBLE_EQ(one.reconstructed[1], 2.0 * two.reconstructed[1]);
    const std::vector<double> bad{-1.0};
    EXPECT_THROW(reconstruct_psd_one_sided(set_of({-1.0}), w, bad), ArgumentError);
}

TEST(ReconstructPsd, ZeroWidthWithWeightIsSingular) {
    const std::vector<cplx> w{1.0};
    const std::vector<double> f{0.0};
    EXPECT_THROW(reconstruct_psd(set_of({{0.0, 1.0}}), w, f), SingularLorentzian);
}

TEST(SampleAcf, ConstantSeries) {
    const auto r = sample_acf(TimeSeries(1.0, 1, std::vector<double>(50, 3.0)), 0, 10);
    for (double v : *r.sample) EXPECT_EQ(v, 0.0);
}

TEST(SampleAcf, LagZeroIsVariance) {
    const std::vector<double> y{1.0, 4.0, -2.0, 0.5, 3.0};
    const auto r = sample_acf(TimeSeries(0.1, 1, y), 0, 2);
    const double mean = std::accumulate(y.begin(), y.end(), 0.0) / 5.0;
    double var = 0.0;
    for (double v : y) var += (v - mean) * (v - mean);
    EXPECT_NEAR((*r.sample)[0], var / 5.0, 1e-14);
    EXPECT_DOUBLE_EQ(r.abscissa[2], 0.2);
}

TEST(SampleAcf, RejectsLongLag) {
    EXPECT_THROW(sample_acf(TimeSeries(1.0, 1, {1.0, 2.0}), 0, 2), ArgumentError);
    EXPECT_THROW(sample_acf(TimeSeries(1.0, 1, {1.0, 2.0}), 1, 0), ArgumentError);
}

TEST(SampleAcf, FftPathMatchesDirect) {
    Xoshiro256pp rng(2);
    boost::random::normal_distribution<double> normal;
    std::vector<double> y(1'000'000);
    double x = 0.0;
    for (auto& v : y) v = x = 0.95 * x + normal(rng);
    const TimeSeries ts(1.0, 1, y);
    const std::size_t max_lag = 80;
    const auto fft = sample_acf(ts, 0, max_lag);
    std::vector<std::size_t> lags(max_lag + 1);
    std::iota(lags.begin(), lags.end(), std::size_t{0});
    const auto direct = sample_acf_at(ts, 0, lags);
    for (std::size_t l = 0; l <= max_lag; ++l) {
        EXPECT_NEAR((*fft.sample)[l], (*direct.sample)[l], 1e-9 * (*direct.sample)[0]);
    }
}

TEST(SamplePsd, SinusoidPeak) {
    const double f0 = 12.5, dt = 0.01;
    std::vector<double> y(8192);
    for (std::size_t n = 0; n < y.size(); ++n) y[n] = std::sin(2.0 * std::numbers::pi * f0 * dt * static_cast<double>(n));
    const auto r = sample_psd(TimeSeries(dt, 1, y), 0, 1024, 0.5);
    const auto& s = *r.sample;
    const auto peak = static_cast<std::size_t>(std::max_element(s.begin(), s.end()) - s.begin());
    EXPECT_NEAR(r.abscissa[peak], f0, 1.0 / (1024 * dt));
    EXPECT_EQ(r.abscissa_units, "ordinary");
}

TEST(SamplePsd, ZeroSeries) {
    const auto r = sample_psd(TimeSeries(1.0, 1, std::vector<double>(256, 0.0)), 0, 64, 0.5);
    for (double v : *r.sample) EXPECT_EQ(v, 0.0);
}

TEST(SamplePsd, WhiteNoiseIntegratesToVariance) {
    Xoshiro256pp rng(4);
    boost::random::normal_distribution<double> normal;
    std::vector<double> y(1 << 18);
    for (auto& v : y) v = normal(rng);
    const TimeSeries ts(0.01, 1, y);
    const auto r = sample_psd(ts, 0, 1024, 0.5);
    EXPECT_NEAR(trapezoid(r.abscissa, *r.sample), 1.0, 0.1);
    const auto ang = sample_psd(ts, 0, 1024, 0.5, {.angular = true});
    EXPECT_NEAR(trapezoid(ang.abscissa, *ang.sample), trapezoid(r.abscissa, *r.sample), 1e-12);
    EXPECT_NEAR(ang.abscissa[1], 2.0 * std::numbers::pi * r.abscissa[1], 1e-12);
}

TEST(SamplePsd, RejectsBadSegmenting) {
    const TimeSeries ts(1.0, 1, std::vector<double>(100, 1.0));
    EXPECT_THROW(sample_psd(ts, 0, 200, 0.5), ArgumentError);
    EXPECT_THROW(sample_psd(ts, 0, 1, 0.5), ArgumentError);
    EXPECT_THROW(sample_psd(ts, 0, 50, 1.0), ArgumentError);
    EXPECT_THROW(sample_psd(ts, 0, 50, -0.1), ArgumentError);
}

TEST(Compare, Identical) {
    const std::vector<double> a{1.0, 2.0, 3.0};
    const auto m = compare(a, a);
    EXPECT_EQ(m.rmse, 0.0);
    EXPECT_EQ(m.normalized_rmse, 0.0);
    EXPECT_EQ(m.max_abs_error, 0.0);
}

TEST(Compare, ConstantOffset) {
    const std::vector<double> a{1.0, 2.0, 3.0}, b{1.5, 2.5, 3.5};
    EXPECT_DOUBLE_EQ(compare(a, b).max_abs_error, 0.5);
}

TEST(Compare, ZeroReconstructionOfUnitSignal) {
    const std::vector<double> zero(4, 0.0), unit{1.0, -1.0, 1.0, -1.0};
    EXPECT_DOUBLE_EQ(compare(zero, unit).normalized_rmse, 1.0);
}

TEST(Compare, LengthMismatch) {
    const std::vector<double> a{1.0}, b{1.0, 2.0};
    EXPECT_THROW(compare(a, b), ArgumentError);
}

TEST(FullSpectrum, ZeroLagEqualsBoxCovariance) {
    Xoshiro256pp rng(8);
    for (int trial = 0; trial < 6; ++trial) {
        const auto n = static_cast<Eigen::Index>(20 + rng() % 180);
        Eigen::MatrixX<std::int64_t> c = Eigen::MatrixX<std::int64_t>::Zero(n, n);
        for (Eigen::Index j = 0; j < n; ++j) {
            c(j, j) = 1;
            for (int t = 0; t < 5; ++t) c(static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(n)), j) += 1 + static_cast<std::int64_t>(rng() % 9);
        }
        const auto tm = TransitionMatrix::from_counts(c);
        Observable f, g;
        for (Eigen::Index j = 0; j < n; ++j) {
            f.values.push_back(static_cast<double>(rng() % 1000) / 100.0);
            g.values.push_back(static_cast<double>(rng() % 1000) / 100.0);
        }
        f = center_observable(f, tm.measure());
        g = center_observable(g, tm.measure());
        SpectralOptions opts;
        opts.method = EigenMethod::Dense;
        const auto spec = leading_eigenpairs(tm, static_cast<std::size_t>(n), opts);
        const auto w = weights(spec, tm.measure(), f, g);
        const auto rs = resonances(spec, 1.0);
        const std::vector<double> t0{0.0};
        double inner = 0.0;
        for (std::size_t j = 0; j < f.values.size(); ++j) inner += tm.measure()[j] * f.values[j] * g.values[j];
        EXPECT_NEAR(reconstruct_correlation(rs, w, t0).reconstructed[0], inner, 1e-8);
    }
}

TEST(ReconstructionCsv, Columns) {
    ReconstructionResult r;
    r.abscissa = {0.0, 0.5};
    r.reconstructed = {1.0, 0.25};
    r.sample = std::vector<double>{0.9, 0.3};
    const auto path = std::filesystem::temp_directory_path() / "rpres_recon_test.csv";
    write_csv(r, path);
    std::ifstream in(path);
    std::string header, row;
    std::getline(in, header);
    std::getline(in, row);
    EXPECT_EQ(header, "abscissa,reconstructed,sample");
    EXPECT_EQ(row, "0,1,0.9");
    std::filesystem::remove(path);
}

}  // namespace
}  // namespace rpres
