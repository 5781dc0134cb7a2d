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


#include "rpres/oracle.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/ooura_fourier_integrals.hpp>
#include <gtest/gtest.h>

#include "rpres/error.hpp"
#include "rpres/reconstruct.hpp"

namespace rpres {
namespace {

TEST(OuResonances, OneDimensionalLadder) {
    EXPECT_EQ(ou_resonances({.a = 1.0, .s = 1.0}, 2), (std::vector<cplx>{0.0, -1.0, -2.0}));
}

TEST(OuResonances, RotatingPair) {
    const auto l = ou_resonances({.a = 0.5, .s = 1.0, .omega = 2.0}, 1);
    EXPECT_EQ(l, (std::vector<cplx>{0.0, {-0.5, 2.0}, {-0.5, -2.0}}));
}

TEST(OuResonances, RotatingSecondLevel) {
    const auto l = ou_resonances({.a = 0.5, .s = 1.0, .omega = 2.0}, 2);
    ASSERT_EQ(l.size(), 6u);
    EXPECT_EQ(l[3], cplx(-1.0, 4.0));
    EXPECT_EQ(l[4], cplx(-1.0, 0.0));
    EXPECT_EQ(l[5], cplx(-1.0, -4.0));
}

TEST(OuResonances, InvariantMeasureOnly) {
    EXPECT_EQ(ou_resonances({.a = 3.0, .s = 1.0}, 0), std::vector<cplx>{0.0});
}

TEST(OuResonances, RejectsNonPositiveRate) {
    EXPECT_THROW(ou_resonances({.a = 0.0, .s = 1.0}, 1), ArgumentError);
    EXPECT_THROW(ou_acf({.a = -1.0, .s = 1.0}, std::vector<double>{0.0}), ArgumentError);
}

TEST(OuAcf, StationaryVarianceAndDecay) {
    const auto c = ou_acf({.a = 1.0, .s = std::numbers::sqrt2}, std::vector<double>{0.0, 1.0, -1.0});
    EXPECT_DOUBLE_EQ(c[0], 1.0);
    EXPECT_NEAR(c[1], std::exp(-1.0), 1e-15);
    EXPECT_NEAR(c[2], std::exp(-1.0), 1e-15);
}

TEST(OuAcf, NoNoise) {
    for (double v : ou_acf({.a = 2.0, .s = 0.0}, std::vector<double>{0.0, 0.5, 3.0})) EXPECT_EQ(v, 0.0);
}

TEST(OuAcf, Rotating) {
    const auto c = ou_acf({.a = 0.5, .s = 1.0, .omega = 2.0}, std::vector<double>{0.0, 0.7});
    EXPECT_DOUBLE_EQ(c[0], 1.0);
    EXPECT_NEAR(c[1], std::exp(-0.35) * std::cos(1.4), 1e-15);
}

TEST(OuPsd, MatchesSingleLorentzian) {
    const OuSpec spec{.a = 1.5, .s = 0.8};
    const double var = spec.s * spec.s / (2.0 * spec.a);
    ResonanceSet rs;
    rs.lag_time = 0.1;
    rs.items.push_back({1, std::exp(-spec.a * 0.1), -spec.a, 0.0});
    const std::vector<cplx> w{var};
    std::vector<double> grid;
    for (int i = -500; i <= 500; ++i) grid.push_back(0.1 * i);
    const auto recon = reconstruct_psd(rs, w, grid);
    const auto oracle = ou_psd(spec, grid);
    for (std::size_t i = 0; i < grid.size(); ++i) EXPECT_NEAR(recon.reconstructed[i], oracle[i], 1e-14);
}

TEST(OuPsd, InverseFourierGivesAcf) {
    const OuSpec spec{.a = 1.0, .s = std::numbers::sqrt2};
    auto psd = [&](double w) { return ou_psd(spec, std::vector<double>{w})[0]; };
    boost::math::quadrature::ooura_fourier_cos<double> cosine;
    boost::math::quadrature::exp_sinh<double> half_line;
    for (double t : {0.0, 0.25, 1.0, 2.5}) {
        const double expected = ou_acf(spec, std::vector<double>{t})[0];
        const double integral = t == 0.0 ? half_line.integrate(psd) : cosine.integrate(psd, t).first;
        EXPECT_NEAR(2.0 * integral, expected, 1e-6) << "t = " << t;
    }
}

}  // namespace
}  // namespace rpres
