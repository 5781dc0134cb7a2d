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


#include "rpres/spectral.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "rpres/error.hpp"
#include "rpres/random.hpp"

namespace rpres {
namespace {

TransitionMatrix chain(std::initializer_list<std::initializer_list<std::int64_t>> rows) {
    const auto n = static_cast<Eigen::Index>(rows.size());
    Eigen::MatrixX<std::int64_t> c(n, n);
    Eigen::Index i = 0;
    for (const auto& r : rows) {
        Eigen::Index j = 0;
        for (auto v : r) c(i, j++) = v;
        ++i;
    }
    return TransitionMatrix::from_counts(c);
}

// Column-stochastic chain with `per_column` random targets per column plus a
// self-loop, so every state is visited.
TransitionMatrix random_chain(std::size_t n, std::size_t per_column, std::uint64_t seed) {
    Xoshiro256pp rng(seed);
    Eigen::MatrixX<std::int64_t> c = Eigen::MatrixX<std::int64_t>::Zero(static_cast<Eigen::Index>(n),
                                                                        static_cast<Eigen::Index>(n));
    for (std::size_t j = 0; j < n; ++j) {
        c(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j)) += 1 + static_cast<std::int64_t>(rng() % 5);
        for (std::size_t t = 0; t < per_column; ++t) {
            const auto i = static_cast<Eigen::Index>(rng() % n);
            c(i, static_cast<Eigen::Index>(j)) += 1 + static_cast<std::int64_t>(rng() % 20);
        }
    }
    return TransitionMatrix::from_counts(c);
}

TEST(LeadingEigenpairs, FlipChain) {
    const auto spec = leading_eigenpairs(chain({{0, 1}, {1, 0}}), 2);
    ASSERT_EQ(spec.k(), 2u);
    EXPECT_NEAR(std::abs(spec.zetas[0] - cplx(1.0)), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(spec.zetas[1] - cplx(-1.0)), 0.0, 1e-12);
}

TEST(LeadingEigenpairs, Identity) {
    const auto spec = leading_eigenpairs(chain({{1, 0, 0}, {0, 2, 0}, {0, 0, 3}}), 3);
    ASSERT_EQ(spec.k(), 3u);
    for (const auto& z : spec.zetas) EXPECT_NEAR(std::abs(z - cplx(1.0)), 0.0, 1e-12);
    const Eigen::MatrixXcd gram = spec.left.transpose() * spec.right;
    EXPECT_NEAR((gram - Eigen::MatrixXcd::Identity(3, 3)).norm(), 0.0, 1e-8);
}

TEST(LeadingEigenpairs, ThreeCycle) {
    const auto spec = leading_eigenpairs(chain({{0, 0, 1}, {1, 0, 0}, {0, 1, 0}}), 3);
    ASSERT_EQ(spec.k(), 3u);
    const cplx w = std::polar(1.0, 2.0 * std::numbers::pi / 3.0);
    EXPECT_NEAR(std::abs(spec.zetas[0] - cplx(1.0)), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(spec.zetas[1] - w), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(spec.zetas[2] - std::conj(w)), 0.0, 1e-12);
}

TEST(LeadingEigenpairs, KeepsConjugatePairWhole) {
    const auto spec = leading_eigenpairs(chain({{0, 0, 1}, {1, 0, 0}, {0, 1, 0}}), 2);
    EXPECT_EQ(spec.k(), 3u);
}

TEST(LeadingEigenpairs, RandomChainInvariants) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto tm = random_chain(150, 4, seed);
        const auto spec = leading_eigenpairs(tm, 12);
        const Eigen::MatrixXd p = tm.dense_gamma().transpose();
        const std::size_t k = spec.k();
        EXPECT_NEAR(std::abs(spec.zetas[0] - cplx(1.0)), 0.0, 1e-10);
        for (std::size_t a = 0; a < k; ++a) {
            EXPECT_LE(std::abs(spec.zetas[a]), 1.0 + 1e-10);
            const auto ea = static_cast<Eigen::Index>(a);
            const double res = (p.cast<cplx>() * spec.right.col(ea) - spec.zetas[a] * spec.right.col(ea)).norm() /
                               spec.right.col(ea).norm();
            EXPECT_LE(res, 1e-8);
            if (a > 0) {
                EXPECT_GE(std::abs(spec.zetas[a - 1]), std::abs(spec.zetas[a]) - 1e-10);
            }
            if (std::abs(spec.zetas[a].imag()) > 1e-12) {
                bool partner = false;
                for (std::size_t b = 0; b < k; ++b) {
                    const auto eb = static_cast<Eigen::Index>(b);
                    if (std::abs(spec.zetas[b] - std::conj(spec.zetas[a])) < 1e-8) {
                        partner = (spec.right.col(eb) - spec.right.col(ea).conjugate()).norm() < 1e-8 &&
                                  (spec.left.col(eb) - spec.left.col(ea).conjugate()).norm() < 1e-8;
                    }
                }
                EXPECT_TRUE(partner) << "zeta " << spec.zetas[a];
            }
        }
        const Eigen::MatrixXcd gram = spec.left.transpose() * spec.right;
        EXPECT_LE((gram - Eigen::MatrixXcd::Identity(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)))
                      .cwiseAbs()
                      .maxCoeff(),
                  1e-8);
    }
}

TEST(LeadingEigenpairs, DenseAndIterativeAgree) {
    const auto tm = random_chain(300, 6, 11);
    SpectralOptions dense;
    dense.method = EigenMethod::Dense;
    SpectralOptions iter;
    iter.method = EigenMethod::Iterative;
    const auto a = leading_eigenpairs(tm, 10, dense);
    const auto b = leading_eigenpairs(tm, 10, iter);
    EXPECT_EQ(a.method, "dense");
    EXPECT_EQ(b.method, "iterative");
    ASSERT_EQ(a.k(), b.k());
    for (std::size_t i = 0; i < a.k(); ++i) EXPECT_LT(std::abs(a.zetas[i] - b.zetas[i]), 1e-6);
}

TEST(LeadingEigenpairs, IterativeIsDeterministic) {
    const auto tm = random_chain(400, 5, 21);
    SpectralOptions iter;
    iter.method = EigenMethod::Iterative;
    const auto a = leading_eigenpairs(tm, 8, iter);
    const auto b = leading_eigenpairs(tm, 8, iter);
    EXPECT_EQ(a.zetas, b.zetas);
    EXPECT_TRUE(a.right == b.right);
}

TEST(LeadingEigenpairs, RejectsBadK) {
    const auto tm = chain({{0, 1}, {1, 0}});
    EXPECT_THROW(leading_eigenpairs(tm, 0), ArgumentError);
    EXPECT_THROW(leading_eigenpairs(tm, 3), ArgumentError);
}

TEST(ResonanceOf, InvariantMeasure) {
    EXPECT_EQ(resonance_of(1.0, 0.5), cplx(0.0));
}

TEST(ResonanceOf, RealDecay) {
    const cplx l = resonance_of(std::exp(-0.5), 1.0);
    EXPECT_NEAR(l.real(), -0.5, 1e-15);
    EXPECT_EQ(l.imag(), 0.0);
}

TEST(ResonanceOf, NegativeRealBranch) {
    const cplx l = resonance_of(-1.0, 1.0);
    EXPECT_NEAR(l.real(), 0.0, 1e-15);
    EXPECT_DOUBLE_EQ(l.imag(), -std::numbers::pi);
    // Negative zero imaginary part lands on the same branch.
    EXPECT_DOUBLE_EQ(resonance_of(cplx(-1.0, -0.0), 1.0).imag(), -std::numbers::pi);
}

TEST(ResonanceOf, ZeroIsSingular) {
    EXPECT_THROW(resonance_of(0.0, 1.0), LogSingularity);
}

ResonanceSet set_of(std::vector<cplx> lambdas) {
    ResonanceSet rs;
    rs.lag_time = 1.0;
    for (std::size_t i = 0; i < lambdas.size(); ++i) rs.items.push_back({i + 1, std::exp(lambdas[i]), lambdas[i], 0.0});
    return rs;
}

TEST(SpectralGap, Definition) {
    EXPECT_DOUBLE_EQ(spectral_gap(set_of({0.0, {-0.5, 2.0}, {-0.5, -2.0}})), 0.5);
    EXPECT_DOUBLE_EQ(spectral_gap(set_of({0.0, -1.0, -2.0})), 1.0);
    EXPECT_THROW(spectral_gap(set_of({0.0})), InsufficientSpectrum);
}

TEST(Resonances, FromFlipChain) {
    const auto spec = leading_eigenpairs(chain({{0, 1}, {1, 0}}), 2);
    const auto rs = resonances(spec, 1.0);
    ASSERT_EQ(rs.items.size(), 2u);
    EXPECT_NEAR(std::abs(rs.items[0].lambda), 0.0, 1e-12);
    EXPECT_NEAR(rs.items[1].lambda.imag(), -std::numbers::pi, 1e-12);
    EXPECT_EQ(rs.items[1].k, 2u);
    EXPECT_DOUBLE_EQ(rs.nyquist(), std::numbers::pi);
    ASSERT_TRUE(rs.gap.has_value());
}

TEST(Resonances, JsonFields) {
    const auto rs = resonances(leading_eigenpairs(chain({{0, 0, 1}, {1, 0, 0}, {0, 1, 0}}), 3), 0.5);
    const std::string j = to_json(rs);
    for (const char* key : {"\"tau\"", "\"items\"", "\"zeta_re\"", "\"zeta_im\"", "\"lambda_re\"",
                            "\"lambda_im\"", "\"residual\"", "\"gap\"", "\"frequency_units\""}) {
        EXPECT_NE(j.find(key), std::string::npos) << key;
    }
}

}  // namespace
}  // namespace rpres
