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

#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "rpres/transfer.hpp"

namespace rpres {

using cplx = std::complex<double>;

enum class EigenMethod { Auto, Dense, Iterative };

struct SpectralOptions {
    EigenMethod method = EigenMethod::Auto;
    /// Auto picks the dense solver up to this many active boxes.
    std::size_t dense_threshold = 2000;
    /// Arnoldi subspace size; 0 means 4k + 20 (capped at the matrix size).
    std::size_t subspace = 0;
    double tolerance = 1e-10;
    std::size_t max_restarts = 5000;
    std::uint64_t seed = 0x5eedULL;
    /// Largest accepted ||P psi - zeta psi|| / ||psi||.
    double residual_tolerance = 1e-8;
    /// Eigenvalues closer than this form one cluster for biorthonormalization.
    double degeneracy_tolerance = 1e-8;
    /// Smallest accepted pivot of a cluster's left/right Gram block.
    double pivot_tolerance = 1e-12;
};

/// Leading eigenpairs of P = gamma^T (the operator acting on functions of
/// the boxes). Columns of `right` are psi_k (P psi_k = zeta_k psi_k), columns
/// of `left` are phi_k (phi_k^T P = zeta_k phi_k^T, i.e. gamma phi_k =
/// zeta_k phi_k), with phi_j^T psi_k = delta_jk.
///
/// Ordering: |zeta| descending (moduli within 1e-10 tie), then |Im| ascending,
/// then Re descending, then Im descending. Conjugate pairs are adjacent with
/// the positive imaginary part first, and each carries exactly conjugated
/// vectors.
struct SpectralData {
    std::vector<cplx> zetas;
    Eigen::MatrixXcd right;
    Eigen::MatrixXcd left;
    std::vector<double> residuals;
    std::string method;

    std::size_t k() const noexcept { return zetas.size(); }
};

/// Computes the k largest-modulus eigenpairs. When the k-th value opens a
/// conjugate pair its partner is included as well, so k() may be k + 1.
SpectralData leading_eigenpairs(const TransitionMatrix& tm, std::size_t k,
                                const SpectralOptions& options = {});
SpectralData leading_eigenpairs(const Eigen::SparseMatrix<double>& gamma, std::size_t k,
                                const SpectralOptions& options = {});

struct Resonance {
    std::size_t k;  // 1-based position in the spectral ordering
    cplx zeta;
    cplx lambda;
    double residual = 0.0;
};

struct ResonanceSet {
    double lag_time = 0.0;
    std::vector<Resonance> items;
    std::optional<double> gap;

    /// |Im lambda| <= pi / tau: oscillations faster than this alias.
    double nyquist() const;
    std::vector<cplx> lambdas() const;
};

/// lambda_k = log|zeta_k| / tau + i arg(zeta_k) / tau with arg in [-pi, pi).
cplx resonance_of(cplx zeta, double lag_time);
ResonanceSet resonances(const SpectralData& spec, double lag_time);

/// -max{Re lambda_k : k >= 2}.
double spectral_gap(const ResonanceSet& rs);

/// {tau, items: [{k, zeta_re, zeta_im, lambda_re, lambda_im, residual}], gap, ...}
std::string to_json(const ResonanceSet& rs);

}  // namespace rpres
