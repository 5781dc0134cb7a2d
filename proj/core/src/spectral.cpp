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

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

#include "csv_util.hpp"
#include "json_io.hpp"
#include "rpres/error.hpp"
#include "rpres/random.hpp"

// ARPACK ICB interface (arpack-ng), real nonsymmetric drivers.
extern "C" {
void dnaupd_c(int* ido, char const* bmat, int n, char const* which, int nev, double tol,
              double* resid, int ncv, double* v, int ldv, int* iparam, int* ipntr, double* workd,
              double* workl, int lworkl, int* info);
void dneupd_c(int rvec, char const* howmny, int const* select, double* dr, double* di, double* z,
              int ldz, double sigmar, double sigmai, double* workev, char const* bmat, int n,
              char const* which, int nev, double tol, double* resid, int ncv, double* v, int ldv,
              int* iparam, int* ipntr, double* workd, double* workl, int lworkl, int* info);
}

namespace rpres {

namespace {

using SparseD = Eigen::SparseMatrix<double>;

// Permutation putting `z` into the documented spectral order.
std::vector<std::size_t> spectral_order(const std::vector<cplx>& z) {
    std::vector<std::size_t> idx(z.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return std::abs(z[a]) > std::abs(z[b]); });
    std::vector<std::size_t> group(z.size(), 0);
    std::size_t g = 0;
    for (std::size_t i = 1; i < idx.size(); ++i) {
        const double prev = std::abs(z[idx[i - 1]]);
        if (prev - std::abs(z[idx[i]]) > 1e-10 * std::max(1.0, prev)) ++g;
        group[idx[i]] = g;
    }
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        if (group[a] != group[b]) return group[a] < group[b];
        const double ia = std::abs(z[a].imag()), ib = std::abs(z[b].imag());
        if (ia != ib) return ia < ib;
        if (z[a].real() != z[b].real()) return z[a].real() > z[b].real();
        return z[a].imag() > z[b].imag();
    });
    return idx;
}

// First k entries of `order`, extended by one when the cut would split a
// conjugate pair.
std::size_t selection_size(const std::vector<cplx>& z, const std::vector<std::size_t>& order,
                           std::size_t k) {
    k = std::min(k, order.size());
    if (k > 0 && k < order.size() && z[order[k - 1]].imag() > 0.0) ++k;
    return k;
}

// Expands LAPACK/ARPACK packed real eigenvectors: a complex pair (j, j+1)
// stores Re in column j and Im in column j+1 for the +Im member.
Eigen::VectorXcd packed_vector(const double* base, int n, const std::vector<double>& wi,
                               std::size_t j) {
    Eigen::VectorXcd v(n);
    if (wi[j] == 0.0) {
        for (int r = 0; r < n; ++r) v[r] = cplx(base[j * n + r], 0.0);
    } else if (wi[j] > 0.0) {
        for (int r = 0; r < n; ++r) v[r] = cplx(base[j * n + r], base[(j + 1) * n + r]);
    } else {
        for (int r = 0; r < n; ++r) v[r] = cplx(base[(j - 1) * n + r], -base[j * n + r]);
    }
    return v;
}

struct RawEigen {
    std::vector<cplx> zetas;
    Eigen::MatrixXcd right;
    Eigen::MatrixXcd left;
};

RawEigen dense_eigenpairs(const SparseD& gamma, std::size_t k) {
    const int n = static_cast<int>(gamma.rows());
    Eigen::MatrixXd p = Eigen::MatrixXd(gamma.transpose());
    std::vector<double> wr(n), wi(n), vl(static_cast<std::size_t>(n) * n),
        vr(static_cast<std::size_t>(n) * n);
    const int info = LAPACKE_dgeev(LAPACK_COL_MAJOR, 'V', 'V', n, p.data(), n, wr.data(),
                                   wi.data(), vl.data(), n, vr.data(), n);
    if (info != 0) {
        throw ConvergenceError("dense eigensolver (dgeev) failed with info " +
                               std::to_string(info));
    }
    std::vector<cplx> z(n);
    for (int i = 0; i < n; ++i) z[i] = cplx(wr[i], wi[i]);
    const auto order = spectral_order(z);
    const std::size_t m = selection_size(z, order, k);

    RawEigen raw;
    raw.right.resize(n, static_cast<Eigen::Index>(m));
    raw.left.resize(n, static_cast<Eigen::Index>(m));
    for (std::size_t c = 0; c < m; ++c) {
        const std::size_t j = order[c];
        raw.zetas.push_back(z[j]);
        raw.right.col(static_cast<Eigen::Index>(c)) = packed_vector(vr.data(), n, wi, j);
        // dgeev: u^H P = zeta u^H, so phi = conj(u) satisfies phi^T P = zeta phi^T.
        raw.left.col(static_cast<Eigen::Index>(c)) = packed_vector(vl.data(), n, wi, j).conjugate();
    }
    return raw;
}

struct ArnoldiResult {
    std::vector<cplx> zetas;
    Eigen::MatrixXcd vectors;
};

// Largest-modulus eigenpairs of `op` (op or its transpose) by ARPACK's
// implicitly restarted Arnoldi iteration.
ArnoldiResult arnoldi(const SparseD& op, std::size_t nev_req, const SpectralOptions& options) {
    const int n = static_cast<int>(op.rows());
    const int nev = static_cast<int>(nev_req);
    int ncv = options.subspace ? static_cast<int>(options.subspace) : 4 * nev + 20;
    ncv = std::clamp(ncv, nev + 2, n);
    const int lworkl = 3 * ncv * ncv + 6 * ncv;

    std::vector<double> resid(n), v(static_cast<std::size_t>(n) * ncv), workd(3 * n),
        workl(lworkl);
    Xoshiro256pp rng(options.seed);
    for (double& r : resid) {
        r = static_cast<double>(rng() >> 11) * 0x1.0p-53 + 0.5;  // in [0.5, 1.5)
    }
    int iparam[11] = {0};
    int ipntr[14] = {0};
    iparam[0] = 1;  // exact shifts
    iparam[2] = static_cast<int>(options.max_restarts);
    iparam[6] = 1;  // standard problem, regular mode
    int ido = 0;
    int info = 1;  // use the supplied start vector

    while (true) {
        dnaupd_c(&ido, "I", n, "LM", nev, options.tolerance, resid.data(), ncv, v.data(), n,
                 iparam, ipntr, workd.data(), workl.data(), lworkl, &info);
        if (ido != 1 && ido != -1) break;
        Eigen::Map<const Eigen::VectorXd> x(workd.data() + ipntr[0] - 1, n);
        Eigen::Map<Eigen::VectorXd> y(workd.data() + ipntr[1] - 1, n);
        y.noalias() = op * x;
    }
    if (info < 0) throw ConvergenceError("ARPACK dnaupd error " + std::to_string(info));
    if (info == 1) {
        throw ConvergenceError("Arnoldi iteration hit the restart cap (" +
                               std::to_string(options.max_restarts) + ") with " +
                               std::to_string(iparam[4]) + " of " + std::to_string(nev) +
                               " pairs converged");
    }

    std::vector<int> select(ncv, 1);
    std::vector<double> dr(nev + 1), di(nev + 1), z(static_cast<std::size_t>(n) * (nev + 1)),
        workev(3 * ncv);
    int einfo = 0;
    dneupd_c(1, "A", select.data(), dr.data(), di.data(), z.data(), n, 0.0, 0.0, workev.data(),
             "I", n, "LM", nev, options.tolerance, resid.data(), ncv, v.data(), n, iparam, ipntr,
             workd.data(), workl.data(), lworkl, &einfo);
    if (einfo != 0) throw ConvergenceError("ARPACK dneupd error " + std::to_string(einfo));
    const int nconv = iparam[4];
    if (nconv < nev) {
        throw ConvergenceError("Arnoldi converged " + std::to_string(nconv) + " of " +
                               std::to_string(nev) + " requested pairs");
    }
    ArnoldiResult out;
    const int m = std::min(nconv, nev + 1);
    std::vector<double> wi(di.begin(), di.begin() + m);
    // A +Im member in the last slot has no stored partner column.
    const int usable = (m > 0 && wi[m - 1] > 0.0) ? m - 1 : m;
    out.vectors.resize(n, usable);
    for (int j = 0; j < usable; ++j) {
        out.zetas.emplace_back(dr[j], di[j]);
        out.vectors.col(j) = packed_vector(z.data(), n, wi, static_cast<std::size_t>(j));
    }
    return out;
}

RawEigen iterative_eigenpairs(const SparseD& gamma, std::size_t k,
                              const SpectralOptions& options) {
    const std::size_t n = static_cast<std::size_t>(gamma.rows());
    const SparseD p = gamma.transpose();
    const ArnoldiResult right = arnoldi(p, k, options);
    const ArnoldiResult left = arnoldi(gamma, std::min(k + 4, n - 2), options);

    const auto order = spectral_order(right.zetas);
    const std::size_t m = selection_size(right.zetas, order, k);
    RawEigen raw;
    raw.right.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
    raw.left.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
    std::vector<char> used(left.zetas.size(), 0);
    for (std::size_t c = 0; c < m; ++c) {
        const std::size_t j = order[c];
        const cplx zeta = right.zetas[j];
        std::size_t best = left.zetas.size();
        double best_dist = 0.0;
        for (std::size_t l = 0; l < left.zetas.size(); ++l) {
            const double d = std::abs(left.zetas[l] - zeta);
            if (!used[l] && (best == left.zetas.size() || d < best_dist)) {
                best = l;
                best_dist = d;
            }
        }
        if (best == left.zetas.size() || best_dist > 1e-6 * std::max(1.0, std::abs(zeta))) {
            std::ostringstream msg;
            msg << "no left eigenvector matches eigenvalue " << zeta;
            throw ConvergenceError(msg.str());
        }
        used[best] = 1;
        raw.zetas.push_back(zeta);
        raw.right.col(static_cast<Eigen::Index>(c)) = right.vectors.col(static_cast<Eigen::Index>(j));
        raw.left.col(static_cast<Eigen::Index>(c)) = left.vectors.col(static_cast<Eigen::Index>(best));
    }
    return raw;
}

// Unit 2-norm with the largest-modulus entry real and positive.
void normalize_phase(Eigen::Ref<Eigen::VectorXcd> v) {
    const double norm = v.norm();
    if (norm == 0.0) return;
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    const cplx phase = std::abs(v[arg]) > 0 ? std::conj(v[arg]) / std::abs(v[arg]) : cplx(1.0);
    v *= phase / norm;
}

// Re-impose the exact structure of a real matrix's eigenvectors: real vectors
// for real eigenvalues, conjugated partners for pairs.
void impose_conjugate_structure(SpectralData& s) {
    for (std::size_t c = 0; c < s.k(); ++c) {
        const auto col = static_cast<Eigen::Index>(c);
        if (s.zetas[c].imag() == 0.0) {
            s.right.col(col) = s.right.col(col).real().cast<cplx>();
            s.left.col(col) = s.left.col(col).real().cast<cplx>();
        } else if (s.zetas[c].imag() > 0.0 && c + 1 < s.k()) {
            s.zetas[c + 1] = std::conj(s.zetas[c]);
            s.right.col(col + 1) = s.right.col(col).conjugate();
            s.left.col(col + 1) = s.left.col(col).conjugate();
        }
    }
}

SpectralData finalize(RawEigen raw, const SparseD& gamma, const SpectralOptions& options,
                      std::string method) {
    SpectralData s;
    s.method = std::move(method);
    s.zetas = std::move(raw.zetas);
    s.right = std::move(raw.right);
    s.left = std::move(raw.left);
    const std::size_t k = s.k();

    for (std::size_t c = 0; c < k; ++c) {
        normalize_phase(s.right.col(static_cast<Eigen::Index>(c)));
        normalize_phase(s.left.col(static_cast<Eigen::Index>(c)));
    }
    impose_conjugate_structure(s);

    // Clusters of (nearly) equal eigenvalues.
    std::vector<std::size_t> cluster(k);
    std::iota(cluster.begin(), cluster.end(), std::size_t{0});
    auto find = [&](std::size_t i) {
        while (cluster[i] != i) i = cluster[i] = cluster[cluster[i]];
        return i;
    };
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = i + 1; j < k; ++j) {
            if (std::abs(s.zetas[i] - s.zetas[j]) <= options.degeneracy_tolerance) {
                cluster[find(j)] = find(i);
            }
        }
    }
    const Eigen::MatrixXcd gram = s.left.transpose() * s.right;
    std::vector<char> seen(k, 0);
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t root = find(i);
        if (seen[root]) continue;
        seen[root] = 1;
        std::vector<std::size_t> members;
        for (std::size_t j = 0; j < k; ++j) {
            if (find(j) == root) members.push_back(j);
        }
        const auto sz = static_cast<Eigen::Index>(members.size());
        Eigen::MatrixXcd block(sz, sz);
        for (Eigen::Index a = 0; a < sz; ++a) {
            for (Eigen::Index b = 0; b < sz; ++b) {
                block(a, b) = gram(static_cast<Eigen::Index>(members[a]),
                                   static_cast<Eigen::Index>(members[b]));
            }
        }
        Eigen::FullPivLU<Eigen::MatrixXcd> lu(block);
        const double min_pivot = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
        if (!(min_pivot >= options.pivot_tolerance)) {
            std::ostringstream msg;
            msg << "near-defective eigenvalue cluster at zeta = " << s.zetas[members.front()]
                << " (size " << members.size() << ", pivot " << min_pivot << ")";
            throw DegeneracyError(msg.str(), members);
        }
    }
    // phi <- phi G^{-T} makes phi^T psi = I exactly.
    const Eigen::MatrixXcd gram_inv = gram.fullPivLu().inverse();
    s.left = (s.left * gram_inv.transpose()).eval();
    impose_conjugate_structure(s);

    // Residuals of P psi = zeta psi with P = gamma^T.
    const SparseD p = gamma.transpose();
    s.residuals.resize(k);
    bool ok = true;
    for (std::size_t c = 0; c < k; ++c) {
        const Eigen::VectorXcd& psi = s.right.col(static_cast<Eigen::Index>(c));
        Eigen::VectorXcd ppsi(psi.size());
        ppsi.real() = p * psi.real();
        ppsi.imag() = p * psi.imag();
        s.residuals[c] = (ppsi - s.zetas[c] * psi).norm() / psi.norm();
        ok = ok && s.residuals[c] <= options.residual_tolerance;
    }
    if (!ok) {
        throw ConvergenceError("eigenpair residuals exceed " +
                                   detail::format_double(options.residual_tolerance),
                               s.residuals);
    }
    return s;
}

}  // namespace

SpectralData leading_eigenpairs(const Eigen::SparseMatrix<double>& gamma, std::size_t k,
                                const SpectralOptions& options) {
    const auto n = static_cast<std::size_t>(gamma.rows());
    if (gamma.rows() != gamma.cols() || n == 0) {
        throw ArgumentError("leading_eigenpairs: gamma must be square and nonempty");
    }
    if (k == 0 || k > n) {
        throw ArgumentError("leading_eigenpairs: k must be in [1, " + std::to_string(n) + "]");
    }
    bool dense = options.method == EigenMethod::Dense ||
                 (options.method == EigenMethod::Auto && n <= options.dense_threshold);
    // ARPACK needs nev + 2 <= n; tiny problems always go dense.
    if (k + 2 > n) dense = true;
    if (dense) return finalize(dense_eigenpairs(gamma, k), gamma, options, "dense");
    return finalize(iterative_eigenpairs(gamma, k, options), gamma, options, "iterative");
}

SpectralData leading_eigenpairs(const TransitionMatrix& tm, std::size_t k,
                                const SpectralOptions& options) {
    return leading_eigenpairs(tm.gamma(), k, options);
}

double ResonanceSet::nyquist() const { return std::numbers::pi / lag_time; }

std::vector<cplx> ResonanceSet::lambdas() const {
    std::vector<cplx> out;
    out.reserve(items.size());
    for (const auto& r : items) out.push_back(r.lambda);
    return out;
}

cplx resonance_of(cplx zeta, double lag_time) {
    if (!(lag_time > 0.0)) throw ArgumentError("lag time must be positive");
    const double modulus = std::abs(zeta);
    if (modulus == 0.0) {
        throw LogSingularity("eigenvalue zeta = 0 has no resonance (log-singularity)");
    }
    double arg = std::arg(zeta);
    if (arg >= std::numbers::pi) arg -= 2.0 * std::numbers::pi;
    return {std::log(modulus) / lag_time, arg / lag_time};
}

ResonanceSet resonances(const SpectralData& spec, double lag_time) {
    ResonanceSet rs;
    rs.lag_time = lag_time;
    for (std::size_t c = 0; c < spec.k(); ++c) {
        const double residual = c < spec.residuals.size() ? spec.residuals[c] : 0.0;
        rs.items.push_back({c + 1, spec.zetas[c], resonance_of(spec.zetas[c], lag_time), residual});
    }
    if (rs.items.size() >= 2) rs.gap = spectral_gap(rs);
    return rs;
}

double spectral_gap(const ResonanceSet& rs) {
    if (rs.items.size() < 2) {
        throw InsufficientSpectrum("spectral gap needs at least two resonances");
    }
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < rs.items.size(); ++i) top = std::max(top, rs.items[i].lambda.real());
    return -top;
}

std::string to_json(const ResonanceSet& rs) {
    detail::json items = detail::json::array();
    for (const auto& r : rs.items) {
        items.push_back({{"k", r.k},
                         {"zeta_re", r.zeta.real()},
                         {"zeta_im", r.zeta.imag()},
                         {"lambda_re", r.lambda.real()},
                         {"lambda_im", r.lambda.imag()},
                         {"residual", r.residual}});
    }
    detail::json j{{"tau", rs.lag_time}, {"items", items}};
    j["gap"] = rs.gap ? detail::json(*rs.gap) : detail::json(nullptr);
    j["frequency_units"] = "angular";
    j["nyquist"] = rs.nyquist();
    return j.dump(2);
}

}  // namespace rpres
