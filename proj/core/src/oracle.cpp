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

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rpres/error.hpp"

namespace rpres {

namespace {

void validate(const OuSpec& spec) {
    if (!(spec.a > 0.0) || !std::isfinite(spec.a)) throw ArgumentError("OU rate a must be > 0");
    if (!(spec.s >= 0.0) || !std::isfinite(spec.s)) throw ArgumentError("OU amplitude s must be >= 0");
    if (spec.omega && !std::isfinite(*spec.omega)) throw ArgumentError("OU omega must be finite");
}

}  // namespace

std::vector<cplx> ou_resonances(const OuSpec& spec, std::size_t n_max) {
    validate(spec);
    std::vector<cplx> out;
    if (!spec.omega) {
        for (std::size_t n = 0; n <= n_max; ++n) out.emplace_back(-static_cast<double>(n) * spec.a, 0.0);
        return out;
    }
    for (std::size_t total = 0; total <= n_max; ++total) {
        for (std::size_t n = 0; n <= total; ++n) {
            const double diff = static_cast<double>(n) - static_cast<double>(total - n);
            out.emplace_back(-static_cast<double>(total) * spec.a, diff * *spec.omega);
        }
    }
    std::stable_sort(out.begin(), out.end(), [](const cplx& x, const cplx& y) {
        if (x.real() != y.real()) return x.real() > y.real();
        return x.imag() > y.imag();
    });
    return out;
}

std::vector<double> ou_acf(const OuSpec& spec, std::span<const double> lags) {
    validate(spec);
    const double var = spec.s * spec.s / (2.0 * spec.a);
    std::vector<double> out;
    out.reserve(lags.size());
    for (double t : lags) {
        if (!std::isfinite(t)) throw ArgumentError("ou_acf: lags must be finite");
        double c = var * std::exp(-spec.a * std::abs(t));
        if (spec.omega) c *= std::cos(*spec.omega * t);
        out.push_back(c);
    }
    return out;
}

std::vector<double> ou_psd(const OuSpec& spec, std::span<const double> freqs) {
    validate(spec);
    const double var = spec.s * spec.s / (2.0 * spec.a);
    const double a = spec.a;
    auto lorentz = [a](double d) { return a / (std::numbers::pi * (d * d + a * a)); };
    std::vector<double> out;
    out.reserve(freqs.size());
    for (double f : freqs) {
        if (spec.omega) {
            out.push_back(0.5 * var * (lorentz(f - *spec.omega) + lorentz(f + *spec.omega)));
        } else {
            out.push_back(var * lorentz(f));
        }
    }
    return out;
}

}  // namespace rpres
