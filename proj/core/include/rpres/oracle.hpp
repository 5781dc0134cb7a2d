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
#include <optional>
#include <span>
#include <vector>

#include "rpres/spectral.hpp"

namespace rpres {

/// Linear OU process dX = -a X dt + s dW, or its 2D rotating variant with
/// drift (-a x - omega y, omega x - a y) when `omega` is set.
struct OuSpec {
    double a = 1.0;
    double s = 1.0;
    std::optional<double> omega;
};

/// 1D: {-n a : 0 <= n <= n_max}. 2D: {-(n+m) a + i (n-m) omega : n+m <= n_max}.
/// Sorted by descending real part, then descending imaginary part.
std::vector<cplx> ou_resonances(const OuSpec& spec, std::size_t n_max);

/// (s^2 / 2a) e^{-a|t|}, times cos(omega t) for the rotating variant.
std::vector<double> ou_acf(const OuSpec& spec, std::span<const double> lags);

/// Two-sided angular PSD matching ou_acf.
std::vector<double> ou_psd(const OuSpec& spec, std::span<const double> freqs);

}  // namespace rpres
