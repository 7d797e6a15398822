// SPDX-License-Identifier: Apache-2.0
//
// dloc  C++ library for direct localization of underwater acoustic sources
// Copyright (C) 2026 The dloc authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include <doctest.h>

#include "dloc/fft.hpp"
#include "dloc/rng.hpp"

using namespace dloc;

TEST_SUITE_BEGIN("fft");

namespace
{
    // O(N^2) oracle, written independently of the library transform.
    Eigen::VectorXcd naive_dft(const Eigen::VectorXcd &x)
    {
        const Eigen::Index n = x.size();
        Eigen::VectorXcd y(n);
        const double pi = 3.14159265358979323846;
        for (Eigen::Index k = 0; k < n; ++k)
        {
            std::complex<double> acc(0.0, 0.0);
            for (Eigen::Index m = 0; m < n; ++m)
            {
                const double a = -2.0 * pi * static_cast<double>(k) * static_cast<double>(m) /
                                 static_cast<double>(n);
                acc += x[m] * std::complex<double>(std::cos(a), std::sin(a));
            }
            y[k] = acc / std::sqrt(static_cast<double>(n));
        }
        return y;
    }

    Eigen::VectorXcd random_vec(Eigen::Index n, Rng &rng)
    {
        Eigen::VectorXcd x(n);
        for (Eigen::Index i = 0; i < n; ++i)
            x[i] = rng.cnormal();
        return x;
    }
} // namespace

TEST_CASE("impulse maps to a constant vector")
{
    Eigen::VectorXcd x = Eigen::VectorXcd::Zero(16);
    x[0] = 1.0;
    const Eigen::VectorXcd y = dft(x);
    for (Eigen::Index k = 0; k < 16; ++k)
        CHECK(std::abs(y[k] - std::complex<double>(0.25, 0.0)) < 1e-14);
}

TEST_CASE("matches the naive transform for assorted lengths")
{
    Rng rng(3);
    for (int n : {2, 3, 7, 16, 31, 100, 128, 199})
    {
        const Eigen::VectorXcd x = random_vec(n, rng);
        const Eigen::VectorXcd a = dft(x);
        const Eigen::VectorXcd b = naive_dft(x);
        CHECK((a - b).norm() / b.norm() < 1e-12);
    }
}

TEST_CASE("unitary: norms preserved, inverse exact")
{
    Rng rng(11);
    for (int n : {8, 100, 257})
    {
        const Eigen::VectorXcd x = random_vec(n, rng);
        const Eigen::VectorXcd y = dft(x);
        CHECK(y.norm() == doctest::Approx(x.norm()).epsilon(1e-12));
        CHECK((idft(y) - x).norm() < 1e-12 * x.norm());
    }
}

TEST_CASE("raw pair is a transform/inverse pair")
{
    Rng rng(5);
    const Eigen::VectorXcd x = random_vec(96, rng);
    CHECK((ifft_raw(fft_raw(x)) - x).norm() < 1e-12 * x.norm());
}

TEST_SUITE_END();
