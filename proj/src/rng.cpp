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

#include "dloc/rng.hpp"

namespace dloc
{
    std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path)
    {
        std::uint64_t s = master;
        std::uint64_t out = splitmix64(s);
        for (std::uint64_t p : path)
        {
            s = out ^ (p + 0xD1B54A32D192ED03ULL);
            out = splitmix64(s);
        }
        return out;
    }

    Rng::Rng(std::uint64_t seed)
    {
        // Expand the seed through SplitMix64; avoids the all-zero state.
        for (auto &w : s_)
            w = splitmix64(seed);
        if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0)
            s_[0] = 1;
    }

    static inline std::uint64_t rotl(std::uint64_t x, int k)
    {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t Rng::next_u64()
    {
        // xoshiro256**
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    double Rng::uniform()
    {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double Rng::uniform(double a, double b)
    {
        return a + (b - a) * uniform();
    }

    double Rng::phase()
    {
        // (1 - u) in (0, 1]  ->  phase in (-pi, pi]
        const double pi = 3.14159265358979323846;
        return pi * (1.0 - 2.0 * uniform());
    }

    double Rng::normal()
    {
        if (have_spare_)
        {
            have_spare_ = false;
            return spare_;
        }
        const double pi = 3.14159265358979323846;
        double u1 = 1.0 - uniform(); // (0, 1], keeps log finite
        double u2 = uniform();
        double m = std::sqrt(-2.0 * std::log(u1));
        spare_ = m * std::sin(2.0 * pi * u2);
        have_spare_ = true;
        return m * std::cos(2.0 * pi * u2);
    }

    std::complex<double> Rng::cnormal()
    {
        // Magnitude and phase drawn directly: |z|^2 is Exp(1), phase uniform.
        const double pi = 3.14159265358979323846;
        double u1 = 1.0 - uniform();
        double u2 = uniform();
        double m = std::sqrt(-std::log(u1));
        return std::polar(m, 2.0 * pi * u2);
    }

} // namespace dloc
