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

#ifndef DLOC_RNG_HPP
#define DLOC_RNG_HPP

#include <cmath>
#include <complex>
#include <cstdint>
#include <initializer_list>

namespace dloc
{
    // One SplitMix64 step. Used for seeding and for deriving substreams.
    inline std::uint64_t splitmix64(std::uint64_t &state)
    {
        std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Derives a child seed from a master seed and a path of indices (e.g. SNR
    // index, trial index). Distinct paths give statistically independent
    // streams, so any subset of Monte-Carlo trials can be reproduced in
    // isolation and workers never share generator state.
    std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path);

    // Deterministic pseudo-random generator (xoshiro256**) with explicit
    // uniform / Gaussian / complex-Gaussian transforms. No library
    // distribution objects are used anywhere, so every draw is a pure
    // function of the seed and the call sequence.
    class Rng
    {
    public:
        explicit Rng(std::uint64_t seed);

        std::uint64_t next_u64();

        // Uniform on [0, 1), 53-bit resolution.
        double uniform();

        // Uniform on [a, b).
        double uniform(double a, double b);

        // Uniform phase on (-pi, pi].
        double phase();

        // Standard normal (Box-Muller, one spare cached).
        double normal();

        // Circularly-symmetric complex normal with E[|z|^2] = 1.
        std::complex<double> cnormal();

    private:
        std::uint64_t s_[4];
        double spare_ = 0.0;
        bool have_spare_ = false;
    };

} // namespace dloc

#endif
