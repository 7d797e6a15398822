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

#ifndef DLOC_SOS_HPP
#define DLOC_SOS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "dloc/propagation.hpp"

namespace dloc
{
    // Number of unordered receiver pairs, (L+1)*L/2.
    int pair_count(int L);

    // Row of the canonical pair (l1, l2), 0-based with l1 <= l2: row-major
    // enumeration of the upper triangle. Bijective onto 0..pair_count-1.
    // Correlations for l1 > l2 are the conjugate lag-flip of the canonical
    // row, so callers swap indices instead of storing them twice.
    int pair_row(int l1, int l2, int L);

    // Inverse of pair_row.
    void pair_from_row(int row, int L, int &l1, int &l2);

    // Stacked empirical second-order statistics of one record: for every
    // canonical receiver pair the full auto/cross-correlation
    //   r[m] = (1/N) * sum_n x_{l1}[n+m] * conj(x_{l2}[n]),   m = -(N-1)..N-1
    // (zero-padded at the edges), split into real and imaginary channels.
    // Shape: pairs x (2N-1) lags x 2 channels; the lag axis is stored from
    // -(N-1) upward. This layout is the network input and must be identical
    // at training and inference time.
    struct SosTensor
    {
        int pairs = 0;
        int lags = 0;                // 2N - 1
        std::vector<double> data;    // [pair][lag][channel], channel 0 re, 1 im

        double &at(int p, int lag_idx, int ch)
        {
            return data[(static_cast<size_t>(p) * lags + lag_idx) * 2 + ch];
        }
        double at(int p, int lag_idx, int ch) const
        {
            return data[(static_cast<size_t>(p) * lags + lag_idx) * 2 + ch];
        }
    };

    SosTensor build_sos(const SignalRecord &rec);

    // Serialized form: 16-byte header (magic "SOS1", L and N as little-endian
    // uint32, one reserved word), then float32 values row-major
    // [pair][lag][channel].
    std::vector<std::uint8_t> serialize_sos(const SosTensor &t, int L, int N);
    SosTensor parse_sos(const std::vector<std::uint8_t> &bytes, int &L, int &N);

    void save_sos(const SosTensor &t, int L, int N, const std::string &path);
    SosTensor load_sos(const std::string &path, int &L, int &N);

} // namespace dloc

#endif
