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

#include "dloc/sos.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace dloc
{
    int pair_count(int L)
    {
        return (L + 1) * L / 2;
    }

    int pair_row(int l1, int l2, int L)
    {
        if (l1 < 0 || l2 < l1 || l2 >= L)
            throw std::out_of_range("pair_row: need 0 <= l1 <= l2 < L");
        return l1 * L - l1 * (l1 + 1) / 2 + l2;
    }

    void pair_from_row(int row, int L, int &l1, int &l2)
    {
        if (row < 0 || row >= pair_count(L))
            throw std::out_of_range("pair_from_row: row out of range");
        for (int a = 0; a < L; ++a)
        {
            const int first = pair_row(a, a, L);
            const int last = pair_row(a, L - 1, L);
            if (row >= first && row <= last)
            {
                l1 = a;
                l2 = a + (row - first);
                return;
            }
        }
    }

    SosTensor build_sos(const SignalRecord &rec)
    {
        const int L = rec.receivers();
        const int N = rec.samples_per_receiver();
        if (L < 2 || N < 2)
            throw std::invalid_argument("build_sos needs L >= 2 and N >= 2");

        SosTensor t;
        t.pairs = pair_count(L);
        t.lags = 2 * N - 1;
        t.data.assign(static_cast<size_t>(t.pairs) * t.lags * 2, 0.0);

        for (int l1 = 0; l1 < L; ++l1)
        {
            for (int l2 = l1; l2 < L; ++l2)
            {
                const int row = pair_row(l1, l2, L);
                const auto a = rec.samples.col(l1);
                const auto b = rec.samples.col(l2);
                for (int m = -(N - 1); m <= N - 1; ++m)
                {
                    // overlap of a[n+m] with b[n]
                    const int n0 = std::max(0, -m);
                    const int n1 = std::min(N - 1, N - 1 - m);
                    std::complex<double> acc(0.0, 0.0);
                    for (int n = n0; n <= n1; ++n)
                        acc += a[n + m] * std::conj(b[n]);
                    acc /= static_cast<double>(N);
                    const int li = m + (N - 1);
                    t.at(row, li, 0) = acc.real();
                    t.at(row, li, 1) = acc.imag();
                }
            }
        }
        return t;
    }

    namespace
    {
        void put_u32(std::vector<std::uint8_t> &out, std::uint32_t v)
        {
            out.push_back(static_cast<std::uint8_t>(v & 0xFF));
            out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xFF));
            out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xFF));
            out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xFF));
        }

        std::uint32_t get_u32(const std::uint8_t *p)
        {
            return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
                   (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
        }
    } // namespace

    std::vector<std::uint8_t> serialize_sos(const SosTensor &t, int L, int N)
    {
        if (t.pairs != pair_count(L) || t.lags != 2 * N - 1)
            throw std::invalid_argument("serialize_sos: tensor shape inconsistent with L, N");

        std::vector<std::uint8_t> out;
        out.reserve(16 + t.data.size() * 4);
        out.push_back('S');
        out.push_back('O');
        out.push_back('S');
        out.push_back('1');
        put_u32(out, static_cast<std::uint32_t>(L));
        put_u32(out, static_cast<std::uint32_t>(N));
        put_u32(out, 0); // reserved

        for (double d : t.data)
        {
            const float f = static_cast<float>(d);
            std::uint32_t bits;
            std::memcpy(&bits, &f, 4);
            put_u32(out, bits);
        }
        return out;
    }

    SosTensor parse_sos(const std::vector<std::uint8_t> &bytes, int &L, int &N)
    {
        if (bytes.size() < 16 || std::memcmp(bytes.data(), "SOS1", 4) != 0)
            throw std::runtime_error("not a SOS1 blob");
        L = static_cast<int>(get_u32(bytes.data() + 4));
        N = static_cast<int>(get_u32(bytes.data() + 8));

        SosTensor t;
        t.pairs = pair_count(L);
        t.lags = 2 * N - 1;
        const size_t count = static_cast<size_t>(t.pairs) * t.lags * 2;
        if (bytes.size() != 16 + count * 4)
            throw std::runtime_error("SOS1 blob has wrong payload size");
        t.data.resize(count);
        for (size_t i = 0; i < count; ++i)
        {
            const std::uint32_t bits = get_u32(bytes.data() + 16 + i * 4);
            float f;
            std::memcpy(&f, &bits, 4);
            t.data[i] = static_cast<double>(f);
        }
        return t;
    }

    void save_sos(const SosTensor &t, int L, int N, const std::string &path)
    {
        const auto bytes = serialize_sos(t, L, N);
        std::ofstream out(path, std::ios::binary);
        if (!out)
            throw std::runtime_error("cannot write " + path);
        out.write(reinterpret_cast<const char *>(bytes.data()),
                  static_cast<std::streamsize>(bytes.size()));
    }

    SosTensor load_sos(const std::string &path, int &L, int &N)
    {
        std::ifstream in(path, std::ios::binary);
        if (!in)
            throw std::runtime_error("cannot read " + path);
        std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                        std::istreambuf_iterator<char>());
        return parse_sos(bytes, L, N);
    }

} // namespace dloc
