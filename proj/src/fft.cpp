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

#include "dloc/fft.hpp"

#include <stdexcept>
#include <vector>

namespace dloc
{
    namespace
    {
        constexpr double kPi = 3.14159265358979323846;

        bool is_pow2(Eigen::Index n) { return n > 0 && (n & (n - 1)) == 0; }

        Eigen::Index next_pow2(Eigen::Index n)
        {
            Eigen::Index p = 1;
            while (p < n)
                p <<= 1;
            return p;
        }

        // In-place iterative radix-2 transform, sign = -1 forward, +1 inverse
        // (inverse without the 1/N factor).
        void fft_pow2(Eigen::VectorXcd &a, int sign)
        {
            const Eigen::Index n = a.size();
            // bit-reversal permutation
            for (Eigen::Index i = 1, j = 0; i < n; ++i)
            {
                Eigen::Index bit = n >> 1;
                for (; j & bit; bit >>= 1)
                    j ^= bit;
                j ^= bit;
                if (i < j)
                    std::swap(a[i], a[j]);
            }
            for (Eigen::Index len = 2; len <= n; len <<= 1)
            {
                const double ang = sign * 2.0 * kPi / static_cast<double>(len);
                const std::complex<double> wl(std::cos(ang), std::sin(ang));
                for (Eigen::Index i = 0; i < n; i += len)
                {
                    std::complex<double> w(1.0, 0.0);
                    for (Eigen::Index k = 0; k < len / 2; ++k)
                    {
                        std::complex<double> u = a[i + k];
                        std::complex<double> v = a[i + k + len / 2] * w;
                        a[i + k] = u + v;
                        a[i + k + len / 2] = u - v;
                        w *= wl;
                    }
                }
            }
        }

        // Bluestein's algorithm: DFT of arbitrary length as a convolution of
        // chirp-modulated sequences, carried out with a power-of-two FFT.
        Eigen::VectorXcd fft_bluestein(const Eigen::VectorXcd &x, int sign)
        {
            const Eigen::Index n = x.size();
            const Eigen::Index m = next_pow2(2 * n - 1);

            // chirp b[k] = exp(sign * i * pi * k^2 / n); k^2 taken mod 2n to
            // keep the argument small
            Eigen::VectorXcd b(n);
            for (Eigen::Index k = 0; k < n; ++k)
            {
                const long long k2 = (static_cast<long long>(k) * k) % (2LL * n);
                const double ang = sign * kPi * static_cast<double>(k2) / static_cast<double>(n);
                b[k] = std::complex<double>(std::cos(ang), std::sin(ang));
            }

            Eigen::VectorXcd u = Eigen::VectorXcd::Zero(m);
            Eigen::VectorXcd v = Eigen::VectorXcd::Zero(m);
            for (Eigen::Index k = 0; k < n; ++k)
                u[k] = x[k] * b[k];
            for (Eigen::Index k = 0; k < n; ++k)
            {
                v[k] = std::conj(b[k]);
                if (k != 0)
                    v[m - k] = std::conj(b[k]);
            }

            fft_pow2(u, -1);
            fft_pow2(v, -1);
            for (Eigen::Index k = 0; k < m; ++k)
                u[k] *= v[k];
            fft_pow2(u, +1);
            const double inv_m = 1.0 / static_cast<double>(m);

            Eigen::VectorXcd out(n);
            for (Eigen::Index k = 0; k < n; ++k)
                out[k] = u[k] * inv_m * b[k];
            return out;
        }

        Eigen::VectorXcd transform(const Eigen::VectorXcd &x, int sign)
        {
            if (x.size() == 0)
                throw std::invalid_argument("empty transform input");
            if (x.size() == 1)
                return x;
            if (is_pow2(x.size()))
            {
                Eigen::VectorXcd a = x;
                fft_pow2(a, sign);
                return a;
            }
            return fft_bluestein(x, sign);
        }
    } // namespace

    Eigen::VectorXcd fft_raw(const Eigen::VectorXcd &x)
    {
        return transform(x, -1);
    }

    Eigen::VectorXcd ifft_raw(const Eigen::VectorXcd &x)
    {
        Eigen::VectorXcd y = transform(x, +1);
        y /= static_cast<double>(x.size());
        return y;
    }

    Eigen::VectorXcd dft(const Eigen::VectorXcd &x)
    {
        Eigen::VectorXcd y = transform(x, -1);
        y /= std::sqrt(static_cast<double>(x.size()));
        return y;
    }

    Eigen::VectorXcd idft(const Eigen::VectorXcd &x)
    {
        Eigen::VectorXcd y = transform(x, +1);
        y /= std::sqrt(static_cast<double>(x.size()));
        return y;
    }

} // namespace dloc
