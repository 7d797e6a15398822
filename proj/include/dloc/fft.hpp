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

#ifndef DLOC_FFT_HPP
#define DLOC_FFT_HPP

#include <Eigen/Dense>
#include <complex>

namespace dloc
{
    // Unitary DFT pair: dft scales by 1/sqrt(N), idft by 1/sqrt(N), so
    // idft(dft(x)) == x and both preserve the 2-norm. Any length is
    // supported (radix-2 internally, Bluestein for other sizes).
    Eigen::VectorXcd dft(const Eigen::VectorXcd &x);
    Eigen::VectorXcd idft(const Eigen::VectorXcd &x);

    // Unnormalized forward transform, exposed for convolution-style uses.
    Eigen::VectorXcd fft_raw(const Eigen::VectorXcd &x);
    Eigen::VectorXcd ifft_raw(const Eigen::VectorXcd &x); // includes the 1/N factor

} // namespace dloc

#endif
