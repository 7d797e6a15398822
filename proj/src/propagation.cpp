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

#include "dloc/propagation.hpp"

#include <cmath>
#include <stdexcept>

#include "dloc/fft.hpp"

namespace dloc
{
    namespace
    {
        constexpr double kPi = 3.14159265358979323846;
    }

    RayDelaySet three_ray_delays(const CartesianPosition &p, const ReceiverArray &arr,
                                 const Environment &env)
    {
        if (!(p.z > 0.0) || !(p.z < env.h))
            throw std::invalid_argument("source position outside the water column");

        const int L = arr.size();
        RayDelaySet d;
        d.tau.resize(3, L);

        const CartesianPosition surf{p.x, p.y, -p.z};
        const CartesianPosition bot{p.x, p.y, 2.0 * env.h - p.z};
        for (int l = 0; l < L; ++l)
        {
            const CartesianPosition &q = arr.positions[l];
            d.tau(0, l) = distance(p, q) / env.c;
            d.tau(1, l) = distance(surf, q) / env.c;
            d.tau(2, l) = distance(bot, q) / env.c;
        }
        return d;
    }

    void steering_matrix_into(const Eigen::VectorXd &delays, const Environment &env,
                              Eigen::MatrixXcd &out)
    {
        const int N = env.N;
        const int R = static_cast<int>(delays.size());
        out.resize(N, R);

        const double dw = 2.0 * kPi / (static_cast<double>(N) * env.Ts);
        for (int r = 0; r < R; ++r)
        {
            // entry k is exp(-i * dw * k * tau); advance by complex products,
            // resynchronizing with an exact evaluation every 16 steps to stop
            // rounding drift
            const double a = -dw * delays[r];
            const std::complex<double> step(std::cos(a), std::sin(a));
            std::complex<double> z(1.0, 0.0);
            for (int k = 0; k < N; ++k)
            {
                if ((k & 15) == 0)
                {
                    const double ang = a * static_cast<double>(k);
                    z = std::complex<double>(std::cos(ang), std::sin(ang));
                }
                out(k, r) = z;
                z *= step;
            }
        }
    }

    Eigen::MatrixXcd steering_matrix(const Eigen::VectorXd &delays, const Environment &env)
    {
        Eigen::MatrixXcd D;
        steering_matrix_into(delays, env, D);
        return D;
    }

    Eigen::VectorXcd channel_spectrum(const Eigen::MatrixXcd &steering, const Eigen::VectorXcd &b)
    {
        return steering * b;
    }

    void sample_attenuation_parts(Rng &rng, std::complex<double> &mean_part,
                                  std::complex<double> &fluctuation)
    {
        mean_part = std::polar(std::sqrt(0.99), rng.phase());
        fluctuation = 0.1 * rng.cnormal();
    }

    Eigen::MatrixXcd sample_attenuations(int R, int L, Rng &rng)
    {
        Eigen::MatrixXcd B(R, L);
        for (int l = 0; l < L; ++l)
            for (int r = 0; r < R; ++r)
            {
                std::complex<double> m, g;
                sample_attenuation_parts(rng, m, g);
                B(r, l) = m + g;
            }
        return B;
    }

    NoiseFileReader::NoiseFileReader(const std::string &path)
    {
        f_ = std::fopen(path.c_str(), "rb");
        if (!f_)
            throw std::runtime_error("cannot open noise file: " + path);
        std::fseek(f_, 0, SEEK_END);
        const long bytes = std::ftell(f_);
        std::fseek(f_, 0, SEEK_SET);
        total_ = static_cast<std::uint64_t>(bytes) / (2 * sizeof(double));
    }

    NoiseFileReader::~NoiseFileReader()
    {
        if (f_)
            std::fclose(f_);
    }

    Eigen::VectorXcd NoiseFileReader::take(Eigen::Index count)
    {
        Eigen::VectorXcd v(count);
        std::vector<double> buf(2 * static_cast<size_t>(count));
        const size_t got = std::fread(buf.data(), sizeof(double), buf.size(), f_);
        if (got != buf.size())
            throw std::runtime_error("noise file too short for the requested samples");
        for (Eigen::Index i = 0; i < count; ++i)
            v[i] = std::complex<double>(buf[2 * i], buf[2 * i + 1]);
        return v;
    }

    void NoiseFileReader::seek(std::uint64_t complex_index)
    {
        if (std::fseek(f_, static_cast<long>(complex_index * 2 * sizeof(double)), SEEK_SET) != 0)
            throw std::runtime_error("noise file seek failed");
    }

    RayDelaySet perturb_surface_delays(const RayDelaySet &d, const CartesianPosition &p,
                                       const ReceiverArray &arr, const Environment &env, Rng &rng,
                                       std::optional<double> sigma_override)
    {
        if (d.rays() != 3)
            throw std::invalid_argument("surface perturbation expects three-ray delays");

        double sigma;
        if (sigma_override)
            sigma = *sigma_override;
        else
        {
            double mean_dist = 0.0;
            for (const auto &q : arr.positions)
                mean_dist += distance(p, q);
            mean_dist /= static_cast<double>(arr.size());
            sigma = 0.01 * mean_dist / env.c;
        }

        RayDelaySet out = d;
        for (int l = 0; l < d.receivers(); ++l)
        {
            const double eps = sigma * rng.normal();
            // keep the line-of-sight path the shortest
            out.tau(1, l) = std::max(d.tau(1, l) + eps, d.tau(0, l));
        }
        return out;
    }

    SignalRecord synthesize(const CartesianPosition &p, const ReceiverArray &arr,
                            const Environment &env, const Eigen::MatrixXcd &B,
                            const SynthesisOptions &opt, Rng &rng)
    {
        env.validate();
        arr.validate();
        if (std::isnan(opt.snr_db))
            throw std::invalid_argument("snr_db is NaN");

        const int N = env.N;
        const int L = arr.size();
        const int R = static_cast<int>(B.rows());
        if (B.cols() != L)
            throw std::invalid_argument("attenuation matrix has wrong receiver count");

        const double sigma_v2 = std::pow(10.0, -opt.snr_db / 10.0);

        // Fixed draw order: source spectrum, noise, perturbations. See header.
        Eigen::VectorXcd sbar(N);
        for (int k = 0; k < N; ++k)
            sbar[k] = rng.cnormal();

        Eigen::MatrixXcd vbar(N, L);
        if (opt.noise_file)
        {
            for (int l = 0; l < L; ++l)
            {
                Eigen::VectorXcd block = opt.noise_file->take(N);
                const double power = block.squaredNorm() / static_cast<double>(N);
                if (power <= 0.0)
                    throw std::runtime_error("noise file block has zero power");
                vbar.col(l) = dft(block) * std::sqrt(sigma_v2 / power);
            }
        }
        else
        {
            const double s = std::sqrt(sigma_v2);
            for (int l = 0; l < L; ++l)
                for (int k = 0; k < N; ++k)
                    vbar(k, l) = s * rng.cnormal();
        }

        RayDelaySet delays = three_ray_delays(p, arr, env);
        if (R != delays.rays())
        {
            // Attenuations with fewer rows use only the first R ray paths;
            // this supports single-path records for baseline tests.
            if (R > delays.rays())
                throw std::invalid_argument("more attenuation rows than ray paths");
            delays.tau.conservativeResize(R, Eigen::NoChange);
        }
        if (opt.dynamic_surface)
        {
            if (R != 3)
                throw std::invalid_argument("dynamic surface variant requires the three-ray model");
            delays = perturb_surface_delays(delays, p, arr, env, rng, opt.perturb_sigma);
        }

        SignalRecord rec;
        rec.samples.resize(N, L);
        rec.label = p;

        Eigen::MatrixXcd D;
        for (int l = 0; l < L; ++l)
        {
            steering_matrix_into(delays.tau.col(l), env, D);
            const Eigen::VectorXcd hbar = D * B.col(l);
            const Eigen::VectorXcd xbar = sbar.cwiseProduct(hbar) + vbar.col(l);
            rec.samples.col(l) = idft(xbar);
        }

        rec.truth = SignalRecord::Truth{B, delays, sbar, sigma_v2};
        return rec;
    }

} // namespace dloc
