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
//
// Test-only brute-force machinery for the semi-blind fit problem
//
//   min over flat-modulus unit s and free per-receiver gains B of
//       sum_l || xbar_l - Diag(s) D_l b_l ||^2.
//
// Two independent routes evaluate the same quantity:
//   * residual_ls      concentrates B by explicit least squares,
//   * residual_quad    uses sum||x||^2 - u^H Q u with u the phase vector.
// The minimization itself runs multi-restart gradient ascent on the
// quadratic form; reported minima are re-evaluated through the
// least-squares route.

#ifndef DLOC_TESTS_SBL_FIT_ORACLE_HPP
#define DLOC_TESTS_SBL_FIT_ORACLE_HPP

#include <cmath>
#include <vector>

#include "dloc/estimators.hpp"
#include "dloc/propagation.hpp"
#include "dloc/rng.hpp"

namespace fit_oracle
{
    struct Instance
    {
        Eigen::MatrixXcd xbar;                // N x L
        std::vector<Eigen::MatrixXcd> D;      // steering per receiver
        dloc::Environment env;
        double energy = 0.0;                  // sum ||xbar_l||^2
    };

    // Random instance of the signal model with a flat-modulus unit-norm
    // source spectrum (|s[k]| = 1/sqrt(N)) and optional white noise.
    inline Instance make_flat_instance(int L, int R, int N, double noise_sigma, std::uint64_t seed)
    {
        dloc::Rng rng(seed);
        Instance inst;
        inst.env.N = N;
        inst.env.Ts = 1e-3;

        Eigen::VectorXcd s(N);
        for (int k = 0; k < N; ++k)
            s[k] = std::polar(1.0 / std::sqrt(static_cast<double>(N)), rng.phase());

        inst.xbar.resize(N, L);
        for (int l = 0; l < L; ++l)
        {
            Eigen::VectorXd tau(R);
            for (int r = 0; r < R; ++r)
                tau[r] = rng.uniform(0.0, 0.8 * N * inst.env.Ts);
            std::sort(tau.data(), tau.data() + R);
            inst.D.push_back(dloc::steering_matrix(tau, inst.env));

            Eigen::VectorXcd b(R);
            for (int r = 0; r < R; ++r)
                b[r] = rng.cnormal();

            Eigen::VectorXcd x = s.cwiseProduct(inst.D.back() * b);
            for (int k = 0; k < N; ++k)
                x[k] += noise_sigma * rng.cnormal();
            inst.xbar.col(l) = x;
        }
        inst.energy = inst.xbar.squaredNorm();
        return inst;
    }

    // Route 1: concentrate the gains by explicit least squares per receiver.
    inline double residual_ls(const Instance &inst, const Eigen::VectorXd &phases)
    {
        const int N = static_cast<int>(inst.xbar.rows());
        Eigen::VectorXcd s(N);
        for (int k = 0; k < N; ++k)
            s[k] = std::polar(1.0 / std::sqrt(static_cast<double>(N)), phases[k]);

        double acc = 0.0;
        for (int l = 0; l < inst.xbar.cols(); ++l)
        {
            const Eigen::MatrixXcd A = s.asDiagonal() * inst.D[static_cast<size_t>(l)];
            const Eigen::VectorXcd b = A.colPivHouseholderQr().solve(inst.xbar.col(l));
            acc += (inst.xbar.col(l) - A * b).squaredNorm();
        }
        return acc;
    }

    // Route 2: energy minus the quadratic form of the library's Q at the
    // unimodular phase vector.
    inline double residual_quad(const Instance &inst, const Eigen::MatrixXcd &Q,
                                const Eigen::VectorXd &phases)
    {
        const int N = static_cast<int>(phases.size());
        Eigen::VectorXcd u(N);
        for (int k = 0; k < N; ++k)
            u[k] = std::polar(1.0, phases[k]);
        const std::complex<double> form = u.dot(Q * u); // u^H Q u
        return inst.energy - form.real();
    }

    // Multi-restart maximization of u^H Q u over phases (gradient ascent with
    // per-coordinate adaptive steps). Returns the best phase vector.
    inline Eigen::VectorXd maximize_quadratic(const Eigen::MatrixXcd &Q, int restarts, int iters,
                                              std::uint64_t seed, double *best_value = nullptr)
    {
        const int N = static_cast<int>(Q.rows());
        dloc::Rng rng(seed);

        Eigen::VectorXd best = Eigen::VectorXd::Zero(N);
        double best_val = -1e300;

        for (int rs = 0; rs < restarts; ++rs)
        {
            Eigen::VectorXd phi(N);
            for (int k = 0; k < N; ++k)
                phi[k] = rng.phase();

            Eigen::VectorXd m = Eigen::VectorXd::Zero(N), v = Eigen::VectorXd::Zero(N);
            const double b1 = 0.9, b2 = 0.999, eps = 1e-12;
            double lr = 0.3;
            for (int it = 1; it <= iters; ++it)
            {
                Eigen::VectorXcd u(N);
                for (int k = 0; k < N; ++k)
                    u[k] = std::polar(1.0, phi[k]);
                const Eigen::VectorXcd Qu = Q * u;
                Eigen::VectorXd g(N);
                for (int k = 0; k < N; ++k)
                    g[k] = 2.0 * std::imag(std::conj(u[k]) * Qu[k]); // ascent direction

                m = b1 * m + (1.0 - b1) * g;
                v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
                const double c1 = 1.0 - std::pow(b1, it);
                const double c2 = 1.0 - std::pow(b2, it);
                if (it > iters * 3 / 4)
                    lr = 0.03;
                for (int k = 0; k < N; ++k)
                    phi[k] += lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + eps);
            }

            Eigen::VectorXcd u(N);
            for (int k = 0; k < N; ++k)
                u[k] = std::polar(1.0, phi[k]);
            const double val = std::real(u.dot(Q * u));
            if (val > best_val)
            {
                best_val = val;
                best = phi;
            }
        }
        if (best_value)
            *best_value = best_val;
        return best;
    }

    // Multi-restart minimization of the fit problem; the returned value is
    // re-evaluated through the least-squares route at the optimizer's
    // terminal point.
    inline double minimize_fit(const Instance &inst, int restarts, int iters, std::uint64_t seed)
    {
        const Eigen::MatrixXcd Q = dloc::build_q(inst.xbar, inst.D);
        const Eigen::VectorXd phi = maximize_quadratic(Q, restarts, iters, seed);
        return residual_ls(inst, phi);
    }

} // namespace fit_oracle

#endif
