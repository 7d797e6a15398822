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

#include "dloc/bench.hpp"
#include "dloc/estimators.hpp"
#include "dloc/fft.hpp"

using namespace dloc;

TEST_SUITE_BEGIN("estimators");

namespace
{
    Eigen::MatrixXcd random_cmatrix(int rows, int cols, Rng &rng)
    {
        Eigen::MatrixXcd m(rows, cols);
        for (int j = 0; j < cols; ++j)
            for (int i = 0; i < rows; ++i)
                m(i, j) = rng.cnormal();
        return m;
    }

    std::vector<Eigen::MatrixXcd> scene_steering(const CartesianPosition &p, const Scene &s)
    {
        const RayDelaySet d = three_ray_delays(p, s.array, s.env);
        std::vector<Eigen::MatrixXcd> D;
        for (int l = 0; l < s.array.size(); ++l)
            D.push_back(steering_matrix(d.tau.col(l), s.env));
        return D;
    }
} // namespace

TEST_CASE("matched-field objective closed forms")
{
    Rng rng(1);
    const int N = 32, L = 4;

    // zero-noise record at the truth: objective equals sum |s|^2 ||h_k||^2
    Eigen::MatrixXcd hbar = random_cmatrix(N, L, rng);
    Eigen::VectorXcd sbar(N);
    for (int k = 0; k < N; ++k)
        sbar[k] = rng.cnormal();
    Eigen::MatrixXcd xbar = hbar.array().colwise() * sbar.array();

    double expect = 0.0;
    for (int k = 0; k < N; ++k)
        expect += std::norm(sbar[k]) * hbar.row(k).squaredNorm();
    CHECK(mfp_objective(xbar, hbar) == doctest::Approx(expect).epsilon(1e-12));

    // orthogonality in every bin gives zero
    Eigen::MatrixXcd h2 = Eigen::MatrixXcd::Zero(N, 2);
    Eigen::MatrixXcd x2 = Eigen::MatrixXcd::Zero(N, 2);
    for (int k = 0; k < N; ++k)
    {
        h2(k, 0) = 1.0;
        x2(k, 1) = rng.cnormal(); // <x, h> = 0
    }
    CHECK(mfp_objective(x2, h2) == doctest::Approx(0.0));

    // invariance to per-bin complex rescaling of the channel
    Eigen::MatrixXcd hscaled = hbar;
    for (int k = 0; k < N; ++k)
        hscaled.row(k) *= std::polar(rng.uniform(0.1, 3.0), rng.phase());
    CHECK(mfp_objective(xbar, hscaled) ==
          doctest::Approx(mfp_objective(xbar, hbar)).epsilon(1e-10));

    // a vanished channel bin contributes zero rather than NaN
    Eigen::MatrixXcd hz = hbar;
    hz.row(3).setZero();
    CHECK(std::isfinite(mfp_objective(xbar, hz)));
}

TEST_CASE("single-ray Gram reduces to a scalar")
{
    Rng rng(2);
    const int N = 16, L = 3;
    Scene s = default_scene();
    s.env.N = N;

    Eigen::MatrixXcd xbar = random_cmatrix(N, L, rng);
    std::vector<Eigen::MatrixXcd> D;
    for (int l = 0; l < L; ++l)
    {
        Eigen::VectorXd tau(1);
        tau << rng.uniform(0.0, 0.3);
        D.push_back(steering_matrix(tau, s.env));
    }

    const Eigen::MatrixXcd Q = build_q(xbar, D);
    Eigen::MatrixXcd ref = Eigen::MatrixXcd::Zero(N, N);
    for (int l = 0; l < L; ++l)
    {
        const Eigen::VectorXcd g = xbar.col(l).cwiseProduct(D[l].col(0).conjugate());
        ref += g * g.adjoint() / (static_cast<double>(N) + 1e-10 * N);
    }
    CHECK((Q - ref).norm() < 1e-10 * ref.norm());
}

TEST_CASE("q matrix is hermitian positive semidefinite")
{
    Rng rng(3);
    const int N = 100, L = 4;
    Scene s = default_scene();

    const Eigen::MatrixXcd xbar = random_cmatrix(N, L, rng);
    const auto D = scene_steering({20.0, -45.0, 17.0}, s);
    const Eigen::MatrixXcd Q = build_q(xbar, D);

    CHECK((Q - Q.adjoint()).norm() < 1e-12 * Q.norm());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(Q);
    CHECK(es.eigenvalues().minCoeff() > -1e-10 * Q.trace().real());

    // zero signal gives the zero matrix
    const Eigen::MatrixXcd Z = build_q(Eigen::MatrixXcd::Zero(N, L), D);
    CHECK(Z.norm() == 0.0);
}

TEST_CASE("power iteration matches a dense eigensolver")
{
    CHECK(lambda_max(Eigen::MatrixXcd::Identity(12, 12)) == doctest::Approx(1.0).epsilon(1e-10));

    Eigen::MatrixXcd d3 = Eigen::MatrixXcd::Zero(3, 3);
    d3.diagonal() << 1.0, 2.0, 3.0;
    CHECK(lambda_max(d3) == doctest::Approx(3.0).epsilon(1e-10));

    Rng rng(4);
    for (int rep = 0; rep < 5; ++rep)
    {
        Eigen::MatrixXcd A = random_cmatrix(50, 50, rng);
        Eigen::MatrixXcd H = 0.5 * (A + A.adjoint()); // indefinite hermitian
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H);
        const double ref = es.eigenvalues().maxCoeff();
        CHECK(lambda_max(H) == doctest::Approx(ref).epsilon(1e-9));
    }

    CHECK(lambda_max(Eigen::MatrixXcd::Zero(8, 8)) == 0.0);
}

TEST_CASE("semi-blind objective: both algebraic routes agree")
{
    Rng rng(5);
    Scene s = default_scene(); // N = 100
    const int L = 4;

    for (int rep = 0; rep < 3; ++rep)
    {
        const Eigen::MatrixXcd xbar = random_cmatrix(s.env.N, L, rng);
        const CartesianPosition p{rng.uniform(-120, 120), rng.uniform(-90, -10),
                                  rng.uniform(8, 40)};
        const auto D = scene_steering(p, s);
        const double a = sbl_objective(xbar, D);
        const double b = sbl_objective_gram(xbar, D);
        CHECK(std::abs(a - b) < 1e-9 * std::max(a, b));
    }

    // zero signal
    const auto D = scene_steering({0.0, -50.0, 25.0}, s);
    CHECK(sbl_objective(Eigen::MatrixXcd::Zero(s.env.N, L), D) == 0.0);
}

TEST_CASE("semi-blind objective ignores the steering basis")
{
    // right-multiplying any steering matrix by an invertible matrix leaves
    // the objective unchanged (only the column space enters)
    Rng rng(6);
    Scene s = default_scene();
    s.env.N = 48;
    const int L = 4;

    const Eigen::MatrixXcd xbar = random_cmatrix(s.env.N, L, rng);
    auto D = scene_steering({15.0, -30.0, 22.0}, s);
    const double base = sbl_objective_gram(xbar, D);

    Eigen::MatrixXcd T = random_cmatrix(3, 3, rng);
    T += 3.0 * Eigen::MatrixXcd::Identity(3, 3); // keep it well conditioned
    // the Gram route applies the ridge in the transformed basis, so allow a
    // loose tolerance dominated by that epsilon
    D[1] = D[1] * T;
    const double mixed = sbl_objective_gram(xbar, D);
    CHECK(mixed == doctest::Approx(base).epsilon(1e-6));
}

TEST_CASE("projection bound caps the semi-blind objective")
{
    Rng rng(7);
    Scene s = default_scene();
    s.env.N = 64;
    const int L = 4;
    const Eigen::MatrixXcd xbar = random_cmatrix(s.env.N, L, rng);
    const auto D = scene_steering({-40.0, -70.0, 12.0}, s);
    const Eigen::MatrixXcd Q = build_q(xbar, D);
    const double lm = lambda_max(Q);
    const double tr = Q.trace().real();
    CHECK(lm <= tr * (1.0 + 1e-12));
    CHECK(tr <= xbar.squaredNorm() * (1.0 + 1e-12));
}

TEST_CASE("grid search finds exact grid maxima and refines cleanly")
{
    SearchVolume vol;
    vol.lo = {-10.0, -10.0, 1.0};
    vol.hi = {10.0, 10.0, 5.0};
    vol.step = {2.0, 2.0, 1.0};
    vol.levels = 3;
    vol.shrink = 0.25;

    const CartesianPosition target{4.0, -6.0, 3.0}; // a coarse grid point
    auto quad = [&](const CartesianPosition &p) {
        const double d = distance(p, target);
        return -d * d;
    };
    const SearchResult r = grid_search(quad, vol);
    CHECK(distance(r.position, target) == doctest::Approx(0.0).epsilon(1e-12));

    // deterministic
    const SearchResult r2 = grid_search(quad, vol);
    CHECK(r.position.x == r2.position.x);
    CHECK(r.position.y == r2.position.y);
    CHECK(r.position.z == r2.position.z);

    // smooth unimodal objective off-grid: error bounded by the final step diagonal
    const CartesianPosition off{3.137, -5.71, 2.53};
    auto quad_off = [&](const CartesianPosition &p) {
        const double d = distance(p, off);
        return -d * d;
    };
    const SearchResult ro = grid_search(quad_off, vol);
    const double shrink3 = 0.25 * 0.25 * 0.25;
    const CartesianPosition fstep{2.0 * shrink3, 2.0 * shrink3, 1.0 * shrink3};
    CHECK(distance(ro.position, off) <= fstep.norm());

    // refinement never loses to the coarse pass
    SearchVolume coarse_only = vol;
    coarse_only.levels = 0;
    const SearchResult rc = grid_search(quad_off, coarse_only);
    CHECK(ro.objective >= rc.objective);
}

TEST_CASE("oracle matched-field recovers an on-grid source without noise")
{
    ExperimentConfig cfg;
    cfg.seed = 406;
    Scene &s = cfg.scene;

    // truth on the coarse grid
    const CartesianPosition p{-30.0, -45.0, 23.0};
    Rng rng(9);
    const Eigen::MatrixXcd B = sample_attenuations(3, s.array.size(), rng);
    SynthesisOptions opt;
    opt.snr_db = 1e9;
    const SignalRecord rec = synthesize(p, s.array, s.env, B, opt, rng);

    const SearchResult r = localize_oracle_mfp(rec, s.array, s.env, cfg.search);
    CHECK(r.position.x == doctest::Approx(p.x).epsilon(1e-12));
    CHECK(r.position.y == doctest::Approx(p.y).epsilon(1e-12));
    CHECK(r.position.z == doctest::Approx(p.z).epsilon(1e-12));

    // identical repeat call
    const SearchResult r2 = localize_oracle_mfp(rec, s.array, s.env, cfg.search);
    CHECK(r.position.x == r2.position.x);
    CHECK(r.objective == r2.objective);

    // truth block required
    SignalRecord stripped = rec;
    stripped.truth.reset();
    CHECK_THROWS_AS(localize_oracle_mfp(stripped, s.array, s.env, cfg.search),
                    std::invalid_argument);
}

TEST_CASE("phase-transform delay estimation")
{
    Environment env;
    env.N = 64;
    env.Ts = 1e-3;

    Rng rng(10);
    Eigen::VectorXcd base(env.N);
    for (int n = 0; n < env.N; ++n)
        base[n] = rng.cnormal();

    // circular shift by 5 samples: receiver 2 lags receiver 1
    SignalRecord rec;
    rec.samples.resize(env.N, 2);
    rec.samples.col(0) = base;
    for (int n = 0; n < env.N; ++n)
        rec.samples((n + 5) % env.N, 1) = base[n];

    const Eigen::VectorXd t = gcc_phat(rec, env);
    CHECK(t[0] == doctest::Approx(5.0 * env.Ts).epsilon(1e-9));

    // identical signals: zero delay
    SignalRecord same;
    same.samples.resize(env.N, 2);
    same.samples.col(0) = base;
    same.samples.col(1) = base;
    CHECK(gcc_phat(same, env)[0] == doctest::Approx(0.0));

    // all-zero signal is rejected
    SignalRecord zero;
    zero.samples = Eigen::MatrixXcd::Zero(env.N, 2);
    CHECK_THROWS_AS(gcc_phat(zero, env), std::runtime_error);
}

TEST_CASE("single-path delays recovered within a quarter sample at high snr")
{
    Scene s = default_scene(); // Ts = 5e-3, N = 100
    Rng rng(11);

    int within = 0, total = 0;
    for (int trial = 0; trial < 20; ++trial)
    {
        const CartesianPosition p{rng.uniform(-120, 120), rng.uniform(-90, -10),
                                  rng.uniform(10, 40)};
        Eigen::MatrixXcd B(1, s.array.size()); // line of sight only
        for (int l = 0; l < s.array.size(); ++l)
            B(0, l) = std::polar(1.0, rng.phase());
        SynthesisOptions opt;
        opt.snr_db = 30.0;
        const SignalRecord rec = synthesize(p, s.array, s.env, B, opt, rng);

        const RayDelaySet d = three_ray_delays(p, s.array, s.env);
        const Eigen::VectorXd t = gcc_phat(rec, s.env);
        for (int l = 1; l < s.array.size(); ++l, ++total)
        {
            const double truth = d.tau(0, l) - d.tau(0, 0);
            if (std::abs(t[l - 1] - truth) < 0.25 * s.env.Ts)
                ++within;
        }
    }
    // Monte-Carlo: allow a stray outlier bin
    CHECK(within >= total - 2);
}

TEST_CASE("tdoa multilateration residual localization")
{
    Scene s = default_scene();
    SearchVolume vol;
    vol.lo = {-150.0, -100.0, 5.0};
    vol.hi = {150.0, 0.0, 45.0};

    // exact single-path TDOAs of a grid point are reproduced
    const CartesianPosition p{45.0, -60.0, 25.0};
    const RayDelaySet d = three_ray_delays(p, s.array, s.env);
    Eigen::VectorXd t(s.array.size() - 1);
    for (int l = 1; l < s.array.size(); ++l)
        t[l - 1] = d.tau(0, l) - d.tau(0, 0);

    const SearchResult r = localize_tdoa(t, s.array, s.env, vol);
    CHECK(r.objective == doctest::Approx(0.0).epsilon(1e-18));
    CHECK(distance(r.position, p) == doctest::Approx(0.0).epsilon(1e-12));

    // all-zero TDOAs still give a finite deterministic answer
    const SearchResult rz = localize_tdoa(Eigen::VectorXd::Zero(3), s.array, s.env, vol);
    CHECK(std::isfinite(rz.position.x));
    const SearchResult rz2 = localize_tdoa(Eigen::VectorXd::Zero(3), s.array, s.env, vol);
    CHECK(rz.position.x == rz2.position.x);

    ReceiverArray three;
    three.positions = {s.array.positions[0], s.array.positions[1], s.array.positions[2]};
    CHECK_THROWS_AS(localize_tdoa(Eigen::VectorXd::Zero(2), three, s.env, vol),
                    std::invalid_argument);
}

TEST_SUITE_END();
