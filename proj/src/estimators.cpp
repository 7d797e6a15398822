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

#include "dloc/estimators.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "dloc/fft.hpp"
#include "dloc/rng.hpp"

namespace dloc
{
    Eigen::MatrixXcd record_spectra(const SignalRecord &rec)
    {
        Eigen::MatrixXcd xbar(rec.samples.rows(), rec.samples.cols());
        for (Eigen::Index l = 0; l < rec.samples.cols(); ++l)
            xbar.col(l) = dft(rec.samples.col(l));
        return xbar;
    }

    double mfp_objective(const Eigen::MatrixXcd &xbar, const Eigen::MatrixXcd &hbar)
    {
        if (xbar.rows() != hbar.rows() || xbar.cols() != hbar.cols())
            throw std::invalid_argument("mfp_objective: shape mismatch");

        double acc = 0.0;
        for (Eigen::Index k = 0; k < xbar.rows(); ++k)
        {
            std::complex<double> num(0.0, 0.0);
            double den = 0.0;
            for (Eigen::Index l = 0; l < xbar.cols(); ++l)
            {
                num += std::conj(xbar(k, l)) * hbar(k, l);
                den += std::norm(hbar(k, l));
            }
            if (den > 0.0)
                acc += std::norm(num) / den;
        }
        return acc;
    }

    namespace
    {
        // Ridge-stabilized Gram of one steering matrix: M = D^T conj(D) + eps I.
        Eigen::MatrixXcd ridged_gram(const Eigen::MatrixXcd &D, double &eps_out)
        {
            const int R = static_cast<int>(D.cols());
            Eigen::MatrixXcd M = D.transpose() * D.conjugate();
            const double eps = 1e-10 * M.trace().real() / static_cast<double>(R);
            M += eps * Eigen::MatrixXcd::Identity(R, R);
            eps_out = eps;
            return M;
        }

        // Hermitian inverse square root of a small PSD matrix.
        Eigen::MatrixXcd inv_sqrt(const Eigen::MatrixXcd &M)
        {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(M);
            if (es.info() != Eigen::Success)
                throw std::runtime_error("steering Gram eigendecomposition failed");
            Eigen::VectorXd ev = es.eigenvalues();
            for (Eigen::Index i = 0; i < ev.size(); ++i)
            {
                if (!(ev[i] > 0.0))
                    throw std::runtime_error("steering Gram rank-deficient beyond ridge tolerance");
                ev[i] = 1.0 / std::sqrt(ev[i]);
            }
            return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
        }
    } // namespace

    Eigen::MatrixXcd build_q(const Eigen::MatrixXcd &xbar,
                             const std::vector<Eigen::MatrixXcd> &steering)
    {
        const Eigen::Index N = xbar.rows();
        const Eigen::Index L = xbar.cols();
        if (static_cast<Eigen::Index>(steering.size()) != L)
            throw std::invalid_argument("build_q: one steering matrix per receiver required");

        Eigen::MatrixXcd Q = Eigen::MatrixXcd::Zero(N, N);
        for (Eigen::Index l = 0; l < L; ++l)
        {
            const Eigen::MatrixXcd &D = steering[l];
            if (D.rows() != N)
                throw std::invalid_argument("build_q: steering rows must match spectrum length");
            if (D.cols() > D.rows())
                throw std::invalid_argument("build_q: need R <= N");

            double eps = 0.0;
            const Eigen::MatrixXcd M = ridged_gram(D, eps);
            const Eigen::MatrixXcd P = xbar.col(l).asDiagonal() * D.conjugate(); // N x R
            Eigen::LDLT<Eigen::MatrixXcd> ldlt(M);
            if (ldlt.info() != Eigen::Success)
                throw std::runtime_error("build_q: Gram factorization failed (rank deficiency)");
            Q.noalias() += P * ldlt.solve(P.adjoint());
        }
        // symmetrize away rounding
        Q = 0.5 * (Q + Q.adjoint()).eval();
        return Q;
    }

    namespace
    {
        // One power-iteration run; returns the dominant-magnitude eigenvalue
        // via the Rayleigh quotient, or nullopt without convergence.
        std::optional<double> power_once(const Eigen::MatrixXcd &Q, double rel_tol, int max_iter,
                                         Rng &rng)
        {
            const Eigen::Index n = Q.rows();
            Eigen::VectorXcd v(n);
            for (Eigen::Index i = 0; i < n; ++i)
                v[i] = rng.cnormal();
            v.normalize();

            double lam = 0.0;
            bool have = false;
            Eigen::VectorXcd w(n);
            for (int it = 0; it < max_iter; ++it)
            {
                w.noalias() = Q * v;
                const double wn = w.norm();
                if (wn == 0.0)
                    return 0.0; // zero matrix (or v in the kernel of a zero map)
                const double next = std::real(v.dot(w)); // v^H Q v
                v = w / wn;
                if (have && std::abs(next - lam) <= rel_tol * std::max(std::abs(next), 1e-300))
                    return next;
                lam = next;
                have = true;
            }
            return std::nullopt;
        }

        double dominant_eigenvalue(const Eigen::MatrixXcd &Q, const PowerIterationOptions &opt)
        {
            const int max_iter = opt.max_iter_factor * static_cast<int>(Q.rows());
            Rng rng(opt.seed);
            for (int attempt = 0; attempt <= opt.restarts; ++attempt)
            {
                auto r = power_once(Q, opt.rel_tol, max_iter, rng);
                if (r)
                    return *r;
            }
            throw std::runtime_error("power iteration did not converge");
        }
    } // namespace

    double lambda_max(const Eigen::MatrixXcd &Q, const PowerIterationOptions &opt)
    {
        if (Q.rows() != Q.cols())
            throw std::invalid_argument("lambda_max: square matrix required");

        const double dom = dominant_eigenvalue(Q, opt);
        if (dom >= 0.0)
            return dom;

        // Dominant magnitude was a negative eigenvalue; shift so the largest
        // eigenvalue dominates and undo the shift.
        Eigen::MatrixXcd shifted = Q;
        shifted.diagonal().array() -= dom;
        return dominant_eigenvalue(shifted, opt) + dom;
    }

    double sbl_objective(const Eigen::MatrixXcd &xbar,
                         const std::vector<Eigen::MatrixXcd> &steering)
    {
        return lambda_max(build_q(xbar, steering));
    }

    double sbl_objective_gram(const Eigen::MatrixXcd &xbar,
                              const std::vector<Eigen::MatrixXcd> &steering)
    {
        const Eigen::Index N = xbar.rows();
        const Eigen::Index L = xbar.cols();
        if (static_cast<Eigen::Index>(steering.size()) != L)
            throw std::invalid_argument("sbl_objective_gram: one steering matrix per receiver");

        Eigen::Index total = 0;
        for (const auto &D : steering)
            total += D.cols();

        Eigen::MatrixXcd A(N, total);
        Eigen::Index off = 0;
        for (Eigen::Index l = 0; l < L; ++l)
        {
            const Eigen::MatrixXcd &D = steering[l];
            double eps = 0.0;
            const Eigen::MatrixXcd M = ridged_gram(D, eps);
            A.middleCols(off, D.cols()).noalias() =
                (xbar.col(l).asDiagonal() * D.conjugate()) * inv_sqrt(M);
            off += D.cols();
        }

        Eigen::MatrixXcd G = A.adjoint() * A;
        G = 0.5 * (G + G.adjoint()).eval();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(G);
        if (es.info() != Eigen::Success)
            throw std::runtime_error("sbl_objective_gram: eigensolver failed");
        return es.eigenvalues().maxCoeff();
    }

    void SearchVolume::validate() const
    {
        if (!(lo.x < hi.x && lo.y < hi.y && lo.z < hi.z))
            throw std::invalid_argument("search volume needs lo < hi per axis");
        if (!(step.x > 0.0 && step.y > 0.0 && step.z > 0.0))
            throw std::invalid_argument("search volume needs positive steps");
        if (levels < 0 || !(shrink > 0.0 && shrink < 1.0))
            throw std::invalid_argument("search volume needs levels >= 0 and shrink in (0,1)");
    }

    namespace
    {
        std::vector<double> axis_points(double lo, double hi, double step)
        {
            std::vector<double> pts;
            const int n = static_cast<int>(std::floor((hi - lo) / step + 1e-9)) + 1;
            pts.reserve(n);
            for (int i = 0; i < n; ++i)
                pts.push_back(lo + step * i);
            return pts;
        }

        // Refined axis: points center + j*step staying inside [lo, hi]; the
        // center itself is always a member, so refinement can only improve on
        // the incumbent.
        std::vector<double> axis_points_centered(double center, double half_span, double step,
                                                 double lo, double hi)
        {
            std::vector<double> pts;
            const int half = static_cast<int>(std::floor(half_span / step + 1e-9));
            for (int j = -half; j <= half; ++j)
            {
                const double v = center + step * j;
                if (v >= lo - 1e-12 && v <= hi + 1e-12)
                    pts.push_back(std::min(hi, std::max(lo, v)));
            }
            return pts;
        }

        SearchResult scan(const std::function<double(const CartesianPosition &)> &objective,
                          const std::vector<double> &xs, const std::vector<double> &ys,
                          const std::vector<double> &zs)
        {
            SearchResult best;
            best.objective = -std::numeric_limits<double>::infinity();
            bool first = true;
            for (double x : xs)
                for (double y : ys)
                    for (double z : zs)
                    {
                        const CartesianPosition p{x, y, z};
                        const double v = objective(p);
                        if (first || v > best.objective)
                        {
                            best = {p, v};
                            first = false;
                        }
                    }
            return best;
        }
    } // namespace

    SearchResult grid_search(const std::function<double(const CartesianPosition &)> &objective,
                             const SearchVolume &vol)
    {
        vol.validate();

        SearchResult best = scan(objective, axis_points(vol.lo.x, vol.hi.x, vol.step.x),
                                 axis_points(vol.lo.y, vol.hi.y, vol.step.y),
                                 axis_points(vol.lo.z, vol.hi.z, vol.step.z));

        double fx = 1.0;
        for (int lev = 1; lev <= vol.levels; ++lev)
        {
            fx *= vol.shrink;
            const CartesianPosition half{0.5 * fx * (vol.hi.x - vol.lo.x),
                                          0.5 * fx * (vol.hi.y - vol.lo.y),
                                          0.5 * fx * (vol.hi.z - vol.lo.z)};
            const CartesianPosition st{fx * vol.step.x, fx * vol.step.y, fx * vol.step.z};
            SearchResult cand = scan(
                objective,
                axis_points_centered(best.position.x, half.x, st.x, vol.lo.x, vol.hi.x),
                axis_points_centered(best.position.y, half.y, st.y, vol.lo.y, vol.hi.y),
                axis_points_centered(best.position.z, half.z, st.z, vol.lo.z, vol.hi.z));
            if (cand.objective > best.objective)
                best = cand;
        }
        return best;
    }

    namespace
    {
        // Shared per-record state for the matched-field grid objective.
        struct MfpEvaluator
        {
            const Eigen::MatrixXcd xbar;
            const Eigen::MatrixXcd B;
            const ReceiverArray &arr;
            const Environment &env;
            mutable Eigen::MatrixXcd D;
            mutable Eigen::MatrixXcd hbar;

            MfpEvaluator(Eigen::MatrixXcd xb, Eigen::MatrixXcd b, const ReceiverArray &a,
                         const Environment &e)
                : xbar(std::move(xb)), B(std::move(b)), arr(a), env(e),
                  hbar(xbar.rows(), xbar.cols())
            {
            }

            double operator()(const CartesianPosition &p) const
            {
                const RayDelaySet d = three_ray_delays(p, arr, env);
                for (int l = 0; l < arr.size(); ++l)
                {
                    steering_matrix_into(d.tau.col(l), env, D);
                    hbar.col(l).noalias() = D * B.col(l);
                }
                return mfp_objective(xbar, hbar);
            }
        };
    } // namespace

    SearchResult localize_oracle_mfp(const SignalRecord &rec, const ReceiverArray &arr,
                                     const Environment &env, const SearchVolume &vol)
    {
        if (!rec.truth)
            throw std::invalid_argument("oracle matched-field estimator needs the truth block");
        MfpEvaluator ev(record_spectra(rec), rec.truth->attenuation, arr, env);
        return grid_search([&ev](const CartesianPosition &p) { return ev(p); }, vol);
    }

    namespace
    {
        // Grid objective for the semi-blind estimator through the compressed
        // Gram route. Per-pair spectral cross products are precomputed once;
        // per candidate position only the steering matrices, the small Grams
        // and one (R*L) x (R*L) eigenvalue problem remain.
        struct SblEvaluator
        {
            const ReceiverArray &arr;
            const Environment &env;
            int L, R, N;
            double rank_tol;
            std::vector<Eigen::VectorXcd> cross; // c_ij = conj(xbar_i) .* xbar_j, i <= j
            mutable std::vector<Eigen::MatrixXcd> D;     // steering per receiver
            mutable std::vector<Eigen::MatrixXcd> W;     // M^{-1/2} per receiver
            mutable Eigen::MatrixXcd G;

            SblEvaluator(const Eigen::MatrixXcd &xbar, const ReceiverArray &a,
                         const Environment &e, int rays, double tol)
                : arr(a), env(e), L(static_cast<int>(xbar.cols())), R(rays), N(e.N),
                  rank_tol(tol)
            {
                cross.reserve(static_cast<size_t>(L) * (L + 1) / 2);
                for (int i = 0; i < L; ++i)
                    for (int j = i; j < L; ++j)
                        cross.push_back(xbar.col(i).conjugate().cwiseProduct(xbar.col(j)));
                D.assign(L, Eigen::MatrixXcd(N, R));
                W.assign(L, Eigen::MatrixXcd(R, R));
                G.resize(R * L, R * L);
            }

            double operator()(const CartesianPosition &p) const
            {
                const RayDelaySet dl = three_ray_delays(p, arr, env);
                for (int l = 0; l < L; ++l)
                {
                    steering_matrix_into(dl.tau.col(l), env, D[l]);
                    Eigen::MatrixXcd M = D[l].transpose() * D[l].conjugate();
                    const double eps = 1e-10 * M.trace().real() / static_cast<double>(R);
                    M += eps * Eigen::MatrixXcd::Identity(R, R);
                    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(M);
                    if (es.info() != Eigen::Success)
                        throw std::runtime_error("semi-blind grid: Gram eigensolver failed");
                    if (rank_tol > 0.0 && es.eigenvalues()(0) < rank_tol * N)
                        return -std::numeric_limits<double>::infinity();
                    Eigen::VectorXd ev = es.eigenvalues();
                    for (int r = 0; r < R; ++r)
                        ev[r] = 1.0 / std::sqrt(std::max(ev[r], 1e-300));
                    W[l].noalias() = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
                }

                int idx = 0;
                for (int i = 0; i < L; ++i)
                    for (int j = i; j < L; ++j, ++idx)
                    {
                        // block (i, j) of A^H A: W_i (D_i^T Diag(c_ij) conj(D_j)) W_j
                        Eigen::MatrixXcd P = D[i].transpose() * cross[idx].asDiagonal() * D[j].conjugate();
                        Eigen::MatrixXcd blk = W[i] * P * W[j];
                        G.block(i * R, j * R, R, R) = blk;
                        if (i != j)
                            G.block(j * R, i * R, R, R) = blk.adjoint();
                    }

                Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (G + G.adjoint()));
                if (es.info() != Eigen::Success)
                    throw std::runtime_error("semi-blind grid: objective eigensolver failed");
                return es.eigenvalues().maxCoeff();
            }
        };
    } // namespace

    SearchResult localize_sbl(const SignalRecord &rec, const ReceiverArray &arr,
                              const Environment &env, const SearchVolume &vol,
                              const SblOptions &opt)
    {
        SblEvaluator ev(record_spectra(rec), arr, env, 3, opt.rank_tol);
        return grid_search([&ev](const CartesianPosition &p) { return ev(p); }, vol);
    }

    Eigen::VectorXd gcc_phat(const SignalRecord &rec, const Environment &env)
    {
        const int L = rec.receivers();
        const int N = rec.samples_per_receiver();
        if (L < 2)
            throw std::invalid_argument("gcc_phat needs at least two receivers");

        const Eigen::MatrixXcd xbar = record_spectra(rec);
        Eigen::VectorXd tdoas(L - 1);

        for (int l = 1; l < L; ++l)
        {
            Eigen::VectorXcd S = xbar.col(l).cwiseProduct(xbar.col(0).conjugate());
            bool any = false;
            for (int k = 0; k < N; ++k)
            {
                const double m = std::abs(S[k]);
                if (m < 1e-12)
                    S[k] = 0.0;
                else
                {
                    S[k] /= m;
                    any = true;
                }
            }
            if (!any)
                throw std::runtime_error("gcc_phat: degenerate all-zero cross-spectrum");

            const Eigen::VectorXcd r = idft(S);
            int peak = 0;
            double pv = -1.0;
            for (int n = 0; n < N; ++n)
            {
                const double m = std::abs(r[n]);
                if (m > pv)
                {
                    pv = m;
                    peak = n;
                }
            }
            const double y0 = std::abs(r[(peak - 1 + N) % N]);
            const double y1 = std::abs(r[peak]);
            const double y2 = std::abs(r[(peak + 1) % N]);
            const double den = y0 - 2.0 * y1 + y2;
            double delta = 0.0;
            if (std::abs(den) > 1e-300)
                delta = std::min(0.5, std::max(-0.5, 0.5 * (y0 - y2) / den));

            const double lag = (peak <= N / 2 ? peak : peak - N) + delta;
            tdoas[l - 1] = lag * env.Ts;
        }
        return tdoas;
    }

    SearchResult localize_tdoa(const Eigen::VectorXd &tdoas, const ReceiverArray &arr,
                               const Environment &env, const SearchVolume &vol)
    {
        const int L = arr.size();
        if (L < 4)
            throw std::invalid_argument("3-D TDOA localization needs at least four receivers");
        if (tdoas.size() != L - 1)
            throw std::invalid_argument("expected one TDOA per receiver beyond the first");

        auto objective = [&](const CartesianPosition &p) {
            const double d0 = distance(p, arr.positions[0]);
            double cost = 0.0;
            for (int l = 1; l < L; ++l)
            {
                const double model = (distance(p, arr.positions[l]) - d0) / env.c;
                const double e = tdoas[l - 1] - model;
                cost += e * e;
            }
            return -cost;
        };
        return grid_search(objective, vol);
    }

} // namespace dloc
