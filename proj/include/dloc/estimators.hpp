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

#ifndef DLOC_ESTIMATORS_HPP
#define DLOC_ESTIMATORS_HPP

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "dloc/geometry.hpp"
#include "dloc/propagation.hpp"

namespace dloc
{
    // Unitary per-receiver spectra of a record, stacked N x L.
    Eigen::MatrixXcd record_spectra(const SignalRecord &rec);

    // Matched-field objective: sum over DFT bins of
    //   |<xbar[k], hbar[k]>|^2 / ||hbar[k]||^2,
    // where row k of each N x L argument stacks the receivers. Bins whose
    // channel response vanishes contribute zero (the limit of the summand).
    // Invariant to per-bin complex rescaling of the channel columns.
    double mfp_objective(const Eigen::MatrixXcd &xbar, const Eigen::MatrixXcd &hbar);

    // Data-dependent Hermitian PSD matrix whose largest eigenvalue is the
    // semi-blind objective:
    //   Q = sum_l Xl conj(Dl) (Dl^T conj(Dl) + eps I)^{-1} (Xl conj(Dl))^H,
    // with Xl = Diag(xbar_l) and ridge eps = 1e-10 * trace(Dl^T conj(Dl)) / R
    // guarding near-coincident ray delays. Throws when a Gram factorization
    // fails beyond what the ridge absorbs.
    Eigen::MatrixXcd build_q(const Eigen::MatrixXcd &xbar,
                             const std::vector<Eigen::MatrixXcd> &steering);

    struct PowerIterationOptions
    {
        double rel_tol = 1e-10;
        int max_iter_factor = 10; // iteration cap is factor * N
        int restarts = 3;
        std::uint64_t seed = 0x106c0dedULL; // start vector stream; fixed for determinism
    };

    // Largest eigenvalue of a Hermitian matrix by power iteration with a
    // random complex start. If the dominant-magnitude eigenvalue turns out
    // negative, a second shifted pass recovers the largest one. Throws on
    // non-convergence after the configured restarts.
    double lambda_max(const Eigen::MatrixXcd &Q, const PowerIterationOptions &opt = {});

    // Semi-blind localization objective at one hypothesized position:
    // lambda_max of build_q.
    double sbl_objective(const Eigen::MatrixXcd &xbar,
                         const std::vector<Eigen::MatrixXcd> &steering);

    // Same value through the compressed Gram route: with
    // Al = Xl conj(Dl) Ml^{-1/2}, the (R*L) x (R*L) matrix A^H A has the same
    // nonzero spectrum as Q. Solved densely; serves as the independent
    // algebraic route and as the fast path inside grid searches.
    double sbl_objective_gram(const Eigen::MatrixXcd &xbar,
                              const std::vector<Eigen::MatrixXcd> &steering);

    // Axis-aligned search box with per-axis coarse steps, plus coarse-to-fine
    // refinement parameters: each level re-grids a box scaled by `shrink`
    // around the incumbent with steps scaled the same way.
    struct SearchVolume
    {
        CartesianPosition lo;
        CartesianPosition hi;
        CartesianPosition step{15.0, 5.0, 2.0};
        int levels = 3;
        double shrink = 0.25;

        void validate() const;
    };

    struct SearchResult
    {
        CartesianPosition position;
        double objective = 0.0;
    };

    // Deterministic maximizer over the volume: full scan of the coarse grid,
    // then per-level refinement around the incumbent (which stays on every
    // refined grid). Ties broken by the lowest linear grid index, x-major.
    SearchResult grid_search(const std::function<double(const CartesianPosition &)> &objective,
                             const SearchVolume &vol);

    // Matched-field localization using the record's true attenuation
    // coefficients (requires the truth block) and model delays at every
    // candidate position.
    SearchResult localize_oracle_mfp(const SignalRecord &rec, const ReceiverArray &arr,
                                     const Environment &env, const SearchVolume &vol);

    struct SblOptions
    {
        // Hypotheses whose per-receiver steering Gram has a smallest
        // eigenvalue below rank_tol * N are treated as rank-deficient and
        // excluded from the search (0 disables the guard).
        double rank_tol = 0.0;
    };

    // Semi-blind localization by grid search over the Gram-route objective.
    SearchResult localize_sbl(const SignalRecord &rec, const ReceiverArray &arr,
                              const Environment &env, const SearchVolume &vol,
                              const SblOptions &opt = {});

    // Time differences of arrival of receivers 2..L relative to receiver 1,
    // by phase-transform cross-correlation: the cross-spectrum of each pair
    // is normalized to unit modulus per bin (bins below 1e-12 zeroed),
    // inverse-transformed, and the peak lag refined by three-point parabolic
    // interpolation. Throws on an all-zero cross-spectrum.
    Eigen::VectorXd gcc_phat(const SignalRecord &rec, const Environment &env);

    // Two-step baseline: position minimizing the squared mismatch between
    // measured TDOAs and the line-of-sight model (requires L >= 4).
    SearchResult localize_tdoa(const Eigen::VectorXd &tdoas, const ReceiverArray &arr,
                               const Environment &env, const SearchVolume &vol);

} // namespace dloc

#endif
