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

#ifndef DLOC_PROPAGATION_HPP
#define DLOC_PROPAGATION_HPP

#include <Eigen/Dense>
#include <complex>
#include <cstdio>
#include <optional>
#include <string>

#include "dloc/geometry.hpp"
#include "dloc/rng.hpp"

namespace dloc
{
    // Propagation delays tau(r, l) in seconds for R ray paths to L receivers.
    // For the three-ray model the rows are: 0 line-of-sight, 1 surface
    // reflection, 2 bottom reflection; the line-of-sight delay is the
    // shortest in every column.
    struct RayDelaySet
    {
        Eigen::MatrixXd tau; // R x L

        int rays() const { return static_cast<int>(tau.rows()); }
        int receivers() const { return static_cast<int>(tau.cols()); }
    };

    // Isovelocity three-ray delays by the image method: the surface image
    // negates the source depth, the bottom image reflects it about z = h.
    // Throws if the source lies outside the open water column (0, h).
    RayDelaySet three_ray_delays(const CartesianPosition &p, const ReceiverArray &arr,
                                 const Environment &env);

    // Steering matrix for one receiver: N x R with entry
    //   (k, r) = exp(-i * w_k * tau_r),   w_k = 2*pi*k / (N*Ts),  k = 0..N-1.
    // All entries have unit modulus and row k = 0 is all ones.
    Eigen::MatrixXcd steering_matrix(const Eigen::VectorXd &delays, const Environment &env);

    // Same, writing into a caller-provided N x R buffer. Uses a phase
    // recurrence with periodic exact resynchronization; the hot path of the
    // grid-search estimators.
    void steering_matrix_into(const Eigen::VectorXd &delays, const Environment &env,
                              Eigen::MatrixXcd &out);

    // Channel spectrum of one receiver: hbar[k] = sum_r b_r * exp(-i w_k tau_r),
    // i.e. the product of the steering matrix with the attenuation column.
    Eigen::VectorXcd channel_spectrum(const Eigen::MatrixXcd &steering, const Eigen::VectorXcd &b);

    // Attenuation coefficients b(r, l): a random-phase mean of magnitude
    // sqrt(0.99) plus a circular complex-normal fluctuation of variance 0.01,
    // so E[|b|^2] = 1 and the fluctuation variance is 0.1^2.
    Eigen::MatrixXcd sample_attenuations(int R, int L, Rng &rng);

    // Test seam: one coefficient split into its random-phase mean part and
    // the fluctuation around it.
    void sample_attenuation_parts(Rng &rng, std::complex<double> &mean_part,
                                  std::complex<double> &fluctuation);

    // Sequential reader for recorded-noise files: raw interleaved
    // little-endian complex float64 samples (re, im, re, im, ...).
    class NoiseFileReader
    {
    public:
        explicit NoiseFileReader(const std::string &path);
        ~NoiseFileReader();
        NoiseFileReader(const NoiseFileReader &) = delete;
        NoiseFileReader &operator=(const NoiseFileReader &) = delete;

        // Next `count` complex samples; throws std::runtime_error if the file
        // is exhausted.
        Eigen::VectorXcd take(Eigen::Index count);

        // Reposition to an absolute complex-sample index (for deterministic
        // per-trial block assignment when trials run in parallel).
        void seek(std::uint64_t complex_index);

        std::uint64_t total_samples() const { return total_; }

    private:
        std::FILE *f_ = nullptr;
        std::uint64_t total_ = 0;
    };

    // One synthesized or ingested observation: L receiver signals of N
    // time-domain samples plus the ground-truth source position. The truth
    // block (attenuations, delays actually used, source spectrum, noise
    // variance) is present only for synthesized records; oracle estimators
    // require it.
    struct SignalRecord
    {
        Eigen::MatrixXcd samples; // N x L, receiver per column
        CartesianPosition label;

        struct Truth
        {
            Eigen::MatrixXcd attenuation;   // R x L
            RayDelaySet delays;             // delays the synthesis actually used
            Eigen::VectorXcd source_spectrum;
            double noise_var = 0.0;
        };
        std::optional<Truth> truth;

        int receivers() const { return static_cast<int>(samples.cols()); }
        int samples_per_receiver() const { return static_cast<int>(samples.rows()); }
    };

    struct SynthesisOptions
    {
        double snr_db = 0.0;               // SNR = 1 / sigma_v^2
        bool dynamic_surface = false;      // perturb the surface-path delays
        std::optional<double> perturb_sigma; // override for the perturbation std dev
        NoiseFileReader *noise_file = nullptr; // nullptr = white complex-normal noise
    };

    // Perturbs the surface-reflection delays (row 1) with iid zero-mean
    // Gaussian offsets whose standard deviation is 1% of the mean
    // source-receiver distance divided by c (unless overridden). Rows 0 and 2
    // are untouched; a perturbed delay never drops below the line-of-sight
    // delay of its column.
    RayDelaySet perturb_surface_delays(const RayDelaySet &d, const CartesianPosition &p,
                                       const ReceiverArray &arr, const Environment &env, Rng &rng,
                                       std::optional<double> sigma_override = std::nullopt);

    // Synthesizes one record. Draw order with the given generator is fixed:
    // source spectrum, then noise, then (only if enabled) the surface
    // perturbations, so static and dynamic variants driven by the same seed
    // share identical signal and noise realizations.
    //
    // Frequency-domain model per receiver: xbar[k] = sbar[k]*hbar[k] + vbar[k]
    // with sbar iid standard complex normal, sigma_v^2 = 10^(-snr_db/10);
    // time samples are the unitary inverse DFT.
    SignalRecord synthesize(const CartesianPosition &p, const ReceiverArray &arr,
                            const Environment &env, const Eigen::MatrixXcd &B,
                            const SynthesisOptions &opt, Rng &rng);

} // namespace dloc

#endif
