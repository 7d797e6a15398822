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

#ifndef DLOC_NN_HPP
#define DLOC_NN_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "dloc/geometry.hpp"
#include "dloc/rng.hpp"
#include "dloc/sos.hpp"

namespace dloc::nn
{
    // Dense 4-d tensor, batch x channels x height x width, row-major.
    struct Tensor4
    {
        int n = 0, c = 0, h = 0, w = 0;
        std::vector<double> v;

        Tensor4() = default;
        Tensor4(int n_, int c_, int h_, int w_)
            : n(n_), c(c_), h(h_), w(w_),
              v(static_cast<size_t>(n_) * c_ * h_ * w_, 0.0)
        {
        }

        double &at(int i, int j, int k, int l)
        {
            return v[((static_cast<size_t>(i) * c + j) * h + k) * w + l];
        }
        double at(int i, int j, int k, int l) const
        {
            return v[((static_cast<size_t>(i) * c + j) * h + k) * w + l];
        }
        size_t size() const { return v.size(); }
    };

    // Batch of flat feature vectors, batch x dim.
    struct Tensor2
    {
        int n = 0, f = 0;
        std::vector<double> v;

        Tensor2() = default;
        Tensor2(int n_, int f_) : n(n_), f(f_), v(static_cast<size_t>(n_) * f_, 0.0) {}

        double &at(int i, int j) { return v[static_cast<size_t>(i) * f + j]; }
        double at(int i, int j) const { return v[static_cast<size_t>(i) * f + j]; }
    };

    // Mutable view of one parameter array and its gradient accumulator.
    struct ParamView
    {
        double *p = nullptr;
        double *g = nullptr;
        size_t n = 0;
    };

    // --- layers ------------------------------------------------------------
    //
    // Each layer owns its parameters and gradient buffers. forward() is pure
    // given the parameters; backward() takes the stored forward input plus
    // the upstream gradient, accumulates parameter gradients and returns the
    // input gradient.

    // Valid-padding 2-d cross-correlation convolution, stride 1.
    struct Conv2d
    {
        int cin = 0, cout = 0, kh = 0, kw = 0;
        std::vector<double> w, b, gw, gb;

        void configure(int cin_, int cout_, int kh_, int kw_);
        void init_he(Rng &rng);
        Tensor4 forward(const Tensor4 &x) const;
        Tensor4 backward(const Tensor4 &x, const Tensor4 &gout, bool need_input_grad = true);
        void collect(std::vector<ParamView> &out);
    };

    // Non-overlapping mean pooling; trailing rows/columns that do not fill a
    // window are dropped.
    struct AvgPool2d
    {
        int ph = 2, pw = 2;
        Tensor4 forward(const Tensor4 &x) const;
        Tensor4 backward(const Tensor4 &x, const Tensor4 &gout) const;
    };

    Tensor4 relu(const Tensor4 &x);
    // gradient through relu given the forward *output* (out > 0 iff in > 0)
    Tensor4 relu_backward(const Tensor4 &out, const Tensor4 &gout);
    Tensor2 relu(const Tensor2 &x);
    Tensor2 relu_backward(const Tensor2 &out, const Tensor2 &gout);

    // Inverted dropout. At train time entries are kept with probability
    // 1 - rate and scaled by 1/(1 - rate), so the expectation equals the
    // input; at eval time it is the identity. The scaled mask is produced by
    // make_mask and applied explicitly, which lets tests fix masks.
    std::vector<double> dropout_mask(size_t n, double rate, Rng &rng);
    void apply_mask(Tensor4 &x, const std::vector<double> &mask);

    struct Dense
    {
        int in = 0, out = 0;
        std::vector<double> w, b, gw, gb; // w is [out][in]

        void configure(int in_, int out_);
        void init_he(Rng &rng);
        void init_zero();
        Tensor2 forward(const Tensor2 &x) const;
        Tensor2 backward(const Tensor2 &x, const Tensor2 &gout);
        void collect(std::vector<ParamView> &out);
    };

    // --- losses ------------------------------------------------------------

    // Squared range error.
    double loss_range(double r_hat, double r);
    double loss_range_grad(double r_hat, double r); // d/dr_hat

    // Cyclic loss 2 - 2 cos(angle error); in [0, 4], zero on the true angle
    // modulo 2*pi.
    double loss_emce(double a_hat, double a);
    double loss_emce_grad(double a_hat, double a);

    enum class InclinationLossMode
    {
        ArgumentScaled, // 2 - 2 cos(2 (phi_hat - phi)): period pi
        ValueScaled     // 2 * (2 - 2 cos(phi_hat - phi))
    };

    double loss_inclination(double p_hat, double p, InclinationLossMode mode);
    double loss_inclination_grad(double p_hat, double p, InclinationLossMode mode);

    // Squared Euclidean distance between two points given in spherical
    // coordinates (law-of-cosines form):
    //   r_hat^2 + r^2 - 2 r_hat r (sin sin cos(dtheta) + cos cos).
    double loss_spherical(const SphericalPosition &hat, const SphericalPosition &truth);
    // gradient with respect to (r_hat, theta_hat, phi_hat)
    void loss_spherical_grad(const SphericalPosition &hat, const SphericalPosition &truth,
                             double grad[3]);

    // --- models ------------------------------------------------------------

    struct BlockSpec
    {
        int channels = 8;
        int kh = 3, kw = 3;
        int ph = 2, pw = 2;
    };

    struct NetConfig
    {
        int in_c = 2, in_h = 0, in_w = 0;
        std::vector<BlockSpec> blocks;
        double dropout = 0.2; // applied after each of the first blocks-1 blocks
        std::vector<int> hidden{64};

        // Feature width after the conv stack and hidden layers; throws if a
        // kernel or pooling window does not fit.
        int feature_dim() const;
        std::string to_json() const;
        static NetConfig from_json(const std::string &text);
    };

    // Desk-scale default topology for SOS input of L receivers and N samples;
    // kernels and pool windows shrink automatically when a dimension runs out.
    NetConfig default_net_config(int L, int N);

    enum class RunMode
    {
        Eval,
        Train
    };

    // Forward-pass bookkeeping for one batch.
    struct Tape
    {
        std::vector<Tensor4> conv_in;
        std::vector<Tensor4> act_out;
        std::vector<Tensor4> pool_out;
        std::vector<std::vector<double>> masks; // empty vector = no dropout on that block
        Tensor2 flat;
        std::vector<Tensor2> dense_in;
        std::vector<Tensor2> dense_out;
        Tensor2 features;
    };

    // Convolutional trunk plus hidden dense layers; emits the feature vector
    // consumed by a scalar head (single-coordinate model) or by the merge
    // layer of the combined model.
    struct BranchCore
    {
        NetConfig cfg;
        std::vector<Conv2d> convs;
        std::vector<AvgPool2d> pools;
        std::vector<Dense> hidden;

        void build(const NetConfig &cfg, Rng &rng);
        Tensor2 forward(const Tensor4 &x, RunMode mode, Rng *rng, Tape &tape) const;
        // accumulates parameter gradients; input gradients of the first conv
        // are skipped (nothing below needs them)
        void backward(const Tape &tape, const Tensor2 &gfeat);
        void collect(std::vector<ParamView> &out);
        int feature_dim() const { return cfg.feature_dim(); }
    };

    enum class HeadKind
    {
        Range,
        Azimuth,
        Inclination
    };

    // Single-coordinate model: core, scalar head, and a fixed output affine
    // (label mean/scale) so the optimizer works on normalized targets.
    struct Branch
    {
        HeadKind kind = HeadKind::Range;
        BranchCore core;
        Dense head; // feature_dim -> 1
        double out_scale = 1.0;
        double out_offset = 0.0;

        void build(const NetConfig &cfg, HeadKind kind, Rng &rng);
        // predictions for a batch (affine applied)
        std::vector<double> forward(const Tensor4 &x, RunMode mode, Rng *rng, Tape &tape) const;
        // dL/dprediction per example -> full backward
        void backward(const Tape &tape, const std::vector<double> &gpred);
        void collect(std::vector<ParamView> &out);
        size_t param_count();
    };

    // Combined model: the three cores with a fresh merge layer over the
    // concatenated features, emitting (range, azimuth, inclination).
    struct JointModel
    {
        BranchCore core_r, core_t, core_p;
        Dense merge; // 3F -> 3
        double out_scale[3] = {1.0, 1.0, 1.0};
        double out_offset[3] = {0.0, 0.0, 0.0};

        struct JointTape
        {
            Tape tr, tt, tp;
            Tensor2 concat;
        };

        std::vector<SphericalPosition> forward(const Tensor4 &x, RunMode mode, Rng *rng,
                                               JointTape &tape) const;
        void backward(const JointTape &tape, const std::vector<std::array<double, 3>> &gpred);
        void collect(std::vector<ParamView> &out);
        size_t param_count();
    };

    // Combines three trained single-coordinate models. The merge layer is
    // initialized as a pass-through of the three heads (block-diagonal
    // weights), so right after assembly the combined model reproduces the
    // individual outputs exactly.
    JointModel assemble_joint(const Branch &r, const Branch &t, const Branch &p);

    // Maps a SOS tensor into network input layout: channels = re/im, height =
    // pair rows, width = lags.
    Tensor4 sos_to_input(const SosTensor &t);
    Tensor4 sos_batch_to_input(const std::vector<const SosTensor *> &batch);

    // --- checkpoints ---------------------------------------------------------
    // Versioned binary: magic, version, model kind, config JSON echo, affine
    // constants, then every parameter as little-endian float64 in declaration
    // order. Loading restores bit-identical weights.

    void save_branch(const Branch &b, const std::string &path);
    Branch load_branch(const std::string &path);
    void save_joint(const JointModel &m, const std::string &path);
    JointModel load_joint(const std::string &path);

} // namespace dloc::nn

#endif
