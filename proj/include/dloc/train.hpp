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

#ifndef DLOC_TRAIN_HPP
#define DLOC_TRAIN_HPP

#include <string>
#include <vector>

#include "dloc/nn.hpp"

namespace dloc::nn
{
    // Adam optimizer over the collected parameter views of one model.
    struct AdamParams
    {
        double lr = 3e-3;
        double beta1 = 0.9;
        double beta2 = 0.999;
        double eps = 1e-8;
    };

    class Adam
    {
    public:
        Adam(std::vector<ParamView> views, AdamParams p);

        // applies one update from the accumulated gradients, then zeroes them
        void step();
        void zero_grad();
        int steps_taken() const { return t_; }

    private:
        std::vector<ParamView> views_;
        AdamParams p_;
        std::vector<double> m_, v_;
        int t_ = 0;
    };

    struct TrainOptions
    {
        int epochs = 25;
        int batch = 64;
        AdamParams adam;
        std::uint64_t seed = 1;
        InclinationLossMode incl_mode = InclinationLossMode::ArgumentScaled;
    };

    // (step, mean batch loss) pairs, one per optimizer step.
    struct LossTrace
    {
        std::vector<std::pair<int, double>> entries;

        double first_epoch_mean(int steps_per_epoch) const;
        double last_epoch_mean(int steps_per_epoch) const;
        void to_csv(const std::string &path) const;
    };

    // In-memory training set: one SOS tensor per record plus spherical labels.
    struct TrainingSet
    {
        std::vector<SosTensor> inputs;
        std::vector<SphericalPosition> labels;
        int L = 0, N = 0;

        size_t size() const { return inputs.size(); }
    };

    struct LabelStats
    {
        double mean[3] = {0.0, 0.0, 0.0};
        double stddev[3] = {1.0, 1.0, 1.0};
    };

    LabelStats label_stats(const TrainingSet &set);

    double label_of(const SphericalPosition &s, HeadKind kind);

    // Phase 1: trains one single-coordinate model under its per-coordinate
    // loss (squared error for range, cyclic loss for the angles).
    Branch train_branch(const TrainingSet &set, const NetConfig &cfg, HeadKind kind,
                        const TrainOptions &opt, LossTrace *trace = nullptr);

    // Phase 2: fine-tunes the combined model under the spherical loss,
    // starting from the assembled pass-through initialization.
    void train_joint(JointModel &model, const TrainingSet &set, const TrainOptions &opt,
                     LossTrace *trace = nullptr);

    // Mean spherical loss of a model over a set (eval mode).
    double eval_joint_loss(JointModel &model, const TrainingSet &set);

    // Cartesian predictions of the combined model (eval mode).
    std::vector<CartesianPosition> predict_joint(const JointModel &model,
                                                 const std::vector<SosTensor> &inputs);

} // namespace dloc::nn

#endif
