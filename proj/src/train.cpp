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

#include "dloc/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace dloc::nn
{
    Adam::Adam(std::vector<ParamView> views, AdamParams p) : views_(std::move(views)), p_(p)
    {
        size_t total = 0;
        for (const auto &v : views_)
            total += v.n;
        m_.assign(total, 0.0);
        v_.assign(total, 0.0);
    }

    void Adam::step()
    {
        ++t_;
        const double bc1 = 1.0 - std::pow(p_.beta1, t_);
        const double bc2 = 1.0 - std::pow(p_.beta2, t_);
        size_t off = 0;
        for (const auto &view : views_)
        {
            for (size_t i = 0; i < view.n; ++i)
            {
                const double g = view.g[i];
                double &m = m_[off + i];
                double &v = v_[off + i];
                m = p_.beta1 * m + (1.0 - p_.beta1) * g;
                v = p_.beta2 * v + (1.0 - p_.beta2) * g * g;
                const double mhat = m / bc1;
                const double vhat = v / bc2;
                view.p[i] -= p_.lr * mhat / (std::sqrt(vhat) + p_.eps);
                view.g[i] = 0.0;
            }
            off += view.n;
        }
    }

    void Adam::zero_grad()
    {
        for (const auto &view : views_)
            std::fill(view.g, view.g + view.n, 0.0);
    }

    double LossTrace::first_epoch_mean(int steps_per_epoch) const
    {
        double acc = 0.0;
        int n = 0;
        for (int i = 0; i < steps_per_epoch && i < static_cast<int>(entries.size()); ++i, ++n)
            acc += entries[i].second;
        return n ? acc / n : 0.0;
    }

    double LossTrace::last_epoch_mean(int steps_per_epoch) const
    {
        double acc = 0.0;
        int n = 0;
        const int total = static_cast<int>(entries.size());
        for (int i = std::max(0, total - steps_per_epoch); i < total; ++i, ++n)
            acc += entries[i].second;
        return n ? acc / n : 0.0;
    }

    void LossTrace::to_csv(const std::string &path) const
    {
        std::ofstream out(path);
        if (!out)
            throw std::runtime_error("cannot write " + path);
        out << "step,loss\n";
        for (const auto &[s, l] : entries)
            out << s << "," << l << "\n";
    }

    LabelStats label_stats(const TrainingSet &set)
    {
        LabelStats st;
        if (set.labels.empty())
            return st;
        double acc[3] = {0, 0, 0}, acc2[3] = {0, 0, 0};
        for (const auto &s : set.labels)
        {
            const double v[3] = {s.r, s.theta, s.phi};
            for (int k = 0; k < 3; ++k)
            {
                acc[k] += v[k];
                acc2[k] += v[k] * v[k];
            }
        }
        const double n = static_cast<double>(set.labels.size());
        for (int k = 0; k < 3; ++k)
        {
            st.mean[k] = acc[k] / n;
            const double var = std::max(0.0, acc2[k] / n - st.mean[k] * st.mean[k]);
            st.stddev[k] = std::max(std::sqrt(var), 1e-6);
        }
        return st;
    }

    double label_of(const SphericalPosition &s, HeadKind kind)
    {
        switch (kind)
        {
        case HeadKind::Range:
            return s.r;
        case HeadKind::Azimuth:
            return s.theta;
        default:
            return s.phi;
        }
    }

    namespace
    {
        std::vector<size_t> shuffled_indices(size_t n, Rng &rng)
        {
            std::vector<size_t> idx(n);
            for (size_t i = 0; i < n; ++i)
                idx[i] = i;
            for (size_t i = n; i > 1; --i)
            {
                const size_t j = static_cast<size_t>(rng.uniform() * static_cast<double>(i));
                std::swap(idx[i - 1], idx[std::min(j, i - 1)]);
            }
            return idx;
        }

        double branch_loss(HeadKind kind, double pred, double label, InclinationLossMode mode)
        {
            switch (kind)
            {
            case HeadKind::Range:
                return loss_range(pred, label);
            case HeadKind::Azimuth:
                return loss_emce(pred, label);
            default:
                return loss_inclination(pred, label, mode);
            }
        }

        double branch_loss_grad(HeadKind kind, double pred, double label, InclinationLossMode mode)
        {
            switch (kind)
            {
            case HeadKind::Range:
                return loss_range_grad(pred, label);
            case HeadKind::Azimuth:
                return loss_emce_grad(pred, label);
            default:
                return loss_inclination_grad(pred, label, mode);
            }
        }
    } // namespace

    Branch train_branch(const TrainingSet &set, const NetConfig &cfg, HeadKind kind,
                        const TrainOptions &opt, LossTrace *trace)
    {
        if (set.size() == 0)
            throw std::invalid_argument("empty training set");

        const int kind_tag = static_cast<int>(kind);
        Rng init_rng(derive_seed(opt.seed, {0xB0, static_cast<std::uint64_t>(kind_tag)}));
        Branch br;
        br.build(cfg, kind, init_rng);

        const LabelStats st = label_stats(set);
        br.out_offset = st.mean[kind_tag];
        br.out_scale = st.stddev[kind_tag];

        std::vector<ParamView> views;
        br.collect(views);
        Adam adam(views, opt.adam);

        Rng order_rng(derive_seed(opt.seed, {0xE0, static_cast<std::uint64_t>(kind_tag)}));
        Rng drop_rng(derive_seed(opt.seed, {0xD0, static_cast<std::uint64_t>(kind_tag)}));

        Tape tape;
        int step = 0;
        for (int epoch = 0; epoch < opt.epochs; ++epoch)
        {
            const auto idx = shuffled_indices(set.size(), order_rng);
            for (size_t pos = 0; pos < idx.size(); pos += opt.batch)
            {
                const size_t take = std::min<size_t>(opt.batch, idx.size() - pos);
                std::vector<const SosTensor *> batch(take);
                std::vector<double> labels(take);
                for (size_t i = 0; i < take; ++i)
                {
                    batch[i] = &set.inputs[idx[pos + i]];
                    labels[i] = label_of(set.labels[idx[pos + i]], kind);
                }

                const Tensor4 x = sos_batch_to_input(batch);
                const std::vector<double> pred = br.forward(x, RunMode::Train, &drop_rng, tape);

                double mean_loss = 0.0;
                std::vector<double> gpred(take);
                for (size_t i = 0; i < take; ++i)
                {
                    mean_loss += branch_loss(kind, pred[i], labels[i], opt.incl_mode);
                    gpred[i] = branch_loss_grad(kind, pred[i], labels[i], opt.incl_mode) /
                               static_cast<double>(take);
                }
                mean_loss /= static_cast<double>(take);
                if (!std::isfinite(mean_loss))
                    throw std::runtime_error("training diverged: non-finite loss at step " +
                                             std::to_string(step));

                br.backward(tape, gpred);
                adam.step();
                if (trace)
                    trace->entries.emplace_back(step, mean_loss);
                ++step;
            }
        }
        return br;
    }

    void train_joint(JointModel &model, const TrainingSet &set, const TrainOptions &opt,
                     LossTrace *trace)
    {
        if (set.size() == 0)
            throw std::invalid_argument("empty training set");

        std::vector<ParamView> views;
        model.collect(views);
        Adam adam(views, opt.adam);

        Rng order_rng(derive_seed(opt.seed, {0xE0, 3}));
        Rng drop_rng(derive_seed(opt.seed, {0xD0, 3}));

        JointModel::JointTape tape;
        int step = 0;
        for (int epoch = 0; epoch < opt.epochs; ++epoch)
        {
            const auto idx = shuffled_indices(set.size(), order_rng);
            for (size_t pos = 0; pos < idx.size(); pos += opt.batch)
            {
                const size_t take = std::min<size_t>(opt.batch, idx.size() - pos);
                std::vector<const SosTensor *> batch(take);
                std::vector<SphericalPosition> labels(take);
                for (size_t i = 0; i < take; ++i)
                {
                    batch[i] = &set.inputs[idx[pos + i]];
                    labels[i] = set.labels[idx[pos + i]];
                }

                const Tensor4 x = sos_batch_to_input(batch);
                const auto pred = model.forward(x, RunMode::Train, &drop_rng, tape);

                double mean_loss = 0.0;
                std::vector<std::array<double, 3>> gpred(take);
                for (size_t i = 0; i < take; ++i)
                {
                    mean_loss += loss_spherical(pred[i], labels[i]);
                    double g[3];
                    loss_spherical_grad(pred[i], labels[i], g);
                    for (int k = 0; k < 3; ++k)
                        gpred[i][k] = g[k] / static_cast<double>(take);
                }
                mean_loss /= static_cast<double>(take);
                if (!std::isfinite(mean_loss))
                    throw std::runtime_error("training diverged: non-finite loss at step " +
                                             std::to_string(step));

                model.backward(tape, gpred);
                adam.step();
                if (trace)
                    trace->entries.emplace_back(step, mean_loss);
                ++step;
            }
        }
    }

    double eval_joint_loss(JointModel &model, const TrainingSet &set)
    {
        if (set.size() == 0)
            return 0.0;
        JointModel::JointTape tape;
        double acc = 0.0;
        for (size_t i = 0; i < set.size(); ++i)
        {
            const Tensor4 x = sos_to_input(set.inputs[i]);
            const auto pred = model.forward(x, RunMode::Eval, nullptr, tape);
            acc += loss_spherical(pred[0], set.labels[i]);
        }
        return acc / static_cast<double>(set.size());
    }

    std::vector<CartesianPosition> predict_joint(const JointModel &model,
                                                 const std::vector<SosTensor> &inputs)
    {
        JointModel::JointTape tape;
        std::vector<CartesianPosition> out;
        out.reserve(inputs.size());
        for (const auto &t : inputs)
        {
            const Tensor4 x = sos_to_input(t);
            const auto pred = model.forward(x, RunMode::Eval, nullptr, tape);
            out.push_back(sph_to_cart(pred[0]));
        }
        return out;
    }

} // namespace dloc::nn
