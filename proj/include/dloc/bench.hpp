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

#ifndef DLOC_BENCH_HPP
#define DLOC_BENCH_HPP

#include <optional>
#include <string>
#include <vector>

#include "dloc/dataset.hpp"
#include "dloc/estimators.hpp"
#include "dloc/geometry.hpp"
#include "dloc/train.hpp"

namespace dloc
{
    struct PriorBox
    {
        CartesianPosition lo{-150.0, -100.0, 5.0};
        CartesianPosition hi{150.0, 0.0, 45.0};
    };

    struct TrainSettings
    {
        int records_per_snr = 2000;
        double snr_db = 20.0;
        int epochs_phase1 = 30;
        int epochs_phase2 = 20;
        int batch = 64;
        double lr = 3e-3;
        nn::InclinationLossMode incl_mode = nn::InclinationLossMode::ArgumentScaled;
    };

    // Full benchmark description. JSON round-trips through to_json/from_json;
    // every field has a desk-scale default.
    struct ExperimentConfig
    {
        Scene scene;
        PriorBox prior;
        std::vector<double> snr_db{-10.0, 0.0, 10.0, 20.0, 30.0};
        int trials = 100;
        bool dynamic_surface = false;
        std::string noise_file;                         // empty = white noise
        std::vector<std::string> estimators{"oracle-mfp", "sbl", "gcc-phat"};
        std::string checkpoint;                         // for the "cnn" estimator
        std::uint64_t seed = 1;
        SearchVolume search;
        SblOptions sbl;
        TrainSettings train;

        ExperimentConfig();

        std::string to_json() const;
        static ExperimentConfig from_json(const std::string &text);
        static ExperimentConfig load(const std::string &path);

        void validate() const;
    };

    // Seed of trial `trial` at SNR index `snr_index`; every trial is
    // reproducible in isolation.
    std::uint64_t trial_seed(std::uint64_t master, int snr_index, int trial);

    // Synthesizes the record of one (snr, trial) cell: position uniform over
    // the prior, fresh attenuations, then the signal model. `noise` may be
    // null (white noise); otherwise the trial reads its deterministically
    // assigned block of the file.
    SignalRecord make_trial_record(const ExperimentConfig &cfg, int snr_index, int trial,
                                   NoiseFileReader *noise);

    struct EstimateOutcome
    {
        CartesianPosition position;
        double objective = 0.0;
        double runtime_s = 0.0;
    };

    // Runs one named estimator ("oracle-mfp" | "sbl" | "gcc-phat" | "cnn").
    // The cnn path builds the SOS tensor, evaluates the combined model and
    // converts to Cartesian. Throws std::invalid_argument for unknown names,
    // std::runtime_error for missing prerequisites (truth block, checkpoint).
    EstimateOutcome run_estimator(const std::string &name, const SignalRecord &rec,
                                  const ExperimentConfig &cfg, const nn::JointModel *model);

    struct SweepCell
    {
        std::string estimator;
        double snr_db = 0.0;
        double rmse_m = 0.0;
        int trials = 0;
        double mean_runtime_s = 0.0;
        std::vector<double> errors; // per-trial Euclidean errors, trial order
    };

    // Monte-Carlo sweep over the configured SNR grid. Trials are independent
    // jobs distributed over `threads` workers; results land in preassigned
    // slots and are reduced in (snr, trial) order, so the output is identical
    // to a serial run.
    std::vector<SweepCell> run_sweep(const ExperimentConfig &cfg, int threads = 1);

    // CSV with header estimator,snr_db,rmse_m,trials,mean_runtime_s.
    void write_sweep_csv(const std::vector<SweepCell> &cells, const std::string &path);
    // Per-trial error log: estimator,snr_db,trial,error_m.
    void write_trial_csv(const std::vector<SweepCell> &cells, const std::string &path);
    // Standalone SVG of RMSE-vs-SNR curves (log-scaled RMSE axis).
    void write_sweep_svg(const std::vector<SweepCell> &cells, const std::string &path);

    // Recomputes an RMSE from logged per-trial errors (reduction in trial
    // order); used to cross-check the sweep's own aggregation.
    double rmse_of(const std::vector<double> &errors);

    // One-sided paired t statistic for mean(a - b) > 0.
    double paired_t_statistic(const std::vector<double> &a, const std::vector<double> &b);

    // RMSE of the constant predictor that always answers the prior-box
    // centroid, over the labels of a record set.
    double centroid_predictor_rmse(const PriorBox &prior, const std::vector<StoredRecord> &records);

    // Writes records_per_snr records per configured SNR level.
    void generate_dataset(const ExperimentConfig &cfg, int records_per_snr,
                          const std::string &path);

    struct TrainArtifacts
    {
        std::string branch_r, branch_theta, branch_phi;
        std::string joint;
        std::string trace_r, trace_theta, trace_phi, trace_joint;
    };

    // Two-phase training pipeline over a dataset file: three single-coordinate
    // models, assembly, joint fine-tuning; checkpoints and loss traces are
    // written under out_prefix.
    TrainArtifacts train_pipeline(const ExperimentConfig &cfg, const std::string &dataset_path,
                                  const std::string &out_prefix);

    // Builds the training set (SOS tensors + spherical labels) from records.
    nn::TrainingSet make_training_set(const std::vector<StoredRecord> &records);

} // namespace dloc

#endif
