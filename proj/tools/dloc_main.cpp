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

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "dloc/bench.hpp"

namespace
{
    struct CommonFlags
    {
        std::string config;
        std::optional<std::uint64_t> seed;
        std::optional<int> trials;
        std::vector<double> snr;
        bool dynamic = false;
        std::string noise_file;
        std::string estimators;
        std::string checkpoint;
    };

    dloc::ExperimentConfig resolve_config(const CommonFlags &f)
    {
        dloc::ExperimentConfig cfg =
            f.config.empty() ? dloc::ExperimentConfig{} : dloc::ExperimentConfig::load(f.config);
        if (f.seed)
            cfg.seed = *f.seed;
        if (f.trials)
            cfg.trials = *f.trials;
        if (!f.snr.empty())
            cfg.snr_db = f.snr;
        if (f.dynamic)
            cfg.dynamic_surface = true;
        if (!f.noise_file.empty())
            cfg.noise_file = f.noise_file;
        if (!f.checkpoint.empty())
            cfg.checkpoint = f.checkpoint;
        if (!f.estimators.empty())
        {
            cfg.estimators.clear();
            std::string cur;
            for (char c : f.estimators + ",")
            {
                if (c == ',')
                {
                    if (!cur.empty())
                        cfg.estimators.push_back(cur);
                    cur.clear();
                }
                else
                    cur += c;
            }
        }
        cfg.validate();
        return cfg;
    }

    void add_common(CLI::App *app, CommonFlags &f)
    {
        app->add_option("--config", f.config, "experiment config JSON");
        app->add_option("--seed", f.seed, "master seed");
        app->add_option("--trials", f.trials, "trials per SNR");
        app->add_option("--snr", f.snr, "SNR grid in dB (comma separated)")->delimiter(',');
        app->add_flag("--dynamic", f.dynamic, "perturbed-surface record variant");
        app->add_option("--noise-file", f.noise_file, "recorded-noise file (raw complex float64)");
        app->add_option("--estimators", f.estimators, "comma-separated estimator list");
        app->add_option("--checkpoint", f.checkpoint, "model checkpoint for the cnn estimator");
    }
} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"direct localization of underwater acoustic sources"};
    app.require_subcommand(1);

    CommonFlags gen_f, est_f, train_f, sweep_f;

    // generate
    auto *gen = app.add_subcommand("generate", "synthesize a labeled record dataset");
    std::string gen_out = "dataset.dlc";
    int gen_records = 100;
    add_common(gen, gen_f);
    gen->add_option("--out", gen_out, "output dataset path");
    gen->add_option("--records-per-snr", gen_records, "records per SNR level");

    // estimate
    auto *est = app.add_subcommand("estimate", "run one estimator on one record");
    std::string est_name = "sbl", est_dataset;
    std::uint64_t est_index = 0;
    bool est_synth = false;
    double est_snr = 20.0;
    add_common(est, est_f);
    est->add_option("--estimator", est_name, "oracle-mfp | sbl | gcc-phat | cnn");
    est->add_option("--dataset", est_dataset, "dataset file to read the record from");
    est->add_option("--index", est_index, "record index in the dataset");
    est->add_flag("--synth", est_synth, "synthesize a fresh record instead of reading one");
    est->add_option("--record-snr", est_snr, "SNR for --synth");

    // train
    auto *trn = app.add_subcommand("train", "two-phase training on a dataset");
    std::string trn_dataset, trn_out = "model";
    add_common(trn, train_f);
    trn->add_option("--dataset", trn_dataset, "training dataset")->required();
    trn->add_option("--out", trn_out, "output prefix for checkpoints and traces");

    // sweep
    auto *swp = app.add_subcommand("sweep", "RMSE-vs-SNR Monte-Carlo benchmark");
    std::string swp_out = "sweep.csv", swp_plot, swp_trial_log;
    int swp_threads = 1;
    add_common(swp, sweep_f);
    swp->add_option("--out", swp_out, "output CSV path");
    swp->add_option("--plot", swp_plot, "optional SVG plot path");
    swp->add_option("--trial-log", swp_trial_log, "optional per-trial error CSV");
    swp->add_option("--threads", swp_threads, "worker threads");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError &e)
    {
        app.exit(e); // prints message/help
        return e.get_exit_code() == 0 ? 0 : 2;
    }

    try
    {
        if (gen->parsed())
        {
            const auto cfg = resolve_config(gen_f);
            dloc::generate_dataset(cfg, gen_records, gen_out);
            const auto hdr = dloc::read_dataset_header(gen_out);
            std::cout << "wrote " << hdr.count << " records to " << gen_out << "\n";
        }
        else if (est->parsed())
        {
            const auto cfg = resolve_config(est_f);
            dloc::SignalRecord rec;
            if (est_synth)
            {
                dloc::ExperimentConfig one = cfg;
                one.snr_db = {est_snr};
                one.trials = 1;
                std::optional<dloc::NoiseFileReader> noise;
                if (!one.noise_file.empty())
                    noise.emplace(one.noise_file);
                rec = dloc::make_trial_record(one, 0, 0, noise ? &*noise : nullptr);
            }
            else
            {
                if (est_dataset.empty())
                    throw std::invalid_argument("estimate needs --dataset or --synth");
                const auto stored = dloc::read_dataset_record(est_dataset, est_index);
                rec.samples = stored.samples;
                rec.label = stored.label;
            }

            std::optional<dloc::nn::JointModel> model;
            if (est_name == "cnn")
            {
                if (cfg.checkpoint.empty())
                    throw std::runtime_error("cnn estimator requires --checkpoint");
                model = dloc::nn::load_joint(cfg.checkpoint);
            }
            const auto out = dloc::run_estimator(est_name, rec, cfg, model ? &*model : nullptr);
            std::printf("estimator: %s\nposition: %.6f %.6f %.6f\nobjective: %.9g\nruntime_s: %.6f\n",
                        est_name.c_str(), out.position.x, out.position.y, out.position.z,
                        out.objective, out.runtime_s);
            if (est_synth)
                std::printf("truth: %.6f %.6f %.6f\nerror_m: %.6f\n", rec.label.x, rec.label.y,
                            rec.label.z, dloc::distance(out.position, rec.label));
        }
        else if (trn->parsed())
        {
            const auto cfg = resolve_config(train_f);
            const auto art = dloc::train_pipeline(cfg, trn_dataset, trn_out);
            std::cout << "checkpoints: " << art.branch_r << " " << art.branch_theta << " "
                      << art.branch_phi << " " << art.joint << "\n";
        }
        else if (swp->parsed())
        {
            const auto cfg = resolve_config(sweep_f);
            const auto cells = dloc::run_sweep(cfg, swp_threads);
            dloc::write_sweep_csv(cells, swp_out);
            if (!swp_trial_log.empty())
                dloc::write_trial_csv(cells, swp_trial_log);
            if (!swp_plot.empty())
                dloc::write_sweep_svg(cells, swp_plot);
            for (const auto &c : cells)
                std::printf("%-12s %6.1f dB  rmse %10.4f m   (%d trials, %.3f s/trial)\n",
                            c.estimator.c_str(), c.snr_db, c.rmse_m, c.trials, c.mean_runtime_s);
        }
    }
    catch (const std::invalid_argument &e)
    {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    }
    catch (const std::exception &e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
