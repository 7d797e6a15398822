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

#include "dloc/bench.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

namespace dloc
{
    ExperimentConfig::ExperimentConfig()
    {
        scene = default_scene();
        search.lo = prior.lo;
        search.hi = prior.hi;
        search.step = {15.0, 5.0, 2.0};
        search.levels = 3;
        search.shrink = 0.25;
    }

    void ExperimentConfig::validate() const
    {
        scene.validate();
        if (trials < 1)
            throw std::invalid_argument("config: trials must be >= 1");
        if (snr_db.empty())
            throw std::invalid_argument("config: SNR list must be nonempty");
        if (!(prior.lo.x < prior.hi.x && prior.lo.y < prior.hi.y && prior.lo.z < prior.hi.z))
            throw std::invalid_argument("config: prior box needs lo < hi per axis");
        if (!(prior.lo.z > 0.0) || !(prior.hi.z < scene.env.h))
            throw std::invalid_argument("config: prior box must lie inside the water column");
        search.validate();
    }

    namespace
    {
        nlohmann::json vec3_json(const CartesianPosition &p)
        {
            return nlohmann::json::array({p.x, p.y, p.z});
        }

        CartesianPosition vec3_from(const nlohmann::json &j)
        {
            return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
        }
    } // namespace

    std::string ExperimentConfig::to_json() const
    {
        nlohmann::json j;
        j["scene"]["c"] = scene.env.c;
        j["scene"]["h"] = scene.env.h;
        j["scene"]["Ts"] = scene.env.Ts;
        j["scene"]["N"] = scene.env.N;
        j["scene"]["receivers"] = nlohmann::json::array();
        for (const auto &q : scene.array.positions)
            j["scene"]["receivers"].push_back(vec3_json(q));
        j["prior"]["lo"] = vec3_json(prior.lo);
        j["prior"]["hi"] = vec3_json(prior.hi);
        j["snr_db"] = snr_db;
        j["trials"] = trials;
        j["dynamic_surface"] = dynamic_surface;
        j["noise_file"] = noise_file;
        j["estimators"] = estimators;
        j["checkpoint"] = checkpoint;
        j["seed"] = seed;
        j["search"]["lo"] = vec3_json(search.lo);
        j["search"]["hi"] = vec3_json(search.hi);
        j["search"]["step"] = vec3_json(search.step);
        j["search"]["levels"] = search.levels;
        j["search"]["shrink"] = search.shrink;
        j["sbl"]["rank_tol"] = sbl.rank_tol;
        j["train"]["records_per_snr"] = train.records_per_snr;
        j["train"]["snr_db"] = train.snr_db;
        j["train"]["epochs_phase1"] = train.epochs_phase1;
        j["train"]["epochs_phase2"] = train.epochs_phase2;
        j["train"]["batch"] = train.batch;
        j["train"]["lr"] = train.lr;
        j["train"]["inclination_loss"] =
            train.incl_mode == nn::InclinationLossMode::ArgumentScaled ? "argument" : "value";
        return j.dump(2);
    }

    ExperimentConfig ExperimentConfig::from_json(const std::string &text)
    {
        nlohmann::json j = nlohmann::json::parse(text);
        ExperimentConfig c;
        if (j.contains("scene"))
        {
            const auto &s = j["scene"];
            c.scene.env.c = s.value("c", c.scene.env.c);
            c.scene.env.h = s.value("h", c.scene.env.h);
            c.scene.env.Ts = s.value("Ts", c.scene.env.Ts);
            c.scene.env.N = s.value("N", c.scene.env.N);
            if (s.contains("receivers"))
            {
                c.scene.array.positions.clear();
                for (const auto &r : s["receivers"])
                    c.scene.array.positions.push_back(vec3_from(r));
            }
        }
        if (j.contains("prior"))
        {
            c.prior.lo = vec3_from(j["prior"]["lo"]);
            c.prior.hi = vec3_from(j["prior"]["hi"]);
            c.search.lo = c.prior.lo;
            c.search.hi = c.prior.hi;
        }
        if (j.contains("snr_db"))
            c.snr_db = j["snr_db"].get<std::vector<double>>();
        c.trials = j.value("trials", c.trials);
        c.dynamic_surface = j.value("dynamic_surface", c.dynamic_surface);
        c.noise_file = j.value("noise_file", c.noise_file);
        if (j.contains("estimators"))
            c.estimators = j["estimators"].get<std::vector<std::string>>();
        c.checkpoint = j.value("checkpoint", c.checkpoint);
        c.seed = j.value("seed", c.seed);
        if (j.contains("search"))
        {
            const auto &s = j["search"];
            if (s.contains("lo"))
                c.search.lo = vec3_from(s["lo"]);
            if (s.contains("hi"))
                c.search.hi = vec3_from(s["hi"]);
            if (s.contains("step"))
                c.search.step = vec3_from(s["step"]);
            c.search.levels = s.value("levels", c.search.levels);
            c.search.shrink = s.value("shrink", c.search.shrink);
        }
        if (j.contains("sbl"))
            c.sbl.rank_tol = j["sbl"].value("rank_tol", c.sbl.rank_tol);
        if (j.contains("train"))
        {
            const auto &t = j["train"];
            c.train.records_per_snr = t.value("records_per_snr", c.train.records_per_snr);
            c.train.snr_db = t.value("snr_db", c.train.snr_db);
            c.train.epochs_phase1 = t.value("epochs_phase1", c.train.epochs_phase1);
            c.train.epochs_phase2 = t.value("epochs_phase2", c.train.epochs_phase2);
            c.train.batch = t.value("batch", c.train.batch);
            c.train.lr = t.value("lr", c.train.lr);
            const std::string m = t.value("inclination_loss", std::string("argument"));
            c.train.incl_mode = m == "value" ? nn::InclinationLossMode::ValueScaled
                                             : nn::InclinationLossMode::ArgumentScaled;
        }
        c.validate();
        return c;
    }

    ExperimentConfig ExperimentConfig::load(const std::string &path)
    {
        std::ifstream in(path);
        if (!in)
            throw std::runtime_error("cannot open config: " + path);
        std::stringstream ss;
        ss << in.rdbuf();
        return from_json(ss.str());
    }

    std::uint64_t trial_seed(std::uint64_t master, int snr_index, int trial)
    {
        return derive_seed(master, {static_cast<std::uint64_t>(snr_index),
                                    static_cast<std::uint64_t>(trial)});
    }

    SignalRecord make_trial_record(const ExperimentConfig &cfg, int snr_index, int trial,
                                   NoiseFileReader *noise)
    {
        Rng rng(trial_seed(cfg.seed, snr_index, trial));
        CartesianPosition p;
        p.x = rng.uniform(cfg.prior.lo.x, cfg.prior.hi.x);
        p.y = rng.uniform(cfg.prior.lo.y, cfg.prior.hi.y);
        p.z = rng.uniform(cfg.prior.lo.z, cfg.prior.hi.z);

        const Eigen::MatrixXcd B = sample_attenuations(3, cfg.scene.array.size(), rng);

        SynthesisOptions opt;
        opt.snr_db = cfg.snr_db[snr_index];
        opt.dynamic_surface = cfg.dynamic_surface;
        if (noise)
        {
            const std::uint64_t ordinal =
                static_cast<std::uint64_t>(snr_index) * cfg.trials + trial;
            noise->seek(ordinal * static_cast<std::uint64_t>(cfg.scene.array.size()) *
                        cfg.scene.env.N);
            opt.noise_file = noise;
        }
        return synthesize(p, cfg.scene.array, cfg.scene.env, B, opt, rng);
    }

    EstimateOutcome run_estimator(const std::string &name, const SignalRecord &rec,
                                  const ExperimentConfig &cfg, const nn::JointModel *model)
    {
        const auto t0 = std::chrono::steady_clock::now();
        EstimateOutcome out;

        if (name == "oracle-mfp")
        {
            const SearchResult r = localize_oracle_mfp(rec, cfg.scene.array, cfg.scene.env, cfg.search);
            out.position = r.position;
            out.objective = r.objective;
        }
        else if (name == "sbl")
        {
            const SearchResult r = localize_sbl(rec, cfg.scene.array, cfg.scene.env, cfg.search, cfg.sbl);
            out.position = r.position;
            out.objective = r.objective;
        }
        else if (name == "gcc-phat")
        {
            const Eigen::VectorXd t = gcc_phat(rec, cfg.scene.env);
            const SearchResult r = localize_tdoa(t, cfg.scene.array, cfg.scene.env, cfg.search);
            out.position = r.position;
            out.objective = r.objective;
        }
        else if (name == "cnn")
        {
            if (!model)
                throw std::runtime_error("cnn estimator needs a loaded checkpoint");
            const SosTensor sos = build_sos(rec);
            nn::JointModel::JointTape tape;
            const auto pred =
                model->forward(nn::sos_to_input(sos), nn::RunMode::Eval, nullptr, tape);
            out.position = sph_to_cart(pred[0]);
            out.objective = 0.0;
        }
        else
        {
            throw std::invalid_argument("unknown estimator: " + name);
        }

        out.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return out;
    }

    std::vector<SweepCell> run_sweep(const ExperimentConfig &cfg, int threads)
    {
        cfg.validate();
        const int S = static_cast<int>(cfg.snr_db.size());
        const int E = static_cast<int>(cfg.estimators.size());
        const int T = cfg.trials;

        std::optional<nn::JointModel> model;
        for (const auto &e : cfg.estimators)
            if (e == "cnn")
            {
                if (cfg.checkpoint.empty())
                    throw std::runtime_error("cnn estimator requires a checkpoint path");
                model = nn::load_joint(cfg.checkpoint);
            }

        // err[e][s][t], runtime[e][s][t] filled by preassigned slot
        std::vector<std::vector<std::vector<double>>> err(
            E, std::vector<std::vector<double>>(S, std::vector<double>(T, 0.0)));
        auto rt = err;

        std::atomic<int> next{0};
        const int total_jobs = S * T;
        std::mutex err_mutex; // first error wins
        std::exception_ptr first_error;

        auto worker = [&]() {
            std::optional<NoiseFileReader> noise;
            if (!cfg.noise_file.empty())
                noise.emplace(cfg.noise_file);
            try
            {
                for (;;)
                {
                    const int job = next.fetch_add(1);
                    if (job >= total_jobs)
                        return;
                    const int s = job / T;
                    const int t = job % T;
                    const SignalRecord rec =
                        make_trial_record(cfg, s, t, noise ? &*noise : nullptr);
                    for (int e = 0; e < E; ++e)
                    {
                        const EstimateOutcome o = run_estimator(
                            cfg.estimators[e], rec, cfg, model ? &*model : nullptr);
                        err[e][s][t] = distance(o.position, rec.label);
                        rt[e][s][t] = o.runtime_s;
                    }
                }
            }
            catch (...)
            {
                std::lock_guard<std::mutex> lk(err_mutex);
                if (!first_error)
                    first_error = std::current_exception();
                next.store(total_jobs); // drain remaining jobs
            }
        };

        const int nw = std::max(1, threads);
        std::vector<std::thread> pool;
        pool.reserve(nw - 1);
        for (int i = 1; i < nw; ++i)
            pool.emplace_back(worker);
        worker();
        for (auto &th : pool)
            th.join();
        if (first_error)
            std::rethrow_exception(first_error);

        std::vector<SweepCell> cells;
        cells.reserve(static_cast<size_t>(E) * S);
        for (int e = 0; e < E; ++e)
            for (int s = 0; s < S; ++s)
            {
                SweepCell c;
                c.estimator = cfg.estimators[e];
                c.snr_db = cfg.snr_db[s];
                c.trials = T;
                c.errors = err[e][s];
                c.rmse_m = rmse_of(c.errors);
                double racc = 0.0;
                for (double v : rt[e][s])
                    racc += v;
                c.mean_runtime_s = racc / T;
                cells.push_back(std::move(c));
            }
        return cells;
    }

    double rmse_of(const std::vector<double> &errors)
    {
        double acc = 0.0;
        for (double e : errors)
            acc += e * e;
        return errors.empty() ? 0.0 : std::sqrt(acc / static_cast<double>(errors.size()));
    }

    double paired_t_statistic(const std::vector<double> &a, const std::vector<double> &b)
    {
        if (a.size() != b.size() || a.size() < 2)
            throw std::invalid_argument("paired_t_statistic: need equal-length samples, n >= 2");
        const size_t n = a.size();
        double mean = 0.0;
        for (size_t i = 0; i < n; ++i)
            mean += a[i] - b[i];
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (size_t i = 0; i < n; ++i)
        {
            const double d = a[i] - b[i] - mean;
            var += d * d;
        }
        var /= static_cast<double>(n - 1);
        const double se = std::sqrt(var / static_cast<double>(n));
        return se > 0.0 ? mean / se : (mean > 0.0 ? 1e9 : 0.0);
    }

    namespace
    {
        void csv_double(std::ostream &out, double v)
        {
            char buf[64];
            std::snprintf(buf, sizeof(buf), "%.12g", v);
            out << buf;
        }
    } // namespace

    void write_sweep_csv(const std::vector<SweepCell> &cells, const std::string &path)
    {
        std::ofstream out(path);
        if (!out)
            throw std::runtime_error("cannot write " + path);
        out << "estimator,snr_db,rmse_m,trials,mean_runtime_s\n";
        for (const auto &c : cells)
        {
            out << c.estimator << ",";
            csv_double(out, c.snr_db);
            out << ",";
            csv_double(out, c.rmse_m);
            out << "," << c.trials << ",";
            csv_double(out, c.mean_runtime_s);
            out << "\n";
        }
    }

    void write_trial_csv(const std::vector<SweepCell> &cells, const std::string &path)
    {
        std::ofstream out(path);
        if (!out)
            throw std::runtime_error("cannot write " + path);
        out << "estimator,snr_db,trial,error_m\n";
        for (const auto &c : cells)
            for (size_t t = 0; t < c.errors.size(); ++t)
            {
                out << c.estimator << ",";
                csv_double(out, c.snr_db);
                out << "," << t << ",";
                csv_double(out, c.errors[t]);
                out << "\n";
            }
    }

    void write_sweep_svg(const std::vector<SweepCell> &cells, const std::string &path)
    {
        if (cells.empty())
            throw std::invalid_argument("nothing to plot");

        // gather estimators in first-seen order and the SNR range
        std::vector<std::string> names;
        double snr_lo = cells[0].snr_db, snr_hi = cells[0].snr_db;
        double r_lo = 1e300, r_hi = -1e300;
        for (const auto &c : cells)
        {
            bool seen = false;
            for (const auto &n : names)
                seen = seen || n == c.estimator;
            if (!seen)
                names.push_back(c.estimator);
            snr_lo = std::min(snr_lo, c.snr_db);
            snr_hi = std::max(snr_hi, c.snr_db);
            if (c.rmse_m > 0.0)
            {
                r_lo = std::min(r_lo, c.rmse_m);
                r_hi = std::max(r_hi, c.rmse_m);
            }
        }
        if (r_hi < r_lo)
        {
            r_lo = 0.1;
            r_hi = 100.0;
        }
        const double ylo = std::floor(std::log10(r_lo));
        const double yhi = std::ceil(std::log10(r_hi * 1.0001));
        if (snr_hi == snr_lo)
            snr_hi = snr_lo + 1.0;

        const double W = 640, H = 460, ml = 70, mr = 20, mt = 30, mb = 50;
        auto xmap = [&](double s) { return ml + (s - snr_lo) / (snr_hi - snr_lo) * (W - ml - mr); };
        auto ymap = [&](double r) {
            const double ly = std::log10(std::max(r, 1e-12));
            return H - mb - (ly - ylo) / (yhi - ylo) * (H - mt - mb);
        };

        const char *colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

        std::ofstream out(path);
        if (!out)
            throw std::runtime_error("cannot write " + path);
        out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
            << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
        out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

        // grid and axes
        for (double d = ylo; d <= yhi + 1e-9; d += 1.0)
        {
            const double y = ymap(std::pow(10.0, d));
            out << "<line x1=\"" << ml << "\" x2=\"" << W - mr << "\" y1=\"" << y << "\" y2=\""
                << y << "\" stroke=\"#dddddd\"/>\n";
            out << "<text x=\"" << ml - 8 << "\" y=\"" << y + 4
                << "\" text-anchor=\"end\" font-size=\"12\">1e" << static_cast<int>(d)
                << "</text>\n";
        }
        const int xticks = 5;
        for (int i = 0; i <= xticks; ++i)
        {
            const double s = snr_lo + (snr_hi - snr_lo) * i / xticks;
            const double x = xmap(s);
            out << "<line y1=\"" << mt << "\" y2=\"" << H - mb << "\" x1=\"" << x << "\" x2=\""
                << x << "\" stroke=\"#eeeeee\"/>\n";
            out << "<text x=\"" << x << "\" y=\"" << H - mb + 18
                << "\" text-anchor=\"middle\" font-size=\"12\">" << s << "</text>\n";
        }
        out << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << W - ml - mr
            << "\" height=\"" << H - mt - mb << "\" fill=\"none\" stroke=\"black\"/>\n";
        out << "<text x=\"" << (ml + W - mr) / 2 << "\" y=\"" << H - 12
            << "\" text-anchor=\"middle\" font-size=\"13\">SNR [dB]</text>\n";
        out << "<text x=\"16\" y=\"" << (mt + H - mb) / 2
            << "\" font-size=\"13\" transform=\"rotate(-90 16 " << (mt + H - mb) / 2
            << ")\" text-anchor=\"middle\">RMSE [m]</text>\n";

        for (size_t e = 0; e < names.size(); ++e)
        {
            std::ostringstream pts;
            for (const auto &c : cells)
                if (c.estimator == names[e])
                    pts << xmap(c.snr_db) << "," << ymap(c.rmse_m) << " ";
            out << "<polyline fill=\"none\" stroke=\"" << colors[e % 6]
                << "\" stroke-width=\"2\" points=\"" << pts.str() << "\"/>\n";
            for (const auto &c : cells)
                if (c.estimator == names[e])
                    out << "<circle cx=\"" << xmap(c.snr_db) << "\" cy=\"" << ymap(c.rmse_m)
                        << "\" r=\"3\" fill=\"" << colors[e % 6] << "\"/>\n";
            out << "<text x=\"" << W - mr - 8 << "\" y=\"" << mt + 16 + 16 * e
                << "\" text-anchor=\"end\" font-size=\"12\" fill=\"" << colors[e % 6] << "\">"
                << names[e] << "</text>\n";
        }
        out << "</svg>\n";
    }

    double centroid_predictor_rmse(const PriorBox &prior, const std::vector<StoredRecord> &records)
    {
        const CartesianPosition c = 0.5 * (prior.lo + prior.hi);
        std::vector<double> errs;
        errs.reserve(records.size());
        for (const auto &r : records)
            errs.push_back(distance(c, r.label));
        return rmse_of(errs);
    }

    void generate_dataset(const ExperimentConfig &cfg, int records_per_snr, const std::string &path)
    {
        cfg.validate();
        std::optional<NoiseFileReader> noise;
        if (!cfg.noise_file.empty())
            noise.emplace(cfg.noise_file);

        DatasetWriter w(path, cfg.scene.array.size(), cfg.scene.env.N,
                        cfg.dynamic_surface ? kDatasetFlagDynamic : 0);
        // trials field repurposed for the per-SNR record count in the seed path
        ExperimentConfig seeded = cfg;
        seeded.trials = records_per_snr;
        for (int s = 0; s < static_cast<int>(cfg.snr_db.size()); ++s)
            for (int i = 0; i < records_per_snr; ++i)
            {
                const SignalRecord rec = make_trial_record(seeded, s, i, noise ? &*noise : nullptr);
                w.append(cfg.snr_db[s], rec);
            }
        w.close();
    }

    nn::TrainingSet make_training_set(const std::vector<StoredRecord> &records)
    {
        nn::TrainingSet set;
        if (records.empty())
            return set;
        set.L = static_cast<int>(records[0].samples.cols());
        set.N = static_cast<int>(records[0].samples.rows());
        set.inputs.reserve(records.size());
        set.labels.reserve(records.size());
        for (const auto &r : records)
        {
            SignalRecord rec;
            rec.samples = r.samples;
            rec.label = r.label;
            set.inputs.push_back(build_sos(rec));
            set.labels.push_back(cart_to_sph(r.label));
        }
        return set;
    }

    TrainArtifacts train_pipeline(const ExperimentConfig &cfg, const std::string &dataset_path,
                                  const std::string &out_prefix)
    {
        const std::vector<StoredRecord> records = read_dataset(dataset_path);
        if (records.empty())
            throw std::runtime_error("empty dataset: " + dataset_path);
        const nn::TrainingSet set = make_training_set(records);

        const nn::NetConfig net = nn::default_net_config(set.L, set.N);

        nn::TrainOptions opt;
        opt.epochs = cfg.train.epochs_phase1;
        opt.batch = cfg.train.batch;
        opt.adam.lr = cfg.train.lr;
        opt.seed = cfg.seed;
        opt.incl_mode = cfg.train.incl_mode;

        TrainArtifacts art;
        art.branch_r = out_prefix + "_branch_r.ckpt";
        art.branch_theta = out_prefix + "_branch_theta.ckpt";
        art.branch_phi = out_prefix + "_branch_phi.ckpt";
        art.joint = out_prefix + "_joint.ckpt";
        art.trace_r = out_prefix + "_trace_r.csv";
        art.trace_theta = out_prefix + "_trace_theta.csv";
        art.trace_phi = out_prefix + "_trace_phi.csv";
        art.trace_joint = out_prefix + "_trace_joint.csv";

        nn::LossTrace tr, tt, tp, tj;
        nn::Branch br = nn::train_branch(set, net, nn::HeadKind::Range, opt, &tr);
        nn::Branch bt = nn::train_branch(set, net, nn::HeadKind::Azimuth, opt, &tt);
        nn::Branch bp = nn::train_branch(set, net, nn::HeadKind::Inclination, opt, &tp);
        nn::save_branch(br, art.branch_r);
        nn::save_branch(bt, art.branch_theta);
        nn::save_branch(bp, art.branch_phi);
        tr.to_csv(art.trace_r);
        tt.to_csv(art.trace_theta);
        tp.to_csv(art.trace_phi);

        nn::JointModel joint = nn::assemble_joint(br, bt, bp);
        nn::TrainOptions opt2 = opt;
        opt2.epochs = cfg.train.epochs_phase2;
        nn::train_joint(joint, set, opt2, &tj);
        nn::save_joint(joint, art.joint);
        tj.to_csv(art.trace_joint);
        return art;
    }

} // namespace dloc
