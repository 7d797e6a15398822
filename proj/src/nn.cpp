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

#include "dloc/nn.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace dloc::nn
{
    // --- conv --------------------------------------------------------------

    void Conv2d::configure(int cin_, int cout_, int kh_, int kw_)
    {
        cin = cin_;
        cout = cout_;
        kh = kh_;
        kw = kw_;
        w.assign(static_cast<size_t>(cout) * cin * kh * kw, 0.0);
        b.assign(cout, 0.0);
        gw.assign(w.size(), 0.0);
        gb.assign(b.size(), 0.0);
    }

    void Conv2d::init_he(Rng &rng)
    {
        const double s = std::sqrt(2.0 / (static_cast<double>(cin) * kh * kw));
        for (auto &x : w)
            x = s * rng.normal();
        for (auto &x : b)
            x = 0.0;
    }

    Tensor4 Conv2d::forward(const Tensor4 &x) const
    {
        if (x.c != cin || x.h < kh || x.w < kw)
            throw std::invalid_argument("conv2d: input shape incompatible with kernel");
        const int oh = x.h - kh + 1;
        const int ow = x.w - kw + 1;
        Tensor4 y(x.n, cout, oh, ow);
        for (int n = 0; n < x.n; ++n)
            for (int co = 0; co < cout; ++co)
            {
                const double bias = b[co];
                for (int i = 0; i < oh; ++i)
                    for (int j = 0; j < ow; ++j)
                    {
                        double acc = bias;
                        for (int ci = 0; ci < cin; ++ci)
                            for (int ki = 0; ki < kh; ++ki)
                            {
                                const double *xr = &x.v[((static_cast<size_t>(n) * cin + ci) * x.h + (i + ki)) * x.w + j];
                                const double *wr = &w[((static_cast<size_t>(co) * cin + ci) * kh + ki) * kw];
                                for (int kj = 0; kj < kw; ++kj)
                                    acc += wr[kj] * xr[kj];
                            }
                        y.at(n, co, i, j) = acc;
                    }
            }
        return y;
    }

    Tensor4 Conv2d::backward(const Tensor4 &x, const Tensor4 &gout, bool need_input_grad)
    {
        const int oh = x.h - kh + 1;
        const int ow = x.w - kw + 1;
        if (gout.n != x.n || gout.c != cout || gout.h != oh || gout.w != ow)
            throw std::invalid_argument("conv2d backward: gradient shape mismatch");

        Tensor4 gin;
        if (need_input_grad)
            gin = Tensor4(x.n, x.c, x.h, x.w);

        for (int n = 0; n < x.n; ++n)
            for (int co = 0; co < cout; ++co)
                for (int i = 0; i < oh; ++i)
                    for (int j = 0; j < ow; ++j)
                    {
                        const double g = gout.at(n, co, i, j);
                        if (g == 0.0)
                            continue;
                        gb[co] += g;
                        for (int ci = 0; ci < cin; ++ci)
                            for (int ki = 0; ki < kh; ++ki)
                            {
                                const size_t xbase = ((static_cast<size_t>(n) * cin + ci) * x.h + (i + ki)) * x.w + j;
                                const size_t wbase = ((static_cast<size_t>(co) * cin + ci) * kh + ki) * kw;
                                for (int kj = 0; kj < kw; ++kj)
                                {
                                    gw[wbase + kj] += g * x.v[xbase + kj];
                                    if (need_input_grad)
                                        gin.v[xbase + kj] += g * w[wbase + kj];
                                }
                            }
                    }
        return gin;
    }

    void Conv2d::collect(std::vector<ParamView> &out)
    {
        out.push_back({w.data(), gw.data(), w.size()});
        out.push_back({b.data(), gb.data(), b.size()});
    }

    // --- pooling / activations / dropout ------------------------------------

    Tensor4 AvgPool2d::forward(const Tensor4 &x) const
    {
        const int oh = x.h / ph;
        const int ow = x.w / pw;
        if (oh == 0 || ow == 0)
            throw std::invalid_argument("avgpool2d: window larger than input");
        Tensor4 y(x.n, x.c, oh, ow);
        const double inv = 1.0 / (ph * pw);
        for (int n = 0; n < x.n; ++n)
            for (int c = 0; c < x.c; ++c)
                for (int i = 0; i < oh; ++i)
                    for (int j = 0; j < ow; ++j)
                    {
                        double acc = 0.0;
                        for (int a = 0; a < ph; ++a)
                            for (int b = 0; b < pw; ++b)
                                acc += x.at(n, c, i * ph + a, j * pw + b);
                        y.at(n, c, i, j) = acc * inv;
                    }
        return y;
    }

    Tensor4 AvgPool2d::backward(const Tensor4 &x, const Tensor4 &gout) const
    {
        const int oh = x.h / ph;
        const int ow = x.w / pw;
        Tensor4 gin(x.n, x.c, x.h, x.w); // truncated cells stay zero
        const double inv = 1.0 / (ph * pw);
        for (int n = 0; n < x.n; ++n)
            for (int c = 0; c < x.c; ++c)
                for (int i = 0; i < oh; ++i)
                    for (int j = 0; j < ow; ++j)
                    {
                        const double g = gout.at(n, c, i, j) * inv;
                        for (int a = 0; a < ph; ++a)
                            for (int b = 0; b < pw; ++b)
                                gin.at(n, c, i * ph + a, j * pw + b) = g;
                    }
        return gin;
    }

    Tensor4 relu(const Tensor4 &x)
    {
        Tensor4 y = x;
        for (auto &v : y.v)
            v = v > 0.0 ? v : 0.0;
        return y;
    }

    Tensor4 relu_backward(const Tensor4 &out, const Tensor4 &gout)
    {
        Tensor4 gin = gout;
        for (size_t i = 0; i < gin.v.size(); ++i)
            if (!(out.v[i] > 0.0))
                gin.v[i] = 0.0;
        return gin;
    }

    Tensor2 relu(const Tensor2 &x)
    {
        Tensor2 y = x;
        for (auto &v : y.v)
            v = v > 0.0 ? v : 0.0;
        return y;
    }

    Tensor2 relu_backward(const Tensor2 &out, const Tensor2 &gout)
    {
        Tensor2 gin = gout;
        for (size_t i = 0; i < gin.v.size(); ++i)
            if (!(out.v[i] > 0.0))
                gin.v[i] = 0.0;
        return gin;
    }

    std::vector<double> dropout_mask(size_t n, double rate, Rng &rng)
    {
        std::vector<double> m(n);
        const double keep = 1.0 - rate;
        const double scale = 1.0 / keep;
        for (auto &x : m)
            x = rng.uniform() < keep ? scale : 0.0;
        return m;
    }

    void apply_mask(Tensor4 &x, const std::vector<double> &mask)
    {
        if (mask.size() != x.v.size())
            throw std::invalid_argument("dropout mask size mismatch");
        for (size_t i = 0; i < mask.size(); ++i)
            x.v[i] *= mask[i];
    }

    // --- dense ---------------------------------------------------------------

    void Dense::configure(int in_, int out_)
    {
        in = in_;
        out = out_;
        w.assign(static_cast<size_t>(in) * out, 0.0);
        b.assign(out, 0.0);
        gw.assign(w.size(), 0.0);
        gb.assign(b.size(), 0.0);
    }

    void Dense::init_he(Rng &rng)
    {
        const double s = std::sqrt(2.0 / static_cast<double>(in));
        for (auto &x : w)
            x = s * rng.normal();
        for (auto &x : b)
            x = 0.0;
    }

    void Dense::init_zero()
    {
        std::fill(w.begin(), w.end(), 0.0);
        std::fill(b.begin(), b.end(), 0.0);
    }

    Tensor2 Dense::forward(const Tensor2 &x) const
    {
        if (x.f != in)
            throw std::invalid_argument("dense: input width mismatch");
        Tensor2 y(x.n, out);
        for (int n = 0; n < x.n; ++n)
            for (int o = 0; o < out; ++o)
            {
                const double *wr = &w[static_cast<size_t>(o) * in];
                const double *xr = &x.v[static_cast<size_t>(n) * in];
                double acc = b[o];
                for (int i = 0; i < in; ++i)
                    acc += wr[i] * xr[i];
                y.at(n, o) = acc;
            }
        return y;
    }

    Tensor2 Dense::backward(const Tensor2 &x, const Tensor2 &gout)
    {
        if (gout.n != x.n || gout.f != out)
            throw std::invalid_argument("dense backward: gradient shape mismatch");
        Tensor2 gin(x.n, in);
        for (int n = 0; n < x.n; ++n)
            for (int o = 0; o < out; ++o)
            {
                const double g = gout.at(n, o);
                if (g == 0.0)
                    continue;
                gb[o] += g;
                double *gwr = &gw[static_cast<size_t>(o) * in];
                const double *wr = &w[static_cast<size_t>(o) * in];
                const double *xr = &x.v[static_cast<size_t>(n) * in];
                double *gir = &gin.v[static_cast<size_t>(n) * in];
                for (int i = 0; i < in; ++i)
                {
                    gwr[i] += g * xr[i];
                    gir[i] += g * wr[i];
                }
            }
        return gin;
    }

    void Dense::collect(std::vector<ParamView> &out_)
    {
        out_.push_back({w.data(), gw.data(), w.size()});
        out_.push_back({b.data(), gb.data(), b.size()});
    }

    // --- losses ----------------------------------------------------------------

    double loss_range(double r_hat, double r)
    {
        const double d = r - r_hat;
        return d * d;
    }

    double loss_range_grad(double r_hat, double r)
    {
        return -2.0 * (r - r_hat);
    }

    double loss_emce(double a_hat, double a)
    {
        return 2.0 - 2.0 * std::cos(a_hat - a);
    }

    double loss_emce_grad(double a_hat, double a)
    {
        return 2.0 * std::sin(a_hat - a);
    }

    double loss_inclination(double p_hat, double p, InclinationLossMode mode)
    {
        if (mode == InclinationLossMode::ArgumentScaled)
            return 2.0 - 2.0 * std::cos(2.0 * (p_hat - p));
        return 2.0 * loss_emce(p_hat, p);
    }

    double loss_inclination_grad(double p_hat, double p, InclinationLossMode mode)
    {
        if (mode == InclinationLossMode::ArgumentScaled)
            return 4.0 * std::sin(2.0 * (p_hat - p));
        return 2.0 * loss_emce_grad(p_hat, p);
    }

    double loss_spherical(const SphericalPosition &hat, const SphericalPosition &truth)
    {
        const double cross = std::sin(hat.phi) * std::sin(truth.phi) * std::cos(hat.theta - truth.theta) +
                             std::cos(hat.phi) * std::cos(truth.phi);
        return hat.r * hat.r + truth.r * truth.r - 2.0 * hat.r * truth.r * cross;
    }

    void loss_spherical_grad(const SphericalPosition &hat, const SphericalPosition &truth,
                             double grad[3])
    {
        const double sp = std::sin(hat.phi), cp = std::cos(hat.phi);
        const double sq = std::sin(truth.phi), cq = std::cos(truth.phi);
        const double cd = std::cos(hat.theta - truth.theta), sd = std::sin(hat.theta - truth.theta);
        const double cross = sp * sq * cd + cp * cq;
        grad[0] = 2.0 * hat.r - 2.0 * truth.r * cross;
        grad[1] = 2.0 * hat.r * truth.r * sp * sq * sd;
        grad[2] = -2.0 * hat.r * truth.r * (cp * sq * cd - sp * cq);
    }

    // --- config ------------------------------------------------------------------

    int NetConfig::feature_dim() const
    {
        int c = in_c, h = in_h, w = in_w;
        for (const auto &bs : blocks)
        {
            if (h < bs.kh || w < bs.kw)
                throw std::invalid_argument("net config: kernel does not fit feature map");
            h = h - bs.kh + 1;
            w = w - bs.kw + 1;
            h /= bs.ph;
            w /= bs.pw;
            if (h == 0 || w == 0)
                throw std::invalid_argument("net config: pooling collapses a dimension");
            c = bs.channels;
        }
        int f = c * h * w;
        for (int d : hidden)
            f = d;
        return f;
    }

    std::string NetConfig::to_json() const
    {
        nlohmann::json j;
        j["in_c"] = in_c;
        j["in_h"] = in_h;
        j["in_w"] = in_w;
        j["dropout"] = dropout;
        j["hidden"] = hidden;
        j["blocks"] = nlohmann::json::array();
        for (const auto &b : blocks)
            j["blocks"].push_back({{"channels", b.channels}, {"kh", b.kh}, {"kw", b.kw}, {"ph", b.ph}, {"pw", b.pw}});
        return j.dump();
    }

    NetConfig NetConfig::from_json(const std::string &text)
    {
        nlohmann::json j = nlohmann::json::parse(text);
        NetConfig c;
        c.in_c = j.at("in_c").get<int>();
        c.in_h = j.at("in_h").get<int>();
        c.in_w = j.at("in_w").get<int>();
        c.dropout = j.at("dropout").get<double>();
        c.hidden = j.at("hidden").get<std::vector<int>>();
        c.blocks.clear();
        for (const auto &b : j.at("blocks"))
            c.blocks.push_back({b.at("channels").get<int>(), b.at("kh").get<int>(), b.at("kw").get<int>(),
                                b.at("ph").get<int>(), b.at("pw").get<int>()});
        return c;
    }

    NetConfig default_net_config(int L, int N)
    {
        NetConfig cfg;
        cfg.in_c = 2;
        cfg.in_h = pair_count(L);
        cfg.in_w = 2 * N - 1;
        cfg.hidden = {64};

        const int channels[3] = {8, 16, 32};
        int h = cfg.in_h, w = cfg.in_w;
        for (int i = 0; i < 3; ++i)
        {
            BlockSpec b;
            b.channels = channels[i];
            b.kh = std::min(3, h);
            b.kw = std::min(3, w);
            h = h - b.kh + 1;
            w = w - b.kw + 1;
            b.ph = h >= 2 ? 2 : 1;
            b.pw = w >= 2 ? 2 : 1;
            h /= b.ph;
            w /= b.pw;
            cfg.blocks.push_back(b);
        }
        return cfg;
    }

    // --- branch core -----------------------------------------------------------

    void BranchCore::build(const NetConfig &c, Rng &rng)
    {
        cfg = c;
        convs.clear();
        pools.clear();
        hidden.clear();

        int ch = cfg.in_c, h = cfg.in_h, w = cfg.in_w;
        for (const auto &bs : cfg.blocks)
        {
            Conv2d conv;
            conv.configure(ch, bs.channels, bs.kh, bs.kw);
            conv.init_he(rng);
            convs.push_back(std::move(conv));
            pools.push_back({bs.ph, bs.pw});
            h = (h - bs.kh + 1) / bs.ph;
            w = (w - bs.kw + 1) / bs.pw;
            ch = bs.channels;
        }

        int f = ch * h * w;
        for (int d : cfg.hidden)
        {
            Dense dn;
            dn.configure(f, d);
            dn.init_he(rng);
            hidden.push_back(std::move(dn));
            f = d;
        }
    }

    Tensor2 BranchCore::forward(const Tensor4 &x, RunMode mode, Rng *rng, Tape &tape) const
    {
        const int nb = static_cast<int>(convs.size());
        tape.conv_in.clear();
        tape.act_out.clear();
        tape.pool_out.clear();
        tape.masks.assign(nb, {});
        tape.dense_in.clear();
        tape.dense_out.clear();

        Tensor4 cur = x;
        for (int i = 0; i < nb; ++i)
        {
            tape.conv_in.push_back(cur);
            Tensor4 a = relu(convs[i].forward(cur));
            tape.act_out.push_back(a);
            Tensor4 p = pools[i].forward(a);
            // dropout on all but the last block
            if (mode == RunMode::Train && cfg.dropout > 0.0 && i + 1 < nb)
            {
                if (!rng)
                    throw std::invalid_argument("train-mode forward needs a generator for dropout");
                tape.masks[i] = dropout_mask(p.size(), cfg.dropout, *rng);
                apply_mask(p, tape.masks[i]);
            }
            tape.pool_out.push_back(p);
            cur = std::move(p);
        }

        Tensor2 flat(cur.n, cur.c * cur.h * cur.w);
        flat.v = cur.v;
        tape.flat = flat;

        Tensor2 f = std::move(flat);
        for (const auto &dn : hidden)
        {
            tape.dense_in.push_back(f);
            f = relu(dn.forward(f));
            tape.dense_out.push_back(f);
        }
        tape.features = f;
        return f;
    }

    void BranchCore::backward(const Tape &tape, const Tensor2 &gfeat)
    {
        Tensor2 g = gfeat;
        for (int i = static_cast<int>(hidden.size()) - 1; i >= 0; --i)
        {
            g = relu_backward(tape.dense_out[i], g);
            g = hidden[i].backward(tape.dense_in[i], g);
        }

        // reshape flat gradient back to the last pooled tensor
        const Tensor4 &last = tape.pool_out.back();
        Tensor4 g4(last.n, last.c, last.h, last.w);
        g4.v = g.v;

        for (int i = static_cast<int>(convs.size()) - 1; i >= 0; --i)
        {
            if (!tape.masks[i].empty())
            {
                for (size_t k = 0; k < g4.v.size(); ++k)
                    g4.v[k] *= tape.masks[i][k];
            }
            Tensor4 ga = pools[i].backward(tape.act_out[i], g4);
            ga = relu_backward(tape.act_out[i], ga);
            g4 = convs[i].backward(tape.conv_in[i], ga, i > 0);
        }
    }

    void BranchCore::collect(std::vector<ParamView> &out)
    {
        for (auto &c : convs)
            c.collect(out);
        for (auto &d : hidden)
            d.collect(out);
    }

    // --- branch ---------------------------------------------------------------

    void Branch::build(const NetConfig &cfg, HeadKind k, Rng &rng)
    {
        kind = k;
        core.build(cfg, rng);
        head.configure(core.feature_dim(), 1);
        head.init_zero(); // normalized prediction starts at the label mean
    }

    std::vector<double> Branch::forward(const Tensor4 &x, RunMode mode, Rng *rng, Tape &tape) const
    {
        Tensor2 f = core.forward(x, mode, rng, tape);
        Tensor2 y = head.forward(f);
        std::vector<double> out(y.n);
        for (int n = 0; n < y.n; ++n)
            out[n] = out_offset + out_scale * y.at(n, 0);
        return out;
    }

    void Branch::backward(const Tape &tape, const std::vector<double> &gpred)
    {
        Tensor2 gy(static_cast<int>(gpred.size()), 1);
        for (size_t n = 0; n < gpred.size(); ++n)
            gy.at(static_cast<int>(n), 0) = gpred[n] * out_scale;
        Tensor2 gf = head.backward(tape.features, gy);
        core.backward(tape, gf);
    }

    void Branch::collect(std::vector<ParamView> &out)
    {
        core.collect(out);
        head.collect(out);
    }

    size_t Branch::param_count()
    {
        std::vector<ParamView> v;
        collect(v);
        size_t n = 0;
        for (const auto &p : v)
            n += p.n;
        return n;
    }

    // --- joint model ------------------------------------------------------------

    std::vector<SphericalPosition> JointModel::forward(const Tensor4 &x, RunMode mode, Rng *rng,
                                                       JointTape &tape) const
    {
        Tensor2 fr = core_r.forward(x, mode, rng, tape.tr);
        Tensor2 ft = core_t.forward(x, mode, rng, tape.tt);
        Tensor2 fp = core_p.forward(x, mode, rng, tape.tp);

        Tensor2 cat(fr.n, fr.f + ft.f + fp.f);
        for (int n = 0; n < fr.n; ++n)
        {
            int o = 0;
            for (int j = 0; j < fr.f; ++j)
                cat.at(n, o++) = fr.at(n, j);
            for (int j = 0; j < ft.f; ++j)
                cat.at(n, o++) = ft.at(n, j);
            for (int j = 0; j < fp.f; ++j)
                cat.at(n, o++) = fp.at(n, j);
        }
        tape.concat = cat;

        Tensor2 y = merge.forward(cat);
        std::vector<SphericalPosition> out(y.n);
        for (int n = 0; n < y.n; ++n)
        {
            out[n].r = out_offset[0] + out_scale[0] * y.at(n, 0);
            out[n].theta = out_offset[1] + out_scale[1] * y.at(n, 1);
            out[n].phi = out_offset[2] + out_scale[2] * y.at(n, 2);
        }
        return out;
    }

    void JointModel::backward(const JointTape &tape, const std::vector<std::array<double, 3>> &gpred)
    {
        Tensor2 gy(static_cast<int>(gpred.size()), 3);
        for (size_t n = 0; n < gpred.size(); ++n)
            for (int k = 0; k < 3; ++k)
                gy.at(static_cast<int>(n), k) = gpred[n][k] * out_scale[k];

        Tensor2 gcat = merge.backward(tape.concat, gy);

        const int fr = core_r.feature_dim();
        const int ft = core_t.feature_dim();
        const int fp = core_p.feature_dim();
        Tensor2 gr(gcat.n, fr), gt(gcat.n, ft), gp(gcat.n, fp);
        for (int n = 0; n < gcat.n; ++n)
        {
            int o = 0;
            for (int j = 0; j < fr; ++j)
                gr.at(n, j) = gcat.at(n, o++);
            for (int j = 0; j < ft; ++j)
                gt.at(n, j) = gcat.at(n, o++);
            for (int j = 0; j < fp; ++j)
                gp.at(n, j) = gcat.at(n, o++);
        }
        core_r.backward(tape.tr, gr);
        core_t.backward(tape.tt, gt);
        core_p.backward(tape.tp, gp);
    }

    void JointModel::collect(std::vector<ParamView> &out)
    {
        core_r.collect(out);
        core_t.collect(out);
        core_p.collect(out);
        merge.collect(out);
    }

    size_t JointModel::param_count()
    {
        std::vector<ParamView> v;
        collect(v);
        size_t n = 0;
        for (const auto &p : v)
            n += p.n;
        return n;
    }

    JointModel assemble_joint(const Branch &r, const Branch &t, const Branch &p)
    {
        if (r.core.cfg.to_json() != t.core.cfg.to_json() ||
            r.core.cfg.to_json() != p.core.cfg.to_json())
            throw std::invalid_argument("assemble_joint: branch configurations differ");

        JointModel m;
        m.core_r = r.core;
        m.core_t = t.core;
        m.core_p = p.core;

        const int F = r.core.feature_dim();
        m.merge.configure(3 * F, 3);
        m.merge.init_zero();
        // block-diagonal pass-through of the three heads
        for (int j = 0; j < F; ++j)
        {
            m.merge.w[0 * (3 * F) + j] = r.head.w[j];
            m.merge.w[1 * (3 * F) + F + j] = t.head.w[j];
            m.merge.w[2 * (3 * F) + 2 * F + j] = p.head.w[j];
        }
        m.merge.b[0] = r.head.b[0];
        m.merge.b[1] = t.head.b[0];
        m.merge.b[2] = p.head.b[0];

        m.out_scale[0] = r.out_scale;
        m.out_scale[1] = t.out_scale;
        m.out_scale[2] = p.out_scale;
        m.out_offset[0] = r.out_offset;
        m.out_offset[1] = t.out_offset;
        m.out_offset[2] = p.out_offset;
        return m;
    }

    // --- input mapping ----------------------------------------------------------

    Tensor4 sos_to_input(const SosTensor &t)
    {
        std::vector<const SosTensor *> one{&t};
        return sos_batch_to_input(one);
    }

    Tensor4 sos_batch_to_input(const std::vector<const SosTensor *> &batch)
    {
        if (batch.empty())
            throw std::invalid_argument("empty batch");
        const int pairs = batch[0]->pairs;
        const int lags = batch[0]->lags;
        Tensor4 x(static_cast<int>(batch.size()), 2, pairs, lags);
        for (size_t n = 0; n < batch.size(); ++n)
        {
            const SosTensor &t = *batch[n];
            if (t.pairs != pairs || t.lags != lags)
                throw std::invalid_argument("batch of inconsistent tensors");
            for (int p = 0; p < pairs; ++p)
                for (int m = 0; m < lags; ++m)
                {
                    x.at(static_cast<int>(n), 0, p, m) = t.at(p, m, 0);
                    x.at(static_cast<int>(n), 1, p, m) = t.at(p, m, 1);
                }
        }
        return x;
    }

    // --- checkpoints --------------------------------------------------------------

    namespace
    {
        constexpr std::uint32_t kCheckpointVersion = 1;

        void put_u32(std::ofstream &out, std::uint32_t v)
        {
            char b[4] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                         static_cast<char>((v >> 16) & 0xFF), static_cast<char>((v >> 24) & 0xFF)};
            out.write(b, 4);
        }

        std::uint32_t get_u32(std::ifstream &in)
        {
            unsigned char b[4];
            in.read(reinterpret_cast<char *>(b), 4);
            return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
                   (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
        }

        void put_f64(std::ofstream &out, double d)
        {
            std::uint64_t bits;
            std::memcpy(&bits, &d, 8);
            char b[8];
            for (int i = 0; i < 8; ++i)
                b[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
            out.write(b, 8);
        }

        double get_f64(std::ifstream &in)
        {
            unsigned char b[8];
            in.read(reinterpret_cast<char *>(b), 8);
            std::uint64_t bits = 0;
            for (int i = 0; i < 8; ++i)
                bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
            double d;
            std::memcpy(&d, &bits, 8);
            return d;
        }

        void write_header(std::ofstream &out, const char magic[4], const std::string &cfg_json)
        {
            out.write(magic, 4);
            put_u32(out, kCheckpointVersion);
            put_u32(out, static_cast<std::uint32_t>(cfg_json.size()));
            out.write(cfg_json.data(), static_cast<std::streamsize>(cfg_json.size()));
        }

        std::string read_header(std::ifstream &in, const char magic[4])
        {
            char m[4];
            in.read(m, 4);
            if (!in || std::memcmp(m, magic, 4) != 0)
                throw std::runtime_error("checkpoint: wrong magic");
            const std::uint32_t ver = get_u32(in);
            if (ver != kCheckpointVersion)
                throw std::runtime_error("checkpoint: unsupported version");
            const std::uint32_t len = get_u32(in);
            std::string cfg(len, '\0');
            in.read(cfg.data(), len);
            return cfg;
        }

        void write_params(std::ofstream &out, std::vector<ParamView> &views)
        {
            for (const auto &v : views)
                for (size_t i = 0; i < v.n; ++i)
                    put_f64(out, v.p[i]);
        }

        void read_params(std::ifstream &in, std::vector<ParamView> &views)
        {
            for (const auto &v : views)
                for (size_t i = 0; i < v.n; ++i)
                    v.p[i] = get_f64(in);
            if (!in)
                throw std::runtime_error("checkpoint: truncated parameter block");
        }
    } // namespace

    void save_branch(const Branch &b, const std::string &path)
    {
        std::ofstream out(path, std::ios::binary);
        if (!out)
            throw std::runtime_error("cannot write " + path);
        write_header(out, "DNB1", b.core.cfg.to_json());
        put_u32(out, static_cast<std::uint32_t>(b.kind));
        put_f64(out, b.out_scale);
        put_f64(out, b.out_offset);
        std::vector<ParamView> views;
        const_cast<Branch &>(b).collect(views);
        write_params(out, views);
    }

    Branch load_branch(const std::string &path)
    {
        std::ifstream in(path, std::ios::binary);
        if (!in)
            throw std::runtime_error("cannot read " + path);
        const std::string cfg_json = read_header(in, "DNB1");
        Branch b;
        Rng scratch(0);
        b.build(NetConfig::from_json(cfg_json), HeadKind::Range, scratch);
        b.kind = static_cast<HeadKind>(get_u32(in));
        b.out_scale = get_f64(in);
        b.out_offset = get_f64(in);
        std::vector<ParamView> views;
        b.collect(views);
        read_params(in, views);
        return b;
    }

    void save_joint(const JointModel &m, const std::string &path)
    {
        std::ofstream out(path, std::ios::binary);
        if (!out)
            throw std::runtime_error("cannot write " + path);
        write_header(out, "DNJ1", m.core_r.cfg.to_json());
        for (int k = 0; k < 3; ++k)
            put_f64(out, m.out_scale[k]);
        for (int k = 0; k < 3; ++k)
            put_f64(out, m.out_offset[k]);
        std::vector<ParamView> views;
        const_cast<JointModel &>(m).collect(views);
        write_params(out, views);
    }

    JointModel load_joint(const std::string &path)
    {
        std::ifstream in(path, std::ios::binary);
        if (!in)
            throw std::runtime_error("cannot read " + path);
        const std::string cfg_json = read_header(in, "DNJ1");
        const NetConfig cfg = NetConfig::from_json(cfg_json);

        JointModel m;
        Rng scratch(0);
        m.core_r.build(cfg, scratch);
        m.core_t.build(cfg, scratch);
        m.core_p.build(cfg, scratch);
        m.merge.configure(3 * m.core_r.feature_dim(), 3);
        for (int k = 0; k < 3; ++k)
            m.out_scale[k] = get_f64(in);
        for (int k = 0; k < 3; ++k)
            m.out_offset[k] = get_f64(in);
        std::vector<ParamView> views;
        m.collect(views);
        read_params(in, views);
        return m;
    }

} // namespace dloc::nn
