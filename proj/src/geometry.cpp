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

#include "dloc/geometry.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace dloc
{
    SphericalPosition cart_to_sph(const CartesianPosition &p)
    {
        double r = p.norm();
        if (r == 0.0)
            return {0.0, 0.0, 0.0};
        double phi = std::acos(std::min(1.0, std::max(-1.0, p.z / r)));
        double theta = std::atan2(p.y, p.x);
        return {r, theta, phi};
    }

    CartesianPosition sph_to_cart(const SphericalPosition &s)
    {
        double sp = std::sin(s.phi);
        return {s.r * sp * std::cos(s.theta), s.r * sp * std::sin(s.theta), s.r * std::cos(s.phi)};
    }

    void ReceiverArray::validate() const
    {
        if (positions.size() < 2)
            throw std::invalid_argument("receiver array needs at least two receivers");
        for (size_t i = 0; i < positions.size(); ++i)
            for (size_t j = i + 1; j < positions.size(); ++j)
                if (distance(positions[i], positions[j]) == 0.0)
                    throw std::invalid_argument("receiver positions must be pairwise distinct");
    }

    void Environment::validate() const
    {
        if (!(c > 0.0) || !(h > 0.0) || !(Ts > 0.0))
            throw std::invalid_argument("environment requires c > 0, h > 0, Ts > 0");
        if (N < 2)
            throw std::invalid_argument("environment requires N >= 2");
    }

    void Scene::validate() const
    {
        array.validate();
        env.validate();
        for (const auto &q : array.positions)
            if (!(q.z > 0.0) || !(q.z < env.h))
                throw std::invalid_argument("receiver outside the water column (need 0 < z < h)");
    }

    Scene scene_from_json_text(const std::string &text)
    {
        nlohmann::json j = nlohmann::json::parse(text);
        Scene s;
        s.env.c = j.value("c", 1500.0);
        s.env.h = j.value("h", 50.0);
        s.env.Ts = j.value("Ts", 5e-3);
        s.env.N = j.value("N", 100);
        if (!j.contains("receivers"))
            throw std::invalid_argument("scene config missing 'receivers'");
        for (const auto &r : j["receivers"])
        {
            if (!r.is_array() || r.size() != 3)
                throw std::invalid_argument("receiver entries must be [x, y, z]");
            s.array.positions.push_back({r[0].get<double>(), r[1].get<double>(), r[2].get<double>()});
        }
        s.validate();
        return s;
    }

    Scene load_scene(const std::string &path)
    {
        std::ifstream in(path);
        if (!in)
            throw std::runtime_error("cannot open scene config: " + path);
        std::stringstream ss;
        ss << in.rdbuf();
        return scene_from_json_text(ss.str());
    }

    Scene default_scene()
    {
        Scene s;
        s.env = Environment{};
        s.array.positions = {
            {150.0, -250.0, 10.0},
            {50.0, -250.0, 15.0},
            {-50.0, -250.0, 20.0},
            {-150.0, -250.0, 25.0},
        };
        s.validate();
        return s;
    }

} // namespace dloc
