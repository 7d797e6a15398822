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

#ifndef DLOC_GEOMETRY_HPP
#define DLOC_GEOMETRY_HPP

#include <cmath>
#include <string>
#include <vector>

namespace dloc
{
    // Cartesian position in meters. The z axis points downward: the sea
    // surface is z = 0 and the bottom is z = h, so z is a depth. Sources and
    // receivers of a valid scene satisfy 0 < z < h.
    struct CartesianPosition
    {
        double x = 0.0;
        double y = 0.0;
        double z = 0.0;

        double norm() const { return std::sqrt(x * x + y * y + z * z); }

        friend CartesianPosition operator+(const CartesianPosition &a, const CartesianPosition &b)
        {
            return {a.x + b.x, a.y + b.y, a.z + b.z};
        }
        friend CartesianPosition operator-(const CartesianPosition &a, const CartesianPosition &b)
        {
            return {a.x - b.x, a.y - b.y, a.z - b.z};
        }
        friend CartesianPosition operator*(double s, const CartesianPosition &a)
        {
            return {s * a.x, s * a.y, s * a.z};
        }
    };

    inline double distance(const CartesianPosition &a, const CartesianPosition &b)
    {
        return (a - b).norm();
    }

    // Spherical position: range r >= 0, azimuth theta in (-pi, pi] measured in
    // the x-y plane from +x, inclination phi in [0, pi] measured from the +z
    // (downward) axis.
    struct SphericalPosition
    {
        double r = 0.0;
        double theta = 0.0;
        double phi = 0.0;
    };

    // Conversions use x = r sin(phi) cos(theta), y = r sin(phi) sin(theta),
    // z = r cos(phi). The origin maps to (0, 0, 0) in both directions.
    SphericalPosition cart_to_sph(const CartesianPosition &p);
    CartesianPosition sph_to_cart(const SphericalPosition &s);

    // Ordered set of single-hydrophone receiver positions, L >= 2, pairwise
    // distinct.
    struct ReceiverArray
    {
        std::vector<CartesianPosition> positions;

        int size() const { return static_cast<int>(positions.size()); }

        // Throws std::invalid_argument on violated invariants.
        void validate() const;
    };

    // Shared environment description: sound speed c [m/s], bottom depth h [m],
    // sampling period Ts [s], and the number of samples N per observation.
    struct Environment
    {
        double c = 1500.0;
        double h = 50.0;
        double Ts = 5e-3;
        int N = 100;

        void validate() const;
    };

    struct Scene
    {
        ReceiverArray array;
        Environment env;

        // Also checks that all receivers are inside the water column.
        void validate() const;
    };

    // Scene description from a JSON config file or text. Expected keys:
    //   { "c": .., "h": .., "Ts": .., "N": .., "receivers": [[x,y,z], ...] }
    Scene scene_from_json_text(const std::string &text);
    Scene load_scene(const std::string &path);

    // The default benchmark scene: four receivers on a line at distinct
    // depths in a 50 m water column.
    Scene default_scene();

} // namespace dloc

#endif
