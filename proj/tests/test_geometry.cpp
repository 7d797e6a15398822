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

#include <doctest.h>

#include "dloc/geometry.hpp"
#include "dloc/rng.hpp"

using namespace dloc;

TEST_SUITE_BEGIN("geometry");

TEST_CASE("axis-aligned conversions")
{
    const double pi = 3.14159265358979323846;

    SphericalPosition s = cart_to_sph({0.0, 0.0, 1.0});
    CHECK(s.r == doctest::Approx(1.0));
    CHECK(s.theta == doctest::Approx(0.0));
    CHECK(s.phi == doctest::Approx(0.0));

    s = cart_to_sph({1.0, 0.0, 0.0});
    CHECK(s.r == doctest::Approx(1.0));
    CHECK(s.theta == doctest::Approx(0.0));
    CHECK(s.phi == doctest::Approx(pi / 2));

    const CartesianPosition p = sph_to_cart({1.0, 0.0, 0.0});
    CHECK(p.x == doctest::Approx(0.0));
    CHECK(p.y == doctest::Approx(0.0));
    CHECK(p.z == doctest::Approx(1.0));
}

TEST_CASE("origin degenerates cleanly both ways")
{
    const SphericalPosition s = cart_to_sph({0.0, 0.0, 0.0});
    CHECK(s.r == 0.0);
    CHECK(s.theta == 0.0);
    CHECK(s.phi == 0.0);

    const CartesianPosition p = sph_to_cart({0.0, 1.234, 2.345});
    CHECK(p.x == 0.0);
    CHECK(p.y == 0.0);
    CHECK(p.z == 0.0);
}

TEST_CASE("round trip is the identity on 1000 random points")
{
    Rng rng(42);
    for (int i = 0; i < 1000; ++i)
    {
        const CartesianPosition p{rng.uniform(-500.0, 500.0), rng.uniform(-500.0, 500.0),
                                  rng.uniform(-500.0, 500.0)};
        const CartesianPosition q = sph_to_cart(cart_to_sph(p));
        const double scale = std::max(1e-30, p.norm());
        CHECK(distance(p, q) / scale < 1e-12);
    }
}

TEST_CASE("canonical ranges and norm preservation")
{
    const double pi = 3.14159265358979323846;
    Rng rng(7);
    for (int i = 0; i < 1000; ++i)
    {
        const CartesianPosition p{rng.uniform(-9.0, 9.0), rng.uniform(-9.0, 9.0),
                                  rng.uniform(-9.0, 9.0)};
        const SphericalPosition s = cart_to_sph(p);
        CHECK(s.r >= 0.0);
        CHECK(s.phi >= 0.0);
        CHECK(s.phi <= pi);
        CHECK(s.theta > -pi - 1e-15);
        CHECK(s.theta <= pi + 1e-15);
        CHECK(sph_to_cart(s).norm() == doctest::Approx(s.r).epsilon(1e-12));
    }
}

TEST_CASE("scene validation rejects broken inputs")
{
    Scene s = default_scene();
    CHECK_NOTHROW(s.validate());

    Scene dup = s;
    dup.array.positions[1] = dup.array.positions[0];
    CHECK_THROWS_AS(dup.validate(), std::invalid_argument);

    Scene shallow = s;
    shallow.array.positions[0].z = -1.0;
    CHECK_THROWS_AS(shallow.validate(), std::invalid_argument);

    Scene bad_env = s;
    bad_env.env.Ts = 0.0;
    CHECK_THROWS_AS(bad_env.validate(), std::invalid_argument);

    Scene small_n = s;
    small_n.env.N = 1;
    CHECK_THROWS_AS(small_n.validate(), std::invalid_argument);
}

TEST_CASE("scene config parses receivers and environment")
{
    const char *text = R"({
        "c": 1480.0, "h": 60.0, "Ts": 0.002, "N": 64,
        "receivers": [[10, -20, 5], [0, -20, 8], [-10, -20, 11]]
    })";
    const Scene s = scene_from_json_text(text);
    CHECK(s.env.c == doctest::Approx(1480.0));
    CHECK(s.env.h == doctest::Approx(60.0));
    CHECK(s.env.N == 64);
    CHECK(s.array.size() == 3);
    CHECK(s.array.positions[2].x == doctest::Approx(-10.0));
}

TEST_SUITE_END();
