// Copyright 2026 The LRKV Lab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <string>

#include "lrkv/config.h"
#include "lrkv/errors.h"
#include "test_util.h"

namespace lrkv {
namespace {

using testing::make_config;

std::string validation_message(const AttentionConfig& c) {
  try {
    c.validate();
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

TEST_CASE("valid configs pass") {
  CHECK_NOTHROW(make_config(Mechanism::kMHA, 4, 8).validate());
  CHECK_NOTHROW(make_config(Mechanism::kGQA, 6, 8, 0, 0, 3).validate());
  CHECK_NOTHROW(make_config(Mechanism::kLRKV, 2, 8, 0).validate());
  CHECK_NOTHROW(make_config(Mechanism::kMLA, 2, 8, 0, 16).validate());
}

TEST_CASE("violated invariants are named") {
  auto c = make_config(Mechanism::kMHA, 4, 8);
  c.d_model = 30;
  CHECK(validation_message(c).find("d = H * d_h") != std::string::npos);

  CHECK(validation_message(make_config(Mechanism::kGQA, 6, 8, 0, 0, 4))
            .find("H mod G") != std::string::npos);
  CHECK(validation_message(make_config(Mechanism::kLRKV, 2, 4, 9))
            .find("r <= d") != std::string::npos);
  CHECK(validation_message(make_config(Mechanism::kLRKV, 2, 4, -1))
            .find("r >= 0") != std::string::npos);
  CHECK(validation_message(make_config(Mechanism::kMLA, 2, 4, 0, 0))
            .find("d_c") != std::string::npos);
  CHECK(validation_message(make_config(Mechanism::kMLA, 2, 4, 0, 9))
            .find("d_c") != std::string::npos);
}

TEST_CASE("fields of other mechanisms are ignored") {
  auto c = make_config(Mechanism::kMHA, 2, 4, /*rank=*/-7, /*latent=*/-3, /*groups=*/5);
  CHECK_NOTHROW(c.validate());
  c.mechanism = Mechanism::kMQA;
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("GQA head to group map is contiguous") {
  const auto c = make_config(Mechanism::kGQA, 6, 4, 0, 0, 3);
  const int expected[] = {0, 0, 1, 1, 2, 2};
  for (int h = 0; h < 6; ++h) CHECK(c.kv_index(h) == expected[h]);
  CHECK(c.kv_projection_count() == 3);
}

TEST_CASE("mechanism names round trip") {
  for (Mechanism m : kAllMechanisms) CHECK(parse_mechanism(mechanism_name(m)) == m);
  CHECK(parse_mechanism("lrkv") == Mechanism::kLRKV);
  CHECK_THROWS_AS(parse_mechanism("mha2"), ConfigError);
}

TEST_CASE("softmax scale defaults to 1/sqrt(d_h)") {
  auto c = make_config(Mechanism::kMHA, 2, 16);
  CHECK(c.scale() == doctest::Approx(0.25));
  c.softmax_scale = 0.5;
  CHECK(c.scale() == 0.5);
}

}  // namespace
}  // namespace lrkv
