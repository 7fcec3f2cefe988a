/*
 * Copyright (c) 2026, The DIMA Schedulability Analyzer Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <string>

#include "dima/config.hpp"

namespace dima::test {

inline std::string config_path(const std::string& name) { return std::string(DIMA_CONFIG_DIR) + "/" + name; }

inline const SystemConfig& case1() {
  static const SystemConfig cfg = load_config(config_path("case1.json"));
  return cfg;
}

inline const SystemConfig& case2() {
  static const SystemConfig cfg = load_config(config_path("case2.json"));
  return cfg;
}

}  // namespace dima::test
