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

// Offline monitor: recomputes the first violation of a trace from its raw
// records, independently of the kernel's own checks.

#include "dima/config.hpp"
#include "dima/trace.hpp"

namespace dima {

/// Replays deadline, refresh and queue-capacity bookkeeping over the records.
/// Fault records are taken at face value. The horizon of a violation-free
/// result is the header horizon.
Verdict monitor_offline(const Trace& trace, const SystemConfig& cfg);

}  // namespace dima
