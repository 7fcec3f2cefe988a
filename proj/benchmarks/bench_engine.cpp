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

#include <benchmark/benchmark.h>

#include "dima/analysis.hpp"
#include "dima/config.hpp"
#include "dima/engine.hpp"

namespace {

using namespace dima;

const SystemConfig& case_config(int n) {
  static const SystemConfig c1 = load_config(std::string(DIMA_CONFIG_DIR) + "/case1.json");
  static const SystemConfig c2 = load_config(std::string(DIMA_CONFIG_DIR) + "/case2.json");
  return n == 1 ? c1 : c2;
}

void BM_SimulateRun(benchmark::State& state) {
  const Model model(case_config(static_cast<int>(state.range(0))), Scope::global());
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(run(model, seed++, 100 * kMillis));
}
BENCHMARK(BM_SimulateRun)->Arg(1)->Arg(2);

void BM_SimulateRunWithTrace(benchmark::State& state) {
  const Model model(case_config(2), Scope::global());
  std::uint64_t seed = 0;
  for (auto _ : state) {
    Trace tr;
    benchmark::DoNotOptimize(run(model, seed++, 100 * kMillis, &tr));
  }
}
BENCHMARK(BM_SimulateRunWithTrace);

void BM_EncodeState(benchmark::State& state) {
  const Model model(case_config(2), Scope::global());
  RandomChooser chooser(1);
  Simulator sim(model, chooser, {});
  State s = sim.initial();
  for (int i = 0; i < 200 && !sim.process_instant(s) && sim.advance(s); ++i) {
  }
  std::string key;
  for (auto _ : state) {
    encode(s, key);
    benchmark::DoNotOptimize(key.data());
  }
}
BENCHMARK(BM_EncodeState);

void BM_McPartition(benchmark::State& state) {
  McQuery q;
  q.partition = "P1";
  q.workers = 1;
  for (auto _ : state) benchmark::DoNotOptimize(mc_check(case_config(2), q));
}
BENCHMARK(BM_McPartition)->Unit(benchmark::kMillisecond)->Iterations(1);

}  // namespace

BENCHMARK_MAIN();
