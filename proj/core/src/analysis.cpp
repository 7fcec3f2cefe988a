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

#include "dima/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <thread>
#include <unordered_map>

#include <sys/resource.h>

#include <boost/math/special_functions/beta.hpp>

#include "dima/monitor.hpp"

namespace dima {

const char* to_string(Decision d) {
  switch (d) {
    case Decision::Schedulable: return "Schedulable";
    case Decision::PassesSmc: return "PassesSMC";
    case Decision::NonSchedulable: return "NonSchedulable";
    case Decision::Inconclusive: return "Inconclusive";
  }
  return "?";
}

int exit_code(Decision d) {
  switch (d) {
    case Decision::Schedulable:
    case Decision::PassesSmc: return 0;
    case Decision::NonSchedulable: return 1;
    case Decision::Inconclusive: return 3;
  }
  return 3;
}

namespace {

unsigned resolve_workers(unsigned w) {
  if (w > 0) return w;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

double elapsed_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::uint64_t peak_rss_bytes() {
  rusage ru{};
  getrusage(RUSAGE_SELF, &ru);
  return static_cast<std::uint64_t>(ru.ru_maxrss) * 1024;
}

}  // namespace

// ---------------------------------------------------------------------------
// Statistics

void validate(const SmcQuery& q) {
  if (!(q.theta > 0.0 && q.theta < 1.0)) throw ConfigError("theta must lie in (0, 1)");
  if (!(q.alpha > 0.0 && q.alpha < 0.5)) throw ConfigError("alpha must lie in (0, 0.5)");
  if (!(q.beta > 0.0 && q.beta < 0.5)) throw ConfigError("beta must lie in (0, 0.5)");
  if (!(q.delta > 0.0)) throw ConfigError("delta must be positive");
  if (!(q.theta + 2.0 * q.delta < 1.0)) throw ConfigError("theta + 2*delta must be below 1");
  if (q.max_runs < 1) throw ConfigError("max_runs must be at least 1");
  if (q.horizon <= 0) throw ConfigError("horizon must be positive");
}

std::int64_t runs_for_bound(double theta) {
  // Upper bound at 0/n is 1 - 0.025^(1/n).
  return static_cast<std::int64_t>(std::floor(std::log(0.025) / std::log1p(-theta))) + 1;
}

BinomialInterval clopper_pearson(std::int64_t x, std::int64_t n, double confidence) {
  if (n <= 0 || x < 0 || x > n) throw std::invalid_argument("clopper_pearson: need 0 <= x <= n, n >= 1");
  const double a = 1.0 - confidence;
  const auto xd = static_cast<double>(x);
  const auto nd = static_cast<double>(n);
  BinomialInterval ci;
  ci.low = x == 0 ? 0.0 : boost::math::ibeta_inv(xd, nd - xd + 1.0, a / 2.0);
  ci.high = x == n ? 1.0 : boost::math::ibeta_inv(xd + 1.0, nd - xd, 1.0 - a / 2.0);
  return ci;
}

namespace {

/// Runs seeds [first, first + count) on a pool and returns their verdicts in
/// seed order.
std::vector<Verdict> run_batch(const Model& model, std::uint64_t first, std::int64_t count, Micros horizon,
                               unsigned workers) {
  std::vector<Verdict> out(static_cast<std::size_t>(count));
  std::atomic<std::int64_t> next{0};
  auto work = [&] {
    for (std::int64_t i; (i = next.fetch_add(1)) < count;)
      out[static_cast<std::size_t>(i)] = run(model, first + static_cast<std::uint64_t>(i), horizon);
  };
  const unsigned n = std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::int64_t>(count, 1)));
  std::vector<std::thread> pool;
  for (unsigned k = 1; k < n; ++k) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  return out;
}

Trace witness_for_seed(const Model& model, std::uint64_t seed, Micros horizon) {
  Trace tr;
  run(model, seed, horizon, &tr);
  return tr;
}

}  // namespace

AnalysisReport smc_test(const SystemConfig& cfg, const SmcQuery& q) {
  validate(q);
  const auto t0 = std::chrono::steady_clock::now();
  const Model model(cfg, Scope::global());
  const unsigned workers = resolve_workers(q.workers);
  const double p0 = q.theta;
  const double p1 = q.theta + 2.0 * q.delta;
  const double lower = std::log(q.beta / (1.0 - q.alpha));
  const double step_pass = std::log((1.0 - p1) / (1.0 - p0));
  const std::int64_t min_runs = std::min(q.max_runs, q.min_runs < 0 ? runs_for_bound(q.theta) : q.min_runs);

  AnalysisReport rep;
  rep.method = "smc";
  rep.config_hash = model.config_hash();
  rep.semantics = "stochastic runs to horizon " + format_duration(q.horizon) + ", SPRT H0 p<=" +
                  std::to_string(q.theta) + " vs H1 p>=" + std::to_string(p1);

  double llr = 0.0;
  bool h0 = false;
  std::int64_t done = 0;
  std::int64_t violations = 0;
  const std::int64_t batch = std::max<std::int64_t>(64, 16 * static_cast<std::int64_t>(workers));
  while (done < q.max_runs) {
    const std::int64_t count = std::min(batch, q.max_runs - done);
    const auto verdicts = run_batch(model, q.seed + static_cast<std::uint64_t>(done), count, q.horizon, workers);
    for (const auto& v : verdicts) {
      const std::uint64_t seed = q.seed + static_cast<std::uint64_t>(done);
      ++done;
      if (!v.ok()) {
        // One witness falsifies schedulability regardless of the test.
        ++violations;
        rep.decision = Decision::NonSchedulable;
        rep.violation = v;
        rep.witness = witness_for_seed(model, seed, q.horizon);
        break;
      }
      llr += step_pass;
      if (llr <= lower) h0 = true;
      if (h0 && done >= min_runs) break;
    }
    if (rep.decision == Decision::NonSchedulable || (h0 && done >= min_runs)) break;
  }
  if (rep.decision != Decision::NonSchedulable) {
    rep.decision = h0 ? Decision::PassesSmc : Decision::Inconclusive;
    if (h0) rep.caveats.push_back("statistical evidence only; schedulability needs exhaustive checking");
    else rep.caveats.push_back("max_runs exhausted before the test decided");
  }
  rep.stats.runs = done;
  rep.stats.violations = violations;
  rep.stats.interval = clopper_pearson(violations, done);
  rep.stats.seconds = elapsed_since(t0);
  rep.stats.memory_bytes = peak_rss_bytes();
  return rep;
}

Estimate smc_estimate(const SystemConfig& cfg, Micros horizon, std::int64_t runs, unsigned workers,
                      std::uint64_t seed) {
  if (runs < 1) throw ConfigError("runs must be at least 1");
  const Model model(cfg, Scope::global());
  const auto verdicts = run_batch(model, seed, runs, horizon, resolve_workers(workers));
  Estimate e;
  e.runs = runs;
  e.violations = std::count_if(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return !v.ok(); });
  e.interval = clopper_pearson(e.violations, e.runs);
  return e;
}

// ---------------------------------------------------------------------------
// Exhaustive exploration

Micros default_mc_horizon(const Model& model) {
  Micros h = 1;
  auto fold = [&](Micros p) {
    if (p > 0) h = std::lcm(h, p);
  };
  for (const auto& p : model.partitions) fold(p.sched->major_frame);
  for (const auto& t : model.tasks)
    if (t.spec->is_periodic()) fold(t.spec->separation());
  for (const auto& i : model.interfaces)
    if (const auto* p = std::get_if<PeriodicMsgPattern>(&i.spec.pattern)) fold(p->period);
  constexpr Micros cap = 400 * kMillis;
  return h > cap / 2 ? cap : 2 * h;
}

namespace {

void check_tick(const Model& model, Micros tick, Micros horizon) {
  if (tick <= 0) throw ConfigError("tick must be positive");
  for (Micros c : model.constants())
    if (c != kNever && c % tick != 0)
      throw ConfigError("tick " + std::to_string(tick) + "us does not divide constant " + std::to_string(c) + "us");
  if (horizon % tick != 0) throw ConfigError("horizon must be a multiple of the tick");
}

/// States of one time layer. With dominance enabled, states that differ only
/// in monotone fields share a key and only the non-dominated ones are kept.
/// An earlier sporadic release allows every later behaviour and an earlier
/// deadline; an older sample or a fuller destination queue only makes the
/// refresh and overflow checks fail sooner.
struct Bucket {
  struct Node {
    State state;
    std::int64_t path;
    bool alive = true;
  };
  std::unordered_map<std::string, std::vector<std::size_t>> index;
  std::vector<Node> nodes;
};

class Store {
 public:
  Store(const Model& model, bool dominance) : dominance_(dominance) {
    if (!dominance) return;
    for (std::size_t i = 0; i < model.tasks.size(); ++i)
      if (!model.tasks[i].spec->is_periodic()) sporadic_.push_back(i);
    for (std::size_t m = 0; m < model.messages.size(); ++m)
      for (std::size_t d = 0; d < model.messages[m].dests.size(); ++d) ports_.emplace_back(m, d);
  }

  /// Returns true when the state was stored, false when an equal or
  /// dominating state is already present.
  bool insert(Bucket& b, State&& s, std::int64_t path) {
    score_.clear();
    if (dominance_) {
      State reduced = s;
      for (std::size_t i : sporadic_) {
        auto& t = reduced.tasks[i];
        score_.push_back(t.next_release);
        t.release = t.nominal = t.next_release = 0;
      }
      for (const auto& [m, d] : ports_) {
        auto& port = reduced.messages[m].dests[d].port;
        if (port.sampling) {
          score_.push_back(port.last_reset == kNotWritten ? kNever
                           : port.last_reset == kStale    ? std::numeric_limits<Micros>::min()
                                                          : port.last_reset);
          port.last_reset = 0;
        } else {
          score_.push_back(-static_cast<Micros>(port.buf));
          port.buf = 0;
        }
      }
      encode(reduced, key_);
    } else {
      encode(s, key_);
    }
    auto& slots = b.index[key_];
    for (std::size_t k : slots)
      if (b.nodes[k].alive && compare(b.nodes[k].state) <= 0) return false;
    for (std::size_t k : slots)
      if (b.nodes[k].alive && compare(b.nodes[k].state) == 1) b.nodes[k].alive = false;
    std::erase_if(slots, [&](std::size_t k) { return !b.nodes[k].alive; });
    slots.push_back(b.nodes.size());
    b.nodes.push_back({std::move(s), path, true});
    return true;
  }

 private:
  /// -1 or 0 when `old` dominates the pending score, 1 when the score
  /// dominates `old`, 2 when incomparable.
  int compare(const State& old) {
    old_.clear();
    for (std::size_t i : sporadic_) old_.push_back(old.tasks[i].next_release);
    for (const auto& [m, d] : ports_) {
      const auto& port = old.messages[m].dests[d].port;
      old_.push_back(port.sampling ? (port.last_reset == kNotWritten ? kNever
                                      : port.last_reset == kStale    ? std::numeric_limits<Micros>::min()
                                                                     : port.last_reset)
                                   : -static_cast<Micros>(port.buf));
    }
    bool le = true;
    bool ge = true;
    for (std::size_t j = 0; j < old_.size(); ++j) {
      le = le && old_[j] <= score_[j];
      ge = ge && old_[j] >= score_[j];
    }
    if (le) return 0;
    return ge ? 1 : 2;
  }

  bool dominance_;
  std::vector<std::size_t> sporadic_;
  std::vector<std::pair<std::size_t, std::size_t>> ports_;
  std::vector<Micros> score_;
  std::vector<Micros> old_;
  std::string key_;
};

/// Witness paths: parent links and the choice script of each stored state.
class PathArena {
 public:
  PathArena() { add(-1, {}); }
  std::int64_t add(std::int64_t parent, const std::vector<int>& script) {
    parent_.push_back(parent);
    offset_.push_back(pool_.size());
    pool_.insert(pool_.end(), script.begin(), script.end());
    return static_cast<std::int64_t>(parent_.size() - 1);
  }
  [[nodiscard]] std::int64_t size() const { return static_cast<std::int64_t>(parent_.size()); }
  [[nodiscard]] std::vector<std::vector<int>> scripts(std::int64_t leaf, std::vector<int> last) const {
    std::vector<std::vector<int>> out{std::move(last)};
    for (std::int64_t p = leaf; p > 0; p = parent_[static_cast<std::size_t>(p)]) {
      const auto i = static_cast<std::size_t>(p);
      const std::size_t end = i + 1 < offset_.size() ? offset_[i + 1] : pool_.size();
      out.emplace_back(pool_.begin() + static_cast<std::ptrdiff_t>(offset_[i]),
                       pool_.begin() + static_cast<std::ptrdiff_t>(end));
    }
    std::reverse(out.begin(), out.end());
    return out;
  }

 private:
  std::vector<std::int64_t> parent_;
  std::vector<std::size_t> offset_;
  std::vector<int> pool_;
};

struct Exploration {
  std::uint64_t states = 0;
  std::uint64_t transitions = 0;
  std::uint64_t peak_frontier = 0;
  bool budget_exceeded = false;
  std::optional<Verdict> first;
  std::vector<std::vector<int>> witness;
  std::vector<ViolationKey> all;
};

/// Breadth-first over time-ordered layers. Each macro-step processes every
/// event of one instant under one choice script, then advances time.
Exploration explore(const Model& model, const SimOptions& opts, std::uint64_t budget, bool collect_all,
                    const SendObserver& observer = {}) {
  Exploration ex;
  ScriptChooser chooser;
  Simulator sim(model, chooser, opts);
  if (observer) sim.set_send_observer(observer);

  PathArena arena;  // node 0 is the initial state
  std::map<Micros, Bucket> frontier;
  Store store(model, !collect_all && !observer);
  {
    State init = sim.initial();
    const Micros t = init.now;
    store.insert(frontier[t], std::move(init), 0);
    ex.states = 1;
  }
  std::set<ViolationKey> seen;
  std::vector<int> script;
  while (!frontier.empty()) {
    auto it = frontier.begin();
    Bucket layer = std::move(it->second);
    frontier.erase(it);
    layer.index.clear();
    for (auto& node : layer.nodes) {
      if (!node.alive) continue;
      const std::int64_t path = node.path;
      script.clear();
      for (;;) {
        State c = node.state;
        chooser.reset(script);
        std::optional<Verdict> v;
        bool more = false;
        try {
          v = sim.process_instant(c);
          if (!v) more = sim.advance(c);
        } catch (const InvariantFault& e) {
          v = Verdict::faulted(FaultKind::InvariantFault, c.now, "engine", e.what());
        }
        ++ex.transitions;
        if (v) {
          if (!ex.first) {
            ex.first = v;
            ex.witness = arena.scripts(path, chooser.taken());
            if (!collect_all) return ex;
          }
          if (v->violation()) {
            const ViolationKey k{v->kind, v->time, v->subject};
            if (seen.insert(k).second) ex.all.push_back(k);
          }
        } else if (more) {
          sim.normalize(c);
          const Micros t = c.now;
          if (store.insert(frontier[t], std::move(c), arena.size())) {
            if (ex.states >= budget) {
              ex.budget_exceeded = true;
              return ex;
            }
            arena.add(path, chooser.taken());
            ++ex.states;
          }
        }
        // Odometer over the choices met in this macro-step.
        const auto& taken = chooser.taken();
        const auto& ar = chooser.arities();
        auto i = static_cast<std::ptrdiff_t>(taken.size()) - 1;
        while (i >= 0 && taken[static_cast<std::size_t>(i)] + 1 >= ar[static_cast<std::size_t>(i)]) --i;
        if (i < 0) break;
        script.assign(taken.begin(), taken.begin() + i);
        script.push_back(taken[static_cast<std::size_t>(i)] + 1);
      }
    }
    std::uint64_t pending = 0;
    for (const auto& [t, b] : frontier) pending += b.nodes.size();
    ex.peak_frontier = std::max(ex.peak_frontier, pending);
  }
  std::sort(ex.all.begin(), ex.all.end());
  return ex;
}

}  // namespace

SendEnvelopes send_envelopes(const SystemConfig& cfg, Micros tick, Branching branching, unsigned workers) {
  std::vector<std::string> sources;
  for (const auto& m : cfg.messages)
    if (sender_of(cfg, m.id) && std::find(sources.begin(), sources.end(), m.source) == sources.end())
      sources.push_back(m.source);
  std::vector<SendEnvelopes> partial(sources.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t k; (k = next.fetch_add(1)) < sources.size();) {
      const Model model(cfg, Scope::tasks_only(sources[k]));
      SimOptions opts;
      opts.tick = tick;
      opts.branching = branching;
      opts.horizon = default_mc_horizon(model);
      check_tick(model, tick, opts.horizon);
      auto& env = partial[k];
      explore(model, opts, std::numeric_limits<std::uint64_t>::max(), true, [&](int msg, Micros off) {
        const std::string& id = model.messages[static_cast<std::size_t>(msg)].spec->id;
        auto [e, fresh] = env.try_emplace(id, Interval{off, off});
        if (!fresh) {
          e->second.min = std::min(e->second.min, off);
          e->second.max = std::max(e->second.max, off);
        }
      });
    }
  };
  const unsigned n = std::min<unsigned>(resolve_workers(workers), static_cast<unsigned>(sources.size()));
  std::vector<std::thread> pool;
  for (unsigned k = 1; k < n; ++k) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  SendEnvelopes out;
  for (auto& p : partial) out.merge(p);
  return out;
}

AnalysisReport mc_explore(const Model& model, const McQuery& q) {
  const auto t0 = std::chrono::steady_clock::now();
  SimOptions opts;
  opts.tick = q.tick;
  opts.branching = q.branching;
  opts.horizon = q.horizon > 0 ? q.horizon : default_mc_horizon(model);
  check_tick(model, q.tick, opts.horizon);

  const Exploration ex = explore(model, opts, q.budget, q.collect_all);

  AnalysisReport rep;
  rep.method = "mc";
  rep.scope = model.scope().name();
  rep.config_hash = model.config_hash();
  rep.semantics = std::string("discrete time, tick ") + format_duration(q.tick) + ", " + to_string(q.branching) +
                  " branching, horizon " + format_duration(opts.horizon);
  rep.caveats.push_back("behaviours between ticks are not covered");
  if (model.scope().kind == Scope::Kind::Slice)
    rep.caveats.push_back("partition checked against message-interface environments");
  rep.all_violations = ex.all;
  rep.stats.states = ex.states;
  rep.stats.transitions = ex.transitions;
  rep.stats.peak_frontier = ex.peak_frontier;

  if (ex.first) {
    rep.decision = Decision::NonSchedulable;
    TraceHeader h;
    h.config_hash = model.config_hash();
    h.horizon = opts.horizon;
    h.mode = "mc";
    h.scope = model.scope().name();
    h.tick = q.tick;
    h.branching = to_string(q.branching);
    h.choices = ex.witness;
    if (model.scope().kind == Scope::Kind::Slice) {
      const auto& sl = model.scope().slice;
      for (const auto* group : {&sl.inbound, &sl.colocated})
        for (const auto& i : *group) {
          if (!i.envelope_derived) continue;
          h.envelopes[i.message] = std::holds_alternative<PeriodicMsgPattern>(i.pattern)
                                       ? std::get<PeriodicMsgPattern>(i.pattern).offset
                                       : std::get<SporadicMsgPattern>(i.pattern).offset;
        }
    }
    rep.envelopes = h.envelopes;
    rep.witness = replay(model.config(), h);
    rep.violation = rep.witness->verdict;
  } else if (ex.budget_exceeded) {
    rep.decision = Decision::Inconclusive;
    rep.caveats.push_back("state budget of " + std::to_string(q.budget) + " exceeded");
  } else {
    rep.decision = Decision::Schedulable;
  }
  rep.stats.seconds = elapsed_since(t0);
  rep.stats.memory_bytes = peak_rss_bytes();
  return rep;
}

namespace {

Model slice_model(const SystemConfig& cfg, const std::string& pid, const SendEnvelopes& env) {
  if (!cfg.partitions.count(pid)) throw ConfigError("unknown partition " + pid);
  return Model(cfg, Scope::of_slice(build_slice(cfg, pid, env)));
}

}  // namespace

AnalysisReport mc_check(const SystemConfig& cfg, const McQuery& q) {
  if (!q.partition) return mc_explore(Model(cfg, Scope::global()), q);
  const SendEnvelopes env = send_envelopes(cfg, q.tick, q.branching, q.workers);
  return mc_explore(slice_model(cfg, *q.partition, env), q);
}

std::vector<AnalysisReport> mc_check_all(const SystemConfig& cfg, McQuery q) {
  const SendEnvelopes env = send_envelopes(cfg, q.tick, q.branching, q.workers);
  const auto pids = cfg.partition_ids();
  std::vector<AnalysisReport> out(pids.size());
  std::vector<std::exception_ptr> errors(pids.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t k; (k = next.fetch_add(1)) < pids.size();) {
      try {
        McQuery pq = q;
        pq.partition = pids[k];
        out[k] = mc_explore(slice_model(cfg, pids[k], env), pq);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  const unsigned n = std::min<unsigned>(resolve_workers(q.workers), static_cast<unsigned>(pids.size()));
  std::vector<std::thread> pool;
  for (unsigned k = 1; k < n; ++k) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

AnalysisReport compositional_verdict(const SystemConfig& cfg, const std::vector<AnalysisReport>& reports) {
  const std::string hash = config_hash_hex(cfg);
  AnalysisReport rep;
  rep.method = "mc";
  rep.scope = "compositional";
  rep.config_hash = hash;
  bool any_non = false;
  bool any_inconclusive = false;
  for (const auto& pid : cfg.partition_ids()) {
    auto it = std::find_if(reports.begin(), reports.end(), [&](const AnalysisReport& r) { return r.scope == pid; });
    if (it == reports.end()) throw ConfigError("missing report for partition " + pid);
    if (it->config_hash != hash) throw ConfigError("report for " + pid + " was produced from another configuration");
    if (it->decision == Decision::NonSchedulable && !any_non) {
      any_non = true;
      rep.violation = it->violation;
      rep.witness = it->witness;
    }
    if (it->decision == Decision::Inconclusive) any_inconclusive = true;
    rep.stats.states += it->stats.states;
    rep.stats.transitions += it->stats.transitions;
    rep.stats.seconds += it->stats.seconds;
    rep.stats.memory_bytes = std::max(rep.stats.memory_bytes, it->stats.memory_bytes);
    if (rep.semantics.empty()) rep.semantics = it->semantics;
  }
  rep.decision = any_non ? Decision::NonSchedulable
                         : any_inconclusive ? Decision::Inconclusive
                                            : Decision::Schedulable;
  return rep;
}

}  // namespace dima
