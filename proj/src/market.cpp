#include "gridsettle/market.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "gridsettle/error.hpp"

namespace gridsettle::market {
namespace {

bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

// Numeric ids compare by value, anything else lexicographically.
bool id_less(std::string_view a, std::string_view b) {
  if (all_digits(a) && all_digits(b)) {
    auto strip = [](std::string_view s) {
      while (s.size() > 1 && s.front() == '0') s.remove_prefix(1);
      return s;
    };
    a = strip(a);
    b = strip(b);
    if (a.size() != b.size()) return a.size() < b.size();
  }
  return a < b;
}

std::size_t reference_bus(const grid::PowerSystem& system) {
  std::size_t ref = 0;
  for (std::size_t b = 1; b < system.buses.size(); ++b) {
    if (id_less(system.buses[b].id, system.buses[ref].id)) ref = b;
  }
  return ref;
}

template <class T>
std::vector<std::vector<T>> table(std::size_t rows, std::size_t cols, T value) {
  return std::vector<std::vector<T>>(rows, std::vector<T>(cols, value));
}

MarketResult empty_result(Stage stage, std::size_t first_hour, std::size_t hours, std::size_t gens,
                          std::size_t buses, std::size_t branches) {
  MarketResult r;
  r.stage = stage;
  r.first_hour = first_hour;
  r.hours = hours;
  r.dispatch = table(gens, hours, 0.0);
  r.commitments.status = table<std::uint8_t>(gens, hours, 0);
  r.commitments.startup = table<std::uint8_t>(gens, hours, 0);
  r.commitments.shutdown = table<std::uint8_t>(gens, hours, 0);
  r.flows = table(branches, hours, 0.0);
  r.angles = table(buses, hours, 0.0);
  r.shed = table(buses, hours, 0.0);
  return r;
}

MarketResult read_solution(const UcProblem& p, const lp::Solution& sol) {
  auto r = empty_result(p.stage, p.first_hour, p.hours, p.generators, p.buses, p.branches);
  r.objective = sol.objective;
  const auto& x = sol.x;
  for (std::size_t g = 0; g < p.generators; ++g) {
    std::uint8_t prev = p.initial_on[g];
    for (std::size_t t = 0; t < p.hours; ++t) {
      const bool committable = p.u[g][t] != kNone;
      const double on = committable ? std::round(x[p.u[g][t]]) : 1.0;
      double mw = p.q_min[g][t] * on;
      for (std::size_t k = 0; k < p.seg_count[g][t]; ++k) mw += x[p.seg_first[g][t] + k];
      r.dispatch[g][t] = mw;
      const auto status = static_cast<std::uint8_t>(on > 0.5);
      r.commitments.status[g][t] = status;
      r.commitments.startup[g][t] = status > prev;
      r.commitments.shutdown[g][t] = status < prev;
      prev = status;
    }
  }
  for (std::size_t b = 0; b < p.buses; ++b) {
    for (std::size_t t = 0; t < p.hours; ++t) {
      r.angles[b][t] = x[p.theta[b][t]];
      r.shed[b][t] = x[p.shed[b][t]];
    }
  }
  for (std::size_t l = 0; l < p.branches; ++l) {
    for (std::size_t t = 0; t < p.hours; ++t) {
      r.flows[l][t] =
          p.flow_factor[l] * (x[p.theta[p.branch_from[l]][t]] - x[p.theta[p.branch_to[l]][t]]);
    }
  }
  return r;
}

void append_hours(MarketResult& into, const MarketResult& from, std::size_t first, std::size_t count) {
  auto append = [&](auto& dst, const auto& src) {
    for (std::size_t i = 0; i < src.size(); ++i) {
      dst[i].insert(dst[i].end(), src[i].begin() + static_cast<std::ptrdiff_t>(first),
                    src[i].begin() + static_cast<std::ptrdiff_t>(first + count));
    }
  };
  append(into.dispatch, from.dispatch);
  append(into.commitments.status, from.commitments.status);
  append(into.commitments.startup, from.commitments.startup);
  append(into.commitments.shutdown, from.commitments.shutdown);
  append(into.flows, from.flows);
  append(into.angles, from.angles);
  append(into.lmps, from.lmps);
  append(into.shed, from.shed);
  into.hours += count;
}

MarketResult empty_like(Stage stage, const grid::PowerSystem& system) {
  auto r = empty_result(stage, 0, 0, system.generators.size(), system.buses.size(),
                        system.branches.size());
  r.lmps = table(system.buses.size(), 0, 0.0);
  return r;
}

}  // namespace

const OfferHour& OfferCurve::at(std::size_t hour) const {
  if (hours.empty()) throw Error(fmt::format("offer curve of {} has no hours", generator));
  return hours[std::min(hour, hours.size() - 1)];
}

OfferCurve static_offer(const grid::Generator& gen, std::size_t hours) {
  OfferHour h{gen.cost_quadratic, gen.cost_linear, gen.cost_constant, gen.p_max, gen.p_min};
  return OfferCurve{gen.id, std::vector<OfferHour>(hours, h)};
}

OfferMap static_offers(const grid::PowerSystem& system) {
  OfferMap out;
  for (const auto& g : system.generators) out[g.id] = static_offer(g, system.hours.size());
  return out;
}

OfferMap with_caps(const OfferMap& offers, const std::vector<scenario::TruthTrace>& caps) {
  OfferMap out = offers;
  for (const auto& cap : caps) {
    auto it = out.find(cap.generator);
    if (it == out.end()) throw Error(fmt::format("missing offer for generator {}", cap.generator));
    auto& hours = it->second.hours;
    if (hours.size() < cap.trace.size()) hours.resize(cap.trace.size(), hours.back());
    for (std::size_t h = 0; h < cap.trace.size(); ++h) {
      hours[h].q_max = cap.trace[h];
      hours[h].q_min = std::min(hours[h].q_min, cap.trace[h]);
    }
  }
  return out;
}

InitialState default_initial_state(const grid::PowerSystem& system) {
  InitialState out;
  for (const auto& g : system.generators) {
    UnitState s;
    s.on = !g.committable;
    s.hours_in_state = g.committable ? g.min_down : 0;
    out.push_back(s);
  }
  return out;
}

std::string_view to_string(Stage stage) {
  return stage == Stage::day_ahead ? "day_ahead" : "real_time";
}

std::vector<double> segment_slopes(const OfferHour& offer, int segments) {
  const double span = offer.q_max - offer.q_min;
  if (!(span > 0.0)) return {};
  if (offer.a == 0.0) return {offer.b};
  const int k = std::max(segments, 1);
  const double width = span / k;
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    const double lo = offer.q_min + width * i;
    const double hi = offer.q_min + width * (i + 1);
    out.push_back(offer.b + offer.a * (lo + hi));
  }
  return out;
}

UcProblem build_uc_problem(const UcInput& input) {
  if (input.system == nullptr || input.offers == nullptr) throw Error("unit commitment input is incomplete");
  const auto& sys = *input.system;
  const auto& opt = input.options;
  const std::size_t G = sys.generators.size();
  const std::size_t B = sys.buses.size();
  const std::size_t L = sys.branches.size();
  const std::size_t T = input.hours;
  const std::size_t clock = sys.hours.size();
  if (T == 0) throw Error("empty horizon");
  if (clock == 0) throw Error("system has no hours");
  if (input.initial.size() != G) throw Error("initial state does not match the fleet");
  auto hour_of = [&](std::size_t t) { return std::min(input.first_hour + t, clock - 1); };

  UcProblem p;
  p.stage = input.stage;
  p.first_hour = input.first_hour;
  p.hours = T;
  p.generators = G;
  p.buses = B;
  p.branches = L;
  p.u = p.v = p.w = table(G, T, kNone);
  p.seg_first = table(G, T, kNone);
  p.seg_count = table<std::size_t>(G, T, 0);
  p.q_min = table(G, T, 0.0);
  p.theta = p.shed = p.balance_row = table(B, T, kNone);
  p.load = table(B, T, 0.0);
  p.flow_row = table(L, T, kNone);
  auto& lp = p.lp;

  std::vector<const OfferCurve*> curves;
  for (const auto& g : sys.generators) {
    auto it = input.offers->find(g.id);
    if (it == input.offers->end()) throw Error(fmt::format("missing offer for generator {}", g.id));
    curves.push_back(&it->second);
    p.initial_on.push_back(0);
  }

  // Fixed commitments: caller's first, then whatever the initial state forces.
  auto fixed = table<std::int8_t>(G, T, -1);
  std::vector<bool> fully_fixed(G, false);
  for (std::size_t g = 0; g < G; ++g) {
    const auto& gen = sys.generators[g];
    const auto& st = input.initial[g];
    p.initial_on[g] = gen.committable ? st.on : 1;
    if (!gen.committable) continue;
    bool all = true;
    for (std::size_t t = 0; t < T; ++t) {
      if (!input.fixed.empty()) fixed[g][t] = input.fixed.at(g).at(t);
      all = all && fixed[g][t] >= 0;
      if (fixed[g][t] >= 0) continue;
      const auto ti = static_cast<int>(t);
      if (st.on && ti < gen.min_up - st.hours_in_state) fixed[g][t] = 1;
      if (!st.on && ti < gen.min_down - st.hours_in_state) fixed[g][t] = 0;
    }
    fully_fixed[g] = all;
  }

  for (std::size_t g = 0; g < G; ++g) {
    const auto& gen = sys.generators[g];
    for (std::size_t t = 0; t < T; ++t) {
      const auto& offer = curves[g]->at(hour_of(t));
      if (offer.a < 0.0) throw ValidationError(fmt::format("offer of {} has a < 0", gen.id));
      if (offer.q_min > offer.q_max) {
        throw ValidationError(fmt::format("offer of {} has q_min {} above q_max {}", gen.id,
                                          offer.q_min, offer.q_max));
      }
      p.q_min[g][t] = offer.q_min;
      const double fixed_cost = offer.c + offer.a * offer.q_min * offer.q_min + offer.b * offer.q_min;
      if (gen.committable) {
        const double lo = fixed[g][t] < 0 ? 0.0 : fixed[g][t];
        const double hi = fixed[g][t] < 0 ? 1.0 : fixed[g][t];
        p.u[g][t] = lp.add_column(fixed_cost, lo, hi, true, 1);
        // v <= u and w <= 1 - u make integral u pin both indicators; without
        // them a simultaneous start and stop would buy ramp headroom.
        p.v[g][t] = lp.add_column(gen.startup_cost, 0.0, fixed[g][t] < 0 ? 1.0 : hi);
        p.w[g][t] = lp.add_column(gen.shutdown_cost, 0.0, fixed[g][t] < 0 ? 1.0 : 1.0 - lo);
      } else {
        lp.objective_offset += fixed_cost;
      }
      const auto slopes = segment_slopes(offer, opt.pwl_segments);
      const double width = slopes.empty() ? 0.0 : (offer.q_max - offer.q_min) / static_cast<double>(slopes.size());
      p.seg_count[g][t] = slopes.size();
      for (std::size_t k = 0; k < slopes.size(); ++k) {
        const auto col = lp.add_column(slopes[k], 0.0, width);
        if (k == 0) p.seg_first[g][t] = col;
      }
    }
  }

  const auto loads = sys.load_matrix();
  const std::size_t ref = B == 0 ? 0 : reference_bus(sys);
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t t = 0; t < T; ++t) {
      p.load[b][t] = loads[b][hour_of(t)];
      p.theta[b][t] = b == ref ? lp.add_column(0.0, 0.0, 0.0) : lp.add_column(0.0, -lp::kInfinity, lp::kInfinity);
      p.shed[b][t] = lp.add_column(opt.shed_cost, 0.0, p.load[b][t]);
    }
  }
  for (const auto& br : sys.branches) {
    p.branch_from.push_back(*sys.bus_position(br.from_bus));
    p.branch_to.push_back(*sys.bus_position(br.to_bus));
    p.flow_factor.push_back(opt.base_mva / br.reactance_pu);
  }

  // p_t = q_min u_t + sum of segments (u_t = 1 for non-committable units).
  auto add_output = [&](std::vector<lp::Entry>& row, double& constant, std::size_t g, std::size_t t,
                        double coef) {
    if (p.u[g][t] != kNone) {
      if (p.q_min[g][t] != 0.0) row.push_back({p.u[g][t], coef * p.q_min[g][t]});
    } else {
      constant += coef * p.q_min[g][t];
    }
    for (std::size_t k = 0; k < p.seg_count[g][t]; ++k) row.push_back({p.seg_first[g][t] + k, coef});
  };
  // u_{t} for t >= 0, or the initial status for t = -1.
  auto add_status = [&](std::vector<lp::Entry>& row, double& constant, std::size_t g, long t, double coef) {
    if (t < 0) {
      constant += coef * p.initial_on[g];
    } else if (p.u[g][static_cast<std::size_t>(t)] != kNone) {
      row.push_back({p.u[g][static_cast<std::size_t>(t)], coef});
    } else {
      constant += coef;
    }
  };

  std::vector<lp::Entry> row;
  for (std::size_t t = 0; t < T; ++t) {
    std::vector<std::vector<lp::Entry>> bus_rows(B);
    std::vector<double> bus_const(B, 0.0);
    for (std::size_t g = 0; g < G; ++g) {
      const auto b = *sys.bus_position(sys.generators[g].bus);
      add_output(bus_rows[b], bus_const[b], g, t, 1.0);
    }
    for (std::size_t l = 0; l < L; ++l) {
      const double k = p.flow_factor[l];
      const auto f = p.branch_from[l];
      const auto to = p.branch_to[l];
      bus_rows[f].push_back({p.theta[f][t], -k});
      bus_rows[f].push_back({p.theta[to][t], k});
      bus_rows[to].push_back({p.theta[f][t], k});
      bus_rows[to].push_back({p.theta[to][t], -k});
    }
    for (std::size_t b = 0; b < B; ++b) {
      bus_rows[b].push_back({p.shed[b][t], 1.0});
      const double rhs = p.load[b][t] - bus_const[b];
      p.balance_row[b][t] = lp.add_row(rhs, rhs, bus_rows[b]);
    }
    for (std::size_t l = 0; l < L; ++l) {
      const double k = p.flow_factor[l];
      const double cap = sys.branches[l].capacity_mw;
      p.flow_row[l][t] = lp.add_row(-cap, cap, {{p.theta[p.branch_from[l]][t], k},
                                                {p.theta[p.branch_to[l]][t], -k}});
    }
  }

  for (std::size_t g = 0; g < G; ++g) {
    const auto& gen = sys.generators[g];
    const auto& st = input.initial[g];
    for (std::size_t t = 0; t < T; ++t) {
      const long tl = static_cast<long>(t);
      if (gen.committable) {
        if (p.seg_count[g][t] > 0) {
          row.clear();
          for (std::size_t k = 0; k < p.seg_count[g][t]; ++k) row.push_back({p.seg_first[g][t] + k, 1.0});
          const auto& offer = curves[g]->at(hour_of(t));
          row.push_back({p.u[g][t], -(offer.q_max - offer.q_min)});
          lp.add_row(-lp::kInfinity, 0.0, row);
        }
        row.clear();
        double constant = 0.0;
        add_status(row, constant, g, tl, 1.0);
        add_status(row, constant, g, tl - 1, -1.0);
        row.push_back({p.v[g][t], -1.0});
        row.push_back({p.w[g][t], 1.0});
        lp.add_row(-constant, -constant, row);
        if (fixed[g][t] < 0) {
          lp.add_row(-lp::kInfinity, 0.0, {{p.v[g][t], 1.0}, {p.u[g][t], -1.0}});
          lp.add_row(-lp::kInfinity, 1.0, {{p.w[g][t], 1.0}, {p.u[g][t], 1.0}});
        }

        if (!fully_fixed[g]) {
          const long up = std::max(1, gen.min_up);
          const long down = std::max(1, gen.min_down);
          if (up > 1) {
            row.clear();
            for (long s = std::max(0L, tl - up + 1); s <= tl; ++s) row.push_back({p.v[g][static_cast<std::size_t>(s)], 1.0});
            row.push_back({p.u[g][t], -1.0});
            lp.add_row(-lp::kInfinity, 0.0, row);
          }
          if (down > 1) {
            row.clear();
            for (long s = std::max(0L, tl - down + 1); s <= tl; ++s) row.push_back({p.w[g][static_cast<std::size_t>(s)], 1.0});
            row.push_back({p.u[g][t], 1.0});
            lp.add_row(-lp::kInfinity, 1.0, row);
          }
        }
      }

      if (gen.ramp >= gen.p_max) continue;
      if (t == 0 && !st.dispatch) continue;
      // Up: p_t - p_{t-1} - R u_{t-1} - P v_t <= 0
      row.clear();
      double constant = 0.0;
      add_output(row, constant, g, t, 1.0);
      if (t == 0) {
        constant -= *st.dispatch;
      } else {
        add_output(row, constant, g, t - 1, -1.0);
      }
      add_status(row, constant, g, tl - 1, -gen.ramp);
      if (p.v[g][t] != kNone) row.push_back({p.v[g][t], -gen.p_max});
      lp.add_row(-lp::kInfinity, -constant, row);
      // Down: p_{t-1} - p_t - R u_t - P w_t <= 0
      row.clear();
      constant = 0.0;
      add_output(row, constant, g, t, -1.0);
      if (t == 0) {
        constant += *st.dispatch;
      } else {
        add_output(row, constant, g, t - 1, 1.0);
      }
      add_status(row, constant, g, tl, -gen.ramp);
      if (p.w[g][t] != kNone) row.push_back({p.w[g][t], -gen.p_max});
      lp.add_row(-lp::kInfinity, -constant, row);
    }
  }
  return p;
}

MarketResult solve_uc(const UcProblem& problem, lp::SolverContract& solver) {
  const auto sol = solver.solve_milp(problem.lp);
  if (sol.status == lp::Status::infeasible) {
    throw InfeasibleError(fmt::format("{} unit commitment infeasible for hours {}..{}",
                                      to_string(problem.stage), problem.first_hour,
                                      problem.first_hour + problem.hours - 1));
  }
  if (sol.status != lp::Status::optimal) {
    throw SolverError(fmt::format("{} unit commitment: {}", to_string(problem.stage), lp::to_string(sol.status)));
  }
  return read_solution(problem, sol);
}

MarketResult extract_lmps(const UcProblem& problem, const CommitmentSchedule& commitments,
                          lp::SolverContract& solver) {
  lp::Problem fixed = problem.lp;
  for (std::size_t g = 0; g < problem.generators; ++g) {
    for (std::size_t t = 0; t < problem.hours; ++t) {
      if (problem.u[g][t] == kNone) continue;
      const double s = commitments.status.at(g).at(t);
      fixed.set_column_bounds(problem.u[g][t], s, s);
    }
  }
  const auto sol = solver.solve_lp(fixed);
  if (sol.status != lp::Status::optimal) {
    throw InfeasibleError(fmt::format("{} pricing run for hours {}..{}: {}", to_string(problem.stage),
                                      problem.first_hour, problem.first_hour + problem.hours - 1,
                                      lp::to_string(sol.status)));
  }
  auto r = read_solution(problem, sol);
  r.lmps = table(problem.buses, problem.hours, 0.0);
  for (std::size_t b = 0; b < problem.buses; ++b) {
    for (std::size_t t = 0; t < problem.hours; ++t) r.lmps[b][t] = sol.row_duals[problem.balance_row[b][t]];
  }
  return r;
}

InitialState state_after(const MarketResult& result, std::size_t hour, const InitialState& before) {
  InitialState out = before;
  for (std::size_t g = 0; g < out.size(); ++g) {
    const auto& status = result.commitments.status[g];
    const bool on = status[hour] != 0;
    int run = 0;
    std::size_t t = hour + 1;
    while (t > 0 && (status[t - 1] != 0) == on) {
      --t;
      ++run;
    }
    if (t == 0 && before[g].on == on) run += before[g].hours_in_state;
    out[g].on = on;
    out[g].hours_in_state = run;
    out[g].dispatch = result.dispatch[g][hour];
  }
  return out;
}

MarketResult run_day_ahead(const grid::PowerSystem& system, const OfferMap& offers, std::size_t day,
                           const InitialState& initial, const UcOptions& options,
                           lp::SolverContract& solver) {
  UcInput in;
  in.system = &system;
  in.offers = &offers;
  in.first_hour = day * 24;
  in.hours = options.da_horizon;
  in.initial = initial;
  in.stage = Stage::day_ahead;
  in.options = options;
  const auto problem = build_uc_problem(in);
  const auto uc = solve_uc(problem, solver);
  auto priced = extract_lmps(problem, uc.commitments, solver);
  priced.objective = uc.objective;
  return priced;
}

DayAheadRun run_day_ahead_all(const grid::PowerSystem& system, const OfferMap& offers,
                              const UcOptions& options, lp::SolverContract& solver) {
  const std::size_t days = system.hours.days();
  if (days == 0) throw Error("system clock covers less than one day");
  if (options.da_horizon < 24) throw ConfigError("day-ahead horizon must cover at least 24 hours");
  DayAheadRun run;
  run.initial = default_initial_state(system);
  run.binding = empty_like(Stage::day_ahead, system);
  InitialState state = run.initial;
  for (std::size_t d = 0; d < days; ++d) {
    auto result = run_day_ahead(system, offers, d, state, options, solver);
    append_hours(run.binding, result, 0, 24);
    run.binding.objective += result.objective;
    state = state_after(result, 23, state);
    run.days.push_back(std::move(result));
  }
  return run;
}

std::uint8_t scheduled_status(const DayAheadRun& da, std::size_t generator, std::size_t hour) {
  const std::size_t day = hour / 24;
  if (day < da.days.size()) return da.days[day].commitments.status[generator][hour - day * 24];
  const auto& last = da.days.back();
  const std::size_t local = std::min(24 + hour - da.days.size() * 24, last.hours - 1);
  return last.commitments.status[generator][local];
}

MarketResult run_real_time(const grid::PowerSystem& system, const OfferMap& offers,
                           const DayAheadRun& da, const UcOptions& options,
                           lp::SolverContract& solver) {
  if (options.rt_horizon == 0 || options.rt_step == 0 || options.rt_step > options.rt_horizon) {
    throw ConfigError("real-time horizon and step must satisfy 0 < step <= horizon");
  }
  const std::size_t total = da.binding.hours;
  const std::size_t G = system.generators.size();
  MarketResult out = empty_like(Stage::real_time, system);
  InitialState state = da.initial;
  for (std::size_t h = 0; h < total; h += options.rt_step) {
    UcInput in;
    in.system = &system;
    in.offers = &offers;
    in.first_hour = h;
    in.hours = options.rt_horizon;
    in.initial = state;
    in.stage = Stage::real_time;
    in.options = options;
    in.fixed = table<std::int8_t>(G, options.rt_horizon, -1);
    for (std::size_t g = 0; g < G; ++g) {
      const auto& gen = system.generators[g];
      if (!gen.committable || gen.fast_start) continue;
      for (std::size_t t = 0; t < options.rt_horizon; ++t) {
        in.fixed[g][t] = static_cast<std::int8_t>(scheduled_status(da, g, h + t));
      }
    }
    const auto problem = build_uc_problem(in);
    const auto uc = solve_uc(problem, solver);
    auto priced = extract_lmps(problem, uc.commitments, solver);
    const std::size_t binding = std::min(options.rt_step, total - h);
    append_hours(out, priced, 0, binding);
    out.objective += uc.objective;
    state = state_after(priced, binding - 1, state);
  }
  return out;
}

SimulationRun simulate_real_time(const grid::PowerSystem& system, const OfferMap& offers,
                                 const DayAheadRun& da, const scenario::ScenarioMap& scenarios,
                                 std::string_view truth, const UcOptions& options,
                                 lp::SolverContract& solver) {
  std::vector<scenario::TruthTrace> caps;
  for (const auto& [gen, set] : scenarios) caps.push_back(scenario::truth_trace(set, truth));
  SimulationRun run;
  run.truth = std::string(truth);
  run.offers = offers;
  run.day_ahead = da.binding;
  run.real_time = run_real_time(system, with_caps(offers, caps), da, options, solver);
  return run;
}

SimulationRun simulate_two_settlement(const grid::PowerSystem& system, const OfferMap& offers,
                                      const scenario::ScenarioMap& scenarios,
                                      std::string_view truth, const UcOptions& options,
                                      lp::SolverContract& solver) {
  const auto da = run_day_ahead_all(system, offers, options, solver);
  return simulate_real_time(system, offers, da, scenarios, truth, options, solver);
}

InvariantCheck check_invariants(const grid::PowerSystem& system, const MarketResult& result,
                                const UcOptions& options) {
  InvariantCheck out;
  const auto loads = system.load_matrix();
  const std::size_t clock = system.hours.size();
  for (std::size_t t = 0; t < result.hours; ++t) {
    const std::size_t hour = std::min(result.first_hour + t, clock - 1);
    std::vector<double> net(system.buses.size(), 0.0);
    for (std::size_t g = 0; g < system.generators.size(); ++g) {
      net[*system.bus_position(system.generators[g].bus)] += result.dispatch[g][t];
    }
    for (std::size_t l = 0; l < system.branches.size(); ++l) {
      const auto& br = system.branches[l];
      const auto f = *system.bus_position(br.from_bus);
      const auto to = *system.bus_position(br.to_bus);
      net[f] -= result.flows[l][t];
      net[to] += result.flows[l][t];
      const double expected = options.base_mva * (result.angles[f][t] - result.angles[to][t]) / br.reactance_pu;
      out.flow = std::max(out.flow, std::abs(result.flows[l][t] - expected));
    }
    for (std::size_t b = 0; b < system.buses.size(); ++b) {
      const double residual = net[b] + result.shed[b][t] - loads[b][hour];
      out.balance = std::max(out.balance, std::abs(residual));
    }
  }
  return out;
}

}  // namespace gridsettle::market
