#include "fedsim/simulator/profile.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "fedsim/error.hpp"
#include "fedsim/simulator/trace.hpp"
#include "fedsim/util/json_util.hpp"

namespace fedsim::sim {

using nlohmann::json;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

LogNormalLatency LogNormalLatency::from_mean_var(double mean, double var) {
  if (!(mean > 0.0) || !(var >= 0.0)) throw ConfigError("lognormal needs mean > 0 and var >= 0");
  const double s2 = std::log1p(var / (mean * mean));
  return {std::log(mean * mean / std::sqrt(mean * mean + var)), std::sqrt(s2)};
}

bool AvailabilityIntervals::contains(VirtualTime t) const {
  auto it = std::upper_bound(intervals.begin(), intervals.end(), t,
                             [](VirtualTime v, const Interval& iv) { return v < iv.start; });
  if (it == intervals.begin()) return false;
  --it;
  return t >= it->start && t < it->end;
}

void ClientProfile::validate() const {
  if (!(drop_prob >= 0.0 && drop_prob <= 1.0)) throw ConfigError("drop_prob must be in [0, 1]");
  std::visit(overloaded{
                 [](const AvailabilityProbability& a) {
                   if (!(a.p >= 0.0 && a.p <= 1.0)) {
                     throw ConfigError("availability probability must be in [0, 1]");
                   }
                 },
                 [](const AvailabilityIntervals& a) {
                   for (std::size_t i = 0; i < a.intervals.size(); ++i) {
                     if (a.intervals[i].end <= a.intervals[i].start) {
                       throw ConfigError("availability interval must have end > start");
                     }
                     if (i > 0 && a.intervals[i].start < a.intervals[i - 1].end) {
                       throw ConfigError("availability intervals must be sorted and disjoint");
                     }
                   }
                 },
             },
             availability);
  std::visit(overloaded{
                 [](const ConstantLatency& l) {
                   if (!(l.value > 0.0) || !std::isfinite(l.value)) {
                     throw ConfigError("constant latency must be positive");
                   }
                 },
                 [](const UniformLatency& l) {
                   if (!(l.lo > 0.0 && l.hi >= l.lo) || !std::isfinite(l.hi)) {
                     throw ConfigError("uniform latency needs 0 < lo <= hi");
                   }
                 },
                 [](const LogNormalLatency& l) {
                   if (!(l.sigma >= 0.0) || !std::isfinite(l.mu)) {
                     throw ConfigError("lognormal latency needs finite mu and sigma >= 0");
                   }
                 },
                 [](const PerRoundLatency& l) {
                   if (l.values.empty()) throw ConfigError("per_round latency needs values");
                   for (auto v : l.values) {
                     if (v == 0) throw ConfigError("per_round latencies must be >= 1");
                   }
                 },
             },
             latency);
}

bool draw_available(const ClientProfile& profile, VirtualTime now, Rng& rng) {
  return std::visit(overloaded{
                        [&](const AvailabilityProbability& a) { return rng.uniform() < a.p; },
                        [&](const AvailabilityIntervals& a) { return a.contains(now); },
                    },
                    profile.availability);
}

namespace {
VirtualTime round_up(double draw) {
  if (!(draw > 1.0)) return 1;
  return static_cast<VirtualTime>(std::ceil(draw));
}
}  // namespace

VirtualTime sample_latency(const ClientProfile& profile, Rng& rng, std::size_t participation) {
  return std::visit(
      overloaded{
          [](const ConstantLatency& l) { return round_up(l.value); },
          [&](const UniformLatency& l) {
            return round_up(l.lo + (l.hi - l.lo) * rng.uniform());
          },
          [&](const LogNormalLatency& l) {
            if (l.sigma == 0.0) return round_up(std::exp(l.mu));
            std::lognormal_distribution<double> dist(l.mu, l.sigma);
            return round_up(dist(rng));
          },
          [&](const PerRoundLatency& l) {
            return l.values[std::min(participation, l.values.size() - 1)];
          },
      },
      profile.latency);
}

std::size_t sample_completeness(const ClientProfile& profile, std::size_t planned_steps,
                                Rng& rng) {
  if (planned_steps == 0) throw ConfigError("planned_steps must be >= 1");
  return std::visit(overloaded{
                        [&](const FullCompleteness&) { return planned_steps; },
                        [&](const UniformStepsCompleteness&) {
                          std::uniform_int_distribution<std::size_t> dist(1, planned_steps);
                          return dist(rng);
                        },
                    },
                    profile.completeness);
}

bool roll_drop(const ClientProfile& profile, Rng& rng) {
  return rng.uniform() < profile.drop_prob;
}

json to_json(const LatencySpec& spec) {
  return std::visit(overloaded{
                        [](const ConstantLatency& l) {
                          return json{{"kind", "constant"}, {"value", l.value}};
                        },
                        [](const UniformLatency& l) {
                          return json{{"kind", "uniform"}, {"lo", l.lo}, {"hi", l.hi}};
                        },
                        [](const LogNormalLatency& l) {
                          return json{{"kind", "lognormal"}, {"mu", l.mu}, {"sigma", l.sigma}};
                        },
                        [](const PerRoundLatency& l) {
                          return json{{"kind", "per_round"}, {"values", l.values}};
                        },
                    },
                    spec);
}

LatencySpec latency_from_json(const json& j) {
  if (j.is_number()) return ConstantLatency{j.get<double>()};
  const std::string kind = util::get_string(j, "kind", "");
  if (kind == "constant") {
    util::reject_unknown_keys(j, {"kind", "value"}, "constant latency");
    return ConstantLatency{util::get_number(j, "value", 1.0)};
  }
  if (kind == "uniform") {
    util::reject_unknown_keys(j, {"kind", "lo", "hi"}, "uniform latency");
    return UniformLatency{util::get_number(j, "lo", 1.0), util::get_number(j, "hi", 1.0)};
  }
  if (kind == "lognormal") {
    util::reject_unknown_keys(j, {"kind", "mu", "sigma", "mean", "var"}, "lognormal latency");
    if (j.contains("mean") || j.contains("var")) {
      if (j.contains("mu") || j.contains("sigma")) {
        throw ConfigError("lognormal latency: give either mu/sigma or mean/var");
      }
      return LogNormalLatency::from_mean_var(util::get_number(j, "mean", 1.0),
                                             util::get_number(j, "var", 0.0));
    }
    return LogNormalLatency{util::get_number(j, "mu", 0.0), util::get_number(j, "sigma", 0.0)};
  }
  if (kind == "per_round") {
    util::reject_unknown_keys(j, {"kind", "values"}, "per_round latency");
    if (!j.contains("values") || !j["values"].is_array()) {
      throw ConfigError("per_round latency needs a 'values' array");
    }
    PerRoundLatency l;
    for (const auto& v : j["values"]) {
      if (!v.is_number_unsigned()) throw ConfigError("per_round latencies must be integers >= 1");
      l.values.push_back(v.get<VirtualTime>());
    }
    return l;
  }
  throw ConfigError("unknown latency kind '" + kind +
                    "' (expected constant, uniform, lognormal, per_round)");
}

json to_json(const CompletenessSpec& spec) {
  return std::visit(overloaded{
                        [](const FullCompleteness&) { return json{{"kind", "full"}}; },
                        [](const UniformStepsCompleteness&) {
                          return json{{"kind", "uniform_steps"}};
                        },
                    },
                    spec);
}

CompletenessSpec completeness_from_json(const json& j) {
  const std::string kind = j.is_string() ? j.get<std::string>() : util::get_string(j, "kind", "");
  if (j.is_object()) util::reject_unknown_keys(j, {"kind"}, "completeness");
  if (kind == "full") return FullCompleteness{};
  if (kind == "uniform_steps" || kind == "uniform-epochs" || kind == "uniform") {
    return UniformStepsCompleteness{};
  }
  throw ConfigError("unknown completeness kind '" + kind + "' (expected full, uniform_steps)");
}

namespace {

json availability_to_json(const AvailabilityModel& a) {
  return std::visit(overloaded{
                        [](const ConstantAvailabilityModel& m) {
                          return json{{"kind", "constant"}, {"p", m.p}};
                        },
                        [](const LogNormalAvailabilityModel& m) {
                          return json{{"kind", "lognormal"}, {"mu", m.mu}, {"sigma", m.sigma}};
                        },
                    },
                    a);
}

AvailabilityModel availability_from_json(const json& j) {
  if (j.is_number()) return ConstantAvailabilityModel{j.get<double>()};
  const std::string kind = util::get_string(j, "kind", "");
  if (kind == "constant") {
    util::reject_unknown_keys(j, {"kind", "p"}, "availability");
    const double p = util::get_number(j, "p", 1.0);
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("availability p must be in [0, 1]");
    return ConstantAvailabilityModel{p};
  }
  if (kind == "lognormal") {
    util::reject_unknown_keys(j, {"kind", "mu", "sigma"}, "availability");
    const double sigma = util::get_number(j, "sigma", 0.0);
    if (!(sigma >= 0.0)) throw ConfigError("availability sigma must be >= 0");
    return LogNormalAvailabilityModel{util::get_number(j, "mu", 0.0), sigma};
  }
  throw ConfigError("unknown availability kind '" + kind + "' (expected constant, lognormal)");
}

}  // namespace

json to_json(const SimulatorConfig& c) {
  json j;
  if (c.kind == SimulatorKind::trace) {
    j["kind"] = "trace";
    j["path"] = c.trace_path;
  } else {
    j["kind"] = "synthetic";
    j["availability"] = availability_to_json(c.availability);
    j["latency"] = to_json(c.latency);
    j["completeness"] = to_json(c.completeness);
    j["drop_prob"] = c.drop_prob;
    if (!c.overrides.empty()) {
      json o = json::object();
      for (const auto& [id, ov] : c.overrides) {
        json e = json::object();
        if (ov.p_avail) e["p_avail"] = *ov.p_avail;
        if (ov.latency) e["latency"] = to_json(*ov.latency);
        if (ov.completeness) e["completeness"] = to_json(*ov.completeness);
        if (ov.drop_prob) e["drop_prob"] = *ov.drop_prob;
        o[std::to_string(id)] = e;
      }
      j["overrides"] = o;
    }
  }
  if (c.seed) j["seed"] = *c.seed;
  return j;
}

SimulatorConfig simulator_config_from_json(const json& j) {
  SimulatorConfig c;
  const std::string kind = util::get_string(j, "kind", "synthetic");
  if (j.contains("seed") && !j["seed"].is_null()) {
    c.seed = static_cast<std::uint64_t>(util::get_integer(j, "seed", 0));
  }
  if (kind == "trace") {
    util::reject_unknown_keys(j, {"kind", "path", "seed"}, "simulator");
    c.kind = SimulatorKind::trace;
    c.trace_path = util::get_string(j, "path", "");
    if (c.trace_path.empty()) throw ConfigError("trace simulator needs 'path'");
    return c;
  }
  if (kind != "synthetic") {
    throw ConfigError("unknown simulator kind '" + kind + "' (expected synthetic, trace)");
  }
  util::reject_unknown_keys(
      j, {"kind", "availability", "latency", "completeness", "drop_prob", "overrides", "seed"},
      "simulator");
  if (j.contains("availability")) c.availability = availability_from_json(j["availability"]);
  if (j.contains("latency")) c.latency = latency_from_json(j["latency"]);
  if (j.contains("completeness")) c.completeness = completeness_from_json(j["completeness"]);
  c.drop_prob = util::get_number(j, "drop_prob", 0.0);
  if (!(c.drop_prob >= 0.0 && c.drop_prob <= 1.0)) throw ConfigError("drop_prob must be in [0, 1]");
  if (j.contains("overrides")) {
    const json& o = j["overrides"];
    if (!o.is_object()) throw ConfigError("simulator overrides must be an object keyed by client id");
    for (const auto& item : o.items()) {
      util::reject_unknown_keys(item.value(), {"p_avail", "latency", "completeness", "drop_prob"},
                                "simulator override");
      ClientId id = 0;
      try {
        std::size_t pos = 0;
        id = std::stoul(item.key(), &pos);
        if (pos != item.key().size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw ConfigError("override key '" + item.key() + "' is not a client id");
      }
      ProfileOverride ov;
      const json& v = item.value();
      if (v.contains("p_avail")) ov.p_avail = util::get_number(v, "p_avail", 1.0);
      if (v.contains("latency")) ov.latency = latency_from_json(v["latency"]);
      if (v.contains("completeness")) ov.completeness = completeness_from_json(v["completeness"]);
      if (v.contains("drop_prob")) ov.drop_prob = util::get_number(v, "drop_prob", 0.0);
      c.overrides[id] = ov;
    }
  }
  return c;
}

std::vector<ClientProfile> build_profiles(const SimulatorConfig& config, std::size_t num_clients,
                                          std::uint64_t seed) {
  if (config.kind == SimulatorKind::trace) {
    auto profiles = load_trace(config.trace_path);
    if (profiles.size() < num_clients) {
      throw ConfigError("trace describes " + std::to_string(profiles.size()) +
                        " clients but the task has " + std::to_string(num_clients));
    }
    profiles.resize(num_clients);
    return profiles;
  }
  for (const auto& [id, ov] : config.overrides) {
    if (id >= num_clients) {
      throw ConfigError("override for client " + std::to_string(id) + " but the task has " +
                        std::to_string(num_clients) + " clients");
    }
  }
  std::vector<ClientProfile> profiles(num_clients);
  for (ClientId k = 0; k < num_clients; ++k) {
    ClientProfile& p = profiles[k];
    p.availability = std::visit(
        overloaded{
            [](const ConstantAvailabilityModel& m) { return AvailabilityProbability{m.p}; },
            [&](const LogNormalAvailabilityModel& m) {
              if (m.sigma == 0.0) return AvailabilityProbability{std::clamp(std::exp(m.mu), 0.0, 1.0)};
              Rng rng = make_stream(seed, StreamTag::availability_prob, {k});
              std::lognormal_distribution<double> dist(m.mu, m.sigma);
              return AvailabilityProbability{std::clamp(dist(rng), 0.0, 1.0)};
            },
        },
        config.availability);
    p.latency = config.latency;
    p.completeness = config.completeness;
    p.drop_prob = config.drop_prob;
    if (auto it = config.overrides.find(k); it != config.overrides.end()) {
      const ProfileOverride& ov = it->second;
      if (ov.p_avail) p.availability = AvailabilityProbability{*ov.p_avail};
      if (ov.latency) p.latency = *ov.latency;
      if (ov.completeness) p.completeness = *ov.completeness;
      if (ov.drop_prob) p.drop_prob = *ov.drop_prob;
    }
    p.validate();
  }
  return profiles;
}

}  // namespace fedsim::sim
