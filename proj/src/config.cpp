// Copyright 2026 The cavsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cavsim/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace cavsim {

using nlohmann::json;

const char* to_string(Scheme s)
{
  switch (s) {
    case Scheme::Fifo: return "fifo";
    case Scheme::Trust: return "trust";
    case Scheme::Lane: return "lane";
    case Scheme::Both: return "both";
  }
  return "?";
}

Scheme scheme_from_string(const std::string& s)
{
  if (s == "fifo") return Scheme::Fifo;
  if (s == "trust" || s == "trust_aware") return Scheme::Trust;
  if (s == "lane" || s == "lane_priority") return Scheme::Lane;
  if (s == "both") return Scheme::Both;
  throw ConfigError("scheduling.scheme: expected fifo|trust|lane|both, got '" + s + "'");
}

namespace {

Movement movement_from_string(const std::string& s, const std::string& field)
{
  if (s == "straight") return Movement::Straight;
  if (s == "left") return Movement::Left;
  if (s == "right") return Movement::Right;
  throw ConfigError(field + ": expected straight|left|right, got '" + s + "'");
}

std::string movement_name(Movement m)
{
  switch (m) {
    case Movement::Straight: return "straight";
    case Movement::Left: return "left";
    case Movement::Right: return "right";
  }
  return "straight";
}

// Reads fields out of one JSON object and rejects keys nobody asked for.
class Section
{
public:
  Section(const json& parent, const std::string& name, const std::string& path)
      : path_(path.empty() ? name : path + "." + name)
  {
    if (name.empty()) {
      obj_ = &parent;
      path_ = "";
    } else if (parent.contains(name)) {
      obj_ = &parent.at(name);
    }
    if (obj_ && !obj_->is_object()) throw ConfigError(where("") + ": expected an object");
  }
  ~Section() noexcept(false)
  {
    if (!obj_ || std::uncaught_exceptions() > 0) return;
    for (const auto& [key, value] : obj_->items())
      if (!used_.count(key)) throw ConfigError(where(key) + ": unknown field");
  }

  template <typename T>
  void get(const std::string& key, T& out)
  {
    used_.insert(key);
    if (!obj_ || !obj_->contains(key)) return;
    try {
      out = obj_->at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(where(key) + ": wrong type");
    }
  }
  bool has(const std::string& key) const { return obj_ && obj_->contains(key); }
  const json* raw(const std::string& key)
  {
    used_.insert(key);
    return has(key) ? &obj_->at(key) : nullptr;
  }
  std::string where(const std::string& key) const
  {
    if (key.empty()) return path_;
    return path_.empty() ? key : path_ + "." + key;
  }
  const std::string& path() const { return path_; }
  const json& object() const { return *obj_; }
  bool present() const { return obj_ != nullptr; }

private:
  const json* obj_ = nullptr;
  std::string path_;
  std::set<std::string> used_;
};

std::vector<FakeSpawn> parse_spawns(const json* arr, const std::string& field)
{
  std::vector<FakeSpawn> out;
  if (!arr) return out;
  if (!arr->is_array()) throw ConfigError(field + ": expected an array");
  for (std::size_t n = 0; n < arr->size(); ++n) {
    const std::string f = field + "[" + std::to_string(n) + "]";
    Section s((*arr)[n], "", "");
    FakeSpawn sp;
    std::string mv = "straight";
    try {
      s.get("time", sp.time);
      s.get("lane", sp.lane);
      s.get("movement", mv);
      s.get("v0", sp.v0);
    } catch (const ConfigError& e) {
      throw ConfigError(f + "." + e.what());
    }
    sp.movement = movement_from_string(mv, f + ".movement");
    if (sp.lane < 1 || sp.lane > 8) throw ConfigError(f + ".lane: must be in 1..8");
    if (sp.time < 0.0) throw ConfigError(f + ".time: must be >= 0");
    if (sp.v0 < 0.0) throw ConfigError(f + ".v0: must be >= 0");
    out.push_back(sp);
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.time < b.time; });
  return out;
}

json spawns_to_json(const std::vector<FakeSpawn>& spawns)
{
  json arr = json::array();
  for (const auto& s : spawns)
    arr.push_back({{"time", s.time}, {"lane", s.lane}, {"movement", movement_name(s.movement)},
                   {"v0", s.v0}});
  return arr;
}

}  // namespace

double ScenarioConfig::reschedule_margin() const
{
  return limits.v_max * limits.v_max / (2.0 * std::abs(limits.u_min)) + delta;
}

void ScenarioConfig::validate() const
{
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
  };
  require(geometry.approach_length > 0.0, "geometry.approach_length: must be > 0");
  require(geometry.rescheduling_length > 0.0 &&
              geometry.rescheduling_length < geometry.approach_length,
          "geometry.rescheduling_length: must satisfy 0 < L1 < L");
  require(geometry.half_width > 0.0, "geometry.half_width: must be > 0");
  require(geometry.exit_length > 0.0, "geometry.exit_length: must be > 0");
  // Odd lanes are the inner lanes (straight or left), even lanes the outer
  // ones (straight or right).
  auto check_movements = [&](const std::vector<FakeSpawn>& list, const std::string& field) {
    for (std::size_t n = 0; n < list.size(); ++n) {
      const auto& a = list[n];
      const bool ok = a.movement == Movement::Straight ||
                      (a.movement == Movement::Left && a.lane % 2 == 1) ||
                      (a.movement == Movement::Right && a.lane % 2 == 0);
      require(ok, field + "[" + std::to_string(n) + "].movement: lane " + std::to_string(a.lane) +
                      " does not admit " + to_string(a.movement));
    }
  };
  check_movements(arrivals.explicit_arrivals, "arrivals.explicit");
  check_movements(attacker.spawns, "attacker.spawns");
  require(ts > 0.0, "dynamics.ts: must be > 0");
  require(limits.v_min >= 0.0 && limits.v_max > limits.v_min,
          "dynamics.v_max: must exceed v_min >= 0");
  require(limits.u_max > 0.0 && limits.u_min < 0.0, "dynamics.u_min/u_max: need u_min < 0 < u_max");
  require(phi > 0.0, "dynamics.phi: must be > 0");
  require(delta >= 0.0, "dynamics.delta: must be >= 0");
  require(max_time > 0.0, "max_time: must be > 0");
  require(v_free > limits.v_min && v_free <= limits.v_max, "controller.v_free: must be in (v_min, v_max]");
  require(gains.k_rear > 0.0 && gains.k_merge > 0.0 && gains.k_yield > 0.0 && gains.k_speed > 0.0,
          "controller.k_*: class-K gains must be > 0");
  require(gains.k_speed * ts <= 1.0, "controller.k_speed: must be <= 1 / ts");
  require(gains.lambda > 0.0, "controller.lambda: must be > 0");
  require(gains.c3 > 0.0, "controller.c3: must be > 0");
  require(coordinator.rho >= 0.0, "controller.rho: must be >= 0");
  require(reference_horizon > 0.0, "controller.reference_horizon: must be > 0");
  try {
    sensor.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  require(trust.gamma > 0.0 && trust.gamma < 1.0, "trust.gamma: must be in (0, 1)");
  require(trust.h > 0.0, "trust.h: must be > 0");
  require(trust.delta > 0.0 && trust.delta < 0.5, "trust.delta: must be in (0, 0.5)");
  require(trust.eta >= 1, "trust.eta: must be >= 1");
  for (std::size_t j = 0; j < kNumChecks; ++j) {
    require(trust.r[j] >= 0.0, "trust.r: magnitudes must be >= 0");
    require(trust.p[j] >= 0.0, "trust.p: magnitudes must be >= 0");
  }
  require(coordinator.nu >= 1, "scheduling.nu: must be >= 1");
  require(coordinator.allowable_low_trust > 0.0, "scheduling.A: must be > 0");
  require(coordinator.lane_threshold > 0.0, "scheduling.A_l: must be > 0");
  require(coordinator.lane_c > 0.0, "scheduling.c: must be > 0");
  require(coordinator.v_low > 0.0, "scheduling.v_low: must be > 0");
  require(coordinator.slow_dwell >= 0.0, "scheduling.slow_dwell: must be >= 0");
  require(coordinator.exact_cap >= 1, "scheduling.exact_cap: must be >= 1");
  require(report_timeout > 0.0, "scheduling.report_timeout: must be > 0");
  require(arrivals.horizon >= 0.0, "arrivals.horizon: must be >= 0");
  for (double r : arrivals.rate) require(r >= 0.0, "arrivals.rate: must be >= 0");
  require(arrivals.v0 >= 0.0 && arrivals.v0 <= limits.v_max, "arrivals.v0: must be in [0, v_max]");
  require(arrivals.turn_probability >= 0.0 && arrivals.turn_probability <= 1.0,
          "arrivals.turn_probability: must be in [0, 1]");
  require(attacker.fraction >= 0.0 && attacker.fraction <= 1.0,
          "attacker.fraction: must be in [0, 1]");
  require(attacker.max_fake >= 0, "attacker.max_fake: must be >= 0");
  require(uncooperative.count >= 0, "uncooperative.count: must be >= 0");
  require(uncooperative.speed > 0.0 && uncooperative.speed <= coordinator.v_low,
          "uncooperative.speed: must be in (0, v_low]");
  require(uncooperative.speed < v_free, "uncooperative.speed: must be below controller.v_free");
  if (scheme != Scheme::Fifo || mitigation) {
    const double room = geometry.approach_length - geometry.rescheduling_length;
    if (room < reschedule_margin()) {
      std::ostringstream msg;
      msg << "geometry.rescheduling_length: rescheduling needs L - L1 >= v_max^2/(2|u_min|) + "
             "delta = "
          << reschedule_margin() << " m, got " << room << " m";
      throw ConfigError(msg.str());
    }
  }
}

void ScenarioConfig::sync_derived()
{
  gains.phi = phi;
  gains.delta = delta;
  gains.ts = ts;
  coordinator.phi = phi;
  coordinator.safe_delta = delta;
  coordinator.delta = trust.delta;
}

ScenarioConfig parse_scenario(const std::string& json_text)
{
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: not valid JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("config: top level must be an object");

  ScenarioConfig c;
  {
    Section top(root, "", "");
    top.get("seed", c.seed);
    top.get("max_time", c.max_time);
    top.raw("geometry");
    top.raw("dynamics");
    top.raw("fuel");
    top.raw("controller");
    top.raw("sensor");
    top.raw("trust");
    top.raw("scheduling");
    top.raw("arrivals");
    top.raw("attacker");
    top.raw("uncooperative");
    top.raw("distrust");

    {
      Section s(root, "geometry", "");
      s.get("approach_length", c.geometry.approach_length);
      s.get("rescheduling_length", c.geometry.rescheduling_length);
      s.get("exit_length", c.geometry.exit_length);
      double area = -1.0;
      s.get("area", area);
      if (area > 0.0) c.geometry.half_width = std::sqrt(area) / 2.0;
      s.get("half_width", c.geometry.half_width);
    }
    {
      Section s(root, "dynamics", "");
      s.get("ts", c.ts);
      s.get("v_min", c.limits.v_min);
      s.get("v_max", c.limits.v_max);
      s.get("u_min", c.limits.u_min);
      s.get("u_max", c.limits.u_max);
      s.get("phi", c.phi);
      s.get("delta", c.delta);
    }
    {
      Section s(root, "fuel", "");
      s.get("b0", c.fuel.b0);
      s.get("b1", c.fuel.b1);
      s.get("b2", c.fuel.b2);
      s.get("b3", c.fuel.b3);
      s.get("c0", c.fuel.c0);
      s.get("c1", c.fuel.c1);
      s.get("c2", c.fuel.c2);
    }
    {
      Section s(root, "controller", "");
      s.get("k_rear", c.gains.k_rear);
      s.get("k_merge", c.gains.k_merge);
      s.get("k_yield", c.gains.k_yield);
      s.get("k_speed", c.gains.k_speed);
      s.get("c3", c.gains.c3);
      s.get("lambda", c.gains.lambda);
      s.get("rho", c.coordinator.rho);
      s.get("v_free", c.v_free);
      std::string ref = "default";
      s.get("reference", ref);
      if (ref == "default")
        c.reference = ReferencePolicy::Default;
      else if (ref == "time_energy")
        c.reference = ReferencePolicy::TimeEnergy;
      else
        throw ConfigError("controller.reference: expected default|time_energy");
      s.get("reference_horizon", c.reference_horizon);
      s.get("beta", c.beta);
      s.get("robust_rows", c.robust_rows);
    }
    {
      Section s(root, "sensor", "");
      s.get("range", c.sensor.range);
      s.get("theta", c.sensor.theta);
      s.get("epsilon", c.sensor.epsilon);
    }
    {
      Section s(root, "trust", "");
      s.get("gamma", c.trust.gamma);
      s.get("h", c.trust.h);
      s.get("delta", c.trust.delta);
      s.get("eta", c.trust.eta);
      std::vector<double> r(c.trust.r.begin(), c.trust.r.end());
      std::vector<double> p(c.trust.p.begin(), c.trust.p.end());
      s.get("r", r);
      s.get("p", p);
      if (r.size() != kNumChecks) throw ConfigError("trust.r: expected 4 magnitudes");
      if (p.size() != kNumChecks) throw ConfigError("trust.p: expected 4 magnitudes");
      std::copy(r.begin(), r.end(), c.trust.r.begin());
      std::copy(p.begin(), p.end(), c.trust.p.begin());
      s.get("tol_x", c.trust.tol_x);
      s.get("tol_v", c.trust.tol_v);
      s.get("tol_rule", c.trust.tol_rule);
    }
    {
      Section s(root, "scheduling", "");
      std::string scheme = to_string(c.scheme);
      s.get("scheme", scheme);
      c.scheme = scheme_from_string(scheme);
      s.get("trust_search", c.trust_search);
      s.get("mitigation", c.mitigation);
      s.get("A", c.coordinator.allowable_low_trust);
      s.get("A_l", c.coordinator.lane_threshold);
      s.get("nu", c.coordinator.nu);
      s.get("v_low", c.coordinator.v_low);
      s.get("c", c.coordinator.lane_c);
      s.get("slow_dwell", c.coordinator.slow_dwell);
      s.get("exact_cap", c.coordinator.exact_cap);
      s.get("report_timeout", c.report_timeout);
    }
    {
      Section s(root, "arrivals", "");
      s.get("horizon", c.arrivals.horizon);
      if (const json* rate = s.raw("rate")) {
        if (rate->is_number()) {
          c.arrivals.rate.fill(rate->get<double>());
        } else if (rate->is_array() && rate->size() == 8) {
          for (std::size_t n = 0; n < 8; ++n) {
            if (!(*rate)[n].is_number()) throw ConfigError("arrivals.rate: expected numbers");
            c.arrivals.rate[n] = (*rate)[n].get<double>();
          }
        } else {
          throw ConfigError("arrivals.rate: expected a number or an array of 8 numbers");
        }
      }
      s.get("v0", c.arrivals.v0);
      s.get("turn_probability", c.arrivals.turn_probability);
      c.arrivals.explicit_arrivals = parse_spawns(s.raw("explicit"), "arrivals.explicit");
    }
    {
      Section s(root, "attacker", "");
      s.get("enabled", c.attacker.enabled);
      std::string model = to_string(c.attacker.model);
      s.get("model", model);
      if (model == "naive")
        c.attacker.model = AttackerModel::Naive;
      else if (model == "strategic")
        c.attacker.model = AttackerModel::Strategic;
      else if (model == "dynamics_aware")
        c.attacker.model = AttackerModel::DynamicsAware;
      else
        throw ConfigError("attacker.model: expected naive|strategic|dynamics_aware");
      c.attacker.spawns = parse_spawns(s.raw("spawns"), "attacker.spawns");
      s.get("fraction", c.attacker.fraction);
      s.get("max_fake", c.attacker.max_fake);
      std::string life = c.attacker.lifetime == FakeLifetime::Vanish ? "vanish" : "traverse";
      s.get("lifetime", life);
      if (life == "traverse")
        c.attacker.lifetime = FakeLifetime::TraverseAndExit;
      else if (life == "vanish")
        c.attacker.lifetime = FakeLifetime::Vanish;
      else
        throw ConfigError("attacker.lifetime: expected traverse|vanish");
      s.get("vanish_after", c.attacker.vanish_after);
      s.get("naive_speed", c.attacker.naive_speed);
      s.get("naive_jitter", c.attacker.naive_jitter);
      s.get("strategic_speed", c.attacker.strategic_speed);
      s.get("attack_speed", c.attacker.attack_speed);
    }
    {
      Section s(root, "uncooperative", "");
      s.get("count", c.uncooperative.count);
      s.get("lanes", c.uncooperative.lanes);
      s.get("ordinals", c.uncooperative.ordinals);
      s.get("speed", c.uncooperative.speed);
    }
    {
      Section s(root, "distrust", "");
      s.get("ordinals", c.distrust.ordinals);
      s.get("from", c.distrust.from);
      s.get("until", c.distrust.until);
    }
  }
  for (int lane : c.uncooperative.lanes)
    if (lane < 1 || lane > 8) throw ConfigError("uncooperative.lanes: lanes must be in 1..8");
  c.sync_derived();
  c.validate();
  return c;
}

ScenarioConfig load_scenario(const std::string& path)
{
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

std::string to_json(const ScenarioConfig& c, int indent)
{
  json j;
  j["seed"] = c.seed;
  j["max_time"] = c.max_time;
  j["geometry"] = {{"approach_length", c.geometry.approach_length},
                   {"rescheduling_length", c.geometry.rescheduling_length},
                   {"half_width", c.geometry.half_width},
                   {"exit_length", c.geometry.exit_length}};
  j["dynamics"] = {{"ts", c.ts},           {"v_min", c.limits.v_min}, {"v_max", c.limits.v_max},
                   {"u_min", c.limits.u_min}, {"u_max", c.limits.u_max}, {"phi", c.phi},
                   {"delta", c.delta}};
  j["fuel"] = {{"b0", c.fuel.b0}, {"b1", c.fuel.b1}, {"b2", c.fuel.b2}, {"b3", c.fuel.b3},
               {"c0", c.fuel.c0}, {"c1", c.fuel.c1}, {"c2", c.fuel.c2}};
  j["controller"] = {{"k_rear", c.gains.k_rear},
                     {"k_merge", c.gains.k_merge},
                     {"k_yield", c.gains.k_yield},
                     {"k_speed", c.gains.k_speed},
                     {"c3", c.gains.c3},
                     {"lambda", c.gains.lambda},
                     {"rho", c.coordinator.rho},
                     {"v_free", c.v_free},
                     {"reference", c.reference == ReferencePolicy::Default ? "default" : "time_energy"},
                     {"reference_horizon", c.reference_horizon},
                     {"beta", c.beta},
                     {"robust_rows", c.robust_rows}};
  j["sensor"] = {{"range", c.sensor.range}, {"theta", c.sensor.theta}, {"epsilon", c.sensor.epsilon}};
  j["trust"] = {{"gamma", c.trust.gamma},   {"h", c.trust.h},         {"delta", c.trust.delta},
                {"eta", c.trust.eta},       {"r", c.trust.r},         {"p", c.trust.p},
                {"tol_x", c.trust.tol_x},   {"tol_v", c.trust.tol_v}, {"tol_rule", c.trust.tol_rule}};
  j["scheduling"] = {{"scheme", to_string(c.scheme)},
                     {"trust_search", c.trust_search},
                     {"mitigation", c.mitigation},
                     {"A", c.coordinator.allowable_low_trust},
                     {"A_l", c.coordinator.lane_threshold},
                     {"nu", c.coordinator.nu},
                     {"v_low", c.coordinator.v_low},
                     {"c", c.coordinator.lane_c},
                     {"slow_dwell", c.coordinator.slow_dwell},
                     {"exact_cap", c.coordinator.exact_cap},
                     {"report_timeout", c.report_timeout}};
  j["arrivals"] = {{"horizon", c.arrivals.horizon},
                   {"rate", c.arrivals.rate},
                   {"v0", c.arrivals.v0},
                   {"turn_probability", c.arrivals.turn_probability},
                   {"explicit", spawns_to_json(c.arrivals.explicit_arrivals)}};
  j["attacker"] = {{"enabled", c.attacker.enabled},
                   {"model", to_string(c.attacker.model)},
                   {"spawns", spawns_to_json(c.attacker.spawns)},
                   {"fraction", c.attacker.fraction},
                   {"max_fake", c.attacker.max_fake},
                   {"lifetime", c.attacker.lifetime == FakeLifetime::Vanish ? "vanish" : "traverse"},
                   {"vanish_after", c.attacker.vanish_after},
                   {"naive_speed", c.attacker.naive_speed},
                   {"naive_jitter", c.attacker.naive_jitter},
                   {"strategic_speed", c.attacker.strategic_speed},
                   {"attack_speed", c.attacker.attack_speed}};
  j["uncooperative"] = {{"count", c.uncooperative.count},
                        {"lanes", c.uncooperative.lanes},
                        {"ordinals", c.uncooperative.ordinals},
                        {"speed", c.uncooperative.speed}};
  j["distrust"] = {{"ordinals", c.distrust.ordinals},
                   {"from", c.distrust.from},
                   {"until", c.distrust.until}};
  return j.dump(indent);
}

}  // namespace cavsim
