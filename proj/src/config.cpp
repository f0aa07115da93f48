// SPDX-License-Identifier: Apache-2.0
#include "cfmimo/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace cfmimo {

namespace {

using nlohmann::json;

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

// Reads typed fields out of one JSON object and remembers which keys were used,
// so anything left over can be reported as unknown.
class Section {
 public:
  Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ConfigError(path_, "expected an object");
  }

  template <typename T>
  bool read(const std::string& key, T& out) {
    const json* v = find(key);
    if (v == nullptr) return false;
    try {
      out = v->get<T>();
    } catch (const json::exception&) {
      throw ConfigError(join(path_, key), "has the wrong type");
    }
    return true;
  }

  template <typename T>
  void read_optional(const std::string& key, std::optional<T>& out) {
    const json* v = find(key);
    if (v == nullptr) return;
    if (v->is_null()) {
      out.reset();
      return;
    }
    T value{};
    read(key, value);
    out = value;
  }

  template <typename Enum, typename Parse>
  void read_enum(const std::string& key, Enum& out, Parse parse) {
    std::string name;
    if (!read(key, name)) return;
    try {
      out = parse(name);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(join(path_, key), e.what());
    }
  }

  const json* child(const std::string& key) { return find(key); }
  std::string path_of(const std::string& key) const { return join(path_, key); }

  void finish() const {
    for (auto it = node_.begin(); it != node_.end(); ++it)
      if (!used_.count(it.key())) throw ConfigError(join(path_, it.key()), "unknown key");
  }

 private:
  const json* find(const std::string& key) {
    auto it = node_.find(key);
    if (it == node_.end()) return nullptr;
    used_.insert(key);
    return &*it;
  }

  const json& node_;
  std::string path_;
  std::set<std::string> used_;
};

void parse_system(Section s, SystemConfig& sys) {
  s.read("bandwidth_hz", sys.bandwidth);
  s.read("noise_temperature_k", sys.noise_temperature);
  s.read("noise_figure_db", sys.noise_figure);
  s.read("p_max_w", sys.p_max);
  s.read("p_circuit_w", sys.p_circuit);
  s.read_optional("rho", sys.rho);
  s.read_optional("rho_p", sys.rho_p);
  s.read_optional("tau_p", sys.tau_p);
  s.finish();
}

void parse_scenario(Section s, CampaignSpec& c) {
  s.read("area_width_m", c.area.width);
  s.read("area_depth_m", c.area.depth);
  s.read("ap_heights_m", c.area.ap_heights);
  s.read("ue_height_m", c.area.ue_height);
  s.read("L", c.L);
  s.read("N", c.N);
  s.read("K", c.K);
  int M = 0;
  const bool has_m = s.read("M", M);
  s.read_enum("ap_placement", c.ap_placement, ap_placement_from_string);
  s.read_enum("ue_placement", c.ue_placement, ue_placement_from_string);
  s.read("cluster_radius_m", c.cluster_radius);
  s.read("indoor_fraction", c.indoor_fraction);
  s.read("min_antenna_spacing_m", c.min_antenna_spacing);
  s.finish();
  if (has_m && M != c.L * c.N) throw ConfigError(s.path_of("M"), "must equal L * N");
}

void parse_path_loss(Section s, CliConfig& cfg) {
  std::string preset;
  if (s.read("preset", preset)) {
    try {
      cfg.campaign.path_loss = PathLossModel::preset(preset);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(s.path_of("preset"), e.what());
    }
    cfg.path_loss_preset = preset;
  }
  s.read("intercept_db", cfg.campaign.path_loss.intercept);
  s.read("slope_db_per_decade", cfg.campaign.path_loss.slope);
  s.read("reference_distance_m", cfg.campaign.path_loss.reference_distance);
  s.read("shadow_sigma_db", cfg.campaign.path_loss.shadow_sigma);
  s.finish();
}

void parse_channel(Section s, CliConfig& cfg) {
  auto& c = cfg.campaign;
  s.read_enum("source", c.source, channel_source_from_string);
  if (const json* pl = s.child("path_loss")) parse_path_loss(Section(*pl, s.path_of("path_loss")), cfg);
  s.read("indoor_penalty_db", c.indoor_penalty_db);
  s.read("measured_path", c.measured_path);
  s.read_enum("csi", c.csi, csi_mode_from_string);
  s.finish();
}

void parse_tpc(Section s, TpcOptions& t) {
  s.read("bisection_tol", t.bisection_tol);
  s.read("fixed_point_tol", t.fixed_point_tol);
  s.read("max_fixed_point_iters", t.max_fixed_point_iters);
  s.read("alternations", t.alternations);
  s.read("alternation_tol", t.alternation_tol);
  s.read("hill_step_init", t.hill_step_init);
  s.read("hill_step_min", t.hill_step_min);
  s.read("max_hill_evaluations", t.max_hill_evaluations);
  s.read("target_se", t.target_se);
  s.finish();
}

AlgorithmSpec parse_algorithm(const json& node, const std::string& path) {
  AlgorithmSpec a;
  auto parse_name = [&](const std::string& name, const std::string& where) {
    try {
      a.algorithm = tpc_algorithm_from_string(name);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(where, e.what());
    }
  };
  if (node.is_string()) {
    parse_name(node.get<std::string>(), path);
    return a;
  }
  Section s(node, path);
  std::string name;
  if (!s.read("name", name)) throw ConfigError(path, "algorithm entry needs a name");
  parse_name(name, s.path_of("name"));
  s.read_optional("target_se", a.target_se);
  s.read("label", a.label);
  s.finish();
  return a;
}

void parse_campaign(Section s, CampaignSpec& c) {
  s.read("drops", c.drops);
  s.read("realizations_per_drop", c.realizations_per_drop);
  s.read("base_seed", c.base_seed);
  if (const json* combs = s.child("combiners")) {
    if (!combs->is_array()) throw ConfigError(s.path_of("combiners"), "expected an array");
    c.combiners.clear();
    for (std::size_t j = 0; j < combs->size(); ++j) {
      const std::string where = s.path_of("combiners") + "[" + std::to_string(j) + "]";
      if (!(*combs)[j].is_string()) throw ConfigError(where, "expected a string");
      try {
        c.combiners.push_back(combiner_from_string((*combs)[j].get<std::string>()));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(where, e.what());
      }
    }
  }
  if (const json* algs = s.child("algorithms")) {
    if (!algs->is_array()) throw ConfigError(s.path_of("algorithms"), "expected an array");
    c.algorithms.clear();
    for (std::size_t j = 0; j < algs->size(); ++j)
      c.algorithms.push_back(parse_algorithm((*algs)[j], s.path_of("algorithms") + "[" + std::to_string(j) + "]"));
  }
  s.finish();
}

}  // namespace

Profile profile_from_string(const std::string& name) {
  if (name == "paper") return Profile::Paper;
  if (name == "desk") return Profile::Desk;
  throw std::invalid_argument("unknown profile '" + name + "' (expected paper|desk)");
}

std::string to_string(Profile profile) { return profile == Profile::Paper ? "paper" : "desk"; }

CliConfig default_config(Profile profile) {
  CliConfig cfg;
  auto& c = cfg.campaign;
  c.L = profile == Profile::Paper ? 512 : 64;
  c.N = 1;
  c.K = 8;
  c.drops = 200;
  return cfg;
}

CliConfig parse_config(const nlohmann::json& doc, CliConfig cfg) {
  Section root(doc, "");
  if (const json* n = root.child("system")) parse_system(Section(*n, "system"), cfg.campaign.system);
  if (const json* n = root.child("scenario")) parse_scenario(Section(*n, "scenario"), cfg.campaign);
  if (const json* n = root.child("channel")) parse_channel(Section(*n, "channel"), cfg);
  if (const json* n = root.child("tpc")) parse_tpc(Section(*n, "tpc"), cfg.campaign.tpc);
  if (const json* n = root.child("campaign")) parse_campaign(Section(*n, "campaign"), cfg.campaign);
  root.finish();
  try {
    cfg.campaign.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("", e.what());
  }
  return cfg;
}

CliConfig parse_config_text(const std::string& text, Profile profile) {
  json doc;
  try {
    doc = json::parse(text, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("syntax error: ") + e.what());
  }
  return parse_config(doc, default_config(profile));
}

CliConfig load_config(const std::filesystem::path& path, Profile profile) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot read config file '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str(), profile);
}

nlohmann::ordered_json config_to_json(const CliConfig& cfg) {
  const auto& c = cfg.campaign;
  nlohmann::ordered_json j;
  auto optional = [](const auto& v) -> nlohmann::ordered_json {
    if (v) return *v;
    return nullptr;
  };
  j["system"] = {{"bandwidth_hz", c.system.bandwidth},
                 {"noise_temperature_k", c.system.noise_temperature},
                 {"noise_figure_db", c.system.noise_figure},
                 {"p_max_w", c.system.p_max},
                 {"p_circuit_w", c.system.p_circuit},
                 {"rho", optional(c.system.rho)},
                 {"rho_p", optional(c.system.rho_p)},
                 {"tau_p", optional(c.system.tau_p)}};
  j["scenario"] = {{"area_width_m", c.area.width},
                   {"area_depth_m", c.area.depth},
                   {"ap_heights_m", c.area.ap_heights},
                   {"ue_height_m", c.area.ue_height},
                   {"L", c.L},
                   {"N", c.N},
                   {"K", c.K},
                   {"ap_placement", to_string(c.ap_placement)},
                   {"ue_placement", to_string(c.ue_placement)},
                   {"cluster_radius_m", c.cluster_radius},
                   {"indoor_fraction", c.indoor_fraction},
                   {"min_antenna_spacing_m", c.min_antenna_spacing}};
  j["channel"] = {{"source", to_string(c.source)},
                  {"path_loss",
                   {{"preset", cfg.path_loss_preset},
                    {"intercept_db", c.path_loss.intercept},
                    {"slope_db_per_decade", c.path_loss.slope},
                    {"reference_distance_m", c.path_loss.reference_distance},
                    {"shadow_sigma_db", c.path_loss.shadow_sigma}}},
                  {"indoor_penalty_db", c.indoor_penalty_db},
                  {"measured_path", c.measured_path},
                  {"csi", to_string(c.csi)}};
  j["tpc"] = {{"bisection_tol", c.tpc.bisection_tol},
              {"fixed_point_tol", c.tpc.fixed_point_tol},
              {"max_fixed_point_iters", c.tpc.max_fixed_point_iters},
              {"alternations", c.tpc.alternations},
              {"alternation_tol", c.tpc.alternation_tol},
              {"hill_step_init", c.tpc.hill_step_init},
              {"hill_step_min", c.tpc.hill_step_min},
              {"max_hill_evaluations", c.tpc.max_hill_evaluations},
              {"target_se", c.tpc.target_se}};
  nlohmann::ordered_json algs = nlohmann::ordered_json::array();
  for (const auto& a : c.algorithms) {
    nlohmann::ordered_json e = {{"name", to_string(a.algorithm)}};
    if (a.target_se) e["target_se"] = *a.target_se;
    if (!a.label.empty()) e["label"] = a.label;
    algs.push_back(e);
  }
  nlohmann::ordered_json combs = nlohmann::ordered_json::array();
  for (const auto k : c.combiners) combs.push_back(to_string(k));
  j["campaign"] = {{"drops", c.drops},
                   {"realizations_per_drop", c.realizations_per_drop},
                   {"base_seed", c.base_seed},
                   {"combiners", combs},
                   {"algorithms", algs}};
  return j;
}

}  // namespace cfmimo
