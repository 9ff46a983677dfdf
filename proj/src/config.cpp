#include "bbins/config.hpp"

#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "bbins/error.hpp"

namespace bbins {

namespace {

using nlohmann::json;

struct Position {
  std::size_t line = 1;
  std::size_t column = 1;
};

Position position_of_offset(const std::string& text, std::size_t offset) {
  Position p;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++p.line;
      p.column = 1;
    } else {
      ++p.column;
    }
  }
  return p;
}

Position position_of_key(const std::string& text, const std::string& key) {
  const auto at = text.find('"' + key + '"');
  if (at == std::string::npos) return {0, 0};
  return position_of_offset(text, at);
}

class Reader {
 public:
  explicit Reader(const std::string& text) : text_(text) {}

  [[noreturn]] void fail(const std::string& what, const std::string& key) const {
    const Position p = position_of_key(text_, key);
    throw ParseError(what, p.line, p.column);
  }

  void only_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) const {
    if (!obj.is_object()) fail(where + " must be a JSON object", where);
    for (const auto& [key, value] : obj.items()) {
      if (!allowed.count(key)) fail("unknown key \"" + key + "\" in " + where, key);
    }
  }

  template <typename T>
  T get(const json& obj, const std::string& key, T fallback) const {
    if (!obj.contains(key)) return fallback;
    try {
      return obj.at(key).get<T>();
    } catch (const json::exception&) {
      fail("key \"" + key + "\" has the wrong type", key);
    }
  }

  std::size_t count(const json& obj, const std::string& key, std::size_t fallback) const {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
      fail("key \"" + key + "\" must be a non-negative integer", key);
    }
    return v.get<std::size_t>();
  }

 private:
  const std::string& text_;
};

ProcessSpec read_process(const Reader& rd, const json& obj, const std::optional<GraphSource>& graph) {
  rd.only_keys(obj, {"kind", "params", "tie_breaking"}, "process");
  const std::string kind = rd.get<std::string>(obj, "kind", "two_choice");
  const json params = obj.contains("params") ? obj.at("params") : json::object();
  ProcessSpec spec;
  try {
    if (kind == "one_choice") {
      rd.only_keys(params, {}, "params");
      spec = ProcessSpec::one_choice();
    } else if (kind == "two_choice") {
      rd.only_keys(params, {}, "params");
      spec = ProcessSpec::two_choice();
    } else if (kind == "d_choice") {
      rd.only_keys(params, {"d"}, "params");
      spec = ProcessSpec::d_choice(static_cast<int>(rd.count(params, "d", 2)));
    } else if (kind == "one_plus_beta") {
      rd.only_keys(params, {"beta"}, "params");
      spec = ProcessSpec::one_plus_beta(rd.get<double>(params, "beta", 0.5));
    } else if (kind == "quantile") {
      rd.only_keys(params, {"delta"}, "params");
      spec = ProcessSpec::quantile(rd.get<double>(params, "delta", 0.5));
    } else if (kind == "graphical") {
      rd.only_keys(params, {}, "params");
      if (!graph) rd.fail("graphical process needs a \"graph\" section", "kind");
      spec = ProcessSpec::graphical(build_graph(*graph));
    } else {
      rd.fail("unknown process kind \"" + kind + "\"", "kind");
    }
  } catch (const InvalidParameter& e) {
    rd.fail(e.what(), "process");
  }
  const std::string ties = rd.get<std::string>(obj, "tie_breaking", "deterministic");
  if (ties == "deterministic") {
    spec.tie_breaking = TieBreaking::Deterministic;
  } else if (ties == "random") {
    spec.tie_breaking = TieBreaking::Random;
  } else {
    rd.fail("tie_breaking must be \"deterministic\" or \"random\"", "tie_breaking");
  }
  return spec;
}

WeightDistribution read_weights(const Reader& rd, const json& obj) {
  rd.only_keys(obj, {"kind", "lambda", "q"}, "weights");
  WeightDistribution w;
  try {
    const WeightKind kind = parse_weight_kind(rd.get<std::string>(obj, "kind", "unit"));
    switch (kind) {
      case WeightKind::Unit:
        w = WeightDistribution::unit();
        break;
      case WeightKind::Exponential:
        w = WeightDistribution::exponential();
        break;
      case WeightKind::UniformBounded:
        w = WeightDistribution::uniform_bounded();
        break;
      case WeightKind::ScaledGeometric:
        w = WeightDistribution::scaled_geometric(rd.get<double>(obj, "q", 0.5));
        break;
    }
    w.lambda = rd.get<double>(obj, "lambda", w.lambda);
    w.validate();
  } catch (const InvalidParameter& e) {
    rd.fail(e.what(), "weights");
  }
  return w;
}

GraphSource read_graph_source(const Reader& rd, const json& obj) {
  rd.only_keys(obj, {"kind", "n", "d", "seed", "file"}, "graph");
  GraphSource g;
  g.kind = rd.get<std::string>(obj, "kind", g.kind);
  g.n = rd.count(obj, "n", 0);
  g.d = rd.count(obj, "d", 0);
  g.seed = rd.get<std::uint64_t>(obj, "seed", 0);
  g.file = rd.get<std::string>(obj, "file", "");
  return g;
}

std::vector<SweepAxis> read_sweep(const Reader& rd, const json& arr) {
  if (!arr.is_array()) rd.fail("sweep must be an array", "sweep");
  std::vector<SweepAxis> out;
  for (const auto& entry : arr) {
    rd.only_keys(entry, {"field", "values"}, "sweep entry");
    SweepAxis axis;
    axis.field = rd.get<std::string>(entry, "field", "");
    if (!entry.contains("values") || !entry.at("values").is_array()) rd.fail("sweep values must be an array", "values");
    for (const auto& v : entry.at("values")) {
      if (v.is_number()) {
        axis.values.emplace_back(v.get<double>());
      } else if (v.is_string()) {
        axis.values.emplace_back(v.get<std::string>());
      } else {
        rd.fail("sweep values must be numbers or strings", "values");
      }
    }
    out.push_back(std::move(axis));
  }
  return out;
}

}  // namespace

Campaign parse_config_text(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    const Position p = position_of_offset(text, e.byte == 0 ? 0 : e.byte - 1);
    throw ParseError(std::string("malformed JSON: ") + e.what(), p.line, p.column);
  }
  const Reader rd(text);
  rd.only_keys(root,
               {"name", "n", "b", "m", "process", "weights", "sweep", "runs_per_point", "output", "seed",
                "midbatch_samples", "record_runtime", "graph"},
               "config");
  if (!root.contains("n")) throw ParseError("missing required key \"n\"", 1, 1);

  Campaign c;
  c.name = rd.get<std::string>(root, "name", c.name);
  if (root.contains("graph")) c.graph = read_graph_source(rd, root.at("graph"));
  c.base.n = rd.count(root, "n", 0);
  c.base.b = rd.count(root, "b", c.base.n);
  c.base.m = rd.count(root, "m", c.base.b);
  if (root.contains("process")) c.base.process = read_process(rd, root.at("process"), c.graph);
  else c.base.process = ProcessSpec::two_choice();
  if (root.contains("weights")) c.base.weights = read_weights(rd, root.at("weights"));
  if (root.contains("sweep")) c.sweep = read_sweep(rd, root.at("sweep"));
  c.runs_per_point = rd.count(root, "runs_per_point", 1);
  c.output_path = rd.get<std::string>(root, "output", c.name + ".csv");
  c.base.seed_plan.master_seed = rd.get<std::uint64_t>(root, "seed", 0);
  c.base.midbatch_samples = rd.count(root, "midbatch_samples", 0);
  c.record_runtime = rd.get<bool>(root, "record_runtime", false);
  try {
    c.validate();
  } catch (const InvalidParameter& e) {
    throw ParseError(std::string("invalid campaign: ") + e.what(), 0, 0);
  }
  return c;
}

Campaign parse_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

std::string config_to_text(const Campaign& c) {
  nlohmann::ordered_json j;
  j["name"] = c.name;
  j["n"] = c.base.n;
  j["b"] = c.base.b;
  j["m"] = c.base.m;
  nlohmann::ordered_json proc;
  const ProcessSpec& p = c.base.process;
  nlohmann::ordered_json params = nlohmann::ordered_json::object();
  switch (p.kind) {
    case ProcessKind::OneChoice:
      proc["kind"] = "one_choice";
      break;
    case ProcessKind::DChoice:
      if (p.d == 2) {
        proc["kind"] = "two_choice";
      } else {
        proc["kind"] = "d_choice";
        params["d"] = p.d;
      }
      break;
    case ProcessKind::OnePlusBeta:
      proc["kind"] = "one_plus_beta";
      params["beta"] = p.beta;
      break;
    case ProcessKind::Quantile:
      proc["kind"] = "quantile";
      params["delta"] = p.delta;
      break;
    case ProcessKind::Graphical:
      proc["kind"] = "graphical";
      break;
  }
  proc["params"] = params;
  proc["tie_breaking"] = p.tie_breaking == TieBreaking::Random ? "random" : "deterministic";
  j["process"] = proc;
  nlohmann::ordered_json w;
  w["kind"] = weight_kind_name(c.base.weights.kind);
  w["lambda"] = c.base.weights.lambda;
  if (c.base.weights.kind == WeightKind::ScaledGeometric) w["q"] = c.base.weights.q;
  j["weights"] = w;
  nlohmann::ordered_json sweep = nlohmann::ordered_json::array();
  for (const auto& axis : c.sweep) {
    nlohmann::ordered_json values = nlohmann::ordered_json::array();
    for (const auto& v : axis.values) {
      if (const double* d = std::get_if<double>(&v)) {
        values.push_back(*d);
      } else {
        values.push_back(std::get<std::string>(v));
      }
    }
    sweep.push_back({{"field", axis.field}, {"values", values}});
  }
  j["sweep"] = sweep;
  j["runs_per_point"] = c.runs_per_point;
  j["output"] = c.output_path;
  j["seed"] = c.base.seed_plan.master_seed;
  j["midbatch_samples"] = c.base.midbatch_samples;
  j["record_runtime"] = c.record_runtime;
  if (c.graph) {
    j["graph"] = {{"kind", c.graph->kind}, {"n", c.graph->n}, {"d", c.graph->d}, {"seed", c.graph->seed},
                  {"file", c.graph->file}};
  }
  return j.dump(2) + "\n";
}

}  // namespace bbins
