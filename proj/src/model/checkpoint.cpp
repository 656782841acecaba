#include <fstream>
#include <sstream>

#include <json.hpp>

#include "divuda/errors.hpp"
#include "divuda/model.hpp"

namespace divuda {

namespace {

constexpr int kCheckpointVersion = 1;

nlohmann::json params_to_json(const ParamSet& set) {
  auto arr = nlohmann::json::array();
  for (const auto& p : set) {
    arr.push_back({{"name", p.name},
                   {"rows", p.value.rows()},
                   {"cols", p.value.cols()},
                   {"data", std::vector<double>(p.value.values().begin(), p.value.values().end())}});
  }
  return arr;
}

void params_from_json(const nlohmann::json& arr, ParamSet& set) {
  if (!arr.is_array() || arr.size() != set.size())
    throw ConfigError("checkpoint parameter list does not match architecture");
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto& e = arr[i];
    Parameter& p = set[i];
    if (e.at("name").get<std::string>() != p.name)
      throw ConfigError("checkpoint parameter " + e.at("name").get<std::string>() +
                        " where " + p.name + " was expected");
    const auto rows = e.at("rows").get<std::size_t>();
    const auto cols = e.at("cols").get<std::size_t>();
    if (rows != p.value.rows() || cols != p.value.cols())
      throw ConfigError("checkpoint shape mismatch for " + p.name);
    p.value = Matrix(rows, cols, e.at("data").get<std::vector<double>>());
  }
}

}  // namespace

std::string save_checkpoint_json(const TwinModel& model) {
  const Architecture& a = model.arch();
  nlohmann::json j;
  j["format"] = "divuda-checkpoint";
  j["version"] = kCheckpointVersion;
  j["arch"] = {{"input_dim", a.input_dim},
               {"hidden", a.hidden},
               {"num_classes", a.num_classes},
               {"mode", a.mode == HeadMode::kTwin ? "twin" : "dropout"},
               {"dropout_rate", a.dropout_rate}};
  j["generator"] = params_to_json(model.generator());
  j["head1"] = params_to_json(model.head1());
  j["head2"] = params_to_json(model.head2());
  return j.dump(1);
}

TwinModel load_checkpoint_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
    if (j.at("format") != "divuda-checkpoint") throw ConfigError("not a divuda checkpoint");
    if (j.at("version").get<int>() != kCheckpointVersion)
      throw ConfigError("unsupported checkpoint version");
    const auto& ja = j.at("arch");
    Architecture a;
    a.input_dim = ja.at("input_dim").get<std::size_t>();
    a.hidden = ja.at("hidden").get<std::size_t>();
    a.num_classes = ja.at("num_classes").get<std::size_t>();
    const auto mode = ja.at("mode").get<std::string>();
    if (mode != "twin" && mode != "dropout") throw ConfigError("unknown head mode " + mode);
    a.mode = mode == "twin" ? HeadMode::kTwin : HeadMode::kDropout;
    a.dropout_rate = ja.at("dropout_rate").get<double>();

    // Shapes and names come from a fresh init; values are then overwritten.
    TwinModel m = TwinModel::init(a, 0);
    params_from_json(j.at("generator"), m.generator_);
    params_from_json(j.at("head1"), m.head1_);
    params_from_json(j.at("head2"), m.head2_);
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const TwinModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << save_checkpoint_json(model) << '\n';
}

TwinModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_checkpoint_json(buf.str());
}

}  // namespace divuda
