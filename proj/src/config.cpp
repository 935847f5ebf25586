// SPDX-License-Identifier: Apache-2.0
#include "iknet/config.hpp"

#include <functional>
#include <json.hpp>
#include <sstream>
#include <tomlplusplus/toml.hpp>

#include "iknet/error.hpp"
#include "iknet/io.hpp"

namespace iknet {

using nlohmann::json;

namespace {

struct Field {
  std::string section;
  std::string key;
  std::function<void(const json&, const std::string&)> set;
  std::function<json()> get;
};

std::size_t as_size(const json& j, const std::string& path) {
  if (j.is_number_unsigned()) return j.get<std::size_t>();
  if (j.is_number_integer() && j.get<long long>() >= 0) return static_cast<std::size_t>(j.get<long long>());
  throw ValidationError(path + ": expected a non-negative integer, got " + j.dump());
}

int as_int(const json& j, const std::string& path) {
  if (!j.is_number_integer()) throw ValidationError(path + ": expected an integer, got " + j.dump());
  return j.get<int>();
}

double as_double(const json& j, const std::string& path) {
  if (!j.is_number()) throw ValidationError(path + ": expected a number, got " + j.dump());
  return j.get<double>();
}

std::string as_string(const json& j, const std::string& path) {
  if (!j.is_string()) throw ValidationError(path + ": expected a string, got " + j.dump());
  return j.get<std::string>();
}

bool as_bool(const json& j, const std::string& path) {
  if (!j.is_boolean()) throw ValidationError(path + ": expected true or false, got " + j.dump());
  return j.get<bool>();
}

std::vector<std::string> as_strings(const json& j, const std::string& path) {
  if (!j.is_array()) throw ValidationError(path + ": expected an array of strings");
  std::vector<std::string> out;
  for (const auto& e : j) out.push_back(as_string(e, path));
  return out;
}

template <class T, class Conv>
Field field(std::string section, std::string key, T& target, Conv conv) {
  return {section, key, [&target, conv](const json& j, const std::string& path) { target = conv(j, path); },
          [&target] { return json(target); }};
}

std::vector<Field> fields(RunConfig& c) {
  std::vector<Field> f{
      field("paths", "ohlcv", c.paths.ohlcv, as_string),
      field("paths", "keywords", c.paths.keywords, as_string),
      field("paths", "texts", c.paths.texts, as_string),
      field("paths", "lexicon", c.paths.lexicon, as_string),
      field("paths", "output", c.paths.output, as_string),
      field("dataset", "window", c.dataset.window, as_size),
      field("dataset", "keyword_count", c.dataset.keyword_count, as_size),
      field("dataset", "keyword_dim", c.dataset.keyword_dim, as_size),
      field("dataset", "first_train_year", c.dataset.first_train_year, as_int),
      field("dataset", "folds", c.dataset.folds, as_int),
      field("dataset", "period_months", c.dataset.period_months, as_int),
      field("dataset", "first_month", c.dataset.first_month, as_int),
      field("model", "hidden", c.model.hidden, as_size),
      field("model", "lstm_layers", c.model.lstm_layers, as_size),
      field("model", "dropout", c.model.dropout, as_double),
      field("train", "learning_rate", c.train.learning_rate, as_double),
      field("train", "batch_size", c.train.batch_size, as_size),
      field("train", "epochs", c.train.epochs, as_size),
      field("train", "seed", c.train.seed, as_size),
      field("train", "patience", c.train.patience, as_size),
      field("keywords", "pooling", c.keywords.pooling, as_string),
      field("keywords", "classifier_dim", c.keywords.classifier_dim, as_size),
      field("keywords", "classifier_epochs", c.keywords.classifier_epochs, as_size),
      field("keywords", "classifier_seed", c.keywords.classifier_seed, as_size),
      field("shap", "coalitions", c.shap.coalitions, as_size),
      field("shap", "background", c.shap.background, as_size),
      field("shap", "dates_per_fold", c.shap.dates_per_fold, as_size),
      field("shap", "grouping", c.shap.grouping, as_string),
      field("shap", "max_groups", c.shap.max_groups, as_size),
      field("shap", "exact", c.shap.exact, as_bool),
      field("shap", "seed", c.shap.seed, as_size),
      field("backtest", "cost", c.backtest.cost, as_double),
      field("run", "variants", c.run.variants, as_strings),
      field("run", "baselines", c.run.baselines, as_bool),
      field("run", "jobs", c.run.jobs, as_size),
  };
  f.push_back({"model", "variant",
               [&c](const json& j, const std::string& p) { c.model.variant = parse_variant(as_string(j, p)); },
               [&c] { return json(to_string(c.model.variant)); }});
  f.push_back({"model", "gru_mode",
               [&c](const json& j, const std::string& p) { c.model.gru_mode = parse_gru_mode(as_string(j, p)); },
               [&c] { return json(to_string(c.model.gru_mode)); }});
  f.push_back({"backtest", "mode",
               [&c](const json& j, const std::string& p) { c.backtest.mode = parse_backtest_mode(as_string(j, p)); },
               [&c] { return json(to_string(c.backtest.mode)); }});
  return f;
}

json document(const std::string& text) {
  const auto start = text.find_first_not_of(" \t\r\n");
  if (start != std::string::npos && text[start] == '{') {
    try {
      return json::parse(text);
    } catch (const json::exception& e) {
      throw ValidationError(std::string("config: invalid JSON: ") + e.what());
    }
  }
  try {
    const toml::table table = toml::parse(text);
    std::ostringstream out;
    out << toml::json_formatter{table};
    return json::parse(out.str());
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << "config: invalid TOML at line " << e.source().begin.line << ": " << e.description();
    throw ValidationError(msg.str());
  }
}

void apply_override(json& root, const std::string& item) {
  const auto eq = item.find('=');
  const auto dot = item.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
    throw ValidationError("override '" + item + "' must look like section.key=value");
  }
  const std::string section = item.substr(0, dot), key = item.substr(dot + 1, eq - dot - 1);
  const std::string raw = item.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::exception&) {
    value = raw;  // bare strings need no quotes
  }
  if (!root.contains(section)) root[section] = json::object();
  if (!root[section].is_object()) throw ValidationError("config: '" + section + "' must be a table");
  root[section][key] = value;
}

}  // namespace

void RunConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ValidationError(msg); };
  if (paths.ohlcv.empty()) fail("paths.ohlcv must be set");
  if (paths.keywords.empty() && paths.texts.empty()) fail("paths.keywords or paths.texts must be set");
  if (paths.keywords.empty() && paths.lexicon.empty()) fail("paths.lexicon is required when keywords come from texts");
  if (paths.output.empty()) fail("paths.output must be set");
  if (dataset.window < 1) fail("dataset.window must be >= 1 (got " + std::to_string(dataset.window) + ")");
  if (dataset.keyword_count < 1) fail("dataset.keyword_count must be >= 1");
  if (dataset.keyword_dim < 1) fail("dataset.keyword_dim must be >= 1");
  if (dataset.folds < 1) fail("dataset.folds must be >= 1");
  if (dataset.period_months < 1 || dataset.period_months > 12 || 12 % dataset.period_months != 0) {
    fail("dataset.period_months must divide 12");
  }
  if (dataset.first_month < 1 || dataset.first_month > 12) fail("dataset.first_month must be in 1..12");
  if (model.hidden < 1) fail("model.hidden must be >= 1");
  if (model.lstm_layers < 1) fail("model.lstm_layers must be >= 1");
  if (!(model.dropout >= 0.0 && model.dropout < 1.0)) fail("model.dropout must be in [0, 1)");
  if (!(train.learning_rate > 0.0)) fail("train.learning_rate must be positive");
  if (train.batch_size < 1) fail("train.batch_size must be >= 1");
  if (train.epochs < 1) fail("train.epochs must be >= 1");
  parse_pooling(keywords.pooling);
  if (keywords.classifier_dim < 1) fail("keywords.classifier_dim must be >= 1");
  if (shap.grouping != "default" && shap.grouping != "per_scalar" && shap.grouping != "coarse") {
    fail("shap.grouping must be default, per_scalar, or coarse");
  }
  if (shap.coalitions < 2) fail("shap.coalitions must be >= 2");
  if (shap.background < 1) fail("shap.background must be >= 1");
  if (shap.max_groups < 2) fail("shap.max_groups must be >= 2");
  if (!(backtest.cost >= 0.0 && backtest.cost < 1.0)) fail("backtest.cost must be in [0, 1)");
  if (run.variants.empty()) fail("run.variants must not be empty");
  for (const auto& v : run.variants) parse_variant(v);
  if (std::find(run.variants.begin(), run.variants.end(), "full") == run.variants.end()) {
    fail("run.variants must include full");
  }
  if (run.jobs < 1) fail("run.jobs must be >= 1");
  model_for(model.variant).validate();
}

ModelConfig RunConfig::model_for(Variant variant) const {
  ModelConfig m = model;
  m.window = dataset.window;
  m.keyword_count = dataset.keyword_count;
  m.keyword_dim = dataset.keyword_dim;
  m.variant = variant;
  return m;
}

SampleOptions RunConfig::sample_options() const {
  return {dataset.window, dataset.keyword_count, dataset.keyword_dim};
}

RunConfig parse_config(const std::string& text, const std::vector<std::string>& overrides) {
  json root = document(text);
  if (!root.is_object()) throw ValidationError("config: top level must be a table");
  for (const auto& o : overrides) apply_override(root, o);
  RunConfig config;
  auto table = fields(config);
  for (const auto& [section, body] : root.items()) {
    if (!body.is_object()) throw ValidationError("config: '" + section + "' must be a table");
    for (const auto& [key, value] : body.items()) {
      const std::string path = section + "." + key;
      auto it = std::find_if(table.begin(), table.end(), [&](const Field& f) { return f.section == section && f.key == key; });
      if (it == table.end()) throw ValidationError("config: unknown key '" + path + "'");
      try {
        it->set(value, path);
      } catch (const ValidationError& e) {
        const std::string what = e.what();
        throw ValidationError(what.starts_with(path) ? what : path + ": " + what);
      }
    }
  }
  config.validate();
  return config;
}

RunConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  if (!std::filesystem::exists(path)) throw MissingDataError("config file '" + path.string() + "' not found");
  RunConfig config = parse_config(read_file(path), overrides);
  const auto base = path.parent_path();
  for (std::string* p : {&config.paths.ohlcv, &config.paths.keywords, &config.paths.texts, &config.paths.lexicon}) {
    if (!p->empty() && std::filesystem::path(*p).is_relative()) *p = (base / *p).lexically_normal().string();
  }
  return config;
}

std::string config_to_json(const RunConfig& config) {
  RunConfig copy = config;
  json out = json::object();
  for (const auto& f : fields(copy)) out[f.section][f.key] = f.get();
  return out.dump(2);
}

}  // namespace iknet
