// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <json.hpp>

#include "iknet/config.hpp"
#include "iknet/error.hpp"
#include "iknet/io.hpp"

using namespace iknet;

namespace {

const std::string kMinimal = R"(
[paths]
ohlcv = "ohlcv.csv"
keywords = "keywords.jsonl"
)";

std::string error_of(const std::string& text, const std::vector<std::string>& overrides = {}) {
  try {
    parse_config(text, overrides);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("defaults") {
  const RunConfig c = parse_config(kMinimal);
  CHECK(c.dataset.window == 10);
  CHECK(c.dataset.keyword_count == 17);
  CHECK(c.dataset.folds == 7);
  CHECK(c.model.hidden == 256);
  CHECK(c.train.learning_rate == 0.01);
  CHECK(c.backtest.cost == 0.003);
  CHECK(c.run.variants.size() == 3);
  const ModelConfig m = c.model_for(Variant::tech_only);
  CHECK(m.keyword_dim == 32);
  CHECK(m.variant == Variant::tech_only);
}

TEST_CASE("full TOML document") {
  const RunConfig c = parse_config(kMinimal + R"(
[dataset]
window = 5
keyword_count = 9
keyword_dim = 8
[model]
hidden = 16
dropout = 0.0
gru_mode = "unidirectional_2h"
[train]
learning_rate = 0.005
seed = 42
[shap]
grouping = "per_scalar"
exact = true
[backtest]
mode = "literal"
[run]
variants = ["full", "tech_only"]
)");
  CHECK(c.dataset.window == 5);
  CHECK(c.model.hidden == 16);
  CHECK(c.model.gru_mode == GruMode::unidirectional_2h);
  CHECK(c.train.learning_rate == 0.005);
  CHECK(c.train.seed == 42);
  CHECK(c.shap.exact);
  CHECK(c.backtest.mode == BacktestMode::literal);
  CHECK(c.run.variants == std::vector<std::string>{"full", "tech_only"});
}

TEST_CASE("field-level rejection") {
  CHECK(error_of(kMinimal + "[dataset]\nwindow = 0\n").find("dataset.window") != std::string::npos);
  CHECK(error_of(kMinimal + "[model]\nhiden = 3\n") == "config: unknown key 'model.hiden'");
  CHECK(error_of(kMinimal + "[modle]\nhidden = 3\n") == "config: unknown key 'modle.hidden'");
  CHECK(error_of(kMinimal + "[model]\nhidden = \"big\"\n").starts_with("model.hidden: expected a non-negative integer"));
  CHECK(error_of(kMinimal + "[model]\nhidden = -1\n").starts_with("model.hidden"));
  CHECK(error_of(kMinimal + "[model]\nvariant = \"half\"\n").starts_with("model.variant"));
  CHECK(error_of(kMinimal + "[shap]\ngrouping = \"odd\"\n").starts_with("shap.grouping"));
  CHECK(error_of(kMinimal + "[run]\nvariants = [\"tech_only\"]\n").starts_with("run.variants"));
  CHECK(error_of("[paths]\nohlcv = \"x\"\n").starts_with("paths.keywords"));
  CHECK(error_of("[paths]\nohlcv = \"x\"\ntexts = \"t\"\n").starts_with("paths.lexicon"));
  CHECK(error_of("[paths\n").starts_with("config: invalid TOML at line 1"));
  CHECK(error_of("{\"paths\": 3}") == "config: 'paths' must be a table");
}

TEST_CASE("overrides") {
  const RunConfig c = parse_config(kMinimal, {"dataset.window=3", "model.variant=keyword_only", "train.learning_rate=1e-3",
                                              "run.variants=[\"full\"]", "paths.output=out/x"});
  CHECK(c.dataset.window == 3);
  CHECK(c.model.variant == Variant::keyword_only);
  CHECK(c.train.learning_rate == 0.001);
  CHECK(c.run.variants == std::vector<std::string>{"full"});
  CHECK(c.paths.output == "out/x");
  CHECK(error_of(kMinimal, {"dataset.window=0"}).find("dataset.window") != std::string::npos);
  CHECK(error_of(kMinimal, {"window=3"}).find("section.key=value") != std::string::npos);
  CHECK(error_of(kMinimal, {"model.size=3"}) == "config: unknown key 'model.size'");
}

TEST_CASE("JSON input and full serialization round trip") {
  const RunConfig a = parse_config(kMinimal, {"model.hidden=12", "shap.seed=9"});
  const std::string j = config_to_json(a);
  const auto doc = nlohmann::json::parse(j);
  for (const char* section : {"paths", "dataset", "model", "train", "keywords", "shap", "backtest", "run"}) {
    CHECK(doc.contains(section));
  }
  CHECK(doc["model"]["variant"] == "full");
  const RunConfig b = parse_config(j);
  CHECK(config_to_json(b) == j);
}

TEST_CASE("files resolve inputs against their directory") {
  const auto dir = std::filesystem::temp_directory_path() / "iknet_test_config";
  write_file(dir / "run.toml", kMinimal);
  const RunConfig c = load_config(dir / "run.toml");
  CHECK(c.paths.ohlcv == (dir / "ohlcv.csv").string());
  CHECK(c.paths.output == "out");
  CHECK_THROWS_AS(load_config(dir / "missing.toml"), MissingDataError);
  std::filesystem::remove_all(dir);
}
