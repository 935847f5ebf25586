// SPDX-License-Identifier: Apache-2.0
//
// iknet command-line tool.
//
// Exit codes: 0 success, 1 internal error, 2 missing data (files, dates
// outside the data or the test range), 3 validation failure (bad config,
// arguments, or input contents), 4 numeric failure (non-finite values).
#include <CLI11.hpp>
#include <algorithm>
#include <cstdlib>
#include <iostream>
#include <json.hpp>
#include <numeric>

#include "iknet/backtest.hpp"
#include "iknet/config.hpp"
#include "iknet/error.hpp"
#include "iknet/io.hpp"
#include "iknet/pipeline.hpp"
#include "iknet/report.hpp"
#include "iknet/synth.hpp"

using namespace iknet;
namespace fs = std::filesystem;

namespace {

// Relative output paths live under $IKNET_OUTPUT_ROOT when it is set.
fs::path output_path(const std::string& path) {
  const fs::path p(path);
  if (p.is_absolute()) return p;
  if (const char* root = std::getenv("IKNET_OUTPUT_ROOT"); root && *root) return fs::path(root) / p;
  return p;
}

struct ConfigArgs {
  std::string file;
  std::vector<std::string> overrides;
  void add(CLI::App* cmd) {
    cmd->add_option("-c,--config", file, "TOML or JSON run config")->required();
    cmd->add_option("--set", overrides, "Override a config value: section.key=value");
  }
  RunConfig load() const {
    RunConfig c = load_config(file, overrides);
    c.paths.output = output_path(c.paths.output).string();
    return c;
  }
};

// Dataset dimensions come from the checkpoint so samples match the network.
RunConfig for_checkpoint(RunConfig config, const Checkpoint& ck) {
  const ModelConfig& m = ck.model.config();
  config.dataset.window = m.window;
  config.dataset.keyword_count = m.keyword_count;
  config.dataset.keyword_dim = m.keyword_dim;
  config.model.hidden = m.hidden;
  config.model.lstm_layers = m.lstm_layers;
  return config;
}

Checkpoint read_checkpoint(const std::string& path) {
  if (!fs::exists(path)) throw MissingDataError("checkpoint '" + path + "' not found");
  return load_checkpoint(path);
}

const FoldSpec& fold_by_index(const PreparedData& data, int index) {
  for (const auto& f : data.folds) {
    if (f.index == index) return f;
  }
  throw ValidationError("--fold must be in 1.." + std::to_string(data.folds.size()));
}

int cmd_synth(const std::string& kind, std::uint64_t seed, std::size_t dim, const std::string& out) {
  SynthOptions o;
  if (kind == "fixture") {
    o = fixture_options(seed);
  } else if (kind == "ten-year") {
    o = ten_year_options(seed);
  } else {
    throw ValidationError("--kind must be fixture or ten-year");
  }
  o.keyword_dim = dim;
  const fs::path lexicon = fs::path(IKNET_SOURCE_DIR) / "data" / "lexicon.csv";
  const auto written = write_market(output_path(out), generate_market(read_lexicon(lexicon), o));
  std::cout << "wrote " << written.size() << " files to " << output_path(out).string() << "\n";
  return 0;
}

int cmd_indicators(const std::string& ohlcv, const std::string& out) {
  if (!fs::exists(ohlcv)) throw MissingDataError("OHLCV file '" + ohlcv + "' not found");
  const IndicatorFrame frame = compute_indicators(read_ohlcv_csv(ohlcv));
  write_indicator_csv(output_path(out), frame);
  std::cout << "wrote " << output_path(out).string() << "\n";
  return 0;
}

struct KeywordArgs {
  std::string texts, lexicon, out, validate, pool = "max";
  std::size_t n = 17, dim = 32, epochs = 300, jobs = 1;
  std::uint64_t seed = 7;
};

int cmd_keywords(const KeywordArgs& a) {
  if (!a.validate.empty()) {
    if (!fs::exists(a.validate)) throw MissingDataError("keyword file '" + a.validate + "' not found");
    const auto problems = validate_keywords_jsonl(a.validate);
    for (const auto& p : problems) std::cerr << a.validate << ": " << p << "\n";
    if (!problems.empty()) return 3;
    std::cout << a.validate << ": valid\n";
    return 0;
  }
  if (a.texts.empty() || a.lexicon.empty() || a.out.empty()) {
    throw ValidationError("keywords needs --texts, --lexicon, and --out (or --validate FILE)");
  }
  if (!fs::exists(a.lexicon)) throw MissingDataError("lexicon '" + a.lexicon + "' not found");
  ToyClassifierOptions opts;
  opts.dim = a.dim;
  opts.epochs = a.epochs;
  opts.seed = a.seed;
  const ToyClassifier clf(read_lexicon(a.lexicon), opts);
  const auto days = extract_corpus(read_texts_dir(a.texts), clf, a.n, parse_pooling(a.pool), a.jobs);
  write_keywords_jsonl(output_path(a.out), days);
  std::cout << "wrote " << days.size() << " keyword records to " << output_path(a.out).string() << "\n";
  return 0;
}

int cmd_train(const ConfigArgs& cfg, int fold_index, const std::string& variant, std::optional<std::uint64_t> seed,
              const std::string& out) {
  RunConfig config = cfg.load();
  if (seed) config.train.seed = *seed;
  const PreparedData data = prepare_data(config, std::cerr);
  const FoldSpec& fold = fold_by_index(data, fold_index);
  const FoldSplit split = split_samples(data.samples, fold);
  const Scaler scaler = Scaler::fit(split.train, fold.label());
  const TrainedVariant t = train_variant(config, fold, split, scaler, parse_variant(variant));
  const fs::path path = output_path(out);
  save_checkpoint(path, t.checkpoint);
  fs::path manifest = path;
  manifest.replace_extension(".manifest.json");
  write_file(manifest, run_manifest_json(config, fold, t, data.inputs));
  const MetricsRow m = metrics_row(t.forecasts);
  std::cout << fold.label() << " " << variant << " rmse " << m.rmse << " smape " << m.smape << "\n";
  return 0;
}

int cmd_eval(const ConfigArgs& cfg, const std::string& checkpoint, const std::string& out) {
  const Checkpoint ck = read_checkpoint(checkpoint);
  const RunConfig config = for_checkpoint(cfg.load(), ck);
  const PreparedData data = prepare_data(config, std::cerr);
  const FoldSplit split = split_samples(data.samples, ck.fold);
  if (split.test.empty()) throw MissingDataError("no test samples for " + ck.fold.label());
  std::vector<ForecastSeries> series{series_from_predictions(predict(ck.model, split.test, ck.scaler),
                                                             to_string(ck.model.config().variant), ck.fold.label())};
  series.push_back(ridge_baseline(split.train, split.test, ck.scaler, ck.fold.label()));
  series.push_back(persistence_baseline(split.test, ck.fold.label()));
  std::vector<MetricsRow> rows;
  std::string forecasts;
  for (const auto& s : series) {
    rows.push_back(metrics_row(s));
    std::string part = forecasts_csv(s);
    if (!forecasts.empty()) part.erase(0, part.find('\n') + 1);
    forecasts += part;
  }
  const fs::path dir = output_path(out);
  write_file(dir / "forecasts.csv", forecasts);
  write_file(dir / "metrics.csv", metrics_csv(rows));
  write_file(dir / "dm.csv", dm_matrix_csv(series));
  std::cout << metrics_csv(rows);
  return 0;
}

int cmd_backtest(const std::string& forecasts, const std::string& ohlcv, double cost, const std::string& mode,
                 const std::string& out) {
  for (const auto& f : {forecasts, ohlcv}) {
    if (!fs::exists(f)) throw MissingDataError("'" + f + "' not found");
  }
  StrategyConfig s;
  s.cost = cost;
  s.mode = parse_backtest_mode(mode);
  const TradeLedger ledger = simulate(read_forecasts_csv(forecasts), price_path(read_ohlcv_csv(ohlcv)), s);
  const fs::path dir = output_path(out);
  write_file(dir / "ledger.csv", ledger_csv(ledger));
  write_file(dir / "backtest.json", backtest_summary_json(ledger));
  std::cout << "cumulative return " << ledger.cumulative_percent << "% over " << ledger.days.size() << " days\n";
  return 0;
}

int cmd_explain(const ConfigArgs& cfg, const std::string& checkpoint, const std::string& date_text, bool exact,
                const std::string& out) {
  const Date date = parse_date(date_text);
  const Checkpoint ck = read_checkpoint(checkpoint);
  const RunConfig config = for_checkpoint(cfg.load(), ck);
  const PreparedData data = prepare_data(config, std::cerr);
  if (!std::binary_search(data.frame.dates.begin(), data.frame.dates.end(), date)) {
    throw MissingDataError(date_text + " is not a trading day in the price data");
  }
  const FoldSplit split = split_samples(data.samples, ck.fold);
  const auto it = std::find_if(split.test.begin(), split.test.end(), [&](const Sample* s) { return s->target_date == date; });
  if (it == split.test.end()) {
    throw MissingDataError(date_text + " is outside the test range " + ck.fold.test.label() + " of the checkpoint");
  }
  ShapOptions so;
  so.coalitions = config.shap.coalitions;
  so.seed = fold_seed(config.shap.seed, ck.fold, "shap");
  const Attribution a = explain_samples(ck.model, ck.scaler, {*it}, background_samples(split.train, config.shap.background),
                                        grouping_for(config), so, config.run.jobs, exact || config.shap.exact)
                            .front();
  if (a.efficiency_gap() > 1e-6) throw NumericError("attribution efficiency gap " + std::to_string(a.efficiency_gap()));

  KeywordSet keywords;
  keywords.date = (*it)->anchor_date;
  std::string article;
  for (std::size_t i = 0; i < (*it)->keyword_count; ++i) {
    const auto row = (*it)->keywords.data().subspan(i * (*it)->keywords.cols(), (*it)->keywords.cols());
    keywords.entries.push_back({(*it)->words[i], 0.0, {row.begin(), row.end()}});
    article += (article.empty() ? "" : " ") + (*it)->words[i];
  }
  if (auto t = data.texts.find((*it)->anchor_date); t != data.texts.end() && !t->second.empty()) {
    article.clear();
    for (const auto& s : t->second) article += (article.empty() ? "" : "\n\n") + s;
  }
  const TextReport report = render_text_attribution(article, keywords, a);

  std::vector<std::size_t> order(a.phi.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto x, auto y) { return std::abs(a.phi[x]) > std::abs(a.phi[y]); });
  order.resize(std::min<std::size_t>(order.size(), 20));
  std::vector<std::string> labels;
  std::vector<double> values;
  for (auto i : order) {
    labels.push_back(a.labels[i]);
    values.push_back(a.phi[i]);
  }
  const fs::path dir = output_path(out);
  const std::string stem = "attribution_" + format_date(date);
  write_file(dir / (stem + ".json"), attribution_to_json(a));
  write_file(dir / (stem + ".html"), report.html);
  write_file(dir / (stem + ".words.json"), report.json);
  write_file(dir / (stem + ".svg"), bar_chart_svg("SHAP values for " + format_date(date), labels, values));
  std::cout << format_date(date) << " base " << a.base << " output " << a.output << " efficiency gap "
            << a.efficiency_gap() << "\n";
  return 0;
}

int cmd_pipeline(const ConfigArgs& cfg, std::size_t jobs, std::optional<std::uint64_t> seed, const std::string& out) {
  RunConfig config = cfg.load();
  PipelineOptions options;
  options.jobs = jobs ? jobs : config.run.jobs;
  if (seed) {
    config.train.seed = *seed;
    options.seed_source = "cli";
  } else {
    std::cerr << "warning: no --seed given; using train.seed = " << config.train.seed
              << " from the config (pass --seed for a published run)\n";
  }
  if (!out.empty()) config.paths.output = output_path(out).string();
  const PipelineResult r = run_pipeline(config, options, std::cerr);
  std::cout << metrics_csv(r.metrics);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"IKNet forecasting and explainability engine"};
  app.require_subcommand(1);

  std::string kind = "fixture", out;
  std::uint64_t synth_seed = 1;
  std::size_t synth_dim = 8;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic market (OHLCV, keywords, texts)");
  synth->add_option("--kind", kind, "fixture | ten-year")->capture_default_str();
  synth->add_option("--seed", synth_seed, "Generator seed")->capture_default_str();
  synth->add_option("--keyword-dim", synth_dim, "Embedding dimension")->capture_default_str();
  synth->add_option("-o,--out", out, "Output directory")->required();

  std::string ohlcv;
  auto* indicators = app.add_subcommand("indicators", "Compute the 17 indicator features");
  indicators->add_option("--ohlcv", ohlcv, "OHLCV CSV")->required();
  indicators->add_option("-o,--out", out, "Output CSV")->required();

  KeywordArgs kw;
  auto* keywords = app.add_subcommand("keywords", "Extract keywords from raw texts, or validate a keyword file");
  keywords->add_option("--texts", kw.texts, "Directory of <date>.txt files");
  keywords->add_option("--lexicon", kw.lexicon, "Lexicon CSV for the toy classifier");
  keywords->add_option("-o,--out", kw.out, "Output JSONL");
  keywords->add_option("-n,--count", kw.n, "Keywords per day")->capture_default_str();
  keywords->add_option("--pool", kw.pool, "Cross-article pooling: max | mean")->capture_default_str();
  keywords->add_option("--dim", kw.dim, "Classifier embedding dimension")->capture_default_str();
  keywords->add_option("--classifier-epochs", kw.epochs, "Toy classifier training epochs")->capture_default_str();
  keywords->add_option("--classifier-seed", kw.seed, "Toy classifier seed")->capture_default_str();
  keywords->add_option("--jobs", kw.jobs, "Worker threads")->capture_default_str();
  keywords->add_option("--validate", kw.validate, "Validate a keyword JSONL file and report problems");

  ConfigArgs train_cfg, eval_cfg, explain_cfg, pipeline_cfg;
  int fold = 1;
  std::string variant = "full", checkpoint, date, forecasts, mode = "standard";
  std::optional<std::uint64_t> seed;
  double cost = 0.003;
  bool exact = false;
  std::size_t jobs = 0;

  auto* train = app.add_subcommand("train", "Train one variant on one fold");
  train_cfg.add(train);
  train->add_option("--fold", fold, "1-based fold index")->required();
  train->add_option("--variant", variant, "full | tech_only | keyword_only")->capture_default_str();
  train->add_option("--seed", seed, "Training seed (overrides train.seed)");
  train->add_option("-o,--out", out, "Checkpoint path (.json)")->required();

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on its test period against baselines");
  eval_cfg.add(eval);
  eval->add_option("--checkpoint", checkpoint, "Checkpoint JSON")->required();
  eval->add_option("-o,--out", out, "Output directory")->required();

  auto* backtest = app.add_subcommand("backtest", "Long/flat backtest of a forecast CSV");
  backtest->add_option("--forecasts", forecasts, "Forecast CSV (date,model,fold,forecast,actual)")->required();
  backtest->add_option("--ohlcv", ohlcv, "OHLCV CSV")->required();
  backtest->add_option("--cost", cost, "Per-leg transaction cost")->capture_default_str();
  backtest->add_option("--mode", mode, "standard | literal")->capture_default_str();
  backtest->add_option("-o,--out", out, "Output directory")->required();

  auto* explain = app.add_subcommand("explain", "SHAP attribution for one forecast date");
  explain_cfg.add(explain);
  explain->add_option("--checkpoint", checkpoint, "Checkpoint JSON")->required();
  explain->add_option("--date", date, "Forecast (target) date, YYYY-MM-DD")->required();
  explain->add_flag("--exact", exact, "Enumerate all coalitions");
  explain->add_option("-o,--out", out, "Output directory")->required();

  auto* pipeline = app.add_subcommand("pipeline", "Full walk-forward experiment");
  pipeline_cfg.add(pipeline);
  pipeline->add_option("--jobs", jobs, "Parallel folds (default run.jobs)");
  pipeline->add_option("--seed", seed, "Master seed (required for published runs)");
  pipeline->add_option("-o,--out", out, "Output directory (overrides paths.output)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 3;
  }

  try {
    if (*synth) return cmd_synth(kind, synth_seed, synth_dim, out);
    if (*indicators) return cmd_indicators(ohlcv, out);
    if (*keywords) return cmd_keywords(kw);
    if (*train) return cmd_train(train_cfg, fold, variant, seed, out);
    if (*eval) return cmd_eval(eval_cfg, checkpoint, out);
    if (*backtest) return cmd_backtest(forecasts, ohlcv, cost, mode, out);
    if (*explain) return cmd_explain(explain_cfg, checkpoint, date, exact, out);
    if (*pipeline) return cmd_pipeline(pipeline_cfg, jobs, seed, out);
  } catch (const MissingDataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const DimensionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
