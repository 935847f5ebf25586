// SPDX-License-Identifier: Apache-2.0
#include "iknet/pipeline.hpp"

#include <algorithm>
#include <json.hpp>
#include <ostream>

#include "iknet/backtest.hpp"
#include "iknet/error.hpp"
#include "iknet/io.hpp"
#include "iknet/parallel.hpp"
#include "iknet/report.hpp"
#include "iknet/saliency.hpp"

namespace iknet {

using nlohmann::json;

namespace {

json fold_json(const FoldSpec& f) {
  return {{"index", f.index},
          {"label", f.label()},
          {"period_months", f.period_months},
          {"train_start", format_date(f.train.start)},
          {"train_end", format_date(f.train.end)},
          {"test_start", format_date(f.test.start)},
          {"test_end", format_date(f.test.end)}};
}

json digests_json(const std::vector<InputDigest>& digests) {
  json out = json::array();
  for (const auto& d : digests) out.push_back({{"path", d.path}, {"sha256", d.sha256}});
  return out;
}

std::string combined_forecasts_csv(const std::vector<ForecastSeries>& series) {
  std::string out;
  for (const auto& s : series) {
    std::string part = forecasts_csv(s);
    if (!out.empty()) part.erase(0, part.find('\n') + 1);
    out += part;
  }
  return out;
}

std::string fold_dir(const FoldSpec& f) { return "folds/fold" + std::to_string(f.index) + "/"; }

// Article text shown in the attribution report for an anchor day.
std::string article_for(const PreparedData& data, const Sample& s) {
  if (auto it = data.texts.find(s.anchor_date); it != data.texts.end() && !it->second.empty()) {
    std::string text;
    for (const auto& a : it->second) text += (text.empty() ? "" : "\n\n") + a;
    return text;
  }
  std::string text;
  for (const auto& w : s.words) {
    if (!w.empty()) text += (text.empty() ? "" : " ") + w;
  }
  return text;
}

KeywordSet keywords_of(const Sample& s) {
  KeywordSet set;
  set.date = s.anchor_date;
  for (std::size_t i = 0; i < s.keyword_count; ++i) {
    const auto row = s.keywords.data().subspan(i * s.keywords.cols(), s.keywords.cols());
    set.entries.push_back({s.words[i], 0.0, {row.begin(), row.end()}});
  }
  return set;
}

}  // namespace

PreparedData prepare_data(const RunConfig& config, std::ostream& log) {
  PreparedData data;
  const auto& paths = config.paths;
  if (!std::filesystem::exists(paths.ohlcv)) throw MissingDataError("OHLCV file '" + paths.ohlcv + "' not found");
  data.bars = read_ohlcv_csv(paths.ohlcv);
  data.inputs.push_back({paths.ohlcv, sha256_file(paths.ohlcv)});
  data.frame = compute_indicators(data.bars);

  std::optional<std::size_t> dim;
  if (!paths.keywords.empty()) {
    if (!std::filesystem::exists(paths.keywords)) {
      throw MissingDataError("keyword file '" + paths.keywords + "' not found");
    }
    KeywordFile file = read_keywords_jsonl(paths.keywords);
    data.keywords = std::move(file.days);
    dim = file.dim;
    data.inputs.push_back({paths.keywords, sha256_file(paths.keywords)});
  } else {
    if (!std::filesystem::exists(paths.lexicon)) throw MissingDataError("lexicon '" + paths.lexicon + "' not found");
    data.texts = read_texts_dir(paths.texts);
    if (data.texts.empty()) throw MissingDataError("texts directory '" + paths.texts + "' has no .txt files");
    data.inputs.push_back({paths.lexicon, sha256_file(paths.lexicon)});
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(paths.texts)) {
      if (e.is_regular_file() && e.path().extension() == ".txt") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) data.inputs.push_back({f.string(), sha256_file(f)});
    ToyClassifierOptions opts;
    opts.dim = config.keywords.classifier_dim;
    opts.epochs = config.keywords.classifier_epochs;
    opts.seed = config.keywords.classifier_seed;
    const ToyClassifier clf(read_lexicon(paths.lexicon), opts);
    log << "extracting keywords from " << data.texts.size() << " days of text\n";
    data.keywords = extract_corpus(data.texts, clf, config.dataset.keyword_count,
                                   parse_pooling(config.keywords.pooling), config.run.jobs);
    data.keywords_extracted = true;
    dim = clf.dim();
  }
  if (dim && *dim != config.dataset.keyword_dim) {
    throw ValidationError("dataset.keyword_dim is " + std::to_string(config.dataset.keyword_dim) +
                          " but the keywords have dimension " + std::to_string(*dim));
  }
  const auto aligned = align_keywords(data.keywords, data.frame.dates, &data.alignment);
  data.samples = assemble_samples(data.frame, aligned, config.sample_options());
  data.folds = build_folds(config.dataset.first_train_year, config.dataset.folds, config.dataset.period_months,
                           config.dataset.first_month);
  check_coverage(data.folds, data.frame.dates);
  log << "prepared " << data.bars.size() << " bars, " << data.keywords.size() << " keyword records, "
      << data.samples.size() << " samples, " << data.folds.size() << " folds\n";
  return data;
}

std::uint64_t fold_seed(std::uint64_t seed, const FoldSpec& fold, std::string_view purpose) {
  return Philox::derive(Philox::derive(seed, purpose), static_cast<std::uint64_t>(fold.index));
}

TrainedVariant train_variant(const RunConfig& config, const FoldSpec& fold, const FoldSplit& split,
                             const Scaler& scaler, Variant variant) {
  if (split.train.empty()) throw MissingDataError("fold " + fold.label() + " has no training samples");
  if (split.test.empty()) throw MissingDataError("fold " + fold.label() + " has no test samples");
  TrainedVariant out;
  out.variant = variant;
  const ModelConfig mc = config.model_for(variant);
  // Variants of one fold share initial weights and batch order.
  IknetModel model(mc, fold_seed(config.train.seed, fold, "init"));
  TrainConfig tc = config.train;
  tc.seed = fold_seed(config.train.seed, fold, "train");
  out.result = train(model, make_inputs(split.train, scaler, mc), tc);
  model.scaler_tag = scaler.tag;
  out.forecasts = series_from_predictions(predict(model, split.test, scaler), to_string(variant), fold.label());
  out.checkpoint = {std::move(model), scaler, fold, tc};
  return out;
}

const TrainedVariant& FoldRun::full() const {
  for (const auto& m : models) {
    if (m.variant == Variant::full) return m;
  }
  throw ValidationError("fold " + fold.label() + " has no full model");
}

std::vector<ForecastSeries> FoldRun::all_series() const {
  std::vector<ForecastSeries> out;
  for (const auto& m : models) out.push_back(m.forecasts);
  out.insert(out.end(), baselines.begin(), baselines.end());
  return out;
}

FeatureGrouping grouping_for(const RunConfig& config) {
  const ModelConfig mc = config.model_for(Variant::full);
  if (config.shap.grouping == "per_scalar") return per_scalar_grouping(mc);
  if (config.shap.grouping == "coarse") return coarsen(default_grouping(mc), config.shap.max_groups);
  return default_grouping(mc);
}

namespace {

std::vector<const Sample*> evenly_spaced(const std::vector<const Sample*>& from, std::size_t count) {
  if (count >= from.size()) return from;
  std::vector<const Sample*> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(from[(2 * i + 1) * from.size() / (2 * count)]);
  return out;
}

}  // namespace

std::vector<const Sample*> background_samples(const std::vector<const Sample*>& train, std::size_t count) {
  return evenly_spaced(train, count);
}

std::vector<const Sample*> explained_samples(const std::vector<const Sample*>& test, std::size_t count) {
  return evenly_spaced(test, count);
}

FoldRun run_fold(const RunConfig& config, const PreparedData& data, const FoldSpec& fold) {
  FoldRun run;
  run.fold = fold;
  const FoldSplit split = split_samples(data.samples, fold);
  run.train_size = split.train.size();
  run.test_size = split.test.size();
  run.audit.record_training(fold, split.train, data.frame.dates, config.dataset.window);
  run.audit.record_test(fold, split.test);
  const Scaler scaler = Scaler::fit(split.train, fold.label());

  std::vector<Variant> variants{Variant::full};
  for (const auto& name : config.run.variants) {
    const Variant v = parse_variant(name);
    if (std::find(variants.begin(), variants.end(), v) == variants.end()) variants.push_back(v);
  }
  for (Variant v : variants) run.models.push_back(train_variant(config, fold, split, scaler, v));
  if (config.run.baselines) {
    run.baselines.push_back(ridge_baseline(split.train, split.test, scaler, fold.label()));
    run.baselines.push_back(persistence_baseline(split.test, fold.label()));
  }
  if (config.shap.dates_per_fold > 0) {
    ShapOptions so;
    so.coalitions = config.shap.coalitions;
    so.seed = fold_seed(config.shap.seed, fold, "shap");
    run.attributions = explain_samples(run.full().checkpoint.model, scaler,
                                       explained_samples(split.test, config.shap.dates_per_fold),
                                       background_samples(split.train, config.shap.background), grouping_for(config),
                                       so, 1, config.shap.exact);
  }
  return run;
}

std::string run_manifest_json(const RunConfig& config, const FoldSpec& fold, const TrainedVariant& trained,
                              const std::vector<InputDigest>& inputs) {
  json j;
  j["format"] = "iknet.run/1";
  j["variant"] = to_string(trained.variant);
  j["config"] = json::parse(config_to_json(config));
  j["fold"] = fold_json(fold);
  j["seed"] = config.train.seed;
  j["init_seed"] = fold_seed(config.train.seed, fold, "init");
  j["train_seed"] = trained.checkpoint.train.seed;
  j["inputs"] = digests_json(inputs);
  const MetricsRow m = metrics_row(trained.forecasts);
  j["metrics"] = {{"n", m.n},
                  {"rmse", m.rmse},
                  {"smape", m.smape},
                  {"initial_loss", trained.result.epoch_loss.front()},
                  {"final_loss", trained.result.epoch_loss.back()},
                  {"epochs_run", trained.result.epoch_loss.size()}};
  j["assumptions"] = {"loss: mean squared error on z-scored targets",
                      "keyword order: saliency descending, ties by word",
                      "learning rate: constant (no decay)"};
  return j.dump(2);
}

void ArtifactWriter::write(const std::string& relative, std::string_view content) {
  write_file(root_ / relative, content);
  digests_[relative] = sha256_hex(content);
}

std::vector<InputDigest> ArtifactWriter::artifacts() const {
  std::vector<InputDigest> out;
  for (const auto& [path, digest] : digests_) out.push_back({path, digest});
  return out;
}

PipelineResult run_pipeline(const RunConfig& config, const PipelineOptions& options, std::ostream& log) {
  config.validate();
  const PreparedData data = prepare_data(config, log);
  PipelineResult result;
  result.output = config.paths.output;
  result.folds.resize(data.folds.size());
  log << "training " << data.folds.size() << " folds with " << options.jobs << " worker(s)\n";
  parallel_for(data.folds.size(), options.jobs,
               [&](std::size_t i) { result.folds[i] = run_fold(config, data, data.folds[i]); });

  ArtifactWriter out(config.paths.output);
  out.write("config.json", config_to_json(config));
  {
    const auto tmp = std::filesystem::path(config.paths.output) / "indicators.csv";
    write_indicator_csv(tmp, data.frame);
    out.write("indicators.csv", read_file(tmp));
  }
  if (data.keywords_extracted) {
    std::string jsonl;
    for (const auto& k : data.keywords) jsonl += keyword_set_to_jsonl(k) + "\n";
    out.write("keywords.jsonl", jsonl);
  }
  out.write("alignment.json", json{{"attached", data.alignment.attached},
                                   {"shifted", data.alignment.shifted},
                                   {"dropped", data.alignment.dropped},
                                   {"merged_days", data.alignment.merged_days}}
                                  .dump(2));

  const StrategyConfig strategy = config.backtest;
  std::vector<Attribution> all_attributions;
  std::map<std::string, std::vector<ForecastSeries>> per_model;
  std::vector<std::string> model_order;
  for (const auto& run : result.folds) {
    const std::string dir = fold_dir(run.fold);
    for (const auto& m : run.models) {
      const std::string name = to_string(m.variant);
      save_checkpoint(out.root() / (dir + "checkpoint_" + name + ".json"), m.checkpoint);
      out.write(dir + "checkpoint_" + name + ".json", read_file(out.root() / (dir + "checkpoint_" + name + ".json")));
      out.write(dir + "checkpoint_" + name + ".manifest.json", run_manifest_json(config, run.fold, m, data.inputs));
    }
    const auto series = run.all_series();
    for (const auto& s : series) {
      if (!per_model.count(s.model)) model_order.push_back(s.model);
      per_model[s.model].push_back(s);
      result.metrics.push_back(metrics_row(s));
    }
    out.write(dir + "forecasts.csv", combined_forecasts_csv(series));
    out.write(dir + "dm.csv", dm_matrix_csv(series));
    out.write(dir + "audit.txt", run.audit.text());

    const TradeLedger ledger = simulate(run.full().forecasts, price_path(data.bars), strategy);
    out.write(dir + "ledger.csv", ledger_csv(ledger));
    out.write(dir + "backtest.json", backtest_summary_json(ledger));

    std::vector<LineSeries> lines{{"actual", run.full().forecasts.actual}};
    for (const auto& s : series) lines.push_back({s.model, s.forecast});
    out.write(dir + "prediction.svg",
              line_chart_svg("Prediction vs actual, " + run.fold.test.label(), run.full().forecasts.dates, lines));

    if (!run.attributions.empty()) {
      const FoldSplit split = split_samples(data.samples, run.fold);
      const auto explained = explained_samples(split.test, config.shap.dates_per_fold);
      for (std::size_t k = 0; k < run.attributions.size(); ++k) {
        const Attribution& a = run.attributions[k];
        const std::string stem = dir + "attribution_" + format_date(a.date);
        out.write(stem + ".json", attribution_to_json(a));
        const TextReport report = render_text_attribution(article_for(data, *explained[k]), keywords_of(*explained[k]), a);
        out.write(stem + ".html", report.html);
        out.write(stem + ".words.json", report.json);
      }
      const auto ranking = global_importance(run.attributions);
      out.write(dir + "importance.csv", importance_csv(ranking));
      all_attributions.insert(all_attributions.end(), run.attributions.begin(), run.attributions.end());
    }
  }

  std::vector<ForecastSeries> overall;
  for (const auto& name : model_order) {
    overall.push_back(concat_series(per_model[name], name, "all"));
    result.metrics.push_back(metrics_row(overall.back()));
  }
  out.write("metrics.csv", metrics_csv(result.metrics));
  out.write("dm.csv", dm_matrix_csv(overall));
  out.write("forecasts.csv", combined_forecasts_csv(overall));
  if (!all_attributions.empty()) {
    const auto ranking = global_importance(all_attributions);
    out.write("importance.csv", importance_csv(ranking));
    std::vector<std::string> labels;
    std::vector<double> values;
    for (std::size_t i = 0; i < std::min<std::size_t>(ranking.size(), 20); ++i) {
      labels.push_back(ranking[i].label);
      values.push_back(ranking[i].mean_abs);
    }
    out.write("importance.svg", bar_chart_svg("Mean |SHAP| by feature group", labels, values));
  }

  result.artifacts = out.artifacts();
  json manifest;
  manifest["format"] = "iknet.manifest/1";
  manifest["seed"] = config.train.seed;
  manifest["seed_source"] = options.seed_source;
  manifest["config"] = json::parse(config_to_json(config));
  manifest["inputs"] = digests_json(data.inputs);
  manifest["folds"] = json::array();
  for (const auto& run : result.folds) {
    json f = fold_json(run.fold);
    f["train_samples"] = run.train_size;
    f["test_samples"] = run.test_size;
    manifest["folds"].push_back(f);
  }
  manifest["artifacts"] = digests_json(result.artifacts);
  write_file(std::filesystem::path(config.paths.output) / "manifest.json", manifest.dump(2));
  log << "wrote " << result.artifacts.size() << " artifacts and manifest.json to " << config.paths.output << "\n";
  return result;
}

}  // namespace iknet
