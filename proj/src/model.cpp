// SPDX-License-Identifier: Apache-2.0
#include "iknet/model.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <numeric>

#include "iknet/error.hpp"
#include "iknet/io.hpp"

namespace iknet {

using nlohmann::json;

std::string to_string(Variant v) {
  switch (v) {
    case Variant::full: return "full";
    case Variant::tech_only: return "tech_only";
    case Variant::keyword_only: return "keyword_only";
  }
  return "?";
}

Variant parse_variant(std::string_view name) {
  if (name == "full") return Variant::full;
  if (name == "tech_only") return Variant::tech_only;
  if (name == "keyword_only") return Variant::keyword_only;
  throw ValidationError("variant must be full, tech_only, or keyword_only, got '" + std::string(name) + "'");
}

std::string to_string(GruMode m) { return m == GruMode::bidirectional ? "bidirectional" : "unidirectional_2h"; }

GruMode parse_gru_mode(std::string_view name) {
  if (name == "bidirectional") return GruMode::bidirectional;
  if (name == "unidirectional_2h") return GruMode::unidirectional_2h;
  throw ValidationError("gru mode must be bidirectional or unidirectional_2h, got '" + std::string(name) + "'");
}

void ModelConfig::validate() const {
  auto positive = [](std::size_t v, const char* field) {
    if (v == 0) throw ValidationError(std::string(field) + " must be positive");
  };
  positive(keyword_dim, "keyword_dim");
  positive(keyword_count, "keyword_count");
  positive(window, "window");
  positive(features, "features");
  positive(hidden, "hidden");
  positive(lstm_layers, "lstm_layers");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ValidationError("dropout must be in [0, 1)");
}

std::vector<double> flat_row(const Sample& sample, const Scaler& scaler, const ModelConfig& config) {
  if (sample.keywords.rows() != config.keyword_count || sample.keywords.cols() != config.keyword_dim ||
      sample.window.rows() != config.window || sample.window.cols() != config.features) {
    throw DimensionError("sample shapes (keywords " + shape_string(sample.keywords.shape()) + ", window " +
                         shape_string(sample.window.shape()) + ") do not match the model configuration");
  }
  std::vector<double> row;
  row.reserve(config.input_width());
  row.insert(row.end(), sample.keywords.data().begin(), sample.keywords.data().end());
  const Tensor z = scaler.transform_window(sample.window);
  row.insert(row.end(), z.data().begin(), z.data().end());
  return row;
}

ModelInputs make_inputs(const std::vector<const Sample*>& samples, const Scaler& scaler, const ModelConfig& config) {
  ModelInputs in;
  const std::size_t width = config.input_width();
  in.rows = Tensor({samples.size(), width});
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto row = flat_row(*samples[i], scaler, config);
    std::copy(row.begin(), row.end(), in.rows.data().begin() + static_cast<long>(i * width));
    in.targets.push_back(scaler.transform_target(samples[i]->target));
  }
  return in;
}

IknetModel::IknetModel(const ModelConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  Philox rng(Philox::derive(seed, "iknet-init"));
  const std::size_t h = config_.hidden;
  keyword_proj_ = LinearLayer::create(store_, "keyword_proj", config_.keyword_dim, h, rng);
  const bool bi = config_.gru_mode == GruMode::bidirectional;
  gru_ = GruLayer::create(store_, "gru", h, bi ? h : 2 * h, bi, rng);
  lstm_ = BiLstmStack::create(store_, "lstm", config_.features, h, config_.lstm_layers, rng);
  fusion_ = LinearLayer::create(store_, "fusion", 4 * h, 2 * h, rng);
  head1_ = LinearLayer::create(store_, "head.w1", 2 * h, 2 * h, rng);
  head2_ = LinearLayer::create(store_, "head.w2", 2 * h, 1, rng);
}

Var IknetModel::forward(Tape& tape, std::span<const Var> bound, const double* rows, std::size_t batch, bool training,
                        std::uint64_t dropout_seed) const {
  const std::size_t n = config_.keyword_count, d = config_.keyword_dim;
  const std::size_t T = config_.window, f = config_.features, width = config_.input_width();
  const std::size_t h2 = 2 * config_.hidden;
  auto block = [&](std::size_t offset, std::size_t cols) {
    Tensor t({batch, cols});
    for (std::size_t b = 0; b < batch; ++b) {
      std::copy_n(rows + b * width + offset, cols, t.data().begin() + static_cast<long>(b * cols));
    }
    return tape.constant(std::move(t));
  };

  Var news;
  if (config_.variant == Variant::tech_only) {
    news = tape.constant(Tensor({batch, h2}));
  } else {
    std::vector<Var> projected;
    projected.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const Var k = relu(keyword_proj_(bound, block(i * d, d)));
      projected.push_back(dropout(k, config_.dropout, training, Philox::derive(dropout_seed, i)));
    }
    news = gru_forward(projected, gru_, bound);
  }

  Var price;
  if (config_.variant == Variant::keyword_only) {
    price = tape.constant(Tensor({batch, h2}));
  } else {
    std::vector<Var> steps;
    steps.reserve(T);
    for (std::size_t t = 0; t < T; ++t) steps.push_back(block(n * d + t * f, f));
    price = bilstm_encode(steps, lstm_, bound);
  }

  const Var fused = dropout(relu(fusion_(bound, concat_cols({news, price}))), config_.dropout, training,
                            Philox::derive(dropout_seed, n));
  return head2_(bound, relu(head1_(bound, fused)));
}

std::vector<double> IknetModel::predict_rows(const Tensor& rows) const {
  if (rows.cols() != config_.input_width()) {
    throw DimensionError("predict_rows: expected width " + std::to_string(config_.input_width()) + ", got " +
                         std::to_string(rows.cols()));
  }
  std::vector<double> out;
  out.reserve(rows.rows());
  constexpr std::size_t kChunk = 512;
  for (std::size_t start = 0; start < rows.rows(); start += kChunk) {
    const std::size_t b = std::min(kChunk, rows.rows() - start);
    Tape tape(false);
    const auto bound = store_.bind(tape, false);
    const Var y = forward(tape, bound, rows.data().data() + start * rows.cols(), b, false, 0);
    out.insert(out.end(), y.value().data().begin(), y.value().data().end());
  }
  return out;
}

TrainResult train(IknetModel& model, const ModelInputs& data, const TrainConfig& config) {
  const std::size_t N = data.targets.size();
  if (N == 0) throw ValidationError("cannot train on an empty training set");
  if (config.batch_size == 0 || config.epochs == 0) throw ValidationError("batch_size and epochs must be positive");
  if (!(config.learning_rate > 0.0)) throw ValidationError("learning_rate must be positive");
  const std::size_t width = data.rows.cols();
  AdamState adam;
  adam.learning_rate = config.learning_rate;
  TrainResult result;
  std::vector<std::size_t> order(N);
  double best = INFINITY;
  std::size_t stale = 0;
  Tensor rows({config.batch_size, width});
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Philox shuffle(Philox::derive(config.seed, "shuffle"), epoch);
    for (std::size_t i = N; i > 1; --i) std::swap(order[i - 1], order[shuffle.below(i)]);
    double total = 0.0;
    for (std::size_t start = 0, batch_index = 0; start < N; start += config.batch_size, ++batch_index) {
      const std::size_t b = std::min(config.batch_size, N - start);
      Tensor target({b, 1});
      for (std::size_t r = 0; r < b; ++r) {
        const std::size_t src = order[start + r];
        std::copy_n(data.rows.data().begin() + static_cast<long>(src * width), width,
                    rows.data().begin() + static_cast<long>(r * width));
        target[r] = data.targets[src];
      }
      Tape tape;
      const auto bound = model.parameters().bind(tape, true);
      const std::uint64_t seed = Philox::derive(Philox::derive(config.seed, "dropout"), epoch * 1000003 + batch_index);
      const Var pred = model.forward(tape, bound, rows.data().data(), b, true, seed);
      const Var loss = mse(pred, target);
      const double value = loss.value().item();
      if (!std::isfinite(value)) {
        throw NumericError("non-finite training loss at epoch " + std::to_string(epoch + 1) + ", batch " +
                           std::to_string(batch_index + 1) + "; lower the learning rate or check the inputs");
      }
      tape.backward(loss);
      adam_step(model.parameters(), ParameterStore::gradients(bound), adam);
      total += value * static_cast<double>(b);
    }
    const double epoch_loss = total / static_cast<double>(N);
    result.epoch_loss.push_back(epoch_loss);
    if (config.patience > 0) {
      if (epoch_loss < best) {
        best = epoch_loss;
        stale = 0;
      } else if (++stale >= config.patience) {
        break;
      }
    }
  }
  return result;
}

namespace {

Var batch_loss(const IknetModel& model, Tape& tape, std::span<const Var> bound, const Tensor& rows,
               const std::vector<double>& targets) {
  const Var pred = model.forward(tape, bound, rows.data().data(), rows.rows(), false, 0);
  return mse(pred, Tensor({targets.size(), 1}, targets));
}

}  // namespace

std::vector<Tensor> loss_gradient(const IknetModel& model, const Tensor& rows, const std::vector<double>& targets) {
  Tape tape;
  const auto bound = model.parameters().bind(tape, true);
  tape.backward(batch_loss(model, tape, bound, rows, targets));
  return ParameterStore::gradients(bound);
}

double loss_value(const IknetModel& model, const Tensor& rows, const std::vector<double>& targets) {
  Tape tape(false);
  const auto bound = model.parameters().bind(tape, false);
  return batch_loss(model, tape, bound, rows, targets).value().item();
}

std::vector<Prediction> predict(const IknetModel& model, const std::vector<const Sample*>& samples,
                                const Scaler& scaler) {
  if (!model.scaler_tag.empty() && model.scaler_tag != scaler.tag) {
    throw ValidationError("scaler '" + scaler.tag + "' does not belong to this model (trained with '" +
                          model.scaler_tag + "')");
  }
  if (samples.empty()) return {};
  const ModelInputs in = make_inputs(samples, scaler, model.config());
  const auto scaled = model.predict_rows(in.rows);
  std::vector<Prediction> out;
  out.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    out.push_back({samples[i]->target_date, scaler.invert_target(scaled[i]), samples[i]->target, samples[i]->last_close});
  }
  return out;
}

namespace {

json period_json(const Period& p) { return {{"start", format_date(p.start)}, {"end", format_date(p.end)}}; }

Period period_from(const json& j) {
  return {parse_date(j.at("start").get<std::string>()), parse_date(j.at("end").get<std::string>())};
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& cp) {
  const auto& c = cp.model.config();
  json j;
  j["format"] = "iknet.checkpoint/1";
  j["config"] = {{"keyword_dim", c.keyword_dim}, {"keyword_count", c.keyword_count}, {"window", c.window},
                 {"features", c.features},       {"hidden", c.hidden},               {"lstm_layers", c.lstm_layers},
                 {"dropout", c.dropout},         {"variant", to_string(c.variant)},  {"gru_mode", to_string(c.gru_mode)}};
  j["train"] = {{"learning_rate", cp.train.learning_rate}, {"batch_size", cp.train.batch_size},
                {"epochs", cp.train.epochs},               {"seed", cp.train.seed},
                {"patience", cp.train.patience}};
  j["scaler"] = json::parse(cp.scaler.to_json());
  j["scaler_tag"] = cp.model.scaler_tag;
  j["fold"] = {{"index", cp.fold.index},
               {"period_months", cp.fold.period_months},
               {"label", cp.fold.label()},
               {"train", period_json(cp.fold.train)},
               {"test", period_json(cp.fold.test)}};
  json params = json::array();
  for (const auto& e : cp.model.parameters().entries()) {
    params.push_back({{"name", e.name},
                      {"shape", e.value.shape()},
                      {"data", std::vector<double>(e.value.data().begin(), e.value.data().end())}});
  }
  j["params"] = std::move(params);
  write_file(path, j.dump());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ValidationError(path.string() + ": invalid checkpoint JSON (" + e.what() + ")");
  }
  if (j.value("format", "") != "iknet.checkpoint/1") throw ValidationError(path.string() + ": not an iknet checkpoint");
  try {
    const auto& jc = j.at("config");
    ModelConfig c;
    c.keyword_dim = jc.at("keyword_dim");
    c.keyword_count = jc.at("keyword_count");
    c.window = jc.at("window");
    c.features = jc.at("features");
    c.hidden = jc.at("hidden");
    c.lstm_layers = jc.at("lstm_layers");
    c.dropout = jc.at("dropout");
    c.variant = parse_variant(jc.at("variant").get<std::string>());
    c.gru_mode = parse_gru_mode(jc.at("gru_mode").get<std::string>());
    Checkpoint cp;
    cp.model = IknetModel(c, 0);
    auto& store = cp.model.parameters();
    const auto& params = j.at("params");
    if (params.size() != store.size()) throw ValidationError("parameter count mismatch");
    for (const auto& p : params) {
      const std::size_t idx = store.find(p.at("name").get<std::string>());
      Tensor value(p.at("shape").get<Shape>(), p.at("data").get<std::vector<double>>());
      if (value.shape() != store[idx].shape()) throw ValidationError("shape mismatch for " + store.name(idx));
      store[idx] = std::move(value);
    }
    cp.scaler = Scaler::from_json(j.at("scaler").dump());
    cp.model.scaler_tag = j.at("scaler_tag").get<std::string>();
    const auto& jt = j.at("train");
    cp.train.learning_rate = jt.at("learning_rate");
    cp.train.batch_size = jt.at("batch_size");
    cp.train.epochs = jt.at("epochs");
    cp.train.seed = jt.at("seed");
    cp.train.patience = jt.at("patience");
    const auto& jf = j.at("fold");
    cp.fold.index = jf.at("index");
    cp.fold.period_months = jf.at("period_months");
    cp.fold.train = period_from(jf.at("train"));
    cp.fold.test = period_from(jf.at("test"));
    return cp;
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": malformed checkpoint (" + e.what() + ")");
  }
}

}  // namespace iknet
