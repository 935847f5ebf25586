// SPDX-License-Identifier: Apache-2.0
//
// The forecasting network:
//
//   k~_i    = Dropout(ReLU(W k_i + b0))            keyword projection, d -> h
//   h_news  = GRU(k~_1 .. k~_n)                    2h (both directions' final states)
//   h_price = mean_t BiLSTM(x_1 .. x_T)            2h, two stacked layers
//   h_comb  = Dropout(ReLU(Wf [h_news; h_price] + bf))   4h -> 2h
//   y^      = W2 ReLU(W1 h_comb + b1) + b2
//
// Ablations zero h_news (tech_only) or h_price (keyword_only) so every variant
// shares one parameter layout.
//
// Model inputs are flat rows: the n x d keyword block (row-major, zero rows
// for padding) followed by the T x f scaled indicator window.
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "iknet/dataset.hpp"
#include "iknet/nn.hpp"

namespace iknet {

enum class Variant { full, tech_only, keyword_only };
enum class GruMode { bidirectional, unidirectional_2h };

std::string to_string(Variant v);
Variant parse_variant(std::string_view name);
std::string to_string(GruMode m);
GruMode parse_gru_mode(std::string_view name);

struct ModelConfig {
  std::size_t keyword_dim = 32;    // d
  std::size_t keyword_count = 17;  // n
  std::size_t window = 10;         // T
  std::size_t features = kFeatureCount;
  std::size_t hidden = 256;        // h
  std::size_t lstm_layers = 2;
  double dropout = 0.1;
  Variant variant = Variant::full;
  GruMode gru_mode = GruMode::bidirectional;

  std::size_t keyword_width() const { return keyword_count * keyword_dim; }
  std::size_t input_width() const { return keyword_width() + window * features; }
  void validate() const;
};

struct TrainConfig {
  double learning_rate = 0.01;
  std::size_t batch_size = 32;
  std::size_t epochs = 200;
  std::uint64_t seed = 0;
  /// Epochs without improvement of the training loss before stopping; 0 disables.
  std::size_t patience = 0;
};

/// Scaled inputs for a set of samples.
struct ModelInputs {
  Tensor rows;                  // [N x input_width]
  std::vector<double> targets;  // scaled
};

ModelInputs make_inputs(const std::vector<const Sample*>& samples, const Scaler& scaler, const ModelConfig& config);
/// One flat row for a sample.
std::vector<double> flat_row(const Sample& sample, const Scaler& scaler, const ModelConfig& config);

class IknetModel {
 public:
  IknetModel() = default;
  IknetModel(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const noexcept { return config_; }
  ParameterStore& parameters() noexcept { return store_; }
  const ParameterStore& parameters() const noexcept { return store_; }

  /// Scaled predictions [B x 1] for `batch` consecutive rows starting at `rows`.
  Var forward(Tape& tape, std::span<const Var> bound, const double* rows, std::size_t batch, bool training,
              std::uint64_t dropout_seed) const;

  /// Inference on flat rows (dropout off), scaled outputs.
  std::vector<double> predict_rows(const Tensor& rows) const;

  /// Set after training; predict() refuses a scaler with a different tag.
  std::string scaler_tag;

 private:
  ModelConfig config_;
  ParameterStore store_;
  LinearLayer keyword_proj_;
  GruLayer gru_;
  BiLstmStack lstm_;
  LinearLayer fusion_;
  LinearLayer head1_;
  LinearLayer head2_;
};

struct TrainResult {
  std::vector<double> epoch_loss;  // mean scaled MSE per epoch
};

/// Adam on scaled MSE with a seeded per-epoch shuffle. Throws NumericError on
/// a non-finite loss.
TrainResult train(IknetModel& model, const ModelInputs& data, const TrainConfig& config);

/// Gradient of the mean scaled MSE over `rows` with dropout disabled, one
/// tensor per parameter (for finite-difference checks).
std::vector<Tensor> loss_gradient(const IknetModel& model, const Tensor& rows, const std::vector<double>& targets);
double loss_value(const IknetModel& model, const Tensor& rows, const std::vector<double>& targets);

struct Prediction {
  Date date;  // target date
  double forecast = 0.0;
  double actual = 0.0;
  double last_close = 0.0;
};

/// Raw-price forecasts for `samples`.
std::vector<Prediction> predict(const IknetModel& model, const std::vector<const Sample*>& samples,
                                const Scaler& scaler);

struct Checkpoint {
  IknetModel model;
  Scaler scaler;
  FoldSpec fold;
  TrainConfig train;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace iknet
