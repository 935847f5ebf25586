// SPDX-License-Identifier: Apache-2.0
#include "iknet/explain.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cctype>
#include <cmath>
#include <iostream>
#include <json.hpp>
#include <map>
#include <numeric>
#include <sstream>

#include "iknet/error.hpp"
#include "iknet/indicators.hpp"
#include "iknet/io.hpp"
#include "iknet/parallel.hpp"

namespace iknet {

using nlohmann::json;

void FeatureGrouping::validate() const {
  if (groups.size() < 2) throw ValidationError("a feature grouping needs at least 2 groups");
  std::vector<char> seen(width, 0);
  for (const auto& g : groups) {
    if (g.columns.empty()) throw ValidationError("group '" + g.label + "' has no columns");
    for (std::size_t c : g.columns) {
      if (c >= width) throw ValidationError("group '" + g.label + "' references column " + std::to_string(c));
      if (seen[c]++) throw ValidationError("column " + std::to_string(c) + " belongs to more than one group");
    }
  }
  for (std::size_t c = 0; c < width; ++c) {
    if (!seen[c]) throw ValidationError("column " + std::to_string(c) + " belongs to no group");
  }
}

namespace {

std::string indicator_name(const ModelConfig& c, std::size_t j) {
  return c.features == kFeatureCount ? std::string(kFeatureNames[j]) : "x" + std::to_string(j + 1);
}

std::string keyword_slot_label(std::size_t i) { return "kw" + std::to_string(i + 1); }

}  // namespace

FeatureGrouping default_grouping(const ModelConfig& c) {
  FeatureGrouping g;
  g.width = c.input_width();
  for (std::size_t i = 0; i < c.keyword_count; ++i) {
    FeatureGroup grp{keyword_slot_label(i), GroupKind::keyword, i, {}};
    for (std::size_t k = 0; k < c.keyword_dim; ++k) grp.columns.push_back(i * c.keyword_dim + k);
    g.groups.push_back(std::move(grp));
  }
  for (std::size_t j = 0; j < c.features; ++j) {
    FeatureGroup grp{indicator_name(c, j), GroupKind::indicator, 0, {}};
    for (std::size_t t = 0; t < c.window; ++t) grp.columns.push_back(c.keyword_width() + t * c.features + j);
    g.groups.push_back(std::move(grp));
  }
  return g;
}

FeatureGrouping per_scalar_grouping(const ModelConfig& c) {
  FeatureGrouping g;
  g.width = c.input_width();
  for (std::size_t i = 0; i < c.keyword_count; ++i) {
    for (std::size_t k = 0; k < c.keyword_dim; ++k) {
      g.groups.push_back({keyword_slot_label(i) + "[" + std::to_string(k) + "]", GroupKind::scalar, i,
                          {i * c.keyword_dim + k}});
    }
  }
  for (std::size_t t = 0; t < c.window; ++t) {
    for (std::size_t j = 0; j < c.features; ++j) {
      const std::size_t lag = c.window - 1 - t;
      g.groups.push_back({indicator_name(c, j) + "[t-" + std::to_string(lag) + "]", GroupKind::scalar, 0,
                          {c.keyword_width() + t * c.features + j}});
    }
  }
  return g;
}

FeatureGrouping coarsen(const FeatureGrouping& grouping, std::size_t max_groups) {
  if (max_groups < 2) throw ValidationError("coarsen: max_groups must be at least 2");
  if (grouping.size() <= max_groups) return grouping;
  // Runs of consecutive groups of one kind; each run gets a share of the budget.
  std::vector<std::pair<std::size_t, std::size_t>> runs;  // [begin, end)
  for (std::size_t i = 0; i < grouping.size(); ++i) {
    if (runs.empty() || grouping.groups[i].kind != grouping.groups[runs.back().first].kind) runs.push_back({i, i});
    runs.back().second = i + 1;
  }
  if (runs.size() > max_groups) throw ValidationError("coarsen: more group kinds than max_groups");
  std::vector<std::size_t> share(runs.size(), 1);
  std::size_t left = max_groups - runs.size();
  while (left > 0) {
    // Give the next block to the run with the most groups per block.
    std::size_t best = runs.size();
    double best_ratio = 1.0;
    for (std::size_t r = 0; r < runs.size(); ++r) {
      const double len = static_cast<double>(runs[r].second - runs[r].first);
      const double ratio = len / static_cast<double>(share[r]);
      if (share[r] < len && ratio > best_ratio) {
        best = r;
        best_ratio = ratio;
      }
    }
    if (best == runs.size()) break;
    ++share[best];
    --left;
  }
  FeatureGrouping out;
  out.width = grouping.width;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    const std::size_t len = runs[r].second - runs[r].first;
    for (std::size_t b = 0; b < share[r]; ++b) {
      const std::size_t lo = runs[r].first + b * len / share[r];
      const std::size_t hi = runs[r].first + (b + 1) * len / share[r];
      if (hi - lo == 1) {
        out.groups.push_back(grouping.groups[lo]);
        continue;
      }
      FeatureGroup merged{grouping.groups[lo].label + ".." + grouping.groups[hi - 1].label, GroupKind::merged, 0, {}};
      for (std::size_t i = lo; i < hi; ++i) {
        const auto& cols = grouping.groups[i].columns;
        merged.columns.insert(merged.columns.end(), cols.begin(), cols.end());
      }
      std::sort(merged.columns.begin(), merged.columns.end());
      out.groups.push_back(std::move(merged));
    }
  }
  return out;
}

BatchModel raw_output(const IknetModel& model, const Scaler& scaler) {
  return [&model, &scaler](const Tensor& rows) {
    auto out = model.predict_rows(rows);
    for (double& v : out) v = scaler.invert_target(v);
    return out;
  };
}

CoalitionGame::CoalitionGame(BatchModel model, const FeatureGrouping& grouping, std::vector<double> row,
                             Tensor background, std::size_t jobs)
    : model_(std::move(model)), grouping_(grouping), row_(std::move(row)), background_(std::move(background)),
      jobs_(std::max<std::size_t>(1, jobs)) {
  grouping_.validate();
  if (row_.size() != grouping_.width) throw DimensionError("explained row width does not match the grouping");
  if (background_.rows() == 0) throw ValidationError("the SHAP background set is empty");
  if (background_.cols() != grouping_.width) throw DimensionError("background width does not match the grouping");
}

std::vector<double> CoalitionGame::values(const std::vector<std::vector<char>>& coalitions) const {
  const std::size_t B = background_.rows(), W = grouping_.width, M = grouping_.size();
  constexpr std::size_t kChunk = 64;
  const std::size_t chunks = (coalitions.size() + kChunk - 1) / kChunk;
  std::vector<double> out(coalitions.size());
  parallel_for(chunks, jobs_, [&](std::size_t chunk) {
    const std::size_t lo = chunk * kChunk, hi = std::min(coalitions.size(), lo + kChunk);
    Tensor rows({(hi - lo) * B, W});
    for (std::size_t c = lo; c < hi; ++c) {
      if (coalitions[c].size() != M) throw DimensionError("coalition mask length does not match the grouping");
      for (std::size_t b = 0; b < B; ++b) {
        double* dst = rows.data().data() + ((c - lo) * B + b) * W;
        std::copy_n(background_.data().data() + b * W, W, dst);
        for (std::size_t g = 0; g < M; ++g) {
          if (!coalitions[c][g]) continue;
          for (std::size_t col : grouping_.groups[g].columns) dst[col] = row_[col];
        }
      }
    }
    const auto y = model_(rows);
    for (std::size_t c = lo; c < hi; ++c) {
      double s = 0.0;
      for (std::size_t b = 0; b < B; ++b) s += y[(c - lo) * B + b];
      out[c] = s / static_cast<double>(B);
    }
  });
  return out;
}

double Attribution::efficiency_gap() const {
  double s = base;
  for (double p : phi) s += p;
  return std::abs(s - output);
}

namespace {

double binomial(std::size_t n, std::size_t k) {
  double r = 1.0;
  for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return r;
}

bool next_combination(std::vector<std::size_t>& idx, std::size_t n) {
  const std::size_t k = idx.size();
  for (std::size_t i = k; i-- > 0;) {
    if (idx[i] < n - k + i) {
      ++idx[i];
      for (std::size_t j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
      return true;
    }
  }
  return false;
}

std::vector<char> mask_of(const std::vector<std::size_t>& members, std::size_t M) {
  std::vector<char> m(M, 0);
  for (std::size_t i : members) m[i] = 1;
  return m;
}

std::vector<char> complement(const std::vector<char>& m) {
  std::vector<char> c(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) c[i] = !m[i];
  return c;
}

void enumerate_size(std::size_t M, std::size_t s, std::vector<std::vector<char>>& masks, std::vector<double>& weights) {
  std::vector<std::size_t> idx(s);
  std::iota(idx.begin(), idx.end(), 0);
  const double w = shapley_kernel(M, s);
  do {
    masks.push_back(mask_of(idx, M));
    weights.push_back(w);
  } while (next_combination(idx, M));
}

Attribution solve(const CoalitionGame& game, const std::vector<std::vector<char>>& masks,
                  const std::vector<double>& weights) {
  const std::size_t M = game.players();
  std::vector<std::vector<char>> all{std::vector<char>(M, 0), std::vector<char>(M, 1)};
  all.insert(all.end(), masks.begin(), masks.end());
  const auto v = game.values(all);
  Attribution a;
  a.base = v[0];
  a.output = v[1];
  const double delta = a.output - a.base;
  const std::size_t K = masks.size(), P = M - 1;
  // phi_M = delta - sum_{i<M} phi_i substituted into the weighted regression.
  Eigen::MatrixXd A(K, P);
  Eigen::VectorXd y(K);
  for (std::size_t k = 0; k < K; ++k) {
    const double sw = std::sqrt(weights[k]);
    const double last = masks[k][M - 1] ? 1.0 : 0.0;
    for (std::size_t i = 0; i < P; ++i) A(k, i) = sw * ((masks[k][i] ? 1.0 : 0.0) - last);
    y(k) = sw * (v[k + 2] - a.base - last * delta);
  }
  Eigen::VectorXd phi;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  if (qr.rank() == static_cast<Eigen::Index>(P)) {
    phi = qr.solve(y);
  } else {
    Eigen::MatrixXd normal = A.transpose() * A;
    const double lambda = 1e-8 * std::max(1.0, normal.trace() / static_cast<double>(P));
    normal.diagonal().array() += lambda;
    phi = normal.ldlt().solve(A.transpose() * y);
    a.regularized = true;
    std::cerr << "warning: singular Kernel SHAP system (rank " << qr.rank() << " of " << P
              << "); using a ridge-regularized solve\n";
  }
  a.phi.assign(phi.data(), phi.data() + P);
  a.phi.push_back(delta - phi.sum());
  return a;
}

}  // namespace

double shapley_kernel(std::size_t M, std::size_t s) {
  if (s == 0 || s >= M) return 0.0;
  return static_cast<double>(M - 1) /
         (binomial(M, s) * static_cast<double>(s) * static_cast<double>(M - s));
}

Attribution kernel_shap(const CoalitionGame& game, const ShapOptions& options) {
  const std::size_t M = game.players();
  std::vector<std::vector<char>> masks;
  std::vector<double> weights;
  if (M <= options.exact_limit && M <= 30) {
    for (std::size_t s = 1; s < M; ++s) enumerate_size(M, s, masks, weights);
    return solve(game, masks, weights);
  }
  if (options.coalitions < M + 2) {
    throw ValidationError("Kernel SHAP needs at least M+2 = " + std::to_string(M + 2) + " coalitions");
  }
  std::size_t remaining = options.coalitions;
  std::size_t p = 1;
  for (; p <= M / 2; ++p) {
    const bool middle = 2 * p == M;
    const double count = binomial(M, p) * (middle ? 1.0 : 2.0);
    if (count > static_cast<double>(remaining)) break;
    enumerate_size(M, p, masks, weights);
    if (!middle) enumerate_size(M, M - p, masks, weights);
    remaining -= static_cast<std::size_t>(count);
  }
  if (p <= M / 2 && remaining >= 2) {
    // Kernel mass of each remaining size pair.
    std::vector<std::size_t> sizes;
    std::vector<double> mass;
    double total = 0.0;
    for (std::size_t q = p; q <= M / 2; ++q) {
      const double m = static_cast<double>(M - 1) / static_cast<double>(q * (M - q)) * (2 * q == M ? 1.0 : 2.0);
      sizes.push_back(q);
      mass.push_back(m);
      total += m;
    }
    const std::size_t pairs = remaining / 2;
    const double w = total / static_cast<double>(2 * pairs);
    Philox rng(Philox::derive(options.seed, "kernel-shap"));
    std::vector<std::size_t> perm(M);
    for (std::size_t k = 0; k < pairs; ++k) {
      double u = rng.uniform() * total;
      std::size_t pick = 0;
      while (pick + 1 < sizes.size() && u >= mass[pick]) u -= mass[pick++];
      std::iota(perm.begin(), perm.end(), 0);
      for (std::size_t i = 0; i < sizes[pick]; ++i) std::swap(perm[i], perm[i + rng.below(M - i)]);
      const auto m = mask_of({perm.begin(), perm.begin() + static_cast<long>(sizes[pick])}, M);
      masks.push_back(m);
      weights.push_back(w);
      masks.push_back(complement(m));
      weights.push_back(w);
    }
  }
  return solve(game, masks, weights);
}

Attribution exact_shapley(const CoalitionGame& game) {
  const std::size_t M = game.players();
  if (M > 16) throw ValidationError("exact Shapley enumeration is limited to 16 groups, got " + std::to_string(M));
  const std::size_t N = std::size_t{1} << M;
  std::vector<std::vector<char>> masks(N, std::vector<char>(M, 0));
  for (std::size_t s = 0; s < N; ++s) {
    for (std::size_t i = 0; i < M; ++i) masks[s][i] = static_cast<char>((s >> i) & 1U);
  }
  const auto v = game.values(masks);
  // |S|! (M-|S|-1)! / M! = 1 / (M * C(M-1, |S|))
  std::vector<double> weight(M);
  for (std::size_t s = 0; s < M; ++s) weight[s] = 1.0 / (static_cast<double>(M) * binomial(M - 1, s));
  Attribution a;
  a.base = v[0];
  a.output = v[N - 1];
  a.phi.assign(M, 0.0);
  for (std::size_t s = 0; s < N; ++s) {
    const auto size = static_cast<std::size_t>(__builtin_popcountll(s));
    for (std::size_t i = 0; i < M; ++i) {
      if ((s >> i) & 1U) continue;
      a.phi[i] += weight[size] * (v[s | (std::size_t{1} << i)] - v[s]);
    }
  }
  return a;
}

namespace {

void label_attribution(Attribution& a, const FeatureGrouping& grouping, const Sample* sample) {
  a.labels.clear();
  a.kinds.clear();
  for (const auto& g : grouping.groups) {
    std::string label = g.label;
    if (g.kind == GroupKind::keyword && sample != nullptr) {
      const std::string& w = g.slot < sample->words.size() ? sample->words[g.slot] : std::string();
      label = w.empty() ? "<pad>" : w;
    }
    a.labels.push_back(std::move(label));
    a.kinds.push_back(g.kind);
  }
}

}  // namespace

std::vector<Attribution> explain_samples(const IknetModel& model, const Scaler& scaler,
                                         const std::vector<const Sample*>& samples,
                                         const std::vector<const Sample*>& background,
                                         const FeatureGrouping& grouping, const ShapOptions& options,
                                         std::size_t jobs, bool exact) {
  if (background.empty()) throw ValidationError("the SHAP background set is empty");
  const ModelInputs bg = make_inputs(background, scaler, model.config());
  std::vector<Attribution> out;
  out.reserve(samples.size());
  for (const Sample* s : samples) {
    const CoalitionGame game(raw_output(model, scaler), grouping, flat_row(*s, scaler, model.config()), bg.rows, jobs);
    Attribution a = exact ? exact_shapley(game) : kernel_shap(game, options);
    a.date = s->target_date;
    label_attribution(a, grouping, s);
    out.push_back(std::move(a));
  }
  return out;
}

std::vector<GroupImportance> global_importance(const std::vector<Attribution>& attributions) {
  if (attributions.empty()) return {};
  const std::size_t M = attributions.front().phi.size();
  std::vector<GroupImportance> out(M);
  for (std::size_t g = 0; g < M; ++g) {
    std::map<std::string, std::size_t> counts;
    double sum = 0.0;
    for (const auto& a : attributions) {
      if (a.phi.size() != M) throw DimensionError("attributions have different group counts");
      sum += std::abs(a.phi[g]);
      if (g < a.labels.size()) ++counts[a.labels[g]];
    }
    out[g].mean_abs = sum / static_cast<double>(attributions.size());
    std::size_t best = 0;
    for (const auto& [label, n] : counts) {
      if (n > best) {  // map order makes the first maximum the lexicographically smallest
        best = n;
        out[g].label = label;
      }
    }
    if (counts.empty()) out[g].label = "g" + std::to_string(g + 1);
  }
  std::stable_sort(out.begin(), out.end(), [](const GroupImportance& a, const GroupImportance& b) {
    if (a.mean_abs != b.mean_abs) return a.mean_abs > b.mean_abs;
    return a.label < b.label;
  });
  return out;
}

std::string importance_csv(const std::vector<GroupImportance>& ranking) {
  std::string out = "rank,group,mean_abs_shap\n";
  for (std::size_t i = 0; i < ranking.size(); ++i) {
    out += std::to_string(i + 1) + "," + ranking[i].label + "," + format_double(ranking[i].mean_abs) + "\n";
  }
  return out;
}

namespace {

const char* kind_name(GroupKind k) {
  switch (k) {
    case GroupKind::keyword: return "keyword";
    case GroupKind::indicator: return "indicator";
    case GroupKind::scalar: return "scalar";
    case GroupKind::merged: return "merged";
  }
  return "?";
}

GroupKind parse_kind(const std::string& s) {
  if (s == "keyword") return GroupKind::keyword;
  if (s == "indicator") return GroupKind::indicator;
  if (s == "scalar") return GroupKind::scalar;
  if (s == "merged") return GroupKind::merged;
  throw ValidationError("unknown group kind '" + s + "'");
}

json attribution_json(const Attribution& a) {
  json groups = json::array();
  for (std::size_t i = 0; i < a.phi.size(); ++i) {
    groups.push_back({{"label", i < a.labels.size() ? a.labels[i] : "g" + std::to_string(i + 1)},
                      {"kind", kind_name(i < a.kinds.size() ? a.kinds[i] : GroupKind::merged)},
                      {"phi", a.phi[i]}});
  }
  return {{"format", "iknet.attribution/1"},
          {"date", a.date.ok() ? format_date(a.date) : ""},
          {"base", a.base},
          {"output", a.output},
          {"regularized", a.regularized},
          {"groups", std::move(groups)}};
}

std::string html_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '\'' || c == '-'; }

std::string css_class(int sign) { return sign > 0 ? "pos" : sign < 0 ? "neg" : "neu"; }

std::string style_for(const WordAttribution& w) {
  std::ostringstream s;
  s.precision(3);
  if (w.sign > 0) s << "background:rgba(0,140,60," << w.intensity << ")";
  else if (w.sign < 0) s << "background:rgba(200,30,30," << w.intensity << ")";
  else s << "background:transparent";
  return s.str();
}

}  // namespace

std::string attribution_to_json(const Attribution& a) { return attribution_json(a).dump(2); }

Attribution attribution_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    if (j.value("format", "") != "iknet.attribution/1") throw ValidationError("not an iknet attribution document");
    Attribution a;
    const std::string date = j.at("date").get<std::string>();
    if (!date.empty()) a.date = parse_date(date);
    a.base = j.at("base").get<double>();
    a.output = j.at("output").get<double>();
    a.regularized = j.value("regularized", false);
    for (const auto& g : j.at("groups")) {
      a.labels.push_back(g.at("label").get<std::string>());
      a.kinds.push_back(parse_kind(g.at("kind").get<std::string>()));
      a.phi.push_back(g.at("phi").get<double>());
    }
    return a;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("invalid attribution JSON: ") + e.what());
  }
}

TextReport render_text_attribution(const std::string& article, const KeywordSet& keywords,
                                   const Attribution& attribution) {
  TextReport report;
  for (const auto& k : keywords.entries) {
    WordAttribution w;
    w.word = k.word;
    for (std::size_t g = 0; g < attribution.phi.size(); ++g) {
      const bool keyword_group = g < attribution.kinds.size() && attribution.kinds[g] == GroupKind::keyword;
      if (keyword_group && g < attribution.labels.size() && attribution.labels[g] == k.word) {
        w.phi = attribution.phi[g];
        break;
      }
    }
    w.sign = (w.phi > 0) - (w.phi < 0);
    report.words.push_back(std::move(w));
  }
  double max_abs = 0.0;
  for (const auto& w : report.words) max_abs = std::max(max_abs, std::abs(w.phi));
  std::vector<std::size_t> order(report.words.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(report.words[a].phi) > std::abs(report.words[b].phi);
  });
  for (std::size_t r = 0; r < order.size(); ++r) report.words[order[r]].rank = r + 1;
  for (auto& w : report.words) w.intensity = max_abs > 0 ? std::abs(w.phi) / max_abs : 0.0;

  std::map<std::string, std::size_t> lookup;
  for (std::size_t i = 0; i < report.words.size(); ++i) lookup.emplace(lower(report.words[i].word), i);

  std::string body;
  for (std::size_t i = 0; i < article.size();) {
    std::size_t j = i;
    if (word_char(article[i])) {
      while (j < article.size() && word_char(article[j])) ++j;
      const std::string token = article.substr(i, j - i);
      const auto it = lookup.find(lower(token));
      if (it != lookup.end()) {
        auto& w = report.words[it->second];
        w.in_text = true;
        body += "<span class=\"kw " + css_class(w.sign) + "\" style=\"" + style_for(w) + "\" title=\"phi=" +
                format_double(w.phi) + "\">" + html_escape(token) + "</span>";
      } else {
        body += html_escape(token);
      }
    } else {
      ++j;
      body += html_escape(article.substr(i, 1));
    }
    i = j;
  }

  json j = attribution_json(attribution);
  json words = json::array();
  for (const auto& w : report.words) {
    words.push_back({{"word", w.word},
                     {"phi", w.phi},
                     {"sign", w.sign},
                     {"rank", w.rank},
                     {"intensity", w.intensity},
                     {"in_text", w.in_text}});
  }
  j["words"] = std::move(words);
  report.json = j.dump(2);

  // Horizontal bar chart of the keyword attributions, largest first.
  const std::size_t bar_h = 18, label_w = 140, chart_w = 320;
  const std::size_t height = bar_h * order.size() + 10;
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << label_w + chart_w + 20 << "\" height=\"" << height
      << "\">";
  const double mid = static_cast<double>(label_w) + chart_w / 2.0;
  svg << "<line x1=\"" << mid << "\" y1=\"0\" x2=\"" << mid << "\" y2=\"" << height << "\" stroke=\"#888\"/>";
  for (std::size_t r = 0; r < order.size(); ++r) {
    const auto& w = report.words[order[r]];
    const double len = w.intensity * chart_w / 2.0;
    const double x = w.sign < 0 ? mid - len : mid;
    const std::size_t y = 5 + r * bar_h;
    svg << "<text x=\"" << label_w - 4 << "\" y=\"" << y + 13 << "\" text-anchor=\"end\" font-size=\"12\">"
        << html_escape(w.word) << (w.in_text ? "" : " *") << "</text>";
    svg << "<rect class=\"" << css_class(w.sign) << "\" x=\"" << x << "\" y=\"" << y << "\" width=\"" << len
        << "\" height=\"" << bar_h - 4 << "\" fill=\"" << (w.sign < 0 ? "#c81e1e" : "#008c3c") << "\"/>";
  }
  svg << "</svg>";

  std::ostringstream html;
  html << "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>Keyword attribution "
       << html_escape(attribution.date.ok() ? format_date(attribution.date) : "") << "</title>\n"
       << "<style>body{font-family:sans-serif;max-width:48em;margin:2em auto}"
       << ".kw{padding:0 2px;border-radius:3px}.neu{outline:1px dotted #999}</style></head><body>\n"
       << "<h1>Keyword attribution";
  if (attribution.date.ok()) html << " for " << format_date(attribution.date);
  html << "</h1>\n<p>Forecast " << format_double(attribution.output) << " (baseline "
       << format_double(attribution.base) << "). Green pushed the forecast up, red pushed it down.</p>\n"
       << "<p class=\"article\">" << body << "</p>\n" << svg.str() << "\n<ol class=\"legend\">\n";
  for (std::size_t r : order) {
    const auto& w = report.words[r];
    html << "<li class=\"" << css_class(w.sign) << "\">" << html_escape(w.word) << ": " << format_double(w.phi)
         << (w.in_text ? "" : " (not in text)") << "</li>\n";
  }
  html << "</ol>\n</body></html>\n";
  report.html = html.str();
  return report;
}

}  // namespace iknet
