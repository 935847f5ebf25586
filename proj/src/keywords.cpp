// SPDX-License-Identifier: Apache-2.0
#include "iknet/keywords.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <json.hpp>
#include <sstream>

#include "iknet/error.hpp"
#include "iknet/io.hpp"

namespace iknet {

using nlohmann::json;

bool keyword_before(const Keyword& a, const Keyword& b) {
  if (a.saliency != b.saliency) return a.saliency > b.saliency;
  return a.word < b.word;
}

void sort_keywords(std::vector<Keyword>& entries) { std::sort(entries.begin(), entries.end(), keyword_before); }

namespace {

std::vector<std::string> check_record(const json& j, std::optional<std::size_t>& dim) {
  std::vector<std::string> issues;
  if (!j.is_object()) return {"record is not a JSON object"};
  for (const auto& [key, _] : j.items()) {
    if (key != "date" && key != "articles" && key != "keywords") issues.push_back("unknown key '" + key + "'");
  }
  if (!j.contains("date") || !j["date"].is_string()) {
    issues.emplace_back("missing string field 'date'");
  } else {
    try {
      parse_date(j["date"].get<std::string>());
    } catch (const ValidationError& e) {
      issues.emplace_back(e.what());
    }
  }
  if (!j.contains("articles") || !j["articles"].is_number_integer() || j["articles"].get<long>() < 0) {
    issues.emplace_back("'articles' must be a non-negative integer");
  }
  if (!j.contains("keywords") || !j["keywords"].is_array()) {
    issues.emplace_back("missing array field 'keywords'");
    return issues;
  }
  const Keyword* prev = nullptr;
  Keyword current, previous;
  std::size_t idx = 0;
  for (const auto& k : j["keywords"]) {
    const std::string where = "keywords[" + std::to_string(idx++) + "]: ";
    if (!k.is_object()) {
      issues.push_back(where + "not an object");
      continue;
    }
    for (const auto& [key, _] : k.items()) {
      if (key != "word" && key != "saliency" && key != "embedding") issues.push_back(where + "unknown key '" + key + "'");
    }
    if (!k.contains("word") || !k["word"].is_string() || k["word"].get<std::string>().empty()) {
      issues.push_back(where + "'word' must be a non-empty string");
      continue;
    }
    if (!k.contains("saliency") || !k["saliency"].is_number()) {
      issues.push_back(where + "'saliency' must be a number");
      continue;
    }
    const double s = k["saliency"].get<double>();
    if (!(s >= 0.0) || !std::isfinite(s)) issues.push_back(where + "saliency must be finite and >= 0");
    if (!k.contains("embedding") || !k["embedding"].is_array()) {
      issues.push_back(where + "'embedding' must be an array");
      continue;
    }
    const auto& e = k["embedding"];
    if (e.empty()) issues.push_back(where + "empty embedding");
    for (const auto& v : e) {
      if (!v.is_number() || !std::isfinite(v.get<double>())) {
        issues.push_back(where + "embedding entries must be finite numbers");
        break;
      }
    }
    if (!dim) {
      dim = e.size();
    } else if (*dim != e.size()) {
      issues.push_back(where + "embedding dimension " + std::to_string(e.size()) + " differs from file dimension " +
                       std::to_string(*dim));
    }
    current.word = k["word"].get<std::string>();
    current.saliency = s;
    if (prev && keyword_before(current, previous)) {
      issues.push_back(where + "keywords not sorted by saliency descending");
    }
    previous = current;
    prev = &previous;
  }
  return issues;
}

KeywordSet from_json(const json& j) {
  KeywordSet set;
  set.date = parse_date(j["date"].get<std::string>());
  set.articles = j["articles"].get<int>();
  for (const auto& k : j["keywords"]) {
    set.entries.push_back({k["word"].get<std::string>(), k["saliency"].get<double>(),
                           k["embedding"].get<std::vector<double>>()});
  }
  return set;
}

struct ParsedLine {
  std::size_t line = 0;
  json value;
};

std::vector<ParsedLine> parse_lines(const std::string& content, std::vector<std::string>& issues) {
  std::vector<ParsedLine> out;
  std::istringstream in(content);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      out.push_back({lineno, json::parse(line)});
    } catch (const json::parse_error& e) {
      issues.push_back("line " + std::to_string(lineno) + ": invalid JSON (" + e.what() + ")");
    }
  }
  return out;
}

std::vector<std::string> validate_content(const std::string& content, std::vector<ParsedLine>& parsed) {
  std::vector<std::string> issues;
  parsed = parse_lines(content, issues);
  std::optional<std::size_t> dim;
  std::optional<Date> last;
  for (const auto& p : parsed) {
    auto record_issues = check_record(p.value, dim);
    for (const auto& msg : record_issues) issues.push_back("line " + std::to_string(p.line) + ": " + msg);
    if (record_issues.empty()) {
      const Date d = parse_date(p.value["date"].get<std::string>());
      if (last && !(*last < d)) {
        issues.push_back("line " + std::to_string(p.line) + ": dates must be strictly increasing");
      }
      last = d;
    }
  }
  return issues;
}

}  // namespace

std::vector<std::string> validate_keyword_record(const std::string& line, std::optional<std::size_t>& dim) {
  try {
    return check_record(json::parse(line), dim);
  } catch (const json::parse_error& e) {
    return {std::string("invalid JSON (") + e.what() + ")"};
  }
}

std::vector<std::string> validate_keywords_jsonl(const std::filesystem::path& path) {
  std::vector<ParsedLine> parsed;
  return validate_content(read_file(path), parsed);
}

KeywordFile read_keywords_jsonl(const std::filesystem::path& path) {
  std::vector<ParsedLine> parsed;
  const auto issues = validate_content(read_file(path), parsed);
  if (!issues.empty()) throw ValidationError(path.string() + ": " + issues.front());
  KeywordFile file;
  for (const auto& p : parsed) {
    file.days.push_back(from_json(p.value));
    if (!file.dim && !file.days.back().entries.empty()) file.dim = file.days.back().entries.front().embedding.size();
  }
  return file;
}

std::string keyword_set_to_jsonl(const KeywordSet& set) {
  json j;
  j["date"] = format_date(set.date);
  j["articles"] = set.articles;
  j["keywords"] = json::array();
  for (const auto& k : set.entries) {
    j["keywords"].push_back({{"word", k.word}, {"saliency", k.saliency}, {"embedding", k.embedding}});
  }
  return j.dump();
}

void write_keywords_jsonl(const std::filesystem::path& path, const std::vector<KeywordSet>& days) {
  std::string out;
  for (const auto& d : days) {
    out += keyword_set_to_jsonl(d);
    out += '\n';
  }
  write_file(path, out);
}

KeywordSet merge_keyword_sets(const std::vector<const KeywordSet*>& sets, const Date& date) {
  KeywordSet merged;
  merged.date = date;
  std::map<std::string, Keyword> best;
  for (const KeywordSet* s : sets) {
    merged.articles += s->articles;
    for (const auto& k : s->entries) {
      auto it = best.find(k.word);
      if (it == best.end() || k.saliency > it->second.saliency) best[k.word] = k;
    }
  }
  for (auto& [_, k] : best) merged.entries.push_back(std::move(k));
  sort_keywords(merged.entries);
  return merged;
}

}  // namespace iknet
