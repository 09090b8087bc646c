#include "lcv/providers.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>

#include "httplib.h"
#include "json.hpp"
#include "lcv/error.hpp"
#include "lcv/text.hpp"

namespace lcv {

const char* kRelationPromptTemplate =
    "You compare a TARGET SENTENCE with a CONTEXT ARTICLE. Output exactly "
    "one short phrase (at most 12 words) stating one fact present in the "
    "CONTEXT ARTICLE but absent from the TARGET SENTENCE. If no such fact "
    "exists, output exactly [NO_MISSING_CONTEXT]. TARGET SENTENCE: {s} "
    "CONTEXT ARTICLE: {c}";

RelationText normalize_output(const std::string& raw) {
  std::string s = raw.substr(0, raw.find('\n'));
  s = text::trim(s);
  // Strip matched surrounding quotes/brackets.
  auto is_open = [](char c) { return c == '"' || c == '\'' || c == '[' ||
                                     c == '(' || c == '{'; };
  auto closes = [](char o, char c) {
    return (o == '"' && c == '"') || (o == '\'' && c == '\'') ||
           (o == '[' && c == ']') || (o == '(' && c == ')') ||
           (o == '{' && c == '}');
  };
  while (s.size() >= 2 && is_open(s.front()) && closes(s.front(), s.back()))
    s = text::trim(s.substr(1, s.size() - 2));
  if (s.empty()) return RelationText::sentinel();

  std::string canon;
  for (char c : s) {
    if (c == '[' || c == ']' || c == '_' || c == ' ' || c == '-' || c == '.')
      continue;
    canon.push_back(char(std::tolower(static_cast<unsigned char>(c))));
  }
  if (canon == "nomissingcontext") return RelationText::sentinel();
  return RelationText::phrase(s);
}

Embedding HashEmbedder::encode(const std::string& text_in) {
  std::vector<double> v(dim_, 0.0);
  for (const auto& tok : text::tokenize(text_in)) {
    uint64_t h = text::fnv1a64(tok);
    size_t bucket = size_t(h % dim_);
    double sign = ((h >> 32) & 1) ? 1.0 : -1.0;
    v[bucket] += sign;
  }
  double norm2 = 0.0;
  for (double x : v) norm2 += x * x;
  if (norm2 > 0.0) {
    double inv = 1.0 / std::sqrt(norm2);
    for (double& x : v) x *= inv;
  }
  return Embedding{std::move(v), id()};
}

EndpointConfig EndpointConfig::from_env() {
  EndpointConfig cfg;
  if (const char* u = std::getenv("LCV_ENDPOINT_URL")) cfg.url = u;
  if (const char* k = std::getenv("LCV_ENDPOINT_KEY")) cfg.api_key = k;
  if (const char* m = std::getenv("LCV_ENDPOINT_MODEL")) cfg.model = m;
  return cfg;
}

namespace {

struct ParsedUrl {
  std::string base;  // scheme://host[:port]
  std::string path;
};

ParsedUrl parse_url(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos)
    throw provider_error("EndpointError", "malformed endpoint url: " + url);
  auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

nlohmann::json post_json(const EndpointConfig& cfg, const nlohmann::json& body) {
  if (cfg.url.empty())
    throw provider_error("EndpointError", "no endpoint url configured");
  auto [base, path] = parse_url(cfg.url);
  httplib::Client client(base);
  client.set_connection_timeout(10);
  client.set_read_timeout(60);
  httplib::Headers headers;
  if (!cfg.api_key.empty())
    headers.emplace("Authorization", "Bearer " + cfg.api_key);
  auto res = client.Post(path, headers, body.dump(), "application/json");
  if (!res)
    throw provider_error("EndpointError",
                         "no response from endpoint " + cfg.url);
  if (res->status != 200)
    throw provider_error("EndpointError",
                         "status " + std::to_string(res->status) + " from " +
                             cfg.url);
  try {
    return nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::exception& e) {
    throw provider_error("EndpointError",
                         std::string("unparseable endpoint response: ") +
                             e.what());
  }
}

}  // namespace

Embedding RemoteEncoder::encode(const std::string& text_in) {
  nlohmann::json body{{"model", cfg_.model}, {"input", text_in}};
  ++calls_;
  auto j = post_json(cfg_, body);
  std::vector<double> values;
  try {
    values = j.at("embedding").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw provider_error("EndpointError",
                         std::string("bad embedding payload: ") + e.what());
  }
  if (values.size() != dim_)
    throw provider_error("DimensionMismatch",
                         "endpoint returned dimension " +
                             std::to_string(values.size()) + ", expected " +
                             std::to_string(dim_));
  for (double v : values)
    if (!std::isfinite(v))
      throw provider_error("EndpointError", "non-finite embedding entry");
  return Embedding{std::move(values), id()};
}

RelationText StubRelationProvider::reconstruct(const std::string& sentence,
                                               const std::string& article) {
  std::string s = text::truncate_tokens(sentence, kSentenceTokenBudget);
  std::string a = text::truncate_tokens(article, kArticleTokenBudget);

  auto sentence_tokens = text::tokenize(s);
  std::map<std::string, int> article_freq;
  for (const auto& tok : text::tokenize(a)) ++article_freq[tok];
  for (const auto& tok : sentence_tokens) article_freq.erase(tok);
  if (article_freq.empty()) return RelationText::sentinel();

  // Top-3 by frequency, ties by ascending lexicographic order.
  std::vector<std::pair<int, std::string>> ranked;
  for (const auto& [tok, freq] : article_freq) ranked.emplace_back(freq, tok);
  std::sort(ranked.begin(), ranked.end(), [](const auto& x, const auto& y) {
    if (x.first != y.first) return x.first > y.first;
    return x.second < y.second;
  });
  if (ranked.size() > 3) ranked.resize(3);
  std::string phrase;
  for (size_t i = 0; i < ranked.size(); ++i) {
    if (i) phrase.push_back(' ');
    phrase += ranked[i].second;
  }
  return RelationText::phrase(phrase);
}

std::string RemoteRelationProvider::render_prompt(const std::string& sentence,
                                                  const std::string& article) {
  std::string prompt = kRelationPromptTemplate;
  auto replace = [&](const std::string& key, const std::string& value) {
    auto pos = prompt.find(key);
    if (pos != std::string::npos) prompt.replace(pos, key.size(), value);
  };
  replace("{s}", sentence);
  replace("{c}", article);
  return prompt;
}

RelationText RemoteRelationProvider::reconstruct(const std::string& sentence,
                                                 const std::string& article) {
  std::string s = text::truncate_tokens(sentence, kSentenceTokenBudget);
  std::string a = text::truncate_tokens(article, kArticleTokenBudget);
  nlohmann::json body{
      {"model", cfg_.model},
      {"messages",
       nlohmann::json::array(
           {{{"role", "user"}, {"content", render_prompt(s, a)}}})},
      {"temperature", 0},
      {"max_tokens", 16},
  };
  ++calls_;
  auto j = post_json(cfg_, body);
  std::string content;
  try {
    content = j.at("choices").at(0).at("message").at("content")
                  .get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw provider_error("EndpointError",
                         std::string("bad completion payload: ") + e.what());
  }
  return normalize_output(content);
}

RelationCacheKey RelationCacheKey::make(const std::string& truncated_sentence,
                                        const std::string& truncated_article,
                                        const std::string& provider_id,
                                        const std::string& prompt_version) {
  return RelationCacheKey{text::digest_hex(truncated_sentence),
                          text::digest_hex(truncated_article), prompt_version,
                          provider_id};
}

std::string RelationCacheKey::flat() const {
  return sentence_hash + "|" + article_hash + "|" + prompt_version + "|" +
         provider_id;
}

RelationCache::RelationCache(std::string path) : path_(std::move(path)) {
  std::ifstream in(path_);
  if (!in) return;  // a fresh cache file is created on first put
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      const auto& k = j.at("k");
      RelationCacheKey key{k.at("sh").get<std::string>(),
                           k.at("ah").get<std::string>(),
                           k.at("pv").get<std::string>(),
                           k.at("pid").get<std::string>()};
      const auto& v = j.at("v");
      RelationText value = (v.contains("sentinel") && v["sentinel"].get<bool>())
                               ? RelationText::sentinel()
                               : RelationText::phrase(v.at("text").get<std::string>());
      entries_[key.flat()] = std::move(value);  // last write wins
    } catch (const std::exception& e) {
      throw data_error("ParseError", path_ + ":" + std::to_string(line_no) +
                                         ": " + e.what());
    }
  }
}

std::optional<RelationText> RelationCache::get(const RelationCacheKey& key) const {
  auto it = entries_.find(key.flat());
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void RelationCache::put(const RelationCacheKey& key, const RelationText& value) {
  std::lock_guard<std::mutex> lock(write_mutex_);
  entries_[key.flat()] = value;
  if (path_.empty()) return;
  std::ofstream out(path_, std::ios::app);
  if (!out) throw data_error("IoError", "cannot append to '" + path_ + "'");
  nlohmann::ordered_json j;
  j["k"] = {{"sh", key.sentence_hash},
            {"ah", key.article_hash},
            {"pv", key.prompt_version},
            {"pid", key.provider_id}};
  if (value.is_sentinel())
    j["v"] = {{"sentinel", true}};
  else
    j["v"] = {{"text", value.text()}};
  out << j.dump() << "\n";
}

RelationText CachedRelationProvider::reconstruct(const std::string& sentence,
                                                 const std::string& article) {
  std::string s = text::truncate_tokens(sentence, kSentenceTokenBudget);
  std::string a = text::truncate_tokens(article, kArticleTokenBudget);
  auto key = RelationCacheKey::make(s, a, inner_.id());
  if (auto hit = cache_.get(key)) return *hit;
  RelationText value = inner_.reconstruct(s, a);
  cache_.put(key, value);
  return value;
}

}  // namespace lcv
