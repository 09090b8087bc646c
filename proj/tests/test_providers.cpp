#include <atomic>
#include <cmath>
#include <set>
#include <thread>

#include "doctest.h"
#include "helpers.hpp"
#include "httplib.h"
#include "json.hpp"
#include "lcv/corpus.hpp"
#include "lcv/error.hpp"
#include "lcv/providers.hpp"
#include "lcv/text.hpp"

using namespace lcv;

namespace {

// Straight-line reference of the hash embedding recipe: sign-hash each
// token into a bucket, accumulate, L2-normalize.
std::vector<double> reference_hash_embedding(const std::string& s, size_t dim) {
  std::vector<double> v(dim, 0.0);
  for (const auto& tok : text::tokenize(s)) {
    uint64_t h = text::fnv1a64(tok);
    v[h % dim] += ((h >> 32) & 1) ? 1.0 : -1.0;
  }
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  if (norm > 0.0)
    for (double& x : v) x /= norm;
  return v;
}

struct MockEndpoint {
  httplib::Server server;
  std::thread thread;
  std::atomic<int> chat_calls{0};
  std::atomic<int> embed_calls{0};
  int port = 0;

  explicit MockEndpoint(size_t embed_dim = 4) {
    server.Post("/v1/chat/completions",
                [this](const httplib::Request&, httplib::Response& res) {
                  ++chat_calls;
                  nlohmann::json msg{{"content", "stormed buildings"}};
                  nlohmann::json out;
                  out["choices"] =
                      nlohmann::json::array({{{"message", msg}}});
                  res.set_content(out.dump(), "application/json");
                });
    server.Post("/v1/embeddings", [this, embed_dim](const httplib::Request&,
                                                    httplib::Response& res) {
      ++embed_calls;
      nlohmann::json out;
      out["embedding"] = std::vector<double>(embed_dim, 0.5);
      res.set_content(out.dump(), "application/json");
    });
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~MockEndpoint() {
    server.stop();
    thread.join();
  }
  EndpointConfig config(const std::string& path) const {
    EndpointConfig cfg;
    cfg.url = "http://127.0.0.1:" + std::to_string(port) + path;
    cfg.model = "test-model";
    return cfg;
  }
};

}  // namespace

TEST_CASE("hash embedding absorbs token multiplicity via normalization") {
  HashEmbedder enc(64);
  CHECK(enc.encode("abc abc").values == enc.encode("abc").values);
}

TEST_CASE("hash embedding is bitwise deterministic") {
  HashEmbedder enc(128);
  CHECK(enc.encode("some words to embed now").values ==
        enc.encode("some words to embed now").values);
}

TEST_CASE("hash embedding matches the straight-line reference") {
  for (size_t dim : {16, 64, 768}) {
    HashEmbedder enc(dim);
    std::string s = "police dispersed crowd after protesters";
    CHECK(enc.encode(s).values == reference_hash_embedding(s, dim));
  }
}

TEST_CASE("hash embedding of tokenless text is the zero vector") {
  HashEmbedder enc(8);
  auto v = enc.encode("a ! ?").values;  // nothing survives tokenization
  for (double x : v) CHECK(x == 0.0);
}

TEST_CASE("unit norm for non-degenerate input") {
  HashEmbedder enc(32);
  auto v = enc.encode("several distinct embedding tokens").values;
  double norm = 0.0;
  for (double x : v) norm += x * x;
  CHECK(norm == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("normalize_output keeps only the first line, trimmed") {
  auto r = normalize_output("only two officers on duty\nExtra line");
  REQUIRE(!r.is_sentinel());
  CHECK(r.text() == "only two officers on duty");
}

TEST_CASE("normalize_output strips matched quotes and brackets") {
  CHECK(normalize_output("\"quoted phrase\"").text() == "quoted phrase");
  CHECK(normalize_output("  (parenthetical)  ").text() == "parenthetical");
  CHECK(normalize_output("'[fully wrapped]'").text() == "fully wrapped");
  // unmatched pairs are left alone
  CHECK(normalize_output("\"dangling").text() == "\"dangling");
}

TEST_CASE("normalize_output maps empty and sentinel variants to the sentinel") {
  CHECK(normalize_output("   ").is_sentinel());
  CHECK(normalize_output("").is_sentinel());
  CHECK(normalize_output("[NO_MISSING_CONTEXT]").is_sentinel());
  CHECK(normalize_output("no_missing_context").is_sentinel());
  CHECK(normalize_output("No Missing Context.").is_sentinel());
  CHECK(normalize_output("no-missing-context\nsecond line").is_sentinel());
  // near-miss stays a phrase
  CHECK(!normalize_output("no missing context found").is_sentinel());
}

TEST_CASE("stub provider returns the sentinel when the article adds nothing") {
  StubRelationProvider stub;
  CHECK(stub.reconstruct("police dispersed crowd", "police dispersed crowd")
            .is_sentinel());
  // subsets too: every article token occurs in the sentence
  CHECK(stub.reconstruct("police dispersed the crowd", "police crowd")
            .is_sentinel());
}

TEST_CASE("stub provider surfaces article-only tokens") {
  StubRelationProvider stub;
  auto r = stub.reconstruct(
      "police dispersed crowd",
      "police dispersed crowd after protesters stormed buildings");
  REQUIRE(!r.is_sentinel());
  // Four candidates tie at frequency 1; the top three alphabetically win.
  CHECK(r.text() == "after buildings protesters");
}

TEST_CASE("stub provider ranks by frequency then lexicographically") {
  StubRelationProvider stub;
  auto r = stub.reconstruct("qq", "zz zz yy xx ww");
  REQUIRE(!r.is_sentinel());
  CHECK(r.text() == "zz ww xx");
}

TEST_CASE("stub provider honors the input token budgets") {
  // The differing token sits past the 256-token article budget.
  std::string article;
  for (int i = 0; i < 256; ++i) article += "common ";
  article += "unique";
  StubRelationProvider stub;
  CHECK(stub.reconstruct("common", article).is_sentinel());
}

TEST_CASE("stub relations agree with the token-set scan on synthetic data") {
  SynthSpec spec;
  spec.num_events = 15;
  auto store = synth_generate(spec);
  StubRelationProvider stub;
  for (const Article* t : store.all()) {
    if (t->split == Split::ContextPool) continue;
    auto prefix = t->id.substr(0, t->id.rfind('-'));
    auto sentences = segment(*t, 10);
    for (const Article* c : store.all()) {
      if (c->split != Split::ContextPool || c->id.rfind(prefix + "-", 0) != 0)
        continue;
      for (const auto& s : sentences.sentences) {
        std::string ts = text::truncate_tokens(s, kSentenceTokenBudget);
        std::string ta = text::truncate_tokens(c->text, kArticleTokenBudget);
        std::set<std::string> st;
        for (const auto& tok : text::tokenize(ts)) st.insert(tok);
        bool any_missing = false;
        for (const auto& tok : text::tokenize(ta))
          if (!st.count(tok)) any_missing = true;
        CHECK(stub.reconstruct(s, c->text).is_sentinel() == !any_missing);
      }
    }
  }
}

TEST_CASE("cache distinguishes misses from stored sentinels") {
  RelationCache cache;
  auto key = RelationCacheKey::make("s", "a", "stub");
  CHECK(!cache.get(key).has_value());
  cache.put(key, RelationText::sentinel());
  auto hit = cache.get(key);
  REQUIRE(hit.has_value());
  CHECK(hit->is_sentinel());
  auto key2 = RelationCacheKey::make("s", "a2", "stub");
  cache.put(key2, RelationText::phrase("more detail"));
  CHECK(cache.get(key2)->text() == "more detail");
  CHECK(cache.size() == 2);
}

TEST_CASE("cache keys separate provider ids and prompt versions") {
  auto k1 = RelationCacheKey::make("s", "a", "stub");
  auto k2 = RelationCacheKey::make("s", "a", "remote");
  auto k3 = RelationCacheKey::make("s", "a", "stub", "v2");
  CHECK(k1.flat() != k2.flat());
  CHECK(k1.flat() != k3.flat());
}

TEST_CASE("cache persists as append-only JSONL with last-write-wins") {
  lcvtest::TempDir dir;
  auto path = dir.file("cache.jsonl");
  auto key = RelationCacheKey::make("s", "a", "stub");
  {
    RelationCache cache(path);
    cache.put(key, RelationText::phrase("first"));
    cache.put(key, RelationText::phrase("second"));
  }
  RelationCache reloaded(path);
  REQUIRE(reloaded.get(key).has_value());
  CHECK(reloaded.get(key)->text() == "second");
  CHECK(reloaded.size() == 1);
}

TEST_CASE("remote relation provider round-trips through a mock endpoint") {
  MockEndpoint mock;
  RemoteRelationProvider remote(mock.config("/v1/chat/completions"));
  auto r = remote.reconstruct("police dispersed crowd", "police stormed");
  REQUIRE(!r.is_sentinel());
  CHECK(r.text() == "stormed buildings");
  CHECK(mock.chat_calls == 1);
}

TEST_CASE("a warm cache issues zero remote calls") {
  MockEndpoint mock;
  lcvtest::TempDir dir;
  RemoteRelationProvider remote(mock.config("/v1/chat/completions"));

  std::vector<std::pair<std::string, std::string>> pairs;
  for (int i = 0; i < 6; ++i)
    pairs.emplace_back("sentence number " + std::to_string(i),
                       "article body " + std::to_string(i));

  auto cache_path = dir.file("cache.jsonl");
  {
    RelationCache cache(cache_path);
    CachedRelationProvider cached(remote, cache);
    for (const auto& [s, a] : pairs) cached.reconstruct(s, a);
  }
  CHECK(mock.chat_calls == int(pairs.size()));

  // Second pass over the same pairs, cache reloaded from disk.
  RelationCache warm(cache_path);
  CachedRelationProvider cached(remote, warm);
  for (const auto& [s, a] : pairs) {
    auto r = cached.reconstruct(s, a);
    CHECK(r.text() == "stormed buildings");
  }
  CHECK(mock.chat_calls == int(pairs.size()));  // unchanged
}

TEST_CASE("remote encoder validates the returned dimension") {
  MockEndpoint mock(/*embed_dim=*/4);
  RemoteEncoder ok(mock.config("/v1/embeddings"), 4);
  auto e = ok.encode("text");
  CHECK(e.values == std::vector<double>(4, 0.5));
  CHECK(ok.calls() == 1);

  RemoteEncoder wrong(mock.config("/v1/embeddings"), 8);
  try {
    wrong.encode("text");
    FAIL("expected an error");
  } catch (const Error& err) {
    CHECK(err.kind() == ErrorKind::Provider);
    CHECK(err.code() == "DimensionMismatch");
  }
}

TEST_CASE("endpoint failures surface as provider errors") {
  EndpointConfig cfg;
  cfg.url = "http://127.0.0.1:9/unreachable";  // discard port; nothing listens
  RemoteRelationProvider remote(cfg);
  try {
    remote.reconstruct("s", "a");
    FAIL("expected an error");
  } catch (const Error& err) {
    CHECK(err.kind() == ErrorKind::Provider);
  }
}

TEST_CASE("prompt template embeds the truncated inputs") {
  auto p = RemoteRelationProvider::render_prompt("SENT", "ARTICLE");
  CHECK(p.find("SENT") != std::string::npos);
  CHECK(p.find("ARTICLE") != std::string::npos);
  CHECK(p.find("{s}") == std::string::npos);
  CHECK(p.find("{c}") == std::string::npos);
}
