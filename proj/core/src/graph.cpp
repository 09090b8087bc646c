#include "lcv/graph.hpp"

#include <cstring>
#include <fstream>

#include "lcv/error.hpp"
#include "lcv/text.hpp"

namespace lcv {

HeteroGraph build_graph(const SentenceList& sentences, const Article& target,
                        const std::vector<std::string>& context_texts,
                        const RelationMap& relations, TextEncoder& encoder,
                        size_t window) {
  HeteroGraph g;
  size_t n = sentences.sentences.size();
  size_t kp = context_texts.size();

  for (const auto& s : sentences.sentences)
    g.sentence_nodes.push_back(encoder.encode(s).values);
  for (const auto& c : context_texts)
    g.context_nodes.push_back(
        encoder.encode(text::truncate_tokens(c, kArticleTokenBudget)).values);
  g.doc_embedding = encoder.encode(target.text).values;
  g.label = target.label;

  for (size_t i = 0; i < n; ++i)
    for (size_t k = i + 1; k < n && k - i <= window; ++k)
      g.coh_edges.emplace_back(i, k);

  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < kp; ++j) {
      auto it = relations.find({i, j});
      if (it == relations.end())
        throw data_error("MissingRelation",
                         "no relation for sentence " + std::to_string(i) +
                             ", context " + std::to_string(j) + " of '" +
                             target.id + "'");
      CrossEdge e;
      e.sentence = i;
      e.context = j;
      e.null_relation = it->second.is_sentinel();
      if (!e.null_relation)
        e.relation = encoder.encode(it->second.text()).values;
      g.cross_edges.push_back(std::move(e));
    }
  }
  return g;
}

namespace {

constexpr uint32_t kGraphMagic = 0x4C435647;  // "LCVG"
constexpr uint32_t kGraphVersion = 1;

void write_u64(std::ostream& out, uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void write_u32(std::ostream& out, uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void write_i8(std::ostream& out, int8_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void write_string(std::ostream& out, const std::string& s) {
  write_u64(out, s.size());
  out.write(s.data(), std::streamsize(s.size()));
}
void write_vec(std::ostream& out, const std::vector<double>& v) {
  write_u64(out, v.size());
  out.write(reinterpret_cast<const char*>(v.data()),
            std::streamsize(v.size() * sizeof(double)));
}

uint64_t read_u64(std::istream& in) {
  uint64_t v;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}
uint32_t read_u32(std::istream& in) {
  uint32_t v;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}
int8_t read_i8(std::istream& in) {
  int8_t v;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}
std::string read_string(std::istream& in) {
  std::string s(read_u64(in), '\0');
  in.read(s.data(), std::streamsize(s.size()));
  return s;
}
std::vector<double> read_vec(std::istream& in) {
  std::vector<double> v(read_u64(in));
  in.read(reinterpret_cast<char*>(v.data()),
          std::streamsize(v.size() * sizeof(double)));
  return v;
}

}  // namespace

void save_graphs(const std::vector<GraphRecord>& records,
                 const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("IoError", "cannot write '" + path + "'");
  write_u32(out, kGraphMagic);
  write_u32(out, kGraphVersion);
  write_u64(out, records.size());
  for (const auto& rec : records) {
    write_string(out, rec.id);
    write_i8(out, int8_t(rec.split));
    const auto& g = rec.graph;
    write_i8(out, g.label ? int8_t(*g.label) : int8_t(-1));
    write_vec(out, g.doc_embedding);
    write_u64(out, g.sentence_nodes.size());
    for (const auto& v : g.sentence_nodes) write_vec(out, v);
    write_u64(out, g.context_nodes.size());
    for (const auto& v : g.context_nodes) write_vec(out, v);
    write_u64(out, g.coh_edges.size());
    for (const auto& [i, k] : g.coh_edges) {
      write_u64(out, i);
      write_u64(out, k);
    }
    write_u64(out, g.cross_edges.size());
    for (const auto& e : g.cross_edges) {
      write_u64(out, e.sentence);
      write_u64(out, e.context);
      write_i8(out, e.null_relation ? 1 : 0);
      if (!e.null_relation) write_vec(out, e.relation);
    }
  }
}

std::vector<GraphRecord> load_graphs(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("IoError", "cannot open '" + path + "'");
  if (read_u32(in) != kGraphMagic)
    throw data_error("ParseError", "'" + path + "' is not a graph bundle");
  if (read_u32(in) != kGraphVersion)
    throw data_error("VersionMismatch",
                     "unsupported graph bundle version in '" + path + "'");
  std::vector<GraphRecord> records(read_u64(in));
  for (auto& rec : records) {
    rec.id = read_string(in);
    rec.split = Split(read_i8(in));
    auto& g = rec.graph;
    int8_t label = read_i8(in);
    if (label >= 0) g.label = label;
    g.doc_embedding = read_vec(in);
    g.sentence_nodes.resize(read_u64(in));
    for (auto& v : g.sentence_nodes) v = read_vec(in);
    g.context_nodes.resize(read_u64(in));
    for (auto& v : g.context_nodes) v = read_vec(in);
    g.coh_edges.resize(read_u64(in));
    for (auto& [i, k] : g.coh_edges) {
      i = read_u64(in);
      k = read_u64(in);
    }
    g.cross_edges.resize(read_u64(in));
    for (auto& e : g.cross_edges) {
      e.sentence = read_u64(in);
      e.context = read_u64(in);
      e.null_relation = read_i8(in) != 0;
      if (!e.null_relation) e.relation = read_vec(in);
    }
    if (!in)
      throw data_error("ParseError", "truncated graph bundle '" + path + "'");
  }
  return records;
}

}  // namespace lcv
