#include "lcv/pipeline.hpp"

#include <algorithm>

#include "lcv/error.hpp"
#include "lcv/text.hpp"

namespace lcv {

std::vector<const Article*> labeled_targets(const CorpusStore& store) {
  std::vector<const Article*> out;
  for (const Article* a : store.all())
    if (a->split != Split::ContextPool) out.push_back(a);
  std::sort(out.begin(), out.end(),
            [](const Article* x, const Article* y) { return x->id < y->id; });
  return out;
}

std::vector<RetrievalResult> retrieve_all(const CorpusStore& store,
                                          const TfIdfIndex& index, size_t k,
                                          int64_t delta) {
  std::vector<RetrievalResult> out;
  for (const Article* target : labeled_targets(store))
    out.push_back(retrieve(*target, store, index, k, delta));
  return out;
}

size_t generate_relations(const CorpusStore& store,
                          const std::vector<RetrievalResult>& retrievals,
                          RelationProvider& provider, size_t sentence_budget) {
  size_t pairs = 0;
  for (const auto& r : retrievals) {
    const Article& target = store.get(r.target_id);
    SentenceList sentences = segment(target, sentence_budget);
    for (const auto& s : sentences.sentences) {
      for (const auto& cid : r.context_ids) {
        provider.reconstruct(s, store.get(cid).text);
        ++pairs;
      }
    }
  }
  return pairs;
}

std::vector<GraphRecord> build_all_graphs(
    const CorpusStore& store, const std::vector<RetrievalResult>& retrievals,
    RelationProvider& provider, TextEncoder& encoder, size_t window,
    size_t sentence_budget) {
  std::vector<GraphRecord> records;
  records.reserve(retrievals.size());
  for (const auto& r : retrievals) {
    const Article& target = store.get(r.target_id);
    SentenceList sentences = segment(target, sentence_budget);
    std::vector<std::string> context_texts;
    for (const auto& cid : r.context_ids)
      context_texts.push_back(store.get(cid).text);
    RelationMap relations;
    for (size_t i = 0; i < sentences.sentences.size(); ++i)
      for (size_t j = 0; j < context_texts.size(); ++j)
        relations[{i, j}] =
            provider.reconstruct(sentences.sentences[i], context_texts[j]);
    GraphRecord rec;
    rec.id = target.id;
    rec.split = target.split;
    rec.graph = build_graph(sentences, target, context_texts, relations,
                            encoder, window);
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<const HeteroGraph*> graphs_of_split(
    const std::vector<GraphRecord>& records, Split split) {
  std::vector<const HeteroGraph*> out;
  for (const auto& rec : records)
    if (rec.split == split) out.push_back(&rec.graph);
  return out;
}

}  // namespace lcv
