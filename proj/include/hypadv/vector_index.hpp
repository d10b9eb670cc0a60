#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "hypadv/corpus.hpp"
#include "hypadv/gateway.hpp"

namespace hypadv::index {

using corpus::Section;

struct IndexEntry {
  std::string paper_id;
  std::vector<float> vector;  // unit L2 norm
  std::string source_text;
};

struct RetrievalHit {
  std::string paper_id;
  Section section = Section::kAbstract;
  double score = 0.0;  // cosine similarity
  std::string source_text;
};

struct QueryOptions {
  std::size_t k = 10;
  std::optional<std::string> exclude_id;
  // Drop entries whose ROUGE-L F1 against the query text exceeds this value.
  std::optional<double> contamination_guard;
  // Extra admission test, e.g. a published-before-target date filter.
  std::function<bool(const std::string& paper_id)> admit;
};

struct QueryResult {
  std::vector<RetrievalHit> hits;
  bool short_result = false;  // fewer than k admissible entries
};

class SectionIndex {
 public:
  SectionIndex(Section section, std::string model_name, std::size_t dimension,
               std::int64_t build_timestamp = 0);

  // Vectors are normalized on insertion. Throws Error(kIntegrity) on a
  // dimension mismatch or a duplicate paper id.
  void add(std::string paper_id, std::vector<float> vector, std::string source_text);

  // Exact full-scan cosine ranking; ties by ascending paper id.
  QueryResult query(std::span<const float> query_vector, std::string_view query_text,
                    const QueryOptions& options) const;

  Section section() const { return section_; }
  const std::string& model_name() const { return model_name_; }
  std::size_t dimension() const { return dimension_; }
  std::int64_t build_timestamp() const { return build_timestamp_; }
  const std::vector<IndexEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  // Header line {model, dimension, section_kind, build_timestamp} followed by
  // one {paper_id, vector (base64 little-endian float32), source_text} per line.
  void save(const std::string& path) const;
  static SectionIndex load(const std::string& path);

 private:
  Section section_;
  std::string model_name_;
  std::size_t dimension_;
  std::int64_t build_timestamp_;
  std::vector<IndexEntry> entries_;
  std::unordered_set<std::string> ids_;
};

struct BuildReport {
  std::size_t skipped = 0;
};

// Embeds the section text of every record through the backend. Records with
// empty text for the section are skipped with a warning.
SectionIndex build_index(const corpus::CorpusStore& store, Section section, gateway::LlmBackend& backend,
                         std::int64_t build_timestamp = 0, BuildReport* report = nullptr,
                         std::size_t batch_size = 256);

// Embeds the query text, then runs SectionIndex::query.
QueryResult query_top_k(const SectionIndex& index, gateway::LlmBackend& backend, const std::string& query_text,
                        const QueryOptions& options);

// The four per-section indexes, persisted as <dir>/<section>.index.jsonl.
struct IndexSet {
  std::vector<SectionIndex> indexes;  // one per Section, kAllSections order

  const SectionIndex& at(Section s) const;
  void save(const std::string& dir) const;
  static IndexSet load(const std::string& dir);
  static IndexSet build(const corpus::CorpusStore& store, gateway::LlmBackend& backend,
                        std::int64_t build_timestamp = 0);
};

std::string encode_vector(std::span<const float> v);
std::vector<float> decode_vector(std::string_view b64);

}  // namespace hypadv::index
