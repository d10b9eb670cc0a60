#include "hypadv/vector_index.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <limits>
#include <unordered_set>

#include "hypadv/error.hpp"
#include "hypadv/reward.hpp"
#include "hypadv/text.hpp"

namespace hypadv::index {

static_assert(sizeof(float) == 4 && std::numeric_limits<float>::is_iec559);

std::string encode_vector(std::span<const float> v) {
  std::vector<std::uint8_t> bytes(v.size() * 4);
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto bits = std::bit_cast<std::uint32_t>(v[i]);
    for (int b = 0; b < 4; ++b) bytes[i * 4 + b] = static_cast<std::uint8_t>((bits >> (8 * b)) & 0xffU);
  }
  return text::base64_encode(bytes);
}

std::vector<float> decode_vector(std::string_view b64) {
  const auto bytes = text::base64_decode(b64);
  if (bytes.size() % 4 != 0) throw Error(ErrorKind::kIntegrity, "vector byte length not a multiple of 4");
  std::vector<float> v(bytes.size() / 4);
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(bytes[i * 4 + b]) << (8 * b);
    v[i] = std::bit_cast<float>(bits);
  }
  return v;
}

SectionIndex::SectionIndex(Section section, std::string model_name, std::size_t dimension,
                           std::int64_t build_timestamp)
    : section_(section), model_name_(std::move(model_name)), dimension_(dimension), build_timestamp_(build_timestamp) {}

void SectionIndex::add(std::string paper_id, std::vector<float> vector, std::string source_text) {
  if (vector.size() != dimension_) {
    throw Error(ErrorKind::kIntegrity, "embedding dimension " + std::to_string(vector.size()) +
                                           " does not match index dimension " + std::to_string(dimension_));
  }
  if (ids_.contains(paper_id)) throw Error(ErrorKind::kIntegrity, "duplicate index entry: " + paper_id);
  ids_.insert(paper_id);
  gateway::EmbeddingVector ev{std::move(vector)};
  ev.normalize();
  entries_.push_back({std::move(paper_id), std::move(ev.values), std::move(source_text)});
}

QueryResult SectionIndex::query(std::span<const float> query_vector, std::string_view query_text,
                                const QueryOptions& options) const {
  if (options.k < 1) throw Error(ErrorKind::kUsage, "k must be >= 1");
  if (entries_.empty()) throw Error(ErrorKind::kUsage, "query on empty index");
  if (query_vector.size() != dimension_) throw Error(ErrorKind::kIntegrity, "query dimension mismatch");
  double qnorm = 0.0;
  for (float x : query_vector) qnorm += static_cast<double>(x) * x;
  qnorm = std::sqrt(qnorm);
  if (!(qnorm > 0.0)) throw Error(ErrorKind::kIntegrity, "zero query vector");

  std::vector<std::pair<double, const IndexEntry*>> scored;
  scored.reserve(entries_.size());
  for (const auto& e : entries_) {
    if (options.exclude_id && e.paper_id == *options.exclude_id) continue;
    if (options.admit && !options.admit(e.paper_id)) continue;
    double dot = 0.0;
    for (std::size_t i = 0; i < dimension_; ++i) dot += static_cast<double>(e.vector[i]) * query_vector[i];
    scored.emplace_back(dot / qnorm, &e);
  }
  auto better = [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second->paper_id < b.second->paper_id;
  };
  std::sort(scored.begin(), scored.end(), better);
  // The guard is a per-entry predicate, so filtering while walking the ranked
  // list gives the same hits as filtering first.
  QueryResult result;
  for (const auto& [score, entry] : scored) {
    if (result.hits.size() == options.k) break;
    if (options.contamination_guard &&
        reward::rouge_l_f1(entry->source_text, query_text) > *options.contamination_guard) {
      continue;
    }
    result.hits.push_back({entry->paper_id, section_, score, entry->source_text});
  }
  result.short_result = result.hits.size() < options.k;
  return result;
}

void SectionIndex::save(const std::string& path) const {
  JsonlWriter out(path);
  ordered_json header;
  header["model"] = model_name_;
  header["dimension"] = dimension_;
  header["section_kind"] = std::string(corpus::section_name(section_));
  header["build_timestamp"] = build_timestamp_;
  out.write(header);
  for (const auto& e : entries_) {
    ordered_json row;
    row["paper_id"] = e.paper_id;
    row["vector"] = encode_vector(e.vector);
    row["source_text"] = e.source_text;
    out.write(row);
  }
  out.commit();
}

SectionIndex SectionIndex::load(const std::string& path) {
  const auto rows = read_jsonl(path);
  if (rows.empty()) throw Error(ErrorKind::kIo, path + ": missing index header");
  const auto& h = rows.front();
  SectionIndex idx(corpus::parse_section(h.at("section_kind").get<std::string>()), h.at("model").get<std::string>(),
                   h.at("dimension").get<std::size_t>(), h.value("build_timestamp", std::int64_t{0}));
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    auto v = decode_vector(r.at("vector").get<std::string>());
    if (v.size() != idx.dimension_) throw Error(ErrorKind::kIntegrity, path + ": vector dimension mismatch");
    // Stored vectors are already unit-norm; keep the bytes as written.
    auto id = r.at("paper_id").get<std::string>();
    if (!idx.ids_.insert(id).second) throw Error(ErrorKind::kIntegrity, path + ": duplicate entry " + id);
    idx.entries_.push_back({std::move(id), std::move(v), r.at("source_text").get<std::string>()});
  }
  return idx;
}

SectionIndex build_index(const corpus::CorpusStore& store, Section section, gateway::LlmBackend& backend,
                         std::int64_t build_timestamp, BuildReport* report, std::size_t batch_size) {
  std::vector<const corpus::PaperRecord*> usable;
  BuildReport local;
  for (const auto& p : store.records()) {
    if (text::trim(corpus::section_text(p, section)).empty()) {
      ++local.skipped;
      spdlog::warn("index {}: skipping {} (empty section text)", corpus::section_name(section), p.id);
      continue;
    }
    usable.push_back(&p);
  }
  if (report) *report = local;
  if (usable.empty()) {
    spdlog::warn("index {}: no entries to index", corpus::section_name(section));
    return SectionIndex(section, backend.embedding_model(), 0, build_timestamp);
  }
  std::optional<SectionIndex> idx;
  for (std::size_t start = 0; start < usable.size(); start += batch_size) {
    const std::size_t count = std::min(batch_size, usable.size() - start);
    std::vector<std::string> texts;
    texts.reserve(count);
    for (std::size_t i = 0; i < count; ++i) texts.push_back(corpus::section_text(*usable[start + i], section));
    auto vectors = backend.embed(texts);
    if (vectors.size() != count) throw Error(ErrorKind::kIntegrity, "embedding count mismatch");
    for (std::size_t i = 0; i < count; ++i) {
      if (!idx) idx.emplace(section, backend.embedding_model(), vectors[i].values.size(), build_timestamp);
      idx->add(usable[start + i]->id, std::move(vectors[i].values), std::move(texts[i]));
    }
  }
  return std::move(*idx);
}

QueryResult query_top_k(const SectionIndex& index, gateway::LlmBackend& backend, const std::string& query_text,
                        const QueryOptions& options) {
  if (index.empty()) throw Error(ErrorKind::kUsage, "query on empty index");
  const std::vector<std::string> q{query_text};
  const auto vec = backend.embed(q);
  return index.query(vec.front().values, query_text, options);
}

const SectionIndex& IndexSet::at(Section s) const {
  for (const auto& i : indexes) {
    if (i.section() == s) return i;
  }
  throw Error(ErrorKind::kUsage, "no index for section " + std::string(corpus::section_name(s)));
}

void IndexSet::save(const std::string& dir) const {
  std::filesystem::create_directories(dir);
  for (const auto& i : indexes) {
    i.save((std::filesystem::path(dir) / (std::string(corpus::section_name(i.section())) + ".index.jsonl")).string());
  }
}

IndexSet IndexSet::load(const std::string& dir) {
  IndexSet set;
  for (Section s : corpus::kAllSections) {
    set.indexes.push_back(SectionIndex::load(
        (std::filesystem::path(dir) / (std::string(corpus::section_name(s)) + ".index.jsonl")).string()));
  }
  return set;
}

IndexSet IndexSet::build(const corpus::CorpusStore& store, gateway::LlmBackend& backend, std::int64_t build_timestamp) {
  IndexSet set;
  for (Section s : corpus::kAllSections) set.indexes.push_back(build_index(store, s, backend, build_timestamp));
  return set;
}

}  // namespace hypadv::index
