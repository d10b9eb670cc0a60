#include "hypadv/corpus.hpp"

#include <spdlog/spdlog.h>

#include "hypadv/error.hpp"
#include "hypadv/text.hpp"

namespace hypadv::corpus {

std::vector<int> PaperRecord::ratings() const {
  std::vector<int> out;
  out.reserve(reviews.size());
  for (const auto& r : reviews) out.push_back(r.rating);
  return out;
}

namespace {

[[noreturn]] void reject(const std::string& reason) { throw Error(ErrorKind::kIntegrity, reason); }

std::string get_string(const json& j, const char* key, bool required = false) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) {
    if (required) reject(std::string("missing field: ") + key);
    return {};
  }
  if (!it->is_string()) reject(std::string("field not a string: ") + key);
  return it->get<std::string>();
}

int get_int(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return 0;
  if (!it->is_number_integer()) reject(std::string("field not an integer: ") + key);
  return it->get<int>();
}

}  // namespace

PaperRecord paper_from_json(const json& j) {
  if (!j.is_object()) reject("line is not a JSON object");
  PaperRecord p;
  p.id = get_string(j, "id", /*required=*/true);
  if (p.id.empty()) reject("empty id");
  p.venue_year = get_int(j, "venue_year");
  p.title = get_string(j, "title");
  p.abstract = get_string(j, "abstract");
  p.contribution_text = get_string(j, "contribution_text");
  p.contribution_label = get_int(j, "contribution_label");
  if (p.contribution_label != 0 && p.contribution_label != 1) {
    reject("contribution_label out of range");
  }
  p.method_summary = get_string(j, "method_summary");
  p.experiment_summary = get_string(j, "experiment_summary");
  if (auto it = j.find("fulltext_path"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) reject("field not a string: fulltext_path");
    p.fulltext_path = it->get<std::string>();
  }
  if (auto it = j.find("reviews"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) reject("field not an array: reviews");
    for (const auto& r : *it) {
      if (!r.is_object()) reject("review is not an object");
      auto rating = r.find("rating");
      if (rating == r.end() || !rating->is_number_integer()) reject("review rating missing");
      ReviewRecord rec;
      rec.rating = rating->get<int>();
      if (rec.rating < 1 || rec.rating > 10) reject("rating out of range");
      rec.review_text = get_string(r, "review_text");
      p.reviews.push_back(std::move(rec));
    }
  }
  if (auto it = j.find("accepted"); it != j.end() && !it->is_null()) {
    if (!it->is_boolean()) reject("field not a boolean: accepted");
    p.accepted = it->get<bool>();
  }
  return p;
}

ordered_json paper_to_json(const PaperRecord& p) {
  ordered_json j;
  j["id"] = p.id;
  j["venue_year"] = p.venue_year;
  j["title"] = p.title;
  j["abstract"] = p.abstract;
  j["contribution_text"] = p.contribution_text;
  j["contribution_label"] = p.contribution_label;
  j["method_summary"] = p.method_summary;
  j["experiment_summary"] = p.experiment_summary;
  j["fulltext_path"] = p.fulltext_path ? ordered_json(*p.fulltext_path) : ordered_json(nullptr);
  ordered_json reviews = ordered_json::array();
  for (const auto& r : p.reviews) {
    ordered_json rj;
    rj["rating"] = r.rating;
    rj["review_text"] = r.review_text;
    reviews.push_back(std::move(rj));
  }
  j["reviews"] = std::move(reviews);
  j["accepted"] = p.accepted ? ordered_json(*p.accepted) : ordered_json(nullptr);
  return j;
}

std::string_view section_name(Section s) {
  switch (s) {
    case Section::kAbstract: return "abstract";
    case Section::kContribution: return "contribution";
    case Section::kMethod: return "method";
    case Section::kExperiment: return "experiment";
  }
  return "abstract";
}

Section parse_section(std::string_view name) {
  for (Section s : kAllSections) {
    if (section_name(s) == name) return s;
  }
  throw Error(ErrorKind::kUsage, "unknown section: " + std::string(name));
}

const std::string& section_text(const PaperRecord& p, Section s) {
  switch (s) {
    case Section::kAbstract: return p.abstract;
    case Section::kContribution: return p.contribution_text;
    case Section::kMethod: return p.method_summary;
    case Section::kExperiment: return p.experiment_summary;
  }
  return p.abstract;
}

CorpusStore CorpusStore::from_file(const std::string& path, IngestReport* report) {
  CorpusStore store;
  IngestReport r = store.ingest(path);
  if (report) *report = std::move(r);
  return store;
}

bool CorpusStore::add(PaperRecord record) {
  if (auto it = by_id_.find(record.id); it != by_id_.end()) {
    if (records_[it->second] == record) return false;
    throw Error(ErrorKind::kIntegrity, "duplicate id: " + record.id);
  }
  by_id_.emplace(record.id, records_.size());
  records_.push_back(std::move(record));
  return true;
}

IngestReport CorpusStore::ingest(const std::string& path) {
  IngestReport report;
  for_each_line(path, [&](std::size_t line_no, std::string_view line) {
    ++report.lines;
    json j = json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded()) {
      report.rejections.push_back({line_no, "", "malformed JSON"});
      return;
    }
    std::string id;
    if (j.is_object() && j.contains("id") && j["id"].is_string()) id = j["id"].get<std::string>();
    try {
      if (add(paper_from_json(j))) {
        ++report.accepted;
      } else {
        ++report.unchanged;
      }
    } catch (const Error& e) {
      report.rejections.push_back({line_no, id, e.what()});
    }
  });
  for (const auto& r : report.rejections) {
    spdlog::warn("{}:{}: rejected{}: {}", path, r.line_no, r.id.empty() ? "" : " " + r.id,
                 r.reason);
  }
  return report;
}

void CorpusStore::write(const std::string& path) const {
  JsonlWriter out(path);
  for (const auto& p : records_) out.write(paper_to_json(p));
  out.commit();
}

const PaperRecord* CorpusStore::find(const std::string& id) const {
  auto it = by_id_.find(id);
  return it == by_id_.end() ? nullptr : &records_[it->second];
}

const PaperRecord& CorpusStore::at(const std::string& id) const {
  const PaperRecord* p = find(id);
  if (!p) throw Error(ErrorKind::kUsage, "unknown paper id: " + id);
  return *p;
}

CorpusStats corpus_stats(const CorpusStore& store) {
  if (store.empty()) throw Error(ErrorKind::kUsage, "empty corpus");
  CorpusStats stats;
  stats.paper_count = store.size();
  std::size_t accepted = 0;
  std::map<std::string, double> totals;
  for (const auto& p : store.records()) {
    if (p.accepted) {
      ++stats.labeled_count;
      if (*p.accepted) ++accepted;
    }
    for (Section s : kAllSections) {
      totals[std::string(section_name(s))] += static_cast<double>(text::count_tokens(section_text(p, s)));
    }
  }
  if (stats.labeled_count == stats.paper_count) {
    stats.accepted_count = accepted;
    stats.acceptance_rate = static_cast<double>(accepted) / static_cast<double>(stats.paper_count);
  }
  for (auto& [name, total] : totals) {
    stats.mean_section_tokens[name] = total / static_cast<double>(stats.paper_count);
  }
  return stats;
}

}  // namespace hypadv::corpus
