#pragma once

#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "hypadv/json_io.hpp"

namespace hypadv::corpus {

struct ReviewRecord {
  int rating = 0;  // 1..10
  std::string review_text;

  bool operator==(const ReviewRecord&) const = default;
};

struct PaperRecord {
  std::string id;
  int venue_year = 0;
  std::string title;
  std::string abstract;
  std::string contribution_text;
  int contribution_label = 0;  // {0,1}
  std::string method_summary;
  std::string experiment_summary;
  std::optional<std::string> fulltext_path;
  std::vector<ReviewRecord> reviews;
  std::optional<bool> accepted;

  bool operator==(const PaperRecord&) const = default;

  std::vector<int> ratings() const;
};

// Validates and converts one papers.jsonl object. Throws Error(kIntegrity)
// with a human-readable reason on any schema violation.
PaperRecord paper_from_json(const json& j);
ordered_json paper_to_json(const PaperRecord& p);

enum class Section { kAbstract, kContribution, kMethod, kExperiment };

inline constexpr Section kAllSections[] = {Section::kAbstract, Section::kContribution,
                                           Section::kMethod, Section::kExperiment};

std::string_view section_name(Section s);
Section parse_section(std::string_view name);
const std::string& section_text(const PaperRecord& p, Section s);

struct Rejection {
  std::size_t line_no = 0;
  std::string id;  // empty when the line did not parse far enough
  std::string reason;
};

struct IngestReport {
  std::size_t lines = 0;
  std::size_t accepted = 0;
  std::size_t unchanged = 0;  // identical re-ingest of an existing record
  std::vector<Rejection> rejections;
};

struct CorpusStats {
  std::size_t paper_count = 0;
  std::size_t labeled_count = 0;
  std::optional<std::size_t> accepted_count;  // present when every record is labeled
  std::optional<double> acceptance_rate;
  std::map<std::string, double> mean_section_tokens;  // keyed by section name
};

class CorpusStore {
 public:
  CorpusStore() = default;

  static CorpusStore from_file(const std::string& path, IngestReport* report = nullptr);

  // Loads every valid line; malformed or conflicting lines are reported, never fatal.
  IngestReport ingest(const std::string& path);

  // Adds one record; throws Error(kIntegrity) on a conflicting duplicate id.
  // Returns false when an identical record already exists.
  bool add(PaperRecord record);

  void write(const std::string& path) const;

  const std::vector<PaperRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  const PaperRecord* find(const std::string& id) const;
  const PaperRecord& at(const std::string& id) const;

 private:
  std::vector<PaperRecord> records_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

CorpusStats corpus_stats(const CorpusStore& store);

}  // namespace hypadv::corpus
