#pragma once

#include <json.hpp>

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hypadv {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

// Visits every non-blank line of a JSON-lines file. The callback receives the
// 1-based line number and the raw line; parsing is left to the caller so that
// malformed lines can be reported rather than aborting the scan.
void for_each_line(const std::string& path,
                   const std::function<void(std::size_t line_no, std::string_view line)>& fn);

std::vector<json> read_jsonl(const std::string& path);

// Writes to `path + ".tmp"` and renames on success, so a failed run never
// leaves a truncated artifact behind.
class JsonlWriter {
 public:
  explicit JsonlWriter(std::string path);
  ~JsonlWriter();
  JsonlWriter(const JsonlWriter&) = delete;
  JsonlWriter& operator=(const JsonlWriter&) = delete;

  void write(const ordered_json& row);
  void write(const json& row);
  void commit();
  std::size_t rows() const { return rows_; }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::string tmp_path_;
  std::FILE* file_ = nullptr;
  std::size_t rows_ = 0;
  bool committed_ = false;
};

void write_text_file(const std::string& path, std::string_view contents);
std::string read_text_file(const std::string& path);

// Best-effort recovery of a JSON object from model output: strips markdown
// code fences and trims to the outermost braces. Returns nullopt when no
// parseable object remains.
std::optional<json> extract_json_object(std::string_view raw);
std::string strip_code_fences(std::string_view raw);

}  // namespace hypadv
