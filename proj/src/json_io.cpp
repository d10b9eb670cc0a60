#include "hypadv/json_io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "hypadv/error.hpp"
#include "hypadv/text.hpp"

namespace hypadv {

void for_each_line(const std::string& path,
                   const std::function<void(std::size_t, std::string_view)>& fn) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty()) continue;
    fn(line_no, line);
  }
}

std::vector<json> read_jsonl(const std::string& path) {
  std::vector<json> rows;
  for_each_line(path, [&](std::size_t line_no, std::string_view line) {
    try {
      rows.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      throw Error(ErrorKind::kIo,
                  path + ":" + std::to_string(line_no) + ": invalid JSON: " + e.what());
    }
  });
  return rows;
}

JsonlWriter::JsonlWriter(std::string path) : path_(std::move(path)), tmp_path_(path_ + ".tmp") {
  if (auto parent = std::filesystem::path(path_).parent_path(); !parent.empty()) {
    std::filesystem::create_directories(parent);
  }
  file_ = std::fopen(tmp_path_.c_str(), "wb");
  if (!file_) throw Error(ErrorKind::kIo, "cannot write " + tmp_path_);
}

JsonlWriter::~JsonlWriter() {
  if (file_) std::fclose(file_);
  if (!committed_) std::remove(tmp_path_.c_str());
}

void JsonlWriter::write(const ordered_json& row) {
  const std::string line = row.dump() + "\n";
  if (std::fwrite(line.data(), 1, line.size(), file_) != line.size()) {
    throw Error(ErrorKind::kIo, "short write to " + tmp_path_);
  }
  ++rows_;
}

void JsonlWriter::write(const json& row) {
  const std::string line = row.dump() + "\n";
  if (std::fwrite(line.data(), 1, line.size(), file_) != line.size()) {
    throw Error(ErrorKind::kIo, "short write to " + tmp_path_);
  }
  ++rows_;
}

void JsonlWriter::commit() {
  if (committed_) return;
  if (std::fclose(file_) != 0) {
    file_ = nullptr;
    throw Error(ErrorKind::kIo, "close failed for " + tmp_path_);
  }
  file_ = nullptr;
  std::filesystem::rename(tmp_path_, path_);
  committed_ = true;
}

void write_text_file(const std::string& path, std::string_view contents) {
  if (auto parent = std::filesystem::path(path).parent_path(); !parent.empty()) {
    std::filesystem::create_directories(parent);
  }
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error(ErrorKind::kIo, "cannot write " + path);
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error(ErrorKind::kIo, "short write to " + path);
  }
  std::filesystem::rename(tmp, path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string strip_code_fences(std::string_view raw) {
  std::string s = text::trim(raw);
  if (s.rfind("```", 0) != 0) return s;
  const std::size_t first_nl = s.find('\n');
  if (first_nl == std::string::npos) return s;
  s = s.substr(first_nl + 1);
  const std::size_t close = s.rfind("```");
  if (close != std::string::npos) s = s.substr(0, close);
  return text::trim(s);
}

std::optional<json> extract_json_object(std::string_view raw) {
  const std::string s = strip_code_fences(raw);
  const std::size_t open = s.find('{');
  const std::size_t close = s.rfind('}');
  if (open == std::string::npos || close == std::string::npos || close < open) return std::nullopt;
  json parsed = json::parse(s.substr(open, close - open + 1), nullptr, /*allow_exceptions=*/false);
  if (parsed.is_discarded() || !parsed.is_object()) return std::nullopt;
  return parsed;
}

}  // namespace hypadv
