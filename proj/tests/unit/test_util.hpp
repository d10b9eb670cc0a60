#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "hypadv/corpus.hpp"
#include "hypadv/json_io.hpp"

namespace hypadv::testing_util {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

corpus::PaperRecord make_paper(const std::string& id, std::vector<int> ratings = {5, 6},
                               std::optional<bool> accepted = std::nullopt);

void write_lines(const std::string& path, const std::vector<std::string>& lines);

}  // namespace hypadv::testing_util
