#include "test_util.hpp"

#include <atomic>
#include <fstream>

#include <unistd.h>

namespace hypadv::testing_util {

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          ("hypadv_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

corpus::PaperRecord make_paper(const std::string& id, std::vector<int> ratings, std::optional<bool> accepted) {
  corpus::PaperRecord p;
  p.id = id;
  p.venue_year = 2024;
  p.title = "Title of " + id;
  p.abstract = "abstract text for " + id + " about sparse graphs";
  p.contribution_text = "we contribute a method for " + id;
  p.contribution_label = 1;
  p.method_summary = "method of " + id + " uses message passing";
  p.experiment_summary = "experiments of " + id + " on citation benchmarks";
  for (int r : ratings) p.reviews.push_back({r, "review of " + id + " rating " + std::to_string(r)});
  p.accepted = accepted;
  return p;
}

void write_lines(const std::string& path, const std::vector<std::string>& lines) {
  std::ofstream out(path);
  for (const auto& l : lines) out << l << "\n";
}

}  // namespace hypadv::testing_util
