#include "hypadv/prompts.hpp"

#include <map>

#include "hypadv/error.hpp"

namespace hypadv::prompts {

namespace detail {
const std::map<std::string, std::string_view, std::less<>>& asset_table();
}

std::string_view asset(std::string_view name) {
  const auto& t = detail::asset_table();
  auto it = t.find(name);
  if (it == t.end()) throw Error(ErrorKind::kUsage, "unknown prompt asset: " + std::string(name));
  return it->second;
}

std::string_view version() { return asset("VERSION"); }

}  // namespace hypadv::prompts
