#pragma once

#include <string>
#include <string_view>

namespace hypadv::prompts {

// Named prompt text compiled in from assets/prompts. Throws Error(kUsage)
// for an unknown name.
std::string_view asset(std::string_view name);

// Contents of assets/prompts/VERSION; recorded in transcripts.
std::string_view version();

}  // namespace hypadv::prompts
