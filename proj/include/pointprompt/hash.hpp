#pragma once

#include "pointprompt/parameter.hpp"
#include "pointprompt/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace pointprompt {

// SHA-256 over arbitrary bytes, lowercase hex.
std::string sha256_hex(const void* data, std::size_t len);
std::string sha256_hex(const std::string& s);

// Digest of a parameter's raw value bytes, prefixed with its name. Used by
// the freezing-contract checks and the checkpoint integrity trailer.
std::string parameter_digest(const Parameter& p);

}  // namespace pointprompt
