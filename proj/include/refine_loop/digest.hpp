#pragma once

#include <string>
#include <string_view>

namespace refine_loop {

/// SHA-256 of the input, lowercase hex. Stable across runs and platforms;
/// used for prompt hashes and cassette keys.
std::string sha256_hex(std::string_view data);

}  // namespace refine_loop
