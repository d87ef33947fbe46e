#pragma once

#include <span>
#include <string>

namespace medbench::base64 {

/// Standard alphabet (RFC 4648) with '=' padding, no line breaks.
std::string encode(std::span<const unsigned char> bytes);

}  // namespace medbench::base64
