#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>
#include <string_view>

namespace genex {

/// Lower-case hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

/// SHA-256 over length-prefixed fields, so ("ab","c") and ("a","bc") differ.
std::string sha256_fields(std::initializer_list<std::string_view> fields);

/// First 8 bytes of the SHA-256 of `data`, big-endian.
std::uint64_t digest64(std::string_view data);

}  // namespace genex
