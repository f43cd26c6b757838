#pragma once

#include <cstddef>
#include <string>

namespace loreopt {

// Lowercase hex SHA-1 digest of a byte buffer.
std::string sha1_hex(const void* data, std::size_t len);
std::string sha1_hex(const std::string& s);

// Digest of the content framed as "blob <len>\0<content>", matching how
// version-control blob ids are formed, so hashes can be cross-checked with
// standard tooling.
std::string git_blob_hash(const std::string& content);

}  // namespace loreopt
