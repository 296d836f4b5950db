#pragma once

#include <cstdint>
#include <string>

namespace grsvrg {

/// SHA-1 digest of a byte string, lowercase hex.
std::string sha1_hex(const std::string& bytes);

/// Git-style blob hash of a file: sha1("blob <size>\0" + contents).
std::string git_blob_hash(const std::string& path);

}  // namespace grsvrg
