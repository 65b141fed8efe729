#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace lagr {

std::vector<std::string> split_ws(const std::string& text);
std::string join(const std::vector<std::string>& parts, const std::string& sep);
std::string normalize_ws(const std::string& text);  // collapse runs, trim ends

std::string read_file(const std::string& path);      // throws on failure
void write_file(const std::string& path, const std::string& content);

// SHA-1 in git blob form: sha1("blob <len>\0" + content), hex-encoded.
std::string sha1_hex(const std::string& bytes);
std::string git_blob_hash(const std::string& content);
std::string file_blob_hash(const std::string& path);

}  // namespace lagr
