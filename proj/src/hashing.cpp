#include "calmap/hashing.hpp"

#include <fstream>
#include <vector>

#include "calmap/errors.hpp"

namespace calmap {

std::string hash_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileMissingError("cannot open file for hashing: " + path);
  uint64_t h = 0xcbf29ce484222325ULL;
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    std::streamsize got = in.gcount();
    if (got > 0) h = fnv1a64(buf.data(), static_cast<size_t>(got), h);
  }
  return hex64(h);
}

}  // namespace calmap
