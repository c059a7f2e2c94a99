#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace projdebias {

inline constexpr int kArchiveFormatVersion = 1;

enum class DType { F32, F64 };

struct ArchiveTensor {
  std::string name;
  DType dtype = DType::F32;
  std::vector<std::size_t> shape;
  std::vector<double> values;

  std::size_t element_count() const;
};

/// A text manifest (ordered key/value header plus tensor table) and a raw
/// little-endian blob stored next to it.
///
/// Manifest layout, one record per line:
///   format_version 1
///   <key> <value>            (header entries, in insertion order)
///   blob <file name>
///   tensor <name> <f32|f64> <d0>x<d1>... <byte offset>
struct Archive {
  std::vector<std::pair<std::string, std::string>> header;
  std::vector<ArchiveTensor> tensors;

  void set(const std::string& key, const std::string& value);
  const std::string* find(const std::string& key) const;
  const std::string& require(const std::string& key) const;
  std::size_t require_count(const std::string& key) const;
  const ArchiveTensor* find_tensor(const std::string& name) const;
};

/// Writes `manifest` and a sibling blob named after it with a ".bin" extension.
void write_archive(const std::filesystem::path& manifest, const Archive& archive);

/// Throws InputError on unknown versions, malformed records, or blob length mismatch.
Archive read_archive(const std::filesystem::path& manifest);

std::string shape_to_string(const std::vector<std::size_t>& shape);

}  // namespace projdebias
