#include "projdebias/tensor_archive.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>

#include "projdebias/error.hpp"

namespace projdebias {

namespace {

std::size_t dtype_size(DType t) { return t == DType::F32 ? 4 : 8; }
const char* dtype_name(DType t) { return t == DType::F32 ? "f32" : "f64"; }

template <typename UInt>
void put_le(std::string& out, UInt bits) {
  for (std::size_t i = 0; i < sizeof(UInt); ++i) {
    out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
  }
}

template <typename UInt>
UInt get_le(const unsigned char* p) {
  UInt bits = 0;
  for (std::size_t i = 0; i < sizeof(UInt); ++i) bits |= static_cast<UInt>(p[i]) << (8 * i);
  return bits;
}

std::vector<std::size_t> parse_shape(const std::string& text, const std::string& tensor) {
  std::vector<std::size_t> shape;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, 'x')) {
    try {
      std::size_t used = 0;
      const unsigned long long v = std::stoull(part, &used);
      if (used != part.size()) throw std::invalid_argument(part);
      shape.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw InputError("tensor " + tensor + ": malformed shape '" + text + "'");
    }
  }
  if (shape.empty()) throw InputError("tensor " + tensor + ": empty shape");
  return shape;
}

}  // namespace

std::size_t ArchiveTensor::element_count() const {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

void Archive::set(const std::string& key, const std::string& value) {
  for (auto& [k, v] : header) {
    if (k == key) {
      v = value;
      return;
    }
  }
  header.emplace_back(key, value);
}

const std::string* Archive::find(const std::string& key) const {
  for (const auto& [k, v] : header) {
    if (k == key) return &v;
  }
  return nullptr;
}

const std::string& Archive::require(const std::string& key) const {
  const std::string* v = find(key);
  if (v == nullptr) throw InputError("manifest is missing '" + key + "'");
  return *v;
}

std::size_t Archive::require_count(const std::string& key) const {
  const std::string& text = require(key);
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw InputError("manifest entry '" + key + "' is not a count: " + text);
  }
}

const ArchiveTensor* Archive::find_tensor(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

std::string shape_to_string(const std::vector<std::size_t>& shape) {
  std::string s;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += 'x';
    s += std::to_string(shape[i]);
  }
  return s;
}

void write_archive(const std::filesystem::path& manifest, const Archive& archive) {
  std::filesystem::path blob_path = manifest;
  blob_path.replace_extension(".bin");

  std::string blob;
  std::ostringstream text;
  text << "format_version " << kArchiveFormatVersion << '\n';
  for (const auto& [k, v] : archive.header) text << k << ' ' << v << '\n';
  text << "blob " << blob_path.filename().string() << '\n';

  for (const auto& t : archive.tensors) {
    if (t.values.size() != t.element_count()) {
      throw Error("tensor " + t.name + ": value count does not match shape " + shape_to_string(t.shape));
    }
    text << "tensor " << t.name << ' ' << dtype_name(t.dtype) << ' ' << shape_to_string(t.shape) << ' '
         << blob.size() << '\n';
    for (double v : t.values) {
      if (t.dtype == DType::F32) {
        put_le(blob, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
      } else {
        put_le(blob, std::bit_cast<std::uint64_t>(v));
      }
    }
  }

  std::ofstream mf(manifest, std::ios::binary | std::ios::trunc);
  if (!mf) throw InputError("cannot write " + manifest.string());
  mf << text.str();
  std::ofstream bf(blob_path, std::ios::binary | std::ios::trunc);
  if (!bf) throw InputError("cannot write " + blob_path.string());
  bf.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  if (!mf || !bf) throw InputError("write failed for " + manifest.string());
}

Archive read_archive(const std::filesystem::path& manifest) {
  std::ifstream mf(manifest);
  if (!mf) throw InputError("cannot open manifest " + manifest.string());

  struct Entry {
    ArchiveTensor tensor;
    std::size_t offset = 0;
  };
  Archive archive;
  std::vector<Entry> entries;
  std::string blob_name;
  bool saw_version = false;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(mf, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "format_version") {
      int version = 0;
      ls >> version;
      if (version != kArchiveFormatVersion) {
        throw InputError("unknown format version " + std::to_string(version) + " in " + manifest.string());
      }
      saw_version = true;
    } else if (key == "blob") {
      ls >> blob_name;
    } else if (key == "tensor") {
      std::string name, dtype, shape;
      std::size_t offset = 0;
      if (!(ls >> name >> dtype >> shape >> offset)) {
        throw InputError(manifest.string() + ":" + std::to_string(line_no) + ": malformed tensor record");
      }
      Entry e;
      e.tensor.name = name;
      if (dtype == "f32") {
        e.tensor.dtype = DType::F32;
      } else if (dtype == "f64") {
        e.tensor.dtype = DType::F64;
      } else {
        throw InputError("tensor " + name + ": unknown dtype " + dtype);
      }
      e.tensor.shape = parse_shape(shape, name);
      e.offset = offset;
      entries.push_back(std::move(e));
    } else {
      std::string value;
      std::getline(ls >> std::ws, value);
      archive.header.emplace_back(key, value);
    }
  }
  if (!saw_version) throw InputError("manifest " + manifest.string() + " has no format_version");
  if (blob_name.empty()) throw InputError("manifest " + manifest.string() + " names no blob");

  const std::filesystem::path blob_path = manifest.parent_path() / blob_name;
  std::ifstream bf(blob_path, std::ios::binary);
  if (!bf) throw InputError("cannot open blob " + blob_path.string());
  std::string blob((std::istreambuf_iterator<char>(bf)), std::istreambuf_iterator<char>());

  std::size_t expected = 0;
  for (const auto& e : entries) {
    if (e.offset != expected) {
      throw InputError("tensor " + e.tensor.name + ": offset " + std::to_string(e.offset) + " expected " +
                       std::to_string(expected));
    }
    expected += e.tensor.element_count() * dtype_size(e.tensor.dtype);
  }
  if (blob.size() != expected) {
    throw InputError("blob length mismatch: " + blob_path.string() + " has " + std::to_string(blob.size()) +
                     " bytes, manifest describes " + std::to_string(expected));
  }

  const auto* bytes = reinterpret_cast<const unsigned char*>(blob.data());
  for (auto& e : entries) {
    const std::size_t n = e.tensor.element_count();
    e.tensor.values.resize(n);
    const unsigned char* p = bytes + e.offset;
    for (std::size_t i = 0; i < n; ++i) {
      if (e.tensor.dtype == DType::F32) {
        e.tensor.values[i] = std::bit_cast<float>(get_le<std::uint32_t>(p + 4 * i));
      } else {
        e.tensor.values[i] = std::bit_cast<double>(get_le<std::uint64_t>(p + 8 * i));
      }
    }
    archive.tensors.push_back(std::move(e.tensor));
  }
  return archive;
}

}  // namespace projdebias
