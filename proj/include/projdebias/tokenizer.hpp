#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace projdebias {

inline constexpr std::string_view kPadToken = "[PAD]";
inline constexpr std::string_view kUnkToken = "[UNK]";
inline constexpr std::string_view kClsToken = "[CLS]";
inline constexpr std::string_view kSepToken = "[SEP]";

/// Token table; id = position in the table (line number in a vocab file).
class Vocab {
 public:
  Vocab() = default;

  /// Builds a vocab from plain words, prepending the special tokens that are missing.
  static Vocab from_words(const std::vector<std::string>& words);
  /// Tokens taken verbatim; must contain [UNK], [CLS] and [SEP] and no duplicates.
  static Vocab from_tokens(std::vector<std::string> tokens);

  static Vocab load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  std::int32_t id(std::string_view token) const;
  bool contains(std::string_view token) const;
  const std::string& token(std::int32_t id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  std::int32_t unk_id() const { return unk_; }
  std::int32_t cls_id() const { return cls_; }
  std::int32_t sep_id() const { return sep_; }

  bool operator==(const Vocab& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::int32_t> index_;
  std::int32_t unk_ = -1;
  std::int32_t cls_ = -1;
  std::int32_t sep_ = -1;
};

/// Lowercases and splits on whitespace; every punctuation character is its own token.
std::vector<std::string> split_words(std::string_view text);

struct EncodedInput {
  std::vector<std::int32_t> ids;
  std::vector<std::int32_t> segments;

  std::size_t size() const { return ids.size(); }
  bool operator==(const EncodedInput&) const = default;
};

/// [CLS] A [SEP] B [SEP] with segment 0 through the first [SEP] and 1 after.
/// Sentence B is truncated first (down to one token) when the pair exceeds `max_len`.
EncodedInput tokenize(const Vocab& vocab, std::string_view sent_a, std::string_view sent_b,
                      std::size_t max_len);

}  // namespace projdebias
