#include "projdebias/tokenizer.hpp"

#include <cctype>
#include <fstream>

#include "projdebias/error.hpp"

namespace projdebias {

Vocab Vocab::from_words(const std::vector<std::string>& words) {
  std::vector<std::string> tokens;
  for (std::string_view special : {kPadToken, kUnkToken, kClsToken, kSepToken}) {
    bool present = false;
    for (const auto& w : words) present = present || w == special;
    if (!present) tokens.emplace_back(special);
  }
  for (const auto& w : words) {
    bool seen = false;
    for (const auto& t : tokens) seen = seen || t == w;
    if (!seen) tokens.push_back(w);
  }
  return from_tokens(std::move(tokens));
}

Vocab Vocab::from_tokens(std::vector<std::string> tokens) {
  Vocab v;
  v.tokens_ = std::move(tokens);
  for (std::size_t i = 0; i < v.tokens_.size(); ++i) {
    if (v.tokens_[i].empty()) throw InputError("vocab: empty token at id " + std::to_string(i));
    if (!v.index_.emplace(v.tokens_[i], static_cast<std::int32_t>(i)).second) {
      throw InputError("vocab: duplicate token '" + v.tokens_[i] + "'");
    }
  }
  auto require = [&](std::string_view tok) {
    auto it = v.index_.find(std::string(tok));
    if (it == v.index_.end()) throw InputError("vocab: missing special token " + std::string(tok));
    return it->second;
  };
  v.unk_ = require(kUnkToken);
  v.cls_ = require(kClsToken);
  v.sep_ = require(kSepToken);
  return v;
}

Vocab Vocab::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open vocab file " + path.string());
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    tokens.push_back(line);
  }
  return from_tokens(std::move(tokens));
}

void Vocab::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InputError("cannot write vocab file " + path.string());
  for (const auto& t : tokens_) out << t << '\n';
}

std::int32_t Vocab::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? unk_ : it->second;
}

bool Vocab::contains(std::string_view token) const { return index_.count(std::string(token)) != 0; }

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) out.push_back(std::move(current));
    current.clear();
  };
  for (char raw : text) {
    const auto c = static_cast<unsigned char>(raw);
    if (std::isspace(c)) {
      flush();
    } else if (std::ispunct(c)) {
      flush();
      out.emplace_back(1, static_cast<char>(c));
    } else {
      current.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  flush();
  return out;
}

EncodedInput tokenize(const Vocab& vocab, std::string_view sent_a, std::string_view sent_b,
                      std::size_t max_len) {
  std::vector<std::string> a = split_words(sent_a);
  std::vector<std::string> b = split_words(sent_b);
  if (a.empty() || b.empty()) throw Error("empty sentence");
  if (max_len < 5) throw Error("max_len " + std::to_string(max_len) + " cannot hold a sentence pair");

  while (a.size() + b.size() + 3 > max_len && b.size() > 1) b.pop_back();
  while (a.size() + b.size() + 3 > max_len && a.size() > 1) a.pop_back();

  EncodedInput enc;
  enc.ids.reserve(a.size() + b.size() + 3);
  enc.ids.push_back(vocab.cls_id());
  for (const auto& w : a) enc.ids.push_back(vocab.id(w));
  enc.ids.push_back(vocab.sep_id());
  enc.segments.assign(enc.ids.size(), 0);
  for (const auto& w : b) enc.ids.push_back(vocab.id(w));
  enc.ids.push_back(vocab.sep_id());
  enc.segments.resize(enc.ids.size(), 1);
  return enc;
}

}  // namespace projdebias
