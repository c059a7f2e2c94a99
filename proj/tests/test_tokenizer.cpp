#include "projdebias/tokenizer.hpp"

#include <gtest/gtest.h>

#include <filesystem>

#include "projdebias/error.hpp"

using namespace projdebias;

namespace {

std::vector<std::string> names(const Vocab& v, const EncodedInput& in) {
  std::vector<std::string> out;
  for (auto id : in.ids) out.push_back(v.token(id));
  return out;
}

}  // namespace

TEST(Tokenizer, LayoutAndSegments) {
  const Vocab v = Vocab::from_words({"a", "b", "c", "."});
  const EncodedInput in = tokenize(v, "A b.", "C", 64);
  EXPECT_EQ(names(v, in), (std::vector<std::string>{"[CLS]", "a", "b", ".", "[SEP]", "c", "[SEP]"}));
  EXPECT_EQ(in.segments, (std::vector<std::int32_t>{0, 0, 0, 0, 0, 1, 1}));
}

TEST(Tokenizer, EmptySentence) {
  const Vocab v = Vocab::from_words({"x"});
  try {
    tokenize(v, "", "x", 64);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("empty sentence"), std::string::npos);
  }
  EXPECT_THROW(tokenize(v, "x", "   ", 64), Error);
}

TEST(Tokenizer, UnknownWords) {
  const Vocab v = Vocab::from_words({"a"});
  const EncodedInput in = tokenize(v, "zzz qqq", "a", 64);
  EXPECT_EQ(names(v, in), (std::vector<std::string>{"[CLS]", "[UNK]", "[UNK]", "[SEP]", "a", "[SEP]"}));
}

TEST(Tokenizer, TruncatesSecondSentenceFirst) {
  const Vocab v = Vocab::from_words({"a", "b"});
  const EncodedInput in = tokenize(v, "a a a", "b b b b", 7);
  EXPECT_EQ(in.size(), 7u);
  EXPECT_EQ(names(v, in), (std::vector<std::string>{"[CLS]", "a", "a", "a", "[SEP]", "b", "[SEP]"}));
  const EncodedInput tight = tokenize(v, "a a a a a", "b b", 6);
  EXPECT_EQ(names(v, tight), (std::vector<std::string>{"[CLS]", "a", "a", "[SEP]", "b", "[SEP]"}));
}

TEST(Tokenizer, SplitWords) {
  EXPECT_EQ(split_words("Hello, World!"), (std::vector<std::string>{"hello", ",", "world", "!"}));
  EXPECT_EQ(split_words("  a\tb  "), (std::vector<std::string>{"a", "b"}));
}

TEST(Vocab, SpecialsAndIds) {
  const Vocab v = Vocab::from_words({"the", "[UNK]", "cat"});
  EXPECT_EQ(v.token(0), "[PAD]");
  EXPECT_EQ(static_cast<std::size_t>(v.id("cat")), v.size() - 1);
  EXPECT_EQ(v.id("dog"), v.unk_id());
  EXPECT_THROW(Vocab::from_tokens({"[CLS]", "[SEP]"}), Error);
  EXPECT_THROW(Vocab::from_tokens({"[UNK]", "[CLS]", "[SEP]", "a", "a"}), Error);
}

TEST(Vocab, FileRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "projdebias_vocab_test.txt";
  const Vocab v = Vocab::from_words({"alpha", "beta"});
  v.save(path);
  EXPECT_EQ(Vocab::load(path), v);
  std::filesystem::remove(path);
}
