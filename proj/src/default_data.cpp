#include "projdebias/default_data.hpp"

#include <array>
#include <cstdio>
#include <random>
#include <set>
#include <string_view>

#include "projdebias/tokenizer.hpp"

namespace projdebias {

namespace {

struct PhrasePair {
  std::string_view male;
  std::string_view female;
};

constexpr std::array<PhrasePair, 10> kPairPhrases = {{
    {"he", "she"},
    {"the man", "the woman"},
    {"my father", "my mother"},
    {"the boy", "the girl"},
    {"my son", "my daughter"},
    {"my brother", "my sister"},
    {"my husband", "my wife"},
    {"my uncle", "my aunt"},
    {"the king", "the queen"},
    {"the male worker", "the female worker"},
}};

// "@" marks the gendered phrase.
constexpr std::array<std::string_view, 4> kPairFrames = {
    "@ walked into the room. it was late.",
    "yesterday @ cooked dinner. everyone ate.",
    "@ read a book. the book was long.",
    "@ is at home. the door is open.",
};

constexpr std::array<std::string_view, 164> kOccupations = {
    "accountant", "actor", "actuary", "administrator", "advisor", "agent", "analyst", "architect",
    "archivist", "artist", "assistant", "astronaut", "astronomer", "athlete", "attendant",
    "auditor", "author", "baker", "banker", "barber", "bartender", "biologist", "blacksmith",
    "bookkeeper", "botanist", "broker", "builder", "butcher", "captain", "carpenter", "cashier",
    "chef", "chemist", "choreographer", "cleaner", "clerk", "coach", "collector", "comedian",
    "composer", "conductor", "consultant", "cook", "counselor", "courier", "curator", "dancer",
    "dentist", "designer", "detective", "developer", "dietitian", "diplomat", "director",
    "dispatcher", "doctor", "driver", "economist", "editor", "electrician", "engineer",
    "entrepreneur", "examiner", "farmer", "firefighter", "florist", "gardener", "geologist",
    "guard", "guide", "hairdresser", "historian", "housekeeper", "hygienist", "illustrator",
    "inspector", "instructor", "interpreter", "investigator", "janitor", "jeweler", "journalist",
    "judge", "laborer", "landlord", "lawyer", "lecturer", "librarian", "lifeguard", "linguist",
    "locksmith", "machinist", "manager", "mathematician", "mechanic", "mediator", "merchant",
    "miner", "musician", "navigator", "negotiator", "nurse", "nutritionist", "officer", "operator",
    "optician", "painter", "paralegal", "paramedic", "pastor", "pharmacist", "philosopher",
    "photographer", "physician", "physicist", "pianist", "pilot", "planner", "plumber", "poet",
    "politician", "porter", "potter", "priest", "principal", "producer", "professor", "programmer",
    "psychologist", "publisher", "receptionist", "recruiter", "referee", "reporter", "researcher",
    "sailor", "salesperson", "scientist", "sculptor", "secretary", "sheriff", "singer", "soldier",
    "statistician", "stylist", "supervisor", "surgeon", "surveyor", "tailor", "teacher",
    "technician", "therapist", "trader", "translator", "treasurer", "tutor", "umpire",
    "veterinarian", "waiter", "warden", "weaver", "welder", "writer", "zoologist",
};

constexpr std::array<std::string_view, 33> kActivities = {
    "prepared a pie",     "bought a bagel",    "ate an apple",       "drove a car",
    "read a book",        "wrote a letter",    "owns a house",       "crashed a car",
    "visited the museum", "sold a bicycle",    "painted the fence",  "fixed the printer",
    "caught the train",   "planted a tree",    "lost the keys",      "found a wallet",
    "cooked dinner",      "washed the dishes", "opened the window",  "called a friend",
    "walked the dog",     "climbed a hill",    "watched a movie",    "played the piano",
    "carried a box",      "bought a coat",     "baked bread",        "rode a horse",
    "sang a song",        "cleaned the office", "signed the contract", "answered the phone",
    "missed the bus",
};

constexpr std::array<PhrasePair, 8> kSubjects = {{
    {"my father", "my mother"},
    {"my brother", "my sister"},
    {"the boy", "the girl"},
    {"my grandfather", "my grandmother"},
    {"my uncle", "my aunt"},
    {"the gentleman", "the lady"},
    {"my son", "my daughter"},
    {"the groom", "the bride"},
}};

constexpr std::array<std::string_view, 4> kContextFrames = {
    "@ came home early.",
    "@ had a free afternoon.",
    "@ woke up on sunday.",
    "@ finished work.",
};

constexpr std::array<std::string_view, 8> kMaleActivities = {
    "fixed the engine", "played football",   "lifted weights", "built a shed",
    "watched the match", "chopped some wood", "repaired the roof", "drove the truck",
};

constexpr std::array<std::string_view, 8> kFemaleActivities = {
    "baked a cake",         "sewed a dress",       "arranged the flowers", "bought new shoes",
    "cleaned the kitchen",  "cared for the baby",  "knitted a scarf",      "went shopping",
};

constexpr std::array<std::string_view, 6> kUnrelated = {
    "the sky is green.",       "bananas are made of glass.", "the river sang loudly.",
    "purple numbers sleep.",   "the chair ate the moon.",    "clouds are square today.",
};

std::string substitute(std::string_view frame, std::string_view phrase) {
  std::string out(frame);
  for (auto pos = out.find('@'); pos != std::string::npos; pos = out.find('@', pos + phrase.size())) {
    out.replace(pos, 1, phrase);
  }
  return out;
}

std::string pronoun_sentence(bool male, std::string_view activity) {
  return std::string(male ? "he " : "she ") + std::string(activity) + ".";
}

std::size_t pick(std::mt19937_64& eng, std::size_t n) { return static_cast<std::size_t>(eng() % n); }

}  // namespace

GenderPairSet default_gender_pairs() {
  GenderPairSet pairs;
  for (const auto& phrase : kPairPhrases) {
    for (const auto frame : kPairFrames) {
      pairs.push_back({substitute(frame, phrase.male), substitute(frame, phrase.female)});
    }
  }
  return pairs;
}

std::vector<std::string> default_occupations() { return {kOccupations.begin(), kOccupations.end()}; }

std::vector<ProbeTemplate> default_templates() {
  std::vector<ProbeTemplate> out;
  for (std::size_t i = 0; i < kActivities.size(); ++i) {
    ProbeTemplate t;
    t.id = "t" + std::to_string(i);
    t.activity = std::string(kActivities[i]);
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<TriplePair> synthetic_stereoset(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  std::vector<TriplePair> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const PhrasePair& subject = kSubjects[pick(eng, kSubjects.size())];
    const std::string_view frame = kContextFrames[pick(eng, kContextFrames.size())];
    const std::string_view male_act = kMaleActivities[pick(eng, kMaleActivities.size())];
    const std::string_view female_act = kFemaleActivities[pick(eng, kFemaleActivities.size())];
    const std::string unrelated(kUnrelated[pick(eng, kUnrelated.size())]);
    const bool male_first = i % 2 == 0;

    auto triple = [&](bool male) {
      return Triple{substitute(frame, male ? subject.male : subject.female),
                    pronoun_sentence(male, male ? male_act : female_act),
                    pronoun_sentence(male, male ? female_act : male_act), unrelated};
    };
    char id[32];
    std::snprintf(id, sizeof id, "ss-%03zu", i);
    out.push_back(TriplePair{id, "gender", triple(male_first), triple(!male_first)});
  }
  return out;
}

std::vector<BenchmarkItem> synthetic_benchmark(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  std::vector<BenchmarkItem> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::string occupation(kOccupations[pick(eng, kOccupations.size())]);
    const std::string activity(kActivities[pick(eng, kActivities.size())]);
    BenchmarkItem item;
    item.premise = "the " + occupation + " " + activity + ".";
    switch (i % 3) {
      case 0:
        item.hypothesis = "someone " + activity + ".";
        item.label = NliLabel::Entailment;
        break;
      case 1:
        item.hypothesis = "the " + occupation + " was happy.";
        item.label = NliLabel::Neutral;
        break;
      default:
        item.hypothesis = "nobody " + activity + ".";
        item.label = NliLabel::Contradiction;
    }
    out.push_back(std::move(item));
  }
  return out;
}

std::vector<std::string> default_vocab_words() {
  std::set<std::string> words = {"man", "woman", "he", "she", "someone", "nobody", "was", "happy", "the"};
  auto add = [&](std::string_view text) {
    for (auto& w : split_words(text)) words.insert(std::move(w));
  };
  for (const auto& p : default_gender_pairs()) {
    add(p.male);
    add(p.female);
  }
  for (const auto o : kOccupations) add(o);
  for (const auto a : kActivities) add(a);
  for (const auto& s : kSubjects) {
    add(s.male);
    add(s.female);
  }
  for (const auto f : kContextFrames) add(f);
  for (const auto a : kMaleActivities) add(a);
  for (const auto a : kFemaleActivities) add(a);
  for (const auto u : kUnrelated) add(u);
  words.erase("@");
  return {words.begin(), words.end()};
}

}  // namespace projdebias
