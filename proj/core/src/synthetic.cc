#include "wic/synthetic.h"

#include <array>
#include <filesystem>
#include <fstream>
#include <string_view>
#include <utility>

#include "wic/error.h"
#include "wic/numkit.h"

namespace wic {

namespace {

using Lexeme = std::pair<std::string_view, std::string_view>;

constexpr std::array<Lexeme, 10> kFunctionWords = {{
    {"the", "le"}, {"of", "de"}, {"a", "un"}, {"to", "vers"}, {"and", "et"},
    {"in", "dans"}, {"is", "est"}, {"it", "il"}, {"that", "que"}, {"was", "etait"},
}};

constexpr std::array<Lexeme, 5> kMoneyCues = {{
    {"money", "argent"}, {"loan", "pret"}, {"cash", "liquide"},
    {"deposit", "depot"}, {"credit", "credit"},
}};

constexpr std::array<Lexeme, 5> kRiverCues = {{
    {"river", "fleuve"}, {"water", "eau"}, {"fish", "poisson"},
    {"boat", "bateau"}, {"stream", "ruisseau"},
}};

constexpr std::array<Lexeme, 20> kFillers = {{
    {"saw", "vit"},       {"old", "vieux"},     {"walked", "marcha"}, {"near", "pres"},
    {"man", "homme"},     {"woman", "femme"},   {"day", "jour"},      {"new", "nouveau"},
    {"went", "alla"},     {"found", "trouva"},  {"small", "petit"},   {"large", "grand"},
    {"city", "ville"},    {"morning", "matin"}, {"friend", "ami"},    {"told", "dit"},
    {"there", "la"},      {"again", "encore"},  {"long", "long"},     {"house", "maison"},
}};

constexpr std::string_view kHomograph = "bank";
constexpr Lexeme kMoneySynonym = {"treasury", "banque"};
constexpr Lexeme kRiverSynonym = {"shore", "rive"};

struct Token {
  std::string_view source;
  std::string_view target;
  std::string_view label;
};

struct GeneratedSentence {
  std::vector<Token> tokens;
  std::size_t ambiguous = 0;  // position of bank/treasury/shore
  Sense sense = Sense::kMoney;
  bool homograph = false;
};

template <std::size_t N>
const Lexeme& pick(const std::array<Lexeme, N>& words, SeededRng& rng) {
  return words[rng.index(N)];
}

GeneratedSentence generate_sentence(SeededRng& rng, double synonym_rate) {
  GeneratedSentence s;
  s.sense = rng.uniform(0.0, 1.0) < 0.5 ? Sense::kMoney : Sense::kRiver;
  const bool money = s.sense == Sense::kMoney;
  s.homograph = rng.uniform(0.0, 1.0) >= synonym_rate;
  const std::size_t length = 11 + rng.index(4);
  const std::size_t cues = 1 + rng.index(2);
  const std::size_t fillers = 2 + rng.index(2);

  const std::string_view sense_word = money ? kMoneySynonym.second : kRiverSynonym.second;
  const std::string_view group_label = money ? "noun.group" : "noun.object";
  if (s.homograph) {
    s.tokens.push_back({kHomograph, sense_word, group_label});
  } else {
    const Lexeme& syn = money ? kMoneySynonym : kRiverSynonym;
    s.tokens.push_back({syn.first, syn.second, group_label});
  }
  for (std::size_t k = 0; k < cues; ++k) {
    const Lexeme& cue = money ? pick(kMoneyCues, rng) : pick(kRiverCues, rng);
    s.tokens.push_back({cue.first, cue.second, money ? "noun.possession" : "noun.object"});
  }
  for (std::size_t k = 0; k < fillers; ++k) {
    const Lexeme& w = pick(kFillers, rng);
    s.tokens.push_back({w.first, w.second, kOutsideLabel});
  }
  while (s.tokens.size() < length) {
    const Lexeme& w = pick(kFunctionWords, rng);
    s.tokens.push_back({w.first, w.second, kOutsideLabel});
  }
  rng.shuffle(s.tokens);
  for (std::size_t t = 0; t < s.tokens.size(); ++t) {
    const auto src = s.tokens[t].source;
    if (src == kHomograph || src == kMoneySynonym.first || src == kRiverSynonym.first) {
      s.ambiguous = t;
    }
  }
  return s;
}

AlignmentSet diagonal_links(std::size_t n) {
  AlignmentSet links;
  for (std::size_t i = 0; i < n; ++i) links.insert({i, i});
  return links;
}

// Adds `count` off-diagonal links not already in `taken`, recording them there.
void add_spurious(AlignmentSet& links, AlignmentSet& taken, std::size_t n, std::size_t count,
                  SeededRng& rng) {
  std::size_t attempts = 0;
  while (count > 0 && attempts++ < 1000) {
    const AlignmentLink link{rng.index(n), rng.index(n)};
    if (link.source == link.target || taken.count(link)) continue;
    taken.insert(link);
    links.insert(link);
    --count;
  }
}

void add_pair(SyntheticCorpus& corpus, std::vector<std::string> source,
              std::vector<std::string> target, std::size_t spurious, SeededRng& rng) {
  const std::size_t n = source.size();
  const std::size_t index = corpus.pairs.size();
  corpus.pairs.push_back({std::move(source), std::move(target), index});
  AlignmentSet truth = diagonal_links(n);
  AlignmentSet taken = truth;
  AlignmentSet forward = truth;
  AlignmentSet backward = truth;
  add_spurious(forward, taken, n, spurious, rng);
  add_spurious(backward, taken, n, spurious, rng);
  corpus.forward.push_back(std::move(forward));
  corpus.backward.push_back(std::move(backward));
  corpus.truth.push_back(std::move(truth));
}

}  // namespace

SyntheticCorpus make_homograph_corpus(const HomographOptions& options) {
  WIC_CHECK(options.synonym_rate >= 0.0 && options.synonym_rate <= 1.0,
            "synonym rate must be in [0, 1]");
  SeededRng rng(options.seed);
  SyntheticCorpus corpus;
  for (std::size_t k = 0; k < options.sentences; ++k) {
    const GeneratedSentence s = generate_sentence(rng, options.synonym_rate);
    std::vector<std::string> source;
    std::vector<std::string> target;
    for (const auto& tok : s.tokens) {
      source.emplace_back(tok.source);
      target.emplace_back(tok.target);
    }
    if (s.homograph) {
      corpus.sites.push_back({corpus.pairs.size(), s.ambiguous, s.sense,
                              target[s.ambiguous]});
    }
    corpus.senses.push_back(s.sense);
    add_pair(corpus, std::move(source), std::move(target), options.spurious_links, rng);
  }
  return corpus;
}

SupersenseDataset make_homograph_supersense(std::size_t sentences, std::uint64_t seed) {
  SeededRng rng(seed);
  SupersenseDataset data;
  for (std::size_t k = 0; k < sentences; ++k) {
    const GeneratedSentence s = generate_sentence(rng, 0.25);
    SupersenseSentence out;
    for (const auto& tok : s.tokens) out.push_back({std::string(tok.source), std::string(tok.label)});
    data.sentences.push_back(std::move(out));
  }
  return data;
}

SyntheticCorpus make_mapping_corpus(std::size_t sentences, std::size_t vocab, std::uint64_t seed) {
  WIC_CHECK(vocab >= 1, "mapping corpus needs a non-empty vocabulary");
  SeededRng rng(seed);
  SyntheticCorpus corpus;
  for (std::size_t k = 0; k < sentences; ++k) {
    const std::size_t length = 11 + rng.index(3);
    std::vector<std::string> source;
    std::vector<std::string> target;
    for (std::size_t t = 0; t < length; ++t) {
      const std::size_t w = rng.index(vocab);
      source.push_back("w" + std::to_string(w));
      target.push_back("x" + std::to_string(w));
    }
    add_pair(corpus, std::move(source), std::move(target), 0, rng);
  }
  return corpus;
}

void save_parallel_files(const std::string& dir, const SyntheticCorpus& corpus) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream out(fs::path(dir) / name);
    if (!out) throw std::runtime_error("cannot open " + (fs::path(dir) / name).string());
    return out;
  };
  auto join = [](const std::vector<std::string>& words) {
    std::string line;
    for (std::size_t i = 0; i < words.size(); ++i) {
      if (i) line += ' ';
      line += words[i];
    }
    return line;
  };
  std::ofstream source = open("source.txt");
  std::ofstream target = open("target.txt");
  std::ofstream forward = open("forward.align");
  std::ofstream backward = open("backward.align");
  for (std::size_t k = 0; k < corpus.pairs.size(); ++k) {
    source << join(corpus.pairs[k].source) << '\n';
    target << join(corpus.pairs[k].target) << '\n';
    forward << format_alignment(corpus.forward[k]) << '\n';
    backward << format_alignment(corpus.backward[k]) << '\n';
  }
}

}  // namespace wic
