#ifndef WIC_SYNTHETIC_H_
#define WIC_SYNTHETIC_H_

// Seeded toy corpora with known answers.
//
// The homograph corpus is a word-by-word "translation" task where one
// source word, "bank", translates to "banque" next to money words and to
// "rive" next to river words. "treasury" and "shore" are unambiguous
// synonyms of the two senses. Every target sentence also carries a handful
// of very frequent function words, which the usual drop-top-10 target
// vocabulary removes.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "wic/corpus.h"
#include "wic/tasks.h"

namespace wic {

enum class Sense { kMoney, kRiver };

struct HomographSite {
  std::size_t pair = 0;      // index into pairs
  std::size_t position = 0;  // source position of the ambiguous word
  Sense sense = Sense::kMoney;
  std::string expected;  // context-indicated translation
};

struct SyntheticCorpus {
  std::vector<ParallelSentencePair> pairs;
  std::vector<AlignmentSet> forward;
  std::vector<AlignmentSet> backward;
  std::vector<AlignmentSet> truth;
  std::vector<HomographSite> sites;  // one per sentence using "bank"
  std::vector<Sense> senses;         // per sentence
};

struct HomographOptions {
  std::size_t sentences = 2000;
  double synonym_rate = 0.25;  // share of sentences using treasury/shore
  std::size_t spurious_links = 2;
  std::uint64_t seed = 7;
};

SyntheticCorpus make_homograph_corpus(const HomographOptions& options);

// Supersense labels for the same kind of sentences: bank/treasury in a
// money context is noun.group, bank/shore in a river context noun.object,
// money cues noun.possession, river cues noun.object, everything else O.
SupersenseDataset make_homograph_supersense(std::size_t sentences, std::uint64_t seed);

// Sentences of 11-13 tokens over a small vocabulary, each source word with
// a fixed target word, aligned one to one.
SyntheticCorpus make_mapping_corpus(std::size_t sentences, std::size_t vocab, std::uint64_t seed);

// Writes source.txt, target.txt, forward.align, backward.align under `dir`.
void save_parallel_files(const std::string& dir, const SyntheticCorpus& corpus);

}  // namespace wic

#endif  // WIC_SYNTHETIC_H_
