#ifndef WIC_TASKS_H_
#define WIC_TASKS_H_

// Downstream uses of word-in-context vectors: supersense tagging,
// alignment-based lexical substitution, and lexical translation features.

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wic/baselines.h"
#include "wic/corpus.h"
#include "wic/network.h"
#include "wic/train.h"

namespace wic {

// ---------------------------------------------------------------------------
// Supersense tagging

inline constexpr std::string_view kOutsideLabel = "O";
inline constexpr std::size_t kDefaultWindow = 20;

// O plus the 26 noun and 15 verb WordNet lexicographer classes.
const std::set<std::string, std::less<>>& supersense_inventory();

struct SupersenseToken {
  std::string token;
  std::string label;
};
using SupersenseSentence = std::vector<SupersenseToken>;

struct SupersenseDataset {
  std::vector<SupersenseSentence> sentences;

  std::size_t token_count() const;
};

// "token<TAB>label" per line, blank line between sentences. A label field
// listing several senses (separated by ';', ',' or spaces) keeps the first.
// Labels outside `inventory` raise DataError naming the line.
SupersenseDataset read_supersense(std::istream& in,
                                  const std::set<std::string, std::less<>>& inventory =
                                      supersense_inventory());
SupersenseDataset load_supersense(const std::string& path);
void write_supersense(std::ostream& out, const SupersenseDataset& data);

// Label vocabulary over the whole inventory, ranked by training frequency.
Vocabulary supersense_label_vocabulary(const SupersenseDataset& train);

// Token `position` of `ids` seen through a window of n words: positions
// [t - n/2, t + n/2], clipped to the sentence.
TranslationInstance window_instance(std::span<const WordId> ids, std::size_t position,
                                    std::size_t window, WordId label);

// One windowed instance per token. With `skip_outside`, tokens labeled O
// are left out.
std::vector<TranslationInstance> supersense_instances(const SupersenseDataset& data,
                                                      const Vocabulary& source_vocab,
                                                      const Vocabulary& label_vocab,
                                                      std::size_t window,
                                                      bool skip_outside = false);

// Copies the encoder of `pretrained` and puts a fresh Glorot head with
// `num_labels` rows on top.
Network transfer_encoder(const Network& pretrained, std::size_t num_labels, std::uint64_t seed);

struct ClassScores {
  std::size_t support = 0;    // gold count
  std::size_t predicted = 0;  // predicted count
  std::size_t correct = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct SupersenseScores {
  std::map<std::string, ClassScores> per_class;  // gold non-O classes
  // Support-weighted averages over gold non-O classes.
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double accuracy = 0.0;  // over all tokens
};

SupersenseScores score_supersense(const std::vector<std::string>& gold,
                                  const std::vector<std::string>& predicted);

// Tags every token from the context vector of its window and scores the
// result against the gold labels.
SupersenseScores evaluate_supersense(const Network& net, const Vocabulary& source_vocab,
                                     const Vocabulary& label_vocab,
                                     const SupersenseDataset& data, std::size_t window,
                                     std::size_t threads = 1);

// ---------------------------------------------------------------------------
// Lexical substitution

// Aligned word co-occurrence counts in both directions.
struct AlignmentCounts {
  std::map<std::string, std::map<std::string, std::int64_t>> source_to_target;
  std::map<std::string, std::map<std::string, std::int64_t>> target_to_source;

  void add(const std::string& source, const std::string& target, std::int64_t n = 1);
};

AlignmentCounts count_aligned_pairs(const std::vector<ParallelSentencePair>& corpus,
                                    const std::vector<AlignmentSet>& alignments);

using CandidateTable = std::map<std::string, std::vector<Candidate>, std::less<>>;

// Source words reachable from `word` through any of its aligned
// translations, weighted by their alignment counts with those translations,
// ranked, excluding `word`, cut at the shortest prefix holding
// `mass_threshold` of the total. nullopt when `word` has no alignments.
std::optional<std::vector<Candidate>> candidates_for(const AlignmentCounts& counts,
                                                     const std::string& word,
                                                     double mass_threshold);

// Cumulative-mass cut of an already ranked list.
std::vector<Candidate> cut_at_mass(const std::vector<Candidate>& ranked, double mass_threshold);

CandidateTable build_candidate_table(const AlignmentCounts& counts, double mass_threshold);

// "word<TAB>cand count;cand count;..."
void write_candidate_table(std::ostream& out, const CandidateTable& table);
CandidateTable read_candidate_table(std::istream& in);

struct LexsubItem {
  std::string id;
  std::string lemma;
  std::string pos;
  std::size_t position = 0;
  std::vector<std::string> sentence;
};

// Per item: substitute -> annotator count.
using LexsubGold = std::map<std::string, std::map<std::string, std::int64_t>>;

// "id<TAB>lemma.pos<TAB>position<TAB>tokenized sentence"
std::vector<LexsubItem> read_lexsub_items(std::istream& in);
// "id<TAB>sub count;sub count;..."
LexsubGold read_lexsub_gold(std::istream& in);

// The candidate whose in-context vector at the target position is most
// cosine-similar to the original token's. Ties go to the better-ranked
// candidate (count descending, then word).
std::string lexsub_predict(const Network& net, const Vocabulary& source_vocab,
                           const LexsubItem& item, const std::vector<Candidate>& candidates);

// Candidates for an item: its lemma's entry, else its surface token's.
const std::vector<Candidate>* lookup_candidates(const CandidateTable& table,
                                                const LexsubItem& item);

struct LexsubScores {
  double best = 0.0;       // percent
  double best_mode = 0.0;  // percent
  std::size_t items = 0;
  std::size_t mode_items = 0;
};

// best: mean over gold items of count(guess) / total annotator count; items
// without a prediction earn 0. best-mode: mean over items with a unique most
// frequent substitute of [guess == mode]. Both x100.
LexsubScores lexsub_score(const std::map<std::string, std::string>& predictions,
                          const LexsubGold& gold);

// ---------------------------------------------------------------------------
// Lexical translation features

struct FeatureQuery {
  std::vector<std::string> sentence;
  std::size_t position = 0;
  std::string target_word;
};

struct FeatureRecord {
  std::string source_word;
  std::string target_word;
  double p = 0.0;
  double log_p = 0.0;
  bool target_oov = false;  // p is the unknown word's probability
};

// "tokenized sentence<TAB>position<TAB>target word"
std::vector<FeatureQuery> read_feature_queries(std::istream& in);

std::vector<FeatureRecord> export_translation_features(const Network& net,
                                                       const Vocabulary& source_vocab,
                                                       const Vocabulary& target_vocab,
                                                       const std::vector<FeatureQuery>& queries);

// "source<TAB>target<TAB>p<TAB>log_p", 12 significant digits.
void write_feature_records(std::ostream& out, const std::vector<FeatureRecord>& records);

}  // namespace wic

#endif  // WIC_TASKS_H_
