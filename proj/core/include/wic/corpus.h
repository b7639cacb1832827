#ifndef WIC_CORPUS_H_
#define WIC_CORPUS_H_

// Parallel corpus ingestion, vocabularies, alignment symmetrization and
// extraction of (word-in-context, single-word translation) instances.

#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace wic {

using WordId = std::int32_t;
using TokenCounts = std::map<std::string, std::int64_t, std::less<>>;

inline constexpr WordId kUnkId = 0;
inline constexpr std::string_view kUnkToken = "<unk>";

struct VocabEntry {
  std::string word;
  std::int64_t count = 0;

  friend bool operator==(const VocabEntry&, const VocabEntry&) = default;
};

// Frequency-ranked word <-> id map. Id 0 is always the unknown token; ids
// 1..size-1 are the retained types sorted by count descending, ties broken
// by byte-wise ascending order.
class Vocabulary {
 public:
  Vocabulary();

  // entries[0] must be the unknown token.
  explicit Vocabulary(std::vector<VocabEntry> entries);

  std::size_t size() const { return entries_.size(); }
  WordId id(std::string_view word) const;
  bool contains(std::string_view word) const;
  const std::string& word(WordId id) const;
  std::int64_t count(WordId id) const;
  const std::vector<VocabEntry>& entries() const { return entries_; }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.entries_ == b.entries_;
  }

 private:
  std::vector<VocabEntry> entries_;
  std::unordered_map<std::string, WordId> id_of_;
};

struct VocabOptions {
  std::size_t cap = 30000;
  std::size_t drop_top_k = 0;
  // Types seen fewer than min_count times are never retained.
  std::int64_t min_count = 1;
};

// Drops the drop_top_k most frequent types, then keeps the `cap` most
// frequent of the rest. The unknown entry's count is the total count of all
// types that were not retained.
Vocabulary build_vocabulary(const TokenCounts& counts, std::size_t cap, std::size_t drop_top_k);
Vocabulary build_vocabulary(const TokenCounts& counts, const VocabOptions& options);

// TSV: id, word, count; sorted by id.
void write_vocabulary(std::ostream& out, const Vocabulary& vocab);
Vocabulary read_vocabulary(std::istream& in);
void save_vocabulary(const std::string& path, const Vocabulary& vocab);
Vocabulary load_vocabulary(const std::string& path);

std::vector<std::string> tokenize(std::string_view line);
std::vector<WordId> sentence_to_ids(const std::vector<std::string>& sentence,
                                    const Vocabulary& vocab);

struct ParallelSentencePair {
  std::vector<std::string> source;
  std::vector<std::string> target;
  std::size_t index = 0;  // 0-based line number in the corpus files
};

// Line i of each stream forms pair i. Lines where either side is empty are
// skipped; the remaining pairs keep their original line index so they stay
// matched with alignment lines.
std::vector<ParallelSentencePair> read_parallel_corpus(std::istream& source,
                                                       std::istream& target);
std::vector<ParallelSentencePair> load_parallel_corpus(const std::string& source_path,
                                                       const std::string& target_path);

void count_tokens(const std::vector<std::string>& sentence, TokenCounts& counts);

struct AlignmentLink {
  std::size_t source = 0;
  std::size_t target = 0;

  friend auto operator<=>(const AlignmentLink&, const AlignmentLink&) = default;
};

// Links in (source, target) orientation, ordered by (source, target).
using AlignmentSet = std::set<AlignmentLink>;

// Pharaoh "i-j" format, one line per sentence pair.
std::vector<AlignmentSet> parse_alignments(std::string_view text);
std::vector<AlignmentSet> read_alignments(std::istream& in);
std::vector<AlignmentSet> load_alignments(const std::string& path);
std::string format_alignment(const AlignmentSet& links);

AlignmentSet intersect_alignments(const AlignmentSet& forward, const AlignmentSet& backward);

// One pretraining (or fine-tuning) example: the token at `position` of the
// encoded sentence must be classified as `target_id`.
struct TranslationInstance {
  std::vector<WordId> source_ids;
  std::size_t position = 0;
  WordId target_id = kUnkId;

  friend bool operator==(const TranslationInstance&, const TranslationInstance&) = default;
};

inline constexpr std::size_t kDefaultMinSourceLength = 10;

// One instance per link, in (i, j) order. Pairs whose source has at most
// min_len tokens yield nothing; links whose target word is not in the target
// vocabulary (dropped as too common, or rare) are skipped.
std::vector<TranslationInstance> extract_instances(const ParallelSentencePair& pair,
                                                   const AlignmentSet& alignment,
                                                   const Vocabulary& source_vocab,
                                                   const Vocabulary& target_vocab,
                                                   std::size_t min_len);

// Symmetrizes forward/backward alignments (indexed by pair.index) and
// extracts instances from every pair in corpus order.
std::vector<TranslationInstance> extract_corpus_instances(
    const std::vector<ParallelSentencePair>& corpus, const std::vector<AlignmentSet>& forward,
    const std::vector<AlignmentSet>& backward, const Vocabulary& source_vocab,
    const Vocabulary& target_vocab, std::size_t min_len);

// TSV: position, target id, space-separated source ids.
void write_instances(std::ostream& out, const std::vector<TranslationInstance>& instances);
std::vector<TranslationInstance> read_instances(std::istream& in);
void save_instances(const std::string& path, const std::vector<TranslationInstance>& instances);
std::vector<TranslationInstance> load_instances(const std::string& path);

}  // namespace wic

#endif  // WIC_CORPUS_H_
