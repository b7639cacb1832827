#include "wic/corpus.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "wic/error.h"

namespace wic {

namespace {

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path + " for reading");
  return in;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  return out;
}

bool parse_size(std::string_view text, std::size_t& value) {
  if (text.empty()) return false;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  return ec == std::errc() && ptr == end;
}

template <typename Int>
bool parse_int(std::string_view text, Int& value) {
  if (text.empty()) return false;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  return ec == std::errc() && ptr == end;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

}  // namespace

Vocabulary::Vocabulary() : Vocabulary(std::vector<VocabEntry>{{std::string(kUnkToken), 0}}) {}

Vocabulary::Vocabulary(std::vector<VocabEntry> entries) : entries_(std::move(entries)) {
  WIC_CHECK(!entries_.empty() && entries_[0].word == kUnkToken,
            "vocabulary must start with the unknown token");
  id_of_.reserve(entries_.size());
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const bool fresh = id_of_.emplace(entries_[i].word, static_cast<WordId>(i)).second;
    WIC_CHECK(fresh, "duplicate vocabulary word '" << entries_[i].word << "'");
  }
}

WordId Vocabulary::id(std::string_view word) const {
  auto it = id_of_.find(std::string(word));
  return it == id_of_.end() ? kUnkId : it->second;
}

bool Vocabulary::contains(std::string_view word) const {
  return id_of_.find(std::string(word)) != id_of_.end() && word != kUnkToken;
}

const std::string& Vocabulary::word(WordId id) const {
  WIC_CHECK(id >= 0 && static_cast<std::size_t>(id) < entries_.size(),
            "word id " << id << " outside vocabulary of size " << entries_.size());
  return entries_[id].word;
}

std::int64_t Vocabulary::count(WordId id) const {
  WIC_CHECK(id >= 0 && static_cast<std::size_t>(id) < entries_.size(),
            "word id " << id << " outside vocabulary of size " << entries_.size());
  return entries_[id].count;
}

Vocabulary build_vocabulary(const TokenCounts& counts, std::size_t cap, std::size_t drop_top_k) {
  return build_vocabulary(counts, VocabOptions{cap, drop_top_k, 1});
}

Vocabulary build_vocabulary(const TokenCounts& counts, const VocabOptions& options) {
  std::vector<VocabEntry> ranked;
  ranked.reserve(counts.size());
  for (const auto& [word, count] : counts) {
    if (word == kUnkToken) continue;
    ranked.push_back({word, count});
  }
  std::sort(ranked.begin(), ranked.end(), [](const VocabEntry& a, const VocabEntry& b) {
    if (a.count != b.count) return a.count > b.count;
    return a.word < b.word;
  });

  std::vector<VocabEntry> entries;
  entries.push_back({std::string(kUnkToken), 0});
  std::int64_t unknown_mass = 0;
  for (std::size_t rank = 0; rank < ranked.size(); ++rank) {
    const bool keep = rank >= options.drop_top_k && entries.size() <= options.cap &&
                      ranked[rank].count >= options.min_count;
    if (keep) {
      entries.push_back(std::move(ranked[rank]));
    } else {
      unknown_mass += ranked[rank].count;
    }
  }
  entries[0].count = unknown_mass;
  return Vocabulary(std::move(entries));
}

void write_vocabulary(std::ostream& out, const Vocabulary& vocab) {
  const auto& entries = vocab.entries();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    out << i << '\t' << entries[i].word << '\t' << entries[i].count << '\n';
  }
}

Vocabulary read_vocabulary(std::istream& in) {
  std::vector<VocabEntry> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split(line, '\t');
    std::size_t id = 0;
    std::int64_t count = 0;
    if (fields.size() != 3 || !parse_size(fields[0], id) || !parse_int(fields[2], count)) {
      throw ParseError("vocabulary line " + std::to_string(line_no) +
                       ": expected 'id<TAB>word<TAB>count'");
    }
    if (id != entries.size()) {
      throw ParseError("vocabulary line " + std::to_string(line_no) + ": id " +
                       std::to_string(id) + " out of sequence");
    }
    entries.push_back({std::string(fields[1]), count});
  }
  if (entries.empty() || entries[0].word != kUnkToken) {
    throw ParseError("vocabulary must start with id 0 = " + std::string(kUnkToken));
  }
  return Vocabulary(std::move(entries));
}

void save_vocabulary(const std::string& path, const Vocabulary& vocab) {
  auto out = open_output(path);
  write_vocabulary(out, vocab);
}

Vocabulary load_vocabulary(const std::string& path) {
  auto in = open_input(path);
  return read_vocabulary(in);
}

std::vector<std::string> tokenize(std::string_view line) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  auto is_space = [](char c) {
    return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v';
  };
  while (i < line.size()) {
    while (i < line.size() && is_space(line[i])) ++i;
    const std::size_t start = i;
    while (i < line.size() && !is_space(line[i])) ++i;
    if (i > start) tokens.emplace_back(line.substr(start, i - start));
  }
  return tokens;
}

std::vector<WordId> sentence_to_ids(const std::vector<std::string>& sentence,
                                    const Vocabulary& vocab) {
  std::vector<WordId> ids;
  ids.reserve(sentence.size());
  for (const auto& token : sentence) ids.push_back(vocab.id(token));
  return ids;
}

std::vector<ParallelSentencePair> read_parallel_corpus(std::istream& source,
                                                       std::istream& target) {
  std::vector<ParallelSentencePair> pairs;
  std::string src_line;
  std::string tgt_line;
  std::size_t index = 0;
  while (true) {
    const bool has_src = static_cast<bool>(std::getline(source, src_line));
    const bool has_tgt = static_cast<bool>(std::getline(target, tgt_line));
    if (!has_src && !has_tgt) break;
    if (has_src != has_tgt) {
      throw DataError("parallel corpus sides differ in length at line " +
                      std::to_string(index + 1));
    }
    ParallelSentencePair pair{tokenize(src_line), tokenize(tgt_line), index};
    if (!pair.source.empty() && !pair.target.empty()) pairs.push_back(std::move(pair));
    ++index;
  }
  return pairs;
}

std::vector<ParallelSentencePair> load_parallel_corpus(const std::string& source_path,
                                                       const std::string& target_path) {
  auto src = open_input(source_path);
  auto tgt = open_input(target_path);
  return read_parallel_corpus(src, tgt);
}

void count_tokens(const std::vector<std::string>& sentence, TokenCounts& counts) {
  for (const auto& token : sentence) {
    auto it = counts.find(token);
    if (it == counts.end()) {
      counts.emplace(token, 1);
    } else {
      ++it->second;
    }
  }
}

std::vector<AlignmentSet> parse_alignments(std::string_view text) {
  std::vector<AlignmentSet> result;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;

    AlignmentSet links;
    for (const auto& token : tokenize(line)) {
      const std::size_t dash = token.find('-');
      std::size_t i = 0;
      std::size_t j = 0;
      if (dash == std::string::npos ||
          !parse_size(std::string_view(token).substr(0, dash), i) ||
          !parse_size(std::string_view(token).substr(dash + 1), j)) {
        throw ParseError("alignment line " + std::to_string(line_no) + ": malformed link '" +
                         token + "'");
      }
      links.insert({i, j});
    }
    result.push_back(std::move(links));
  }
  return result;
}

std::vector<AlignmentSet> read_alignments(std::istream& in) {
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_alignments(buffer.str());
}

std::vector<AlignmentSet> load_alignments(const std::string& path) {
  auto in = open_input(path);
  return read_alignments(in);
}

std::string format_alignment(const AlignmentSet& links) {
  std::string out;
  for (const auto& link : links) {
    if (!out.empty()) out += ' ';
    out += std::to_string(link.source) + '-' + std::to_string(link.target);
  }
  return out;
}

AlignmentSet intersect_alignments(const AlignmentSet& forward, const AlignmentSet& backward) {
  AlignmentSet both;
  std::set_intersection(forward.begin(), forward.end(), backward.begin(), backward.end(),
                        std::inserter(both, both.end()));
  return both;
}

std::vector<TranslationInstance> extract_instances(const ParallelSentencePair& pair,
                                                   const AlignmentSet& alignment,
                                                   const Vocabulary& source_vocab,
                                                   const Vocabulary& target_vocab,
                                                   std::size_t min_len) {
  for (const auto& link : alignment) {
    if (link.source >= pair.source.size() || link.target >= pair.target.size()) {
      throw DataError("alignment link " + std::to_string(link.source) + "-" +
                      std::to_string(link.target) + " outside sentence pair " +
                      std::to_string(pair.index) + " (" + std::to_string(pair.source.size()) +
                      "x" + std::to_string(pair.target.size()) + ")");
    }
  }
  std::vector<TranslationInstance> instances;
  if (pair.source.size() <= min_len) return instances;

  const std::vector<WordId> ids = sentence_to_ids(pair.source, source_vocab);
  for (const auto& link : alignment) {
    const WordId target = target_vocab.id(pair.target[link.target]);
    if (target == kUnkId) continue;
    instances.push_back({ids, link.source, target});
  }
  return instances;
}

std::vector<TranslationInstance> extract_corpus_instances(
    const std::vector<ParallelSentencePair>& corpus, const std::vector<AlignmentSet>& forward,
    const std::vector<AlignmentSet>& backward, const Vocabulary& source_vocab,
    const Vocabulary& target_vocab, std::size_t min_len) {
  std::vector<TranslationInstance> instances;
  for (const auto& pair : corpus) {
    if (pair.index >= forward.size() || pair.index >= backward.size()) {
      throw DataError("no alignment line for sentence pair " + std::to_string(pair.index));
    }
    const AlignmentSet links = intersect_alignments(forward[pair.index], backward[pair.index]);
    auto extracted = extract_instances(pair, links, source_vocab, target_vocab, min_len);
    instances.insert(instances.end(), std::make_move_iterator(extracted.begin()),
                     std::make_move_iterator(extracted.end()));
  }
  return instances;
}

void write_instances(std::ostream& out, const std::vector<TranslationInstance>& instances) {
  for (const auto& inst : instances) {
    out << inst.position << '\t' << inst.target_id << '\t';
    for (std::size_t i = 0; i < inst.source_ids.size(); ++i) {
      if (i) out << ' ';
      out << inst.source_ids[i];
    }
    out << '\n';
  }
}

std::vector<TranslationInstance> read_instances(std::istream& in) {
  std::vector<TranslationInstance> instances;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split(line, '\t');
    TranslationInstance inst;
    bool ok = fields.size() == 3 && parse_size(fields[0], inst.position) &&
              parse_int(fields[1], inst.target_id);
    if (ok) {
      for (const auto& tok : tokenize(fields[2])) {
        WordId id = 0;
        if (!parse_int(std::string_view(tok), id) || id < 0) {
          ok = false;
          break;
        }
        inst.source_ids.push_back(id);
      }
    }
    if (!ok || inst.position >= inst.source_ids.size() || inst.target_id < 0) {
      throw ParseError("instance line " + std::to_string(line_no) +
                       ": expected 'position<TAB>target_id<TAB>ids'");
    }
    instances.push_back(std::move(inst));
  }
  return instances;
}

void save_instances(const std::string& path, const std::vector<TranslationInstance>& instances) {
  auto out = open_output(path);
  write_instances(out, instances);
}

std::vector<TranslationInstance> load_instances(const std::string& path) {
  auto in = open_input(path);
  return read_instances(in);
}

}  // namespace wic
