#include "wic/tasks.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "wic/error.h"

namespace wic {

namespace {

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

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

template <typename Int>
bool parse_int(std::string_view text, Int& value) {
  if (text.empty()) return false;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  return ec == std::errc() && ptr == end;
}

// "word count" with the count after the last space.
bool parse_word_count(std::string_view entry, std::string& word, std::int64_t& count) {
  entry = trim(entry);
  const std::size_t space = entry.rfind(' ');
  if (space == std::string_view::npos) return false;
  word = std::string(trim(entry.substr(0, space)));
  return !word.empty() && parse_int(entry.substr(space + 1), count);
}

std::string line_error(std::string_view what, std::size_t line_no) {
  return std::string(what) + " line " + std::to_string(line_no);
}

}  // namespace

// ---------------------------------------------------------------------------
// Supersense tagging

const std::set<std::string, std::less<>>& supersense_inventory() {
  static const std::set<std::string, std::less<>> inventory = {
      "O",
      "noun.Tops",          "noun.act",         "noun.animal",        "noun.artifact",
      "noun.attribute",     "noun.body",        "noun.cognition",     "noun.communication",
      "noun.event",         "noun.feeling",     "noun.food",          "noun.group",
      "noun.location",      "noun.motive",      "noun.object",        "noun.person",
      "noun.phenomenon",    "noun.plant",       "noun.possession",    "noun.process",
      "noun.quantity",      "noun.relation",    "noun.shape",         "noun.state",
      "noun.substance",     "noun.time",
      "verb.body",          "verb.change",      "verb.cognition",     "verb.communication",
      "verb.competition",   "verb.consumption", "verb.contact",       "verb.creation",
      "verb.emotion",       "verb.motion",      "verb.perception",    "verb.possession",
      "verb.social",        "verb.stative",     "verb.weather",
  };
  return inventory;
}

std::size_t SupersenseDataset::token_count() const {
  std::size_t n = 0;
  for (const auto& s : sentences) n += s.size();
  return n;
}

SupersenseDataset read_supersense(std::istream& in,
                                  const std::set<std::string, std::less<>>& inventory) {
  SupersenseDataset data;
  SupersenseSentence current;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = trim(line);
    if (view.empty()) {
      if (!current.empty()) data.sentences.push_back(std::move(current));
      current.clear();
      continue;
    }
    const std::size_t tab = view.find('\t');
    if (tab == std::string_view::npos) {
      throw ParseError(line_error("supersense: expected 'token<TAB>label' on", line_no));
    }
    const std::string_view token = trim(view.substr(0, tab));
    std::string_view labels = trim(view.substr(tab + 1));
    const std::size_t cut = labels.find_first_of(";, \t");
    const std::string_view label = labels.substr(0, cut);
    if (token.empty() || label.empty()) {
      throw ParseError(line_error("supersense: empty token or label on", line_no));
    }
    if (inventory.find(label) == inventory.end()) {
      throw DataError("supersense: label '" + std::string(label) +
                      "' outside the tag inventory on line " + std::to_string(line_no));
    }
    current.push_back({std::string(token), std::string(label)});
  }
  if (!current.empty()) data.sentences.push_back(std::move(current));
  return data;
}

SupersenseDataset load_supersense(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path + " for reading");
  return read_supersense(in);
}

void write_supersense(std::ostream& out, const SupersenseDataset& data) {
  for (const auto& sentence : data.sentences) {
    for (const auto& tok : sentence) out << tok.token << '\t' << tok.label << '\n';
    out << '\n';
  }
}

Vocabulary supersense_label_vocabulary(const SupersenseDataset& train) {
  TokenCounts counts;
  for (const auto& label : supersense_inventory()) counts.emplace(label, 0);
  for (const auto& sentence : train.sentences) {
    for (const auto& tok : sentence) ++counts[tok.label];
  }
  VocabOptions options;
  options.cap = counts.size();
  options.min_count = 0;
  return build_vocabulary(counts, options);
}

TranslationInstance window_instance(std::span<const WordId> ids, std::size_t position,
                                    std::size_t window, WordId label) {
  WIC_CHECK(position < ids.size(), "window position " << position << " outside sentence");
  WIC_CHECK(window >= 1, "window must be >= 1");
  const std::size_t half = window / 2;
  const std::size_t lo = position >= half ? position - half : 0;
  const std::size_t hi = std::min(ids.size(), position + half + 1);
  TranslationInstance inst;
  inst.source_ids.assign(ids.begin() + static_cast<std::ptrdiff_t>(lo),
                         ids.begin() + static_cast<std::ptrdiff_t>(hi));
  inst.position = position - lo;
  inst.target_id = label;
  return inst;
}

std::vector<TranslationInstance> supersense_instances(const SupersenseDataset& data,
                                                      const Vocabulary& source_vocab,
                                                      const Vocabulary& label_vocab,
                                                      std::size_t window, bool skip_outside) {
  std::vector<TranslationInstance> instances;
  for (const auto& sentence : data.sentences) {
    std::vector<WordId> ids;
    ids.reserve(sentence.size());
    for (const auto& tok : sentence) ids.push_back(source_vocab.id(tok.token));
    for (std::size_t t = 0; t < sentence.size(); ++t) {
      if (skip_outside && sentence[t].label == kOutsideLabel) continue;
      if (!label_vocab.contains(sentence[t].label)) {
        throw DataError("supersense: label '" + sentence[t].label +
                        "' not in the model's label set");
      }
      instances.push_back(window_instance(ids, t, window, label_vocab.id(sentence[t].label)));
    }
  }
  return instances;
}

Network transfer_encoder(const Network& pretrained, std::size_t num_labels,
                         std::uint64_t seed) {
  Network net = pretrained;
  SeededRng rng(seed);
  net.head = init_head(num_labels, net.output_size(), rng);
  return net;
}

SupersenseScores score_supersense(const std::vector<std::string>& gold,
                                  const std::vector<std::string>& predicted) {
  WIC_CHECK(gold.size() == predicted.size(),
            "gold has " << gold.size() << " labels, predictions " << predicted.size());
  SupersenseScores scores;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i] == predicted[i]) ++correct;
    if (gold[i] != kOutsideLabel) ++scores.per_class[gold[i]].support;
  }
  for (std::size_t i = 0; i < gold.size(); ++i) {
    auto it = scores.per_class.find(predicted[i]);
    if (it == scores.per_class.end()) continue;
    ++it->second.predicted;
    if (gold[i] == predicted[i]) ++it->second.correct;
  }
  double total_support = 0.0;
  for (auto& [label, c] : scores.per_class) {
    c.precision = c.predicted ? static_cast<double>(c.correct) / static_cast<double>(c.predicted)
                              : 0.0;
    c.recall = static_cast<double>(c.correct) / static_cast<double>(c.support);
    c.f1 = c.precision + c.recall > 0.0
               ? 2.0 * c.precision * c.recall / (c.precision + c.recall)
               : 0.0;
    const double w = static_cast<double>(c.support);
    scores.precision += w * c.precision;
    scores.recall += w * c.recall;
    scores.f1 += w * c.f1;
    total_support += w;
  }
  if (total_support > 0.0) {
    scores.precision /= total_support;
    scores.recall /= total_support;
    scores.f1 /= total_support;
  }
  scores.accuracy =
      gold.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(gold.size());
  return scores;
}

SupersenseScores evaluate_supersense(const Network& net, const Vocabulary& source_vocab,
                                     const Vocabulary& label_vocab,
                                     const SupersenseDataset& data, std::size_t window,
                                     std::size_t threads) {
  const auto instances = supersense_instances(data, source_vocab, label_vocab, window);
  const auto predicted_ids = predict_labels(net, instances, threads);
  std::vector<std::string> gold;
  std::vector<std::string> predicted;
  gold.reserve(instances.size());
  predicted.reserve(instances.size());
  for (const auto& sentence : data.sentences) {
    for (const auto& tok : sentence) gold.push_back(tok.label);
  }
  for (WordId id : predicted_ids) predicted.push_back(label_vocab.word(id));
  return score_supersense(gold, predicted);
}

// ---------------------------------------------------------------------------
// Lexical substitution

void AlignmentCounts::add(const std::string& source, const std::string& target,
                          std::int64_t n) {
  source_to_target[source][target] += n;
  target_to_source[target][source] += n;
}

AlignmentCounts count_aligned_pairs(const std::vector<ParallelSentencePair>& corpus,
                                    const std::vector<AlignmentSet>& alignments) {
  AlignmentCounts counts;
  for (const auto& pair : corpus) {
    if (pair.index >= alignments.size()) {
      throw DataError("no alignment line for sentence pair " + std::to_string(pair.index));
    }
    for (const auto& link : alignments[pair.index]) {
      if (link.source >= pair.source.size() || link.target >= pair.target.size()) {
        throw DataError("alignment link outside sentence pair " + std::to_string(pair.index));
      }
      counts.add(pair.source[link.source], pair.target[link.target]);
    }
  }
  return counts;
}

std::vector<Candidate> cut_at_mass(const std::vector<Candidate>& ranked,
                                   double mass_threshold) {
  WIC_CHECK(mass_threshold > 0.0 && mass_threshold <= 1.0,
            "mass threshold must be in (0, 1], got " << mass_threshold);
  std::int64_t total = 0;
  for (const auto& c : ranked) total += c.count;
  std::vector<Candidate> kept;
  if (total <= 0) return kept;
  const double needed = mass_threshold * static_cast<double>(total);
  // Relative slack so that e.g. 90 of 100 counts as reaching 0.9.
  const double slack = 1e-9 * static_cast<double>(total);
  std::int64_t cumulative = 0;
  for (const auto& c : ranked) {
    kept.push_back(c);
    cumulative += c.count;
    if (static_cast<double>(cumulative) + slack >= needed) break;
  }
  return kept;
}

std::optional<std::vector<Candidate>> candidates_for(const AlignmentCounts& counts,
                                                     const std::string& word,
                                                     double mass_threshold) {
  auto it = counts.source_to_target.find(word);
  if (it == counts.source_to_target.end()) return std::nullopt;
  std::map<std::string, std::int64_t> pooled;
  for (const auto& [translation, unused] : it->second) {
    auto back = counts.target_to_source.find(translation);
    if (back == counts.target_to_source.end()) continue;
    for (const auto& [source, n] : back->second) {
      if (source != word) pooled[source] += n;
    }
  }
  std::vector<Candidate> ranked;
  for (const auto& [source, n] : pooled) ranked.push_back({source, n});
  ranked = cut_at_mass(rank_candidates(std::move(ranked)), mass_threshold);
  if (ranked.empty()) return std::nullopt;
  return ranked;
}

CandidateTable build_candidate_table(const AlignmentCounts& counts, double mass_threshold) {
  CandidateTable table;
  for (const auto& [word, unused] : counts.source_to_target) {
    if (auto c = candidates_for(counts, word, mass_threshold)) table.emplace(word, std::move(*c));
  }
  return table;
}

void write_candidate_table(std::ostream& out, const CandidateTable& table) {
  for (const auto& [word, candidates] : table) {
    out << word << '\t';
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      if (i) out << ';';
      out << candidates[i].word << ' ' << candidates[i].count;
    }
    out << '\n';
  }
}

CandidateTable read_candidate_table(std::istream& in) {
  CandidateTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split(line, '\t');
    if (fields.size() != 2 || trim(fields[0]).empty()) {
      throw ParseError(line_error("candidates: expected 'word<TAB>cand count;...' on", line_no));
    }
    std::vector<Candidate> candidates;
    for (const auto& entry : split(fields[1], ';')) {
      Candidate c;
      if (!parse_word_count(entry, c.word, c.count)) {
        throw ParseError(line_error("candidates: malformed entry on", line_no));
      }
      candidates.push_back(std::move(c));
    }
    table[std::string(trim(fields[0]))] = std::move(candidates);
  }
  return table;
}

std::vector<LexsubItem> read_lexsub_items(std::istream& in) {
  std::vector<LexsubItem> items;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split(line, '\t');
    LexsubItem item;
    const bool shaped = fields.size() == 4 && parse_int(trim(fields[2]), item.position);
    if (!shaped) {
      throw ParseError(line_error("lexsub items: expected 'id<TAB>lemma.pos<TAB>position<TAB>sentence' on",
                                  line_no));
    }
    item.id = std::string(trim(fields[0]));
    const std::string_view lemma_pos = trim(fields[1]);
    const std::size_t dot = lemma_pos.rfind('.');
    item.lemma = std::string(lemma_pos.substr(0, dot));
    if (dot != std::string_view::npos) item.pos = std::string(lemma_pos.substr(dot + 1));
    item.sentence = tokenize(fields[3]);
    if (item.id.empty() || item.lemma.empty() || item.position >= item.sentence.size()) {
      throw ParseError(line_error("lexsub items: bad id, lemma or position on", line_no));
    }
    items.push_back(std::move(item));
  }
  return items;
}

LexsubGold read_lexsub_gold(std::istream& in) {
  LexsubGold gold;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split(line, '\t');
    if (fields.size() != 2 || trim(fields[0]).empty()) {
      throw ParseError(line_error("lexsub gold: expected 'id<TAB>sub count;...' on", line_no));
    }
    auto& subs = gold[std::string(trim(fields[0]))];
    for (const auto& entry : split(fields[1], ';')) {
      if (trim(entry).empty()) continue;
      std::string word;
      std::int64_t count = 0;
      if (!parse_word_count(entry, word, count) || count <= 0) {
        throw ParseError(line_error("lexsub gold: malformed 'substitute count' on", line_no));
      }
      subs[word] += count;
    }
  }
  return gold;
}

std::string lexsub_predict(const Network& net, const Vocabulary& source_vocab,
                           const LexsubItem& item, const std::vector<Candidate>& candidates) {
  WIC_CHECK(!candidates.empty(), "lexsub item " << item.id << " has no candidates");
  WIC_CHECK(item.position < item.sentence.size(), "lexsub item " << item.id
                                                                 << " position out of range");
  const std::vector<Candidate> ranked = rank_candidates(candidates);
  if (ranked.size() == 1) return ranked.front().word;

  std::vector<WordId> ids = sentence_to_ids(item.sentence, source_vocab);
  const Vector original = encode(net, ids)[item.position];
  const std::string* best = nullptr;
  double best_score = 0.0;
  for (const auto& cand : ranked) {
    ids[item.position] = source_vocab.id(cand.word);
    const double score = cosine(original, encode(net, ids)[item.position]);
    if (best == nullptr || score > best_score) {
      best = &cand.word;
      best_score = score;
    }
  }
  return *best;
}

const std::vector<Candidate>* lookup_candidates(const CandidateTable& table,
                                                const LexsubItem& item) {
  auto it = table.find(item.lemma);
  if (it == table.end()) it = table.find(item.sentence[item.position]);
  return it == table.end() ? nullptr : &it->second;
}

LexsubScores lexsub_score(const std::map<std::string, std::string>& predictions,
                          const LexsubGold& gold) {
  for (const auto& [id, guess] : predictions) {
    if (gold.find(id) == gold.end()) {
      throw ScoringError("prediction for unknown lexsub item '" + id + "'");
    }
  }
  LexsubScores scores;
  double best_credit = 0.0;
  double mode_credit = 0.0;
  for (const auto& [id, subs] : gold) {
    std::int64_t total = 0;
    std::int64_t top = 0;
    std::size_t at_top = 0;
    const std::string* mode = nullptr;
    for (const auto& [word, n] : subs) {
      total += n;
      if (n > top) {
        top = n;
        at_top = 1;
        mode = &word;
      } else if (n == top) {
        ++at_top;
      }
    }
    if (total <= 0) continue;
    ++scores.items;
    const bool unique_mode = at_top == 1;
    if (unique_mode) ++scores.mode_items;

    auto guess = predictions.find(id);
    if (guess == predictions.end()) continue;
    auto hit = subs.find(guess->second);
    if (hit != subs.end()) {
      best_credit += static_cast<double>(hit->second) / static_cast<double>(total);
    }
    if (unique_mode && guess->second == *mode) mode_credit += 1.0;
  }
  if (scores.items) scores.best = 100.0 * best_credit / static_cast<double>(scores.items);
  if (scores.mode_items) {
    scores.best_mode = 100.0 * mode_credit / static_cast<double>(scores.mode_items);
  }
  return scores;
}

// ---------------------------------------------------------------------------
// Lexical translation features

std::vector<FeatureQuery> read_feature_queries(std::istream& in) {
  std::vector<FeatureQuery> queries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split(line, '\t');
    FeatureQuery q;
    if (fields.size() != 3 || !parse_int(trim(fields[1]), q.position)) {
      throw ParseError(line_error("feature queries: expected 'sentence<TAB>position<TAB>target' on",
                                  line_no));
    }
    q.sentence = tokenize(fields[0]);
    q.target_word = std::string(trim(fields[2]));
    if (q.position >= q.sentence.size() || q.target_word.empty()) {
      throw ParseError(line_error("feature queries: position or target word invalid on", line_no));
    }
    queries.push_back(std::move(q));
  }
  return queries;
}

std::vector<FeatureRecord> export_translation_features(const Network& net,
                                                       const Vocabulary& source_vocab,
                                                       const Vocabulary& target_vocab,
                                                       const std::vector<FeatureQuery>& queries) {
  WIC_CHECK(net.head.num_labels() == target_vocab.size(),
            "head has " << net.head.num_labels() << " rows, target vocabulary "
                        << target_vocab.size());
  std::vector<FeatureRecord> records;
  records.reserve(queries.size());
  for (const auto& q : queries) {
    WIC_CHECK(q.position < q.sentence.size(), "feature query position out of range");
    const auto ids = sentence_to_ids(q.sentence, source_vocab);
    const Vector h = encode(net, ids)[q.position];
    const WordId target = target_vocab.id(q.target_word);
    FeatureRecord r;
    r.source_word = q.sentence[q.position];
    r.target_word = q.target_word;
    r.target_oov = target == kUnkId;
    r.log_p = log_softmax_at(head_logits(net.head, h), static_cast<std::size_t>(target));
    r.p = std::exp(r.log_p);
    records.push_back(std::move(r));
  }
  return records;
}

void write_feature_records(std::ostream& out, const std::vector<FeatureRecord>& records) {
  const auto flags = out.flags();
  const auto precision = out.precision();
  out << std::setprecision(12);
  out.unsetf(std::ios::floatfield);
  for (const auto& r : records) {
    out << r.source_word << '\t' << r.target_word << '\t' << r.p << '\t' << r.log_p << '\n';
  }
  out.flags(flags);
  out.precision(precision);
}

}  // namespace wic
