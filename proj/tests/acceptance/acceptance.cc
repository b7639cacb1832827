// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "wic/checkpoint.h"
#include "wic/corpus.h"
#include "wic/error.h"
#include "wic/gradcheck.h"
#include "wic/synthetic.h"
#include "wic/tasks.h"
#include "wic/train.h"

namespace {

using namespace wic;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

// Shared between criteria: the homograph model doubles as the pretrained
// encoder for transfer and as the checkpoint under test.
struct HomographRun {
  SyntheticCorpus corpus;
  Vocabulary source_vocab;
  Vocabulary target_vocab;
  std::vector<TranslationInstance> train_set;
  std::vector<TranslationInstance> dev_set;
  TrainConfig config;
  TrainResult result;
};

constexpr std::size_t kHomographSentences = 2000;
constexpr std::size_t kHeldOut = 200;

TrainConfig small_config(std::uint64_t seed) {
  TrainConfig c;
  c.embedding_size = 32;
  c.hidden_size = 32;
  c.batch_size = 32;
  c.seed = seed;
  return c;
}

HomographRun train_homograph() {
  HomographRun run;
  run.corpus = make_homograph_corpus({.sentences = kHomographSentences, .seed = 7});
  TokenCounts src, tgt;
  for (const auto& p : run.corpus.pairs) {
    count_tokens(p.source, src);
    count_tokens(p.target, tgt);
  }
  run.source_vocab = build_vocabulary(src, 30000, 0);
  run.target_vocab = build_vocabulary(tgt, 30000, 10);
  const auto& pairs = run.corpus.pairs;
  const std::vector<ParallelSentencePair> train_pairs(pairs.begin(), pairs.end() - kHeldOut);
  const std::vector<ParallelSentencePair> dev_pairs(pairs.end() - kHeldOut, pairs.end());
  run.train_set = extract_corpus_instances(train_pairs, run.corpus.forward, run.corpus.backward,
                                           run.source_vocab, run.target_vocab,
                                           kDefaultMinSourceLength);
  run.dev_set = extract_corpus_instances(dev_pairs, run.corpus.forward, run.corpus.backward,
                                         run.source_vocab, run.target_vocab,
                                         kDefaultMinSourceLength);
  run.config = small_config(1);
  run.config.max_epochs = 6;
  const Network net = init_network(run.config, EncoderKind::kBiLstm, run.source_vocab.size(),
                                   run.target_vocab.size());
  run.result = train(net, run.train_set, run.dev_set, run.config);
  return run;
}

Outcome criterion_gradcheck() {
  const auto start = Clock::now();
  double worst = 0.0;
  std::string where;
  for (auto kind : {EncoderKind::kBiLstm, EncoderKind::kForwardLstm, EncoderKind::kMlp}) {
    GradCheckOptions options;
    options.kind = kind;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const auto r = gradient_check(seed, options);
      if (r.max_relative_error > worst) {
        worst = r.max_relative_error;
        where = std::string(encoder_kind_name(kind)) + " " + r.worst_tensor;
      }
    }
  }
  const double elapsed = seconds_since(start);
  std::ostringstream d;
  d << "gradient check, 20 seeds x 3 encoders: max relative error " << worst << " (" << where
    << "), " << elapsed << " s";
  return {worst < 1e-4 && elapsed < 120.0, d.str()};
}

Outcome criterion_homograph(const HomographRun& run, double train_seconds) {
  const Network& net = run.result.best;
  std::size_t sites = 0, correct = 0;
  std::vector<TranslationInstance> ambiguous;
  for (const auto& site : run.corpus.sites) {
    if (site.pair < kHomographSentences - kHeldOut) continue;
    const auto ids = sentence_to_ids(run.corpus.pairs[site.pair].source, run.source_vocab);
    const WordId expected = run.target_vocab.id(site.expected);
    const TranslationInstance instance{ids, site.position, expected};
    const auto predicted = predict_labels(net, std::span(&instance, 1));
    ++sites;
    correct += predicted[0] == expected;
    ambiguous.push_back(instance);
  }
  const double acc = sites ? static_cast<double>(correct) / static_cast<double>(sites) : 0.0;
  const double ppl = perplexity(net, ambiguous);
  std::ostringstream d;
  d << "homograph: " << correct << "/" << sites << " held-out sites correct, ambiguous dev ppl "
    << ppl << ", " << train_seconds << " s";
  return {sites >= 100 && acc >= 0.99 && ppl < 1.5 && train_seconds < 600.0, d.str()};
}

Outcome criterion_mapping() {
  const auto corpus = make_mapping_corpus(50, 30, 5);
  TokenCounts src, tgt;
  for (const auto& p : corpus.pairs) {
    count_tokens(p.source, src);
    count_tokens(p.target, tgt);
  }
  const Vocabulary sv = build_vocabulary(src, 30000, 0);
  const Vocabulary tv = build_vocabulary(tgt, 30000, 0);
  const auto instances = extract_corpus_instances(corpus.pairs, corpus.forward, corpus.backward,
                                                  sv, tv, kDefaultMinSourceLength);
  TrainConfig config = small_config(2);
  config.embedding_size = 16;
  config.hidden_size = 16;
  config.max_epochs = 500;
  config.patience = 500;
  config.target_perplexity = 1.1;
  const Network net = init_network(config, EncoderKind::kBiLstm, sv.size(), tv.size());
  // Training data doubles as the evaluation set: this checks memorization.
  const auto result = train(net, instances, instances, config);
  const double ppl = perplexity(result.best, instances);
  const std::size_t epochs = result.history.empty() ? 0 : result.history.back().epoch + 1;
  std::ostringstream d;
  d << "mapping corpus (50 sentences): training ppl " << ppl << " after " << epochs << " epochs";
  return {ppl < 1.1 && epochs <= 500, d.str()};
}

// First epoch (1-based) whose non-O dev accuracy reaches 95%; max+1 if none.
std::size_t epochs_to_target(const TrainResult& result, std::size_t max_epochs) {
  for (const auto& r : result.history) {
    if (r.dev_accuracy >= 0.95) return r.epoch + 1;
  }
  return max_epochs + 1;
}

Outcome criterion_transfer(const HomographRun& pre) {
  constexpr std::size_t kMaxEpochs = 12;
  const auto train_data = make_homograph_supersense(300, 11);
  const auto dev_data = make_homograph_supersense(100, 12);
  const Vocabulary labels = supersense_label_vocabulary(train_data);
  const auto& sv = pre.source_vocab;
  const auto train_set = supersense_instances(train_data, sv, labels, kDefaultWindow);
  const auto dev_set = supersense_instances(dev_data, sv, labels, kDefaultWindow, true);
  std::size_t wins = 0;
  std::ostringstream d;
  d << "transfer: epochs to 95% non-O dev accuracy (pretrained/random):";
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    TrainConfig config = small_config(seed);
    config.max_epochs = kMaxEpochs;
    config.patience = kMaxEpochs;
    const Network warm = transfer_encoder(pre.result.best, labels.size(), seed);
    const Network cold = init_network(config, EncoderKind::kBiLstm, sv.size(), labels.size());
    const auto a = epochs_to_target(train(warm, train_set, dev_set, config), kMaxEpochs);
    const auto b = epochs_to_target(train(cold, train_set, dev_set, config), kMaxEpochs);
    wins += a <= b && a <= kMaxEpochs;
    d << ' ' << a << '/' << b;
  }
  return {wins >= 3, d.str()};
}

// Independent reimplementations compared against the library.
Outcome criterion_oracles() {
  SeededRng rng(2024);
  std::size_t failures = 0, checks = 0;
  auto check = [&](bool ok) { ++checks; failures += !ok; };

  // Vocabulary: rank by (-count, word), drop, cap.
  for (int trial = 0; trial < 200; ++trial) {
    TokenCounts counts;
    for (std::size_t k = rng.index(40); k > 0; --k) {
      counts["w" + std::to_string(rng.index(60))] += 1 + static_cast<std::int64_t>(rng.index(9));
    }
    const std::size_t cap = 1 + rng.index(30), drop = rng.index(5);
    std::vector<std::pair<std::int64_t, std::string>> ranked;
    for (const auto& [w, c] : counts) ranked.push_back({-c, w});
    std::sort(ranked.begin(), ranked.end());
    std::vector<std::string> want = {"<unk>"};
    for (std::size_t k = drop; k < ranked.size() && want.size() <= cap; ++k) {
      want.push_back(ranked[k].second);
    }
    const Vocabulary v = build_vocabulary(counts, cap, drop);
    bool same = v.size() == want.size();
    for (std::size_t k = 1; same && k < want.size(); ++k) {
      same = v.word(static_cast<WordId>(k)) == want[k];
    }
    check(same);
  }

  // Symmetrization: pairwise membership test.
  for (int trial = 0; trial < 500; ++trial) {
    AlignmentSet f, b;
    for (std::size_t k = rng.index(15); k > 0; --k) f.insert({rng.index(5), rng.index(5)});
    for (std::size_t k = rng.index(15); k > 0; --k) b.insert({rng.index(5), rng.index(5)});
    AlignmentSet want;
    for (const auto& l : f) {
      for (const auto& m : b) {
        if (l.source == m.source && l.target == m.target) want.insert(l);
      }
    }
    check(intersect_alignments(f, b) == want);
  }

  // Perplexity: exp of mean NLL from explicit softmax sums.
  TrainConfig config = small_config(3);
  config.embedding_size = 6;
  config.hidden_size = 5;
  const Network net = init_network(config, EncoderKind::kBiLstm, 20, 9);
  std::vector<TranslationInstance> batch;
  for (int k = 0; k < 40; ++k) {
    std::vector<WordId> ids(1 + rng.index(8));
    for (auto& id : ids) id = static_cast<WordId>(rng.index(20));
    batch.push_back({ids, rng.index(ids.size()), static_cast<WordId>(rng.index(9))});
  }
  double nll = 0.0;
  for (const auto& inst : batch) {
    const Vector h = encode(net, inst.source_ids)[inst.position];
    const auto& head = net.head;
    std::vector<double> logits(head.num_labels());
    for (std::size_t r = 0; r < logits.size(); ++r) {
      double s = head.bias[r];
      for (std::size_t c = 0; c < h.size(); ++c) s += head.projection(r, c) * h[c];
      logits[r] = s;
    }
    const double mx = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (double l : logits) z += std::exp(l - mx);
    nll -= logits[static_cast<std::size_t>(inst.target_id)] - mx - std::log(z);
  }
  const double want_ppl = std::exp(nll / static_cast<double>(batch.size()));
  check(std::abs(perplexity(net, batch) - want_ppl) <= 1e-9 * want_ppl);

  // Adam: textbook bias-corrected recurrence.
  {
    const AdamHyperparams hyper;
    Vector params(7), m(7, 0.0), v(7, 0.0);
    for (double& p : params) p = rng.uniform(-1, 1);
    Vector ref = params, rm(7, 0.0), rv(7, 0.0);
    bool ok = true;
    for (std::uint64_t t = 1; t <= 50; ++t) {
      Vector g(7);
      for (std::size_t k = 0; k < 7; ++k) g[k] = 2.0 * ref[k] + rng.uniform(-0.1, 0.1);
      adam_update(params, g, m, v, t, hyper);
      for (std::size_t k = 0; k < 7; ++k) {
        rm[k] = hyper.beta1 * rm[k] + (1 - hyper.beta1) * g[k];
        rv[k] = hyper.beta2 * rv[k] + (1 - hyper.beta2) * g[k] * g[k];
        const double mh = rm[k] / (1 - std::pow(hyper.beta1, static_cast<double>(t)));
        const double vh = rv[k] / (1 - std::pow(hyper.beta2, static_cast<double>(t)));
        ref[k] -= hyper.learning_rate * mh / (std::sqrt(vh) + hyper.epsilon);
        ok = ok && std::abs(ref[k] - params[k]) < 1e-12;
      }
    }
    check(ok);
  }

  // Lexical substitution: best and best-mode against direct counting.
  for (int trial = 0; trial < 300; ++trial) {
    LexsubGold gold;
    std::map<std::string, std::string> pred;
    const char* words[] = {"a", "b", "c"};
    for (std::size_t i = 0, n = 1 + rng.index(5); i < n; ++i) {
      const std::string id = "i" + std::to_string(i);
      for (std::size_t k = 1 + rng.index(3); k > 0; --k) gold[id][words[rng.index(3)]] += 1;
      if (rng.index(3)) pred[id] = words[rng.index(3)];
    }
    double best = 0.0, mode_hits = 0.0, mode_items = 0.0;
    for (const auto& [id, subs] : gold) {
      std::int64_t total = 0, top = 0, at_top = 0;
      std::string mode;
      for (const auto& [w, n] : subs) total += n, top = std::max(top, n);
      for (const auto& [w, n] : subs) {
        if (n == top) ++at_top, mode = w;
      }
      const auto guess = pred.find(id);
      if (guess != pred.end() && subs.count(guess->second)) {
        best += static_cast<double>(subs.at(guess->second)) / static_cast<double>(total);
      }
      if (at_top == 1) {
        mode_items += 1;
        mode_hits += guess != pred.end() && guess->second == mode;
      }
    }
    const auto s = lexsub_score(pred, gold);
    check(std::abs(s.best - 100.0 * best / static_cast<double>(gold.size())) < 1e-9);
    check(std::abs(s.best_mode - (mode_items > 0 ? 100.0 * mode_hits / mode_items : 0.0)) < 1e-9);
  }

  std::ostringstream d;
  d << "oracles (vocabulary, intersection, perplexity, Adam, best, best-mode): " << checks - failures
    << "/" << checks << " agree";
  return {failures == 0, d.str()};
}

Outcome criterion_invariants() {
  SeededRng rng(77);
  std::size_t cases = 0, violations = 0;
  for (; cases < 1000; ++cases) {
    TrainConfig config = small_config(cases + 1);
    config.embedding_size = 1 + rng.index(6);
    config.hidden_size = 1 + rng.index(6);
    config.embedding_init = rng.index(5) == 0 ? 20.0 : 0.5;
    config.peephole = rng.index(2) ? PeepholeMode::kFull : PeepholeMode::kDiagonal;
    const std::size_t vocab = 2 + rng.index(10), labels = 1 + rng.index(30);
    const Network net = init_network(config, EncoderKind::kBiLstm, vocab, labels);
    std::vector<WordId> ids(1 + rng.index(15));
    for (auto& id : ids) id = static_cast<WordId>(rng.index(vocab));
    for (const auto& h : encode(net, ids)) {
      if (h.size() != 2 * config.hidden_size) ++violations;
      for (double v : h) violations += !(v > -1.0 && v < 1.0);
      const Vector p = head_distribution(net.head, h);
      double sum = 0.0;
      for (double x : p) sum += x, violations += !(x >= 0.0);
      violations += std::abs(sum - 1.0) > 1e-12;
    }
  }
  std::ostringstream d;
  d << "invariants (context range, width, normalized head) over " << cases
    << " random cases: " << violations << " violations";
  return {violations == 0 && cases >= 1000, d.str()};
}

std::string checkpoint_bytes(const Checkpoint& c) {
  std::ostringstream out;
  write_checkpoint(out, c);
  return out.str();
}

Outcome criterion_determinism(const HomographRun& run) {
  const std::vector<TranslationInstance> subset(run.train_set.begin(),
                                                run.train_set.begin() + 1500);
  TrainConfig config = small_config(9);
  config.embedding_size = 12;
  config.hidden_size = 12;
  config.max_epochs = 2;
  auto once = [&] {
    const Network net = init_network(config, EncoderKind::kBiLstm, run.source_vocab.size(),
                                     run.target_vocab.size());
    const auto r = train(net, subset, run.dev_set, config);
    return checkpoint_bytes({config, run.source_vocab, run.target_vocab, r.best});
  };
  const bool same_bytes = once() == once();
  const Network& net = run.result.best;
  const double p1 = perplexity(net, run.dev_set, 1), p4 = perplexity(net, run.dev_set, 4);
  const double a1 = accuracy(net, run.dev_set, 1), a4 = accuracy(net, run.dev_set, 4);
  std::ostringstream d;
  d << "determinism: identical checkpoint bytes " << (same_bytes ? "yes" : "no")
    << ", dev ppl threads 1/4 " << p1 << "/" << p4 << ", accuracy " << a1 << "/" << a4;
  return {same_bytes && p1 == p4 && a1 == a4, d.str()};
}

Outcome criterion_checkpoint(const HomographRun& run) {
  const Checkpoint saved{run.config, run.source_vocab, run.target_vocab, run.result.best};
  const std::string bytes = checkpoint_bytes(saved);
  std::istringstream in(bytes);
  const Checkpoint loaded = read_checkpoint(in);
  const double before = perplexity(saved.network, run.dev_set);
  const double after = perplexity(loaded.network, run.dev_set);
  const double rel = std::abs(after - before) / before;

  // Flip one bit in a spread of positions covering header, metadata, tensors
  // and trailer.
  std::size_t tried = 0, detected = 0;
  const std::size_t stride = std::max<std::size_t>(1, bytes.size() / 4000);
  for (std::size_t pos = 0; pos < bytes.size(); pos += pos < 64 ? 1 : stride) {
    std::string bad = bytes;
    bad[pos] = static_cast<char>(bad[pos] ^ (1 << (pos % 8)));
    ++tried;
    std::istringstream bin(bad);
    try {
      read_checkpoint(bin);
    } catch (const FormatError&) {
      ++detected;
    } catch (const CorruptionError&) {
      ++detected;
    }
  }
  std::ostringstream d;
  d << "checkpoint round trip: dev ppl " << before << " -> " << after << " (rel " << rel
    << "), corrupted copies rejected " << detected << "/" << tried;
  return {rel <= 1e-5 && detected == tried, d.str()};
}

}  // namespace

int main() {
  std::map<int, Outcome> outcomes;
  auto record = [&](int n, const std::function<Outcome()>& f) {
    try {
      outcomes[n] = f();
    } catch (const std::exception& e) {
      outcomes[n] = {false, std::string("exception: ") + e.what()};
    }
    std::cout << (outcomes[n].pass ? "PASS" : "FAIL") << " criterion " << n << ": "
              << outcomes[n].detail << std::endl;
  };

  record(1, criterion_gradcheck);
  const auto start = Clock::now();
  const HomographRun run = train_homograph();
  const double homograph_seconds = seconds_since(start);
  record(2, [&] { return criterion_homograph(run, homograph_seconds); });
  record(3, criterion_mapping);
  record(4, [&] { return criterion_transfer(run); });
  record(5, criterion_oracles);
  record(6, criterion_invariants);
  record(7, [&] { return criterion_determinism(run); });
  record(8, [&] { return criterion_checkpoint(run); });

  const bool all = std::all_of(outcomes.begin(), outcomes.end(),
                               [](const auto& kv) { return kv.second.pass; });
  return all ? 0 : 1;
}
