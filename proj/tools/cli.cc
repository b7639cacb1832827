#include "cli.h"

#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "wic/baselines.h"
#include "wic/checkpoint.h"
#include "wic/corpus.h"
#include "wic/error.h"
#include "wic/gradcheck.h"
#include "wic/synthetic.h"
#include "wic/tasks.h"
#include "wic/train.h"

namespace wic::cli {

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path + " for reading");
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  return out;
}

// Training flags shared by pretrain and finetune-supersense.
struct TrainFlags {
  TrainConfig config;
  std::string peephole = "full";

  void add_to(CLI::App* sub) {
    sub->add_option("--batch-size", config.batch_size, "Instances per update")
        ->check(CLI::PositiveNumber);
    sub->add_option("--eval-every", config.eval_every,
                    "Updates between dev evaluations (0: once per epoch)");
    sub->add_option("--patience", config.patience,
                    "Evaluations without improvement before stopping");
    sub->add_option("--epochs", config.max_epochs, "Maximum passes over the training set");
    sub->add_option("--embedding-size", config.embedding_size, "Word embedding size")
        ->check(CLI::PositiveNumber);
    sub->add_option("--hidden-size", config.hidden_size, "Hidden units per direction")
        ->check(CLI::PositiveNumber);
    sub->add_option("--embedding-init", config.embedding_init,
                    "Embeddings start uniform in +-this");
    sub->add_option("--peephole", peephole, "Peephole weights")
        ->check(CLI::IsMember({"full", "diagonal"}));
    sub->add_option("--learning-rate", config.adam.learning_rate, "Adam step size");
    sub->add_option("--beta1", config.adam.beta1, "Adam first-moment decay");
    sub->add_option("--beta2", config.adam.beta2, "Adam second-moment decay");
    sub->add_option("--adam-epsilon", config.adam.epsilon, "Adam denominator epsilon");
    sub->add_option("--target-ppl", config.target_perplexity,
                    "Stop once dev perplexity reaches this (0: off)");
  }

  TrainConfig resolve(std::uint64_t seed, std::size_t threads) const {
    TrainConfig c = config;
    c.seed = seed;
    c.threads = threads;
    c.peephole = peephole == "diagonal" ? PeepholeMode::kDiagonal : PeepholeMode::kFull;
    validate(c);
    return c;
  }
};

std::vector<AlignmentSet> symmetrized(const std::string& forward_path,
                                      const std::string& backward_path) {
  const auto forward = load_alignments(forward_path);
  const auto backward = load_alignments(backward_path);
  if (forward.size() != backward.size()) {
    throw DataError("alignment files have " + std::to_string(forward.size()) + " and " +
                    std::to_string(backward.size()) + " lines");
  }
  std::vector<AlignmentSet> links;
  links.reserve(forward.size());
  for (std::size_t k = 0; k < forward.size(); ++k) {
    links.push_back(intersect_alignments(forward[k], backward[k]));
  }
  return links;
}

void print_train_summary(std::ostream& out, const TrainResult& result, bool has_dev) {
  out << "updates\t" << result.updates << '\n';
  if (has_dev && !result.history.empty()) {
    const auto& best = result.history[result.best_evaluation];
    out << "best_dev_perplexity\t" << best.dev_perplexity << '\n';
    out << "best_update\t" << best.update << '\n';
  }
  out << "early_stopped\t" << (result.early_stopped ? "yes" : "no") << '\n';
}

// Expands `--config FILE` into flags placed before the command-line ones,
// so that with last-value-wins options the command line takes precedence.
std::vector<std::string> expand_config(const std::vector<std::string>& args,
                                       const CLI::App& sub) {
  std::string path;
  for (std::size_t k = 1; k < args.size(); ++k) {
    if (args[k] == "--config" && k + 1 < args.size()) {
      path = args[k + 1];
    } else if (args[k].rfind("--config=", 0) == 0) {
      path = args[k].substr(9);
    }
  }
  if (path.empty()) return args;

  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file " + path);
  std::vector<std::string> expanded{args.front()};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto eq = line.find('=');
    auto strip = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    if (eq == std::string::npos) {
      throw UsageError(path + " line " + std::to_string(line_no) + ": expected key=value");
    }
    const std::string key = strip(line.substr(0, eq));
    const std::string value = strip(line.substr(eq + 1));
    const CLI::Option* opt = sub.get_option_no_throw("--" + key);
    if (key == "config" || opt == nullptr) {
      throw UsageError(path + " line " + std::to_string(line_no) + ": unknown key '" + key +
                       "' for " + sub.get_name());
    }
    expanded.push_back("--" + key);
    expanded.push_back(value);
  }
  expanded.insert(expanded.end(), args.begin() + 1, args.end());
  return expanded;
}

struct Command {
  CLI::App* app = nullptr;
  std::function<int()> body;
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Word-in-context vectors from lexical translation", "wic"};
  app.option_defaults()->always_capture_default()->multi_option_policy(
      CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);

  std::uint64_t seed = 1;
  std::size_t threads = 1;
  std::string config_path;
  std::map<std::string, Command> commands;

  auto add = [&](const std::string& name, const std::string& help) -> CLI::App* {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--seed", seed, "Seed for every random choice");
    sub->add_option("--threads", threads, "Worker threads (1: fully sequential)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--config", config_path, "key=value file; flags win on conflict");
    commands[name].app = sub;
    return sub;
  };

  // synth ------------------------------------------------------------------
  struct {
    std::string kind = "homograph";
    std::string out;
    std::size_t sentences = 2000;
  } synth;
  {
    CLI::App* sub = add("synth", "Write a synthetic corpus with known answers");
    sub->add_option("--kind", synth.kind, "homograph, mapping or supersense")
        ->check(CLI::IsMember({"homograph", "mapping", "supersense"}));
    sub->add_option("--out", synth.out, "Output directory")->required();
    sub->add_option("--sentences", synth.sentences, "Number of sentences");
    commands["synth"].body = [&] {
      if (synth.kind == "supersense") {
        std::filesystem::create_directories(synth.out);
        auto f = open_out(synth.out + "/supersense.txt");
        write_supersense(f, make_homograph_supersense(synth.sentences, seed));
      } else {
        HomographOptions options;
        options.sentences = synth.sentences;
        options.seed = seed;
        const auto corpus = synth.kind == "homograph"
                                ? make_homograph_corpus(options)
                                : make_mapping_corpus(synth.sentences, 30, seed);
        save_parallel_files(synth.out, corpus);
      }
      out << "wrote " << synth.sentences << " sentences to " << synth.out << '\n';
      return 0;
    };
  }

  // vocab ------------------------------------------------------------------
  struct {
    std::string corpus;
    std::string out;
    VocabOptions options;
  } vocab;
  {
    CLI::App* sub = add("vocab", "Build a vocabulary from a tokenized corpus");
    sub->add_option("--corpus", vocab.corpus, "One tokenized sentence per line")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--out", vocab.out, "Vocabulary file to write")->required();
    sub->add_option("--cap", vocab.options.cap, "Maximum number of kept types");
    sub->add_option("--drop-top", vocab.options.drop_top_k, "Drop this many most frequent types");
    sub->add_option("--min-count", vocab.options.min_count,
                    "Types seen fewer times map to <unk>");
    commands["vocab"].body = [&] {
      auto in = open_in(vocab.corpus);
      TokenCounts counts;
      std::string line;
      while (std::getline(in, line)) count_tokens(tokenize(line), counts);
      const Vocabulary v = build_vocabulary(counts, vocab.options);
      save_vocabulary(vocab.out, v);
      out << "types\t" << v.size() << '\n';
      return 0;
    };
  }

  // extract ----------------------------------------------------------------
  struct {
    std::string source, target, forward, backward, source_vocab, target_vocab, out, dev_out;
    std::size_t dev_sentences = 0;
    std::size_t min_len = kDefaultMinSourceLength;
  } extract;
  {
    CLI::App* sub = add("extract", "Turn a word-aligned corpus into translation instances");
    sub->add_option("--source", extract.source, "Source sentences")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--target", extract.target, "Target sentences")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--forward", extract.forward, "Source-to-target alignments (i-j)")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--backward", extract.backward, "Target-to-source alignments (i-j)")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--source-vocab", extract.source_vocab)->required()->check(CLI::ExistingFile);
    sub->add_option("--target-vocab", extract.target_vocab)->required()->check(CLI::ExistingFile);
    sub->add_option("--out", extract.out, "Training instances")->required();
    sub->add_option("--dev-out", extract.dev_out, "Dev instances from the last sentences");
    sub->add_option("--dev-sentences", extract.dev_sentences,
                    "Sentence pairs held out for --dev-out");
    sub->add_option("--min-len", extract.min_len, "Skip sources with at most this many tokens");
    commands["extract"].body = [&] {
      if (extract.dev_sentences > 0 && extract.dev_out.empty()) {
        throw UsageError("--dev-sentences needs --dev-out");
      }
      const auto corpus = load_parallel_corpus(extract.source, extract.target);
      const auto forward = load_alignments(extract.forward);
      const auto backward = load_alignments(extract.backward);
      const auto sv = load_vocabulary(extract.source_vocab);
      const auto tv = load_vocabulary(extract.target_vocab);
      const std::size_t held = std::min(extract.dev_sentences, corpus.size());
      const std::vector<ParallelSentencePair> train_pairs(corpus.begin(), corpus.end() - held);
      const std::vector<ParallelSentencePair> dev_pairs(corpus.end() - held, corpus.end());
      const auto train_set =
          extract_corpus_instances(train_pairs, forward, backward, sv, tv, extract.min_len);
      save_instances(extract.out, train_set);
      out << "train_instances\t" << train_set.size() << '\n';
      if (!extract.dev_out.empty()) {
        const auto dev_set =
            extract_corpus_instances(dev_pairs, forward, backward, sv, tv, extract.min_len);
        save_instances(extract.dev_out, dev_set);
        out << "dev_instances\t" << dev_set.size() << '\n';
      }
      return 0;
    };
  }

  // pretrain ---------------------------------------------------------------
  struct {
    std::string train, dev, source_vocab, target_vocab, out;
    std::string encoder = "bilstm";
    TrainFlags flags;
  } pre;
  {
    CLI::App* sub = add("pretrain", "Train a lexical translation model");
    sub->add_option("--train", pre.train, "Training instances")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--dev", pre.dev, "Dev instances for early stopping")
        ->check(CLI::ExistingFile);
    sub->add_option("--source-vocab", pre.source_vocab)->required()->check(CLI::ExistingFile);
    sub->add_option("--target-vocab", pre.target_vocab)->required()->check(CLI::ExistingFile);
    sub->add_option("--out", pre.out, "Checkpoint to write")->required();
    sub->add_option("--encoder", pre.encoder, "bilstm, lstm or mlp")
        ->check(CLI::IsMember({"bilstm", "lstm", "mlp"}));
    pre.flags.add_to(sub);
    commands["pretrain"].body = [&] {
      const TrainConfig config = pre.flags.resolve(seed, threads);
      const auto sv = load_vocabulary(pre.source_vocab);
      const auto tv = load_vocabulary(pre.target_vocab);
      const auto train_set = load_instances(pre.train);
      const auto dev_set =
          pre.dev.empty() ? std::vector<TranslationInstance>{} : load_instances(pre.dev);
      Network net = init_network(config, parse_encoder_kind(pre.encoder), sv.size(), tv.size());
      out << "update\ttrain_loss\tdev_ppl\n";
      const TrainResult result = train(std::move(net), train_set, dev_set, config, &out);
      save_checkpoint(pre.out, {config, sv, tv, result.best});
      print_train_summary(out, result, !dev_set.empty());
      return 0;
    };
  }

  // finetune-supersense -----------------------------------------------------
  struct {
    std::string train, dev, checkpoint, source_vocab, out;
    std::string encoder = "bilstm";
    std::size_t window = kDefaultWindow;
    TrainFlags flags;
  } fine;
  {
    CLI::App* sub = add("finetune-supersense", "Train a supersense tagger");
    sub->add_option("--train", fine.train, "Tagged training sentences")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--dev", fine.dev, "Tagged dev sentences")->check(CLI::ExistingFile);
    sub->add_option("--checkpoint", fine.checkpoint,
                    "Pretrained encoder (omit to start from random weights)")
        ->check(CLI::ExistingFile);
    sub->add_option("--source-vocab", fine.source_vocab,
                    "Word vocabulary without --checkpoint (default: built from --train)")
        ->check(CLI::ExistingFile);
    sub->add_option("--encoder", fine.encoder, "Encoder without --checkpoint")
        ->check(CLI::IsMember({"bilstm", "lstm", "mlp"}));
    sub->add_option("--window", fine.window, "Context window in words")
        ->check(CLI::PositiveNumber);
    sub->add_option("--out", fine.out, "Checkpoint to write")->required();
    fine.flags.add_to(sub);
    commands["finetune-supersense"].body = [&] {
      TrainConfig config = fine.flags.resolve(seed, threads);
      const auto train_data = load_supersense(fine.train);
      const auto dev_data = fine.dev.empty() ? SupersenseDataset{} : load_supersense(fine.dev);
      const Vocabulary labels = supersense_label_vocabulary(train_data);
      Vocabulary sv;
      Network net;
      if (!fine.checkpoint.empty()) {
        Checkpoint pretrained = load_checkpoint(fine.checkpoint);
        sv = std::move(pretrained.source_vocab);
        net = transfer_encoder(pretrained.network, labels.size(), seed);
      } else {
        if (!fine.source_vocab.empty()) {
          sv = load_vocabulary(fine.source_vocab);
        } else {
          TokenCounts counts;
          for (const auto& s : train_data.sentences) {
            for (const auto& tok : s) ++counts[tok.token];
          }
          sv = build_vocabulary(counts, VocabOptions{});
        }
        net = init_network(config, parse_encoder_kind(fine.encoder), sv.size(), labels.size());
      }
      const auto train_set = supersense_instances(train_data, sv, labels, fine.window);
      const auto dev_set = supersense_instances(dev_data, sv, labels, fine.window);
      out << "update\ttrain_loss\tdev_ppl\n";
      const TrainResult result = train(std::move(net), train_set, dev_set, config, &out);
      save_checkpoint(fine.out, {config, sv, labels, result.best});
      print_train_summary(out, result, !dev_set.empty());
      return 0;
    };
  }

  // eval-supersense -----------------------------------------------------------
  struct {
    std::string checkpoint, data;
    std::size_t window = kDefaultWindow;
  } evals;
  {
    CLI::App* sub = add("eval-supersense", "Score a supersense tagger");
    sub->add_option("--checkpoint", evals.checkpoint)->required()->check(CLI::ExistingFile);
    sub->add_option("--data", evals.data, "Tagged sentences")->required()->check(CLI::ExistingFile);
    sub->add_option("--window", evals.window, "Context window in words")
        ->check(CLI::PositiveNumber);
    commands["eval-supersense"].body = [&] {
      const Checkpoint ckpt = load_checkpoint(evals.checkpoint);
      const auto data = load_supersense(evals.data);
      const auto s = evaluate_supersense(ckpt.network, ckpt.source_vocab, ckpt.target_vocab,
                                         data, evals.window, threads);
      out << "precision\t" << s.precision << "\nrecall\t" << s.recall << "\nf1\t" << s.f1
          << "\naccuracy\t" << s.accuracy << '\n';
      return 0;
    };
  }

  // candidates ---------------------------------------------------------------
  struct {
    std::string source, target, forward, backward, out;
    double threshold = 0.9;
  } cand;
  {
    CLI::App* sub = add("candidates", "Build substitute candidates from aligned translations");
    sub->add_option("--source", cand.source)->required()->check(CLI::ExistingFile);
    sub->add_option("--target", cand.target)->required()->check(CLI::ExistingFile);
    sub->add_option("--forward", cand.forward)->required()->check(CLI::ExistingFile);
    sub->add_option("--backward", cand.backward)->required()->check(CLI::ExistingFile);
    sub->add_option("--out", cand.out, "Candidate table to write")->required();
    sub->add_option("--threshold", cand.threshold, "Cumulative count mass to keep")
        ->check(CLI::Range(0.0, 1.0));
    commands["candidates"].body = [&] {
      const auto corpus = load_parallel_corpus(cand.source, cand.target);
      const auto links = symmetrized(cand.forward, cand.backward);
      const auto table = build_candidate_table(count_aligned_pairs(corpus, links), cand.threshold);
      auto f = open_out(cand.out);
      write_candidate_table(f, table);
      out << "words\t" << table.size() << '\n';
      return 0;
    };
  }

  // lexsub ---------------------------------------------------------------------
  struct {
    std::string checkpoint, items, candidates, gold, out, type_vectors;
  } lex;
  {
    CLI::App* sub = add("lexsub", "Predict (and score) lexical substitutes");
    sub->add_option("--checkpoint", lex.checkpoint, "Model scoring substitutes in context")
        ->check(CLI::ExistingFile);
    sub->add_option("--type-vectors", lex.type_vectors,
                    "Rank by context-free word vectors instead (word2vec text format)")
        ->check(CLI::ExistingFile);
    sub->add_option("--items", lex.items, "Items: id, lemma.pos, position, sentence")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--candidates", lex.candidates, "Candidate table")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--gold", lex.gold, "Gold substitutes to score against")
        ->check(CLI::ExistingFile);
    sub->add_option("--out", lex.out, "Predictions to write (id, substitute)");
    commands["lexsub"].body = [&] {
      if (lex.checkpoint.empty() == lex.type_vectors.empty()) {
        throw UsageError("lexsub needs exactly one of --checkpoint and --type-vectors");
      }
      auto items_in = open_in(lex.items);
      const auto items = read_lexsub_items(items_in);
      auto table_in = open_in(lex.candidates);
      const auto table = read_candidate_table(table_in);
      std::unique_ptr<Checkpoint> ckpt;
      TypeVectorTable vectors;
      if (!lex.checkpoint.empty()) {
        ckpt = std::make_unique<Checkpoint>(load_checkpoint(lex.checkpoint));
      } else {
        vectors = load_type_vectors(lex.type_vectors);
      }
      std::map<std::string, std::string> predictions;
      std::size_t skipped = 0;
      for (const auto& item : items) {
        const auto* candidates = lookup_candidates(table, item);
        if (candidates == nullptr || candidates->empty()) {
          ++skipped;
          continue;
        }
        if (ckpt) {
          predictions[item.id] =
              lexsub_predict(ckpt->network, ckpt->source_vocab, item, *candidates);
        } else {
          try {
            predictions[item.id] =
                type_vector_predict(vectors, item.sentence[item.position], *candidates);
          } catch (const LookupError&) {
            ++skipped;
          }
        }
      }
      if (skipped) err << "lexsub: no prediction for " << skipped << " item(s)\n";
      if (!lex.out.empty()) {
        auto f = open_out(lex.out);
        for (const auto& [id, word] : predictions) f << id << '\t' << word << '\n';
      }
      if (!lex.gold.empty()) {
        auto gold_in = open_in(lex.gold);
        const auto s = lexsub_score(predictions, read_lexsub_gold(gold_in));
        out << "best\t" << s.best << "\nbest_mode\t" << s.best_mode << "\nitems\t" << s.items
            << "\nmode_items\t" << s.mode_items << '\n';
      } else if (lex.out.empty()) {
        for (const auto& [id, word] : predictions) out << id << '\t' << word << '\n';
      }
      return 0;
    };
  }

  // ppl --------------------------------------------------------------------------
  struct {
    std::string checkpoint, data;
  } ppl;
  {
    CLI::App* sub = add("ppl", "Perplexity of a model on translation instances");
    sub->add_option("--checkpoint", ppl.checkpoint)->required()->check(CLI::ExistingFile);
    sub->add_option("--data", ppl.data, "Instances")->required()->check(CLI::ExistingFile);
    commands["ppl"].body = [&] {
      const Checkpoint ckpt = load_checkpoint(ppl.checkpoint);
      const auto data = load_instances(ppl.data);
      out << std::setprecision(10) << perplexity(ckpt.network, data, threads) << '\n';
      return 0;
    };
  }

  // export-features ------------------------------------------------------------------
  struct {
    std::string checkpoint, queries, out;
  } feat;
  {
    CLI::App* sub = add("export-features", "Contextual translation probabilities as features");
    sub->add_option("--checkpoint", feat.checkpoint)->required()->check(CLI::ExistingFile);
    sub->add_option("--queries", feat.queries, "sentence, position, target word")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--out", feat.out, "TSV to write (default: standard output)");
    commands["export-features"].body = [&] {
      const Checkpoint ckpt = load_checkpoint(feat.checkpoint);
      auto in = open_in(feat.queries);
      const auto records = export_translation_features(ckpt.network, ckpt.source_vocab,
                                                       ckpt.target_vocab, read_feature_queries(in));
      if (feat.out.empty()) {
        write_feature_records(out, records);
      } else {
        auto f = open_out(feat.out);
        write_feature_records(f, records);
      }
      std::size_t oov = 0;
      for (const auto& r : records) oov += r.target_oov ? 1 : 0;
      if (oov) err << "export-features: " << oov << " target word(s) scored as <unk>\n";
      return 0;
    };
  }

  // gradcheck ---------------------------------------------------------------------------
  struct {
    std::size_t seeds = 1;
    std::string encoder = "bilstm";
    std::string peephole = "full";
    double tolerance = 1e-4;
  } grad;
  {
    CLI::App* sub = add("gradcheck", "Compare analytic and finite-difference gradients");
    sub->add_option("--seeds", grad.seeds, "Check this many consecutive seeds from --seed")
        ->check(CLI::PositiveNumber);
    sub->add_option("--encoder", grad.encoder, "bilstm, lstm or mlp")
        ->check(CLI::IsMember({"bilstm", "lstm", "mlp"}));
    sub->add_option("--peephole", grad.peephole, "full or diagonal")
        ->check(CLI::IsMember({"full", "diagonal"}));
    sub->add_option("--tolerance", grad.tolerance, "Largest acceptable relative error");
    commands["gradcheck"].body = [&] {
      GradCheckOptions options;
      options.kind = parse_encoder_kind(grad.encoder);
      options.peephole =
          grad.peephole == "diagonal" ? PeepholeMode::kDiagonal : PeepholeMode::kFull;
      GradCheckReport worst;
      for (std::size_t k = 0; k < grad.seeds; ++k) {
        const auto r = gradient_check(seed + k, options);
        if (k == 0 || r.max_relative_error > worst.max_relative_error) worst = r;
      }
      const bool pass = worst.max_relative_error < grad.tolerance;
      out << "max_relative_error\t" << std::setprecision(6) << worst.max_relative_error << '\t'
          << worst.worst_tensor << '[' << worst.worst_coordinate << "]\n"
          << (pass ? "PASS" : "FAIL") << '\n';
      return pass ? 0 : 1;
    };
  }

  std::vector<std::string> argv = args;
  if (!argv.empty() && argv.front().rfind("-", 0) != 0 && !commands.count(argv.front())) {
    err << "wic: unknown subcommand '" << argv.front() << "'\n" << app.help();
    return 2;
  }
  try {
    if (!argv.empty() && commands.count(argv.front())) {
      argv = expand_config(argv, *commands.at(argv.front()).app);
    }
    std::vector<std::string> reversed(argv.rbegin(), argv.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  } catch (const UsageError& e) {
    err << "wic: " << e.what() << '\n';
    return 2;
  }

  for (auto& [name, command] : commands) {
    if (!command.app->parsed()) continue;
    err << "# wic " << name << '\n' << command.app->config_to_str(true, false);
    try {
      return command.body();
    } catch (const UsageError& e) {
      err << "wic " << name << ": " << e.what() << '\n';
      return 2;
    } catch (const std::exception& e) {
      err << "wic " << name << ": error: " << e.what() << '\n';
      return 1;
    }
  }
  return 2;
}

}  // namespace wic::cli
