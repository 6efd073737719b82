#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "sentcomp/checkpoint.hpp"
#include "sentcomp/corpus.hpp"
#include "sentcomp/embeddings.hpp"
#include "sentcomp/eval.hpp"
#include "sentcomp/model.hpp"
#include "sentcomp/parallel.hpp"
#include "sentcomp/train.hpp"

namespace fs = std::filesystem;

namespace sentcomp {

namespace {

class CliFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CliFailure("cannot read " + path);
  return in;
}

// Writes through a temporary sibling and renames, so a failed run never
// leaves a partial artifact at `path`. "-" writes to `out`.
void write_output(const std::string& path, std::ostream& out,
                  const std::function<void(std::ostream&)>& body) {
  if (path == "-") {
    body(out);
    out.flush();
    return;
  }
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw CliFailure("cannot write " + path);
    body(f);
    f.flush();
    if (!f) throw CliFailure("write failed for " + path);
  }
  fs::rename(tmp, target);
}

nlohmann::json labels_json(const Labels& labels) {
  nlohmann::json arr = nlohmann::json::array();
  for (Label l : labels) arr.push_back(std::string(1, label_char(l)));
  return arr;
}

Labels labels_from_json(const nlohmann::json& j) {
  Labels out;
  if (j.is_string()) {
    for (char c : j.get<std::string>()) {
      if (c != ' ') out.push_back(label_from_char(c));
    }
    return out;
  }
  for (const auto& x : j) {
    const auto s = x.get<std::string>();
    if (s.size() != 1) throw CorpusError("label '" + s + "' is not D or O");
    out.push_back(label_from_char(s[0]));
  }
  return out;
}

Tokens tokens_from_json(const nlohmann::json& j) {
  if (j.is_string()) return tokenize(j.get<std::string>());
  return j.get<Tokens>();
}

struct Embeddings {
  EmbeddingTable table;
  std::optional<ContextualStore> contextual;

  EmbeddingSource source() const { return {&table, contextual ? &*contextual : nullptr}; }
};

Embeddings load_embeddings(const std::string& static_path, const std::string& contextual_path) {
  Embeddings e;
  spdlog::info("loading static embeddings from {}", static_path);
  e.table = load_static_table(fs::path(static_path));
  spdlog::info("{} static vectors, dim {}", e.table.size(), e.table.dim());
  if (!contextual_path.empty()) {
    e.contextual = load_contextual_store(fs::path(contextual_path));
    spdlog::info("{} contextual entries, dim {}", e.contextual->size(), e.contextual->dim());
  }
  return e;
}

// Lists every sentence the contextual store cannot serve. Empty when fine.
std::vector<std::string> missing_contextual(const std::vector<LabeledSentence>& data,
                                            const ContextualStore& store) {
  std::vector<std::string> missing;
  for (const auto& s : data) {
    const auto* entry = store.find(s.id);
    if (!entry) {
      missing.push_back(s.id);
    } else if (entry->rows != s.tokens.size()) {
      missing.push_back(s.id + " (row count " + std::to_string(entry->rows) + " != " +
                        std::to_string(s.tokens.size()) + " tokens)");
    }
  }
  return missing;
}

std::vector<LabeledSentence> read_tsv(const std::string& path) {
  auto in = open_input(path);
  return read_conll(in);
}

int cmd_align(const std::string& input, const std::string& output, bool strict, std::ostream& out) {
  auto in = open_input(input);
  auto parsed = parse_pairs(in, strict ? OnRecordError::kAbort : OnRecordError::kSkip);
  for (const auto& e : parsed.errors) spdlog::warn("skipping record: {}", e.what());

  std::vector<LabeledSentence> aligned;
  std::size_t unalignable = 0;
  for (const auto& pair : parsed.pairs) {
    try {
      aligned.push_back(align(pair));
    } catch (const NotSubsequence& e) {
      ++unalignable;
      spdlog::warn("{}", e.what());
    }
  }
  write_output(output, out, [&](std::ostream& f) {
    for (const auto& s : aligned) write_conll(f, s);
  });
  spdlog::info("aligned {} pairs, skipped {} unalignable, {} malformed", aligned.size(), unalignable,
               parsed.errors.size());
  if (output != "-") {
    out << nlohmann::json{{"aligned", aligned.size()},
                          {"skipped", unalignable},
                          {"malformed", parsed.errors.size()}}
               .dump()
        << '\n';
  }
  return 0;
}

struct TrainFlags {
  std::string input, validation, static_path, contextual_path, output, report;
  ModelConfig config;
  std::string head = "crf";
  std::size_t threads = 1;
};

int cmd_train(TrainFlags flags, std::ostream& out) {
  auto train_set = read_tsv(flags.input);
  std::optional<std::vector<LabeledSentence>> validation;
  if (!flags.validation.empty()) validation = read_tsv(flags.validation);
  spdlog::info("{} training sentences", train_set.size());
  if (train_set.empty()) throw CliFailure("no sentences in " + flags.input);

  const Embeddings emb = load_embeddings(flags.static_path, flags.contextual_path);
  if (emb.contextual) {
    auto missing = missing_contextual(train_set, *emb.contextual);
    if (validation) {
      auto more = missing_contextual(*validation, *emb.contextual);
      missing.insert(missing.end(), more.begin(), more.end());
    }
    if (!missing.empty()) {
      for (const auto& id : missing) spdlog::error("no usable contextual vectors for sentence {}", id);
      throw CliFailure(std::to_string(missing.size()) + " sentences lack contextual vectors");
    }
  }

  flags.config.static_dim = emb.table.dim();
  flags.config.contextual_dim = emb.contextual ? emb.contextual->dim() : 0;
  flags.config.head = head_from_name(flags.head);

  TrainOptions options;
  options.threads = flags.threads;
  const TrainResult result = train(flags.config, train_set, validation, emb.source(), options);

  if (flags.report.empty()) flags.report = flags.output + ".report.json";
  write_output(flags.output, out, [&](std::ostream& f) {
    save_checkpoint(result.params, flags.config, f);
  });
  write_output(flags.report, out, [&](std::ostream& f) {
    f << to_json(result.report).dump(2) << '\n';
  });
  spdlog::info("best epoch {} with validation F1 {:.4f}", result.report.best_epoch,
               result.report.best_f1);
  return 0;
}

int cmd_compress(const std::string& model_path, const std::string& input, const std::string& output,
                 const std::string& static_path, const std::string& contextual_path,
                 std::size_t threads, std::ostream& out) {
  const Checkpoint ck = load_checkpoint(fs::path(model_path));
  const Embeddings emb = load_embeddings(static_path, contextual_path);
  if (emb.table.dim() != ck.config.static_dim) {
    throw CliFailure("static embeddings have dim " + std::to_string(emb.table.dim()) +
                     " but the model expects " + std::to_string(ck.config.static_dim));
  }
  const std::size_t ctx_dim = emb.contextual ? emb.contextual->dim() : 0;
  if (ctx_dim != ck.config.contextual_dim) {
    throw CliFailure("contextual dim " + std::to_string(ctx_dim) + " but the model expects " +
                     std::to_string(ck.config.contextual_dim));
  }

  struct Record {
    std::string id;
    Tokens tokens;
  };
  std::vector<Record> records;
  {
    auto in = open_input(input);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
      try {
        const auto j = nlohmann::json::parse(line);
        Record r;
        const auto& id = j.at("id");
        r.id = id.is_string() ? id.get<std::string>() : id.dump();
        r.tokens = tokens_from_json(j.contains("tokens") ? j.at("tokens") : j.at("original"));
        if (r.tokens.empty()) throw CliFailure("empty sentence");
        records.push_back(std::move(r));
      } catch (const std::exception& e) {
        throw CliFailure(input + " line " + std::to_string(line_no) + ": " + e.what());
      }
    }
  }

  const EmbeddingSource source = emb.source();
  std::vector<Prediction> preds(records.size());
  parallel_for(records.size(), threads, [&](std::size_t i) {
    preds[i] = predict(ck.params, ck.config.head, records[i].tokens,
                       source(records[i].tokens, records[i].id));
  });

  write_output(output, out, [&](std::ostream& f) {
    for (std::size_t i = 0; i < records.size(); ++i) {
      f << nlohmann::json{{"id", records[i].id},
                          {"tokens", records[i].tokens},
                          {"labels", labels_json(preds[i].labels)},
                          {"compression", preds[i].compression}}
               .dump()
        << '\n';
    }
  });
  spdlog::info("compressed {} sentences", records.size());
  return 0;
}

int cmd_eval(const std::string& input, const std::string& gold_path, const std::string& output,
             std::ostream& out) {
  std::map<std::string, Labels> predicted;
  {
    auto in = open_input(input);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
      try {
        const auto j = nlohmann::json::parse(line);
        const auto& id = j.at("id");
        predicted[id.is_string() ? id.get<std::string>() : id.dump()] = labels_from_json(j.at("labels"));
      } catch (const std::exception& e) {
        throw CliFailure(input + " line " + std::to_string(line_no) + ": " + e.what());
      }
    }
  }
  const auto gold = read_tsv(gold_path);

  std::vector<Labels> pred_labels, gold_labels;
  MetricsReport report;
  EvalCounts counts;
  for (const auto& g : gold) {
    auto it = predicted.find(g.id);
    if (it == predicted.end() || it->second.size() != g.labels.size()) {
      ++report.skipped;
      spdlog::warn("sentence {}: {}", g.id, it == predicted.end() ? "no prediction" : "length mismatch");
      continue;
    }
    counts += count_deletions(it->second, g.labels);
    pred_labels.push_back(it->second);
    gold_labels.push_back(g.labels);
  }
  report.sentences = pred_labels.size();
  report.micro = scores_from(counts);
  report.macro = macro_deletion_f1(pred_labels, gold_labels);
  report.compression_rate = counts.orig_len > 0 ? compression_rate(counts) : 0.0;

  const std::string text = to_json(report).dump() + "\n";
  if (!output.empty() && output != "-") {
    write_output(output, out, [&](std::ostream& f) { f << text; });
  }
  out << text;
  return 0;
}

nlohmann::json inspect_pairs(std::istream& in) {
  const auto parsed = parse_pairs(in, OnRecordError::kSkip);
  std::size_t orig = 0, comp = 0, alignable = 0;
  for (const auto& p : parsed.pairs) {
    orig += p.original.size();
    comp += p.compression.size();
    try {
      align(p);
      ++alignable;
    } catch (const NotSubsequence&) {
    }
  }
  const double n = static_cast<double>(std::max<std::size_t>(1, parsed.pairs.size()));
  return {{"format", "pairs"},
          {"pairs", parsed.pairs.size()},
          {"malformed", parsed.errors.size()},
          {"alignable", alignable},
          {"mean_original_length", static_cast<double>(orig) / n},
          {"mean_compression_length", static_cast<double>(comp) / n},
          {"compression_rate", orig > 0 ? static_cast<double>(comp) / static_cast<double>(orig) : 0.0}};
}

int cmd_inspect(const std::string& input, std::ostream& out) {
  auto in = open_input(input);
  char magic[4] = {};
  in.read(magic, 4);
  const std::string m(magic, static_cast<std::size_t>(in.gcount()));
  in.clear();
  in.seekg(0);

  nlohmann::json info;
  if (m == "SCMP") {
    const Checkpoint ck = load_checkpoint(in);
    nlohmann::json tensors = nlohmann::json::array();
    std::size_t total = 0;
    for (const auto& v : ck.params.views()) {
      tensors.push_back({{"name", v.name}, {"shape", v.shape}});
      total += v.values.size();
    }
    info = {{"format", "SCMP"}, {"config", ck.config}, {"tensors", tensors}, {"parameters", total}};
  } else if (m == "CEMB") {
    const ContextualStore store = load_contextual_store(in);
    std::size_t rows = 0;
    for (const auto& e : store.entries()) rows += e.rows;
    info = {{"format", "CEMB"}, {"dim", store.dim()}, {"entries", store.size()}, {"rows", rows}};
  } else if (!m.empty() && m[0] == '{') {
    info = inspect_pairs(in);
  } else {
    const auto sentences = read_conll(in);
    EvalCounts c;
    for (const auto& s : sentences) c += count_deletions(s.labels, s.labels);
    info = {{"format", "conll"},
            {"sentences", sentences.size()},
            {"tokens", c.orig_len},
            {"deleted", c.all_del},
            {"compression_rate", c.orig_len > 0 ? compression_rate(c) : 0.0}};
  }
  out << info.dump(2) << '\n';
  return 0;
}

void configure_logging(std::ostream& err, const std::string& level) {
  auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
  auto logger = std::make_shared<spdlog::logger>("sentcomp", sink);
  logger->set_pattern("[%l] %v");
  logger->set_level(spdlog::level::from_str(level));
  spdlog::set_default_logger(logger);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sentence compression by deletion: align, train, compress, eval, inspect"};
  app.require_subcommand(1);
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace|debug|info|warn|error|off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

  std::string input, output = "-", static_path, contextual_path, model_path, gold_path;
  bool strict = false;

  auto* align_cmd = app.add_subcommand("align", "Align sentence/compression pairs into D/O labels");
  align_cmd->add_option("--input", input, "Pairs JSONL")->required()->check(CLI::ExistingFile);
  align_cmd->add_option("--output", output, "CoNLL TSV output (- for stdout)");
  align_cmd->add_flag("--strict", strict, "Abort on the first malformed record");

  TrainFlags tf;
  auto* train_cmd = app.add_subcommand("train", "Train a BiLSTM-CRF tagger");
  train_cmd->add_option("--input", tf.input, "Labeled CoNLL TSV")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--validation", tf.validation, "Validation CoNLL TSV")->check(CLI::ExistingFile);
  train_cmd->add_option("--static-embeddings", tf.static_path, "GloVe text file")
      ->required()
      ->check(CLI::ExistingFile);
  train_cmd->add_option("--contextual-store", tf.contextual_path, "CEMB file")->check(CLI::ExistingFile);
  train_cmd->add_option("--output", tf.output, "Checkpoint path")->required();
  train_cmd->add_option("--report", tf.report, "TrainReport JSON path (default <output>.report.json)");
  train_cmd->add_option("--epochs", tf.config.epochs)->check(CLI::PositiveNumber)->capture_default_str();
  train_cmd->add_option("--lr", tf.config.lr)->check(CLI::PositiveNumber)->capture_default_str();
  train_cmd->add_option("--hidden", tf.config.hidden_size, "Hidden units per direction")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train_cmd->add_option("--clip", tf.config.clip_norm)->check(CLI::PositiveNumber)->capture_default_str();
  train_cmd->add_option("--batch", tf.config.batch_size)->check(CLI::PositiveNumber)->capture_default_str();
  train_cmd->add_option("--seed", tf.config.seed)->capture_default_str();
  train_cmd->add_option("--patience", tf.config.patience)->check(CLI::PositiveNumber)->capture_default_str();
  train_cmd->add_option("--dropout", tf.config.dropout)->check(CLI::Range(0.0, 0.5))->capture_default_str();
  train_cmd->add_option("--max-length", tf.config.max_length)->check(CLI::PositiveNumber)->capture_default_str();
  train_cmd->add_option("--val-fraction", tf.config.validation_fraction)
      ->check(CLI::Range(0.0, 0.99))
      ->capture_default_str();
  train_cmd->add_option("--head", tf.head)->check(CLI::IsMember({"crf", "softmax"}))->capture_default_str();
  train_cmd->add_option("--threads", tf.threads)->check(CLI::PositiveNumber)->capture_default_str();

  std::size_t threads = 1;
  auto* compress_cmd = app.add_subcommand("compress", "Compress sentences with a trained model");
  compress_cmd->add_option("--model", model_path, "Checkpoint")->required()->check(CLI::ExistingFile);
  compress_cmd->add_option("--input", input, "Sentences JSONL")->required()->check(CLI::ExistingFile);
  compress_cmd->add_option("--output", output, "Output JSONL (- for stdout)");
  compress_cmd->add_option("--static-embeddings", static_path)->required()->check(CLI::ExistingFile);
  compress_cmd->add_option("--contextual-store", contextual_path)->check(CLI::ExistingFile);
  compress_cmd->add_option("--threads", threads)->check(CLI::PositiveNumber);

  std::string metrics_path;
  auto* eval_cmd = app.add_subcommand("eval", "Deletion F1 and compression rate");
  eval_cmd->add_option("--input", input, "Predictions JSONL")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--gold", gold_path, "Gold CoNLL TSV")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--output", metrics_path, "Also write metrics JSON here");
  eval_cmd->add_option("--threads", threads)->check(CLI::PositiveNumber);

  auto* inspect_cmd = app.add_subcommand("inspect", "Summarize a checkpoint, CEMB store, TSV or pairs file");
  inspect_cmd->add_option("--input", input)->required()->check(CLI::ExistingFile);

  std::vector<const char*> argv{"sentcomp"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  }

  configure_logging(err, log_level);
  try {
    if (*align_cmd) return cmd_align(input, output, strict, out);
    if (*train_cmd) return cmd_train(tf, out);
    if (*compress_cmd) {
      return cmd_compress(model_path, input, output, static_path, contextual_path, threads, out);
    }
    if (*eval_cmd) return cmd_eval(input, gold_path, metrics_path, out);
    if (*inspect_cmd) return cmd_inspect(input, out);
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 2;
}

}  // namespace sentcomp
