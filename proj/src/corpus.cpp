#include "sentcomp/corpus.hpp"

#include <istream>
#include <ostream>

#include <json.hpp>

namespace sentcomp {

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_terminal_punct(char c) {
  return c == '.' || c == ',' || c == ';' || c == ':' || c == '!' || c == '?';
}

Tokens read_token_field(const nlohmann::json& record, const char* field, std::size_t line) {
  auto it = record.find(field);
  if (it == record.end()) {
    throw RecordError(line, std::string("missing field '") + field + "'");
  }
  Tokens tokens;
  if (it->is_string()) {
    tokens = tokenize(it->get<std::string>());
  } else if (it->is_array()) {
    tokens.reserve(it->size());
    for (const auto& tok : *it) {
      if (!tok.is_string()) {
        throw RecordError(line, std::string("non-string token in '") + field + "'");
      }
      auto s = tok.get<std::string>();
      if (s.empty()) {
        throw RecordError(line, std::string("empty token in '") + field + "'");
      }
      for (char c : s) {
        if (is_space(c)) {
          throw RecordError(line, std::string("token with whitespace in '") + field + "'");
        }
      }
      tokens.push_back(std::move(s));
    }
  } else {
    throw RecordError(line, std::string("field '") + field + "' must be a string or array");
  }
  if (tokens.empty()) {
    throw RecordError(line, std::string("empty token list in '") + field + "'");
  }
  return tokens;
}

}  // namespace

char label_char(Label label) { return label == Label::D ? 'D' : 'O'; }

Label label_from_char(char c) {
  if (c == 'D') return Label::D;
  if (c == 'O') return Label::O;
  throw CorpusError(std::string("unknown label '") + c + "'");
}

RecordError::RecordError(std::size_t line, const std::string& what)
    : CorpusError("line " + std::to_string(line) + ": " + what), line_(line) {}

NotSubsequence::NotSubsequence(const std::string& id, std::size_t compression_index)
    : CorpusError("pair '" + id + "': compression token " + std::to_string(compression_index) +
                  " has no match in the original"),
      index_(compression_index) {}

Tokens tokenize(std::string_view text) {
  Tokens out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (start == i) break;

    std::string_view word = text.substr(start, i - start);
    std::size_t end = word.size();
    while (end > 1 && is_terminal_punct(word[end - 1])) --end;
    out.emplace_back(word.substr(0, end));
    for (std::size_t k = end; k < word.size(); ++k) out.emplace_back(1, word[k]);
  }
  return out;
}

SentencePair parse_pair_line(std::string_view text, std::size_t line) {
  nlohmann::json record;
  try {
    record = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw RecordError(line, std::string("malformed JSON: ") + e.what());
  }
  if (!record.is_object()) throw RecordError(line, "record is not a JSON object");

  SentencePair pair;
  auto id = record.find("id");
  if (id == record.end()) throw RecordError(line, "missing field 'id'");
  if (id->is_string()) {
    pair.id = id->get<std::string>();
  } else if (id->is_number_integer()) {
    pair.id = id->dump();
  } else {
    throw RecordError(line, "field 'id' must be a string");
  }
  pair.original = read_token_field(record, "original", line);
  pair.compression = read_token_field(record, "compression", line);
  return pair;
}

ParseResult parse_pairs(std::istream& in, OnRecordError policy) {
  ParseResult result;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    try {
      result.pairs.push_back(parse_pair_line(text, line));
    } catch (const RecordError& e) {
      if (policy == OnRecordError::kAbort) throw;
      result.errors.push_back(e);
    }
  }
  return result;
}

LabeledSentence align(const SentencePair& pair) {
  LabeledSentence out{pair.id, pair.original, Labels(pair.original.size(), Label::D)};
  std::size_t cursor = 0;
  for (std::size_t k = 0; k < pair.compression.size(); ++k) {
    while (cursor < pair.original.size() && pair.original[cursor] != pair.compression[k]) ++cursor;
    if (cursor == pair.original.size()) throw NotSubsequence(pair.id, k);
    out.labels[cursor++] = Label::O;
  }
  return out;
}

Tokens apply_labels(const Tokens& tokens, const Labels& labels) {
  if (tokens.size() != labels.size()) {
    throw std::invalid_argument("apply_labels: " + std::to_string(tokens.size()) + " tokens but " +
                                std::to_string(labels.size()) + " labels");
  }
  Tokens kept;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (labels[i] == Label::O) kept.push_back(tokens[i]);
  }
  return kept;
}

void write_conll(std::ostream& out, const LabeledSentence& sentence) {
  out << "# id = " << sentence.id << '\n';
  for (std::size_t i = 0; i < sentence.tokens.size(); ++i) {
    out << sentence.tokens[i] << '\t' << label_char(sentence.labels[i]) << '\n';
  }
  out << '\n';
}

std::vector<LabeledSentence> read_conll(std::istream& in) {
  static constexpr std::string_view kIdPrefix = "# id = ";
  std::vector<LabeledSentence> out;
  LabeledSentence current;
  bool open = false;
  std::size_t line_no = 0;

  auto flush = [&] {
    if (open && !current.tokens.empty()) out.push_back(std::move(current));
    current = LabeledSentence{};
    open = false;
  };

  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      flush();
      continue;
    }
    if (line.starts_with(kIdPrefix)) {
      flush();
      current.id = line.substr(kIdPrefix.size());
      open = true;
      continue;
    }
    if (line.front() == '#') continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 2 != line.size()) {
      throw CorpusError("conll line " + std::to_string(line_no) + ": expected token<TAB>label");
    }
    if (!open) {
      current.id = std::to_string(out.size());
      open = true;
    }
    current.tokens.push_back(line.substr(0, tab));
    current.labels.push_back(label_from_char(line[tab + 1]));
  }
  flush();
  return out;
}

}  // namespace sentcomp
