#pragma once

#include <cstddef>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sentcomp {

// Index order matters: CRF label index 0 is O, 1 is D.
enum class Label : unsigned char { O = 0, D = 1 };

inline constexpr std::size_t kLabelCount = 2;

char label_char(Label label);
Label label_from_char(char c);  // throws CorpusError on anything but 'D'/'O'

using Tokens = std::vector<std::string>;
using Labels = std::vector<Label>;

struct SentencePair {
  std::string id;
  Tokens original;
  Tokens compression;
};

struct LabeledSentence {
  std::string id;
  Tokens tokens;
  Labels labels;
};

class CorpusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A JSONL record that could not be turned into a SentencePair.
class RecordError : public CorpusError {
 public:
  RecordError(std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// The compression has a token with no remaining match in the original.
class NotSubsequence : public CorpusError {
 public:
  NotSubsequence(const std::string& id, std::size_t compression_index);
  std::size_t compression_index() const { return index_; }

 private:
  std::size_t index_;
};

// Whitespace tokenization with trailing `. , ; : ! ?` split off each word.
Tokens tokenize(std::string_view text);

enum class OnRecordError { kAbort, kSkip };

struct ParseResult {
  std::vector<SentencePair> pairs;
  std::vector<RecordError> errors;  // only populated under kSkip
};

// Parses one JSON object line; `line` is used for error reporting only.
SentencePair parse_pair_line(std::string_view text, std::size_t line);

// One record per non-empty line. kAbort rethrows the first RecordError.
ParseResult parse_pairs(std::istream& in, OnRecordError policy = OnRecordError::kAbort);

// Greedy earliest-match subsequence alignment, exact and case-sensitive.
LabeledSentence align(const SentencePair& pair);

// Tokens whose label is O, in order.
Tokens apply_labels(const Tokens& tokens, const Labels& labels);

// CoNLL-style block: "# id = <id>", then token<TAB>label lines, then a blank line.
void write_conll(std::ostream& out, const LabeledSentence& sentence);
std::vector<LabeledSentence> read_conll(std::istream& in);

}  // namespace sentcomp
