#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "sentcomp/corpus.hpp"
#include "sentcomp/tensor.hpp"

namespace sentcomp {

class EmbeddingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Static word vectors (GloVe text format). Immutable once loaded.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  explicit EmbeddingTable(std::size_t dim);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return index_.size(); }

  /// Adds a vector; the first occurrence of a token wins.
  void add(std::string token, std::span<const float> vector);

  /// Exact match, then ASCII-lowercased match, then nullopt.
  std::optional<std::span<const float>> find(std::string_view token) const;

 private:
  std::size_t dim_ = 0;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<float> values_;
};

EmbeddingTable load_static_table(std::istream& in);
EmbeddingTable load_static_table(const std::filesystem::path& path);

/// Precomputed contextual vectors keyed by sentence id, one T x dim matrix per
/// sentence. Entries keep insertion order so that serialization is stable.
class ContextualStore {
 public:
  struct Entry {
    std::string id;
    std::size_t rows = 0;
    std::vector<float> values;  // rows x dim, row-major
  };

  ContextualStore() = default;
  explicit ContextualStore(std::size_t dim);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return entries_.size(); }
  const std::vector<Entry>& entries() const { return entries_; }

  void add(std::string id, std::size_t rows, std::vector<float> values);  // throws on duplicate id
  const Entry* find(std::string_view id) const;

 private:
  std::size_t dim_ = 0;
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

ContextualStore load_contextual_store(std::istream& in);
ContextualStore load_contextual_store(const std::filesystem::path& path);
void save_contextual_store(const ContextualStore& store, std::ostream& out);
void save_contextual_store(const ContextualStore& store, const std::filesystem::path& path);

/// Row t = [static vector of token t (zeros when out of vocabulary) | contextual row t].
/// Without a store the matrix is static-only.
Matrix embed(const Tokens& tokens, std::string_view id, const EmbeddingTable& table,
             const ContextualStore* contextual);

}  // namespace sentcomp
