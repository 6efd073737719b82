#include "sentcomp/embeddings.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>

#include "binary_io.hpp"

namespace sentcomp {

namespace {

constexpr char kCembMagic[4] = {'C', 'E', 'M', 'B'};
constexpr std::uint32_t kCembVersion = 1;

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::vector<float> read_f32_block(std::istream& in, std::size_t count) {
  constexpr std::size_t kChunk = 1 << 18;
  std::vector<float> out;
  out.reserve(std::min(count, kChunk));
  std::vector<unsigned char> buf;
  std::size_t remaining = count;
  while (remaining > 0) {
    const std::size_t n = std::min(remaining, kChunk);
    buf.resize(n * 4);
    detail::read_exact(in, reinterpret_cast<char*>(buf.data()), buf.size(), "vector payload");
    for (std::size_t i = 0; i < n; ++i) {
      const unsigned char* b = buf.data() + 4 * i;
      const std::uint32_t bits = std::uint32_t{b[0]} | (std::uint32_t{b[1]} << 8) |
                                 (std::uint32_t{b[2]} << 16) | (std::uint32_t{b[3]} << 24);
      out.push_back(std::bit_cast<float>(bits));
    }
    remaining -= n;
  }
  return out;
}

}  // namespace

EmbeddingTable::EmbeddingTable(std::size_t dim) : dim_(dim) {
  if (dim == 0) throw EmbeddingError("embedding table dimension must be positive");
}

void EmbeddingTable::add(std::string token, std::span<const float> vector) {
  if (vector.size() != dim_) {
    throw EmbeddingError("vector for '" + token + "' has " + std::to_string(vector.size()) +
                         " components, table dimension is " + std::to_string(dim_));
  }
  if (index_.contains(token)) return;
  index_.emplace(std::move(token), values_.size() / dim_);
  values_.insert(values_.end(), vector.begin(), vector.end());
}

std::optional<std::span<const float>> EmbeddingTable::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) it = index_.find(ascii_lower(token));
  if (it == index_.end()) return std::nullopt;
  return std::span<const float>(values_.data() + it->second * dim_, dim_);
}

EmbeddingTable load_static_table(std::istream& in) {
  EmbeddingTable table;
  std::string line;
  std::size_t line_no = 0;
  std::vector<float> vec;
  while (std::getline(in, line)) {
    ++line_no;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\n')) {
      line.pop_back();
    }
    if (line.empty()) continue;

    const auto first_space = line.find(' ');
    if (first_space == std::string::npos || first_space == 0) {
      throw EmbeddingError("line " + std::to_string(line_no) + ": expected '<token> <values...>'");
    }
    vec.clear();
    const char* p = line.data() + first_space;
    const char* end = line.data() + line.size();
    while (p < end) {
      if (*p != ' ') {
        throw EmbeddingError("line " + std::to_string(line_no) + ": values must be single-space separated");
      }
      ++p;
      float v = 0.0f;
      auto [next, ec] = std::from_chars(p, end, v);
      if (ec != std::errc() || (next != end && *next != ' ') || !std::isfinite(v)) {
        throw EmbeddingError("line " + std::to_string(line_no) + ": unparseable value '" +
                             std::string(p, std::find(p, end, ' ')) + "'");
      }
      vec.push_back(v);
      p = next;
    }
    if (table.dim() == 0) {
      if (vec.empty()) throw EmbeddingError("line " + std::to_string(line_no) + ": no values");
      table = EmbeddingTable(vec.size());
    } else if (vec.size() != table.dim()) {
      throw EmbeddingError("line " + std::to_string(line_no) + ": " + std::to_string(vec.size()) +
                           " values, expected " + std::to_string(table.dim()));
    }
    table.add(line.substr(0, first_space), vec);
  }
  if (table.dim() == 0) throw EmbeddingError("embedding file is empty");
  return table;
}

EmbeddingTable load_static_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw EmbeddingError("cannot open " + path.string());
  return load_static_table(in);
}

ContextualStore::ContextualStore(std::size_t dim) : dim_(dim) {
  if (dim == 0) throw EmbeddingError("contextual store dimension must be positive");
}

void ContextualStore::add(std::string id, std::size_t rows, std::vector<float> values) {
  if (values.size() != rows * dim_) {
    throw EmbeddingError("contextual entry '" + id + "' has " + std::to_string(values.size()) +
                         " values, expected " + std::to_string(rows * dim_));
  }
  if (!std::all_of(values.begin(), values.end(), [](float v) { return std::isfinite(v); })) {
    throw EmbeddingError("contextual entry '" + id + "' has non-finite values");
  }
  if (index_.contains(id)) throw EmbeddingError("duplicate contextual entry '" + id + "'");
  index_.emplace(id, entries_.size());
  entries_.push_back(Entry{std::move(id), rows, std::move(values)});
}

const ContextualStore::Entry* ContextualStore::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  return it == index_.end() ? nullptr : &entries_[it->second];
}

ContextualStore load_contextual_store(std::istream& in) {
  try {
    char magic[4];
    detail::read_exact(in, magic, 4, "magic");
    if (!std::equal(magic, magic + 4, kCembMagic)) throw EmbeddingError("not a CEMB file (bad magic)");
    const auto version = detail::read_le<std::uint32_t>(in, "version");
    if (version != kCembVersion) {
      throw EmbeddingError("unsupported CEMB version " + std::to_string(version));
    }
    const auto dim = detail::read_le<std::uint32_t>(in, "dim");
    const auto count = detail::read_le<std::uint64_t>(in, "count");
    ContextualStore store(dim);
    for (std::uint64_t e = 0; e < count; ++e) {
      const auto id_len = detail::read_le<std::uint32_t>(in, "id length");
      std::string id(id_len, '\0');
      detail::read_exact(in, id.data(), id_len, "id");
      const auto rows = detail::read_le<std::uint32_t>(in, "row count");
      auto values = read_f32_block(in, static_cast<std::size_t>(rows) * dim);
      store.add(std::move(id), rows, std::move(values));
    }
    if (!detail::at_eof(in)) throw EmbeddingError("trailing bytes after last CEMB entry");
    return store;
  } catch (const detail::TruncatedInput& e) {
    throw EmbeddingError(std::string("CEMB: ") + e.what());
  }
}

ContextualStore load_contextual_store(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw EmbeddingError("cannot open " + path.string());
  return load_contextual_store(in);
}

void save_contextual_store(const ContextualStore& store, std::ostream& out) {
  out.write(kCembMagic, 4);
  detail::write_le<std::uint32_t>(out, kCembVersion);
  detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(store.dim()));
  detail::write_le<std::uint64_t>(out, store.size());
  for (const auto& e : store.entries()) {
    detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(e.id.size()));
    out.write(e.id.data(), static_cast<std::streamsize>(e.id.size()));
    detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(e.rows));
    for (float v : e.values) detail::write_f32(out, v);
  }
}

void save_contextual_store(const ContextualStore& store, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw EmbeddingError("cannot write " + path.string());
  save_contextual_store(store, out);
  out.flush();
  if (!out) throw EmbeddingError("write failed for " + path.string());
}

Matrix embed(const Tokens& tokens, std::string_view id, const EmbeddingTable& table,
             const ContextualStore* contextual) {
  const std::size_t T = tokens.size();
  const std::size_t s_dim = table.dim();
  const std::size_t c_dim = contextual ? contextual->dim() : 0;

  const ContextualStore::Entry* entry = nullptr;
  if (contextual) {
    entry = contextual->find(id);
    if (!entry) throw EmbeddingError("no contextual vectors for sentence '" + std::string(id) + "'");
    if (entry->rows != T) {
      throw EmbeddingError("contextual vectors for '" + std::string(id) + "' have " +
                           std::to_string(entry->rows) + " rows but the sentence has " +
                           std::to_string(T) + " tokens");
    }
  }

  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(T), static_cast<Eigen::Index>(s_dim + c_dim));
  for (std::size_t t = 0; t < T; ++t) {
    const auto row = static_cast<Eigen::Index>(t);
    if (auto vec = table.find(tokens[t])) {
      for (std::size_t k = 0; k < s_dim; ++k) out(row, static_cast<Eigen::Index>(k)) = (*vec)[k];
    }
    if (entry) {
      const float* src = entry->values.data() + t * c_dim;
      for (std::size_t k = 0; k < c_dim; ++k) out(row, static_cast<Eigen::Index>(s_dim + k)) = src[k];
    }
  }
  return out;
}

}  // namespace sentcomp
