#include <doctest.h>

#include <cstring>
#include <sstream>

#include "sentcomp/embeddings.hpp"
#include "support.hpp"

using namespace sentcomp;

TEST_CASE("GloVe text loader") {
  std::istringstream in("the 0.1 0.2\ncat 0.3 0.4\n");
  const auto table = load_static_table(in);
  CHECK(table.dim() == 2);
  CHECK(table.size() == 2);
  auto cat = table.find("cat");
  REQUIRE(cat);
  CHECK((*cat)[1] == doctest::Approx(0.4f));
  CHECK(table.find("The").has_value());  // lowercase fallback
  CHECK_FALSE(table.find("dog").has_value());
}

TEST_CASE("GloVe loader errors") {
  std::istringstream dim("the 0.1 0.2\ncat 0.3 0.4 0.5\n");
  CHECK_THROWS_AS(load_static_table(dim), EmbeddingError);
  std::istringstream bad("the 0.1 zero\n");
  CHECK_THROWS_AS(load_static_table(bad), EmbeddingError);
  std::istringstream nan("the 0.1 nan\n");
  CHECK_THROWS_AS(load_static_table(nan), EmbeddingError);
  std::istringstream empty("");
  CHECK_THROWS_AS(load_static_table(empty), EmbeddingError);
  std::istringstream novalues("lonely\n");
  CHECK_THROWS_AS(load_static_table(novalues), EmbeddingError);
}

TEST_CASE("exact match wins over the lowercase fallback") {
  std::istringstream in("Apple 1 1\napple 2 2\n");
  const auto table = load_static_table(in);
  CHECK((*table.find("Apple"))[0] == 1.0f);
  CHECK((*table.find("APPLE"))[0] == 2.0f);
}

TEST_CASE("CEMB write-then-read is bit exact") {
  ContextualStore store(4);
  std::vector<float> v(12);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = 0.1f * static_cast<float>(i) - 0.55f;
  store.add("s1", 3, v);
  store.add("second", 1, {1.0f, -2.0f, 3.5f, 1e-30f});

  std::stringstream buf;
  save_contextual_store(store, buf);
  const std::string bytes = buf.str();
  // magic + version + dim + count + (4 + 2 + 4 + 48) + (4 + 6 + 4 + 16)
  CHECK(bytes.size() == 4 + 4 + 4 + 8 + 58 + 30);
  CHECK(bytes.substr(0, 4) == "CEMB");

  std::istringstream in(bytes);
  const auto loaded = load_contextual_store(in);
  REQUIRE(loaded.size() == 2);
  const auto* e = loaded.find("s1");
  REQUIRE(e);
  CHECK(e->rows == 3);
  CHECK(std::memcmp(e->values.data(), v.data(), v.size() * sizeof(float)) == 0);

  std::stringstream again;
  save_contextual_store(loaded, again);
  CHECK(again.str() == bytes);
}

TEST_CASE("CEMB rejects corrupt input") {
  ContextualStore store(2);
  store.add("a", 1, {1.0f, 2.0f});
  std::stringstream buf;
  save_contextual_store(store, buf);
  const std::string good = buf.str();

  auto load = [](std::string bytes) {
    std::istringstream in(bytes);
    return load_contextual_store(in);
  };
  std::string magic = good;
  magic[0] = 'X';
  CHECK_THROWS_AS(load(magic), EmbeddingError);
  std::string version = good;
  version[4] = 2;
  CHECK_THROWS_AS(load(version), EmbeddingError);
  CHECK_THROWS_AS(load(good.substr(0, good.size() - 1)), EmbeddingError);
  CHECK_THROWS_AS(load(good + "x"), EmbeddingError);

  CHECK_THROWS_AS(store.add("a", 1, {0.0f, 0.0f}), EmbeddingError);
  // Two entries with the same id in the file.
  std::string dup = good;
  dup[12] = 2;  // count
  dup += good.substr(20);
  CHECK_THROWS_AS(load(dup), EmbeddingError);
}

TEST_CASE("embed concatenates static and contextual rows") {
  std::istringstream in("a 1 2\nb 3 4\n");
  const auto table = load_static_table(in);
  ContextualStore ctx(3);
  ctx.add("s", 2, {10, 11, 12, 20, 21, 22});

  const Tokens tokens{"a", "zzz"};
  const Matrix full = embed(tokens, "s", table, &ctx);
  REQUIRE(full.rows() == 2);
  REQUIRE(full.cols() == 5);
  Matrix expected(2, 5);
  expected << 1, 2, 10, 11, 12, 0, 0, 20, 21, 22;
  CHECK(full == expected);

  const Matrix static_only = embed(tokens, "s", table, nullptr);
  CHECK(static_only.cols() == 2);
  CHECK(full.leftCols(2) == static_only);

  CHECK_THROWS_AS(embed(tokens, "missing", table, &ctx), EmbeddingError);
  CHECK_THROWS_AS(embed({"a"}, "s", table, &ctx), EmbeddingError);
}
