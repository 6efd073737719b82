#include "sentcomp/checkpoint.hpp"

#include <algorithm>
#include <fstream>

#include "binary_io.hpp"

namespace sentcomp {

namespace {

constexpr char kMagic[4] = {'S', 'C', 'M', 'P'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kMaxHeader = 1u << 24;

}  // namespace

void save_checkpoint(const ModelParams& params, const ModelConfig& config, std::ostream& out) {
  nlohmann::json manifest = nlohmann::json::array();
  const auto views = params.views();
  for (const auto& v : views) manifest.push_back({{"name", v.name}, {"shape", v.shape}});
  const std::string header = nlohmann::json{{"config", config}, {"tensors", manifest}}.dump();

  out.write(kMagic, 4);
  detail::write_le<std::uint32_t>(out, kVersion);
  detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(header.size()));
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  for (const auto& v : views) {
    for (double x : v.values) detail::write_f32(out, static_cast<float>(x));
  }
}

void save_checkpoint(const ModelParams& params, const ModelConfig& config,
                     const std::filesystem::path& path) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot write " + tmp.string());
    save_checkpoint(params, config, out);
    out.flush();
    if (!out) throw CheckpointError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw CheckpointError("cannot move checkpoint into place: " + ec.message());
}

Checkpoint load_checkpoint(std::istream& in) {
  try {
    char magic[4];
    detail::read_exact(in, magic, 4, "magic");
    if (!std::equal(magic, magic + 4, kMagic)) throw CheckpointError("not a checkpoint (bad magic)");
    const auto version = detail::read_le<std::uint32_t>(in, "version");
    if (version != kVersion) {
      throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
    }
    const auto header_len = detail::read_le<std::uint32_t>(in, "header length");
    if (header_len == 0 || header_len > kMaxHeader) {
      throw CheckpointError("implausible header length " + std::to_string(header_len));
    }
    std::string header(header_len, '\0');
    detail::read_exact(in, header.data(), header_len, "header");

    Checkpoint ck;
    nlohmann::json manifest;
    try {
      const auto j = nlohmann::json::parse(header);
      ck.config = j.at("config").get<ModelConfig>();
      manifest = j.at("tensors");
    } catch (const nlohmann::json::exception& e) {
      throw CheckpointError(std::string("malformed checkpoint header: ") + e.what());
    }
    try {
      ck.config.validate();
    } catch (const std::invalid_argument& e) {
      throw CheckpointError(std::string("checkpoint config rejected: ") + e.what());
    }

    ck.params = ModelParams(ck.config);
    auto views = ck.params.views();
    if (!manifest.is_array() || manifest.size() != views.size()) {
      throw CheckpointError("tensor manifest does not match the model layout");
    }
    for (std::size_t i = 0; i < views.size(); ++i) {
      std::string name;
      std::vector<std::size_t> shape;
      try {
        manifest[i].at("name").get_to(name);
        manifest[i].at("shape").get_to(shape);
      } catch (const nlohmann::json::exception& e) {
        throw CheckpointError(std::string("malformed manifest entry: ") + e.what());
      }
      if (name != views[i].name || shape != views[i].shape) {
        throw CheckpointError("manifest entry " + std::to_string(i) + " ('" + name +
                              "') disagrees with the expected tensor '" + views[i].name + "'");
      }
    }
    for (auto& v : views) {
      for (auto& x : v.values) x = static_cast<double>(detail::read_f32(in, "tensor payload"));
    }
    if (!detail::at_eof(in)) throw CheckpointError("trailing bytes after tensor payload");
    return ck;
  } catch (const detail::TruncatedInput& e) {
    throw CheckpointError(std::string("checkpoint: ") + e.what());
  }
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open " + path.string());
  return load_checkpoint(in);
}

}  // namespace sentcomp
