#pragma once

// Run configuration: a versioned JSON document ("schema": 1). Unknown keys are
// rejected so that typos fail loudly.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include <json.hpp>

#include "oracle_noise/denoiser.hpp"
#include "oracle_noise/encoding.hpp"
#include "oracle_noise/errors.hpp"
#include "oracle_noise/optimizer.hpp"

namespace oracle_noise {

inline constexpr int kConfigSchema = 1;

/// Raised for unreadable, malformed or inconsistent configuration. The
/// message is a single diagnostic line.
class ConfigError : public Error {
 public:
  using Error::Error;
};

struct EncoderSetConfig {
  std::uint32_t count = 2;
  std::uint32_t d_text = 16;
  std::uint32_t vocab_size = 64;
  std::uint64_t seed = 11;
};

struct RunConfig {
  DenoiserConfig denoiser;
  EncoderSetConfig encoders;
  OptimizerConfig optimizer;
  TokenSequence prompt;
  std::filesystem::path output_dir = "oracle_noise_out";

  Shape latent_shape() const { return denoiser.latent_shape; }

  EncoderList make_encoders() const {
    EncoderList out;
    for (std::uint32_t k = 0; k < encoders.count; ++k)
      out.push_back(toy_encoder(encoders.seed + k, encoders.d_text, encoders.vocab_size));
    return out;
  }
};

namespace detail {

/// Walks a JSON object, tracking which keys were consumed.
class ObjectReader {
 public:
  ObjectReader(const nlohmann::json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) fail("", "expected a JSON object");
  }

  bool has(const std::string& key) const { return obj_.contains(key); }

  template <class T>
  std::optional<T> get(const std::string& key) {
    seen_.insert(key);
    if (!obj_.contains(key)) return std::nullopt;
    if constexpr (std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
      const auto& v = obj_.at(key);
      if (!v.is_number_integer() || v.template get<long long>() < 0) fail(key, "must be a non-negative integer");
    }
    try {
      return obj_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      fail(key, "has the wrong type");
    }
  }

  template <class T>
  void read(const std::string& key, T& target) {
    if (auto v = get<T>(key)) target = *v;
  }

  const nlohmann::json& child(const std::string& key) {
    seen_.insert(key);
    return obj_.at(key);
  }

  std::string path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it)
      if (!seen_.count(it.key())) fail(it.key(), "unknown field");
  }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    const std::string where = key.empty() ? (path_.empty() ? "<root>" : path_) : path(key);
    throw ConfigError(where + ": " + what);
  }

 private:
  const nlohmann::json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

inline std::pair<std::size_t, std::size_t> line_and_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string() + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace detail

/// Parses JSON text, reporting syntax errors as "file:line:col: message".
inline nlohmann::json parse_json_text(const std::string& text, const std::string& origin) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const auto [line, col] = detail::line_and_column(text, e.byte == 0 ? 0 : e.byte - 1);
    throw ConfigError(origin + ":" + std::to_string(line) + ":" + std::to_string(col) + ": malformed JSON");
  }
}

inline TokenSequence parse_prompt(const nlohmann::json& j, const std::string& path) {
  detail::ObjectReader r(j, path);
  TokenSequence t;
  if (r.has("text")) {
    const auto text = r.get<std::string>("text").value();
    const auto vocab = r.get<std::size_t>("vocab_size").value_or(64);
    const auto length = r.get<std::size_t>("length").value_or(16);
    r.finish();
    try {
      return tokenize_words(text, vocab, length);
    } catch (const Error& e) {
      r.fail("text", e.what());
    }
  }
  auto ids = r.get<std::vector<std::uint32_t>>("ids");
  auto mask = r.get<std::vector<bool>>("special_mask");
  auto pad = r.get<std::uint32_t>("pad_id");
  r.finish();
  if (!ids) r.fail("ids", "missing");
  if (!mask) r.fail("special_mask", "missing");
  if (!pad) r.fail("pad_id", "missing");
  t.ids = *ids;
  t.special_mask = *mask;
  t.pad_id = *pad;
  if (t.ids.empty()) r.fail("ids", "must be non-empty");
  if (t.special_mask.size() != t.ids.size()) r.fail("special_mask", "length differs from ids");
  return t;
}

inline TokenSequence load_prompt_file(const std::filesystem::path& path) {
  const std::string text = detail::read_text(path);
  return parse_prompt(parse_json_text(text, path.string()), path.filename().string());
}

inline UpdateMode parse_mode(const std::string& s, const detail::ObjectReader& r) {
  if (s == "spherical") return UpdateMode::spherical;
  if (s == "euclidean") return UpdateMode::euclidean;
  r.fail("mode", "must be \"spherical\" or \"euclidean\"");
}

inline TokenWeighting parse_weighting(const std::string& s, const detail::ObjectReader& r) {
  if (s == "oracle") return TokenWeighting::oracle;
  if (s == "uniform") return TokenWeighting::uniform;
  r.fail("weighting", "must be \"oracle\" or \"uniform\"");
}

/// Builds and cross-validates a RunConfig. Relative prompt paths resolve
/// against base_dir.
inline RunConfig parse_run_config(const nlohmann::json& root, const std::filesystem::path& base_dir = {}) {
  detail::ObjectReader r(root, "");
  RunConfig cfg;

  const auto schema = r.get<int>("schema");
  if (!schema) r.fail("schema", "missing (expected 1)");
  if (*schema != kConfigSchema) r.fail("schema", "unsupported version " + std::to_string(*schema));

  r.read("seed", cfg.optimizer.seed);
  if (auto out = r.get<std::string>("output_dir")) cfg.output_dir = *out;

  if (r.has("denoiser")) {
    detail::ObjectReader d(r.child("denoiser"), "denoiser");
    d.read("channels", cfg.denoiser.latent_shape.channels);
    d.read("height", cfg.denoiser.latent_shape.height);
    d.read("width", cfg.denoiser.latent_shape.width);
    d.read("num_layers", cfg.denoiser.num_layers);
    d.read("d_model", cfg.denoiser.d_model);
    d.read("d_proj", cfg.denoiser.d_proj);
    d.read("seed", cfg.denoiser.seed);
    d.finish();
    if (cfg.denoiser.latent_shape.size() < 2) d.fail("", "latent dimension channels*height*width must be at least 2");
    if (cfg.denoiser.num_layers < 1) d.fail("num_layers", "must be at least 1");
    if (cfg.denoiser.d_proj < 2) d.fail("d_proj", "must be at least 2");
    if (cfg.denoiser.d_model < 2) d.fail("d_model", "must be at least 2");
  }

  if (r.has("encoders")) {
    detail::ObjectReader e(r.child("encoders"), "encoders");
    e.read("count", cfg.encoders.count);
    e.read("d_text", cfg.encoders.d_text);
    e.read("vocab_size", cfg.encoders.vocab_size);
    e.read("seed", cfg.encoders.seed);
    e.finish();
    if (cfg.encoders.count < 1) e.fail("count", "must be at least 1");
    if (cfg.encoders.d_text < 4) e.fail("d_text", "must be at least 4");
    if (cfg.encoders.vocab_size < 2) e.fail("vocab_size", "must be at least 2");
  }
  cfg.denoiser.d_text = cfg.encoders.d_text;

  if (r.has("optimizer")) {
    detail::ObjectReader o(r.child("optimizer"), "optimizer");
    o.read("eta", cfg.optimizer.eta);
    o.read("iterations", cfg.optimizer.iterations);
    if (auto m = o.get<std::string>("mode")) cfg.optimizer.mode = parse_mode(*m, o);
    if (auto w = o.get<std::string>("weighting")) cfg.optimizer.weighting = parse_weighting(*w, o);
    o.read("max_timestep", cfg.optimizer.max_timestep);
    o.read("record_timing", cfg.optimizer.record_timing);
    o.finish();
    if (!std::isfinite(cfg.optimizer.eta)) o.fail("eta", "must be finite");
    if (cfg.optimizer.iterations < 1) o.fail("iterations", "must be at least 1");
  }

  if (r.has("objective")) {
    detail::ObjectReader o(r.child("objective"), "objective");
    o.read("guidance_scale", cfg.optimizer.guidance_scale);
    o.read("layer_weights", cfg.optimizer.layer_weights);
    o.read("w_min", cfg.optimizer.w_min);
    o.read("w_max", cfg.optimizer.w_max);
    o.finish();
    if (!(cfg.optimizer.w_min < cfg.optimizer.w_max)) o.fail("w_min", "must be less than w_max");
    for (double a : cfg.optimizer.layer_weights)
      if (!(a > 0.0)) o.fail("layer_weights", "entries must be positive");
  }
  if (cfg.optimizer.layer_weights.size() != cfg.denoiser.num_layers)
    throw ConfigError("objective.layer_weights: length " + std::to_string(cfg.optimizer.layer_weights.size()) +
                      " does not match denoiser.num_layers " + std::to_string(cfg.denoiser.num_layers));

  const bool inline_prompt = r.has("prompt");
  const bool file_prompt = r.has("prompt_path");
  if (inline_prompt == file_prompt) r.fail("prompt", "exactly one of \"prompt\" or \"prompt_path\" is required");
  if (inline_prompt) {
    cfg.prompt = parse_prompt(r.child("prompt"), "prompt");
  } else {
    std::filesystem::path p = r.get<std::string>("prompt_path").value();
    if (p.is_relative()) p = base_dir / p;
    cfg.prompt = load_prompt_file(p);
  }
  r.finish();

  for (std::size_t j = 0; j < cfg.prompt.size(); ++j)
    if (cfg.prompt.ids[j] >= cfg.encoders.vocab_size)
      throw ConfigError("prompt.ids[" + std::to_string(j) + "]: token id outside encoder vocabulary");
  if (cfg.prompt.pad_id >= cfg.encoders.vocab_size) throw ConfigError("prompt.pad_id: outside encoder vocabulary");
  return cfg;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  const std::string text = detail::read_text(path);
  const nlohmann::json root = parse_json_text(text, path.string());
  try {
    return parse_run_config(root, path.parent_path());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace oracle_noise
