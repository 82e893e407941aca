#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "bottrinet/common.hpp"
#include "bottrinet/corpus.hpp"
#include "bottrinet/experiment.hpp"

namespace bottrinet {

namespace fs = std::filesystem;

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Writes to a sibling temp file, then renames it over `path`.
inline void write_file_atomic(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) throw Error("write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw Error("cannot move '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
  }
}

inline Dataset load_dataset(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  try {
    return ingest_dataset(in);
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

inline void save_dataset(const Dataset& ds, const fs::path& path) {
  std::ostringstream out;
  emit_dataset(ds, out);
  write_file_atomic(path, out.str());
}

inline nlohmann::json load_json(const fs::path& path) {
  const std::string text = read_file(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

inline void save_json(const nlohmann::json& j, const fs::path& path) { write_file_atomic(path, j.dump(1) + "\n"); }

inline constexpr const char* kBundleWordVec = "wordvec.json";
inline constexpr const char* kBundleNetwork = "network.json";
inline constexpr const char* kBundleForest = "forest.json";
inline constexpr const char* kBundleConfig = "run_config.json";

/// Bundle directory: the three model files plus the run configuration.
inline void save_bundle(const ModelBundle& b, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InputError("cannot create directory '" + dir.string() + "': " + ec.message());
  save_json(b.table.to_json(), dir / kBundleWordVec);
  nlohmann::json net = b.network.to_json();
  net["config"] = b.config.triplet;
  save_json(net, dir / kBundleNetwork);
  save_json(b.forest.to_json(), dir / kBundleForest);
  save_json({{"format_version", 1},
             {"ground_truth", b.ground_truth},
             {"config", b.config.to_json()},
             {"config_fingerprint", b.config.fingerprint()}},
            dir / kBundleConfig);
}

inline ModelBundle load_bundle(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw InputError("model bundle '" + dir.string() + "' is not a directory");
  ModelBundle b;
  const auto cfg = load_json(dir / kBundleConfig);
  try {
    b.ground_truth = cfg.at("ground_truth").get<std::string>();
    b.config = PipelineConfig::from_json(cfg.at("config"));
  } catch (const nlohmann::json::exception& e) {
    throw InputError((dir / kBundleConfig).string() + ": " + e.what());
  }
  b.table = EmbeddingTable::from_json(load_json(dir / kBundleWordVec));
  b.network = Network::from_json(load_json(dir / kBundleNetwork));
  b.forest = ForestModel::from_json(load_json(dir / kBundleForest));
  if (b.network.dim() != b.table.dim() || b.forest.dim() != b.table.dim())
    throw InputError("model bundle '" + dir.string() + "': component dimensions disagree");
  return b;
}

}  // namespace bottrinet
