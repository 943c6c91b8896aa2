#include "portcast/model_io.hpp"

#include <cstdio>
#include <ctime>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace portcast {

namespace {

using nlohmann::json;

constexpr int kModelFileVersion = 1;

std::string checksum_hex(const std::string& data) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(data)));
  return buf;
}

// The creation timestamp lives in the envelope, outside the checksummed
// payload, so identical training runs still produce identical payload bytes.
void write_model_file(const char* format, const json& payload, const std::string& path) {
  json file;
  file["format"] = format;
  file["version"] = kModelFileVersion;
  file["created"] = format_iso8601_utc(static_cast<Timestamp>(std::time(nullptr)));
  file["checksum"] = checksum_hex(payload.dump());
  file["payload"] = payload;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << file.dump(2) << '\n';
}

json read_model_file(const char* format, const std::string& path, std::string* created) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  json file;
  try {
    in >> file;
  } catch (const json::exception& e) {
    throw std::runtime_error(path + ": not a valid model file: " + e.what());
  }
  if (!file.contains("format") || file["format"] != format) {
    throw std::runtime_error(path + ": unexpected model format, want '" + format + "'");
  }
  const int version = file.value("version", -1);
  if (version != kModelFileVersion) {
    throw std::runtime_error(path + ": unsupported model version " + std::to_string(version));
  }
  if (!file.contains("payload") || !file.contains("checksum")) {
    throw std::runtime_error(path + ": missing payload or checksum");
  }
  const std::string want = file["checksum"].get<std::string>();
  const std::string got = checksum_hex(file["payload"].dump());
  if (want != got) {
    throw std::runtime_error(path + ": checksum mismatch, file is corrupt");
  }
  if (created != nullptr) *created = file.value("created", "");
  return file["payload"];
}

json schema_to_json(const FeatureSchema& schema) {
  json cols = json::array();
  for (const ColumnDesc& c : schema.columns) {
    const char* kind = c.kind == ColumnKind::numeric
                           ? "numeric"
                           : (c.kind == ColumnKind::categorical ? "categorical" : "boolean");
    cols.push_back({{"name", c.name}, {"kind", kind}});
  }
  return json{{"columns", cols}, {"target", schema.target_name}};
}

FeatureSchema schema_from_json(const json& j) {
  FeatureSchema schema;
  schema.target_name = j.at("target").get<std::string>();
  for (const auto& cj : j.at("columns")) {
    ColumnDesc d;
    d.name = cj.at("name").get<std::string>();
    const std::string kind = cj.at("kind").get<std::string>();
    if (kind == "numeric") {
      d.kind = ColumnKind::numeric;
    } else if (kind == "categorical") {
      d.kind = ColumnKind::categorical;
    } else if (kind == "boolean") {
      d.kind = ColumnKind::boolean;
    } else {
      throw std::runtime_error("unknown column kind '" + kind + "'");
    }
    schema.columns.push_back(std::move(d));
  }
  return schema;
}

json config_to_json(const TrainConfig& c) {
  return json{{"n_trees", c.n_trees},
              {"learning_rate", c.learning_rate},
              {"max_depth", c.max_depth},
              {"min_samples_leaf", c.min_samples_leaf},
              {"l2_leaf_reg", c.l2_leaf_reg},
              {"ots_smoothing", c.ots_smoothing},
              {"permutation_seed", c.permutation_seed}};
}

TrainConfig config_from_json(const json& j) {
  TrainConfig c;
  c.n_trees = j.at("n_trees").get<int>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.max_depth = j.at("max_depth").get<int>();
  c.min_samples_leaf = j.at("min_samples_leaf").get<int>();
  c.l2_leaf_reg = j.at("l2_leaf_reg").get<double>();
  c.ots_smoothing = j.at("ots_smoothing").get<double>();
  c.permutation_seed = j.at("permutation_seed").get<std::uint64_t>();
  return c;
}

}  // namespace

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : data) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

void save_gbdt_model(const GbdtModel& model, const std::string& path) {
  json payload;
  payload["schema"] = schema_to_json(model.schema);
  payload["config"] = config_to_json(model.config);
  payload["base_score"] = model.base_score;
  payload["split_gain"] = model.split_gain;

  json enc;
  enc["prior"] = model.encoder.prior;
  enc["smoothing"] = model.encoder.smoothing;
  enc["permutation"] = model.encoder.permutation;
  json enc_cols = json::array();
  for (const auto& [column, stats] : model.encoder.columns) {
    json labels = json::array();
    for (const auto& [label, s] : stats) {
      labels.push_back({{"label", label}, {"sum", s.target_sum}, {"count", s.count}});
    }
    enc_cols.push_back({{"column", column}, {"labels", labels}});
  }
  enc["columns"] = enc_cols;
  payload["encoder"] = enc;

  json trees = json::array();
  for (const RegressionTree& tree : model.trees) {
    json nodes = json::array();
    for (const TreeNode& nd : tree.nodes) {
      nodes.push_back(json::array({nd.feature, nd.threshold, nd.missing_left ? 1 : 0, nd.gain,
                                   nd.left, nd.right, nd.value}));
    }
    trees.push_back(std::move(nodes));
  }
  payload["trees"] = trees;
  write_model_file("gbtm", payload, path);
}

GbdtModel load_gbdt_model(const std::string& path, std::string* created) {
  const json payload = read_model_file("gbtm", path, created);
  GbdtModel model;
  try {
    model.schema = schema_from_json(payload.at("schema"));
    model.config = config_from_json(payload.at("config"));
    model.base_score = payload.at("base_score").get<double>();
    model.split_gain = payload.at("split_gain").get<std::vector<double>>();

    const json& enc = payload.at("encoder");
    model.encoder.prior = enc.at("prior").get<double>();
    model.encoder.smoothing = enc.at("smoothing").get<double>();
    model.encoder.permutation = enc.at("permutation").get<std::vector<std::uint32_t>>();
    for (const auto& cj : enc.at("columns")) {
      auto& stats = model.encoder.columns[cj.at("column").get<int>()];
      for (const auto& lj : cj.at("labels")) {
        CategoryStats s;
        s.target_sum = lj.at("sum").get<double>();
        s.count = lj.at("count").get<std::int64_t>();
        stats.emplace(lj.at("label").get<std::string>(), s);
      }
    }

    for (const auto& tj : payload.at("trees")) {
      RegressionTree tree;
      for (const auto& nj : tj) {
        TreeNode nd;
        nd.feature = nj.at(0).get<int>();
        nd.threshold = nj.at(1).get<double>();
        nd.missing_left = nj.at(2).get<int>() != 0;
        nd.gain = nj.at(3).get<double>();
        nd.left = nj.at(4).get<int>();
        nd.right = nj.at(5).get<int>();
        nd.value = nj.at(6).get<double>();
        tree.nodes.push_back(nd);
      }
      model.trees.push_back(std::move(tree));
    }
  } catch (const json::exception& e) {
    throw std::runtime_error(path + ": malformed model payload: " + e.what());
  }
  return model;
}

void save_linear_model(const LinearModel& model, const std::string& path) {
  json payload;
  payload["schema"] = schema_to_json(model.schema);
  payload["ridge_lambda"] = model.ridge_lambda;
  payload["intercept"] = model.intercept;
  payload["weights"] = model.weights;
  json numeric = json::array();
  for (const auto& nc : model.numeric) {
    numeric.push_back({{"mean", nc.mean}, {"std", nc.stddev}, {"retained", nc.retained}});
  }
  payload["numeric"] = numeric;
  payload["vocab"] = model.vocab;
  write_model_file("linm", payload, path);
}

TrainConfig load_train_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error(path + ": invalid JSON: " + e.what());
  }
  TrainConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "n_trees") {
      c.n_trees = value.get<int>();
    } else if (key == "learning_rate") {
      c.learning_rate = value.get<double>();
    } else if (key == "max_depth") {
      c.max_depth = value.get<int>();
    } else if (key == "min_samples_leaf") {
      c.min_samples_leaf = value.get<int>();
    } else if (key == "l2_leaf_reg") {
      c.l2_leaf_reg = value.get<double>();
    } else if (key == "ots_smoothing") {
      c.ots_smoothing = value.get<double>();
    } else if (key == "permutation_seed") {
      c.permutation_seed = value.get<std::uint64_t>();
    } else {
      throw std::runtime_error(path + ": unknown training option '" + key + "'");
    }
  }
  c.validate();
  return c;
}

LinearModel load_linear_model(const std::string& path, std::string* created) {
  const json payload = read_model_file("linm", path, created);
  LinearModel model;
  try {
    model.schema = schema_from_json(payload.at("schema"));
    model.ridge_lambda = payload.at("ridge_lambda").get<double>();
    model.intercept = payload.at("intercept").get<double>();
    model.weights = payload.at("weights").get<std::vector<double>>();
    for (const auto& nj : payload.at("numeric")) {
      LinearModel::NumericColumn nc;
      nc.mean = nj.at("mean").get<double>();
      nc.stddev = nj.at("std").get<double>();
      nc.retained = nj.at("retained").get<bool>();
      model.numeric.push_back(nc);
    }
    model.vocab = payload.at("vocab").get<std::vector<std::vector<std::string>>>();
  } catch (const json::exception& e) {
    throw std::runtime_error(path + ": malformed model payload: " + e.what());
  }
  return model;
}

}  // namespace portcast
