#include "portcast/service.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "portcast/model_io.hpp"
#include "portcast/portcall.hpp"

namespace portcast {

using nlohmann::json;

struct PredictionService::Snapshot {
  GbdtModel model;
  HolidayCalendar holidays;
  std::string version;
  std::string created;  // model file creation timestamp
};

struct PredictionService::HttpState {
  httplib::Server server;
};

PredictionService::PredictionService(Timezone tz) : tz_(std::move(tz)) {}

PredictionService::~PredictionService() { stop(); }

std::shared_ptr<const PredictionService::Snapshot> PredictionService::snapshot() const {
  std::lock_guard<std::mutex> lock(mu_);
  return snap_;
}

void PredictionService::load_model(const std::string& model_path,
                                   const std::string& holiday_path) {
  try {
    auto snap = std::make_shared<Snapshot>();
    snap->model = load_gbdt_model(model_path, &snap->created);
    const FeatureSchema servable = build_schema(FeatureToggles{});
    if (!(snap->model.schema == servable)) {
      throw std::runtime_error(model_path +
                               ": model schema is not servable, expected the base feature set");
    }
    if (!holiday_path.empty()) snap->holidays = HolidayCalendar::load(holiday_path);

    std::ifstream raw(model_path, std::ios::binary);
    std::ostringstream buf;
    buf << raw.rdbuf();
    const std::uint64_t h = fnv1a64(buf.str());
    std::lock_guard<std::mutex> lock(mu_);
    load_count_ += 1;
    char tag[32];
    std::snprintf(tag, sizeof(tag), "m%llu-%08llx", static_cast<unsigned long long>(load_count_),
                  static_cast<unsigned long long>(h >> 32));
    snap->version = tag;
    snap_ = std::move(snap);
    last_error_.clear();
  } catch (const std::exception& e) {
    std::lock_guard<std::mutex> lock(mu_);
    last_error_ = e.what();
    throw;
  }
}

bool PredictionService::has_model() const { return snapshot() != nullptr; }

std::string PredictionService::model_version() const {
  const auto snap = snapshot();
  return snap ? snap->version : "";
}

// ---------------------------------------------------------------------------
// Request handling

namespace {

struct FieldErrors {
  std::vector<std::string> fields;
  std::string detail;

  void add(const std::string& field, const std::string& message) {
    fields.push_back(field);
    if (!detail.empty()) detail += "; ";
    detail += field + ": " + message;
  }
  bool empty() const { return fields.empty(); }
};

std::optional<CargoOperation> parse_operation(const json& j, const std::string& prefix,
                                              FieldErrors& errors) {
  if (j.is_null()) return std::nullopt;
  if (!j.is_object()) {
    errors.add(prefix, "must be an object");
    return std::nullopt;
  }
  CargoOperation op;
  auto label = [&](const char* key, std::optional<std::string>& out) {
    if (!j.contains(key) || j.at(key).is_null()) return;
    if (!j.at(key).is_string()) {
      errors.add(prefix + "." + key, "must be a string");
      return;
    }
    const std::string v = j.at(key).get<std::string>();
    if (!v.empty()) out = v;
  };
  label("cargo_type", op.cargo_type);
  label("fiscal_cargo_type", op.fiscal_cargo_type);
  label("berth", op.berth);
  if (j.contains("tonnage") && !j.at("tonnage").is_null()) {
    if (!j.at("tonnage").is_number()) {
      errors.add(prefix + ".tonnage", "must be a number");
    } else {
      const double t = j.at("tonnage").get<double>();
      if (!std::isfinite(t) || t < 0) {
        errors.add(prefix + ".tonnage", "must be finite and non-negative");
      } else {
        op.tonnage = t;
      }
    }
  }
  if (op.empty()) return std::nullopt;
  return op;
}

json feature_value_to_json(const FeatureValue& v, const ColumnDesc& desc) {
  if (is_missing(v)) return nullptr;
  if (std::holds_alternative<std::string>(v)) return value_label(v);
  if (desc.kind == ColumnKind::boolean) return value_number(v) != 0.0;
  return value_number(v);
}

std::string error_body(const std::string& message, const std::vector<std::string>& fields = {}) {
  json j;
  j["error"] = message;
  if (!fields.empty()) j["fields"] = fields;
  return j.dump(2);
}

}  // namespace

std::string PredictionService::predict_json(const std::string& request_body,
                                            int& http_status) const {
  const auto snap = snapshot();
  if (!snap) {
    http_status = 503;
    return error_body("no model loaded");
  }

  json req;
  try {
    req = json::parse(request_body);
  } catch (const json::exception& e) {
    http_status = 400;
    return error_body(std::string("invalid JSON: ") + e.what());
  }
  if (!req.is_object()) {
    http_status = 400;
    return error_body("request must be a JSON object");
  }

  FieldErrors errors;
  PortCall call;
  call.call_id = "request";
  if (!req.contains("arrival") || req.at("arrival").is_null()) {
    errors.add("arrival", "required");
  } else if (!req.at("arrival").is_string()) {
    errors.add("arrival", "must be an ISO-8601 UTC string");
  } else {
    const auto ts = parse_iso8601_utc(req.at("arrival").get<std::string>());
    if (!ts) {
      errors.add("arrival", "must look like 2018-03-24T23:00:00Z");
    } else {
      call.arrival = *ts;
    }
  }
  if (req.contains("unload")) call.unload = parse_operation(req.at("unload"), "unload", errors);
  if (req.contains("load")) call.load = parse_operation(req.at("load"), "load", errors);

  if (!errors.empty()) {
    http_status = 400;
    return error_body(errors.detail, errors.fields);
  }

  const std::vector<FeatureValue> row = base_features(call, snap->holidays, tz_);
  const TurnaroundHours hours = snap->model.predict(row);
  const double etd_epoch = static_cast<double>(*call.arrival) + hours.value * 3600.0;

  json resp;
  resp["predicted_turnaround_hours"] = hours.value;
  resp["arrival"] = format_iso8601_utc(*call.arrival);
  resp["etd"] = format_iso8601_utc(*call.arrival + std::llround(hours.value * 3600.0));
  resp["etd_epoch_seconds"] = etd_epoch;
  resp["model_version"] = snap->version;
  json features;
  for (std::size_t f = 0; f < row.size(); ++f) {
    features[snap->model.schema.columns[f].name] =
        feature_value_to_json(row[f], snap->model.schema.columns[f]);
  }
  resp["features"] = features;
  http_status = 200;
  return resp.dump(2);
}

std::string PredictionService::health_json() const {
  json j;
  j["status"] = "ok";
  j["model_loaded"] = has_model();
  return j.dump(2);
}

std::string PredictionService::model_info_json() const {
  const auto snap = snapshot();
  json j;
  {
    std::lock_guard<std::mutex> lock(mu_);
    j["last_load_error"] = last_error_;
  }
  j["model_loaded"] = snap != nullptr;
  if (!snap) return j.dump(2);
  j["version"] = snap->version;
  j["created"] = snap->created;
  j["n_trees"] = snap->model.trees.size();
  j["base_score"] = snap->model.base_score;
  j["timezone"] = tz_.name();
  json columns = json::array();
  for (const ColumnDesc& c : snap->model.schema.columns) {
    const char* kind = c.kind == ColumnKind::numeric
                           ? "numeric"
                           : (c.kind == ColumnKind::categorical ? "categorical" : "boolean");
    columns.push_back({{"name", c.name}, {"kind", kind}});
  }
  j["schema"] = columns;
  j["feature_importance"] = snap->model.feature_importance();
  return j.dump(2);
}

// ---------------------------------------------------------------------------
// HTTP

void PredictionService::serve_http(const std::string& host, int port) {
  {
    std::lock_guard<std::mutex> lock(mu_);
    if (http_) throw std::runtime_error("serve_http: already serving");
    http_ = std::make_unique<HttpState>();
  }
  httplib::Server& server = http_->server;

  server.Post("/predict", [this](const httplib::Request& req, httplib::Response& res) {
    int status = 500;
    const std::string body = predict_json(req.body, status);
    res.status = status;
    res.set_content(body, "application/json");
  });
  server.Get("/health", [this](const httplib::Request&, httplib::Response& res) {
    res.status = 200;
    res.set_content(health_json(), "application/json");
  });
  server.Get("/model/info", [this](const httplib::Request&, httplib::Response& res) {
    res.status = 200;
    res.set_content(model_info_json(), "application/json");
  });
  server.Post("/admin/reload", [this](const httplib::Request& req, httplib::Response& res) {
    try {
      const json j = json::parse(req.body);
      load_model(j.at("model").get<std::string>(), j.at("calendar").get<std::string>());
      res.status = 200;
      json ok;
      ok["reloaded"] = true;
      ok["version"] = model_version();
      res.set_content(ok.dump(2), "application/json");
    } catch (const std::exception& e) {
      res.status = 400;
      res.set_content(error_body(e.what()), "application/json");
    }
  });

  const bool ok = server.listen(host, port);
  {
    std::lock_guard<std::mutex> lock(mu_);
    http_.reset();
  }
  if (!ok) {
    throw std::runtime_error("cannot listen on " + host + ":" + std::to_string(port));
  }
}

// Signals the listen loop to return; the thread running serve_http must be
// joined before the service is destroyed.
void PredictionService::stop() {
  std::lock_guard<std::mutex> lock(mu_);
  if (http_) http_->server.stop();
}

bool PredictionService::wait_until_ready(double timeout_seconds) const {
  const auto deadline =
      std::chrono::steady_clock::now() + std::chrono::duration<double>(timeout_seconds);
  while (std::chrono::steady_clock::now() < deadline) {
    {
      std::lock_guard<std::mutex> lock(mu_);
      if (http_ && http_->server.is_running()) return true;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  return false;
}

}  // namespace portcast
