#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <string>

#include "portcast/features.hpp"
#include "portcast/gbdt.hpp"

namespace portcast {

// Serves turnaround predictions from an immutable model snapshot. Reloading
// swaps the snapshot atomically: every request is answered entirely by the
// snapshot it started with, and the response carries that snapshot's version
// tag. Only the base feature set is servable; ablation-feature models are
// rejected at load time because their data sources are not available per
// request.
class PredictionService {
 public:
  explicit PredictionService(Timezone tz = Timezone::from_name("Europe/Paris"));
  ~PredictionService();

  PredictionService(const PredictionService&) = delete;
  PredictionService& operator=(const PredictionService&) = delete;

  // Loads a model file and a holiday calendar. On failure the previous
  // snapshot keeps serving and the error is kept for /model/info.
  void load_model(const std::string& model_path, const std::string& holiday_path);

  bool has_model() const;
  std::string model_version() const;  // "" without a model

  // JSON-in/JSON-out prediction used by both the HTTP endpoint and the CLI.
  // `http_status` is 200 on success, 400 on a bad request (the body lists the
  // offending fields), 503 without a model.
  std::string predict_json(const std::string& request_body, int& http_status) const;

  std::string health_json() const;
  std::string model_info_json() const;

  // Blocks serving POST /predict, GET /health, GET /model/info and
  // POST /admin/reload until stop() is called from another thread.
  void serve_http(const std::string& host, int port);
  void stop();
  bool wait_until_ready(double timeout_seconds) const;

 private:
  struct Snapshot;
  struct HttpState;

  std::shared_ptr<const Snapshot> snapshot() const;

  Timezone tz_;
  mutable std::mutex mu_;
  std::shared_ptr<const Snapshot> snap_;
  std::string last_error_;
  std::uint64_t load_count_ = 0;
  std::unique_ptr<HttpState> http_;
};

}  // namespace portcast
