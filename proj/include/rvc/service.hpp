#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "rvc/config.hpp"

namespace rvc {

struct HttpReply {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

using QueryParams = std::map<std::string, std::string>;

/// Handlers behind the /v1 endpoints:
///
///     GET  /v1/trials                      trial list
///     GET  /v1/trials/{id}                 segment geometry and observed images
///     POST /v1/trials/{id}/responses       {"assignment": [0,1,...], "session": "..."}
///     GET  /v1/trials/{id}/prediction      ?seed=N, model assignment
///     GET  /v1/sessions/{token}            responses logged under a token
///
/// Bodies are JSON. Images are base64 P4. Segment endpoints are in the unit
/// frame with y growing upward; segment ids are symbol positions in S_3.
/// Only the session store is mutable; handlers may run concurrently.
class Service {
 public:
  Service(RunConfig config, std::vector<GenerationTrial> trials);

  const RunConfig& config() const { return config_; }
  const std::vector<GenerationTrial>& trials() const { return trials_; }
  /// Model configuration used for predictions (generation symbol cap applied).
  const ModelConfig& model() const { return model_; }

  HttpReply list_trials() const;
  HttpReply get_trial(std::string_view id) const;
  HttpReply post_response(std::string_view id, std::string_view body);
  HttpReply get_prediction(std::string_view id, const QueryParams& query) const;
  HttpReply get_session(std::string_view token) const;

  /// Routes one request to its handler; 404 on unknown paths, 405 on wrong methods.
  HttpReply handle(std::string_view method, std::string_view path, const QueryParams& query,
                   std::string_view body);

  /// Model assignment for a trial: one chain of the configured length, then the greedy pass.
  std::vector<std::uint8_t> predict(const GenerationTrial& trial, std::uint64_t seed) const;

 private:
  const GenerationTrial* find(std::string_view id) const;

  struct LoggedResponse {
    std::string trial;
    std::vector<std::uint8_t> assignment;
    GenerationScore score;
  };

  RunConfig config_;
  ModelConfig model_;
  std::vector<GenerationTrial> trials_;
  mutable std::mutex sessions_mutex_;
  std::map<std::string, std::vector<LoggedResponse>> sessions_;
  std::uint64_t next_session_ = 0;
};

/// Generation trials of both conditions, ids prefixed "inc-" and "blk-".
std::vector<GenerationTrial> service_trials(const RunConfig& config);

}  // namespace rvc
