// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "aluc/engine.hpp"
#include "aluc/features.hpp"
#include "aluc/raster.hpp"

namespace httplib {
class Server;
}

namespace aluc {

/// An image sessions can be opened on.
struct RasterSource {
  std::optional<SceneSpec> scene;
  std::filesystem::path raster;
  std::filesystem::path labels;  // optional ground truth (enables kappa in curves)
  int classes = 0;
  std::vector<std::string> names;  // class names, default "class N"
};

struct ServiceConfig {
  std::map<std::string, RasterSource> rasters;
  MorphConfig morph;
  EngineConfig engine;
  bool synchronous_training = false;  // train inside the answering request (tests)
  std::filesystem::path static_dir;   // optional directory served at /
};

/// {"rasters": {id: {"scene": {...}} | {"raster", "labels"?, "classes"}, "names"?}, "features",
/// "engine", "synchronous_training", "static_dir"}.
ServiceConfig service_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});

enum class Phase { seeding, training, awaiting_label, done };
const char* to_string(Phase phase) noexcept;

/// HTTP-independent session manager. Every method returns JSON views and throws
/// aluc::Error for failures; the HTTP layer maps error codes to status codes.
class LabelingService {
 public:
  explicit LabelingService(ServiceConfig config);
  ~LabelingService();
  LabelingService(const LabelingService&) = delete;
  LabelingService& operator=(const LabelingService&) = delete;

  /// {"raster": id, "engine": {...overrides}} -> SessionView
  nlohmann::json create_session(const nlohmann::json& request);
  nlohmann::json view(const std::string& id) const;
  /// SessionView with the current query (or none).
  nlohmann::json query(const std::string& id) const;
  /// Seed click during seeding, query answer afterwards. `label` is a class index or
  /// the string "unknown".
  nlohmann::json answer(const std::string& id, int x, int y, const nlohmann::json& label);
  std::vector<std::uint8_t> classification_png(const std::string& id) const;
  std::vector<std::uint8_t> confidence_png(const std::string& id) const;
  /// Per-band values at (x, y) and an RGB composite PNG of the (2r+1)^2 window.
  nlohmann::json patch(const std::string& id, int x, int y, int r) const;
  std::vector<std::uint8_t> patch_png(const std::string& id, int x, int y, int r) const;
  std::string curves_csv(const std::string& id) const;
  nlohmann::json rasters() const;
  /// Copy of the engine session (tests and exports).
  Session session_state(const std::string& id) const;
  /// Blocks until no training is running for the session.
  void wait_idle(const std::string& id) const;

  struct Data;
  struct Live;

 private:
  std::shared_ptr<Live> find(const std::string& id) const;
  std::shared_ptr<const Data> data_for(const std::string& raster_id);

  ServiceConfig config_;
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<const Data>> data_;
  std::map<std::string, std::shared_ptr<Live>> sessions_;
  std::size_t next_id_ = 1;
};

/// HTTP + JSON front of a LabelingService.
class HttpServer {
 public:
  explicit HttpServer(LabelingService& service, const std::filesystem::path& static_dir = {});
  ~HttpServer();
  bool listen(const std::string& host, int port);
  /// Binds an ephemeral port and returns it; call serve() afterwards.
  int bind_any(const std::string& host);
  bool serve();
  void stop();

 private:
  LabelingService& service_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace aluc
