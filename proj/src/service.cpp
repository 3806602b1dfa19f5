// SPDX-License-Identifier: Apache-2.0
#include "aluc/service.hpp"

#include <algorithm>
#include <cmath>
#include <condition_variable>
#include <limits>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "aluc/error.hpp"
#include "aluc/experiment.hpp"
#include "aluc/log.hpp"
#include "aluc/metrics.hpp"
#include "aluc/png.hpp"

namespace aluc {

const char* to_string(Phase phase) noexcept {
  switch (phase) {
    case Phase::seeding: return "seeding";
    case Phase::training: return "training";
    case Phase::awaiting_label: return "awaiting_label";
    case Phase::done: return "done";
  }
  return "?";
}

ServiceConfig service_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw Error(Errc::format, "service config: expected an object");
  ServiceConfig c;
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_relative() && !base_dir.empty() ? base_dir / path : path;
  };
  try {
    if (!j.contains("rasters") || !j["rasters"].is_object() || j["rasters"].empty())
      throw Error(Errc::format, "rasters: at least one raster is required");
    for (const auto& [id, r] : j["rasters"].items()) {
      RasterSource src;
      if (r.contains("scene")) {
        src.scene = scene_spec_from_json(r["scene"]);
        src.classes = src.scene->classes;
      } else {
        src.raster = resolve(r.at("raster").get<std::string>());
        if (r.contains("labels")) src.labels = resolve(r["labels"].get<std::string>());
        src.classes = r.at("classes").get<int>();
      }
      if (src.classes < 1) throw Error(Errc::format, "rasters." + id + ".classes: must be >= 1");
      if (r.contains("names")) src.names = r["names"].get<std::vector<std::string>>();
      if (!src.names.empty() && static_cast<int>(src.names.size()) != src.classes)
        throw Error(Errc::format, "rasters." + id + ".names: one name per class");
      c.rasters.emplace(id, std::move(src));
    }
    if (j.contains("features") && j["features"].contains("radii"))
      c.morph.radii = j["features"]["radii"].get<std::vector<int>>();
    c.morph.validate();
    if (j.contains("engine")) c.engine = engine_config_from_json(j["engine"]);
    c.synchronous_training = j.value("synchronous_training", false);
    if (j.contains("static_dir")) c.static_dir = resolve(j["static_dir"].get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::format, std::string("service config: ") + e.what());
  }
  return c;
}

struct LabelingService::Data {
  Raster raster;
  FeatureStack features;
  std::optional<LabelMap> truth;
  int omega = 0;
  std::vector<std::string> names;
  std::vector<float> band_min, band_max;
};

struct LabelingService::Live {
  std::string id;
  std::string raster_id;
  std::shared_ptr<const Data> data;
  mutable std::mutex mutex;
  mutable std::condition_variable idle;
  Session session;
  Phase phase = Phase::seeding;
  std::shared_ptr<const IterationPlan> plan;
  BatchWalk walk;
  QueryBridge bridge;
  std::vector<double> kappa, oa;
  std::vector<std::string> warnings;
  std::string error;
  bool training = false;
  std::thread worker;
};

namespace {

using Live = LabelingService::Live;
using Data = LabelingService::Data;
using Lock = std::unique_lock<std::mutex>;

std::string hex_color(const Rgb& c) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", c[0], c[1], c[2]);
  return buf;
}

std::vector<int> seeds_per_class(const Session& s) {
  std::vector<int> counts(static_cast<std::size_t>(s.omega), 0);
  for (int label : s.labels) ++counts[static_cast<std::size_t>(label - 1)];
  return counts;
}

nlohmann::json make_view(const Live& live) {
  const Session& s = live.session;
  const Data& d = *live.data;
  nlohmann::json legend = nlohmann::json::array();
  for (int c = 1; c <= d.omega; ++c)
    legend.push_back({{"index", c}, {"name", d.names[static_cast<std::size_t>(c - 1)]}, {"color", hex_color(legend_color(c))}});
  std::size_t refused = 0;
  for (auto e : s.excluded) refused += e;
  nlohmann::json view{{"id", live.id},
                      {"raster", live.raster_id},
                      {"width", s.width},
                      {"height", s.height},
                      {"iteration", s.iteration},
                      {"phase", to_string(live.phase)},
                      {"heuristic", std::string(to_string(s.config.heuristic))},
                      {"gated", s.config.gated},
                      {"counts",
                       {{"labeled", s.labeled.size()},
                        {"confidence", s.confidence.size()},
                        {"positives", s.confidence.positives},
                        {"negatives", s.confidence.negatives},
                        {"pool", s.pool_size()},
                        {"batch", s.batch.size()},
                        {"refused", refused},
                        {"effort", s.effort()}}},
                      {"legend", legend},
                      {"query", nullptr},
                      {"maps_available", live.plan != nullptr},
                      {"warnings", live.warnings}};
  if (live.phase == Phase::seeding) {
    const auto counts = seeds_per_class(s);
    std::vector<int> remaining;
    for (int c : counts) remaining.push_back(std::max(0, s.config.seeds_per_class - c));
    view["seeding"] = {{"per_class", s.config.seeds_per_class}, {"remaining", remaining}};
  }
  if (auto q = live.bridge.outstanding(); q && live.phase == Phase::awaiting_label) {
    const int x = static_cast<int>(*q % static_cast<std::size_t>(s.width));
    const int y = static_cast<int>(*q / static_cast<std::size_t>(s.width));
    constexpr int r = 8;
    view["query"] = {{"x", x},
                     {"y", y},
                     {"score", live.walk.presented_score},
                     {"confidence", live.walk.presented_confidence},
                     {"patch",
                      {{"x0", std::max(0, x - r)},
                       {"y0", std::max(0, y - r)},
                       {"x1", std::min(s.width - 1, x + r)},
                       {"y1", std::min(s.height - 1, y + r)}}}};
  }
  if (!live.error.empty()) view["error"] = live.error;
  return view;
}

// With the lock held: move the walk forward; close iterations that cannot present
// anything. Returns true when a new plan must be trained.
bool advance(Live& live) {
  const IterationPlan& plan = *live.plan;
  if (auto q = next_query(live.session, plan.ranking, plan.ranked_scores, plan.confidence, live.walk)) {
    live.bridge.present(*q);
    live.phase = Phase::awaiting_label;
    return false;
  }
  const bool partial = !batch_full(live.session);
  if (partial)
    live.warnings.push_back("iteration " + std::to_string(live.session.iteration) + " closed with a partial batch");
  finish_iteration(live.session, plan, partial);
  if (live.session.done()) {
    live.phase = Phase::done;
    return false;
  }
  live.phase = Phase::training;
  return true;
}

// Trains until a query is presented or the session ends. Releases the lock while
// training; the phase stays "training" meanwhile so no answer can interleave.
void train_loop(Live& live, Lock& lock) {
  live.training = true;
  live.phase = Phase::training;
  try {
    for (;;) {
      const Session snapshot = live.session;
      lock.unlock();
      auto plan = std::make_shared<const IterationPlan>(prepare_iteration(snapshot, live.data->features));
      lock.lock();
      live.plan = plan;
      live.walk = BatchWalk{};
      if (live.data->truth) {
        const ConfusionMatrix cm = confusion_matrix(plan->predicted, *live.data->truth, live.data->omega);
        live.kappa.push_back(cohen_kappa(cm));
        live.oa.push_back(overall_accuracy(cm));
      } else {
        live.kappa.push_back(std::numeric_limits<double>::quiet_NaN());
        live.oa.push_back(std::numeric_limits<double>::quiet_NaN());
      }
      if (!advance(live)) break;
    }
  } catch (const std::exception& e) {
    if (!lock.owns_lock()) lock.lock();
    live.error = e.what();
    live.phase = Phase::done;
    logger().error("session {}: training failed: {}", live.id, e.what());
  }
  live.training = false;
  live.idle.notify_all();
}

void start_training(Live& live, Lock& lock, bool synchronous) {
  if (synchronous) {
    train_loop(live, lock);
    return;
  }
  if (live.worker.joinable()) live.worker.join();
  live.training = true;
  live.phase = Phase::training;
  live.worker = std::thread([&live] {
    Lock l(live.mutex);
    train_loop(live, l);
  });
}

std::size_t pixel_of(const Session& s, int x, int y) {
  if (x < 0 || y < 0 || x >= s.width || y >= s.height)
    throw Error(Errc::invalid_argument, "pixel (" + std::to_string(x) + ", " + std::to_string(y) + ") is outside the image");
  return static_cast<std::size_t>(y) * static_cast<std::size_t>(s.width) + static_cast<std::size_t>(x);
}

}  // namespace

LabelingService::LabelingService(ServiceConfig config) : config_(std::move(config)) {
  if (config_.rasters.empty()) throw Error(Errc::invalid_argument, "service needs at least one raster");
}

LabelingService::~LabelingService() {
  std::map<std::string, std::shared_ptr<Live>> sessions;
  {
    std::lock_guard lock(mutex_);
    sessions.swap(sessions_);
  }
  for (auto& [id, live] : sessions)
    if (live->worker.joinable()) live->worker.join();
}

std::shared_ptr<const LabelingService::Data> LabelingService::data_for(const std::string& raster_id) {
  std::lock_guard lock(mutex_);
  if (auto it = data_.find(raster_id); it != data_.end()) return it->second;
  auto src = config_.rasters.find(raster_id);
  if (src == config_.rasters.end()) throw Error(Errc::unknown_raster, "unknown raster '" + raster_id + "'");
  auto d = std::make_shared<Data>();
  const RasterSource& rs = src->second;
  d->omega = rs.classes;
  if (rs.scene) {
    Scene scene = generate_synthetic_scene(*rs.scene);
    d->raster = std::move(scene.raster);
    d->truth = std::move(scene.labels);
  } else {
    d->raster = load_raster(rs.raster);
    if (!rs.labels.empty()) d->truth = load_label_map(rs.labels, rs.classes);
  }
  d->features = build_feature_stack(d->raster, config_.morph);
  d->names = rs.names;
  while (d->names.size() < static_cast<std::size_t>(d->omega)) d->names.push_back("class " + std::to_string(d->names.size() + 1));
  for (int b = 0; b < d->raster.bands; ++b) {
    const auto band = d->raster.band(b);
    const auto [lo, hi] = std::minmax_element(band.begin(), band.end());
    d->band_min.push_back(*lo);
    d->band_max.push_back(*hi);
  }
  data_.emplace(raster_id, d);
  return d;
}

std::shared_ptr<LabelingService::Live> LabelingService::find(const std::string& id) const {
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw Error(Errc::unknown_session, "unknown session '" + id + "'");
  return it->second;
}

nlohmann::json LabelingService::rasters() const {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& [id, src] : config_.rasters)
    out.push_back({{"id", id}, {"classes", src.classes}, {"synthetic", src.scene.has_value()}});
  return out;
}

nlohmann::json LabelingService::create_session(const nlohmann::json& request) {
  if (!request.is_object() || !request.contains("raster") || !request["raster"].is_string())
    throw Error(Errc::invalid_argument, "request needs a \"raster\" id");
  const std::string raster_id = request["raster"].get<std::string>();
  auto data = data_for(raster_id);
  EngineConfig engine = config_.engine;
  if (request.contains("engine")) {
    try {
      engine = engine_config_from_json(request["engine"], engine);
    } catch (const Error& e) {
      throw Error(Errc::invalid_argument, e.what());
    }
  }
  auto live = std::make_shared<Live>();
  live->raster_id = raster_id;
  live->data = data;
  live->session = init_session_interactive(data->features, data->omega, engine);
  {
    std::lock_guard lock(mutex_);
    live->id = "s" + std::to_string(next_id_++);
    sessions_.emplace(live->id, live);
  }
  std::lock_guard lock(live->mutex);
  return make_view(*live);
}

nlohmann::json LabelingService::view(const std::string& id) const {
  auto live = find(id);
  std::lock_guard lock(live->mutex);
  return make_view(*live);
}

nlohmann::json LabelingService::query(const std::string& id) const { return view(id); }

nlohmann::json LabelingService::answer(const std::string& id, int x, int y, const nlohmann::json& label) {
  auto live = find(id);
  Lock lock(live->mutex);
  Session& s = live->session;
  const std::size_t pixel = pixel_of(s, x, y);
  OracleAnswer ans = OracleAnswer::unknown();
  if (label.is_string() && label.get<std::string>() == "unknown") {
    ans = OracleAnswer::unknown();
  } else if (label.is_number_integer()) {
    const int c = label.get<int>();
    if (c < 1 || c > s.omega) throw Error(Errc::invalid_argument, "label must be 1.." + std::to_string(s.omega) + " or \"unknown\"");
    ans = OracleAnswer::label(c);
  } else {
    throw Error(Errc::invalid_argument, "label must be a class index or \"unknown\"");
  }

  switch (live->phase) {
    case Phase::seeding: {
      if (ans.is_unknown()) throw Error(Errc::invalid_argument, "seeds need a class label");
      const auto counts = seeds_per_class(s);
      if (counts[static_cast<std::size_t>(ans.label() - 1)] >= s.config.seeds_per_class)
        throw Error(Errc::invalid_argument, "class " + std::to_string(ans.label()) + " already has its seeds");
      add_seed(s, pixel, ans.label());
      const auto after = seeds_per_class(s);
      if (std::all_of(after.begin(), after.end(), [&](int c) { return c >= s.config.seeds_per_class; }))
        start_training(*live, lock, config_.synchronous_training);
      break;
    }
    case Phase::awaiting_label: {
      for (const auto& r : s.log)
        if (r.pixel == pixel && r.outcome != Outcome::masked)
          throw Error(Errc::duplicate, "pixel (" + std::to_string(x) + ", " + std::to_string(y) + ") was already answered");
      live->bridge.submit(pixel, ans);
      const auto taken = live->bridge.take();
      apply_answer(s, live->walk, taken->first, taken->second);
      if (advance(*live)) start_training(*live, lock, config_.synchronous_training);
      break;
    }
    case Phase::training:
      throw Error(Errc::wrong_phase, "the session is training; retry shortly");
    case Phase::done:
      throw Error(Errc::wrong_phase, "the session is finished");
  }
  if (!lock.owns_lock()) lock.lock();
  return make_view(*live);
}

std::vector<std::uint8_t> LabelingService::classification_png(const std::string& id) const {
  auto live = find(id);
  std::lock_guard lock(live->mutex);
  if (!live->plan) throw Error(Errc::wrong_phase, "no classification map before the first training");
  return aluc::classification_png(live->session.width, live->session.height, live->plan->predicted, live->session.omega);
}

std::vector<std::uint8_t> LabelingService::confidence_png(const std::string& id) const {
  auto live = find(id);
  std::lock_guard lock(live->mutex);
  if (!live->plan) throw Error(Errc::wrong_phase, "no confidence map before the first training");
  return aluc::confidence_png(live->session.width, live->session.height, live->plan->confidence);
}

namespace {

struct Window {
  int x0, y0, x1, y1;
};

Window clip_window(const Raster& r, int x, int y, int radius) {
  if (x < 0 || y < 0 || x >= r.width || y >= r.height) throw Error(Errc::invalid_argument, "patch center is outside the image");
  if (radius < 0 || radius > 64) throw Error(Errc::invalid_argument, "patch radius must be 0..64");
  return {std::max(0, x - radius), std::max(0, y - radius), std::min(r.width - 1, x + radius), std::min(r.height - 1, y + radius)};
}

}  // namespace

std::vector<std::uint8_t> LabelingService::patch_png(const std::string& id, int x, int y, int r) const {
  auto live = find(id);
  const Data& d = *live->data;
  const Window w = clip_window(d.raster, x, y, r);
  Image8 img{w.x1 - w.x0 + 1, w.y1 - w.y0 + 1, 3, {}};
  for (int row = w.y0; row <= w.y1; ++row) {
    for (int col = w.x0; col <= w.x1; ++col) {
      for (int ch = 0; ch < 3; ++ch) {
        const int b = std::min(ch, d.raster.bands - 1);
        const double span = static_cast<double>(d.band_max[b]) - d.band_min[b];
        const double v = span > 0 ? (d.raster.at(b, row, col) - d.band_min[b]) / span : 0.5;
        img.pixels.push_back(static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)));
      }
    }
  }
  return encode_png(img);
}

nlohmann::json LabelingService::patch(const std::string& id, int x, int y, int r) const {
  auto live = find(id);
  const Data& d = *live->data;
  const Window w = clip_window(d.raster, x, y, r);
  std::vector<double> bands;
  for (int b = 0; b < d.raster.bands; ++b) bands.push_back(d.raster.at(b, y, x));
  const auto png = patch_png(id, x, y, r);
  return {{"x", x},
          {"y", y},
          {"r", r},
          {"extent", {{"x0", w.x0}, {"y0", w.y0}, {"x1", w.x1}, {"y1", w.y1}}},
          {"bands", bands},
          {"png", httplib::detail::base64_encode(std::string(png.begin(), png.end()))}};
}

std::string LabelingService::curves_csv(const std::string& id) const {
  auto live = find(id);
  std::lock_guard lock(live->mutex);
  const Session& s = live->session;
  const MethodSpec method{s.config.heuristic, s.config.gated};
  // Only iterations whose batch has closed have complete accounting.
  const std::size_t closed = static_cast<std::size_t>(s.iteration - 1);
  const std::size_t k = std::min(closed, live->kappa.size());
  RunCurve run{method.name(), s.config.seed,
               curve_from_session(s, std::span(live->kappa).first(k), std::span(live->oa).first(k))};
  std::ostringstream out;
  write_curves_csv(std::span(&run, 1), out);
  return out.str();
}

Session LabelingService::session_state(const std::string& id) const {
  auto live = find(id);
  std::lock_guard lock(live->mutex);
  return live->session;
}

void LabelingService::wait_idle(const std::string& id) const {
  auto live = find(id);
  Lock lock(live->mutex);
  live->idle.wait(lock, [&] { return !live->training; });
}

// ---------------------------------------------------------------------------
// HTTP

namespace {

int status_for(Errc code) {
  switch (code) {
    case Errc::unknown_session:
    case Errc::unknown_raster: return 404;
    case Errc::stale_query:
    case Errc::duplicate:
    case Errc::wrong_phase: return 409;
    case Errc::invalid_argument:
    case Errc::format:
    case Errc::size_mismatch: return 400;
    default: return 500;
  }
}

void send_error(httplib::Response& res, int status, const std::string& code, const std::string& detail) {
  res.status = status;
  res.set_content(nlohmann::json{{"error", code}, {"detail", detail}}.dump(), "application/json");
}

template <typename Fn>
httplib::Server::Handler guarded(Fn fn) {
  return [fn](const httplib::Request& req, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Origin", "*");
    try {
      fn(req, res);
    } catch (const Error& e) {
      send_error(res, status_for(e.code()), errc_name(e.code()), e.what());
    } catch (const nlohmann::json::exception& e) {
      send_error(res, 400, "format", e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, "internal", e.what());
    }
  };
}

void send_json(httplib::Response& res, const nlohmann::json& j, int status = 200) {
  res.status = status;
  res.set_content(j.dump(), "application/json");
}

int int_param(const httplib::Request& req, const char* name) {
  if (!req.has_param(name)) throw Error(Errc::invalid_argument, std::string("missing query parameter '") + name + "'");
  const std::string v = req.get_param_value(name);
  try {
    std::size_t used = 0;
    const int out = std::stoi(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::logic_error&) {
    throw Error(Errc::invalid_argument, std::string("query parameter '") + name + "' must be an integer");
  }
}

nlohmann::json parse_body(const httplib::Request& req) {
  try {
    return nlohmann::json::parse(req.body);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::format, std::string("request body: ") + e.what());
  }
}

}  // namespace

HttpServer::HttpServer(LabelingService& service, const std::filesystem::path& static_dir)
    : service_(service), server_(std::make_unique<httplib::Server>()) {
  auto& s = *server_;
  s.Get("/rasters", guarded([this](const httplib::Request&, httplib::Response& res) { send_json(res, service_.rasters()); }));
  s.Post("/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
           send_json(res, service_.create_session(parse_body(req)), 201);
         }));
  s.Get(R"(/sessions/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
          send_json(res, service_.view(req.matches[1]));
        }));
  s.Get(R"(/sessions/([^/]+)/query)", guarded([this](const httplib::Request& req, httplib::Response& res) {
          send_json(res, service_.query(req.matches[1]));
        }));
  s.Post(R"(/sessions/([^/]+)/answer)", guarded([this](const httplib::Request& req, httplib::Response& res) {
           const auto body = parse_body(req);
           if (!body.is_object() || !body.contains("x") || !body.contains("y") || !body.contains("label"))
             throw Error(Errc::invalid_argument, "answer needs x, y and label");
           if (!body["x"].is_number_integer() || !body["y"].is_number_integer())
             throw Error(Errc::invalid_argument, "x and y must be integers");
           send_json(res, service_.answer(req.matches[1], body["x"].get<int>(), body["y"].get<int>(), body["label"]));
         }));
  s.Get(R"(/sessions/([^/]+)/maps/(classification|confidence))",
        guarded([this](const httplib::Request& req, httplib::Response& res) {
          const auto png = req.matches[2] == "classification" ? service_.classification_png(req.matches[1])
                                                             : service_.confidence_png(req.matches[1]);
          res.set_content(std::string(png.begin(), png.end()), "image/png");
        }));
  s.Get(R"(/sessions/([^/]+)/patch)", guarded([this](const httplib::Request& req, httplib::Response& res) {
          const int x = int_param(req, "x"), y = int_param(req, "y");
          const int r = req.has_param("r") ? int_param(req, "r") : 8;
          if (req.has_param("format") && req.get_param_value("format") == "png") {
            const auto png = service_.patch_png(req.matches[1], x, y, r);
            res.set_content(std::string(png.begin(), png.end()), "image/png");
          } else {
            send_json(res, service_.patch(req.matches[1], x, y, r));
          }
        }));
  s.Get(R"(/sessions/([^/]+)/curves)", guarded([this](const httplib::Request& req, httplib::Response& res) {
          res.set_content(service_.curves_csv(req.matches[1]), "text/csv");
        }));
  s.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Origin", "*");
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });
  if (!static_dir.empty()) s.set_mount_point("/", static_dir.string());
}

HttpServer::~HttpServer() { stop(); }

bool HttpServer::listen(const std::string& host, int port) { return server_->listen(host, port); }

int HttpServer::bind_any(const std::string& host) { return server_->bind_to_any_port(host); }

bool HttpServer::serve() { return server_->listen_after_bind(); }

void HttpServer::stop() {
  if (server_) server_->stop();
}

}  // namespace aluc
