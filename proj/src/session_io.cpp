// SPDX-License-Identifier: Apache-2.0
#include <fstream>
#include <ostream>
#include <sstream>

#include <zlib.h>

#include "aluc/engine.hpp"
#include "aluc/error.hpp"

namespace aluc {

namespace {

constexpr int kSnapshotVersion = 1;
constexpr const char* kSnapshotFormat = "aluc-session";

std::uint32_t crc_of(const std::string& text) {
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(text.data()), static_cast<uInt>(text.size())));
}

}  // namespace

nlohmann::json session_to_json(const Session& s) {
  nlohmann::json log = nlohmann::json::array();
  for (const auto& r : s.log)
    log.push_back({r.iteration, r.order, r.pixel, r.score, r.confidence, to_string(r.outcome), r.label, r.timestamp});
  std::vector<std::size_t> excluded;
  for (std::size_t p = 0; p < s.excluded.size(); ++p)
    if (s.excluded[p]) excluded.push_back(p);
  return {{"width", s.width},
          {"height", s.height},
          {"omega", s.omega},
          {"config", to_json(s.config)},
          {"iteration", s.iteration},
          {"labeled", s.labeled},
          {"labels", s.labels},
          {"seed_count", s.seed_count},
          {"confidence", {{"pixels", s.confidence.pixels}, {"targets", s.confidence.targets}}},
          {"excluded", excluded},
          {"batch", s.batch},
          {"batch_labels", s.batch_labels},
          {"log", log},
          {"partial_iterations", s.partial_iterations},
          {"main_sigma", s.main_sigma},
          {"clock", s.clock},
          {"features_fingerprint", s.features_fingerprint}};
}

Session session_from_json(const nlohmann::json& j) {
  try {
    Session s;
    s.width = j.at("width").get<int>();
    s.height = j.at("height").get<int>();
    s.omega = j.at("omega").get<int>();
    s.config = engine_config_from_json(j.at("config"));
    s.iteration = j.at("iteration").get<int>();
    s.labeled = j.at("labeled").get<std::vector<std::size_t>>();
    s.labels = j.at("labels").get<std::vector<int>>();
    s.seed_count = j.at("seed_count").get<std::size_t>();
    s.confidence.pixels = j.at("confidence").at("pixels").get<std::vector<std::size_t>>();
    s.confidence.targets = j.at("confidence").at("targets").get<std::vector<int>>();
    if (s.confidence.pixels.size() != s.confidence.targets.size())
      throw Error(Errc::format, "session: confidence pixel/target counts differ");
    for (int t : s.confidence.targets) {
      if (t == 1) ++s.confidence.positives;
      else if (t == -1) ++s.confidence.negatives;
      else throw Error(Errc::format, "session: confidence target must be -1 or +1");
    }
    if (s.width <= 0 || s.height <= 0) throw Error(Errc::format, "session: bad dimensions");
    const std::size_t n = static_cast<std::size_t>(s.width) * s.height;
    s.in_pool.assign(n, 1);
    s.excluded.assign(n, 0);
    for (std::size_t p : s.labeled) {
      if (p >= n) throw Error(Errc::format, "session: labeled pixel out of range");
      s.in_pool[p] = 0;
    }
    for (std::size_t p : j.at("excluded").get<std::vector<std::size_t>>()) {
      if (p >= n) throw Error(Errc::format, "session: excluded pixel out of range");
      s.excluded[p] = 1;
    }
    s.batch = j.at("batch").get<std::vector<std::size_t>>();
    s.batch_labels = j.at("batch_labels").get<std::vector<int>>();
    for (const auto& r : j.at("log")) {
      QueryRecord q;
      q.iteration = r.at(0).get<int>();
      q.order = r.at(1).get<int>();
      q.pixel = r.at(2).get<std::size_t>();
      q.score = r.at(3).get<double>();
      q.confidence = r.at(4).get<double>();
      q.outcome = parse_outcome(r.at(5).get<std::string>());
      q.label = r.at(6).get<int>();
      q.timestamp = r.at(7).get<std::uint64_t>();
      s.log.push_back(q);
    }
    s.partial_iterations = j.at("partial_iterations").get<std::vector<int>>();
    s.main_sigma = j.at("main_sigma").get<double>();
    s.clock = j.at("clock").get<std::uint64_t>();
    s.features_fingerprint = j.at("features_fingerprint").get<std::uint64_t>();
    s.check_invariants();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::format, std::string("session: ") + e.what());
  }
}

std::string snapshot_text(const Session& s) {
  const nlohmann::json payload = session_to_json(s);
  const std::string body = payload.dump();
  nlohmann::json doc{{"format", kSnapshotFormat}, {"version", kSnapshotVersion}, {"checksum", crc_of(body)}, {"payload", payload}};
  return doc.dump() + "\n";
}

Session parse_snapshot(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception&) {
    throw Error(Errc::checksum, "snapshot is corrupted (unparseable)");
  }
  if (!doc.is_object() || !doc.contains("format") || doc["format"] != kSnapshotFormat || !doc.contains("payload") ||
      !doc.contains("checksum") || !doc.contains("version"))
    throw Error(Errc::checksum, "snapshot is corrupted (missing envelope fields)");
  if (!doc["version"].is_number_integer() || doc["version"].get<int>() != kSnapshotVersion)
    throw Error(Errc::version_mismatch, "snapshot version " + doc["version"].dump() + ", expected " +
                                            std::to_string(kSnapshotVersion));
  if (!doc["checksum"].is_number_unsigned() || doc["checksum"].get<std::uint32_t>() != crc_of(doc["payload"].dump()))
    throw Error(Errc::checksum, "snapshot checksum mismatch");
  return session_from_json(doc["payload"]);
}

void persist_session(const Session& s, const std::filesystem::path& path) {
  const std::string text = snapshot_text(s);
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::io, "cannot write " + tmp.string());
    out << text;
    if (!out) throw Error(Errc::io, "write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Session resume_session(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_snapshot(buf.str());
}

void write_query_log_csv(const Session& s, std::ostream& out) {
  out << "iteration,order,pixel_x,pixel_y,score,confidence,outcome,label\n";
  const auto w = static_cast<std::size_t>(s.width);
  for (const auto& r : s.log) {
    const nlohmann::json score = r.score, conf = r.confidence;  // shortest round-trip text
    out << r.iteration << ',' << r.order << ',' << r.pixel % w << ',' << r.pixel / w << ',' << score.dump() << ','
        << conf.dump() << ',' << to_string(r.outcome) << ',' << r.label << '\n';
  }
}

}  // namespace aluc
