// SPDX-License-Identifier: Apache-2.0
#include "aluc/raster.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <deque>
#include <fstream>
#include <limits>
#include <sstream>

#include "aluc/error.hpp"
#include "aluc/rng.hpp"

namespace aluc {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <typename T>
T to_little_endian(T v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &v, sizeof(T));
    std::reverse(bytes, bytes + sizeof(T));
    std::memcpy(&v, bytes, sizeof(T));
    return v;
  }
}

fs::path base_of(const fs::path& path) {
  const auto ext = path.extension();
  if (ext == ".json" || ext == ".bin") return fs::path(path).replace_extension();
  return path;
}

template <typename T>
void write_payload(const fs::path& path, std::span<const T> values) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io, "cannot open " + path.string() + " for writing");
  std::vector<T> le(values.begin(), values.end());
  for (T& v : le) v = to_little_endian(v);
  out.write(reinterpret_cast<const char*>(le.data()), static_cast<std::streamsize>(le.size() * sizeof(T)));
  if (!out) throw Error(Errc::io, "write failed: " + path.string());
}

template <typename T>
std::vector<T> read_payload(const fs::path& path, std::size_t expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "missing payload " + path.string());
  in.seekg(0, std::ios::end);
  const auto bytes = static_cast<std::size_t>(in.tellg());
  if (bytes != expected * sizeof(T)) {
    std::ostringstream msg;
    msg << "payload " << path.string() << " holds " << bytes << " bytes, header implies "
        << expected * sizeof(T);
    throw Error(Errc::size_mismatch, msg.str());
  }
  in.seekg(0);
  std::vector<T> values(expected);
  in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(bytes));
  for (T& v : values) v = to_little_endian(v);
  return values;
}

int positive_field(const json& header, const char* key, const fs::path& path) {
  if (!header.contains(key) || !header[key].is_number_integer() || header[key].get<long long>() <= 0) {
    throw Error(Errc::format, path.string() + ": field '" + key + "' must be a positive integer");
  }
  return header[key].get<int>();
}

}  // namespace

fs::path sidecar_path(const fs::path& path) { return fs::path(base_of(path)) += ".json"; }
fs::path payload_path(const fs::path& path) { return fs::path(base_of(path)) += ".bin"; }

json load_sidecar(const fs::path& path) {
  const auto sidecar = sidecar_path(path);
  std::ifstream in(sidecar);
  if (!in) throw Error(Errc::io, "missing header " + sidecar.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(Errc::format, sidecar.string() + ": " + e.what());
  }
}

void Raster::validate() const {
  if (width <= 0 || height <= 0 || bands <= 0) throw Error(Errc::invalid_argument, "raster dimensions must be positive");
  if (values.size() != pixel_count() * static_cast<std::size_t>(bands)) {
    throw Error(Errc::size_mismatch, "raster value count does not match width*height*bands");
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      const std::size_t px = i % pixel_count();
      std::ostringstream msg;
      msg << "non-finite value at band " << i / pixel_count() << ", row " << px / width << ", col "
          << px % width;
      throw Error(Errc::non_finite, msg.str());
    }
  }
}

void LabelMap::validate(int omega) const {
  if (labels.size() != pixel_count()) throw Error(Errc::size_mismatch, "label count does not match width*height");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] > omega) {
      std::ostringstream msg;
      msg << "label " << labels[i] << " exceeds class count " << omega << " at row " << i / width
          << ", col " << i % width;
      throw Error(Errc::invalid_argument, msg.str());
    }
  }
}

void store_raster(const Raster& raster, const fs::path& path, const json& extra) {
  raster.validate();
  json header = extra;
  header["width"] = raster.width;
  header["height"] = raster.height;
  header["bands"] = raster.bands;
  header["dtype"] = "f32le";
  header["layout"] = "band-sequential";
  std::ofstream out(sidecar_path(path), std::ios::trunc);
  if (!out) throw Error(Errc::io, "cannot write " + sidecar_path(path).string());
  out << header.dump(2) << '\n';
  write_payload<float>(payload_path(path), raster.values);
}

Raster load_raster(const fs::path& path) {
  const json header = load_sidecar(path);
  if (header.value("dtype", "") != "f32le") throw Error(Errc::format, "raster dtype must be f32le");
  if (header.value("layout", "band-sequential") != "band-sequential") {
    throw Error(Errc::format, "raster layout must be band-sequential");
  }
  Raster r;
  r.width = positive_field(header, "width", path);
  r.height = positive_field(header, "height", path);
  r.bands = positive_field(header, "bands", path);
  r.values = read_payload<float>(payload_path(path), r.pixel_count() * static_cast<std::size_t>(r.bands));
  r.validate();
  return r;
}

void store_label_map(const LabelMap& labels, const fs::path& path) {
  if (labels.labels.size() != labels.pixel_count()) throw Error(Errc::size_mismatch, "label count mismatch");
  json header{{"width", labels.width}, {"height", labels.height}, {"bands", 1},
              {"dtype", "u16le"}, {"layout", "band-sequential"}};
  std::ofstream out(sidecar_path(path), std::ios::trunc);
  if (!out) throw Error(Errc::io, "cannot write " + sidecar_path(path).string());
  out << header.dump(2) << '\n';
  write_payload<std::uint16_t>(payload_path(path), labels.labels);
}

LabelMap load_label_map(const fs::path& path, int omega) {
  const json header = load_sidecar(path);
  if (header.value("dtype", "") != "u16le") throw Error(Errc::format, "label map dtype must be u16le");
  if (header.value("bands", 1) != 1) throw Error(Errc::format, "label map must have exactly one band");
  LabelMap m;
  m.width = positive_field(header, "width", path);
  m.height = positive_field(header, "height", path);
  m.labels = read_payload<std::uint16_t>(payload_path(path), m.pixel_count());
  m.validate(omega);
  return m;
}

void SceneSpec::validate() const {
  if (width <= 0 || height <= 0) throw Error(Errc::invalid_argument, "scene dimensions must be positive");
  if (classes < 1) throw Error(Errc::invalid_argument, "scene needs at least one class");
  if (bands < 1) throw Error(Errc::invalid_argument, "scene needs at least one band");
  if (!(granularity > 0)) throw Error(Errc::invalid_argument, "granularity must be positive");
  if (!(noise >= 0)) throw Error(Errc::invalid_argument, "noise must be non-negative");
  if (!(mixing >= 0) || !std::isfinite(mixing)) throw Error(Errc::invalid_argument, "mixing must be non-negative");
  if (!(region_variation >= 0) || !std::isfinite(region_variation))
    throw Error(Errc::invalid_argument, "region_variation must be non-negative");
  if (means.size() != static_cast<std::size_t>(classes) || stds.size() != static_cast<std::size_t>(classes)) {
    throw Error(Errc::invalid_argument, "means/stds must list one entry per class");
  }
  for (int c = 0; c < classes; ++c) {
    if (means[c].size() != static_cast<std::size_t>(bands) || stds[c].size() != static_cast<std::size_t>(bands)) {
      throw Error(Errc::invalid_argument, "means/stds must list one value per band");
    }
    for (double s : stds[c]) {
      if (!(s > 0)) throw Error(Errc::invalid_argument, "class standard deviations must be positive");
    }
  }
}

SceneSpec SceneSpec::with_generated_spectra(int width, int height, int classes, int bands,
                                            double granularity, double spread, double class_std,
                                            double noise, std::uint64_t seed) {
  SceneSpec spec;
  spec.width = width;
  spec.height = height;
  spec.classes = classes;
  spec.bands = bands;
  spec.granularity = granularity;
  spec.noise = noise;
  spec.seed = seed;
  Rng rng(derive_seed(seed, {0x5bec}));
  spec.means.assign(classes, std::vector<double>(bands));
  spec.stds.assign(classes, std::vector<double>(bands, class_std));
  for (auto& m : spec.means) {
    for (double& v : m) v = 100.0 + spread * rng.normal();
  }
  return spec;
}

namespace {

// Separable Gaussian filter, edge replication, radius ceil(3 sigma).
void gaussian_blur(std::span<double> img, int w, int h, double sigma) {
  const int r = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * r + 1);
  double sum = 0.0;
  for (int i = -r; i <= r; ++i) sum += k[i + r] = std::exp(-0.5 * i * i / (sigma * sigma));
  for (double& v : k) v /= sum;
  std::vector<double> tmp(img.size());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i) acc += k[i + r] * img[static_cast<std::size_t>(y) * w + std::clamp(x + i, 0, w - 1)];
      tmp[static_cast<std::size_t>(y) * w + x] = acc;
    }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i) acc += k[i + r] * tmp[static_cast<std::size_t>(std::clamp(y + i, 0, h - 1)) * w + x];
      img[static_cast<std::size_t>(y) * w + x] = acc;
    }
}

}  // namespace

Scene generate_synthetic_scene(const SceneSpec& spec) {
  spec.validate();
  const int w = spec.width;
  const int h = spec.height;
  const std::size_t n = static_cast<std::size_t>(w) * h;
  Rng rng(derive_seed(spec.seed, {0x5cee}));

  const auto sites_wanted = static_cast<std::size_t>(
      std::ceil(static_cast<double>(n) / (spec.granularity * spec.granularity)));
  const std::size_t site_count = std::clamp<std::size_t>(sites_wanted, 1, n);
  struct Site {
    double x, y;
    int cls;
  };
  std::vector<Site> sites(site_count);
  for (std::size_t s = 0; s < site_count; ++s) {
    sites[s].x = rng.uniform() * w;
    sites[s].y = rng.uniform() * h;
  }
  // Every class gets at least one site when there are enough sites.
  std::vector<int> classes(site_count);
  for (std::size_t s = 0; s < site_count; ++s) {
    classes[s] = s < static_cast<std::size_t>(spec.classes) ? static_cast<int>(s)
                                                             : static_cast<int>(rng.index(spec.classes));
  }
  rng.shuffle(std::span<int>(classes));
  for (std::size_t s = 0; s < site_count; ++s) sites[s].cls = classes[s];

  Scene scene;
  scene.region_count = static_cast<int>(site_count);
  scene.regions.assign(n, 0);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const double px = c + 0.5;
      const double py = r + 0.5;
      double best = std::numeric_limits<double>::infinity();
      int arg = 0;
      for (std::size_t s = 0; s < site_count; ++s) {
        const double dx = px - sites[s].x;
        const double dy = py - sites[s].y;
        const double d = dx * dx + dy * dy;
        if (d < best) {
          best = d;
          arg = static_cast<int>(s);
        }
      }
      scene.regions[static_cast<std::size_t>(r) * w + c] = arg;
    }
  }

  // Lattice points of a convex cell need not be 4-connected; detach stray components
  // and hand them to a 4-adjacent cell until every cell is one 4-connected piece.
  auto& region = scene.regions;
  std::vector<char> stray(n, 0);
  {
    std::vector<int> component(n, -1);
    std::vector<std::size_t> best_size(site_count, 0);
    std::vector<int> best_component(site_count, -1);
    std::vector<std::size_t> sizes;
    std::deque<std::size_t> queue;
    for (std::size_t start = 0; start < n; ++start) {
      if (component[start] >= 0) continue;
      const int id = static_cast<int>(sizes.size());
      std::size_t size = 0;
      component[start] = id;
      queue.push_back(start);
      while (!queue.empty()) {
        const std::size_t p = queue.front();
        queue.pop_front();
        ++size;
        const int pr = static_cast<int>(p / w), pc = static_cast<int>(p % w);
        const int nr[4] = {pr - 1, pr + 1, pr, pr};
        const int nc[4] = {pc, pc, pc - 1, pc + 1};
        for (int k = 0; k < 4; ++k) {
          if (nr[k] < 0 || nr[k] >= h || nc[k] < 0 || nc[k] >= w) continue;
          const std::size_t q = static_cast<std::size_t>(nr[k]) * w + nc[k];
          if (component[q] < 0 && region[q] == region[p]) {
            component[q] = id;
            queue.push_back(q);
          }
        }
      }
      sizes.push_back(size);
      const int cell = region[start];
      if (size > best_size[cell]) {
        best_size[cell] = size;
        best_component[cell] = id;
      }
    }
    for (std::size_t p = 0; p < n; ++p) stray[p] = component[p] != best_component[region[p]];
  }
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t p = 0; p < n; ++p) {
      if (!stray[p]) continue;
      const int pr = static_cast<int>(p / w), pc = static_cast<int>(p % w);
      const int nr[4] = {pr - 1, pr + 1, pr, pr};
      const int nc[4] = {pc, pc, pc - 1, pc + 1};
      for (int k = 0; k < 4; ++k) {
        if (nr[k] < 0 || nr[k] >= h || nc[k] < 0 || nc[k] >= w) continue;
        const std::size_t q = static_cast<std::size_t>(nr[k]) * w + nc[k];
        if (!stray[q]) {
          region[p] = region[q];
          stray[p] = 0;
          changed = true;
          break;
        }
      }
    }
  }

  scene.labels.width = w;
  scene.labels.height = h;
  scene.labels.labels.resize(n);
  for (std::size_t p = 0; p < n; ++p) scene.labels.labels[p] = static_cast<std::uint16_t>(sites[region[p]].cls + 1);

  scene.raster.width = w;
  scene.raster.height = h;
  scene.raster.bands = spec.bands;
  scene.raster.values.resize(n * spec.bands);
  std::vector<double> pure(n * spec.bands);
  std::vector<double> sensor(n * spec.bands, 0.0);
  std::vector<double> offset(site_count * spec.bands, 0.0);
  if (spec.region_variation > 0) {
    Rng offsets(derive_seed(spec.seed, {0x5cee, 1}));
    for (double& o : offset) o = spec.region_variation * offsets.normal();
  }
  for (std::size_t p = 0; p < n; ++p) {
    const int cls = scene.labels.labels[p] - 1;
    for (int b = 0; b < spec.bands; ++b) {
      const double shift = offset[static_cast<std::size_t>(region[p]) * spec.bands + b];
      pure[static_cast<std::size_t>(b) * n + p] = spec.means[cls][b] + shift + spec.stds[cls][b] * rng.normal();
      if (spec.noise > 0) sensor[static_cast<std::size_t>(b) * n + p] = spec.noise * rng.normal();
    }
  }
  if (spec.mixing > 0) {
    for (int b = 0; b < spec.bands; ++b)
      gaussian_blur(std::span<double>(pure.data() + static_cast<std::size_t>(b) * n, n), w, h, spec.mixing);
  }
  for (std::size_t i = 0; i < pure.size(); ++i) scene.raster.values[i] = static_cast<float>(pure[i] + sensor[i]);
  return scene;
}

json to_json(const SceneSpec& spec) {
  return json{{"width", spec.width},   {"height", spec.height}, {"classes", spec.classes},
              {"bands", spec.bands},   {"granularity", spec.granularity},
              {"means", spec.means},   {"stds", spec.stds},     {"noise", spec.noise},
              {"mixing", spec.mixing}, {"region_variation", spec.region_variation},
              {"seed", spec.seed}};
}

SceneSpec scene_spec_from_json(const json& j) {
  try {
    const int width = j.value("width", 96);
    const int height = j.value("height", 96);
    const int classes = j.value("classes", 5);
    const int bands = j.value("bands", 4);
    const double granularity = j.value("granularity", 24.0);
    const double noise = j.value("noise", 0.0);
    const auto seed = j.value("seed", std::uint64_t{1});
    SceneSpec spec;
    if (j.contains("means")) {
      spec.width = width;
      spec.height = height;
      spec.classes = classes;
      spec.bands = bands;
      spec.granularity = granularity;
      spec.noise = noise;
      spec.seed = seed;
      spec.means = j.at("means").get<std::vector<std::vector<double>>>();
      spec.stds = j.at("stds").get<std::vector<std::vector<double>>>();
    } else {
      spec = SceneSpec::with_generated_spectra(width, height, classes, bands, granularity,
                                               j.value("spread", 10.0), j.value("class_std", 4.0),
                                               noise, seed);
    }
    spec.mixing = j.value("mixing", 0.0);
    spec.region_variation = j.value("region_variation", 0.0);
    spec.validate();
    return spec;
  } catch (const json::exception& e) {
    throw Error(Errc::format, std::string("scene spec: ") + e.what());
  }
}

}  // namespace aluc
