// SPDX-License-Identifier: Apache-2.0
#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "aluc/error.hpp"
#include "aluc/experiment.hpp"
#include "aluc/features.hpp"
#include "aluc/log.hpp"
#include "aluc/raster.hpp"
#include "aluc/service.hpp"

namespace {

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw aluc::Error(aluc::Errc::io, "cannot read " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw aluc::Error(aluc::Errc::format, path + ": " + e.what());
  }
}

std::string labels_path_for(const std::string& out) {
  std::filesystem::path p(out);
  if (p.extension() == ".json" || p.extension() == ".bin") p.replace_extension();
  return p.string() + "_labels";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Active learning with a user-confidence gate for remote-sensing image labeling"};
  app.require_subcommand(1);

  std::string spec_path, out_path;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic labeled scene");
  synth->add_option("spec", spec_path, "Scene spec (JSON)")->required();
  synth->add_option("out", out_path, "Output raster base path; labels go to <out>_labels")->required();

  std::string raster_path, features_out;
  std::vector<int> radii{1, 3};
  auto* features = app.add_subcommand("features", "Build the standardized spectral + morphological feature stack");
  features->add_option("raster", raster_path, "Input raster")->required();
  features->add_option("out", features_out, "Output feature stack base path")->required();
  features->add_option("--radii", radii, "Structuring element radii, increasing")->delimiter(',');

  std::string config_path, outdir;
  auto* run = app.add_subcommand("run", "Run a simulated experiment");
  run->add_option("config", config_path, "Experiment config (JSON)")->required();
  run->add_option("outdir", outdir, "Result directory")->required();

  std::string report_dir;
  auto* report = app.add_subcommand("report", "Print the summary table of a result directory");
  report->add_option("outdir", report_dir, "Result directory")->required();

  std::string serve_config, listen = "127.0.0.1:8080";
  auto* serve = app.add_subcommand("serve", "Serve interactive labeling sessions over HTTP");
  serve->add_option("config", serve_config, "Service config (JSON)")->required();
  serve->add_option("--listen", listen, "host:port");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) {
      const aluc::SceneSpec spec = aluc::scene_spec_from_json(read_json(spec_path));
      const aluc::Scene scene = aluc::generate_synthetic_scene(spec);
      aluc::store_raster(scene.raster, out_path, {{"scene", aluc::to_json(spec)}});
      aluc::store_label_map(scene.labels, labels_path_for(out_path));
      std::printf("wrote %dx%d raster with %d bands and %d classes (%d regions)\n", spec.width, spec.height,
                  spec.bands, spec.classes, scene.region_count);
    } else if (*features) {
      aluc::MorphConfig morph{radii};
      const aluc::FeatureStack stack = aluc::build_feature_stack(aluc::load_raster(raster_path), morph);
      aluc::store_feature_stack(stack, features_out);
      std::printf("wrote %zu features for %zu pixels\n", stack.dim(), stack.pixel_count());
    } else if (*run) {
      const auto config = aluc::load_experiment_config(config_path);
      const auto result = aluc::run_experiment(config, outdir);
      std::cout << aluc::format_summary(result.summary);
    } else if (*report) {
      std::cout << aluc::format_summary(aluc::report_directory(report_dir));
    } else if (*serve) {
      const auto config = aluc::service_config_from_json(read_json(serve_config),
                                                         std::filesystem::path(serve_config).parent_path());
      aluc::LabelingService service(config);
      aluc::HttpServer server(service, config.static_dir);
      const auto colon = listen.rfind(':');
      if (colon == std::string::npos) throw aluc::Error(aluc::Errc::invalid_argument, "--listen must be host:port");
      const std::string host = listen.substr(0, colon);
      const int port = std::stoi(listen.substr(colon + 1));
      aluc::logger().info("listening on {}:{}", host, port);
      std::fprintf(stderr, "listening on %s:%d\n", host.c_str(), port);
      if (!server.listen(host, port)) throw aluc::Error(aluc::Errc::io, "cannot listen on " + listen);
    }
  } catch (const aluc::Error& e) {
    std::fprintf(stderr, "error (%s): %s\n", aluc::errc_name(e.code()), e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
