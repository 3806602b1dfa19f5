// SPDX-License-Identifier: Apache-2.0
#include "aluc/error.hpp"
#include "aluc/svm.hpp"

namespace aluc {

using nlohmann::json;

json to_json(const BinarySvm& svm) {
  std::vector<std::vector<double>> sv;
  for (std::size_t i = 0; i < svm.support.rows(); ++i) {
    const auto r = svm.support.row(i);
    sv.emplace_back(r.begin(), r.end());
  }
  return json{{"kind", "binary_svm"},
              {"sigma", svm.params.sigma},
              {"C", svm.params.C},
              {"bias", svm.bias},
              {"constant", svm.constant},
              {"dim", svm.support.cols()},
              {"coef", svm.coef},
              {"support_index", svm.support_index},
              {"support", sv}};
}

BinarySvm binary_svm_from_json(const json& j) {
  try {
    if (j.at("kind") != "binary_svm") throw Error(Errc::format, "record is not a binary_svm");
    BinarySvm svm;
    svm.params = KernelParams{j.at("sigma").get<double>(), j.at("C").get<double>()};
    svm.bias = j.at("bias").get<double>();
    svm.constant = j.at("constant").get<bool>();
    svm.coef = j.at("coef").get<std::vector<double>>();
    svm.support_index = j.at("support_index").get<std::vector<std::size_t>>();
    svm.support = SampleMatrix(0, j.at("dim").get<std::size_t>());
    for (const auto& r : j.at("support")) svm.support.append(r.get<std::vector<double>>());
    if (svm.support.rows() != svm.coef.size() || svm.support_index.size() != svm.coef.size()) {
      throw Error(Errc::format, "binary_svm record has inconsistent lengths");
    }
    return svm;
  } catch (const json::exception& e) {
    throw Error(Errc::format, std::string("binary_svm record: ") + e.what());
  }
}

json to_json(const OaaModel& model) {
  json machines = json::array();
  for (const auto& m : model.machines) machines.push_back(to_json(m));
  return json{{"kind", "oaa_model"},
              {"omega", model.omega},
              {"sigma", model.params.sigma},
              {"C", model.params.C},
              {"machines", machines}};
}

OaaModel oaa_model_from_json(const json& j) {
  try {
    if (j.at("kind") != "oaa_model") throw Error(Errc::format, "record is not an oaa_model");
    OaaModel model;
    model.omega = j.at("omega").get<int>();
    model.params = KernelParams{j.at("sigma").get<double>(), j.at("C").get<double>()};
    for (const auto& m : j.at("machines")) model.machines.push_back(binary_svm_from_json(m));
    if (model.machines.size() != static_cast<std::size_t>(model.omega)) {
      throw Error(Errc::format, "oaa_model needs one machine per class");
    }
    model.compile();
    return model;
  } catch (const json::exception& e) {
    throw Error(Errc::format, std::string("oaa_model record: ") + e.what());
  }
}

json to_json(const PlattCalibration& platt) {
  return json{{"A", platt.A}, {"B", platt.B}, {"objective", platt.objective}, {"iterations", platt.iterations}};
}

PlattCalibration platt_from_json(const json& j) {
  try {
    return PlattCalibration{j.at("A").get<double>(), j.at("B").get<double>(), j.value("objective", 0.0),
                            j.value("iterations", 0)};
  } catch (const json::exception& e) {
    throw Error(Errc::format, std::string("platt record: ") + e.what());
  }
}

}  // namespace aluc
