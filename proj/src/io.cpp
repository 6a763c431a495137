#include "foliate/io.hpp"

#include <fstream>

#include "json.hpp"

namespace foliate {

namespace {

using json = nlohmann::ordered_json;

json vec_json(const Vector3d& v) { return json{v[0], v[1], v[2]}; }

Vector3d vec_from(const json& j) {
  if (!j.is_array() || j.size() != 3) throw IoError("expected a 3-vector");
  return Vector3d(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

json mat_json(const Matrix3d& m) {
  json rows = json::array();
  for (int i = 0; i < 3; ++i) rows.push_back(json{m(i, 0), m(i, 1), m(i, 2)});
  return rows;
}

Matrix3d mat_from(const json& j) {
  if (!j.is_array() || j.size() != 3) throw IoError("expected a 3x3 matrix");
  Matrix3d m;
  for (int i = 0; i < 3; ++i) m.row(i) = vec_from(j[i]).transpose();
  return m;
}

json field_json(const HarmonicField& f) {
  json coefs = json::array();
  for (int i = 0; i < f.a.size(); ++i) coefs.push_back(f.a[i]);
  return json{{"L", f.L}, {"coefs", coefs}};
}

HarmonicField field_from(const json& j) {
  HarmonicField f(j.at("L").get<int>());
  const auto& coefs = j.at("coefs");
  if (static_cast<int>(coefs.size()) != f.a.size())
    throw IoError("harmonic field coefficient count does not match L");
  for (int i = 0; i < f.a.size(); ++i) f.a[i] = coefs[i].get<double>();
  return f;
}

} // namespace

void save_family(const Family& family, const std::string& path) {
  json j;
  j["kind"] = "family";
  j["metric"] = {{"id", family.spec.id},
                 {"params", family.spec.params},
                 {"chart_radius", family.spec.chart_radius}};
  j["anchor"] = {{"base", vec_json(family.anchor.base)},
                 {"vectors", mat_json(family.anchor.vectors)},
                 {"tau", vec_json(family.anchor.tau)}};
  j["critical_point"] = {{"location", vec_json(family.critical_point.location)},
                         {"hessian", mat_json(family.critical_point.hessian)},
                         {"min_abs_eigenvalue", family.critical_point.min_abs_eigenvalue},
                         {"gradient_norm", family.critical_point.gradient_norm}};
  j["provenance"] = family.provenance;
  j["failed_index"] = family.failed_index;
  j["error"] = family.error;
  json jl = json::array();
  for (const Leaf& lf : family.leaves) {
    jl.push_back(json{{"r", lf.r},
                      {"tau", vec_json(lf.tau)},
                      {"lambda", lf.lambda},
                      {"phi", field_json(lf.phi)},
                      {"area", lf.area},
                      {"energy", lf.energy},
                      {"residual_linf", lf.residual_linf},
                      {"newton_iters", lf.newton_iters}});
  }
  j["leaves"] = jl;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << j.dump(2) << "\n";
  if (!out) throw IoError("write failed: " + path);
}

Family load_family(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open family file: " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw IoError("malformed family file " + path + ": " + e.what());
  }
  try {
    if (j.at("kind").get<std::string>() != "family")
      throw IoError("not a family file: " + path);
    Family fam;
    fam.spec.id = j.at("metric").at("id").get<std::string>();
    fam.spec.chart_radius = j.at("metric").at("chart_radius").get<double>();
    for (auto& [k, v] : j.at("metric").at("params").items())
      fam.spec.params[k] = v.get<double>();
    fam.anchor.base = vec_from(j.at("anchor").at("base"));
    fam.anchor.vectors = mat_from(j.at("anchor").at("vectors"));
    fam.anchor.tau = vec_from(j.at("anchor").at("tau"));
    fam.critical_point.location = vec_from(j.at("critical_point").at("location"));
    fam.critical_point.hessian = mat_from(j.at("critical_point").at("hessian"));
    fam.critical_point.min_abs_eigenvalue =
        j.at("critical_point").at("min_abs_eigenvalue").get<double>();
    fam.critical_point.gradient_norm = j.at("critical_point").at("gradient_norm").get<double>();
    fam.provenance = j.at("provenance").get<std::string>();
    fam.failed_index = j.at("failed_index").get<int>();
    fam.error = j.at("error").get<std::string>();
    for (const auto& one : j.at("leaves")) {
      Leaf lf;
      lf.r = one.at("r").get<double>();
      lf.tau = vec_from(one.at("tau"));
      lf.lambda = one.at("lambda").get<double>();
      lf.phi = field_from(one.at("phi"));
      lf.area = one.at("area").get<double>();
      lf.energy = one.at("energy").get<double>();
      lf.residual_linf = one.at("residual_linf").get<double>();
      lf.newton_iters = one.at("newton_iters").get<int>();
      fam.leaves.push_back(std::move(lf));
    }
    return fam;
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw IoError("malformed family file " + path + ": " + e.what());
  }
}

} // namespace foliate
