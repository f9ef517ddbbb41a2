#include "m3mix/serialize.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>

#include "m3mix/errors.hpp"

namespace m3mix {
namespace {

using nlohmann::json;

json toJson(const Vector& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

json toJson(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Vector vectorFrom(const json& j) {
  const auto values = j.get<std::vector<double>>();
  Vector v(static_cast<Eigen::Index>(values.size()));
  for (std::size_t k = 0; k < values.size(); ++k) v[static_cast<Eigen::Index>(k)] = values[k];
  return v;
}

Matrix matrixFrom(const json& j, Eigen::Index colsIfEmpty = 0) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  const auto cols = rows.empty() ? colsIfEmpty : static_cast<Eigen::Index>(rows.front().size());
  Matrix m(static_cast<Eigen::Index>(rows.size()), cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (static_cast<Eigen::Index>(rows[i].size()) != cols) throw ParseError("ragged matrix in model file");
    for (std::size_t k = 0; k < rows[i].size(); ++k) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
  }
  return m;
}

json header(const char* type) { return json{{"schemaVersion", kSchemaVersion}, {"type", type}}; }

json parseChecked(const std::string& text, const char* type) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("model file is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("schemaVersion")) throw ParseError("model file has no schemaVersion");
  const json& ver = j["schemaVersion"];
  if (!ver.is_number_integer() || ver.get<long long>() != kSchemaVersion)
    throw UnsupportedVersionError("unsupported model schemaVersion " + ver.dump() + " (supported: " +
                                  std::to_string(kSchemaVersion) + ")");
  if (!j.contains("type") || j["type"] != type)
    throw ParseError(std::string("model file type is not ") + type);
  return j;
}

template <typename F>
auto guarded(F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw ParseError(std::string("model file is missing or has malformed fields: ") + e.what());
  }
}

json priorToJson(const NIWPrior& p) {
  return json{{"mu0", toJson(p.mu0)}, {"kappa0", p.kappa0}, {"nu0", p.nu0}, {"lambda0", toJson(p.lambda0)}};
}

NIWPrior priorFrom(const json& j) {
  NIWPrior p;
  p.mu0 = vectorFrom(j.at("mu0"));
  p.kappa0 = j.at("kappa0").get<double>();
  p.nu0 = j.at("nu0").get<double>();
  p.lambda0 = matrixFrom(j.at("lambda0"));
  return p;
}

json assignmentsToJson(std::span<const Assignment2D> as) {
  json out = json::array();
  for (const auto& a : as) out.push_back(json::array({a.z1, a.z2}));
  return out;
}

std::vector<Assignment2D> assignmentsFrom(const json& j) {
  std::vector<Assignment2D> out;
  for (const auto& pair : j) out.push_back({pair.at(0).get<std::size_t>(), pair.at(1).get<std::size_t>()});
  return out;
}

json componentsToJson(const std::vector<Vector>& means, const std::vector<Matrix>& covs) {
  json m = json::array(), c = json::array();
  for (const auto& v : means) m.push_back(toJson(v));
  for (const auto& s : covs) c.push_back(toJson(s));
  return json{{"means", m}, {"covs", c}};
}

std::string readFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void writeFile(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << text << '\n';
}

}  // namespace

std::string finiteModelToJson(const FiniteM3Model& model) {
  json j = header("finite-m3");
  j["k1"] = model.k1();
  j["k2"] = model.k2();
  j["vocabSize"] = model.vocabSize();
  j["alpha1"] = model.alpha1;
  j["alpha2"] = model.alpha2;
  j["omega"] = model.omega;
  j["theta1"] = toJson(model.theta1);
  j["theta2"] = toJson(model.theta2);
  return j.dump();
}

FiniteM3Model finiteModelFromJson(const std::string& text) {
  const json j = parseChecked(text, "finite-m3");
  return guarded([&] {
    FiniteM3Model m;
    m.alpha1 = j.at("alpha1").get<double>();
    m.alpha2 = j.at("alpha2").get<double>();
    m.omega = j.at("omega").get<double>();
    m.theta1 = matrixFrom(j.at("theta1"));
    m.theta2 = matrixFrom(j.at("theta2"));
    if (m.k1() != j.at("k1").get<std::size_t>() || m.k2() != j.at("k2").get<std::size_t>() ||
        m.vocabSize() != j.at("vocabSize").get<std::size_t>())
      throw ParseError("finite model dimensions disagree with theta shapes");
    return m;
  });
}

void saveFiniteModel(const std::filesystem::path& path, const FiniteM3Model& model) {
  writeFile(path, finiteModelToJson(model));
}

FiniteM3Model loadFiniteModel(const std::filesystem::path& path) { return finiteModelFromJson(readFile(path)); }

std::string infiniteChainToJson(std::span<const InfiniteM3State> samples) {
  if (samples.empty()) throw std::invalid_argument("no samples to save");
  const auto& first = samples.front();
  json j = header("infinite-m3-chain");
  j["data"] = toJson(*first.data);
  j["prior"] = priorToJson(first.prior);
  j["alpha"] = first.alpha.value();
  j["weights"] = json::array({first.weights.omega(), first.weights.omega1(), first.weights.omega2()});
  j["auxCount"] = first.auxCount;
  json arr = json::array();
  for (const auto& s : samples) {
    json e = componentsToJson(s.means, s.covs);
    e["assignments"] = assignmentsToJson(s.assignments);
    arr.push_back(std::move(e));
  }
  j["samples"] = std::move(arr);
  return j.dump();
}

std::vector<InfiniteM3State> infiniteChainFromJson(const std::string& text) {
  const json j = parseChecked(text, "infinite-m3-chain");
  return guarded([&] {
    auto data = std::make_shared<const Matrix>(matrixFrom(j.at("data")));
    const NIWPrior prior = priorFrom(j.at("prior"));
    const auto w = j.at("weights").get<std::vector<double>>();
    if (w.size() != 3) throw ParseError("weights must have three entries");
    std::vector<InfiniteM3State> out;
    for (const auto& e : j.at("samples")) {
      InfiniteM3State s;
      s.data = data;
      s.prior = prior;
      s.alpha = Concentration(j.at("alpha").get<double>());
      s.weights = ShareWeights(w[0], w[1], w[2]);
      s.auxCount = j.at("auxCount").get<std::size_t>();
      s.assignments = assignmentsFrom(e.at("assignments"));
      for (const auto& m : e.at("means")) s.means.push_back(vectorFrom(m));
      for (const auto& c : e.at("covs")) s.covs.push_back(matrixFrom(c));
      s.counts = JointCounts::fromAssignments(s.assignments);
      if (!s.invariantsHold()) throw ParseError("chain sample is inconsistent");
      out.push_back(std::move(s));
    }
    return out;
  });
}

void saveInfiniteChain(const std::filesystem::path& path, std::span<const InfiniteM3State> samples) {
  writeFile(path, infiniteChainToJson(samples));
}

std::vector<InfiniteM3State> loadInfiniteChain(const std::filesystem::path& path) {
  return infiniteChainFromJson(readFile(path));
}

std::string hybridChainToJson(std::span<const HybridState> samples) {
  if (samples.empty()) throw std::invalid_argument("no samples to save");
  const auto& first = samples.front();
  json j = header("hybrid-m3-chain");
  j["data"] = toJson(*first.data);
  j["prior"] = priorToJson(first.prior);
  j["alpha"] = first.alpha.value();
  j["auxCount"] = first.auxCount;
  j["k2"] = first.covs.size();
  json arr = json::array();
  for (const auto& s : samples) {
    json e = componentsToJson(s.means, s.covs);
    e["assignments"] = assignmentsToJson(s.assignments);
    arr.push_back(std::move(e));
  }
  j["samples"] = std::move(arr);
  return j.dump();
}

std::vector<HybridState> hybridChainFromJson(const std::string& text) {
  const json j = parseChecked(text, "hybrid-m3-chain");
  return guarded([&] {
    auto data = std::make_shared<const Matrix>(matrixFrom(j.at("data")));
    const NIWPrior prior = priorFrom(j.at("prior"));
    const auto k2 = j.at("k2").get<std::size_t>();
    std::vector<HybridState> out;
    for (const auto& e : j.at("samples")) {
      HybridState s;
      s.data = data;
      s.prior = prior;
      s.alpha = Concentration(j.at("alpha").get<double>());
      s.auxCount = j.at("auxCount").get<std::size_t>();
      s.assignments = assignmentsFrom(e.at("assignments"));
      for (const auto& m : e.at("means")) s.means.push_back(vectorFrom(m));
      for (const auto& c : e.at("covs")) s.covs.push_back(matrixFrom(c));
      s.counts = JointCounts::fromAssignments(s.assignments, k2);
      if (!s.invariantsHold()) throw ParseError("chain sample is inconsistent");
      out.push_back(std::move(s));
    }
    return out;
  });
}

void saveHybridChain(const std::filesystem::path& path, std::span<const HybridState> samples) {
  writeFile(path, hybridChainToJson(samples));
}

std::vector<HybridState> loadHybridChain(const std::filesystem::path& path) {
  return hybridChainFromJson(readFile(path));
}

std::string modelFileType(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(readFile(path));
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("model file is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("type") || !j["type"].is_string()) throw ParseError("model file has no type tag");
  return j["type"].get<std::string>();
}

}  // namespace m3mix
