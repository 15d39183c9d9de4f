#include "ega/io.hpp"

#include <bit>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace ega {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

namespace fs = std::filesystem;

namespace {

void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

void put(std::ofstream& f, const Eigen::VectorXd& v) {
  f.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
}

Eigen::VectorXd get(std::ifstream& f, Eigen::Index n, const fs::path& path) {
  Eigen::VectorXd v(n);
  f.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
  if (!f) throw SchemaError("'" + path.string() + "' is shorter than its manifest declares");
  return v;
}

}  // namespace

fs::path manifest_path(const fs::path& data_path) {
  fs::path p = data_path;
  return p.replace_extension(".json");
}

void check_schema(const Json& doc, const std::string& what) {
  if (!doc.is_object() || !doc.contains("schema_version") || !doc["schema_version"].is_number_integer())
    throw SchemaError(what + ": missing schema_version");
  const int v = doc["schema_version"].get<int>();
  if (v > kSchemaVersion)
    throw SchemaError(what + ": schema_version " + std::to_string(v) + " is newer than supported version " +
                      std::to_string(kSchemaVersion));
}

void write_json(const fs::path& path, Json doc) {
  ensure_parent(path);
  Json out = {{"schema_version", kSchemaVersion}};
  for (auto& [k, v] : doc.items())
    if (k != "schema_version") out[k] = std::move(v);
  std::ofstream f(path);
  if (!f) throw Error("cannot write '" + path.string() + "'");
  f << out.dump(2) << "\n";
}

Json read_json(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot open '" + path.string() + "'");
  Json doc;
  try {
    doc = Json::parse(f);
  } catch (const Json::parse_error& e) {
    throw SchemaError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
  check_schema(doc, path.string());
  return doc;
}

void write_text(const fs::path& path, const std::string& text) {
  ensure_parent(path);
  std::ofstream f(path);
  if (!f) throw Error("cannot write '" + path.string() + "'");
  f << text;
}

void write_dataset(const fs::path& path, const Dataset& data, const Json& extra) {
  require(!data.samples.empty(), "write_dataset: empty dataset");
  ensure_parent(path);
  const bool offline = data.has_offline_targets();
  {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write '" + path.string() + "'");
    for (const auto& s : data.samples) {
      put(f, s.anchor);
      for (const auto& t : s.targets) put(f, t);
      if (offline) put(f, *s.offline_target);
    }
  }
  Json m = {{"format", "float64-le"},
            {"samples", data.size()},
            {"horizon", data.horizon},
            {"dim", data.dim},
            {"h", data.h},
            {"offline_targets", offline},
            {"record", offline ? "anchor, targets[horizon], offline_target" : "anchor, targets[horizon]"}};
  for (const auto& [k, v] : extra.items()) m[k] = v;
  write_json(manifest_path(path), m);
}

Dataset read_dataset(const fs::path& path) {
  const Json m = read_json(manifest_path(path));
  Dataset data;
  data.h = m.at("h").get<double>();
  data.horizon = m.at("horizon").get<std::size_t>();
  data.dim = m.at("dim").get<int>();
  const auto count = m.at("samples").get<std::size_t>();
  const bool offline = m.at("offline_targets").get<bool>();
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open '" + path.string() + "'");
  data.samples.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    Sample s;
    s.anchor = get(f, data.dim, path);
    for (std::size_t j = 0; j < data.horizon; ++j) s.targets.push_back(get(f, data.dim, path));
    if (offline) s.offline_target = get(f, data.dim, path);
    data.samples.push_back(std::move(s));
  }
  if (f.peek() != std::char_traits<char>::eof())
    throw SchemaError("'" + path.string() + "' is longer than its manifest declares");
  return data;
}

void write_dataset_csv(const fs::path& path, const Dataset& data) {
  std::ostringstream o;
  o << std::setprecision(17);
  const bool offline = data.has_offline_targets();
  o << "sample";
  for (int i = 0; i < data.dim; ++i) o << ",anchor_" << i;
  for (std::size_t j = 1; j <= data.horizon; ++j)
    for (int i = 0; i < data.dim; ++i) o << ",target" << j << "_" << i;
  if (offline)
    for (int i = 0; i < data.dim; ++i) o << ",offline_" << i;
  o << "\n";
  for (std::size_t k = 0; k < data.size(); ++k) {
    const Sample& s = data.samples[k];
    o << k;
    for (int i = 0; i < data.dim; ++i) o << "," << s.anchor(i);
    for (const auto& t : s.targets)
      for (int i = 0; i < data.dim; ++i) o << "," << t(i);
    if (offline)
      for (int i = 0; i < data.dim; ++i) o << "," << (*s.offline_target)(i);
    o << "\n";
  }
  write_text(path, o.str());
}

void write_params(const fs::path& path, const MlpSubmodel& m) {
  ensure_parent(path);
  {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write '" + path.string() + "'");
    put(f, m.params().values());
  }
  Json layers = Json::array();
  const auto& layout = m.params().layout();
  for (std::size_t l = 0; l < layout.size(); ++l) {
    layers.push_back({{"layer", l},
                      {"rows", layout[l].rows},
                      {"cols", layout[l].cols},
                      {"weight_offset", layout[l].weight_offset},
                      {"bias_offset", layout[l].bias_offset}});
  }
  write_json(manifest_path(path), {{"format", "float64-le"},
                                   {"count", m.param_count()},
                                   {"layer_sizes", m.layer_sizes()},
                                   {"weight_order", "column-major"},
                                   {"activation", "tanh hidden, linear output"},
                                   {"layers", layers}});
}

MlpSubmodel read_params(const fs::path& path) {
  const Json m = read_json(manifest_path(path));
  MlpSubmodel net(m.at("layer_sizes").get<std::vector<int>>());
  const auto count = m.at("count").get<Eigen::Index>();
  if (count != net.param_count())
    throw SchemaError("'" + path.string() + "': parameter count does not match layer sizes");
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open '" + path.string() + "'");
  net.set_params(get(f, count, path));
  if (f.peek() != std::char_traits<char>::eof())
    throw SchemaError("'" + path.string() + "' is longer than its manifest declares");
  return net;
}

}  // namespace ega
