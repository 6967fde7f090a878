#include "correctorlab/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace correctorlab::io {

using nlohmann::json;

namespace {

std::uint64_t to_little(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    std::uint64_t r = 0;
    for (int b = 0; b < 8; ++b) r |= ((v >> (8 * b)) & 0xffu) << (8 * (7 - b));
    return r;
  }
  return v;
}

}  // namespace

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
  auto p = path;
  p += ".json";
  return p;
}

void write_field(const std::filesystem::path& path, const Lattice& lattice, int components,
                 std::span<const double> values, std::uint64_t seed,
                 const std::string& config_json) {
  if (values.size() != lattice.size() * static_cast<std::size_t>(components))
    throw std::invalid_argument("value count does not match lattice and components");
  std::ofstream bin(path, std::ios::binary);
  if (!bin) throw std::runtime_error("cannot write " + path.string());
  for (double v : values) {
    std::uint64_t u;
    std::memcpy(&u, &v, sizeof u);
    u = to_little(u);
    bin.write(reinterpret_cast<const char*>(&u), sizeof u);
  }
  json side{{"d", lattice.dim()},
            {"n", lattice.n()},
            {"L", lattice.box_size()},
            {"components", components},
            {"dtype", "float64-le"},
            {"layout", "component-major; site index sum_j x_j n^j (axis 0 fastest)"},
            {"seed", seed}};
  side["config"] = config_json.empty() ? json::object() : json::parse(config_json);
  std::ofstream js(sidecar_path(path));
  if (!js) throw std::runtime_error("cannot write " + sidecar_path(path).string());
  js << side.dump(2) << '\n';
}

void write_field(const std::filesystem::path& path, const TensorField& field, std::uint64_t seed,
                 const std::string& config_json) {
  const int d = field.lattice().dim();
  write_field(path, field.lattice(), d * d, field.values(), seed, config_json);
}

void write_field(const std::filesystem::path& path, const ScalarField& field, std::uint64_t seed,
                 const std::string& config_json) {
  write_field(path, field.lattice(), 1, field.values(), seed, config_json);
}

FieldFile read_field(const std::filesystem::path& path) {
  std::ifstream js(sidecar_path(path));
  if (!js) throw std::invalid_argument("missing sidecar " + sidecar_path(path).string());
  const json side = json::parse(js);
  FieldFile f;
  f.lattice = Lattice(side.at("d").get<int>(), side.at("n").get<int>(), side.at("L").get<double>());
  f.components = side.at("components").get<int>();
  f.sidecar = side.dump();
  std::ifstream bin(path, std::ios::binary);
  if (!bin) throw std::invalid_argument("cannot open " + path.string());
  f.values.resize(f.lattice.size() * f.components);
  for (double& v : f.values) {
    std::uint64_t u;
    if (!bin.read(reinterpret_cast<char*>(&u), sizeof u))
      throw std::invalid_argument("field file shorter than its sidecar declares");
    u = to_little(u);
    std::memcpy(&v, &u, sizeof v);
  }
  return f;
}

std::string corrector_summary_json(const CorrectorSet& set) {
  json j{{"d", set.dim()},
         {"n", set.lattice.n()},
         {"L", set.lattice.box_size()},
         {"a_hom", set.a_hom},
         {"phi_residual", set.phi_residual},
         {"phi_iterations", set.phi_iterations},
         {"flux_potential_residual", set.flux_potential_residual}};
  return j.dump();
}

}  // namespace correctorlab::io
