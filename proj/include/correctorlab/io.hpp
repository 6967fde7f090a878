#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "correctorlab/corrector.hpp"
#include "correctorlab/lattice.hpp"

namespace correctorlab::io {

/// Raw little-endian float64 values, component-major, sites with axis 0 fastest,
/// plus a JSON sidecar `<path>.json` with d, n, L, components, layout, seed and the
/// caller's configuration object (a JSON text, may be empty).
struct FieldFile {
  Lattice lattice;
  int components = 1;
  std::vector<double> values;
  std::string sidecar;  // JSON text
};

void write_field(const std::filesystem::path& path, const Lattice& lattice, int components,
                 std::span<const double> values, std::uint64_t seed,
                 const std::string& config_json = "");
void write_field(const std::filesystem::path& path, const TensorField& field, std::uint64_t seed,
                 const std::string& config_json = "");
void write_field(const std::filesystem::path& path, const ScalarField& field, std::uint64_t seed,
                 const std::string& config_json = "");

FieldFile read_field(const std::filesystem::path& path);

std::filesystem::path sidecar_path(const std::filesystem::path& path);

/// a_hom, residuals and iteration counts as a JSON object text.
std::string corrector_summary_json(const CorrectorSet& set);

}  // namespace correctorlab::io
