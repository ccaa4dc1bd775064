#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "rprec/riccati.hpp"
#include "rprec/shared.hpp"

namespace rprec {

/// Factored precision file, little-endian:
///   "RPPREC01"
///   u64 N, u64 m, u64 penalty kind (0 scaled identity, 1 diagonal, 2 general),
///   u64 estimator (0 Riccati, 1 Tikhonov), u64 source sample count,
///   f64 rho, f64 baseline scale c,
///   W (N x m, column-major f64), omega (m f64),
///   penalty payload: alpha | v (N f64) | V (N x N, column-major f64).
std::string precision_to_bytes(const FactoredPrecision& q);
FactoredPrecision precision_from_bytes(std::string_view bytes);
void save_precision(const FactoredPrecision& q, const std::filesystem::path& path);
FactoredPrecision load_precision(const std::filesystem::path& path);

/// Shared-basis model file, little-endian:
///   "RPJSVD01"
///   u64 N, u64 m, u64 K, f64 rho, u64 penalty kind,
///   W_shared (N x m, column-major f64), K spectra (m f64 each),
///   K sample counts (u64), penalty payload as above.
std::string model_to_bytes(const SharedBasisModel& model);
SharedBasisModel model_from_bytes(std::string_view bytes);
void save_model(const SharedBasisModel& model, const std::filesystem::path& path);
SharedBasisModel load_model(const std::filesystem::path& path);

}  // namespace rprec
