#pragma once

#include <filesystem>
#include <string>

#include "glq/analysis.hpp"
#include "glq/gl_core.hpp"
#include "glq/homotopy.hpp"
#include "glq/loops.hpp"

namespace glq::io {

// ---- homotopy tables (JSON) ----
// group: {"order": N, "mul": [row-major], "labels": [...]}.
homotopy::FiniteGroup load_group(const std::filesystem::path& path);
void save_group(const homotopy::FiniteGroup& group, const std::filesystem::path& path);
// Built-in names accepted by the CLI: z2, z3, z4, ..., d4, q8; otherwise a path.
homotopy::FiniteGroup group_by_name_or_file(const std::string& spec);

// emin: {"group_ref": str, "values": [per class_id]}.
homotopy::EminTable load_emin(const std::filesystem::path& path, std::string* group_ref = nullptr);
void save_emin(const homotopy::EminTable& table, const std::string& group_ref,
               const std::filesystem::path& path);

// norms: {"classes": [{"id", "label", "members", "norm"}...], "gap": g}.
void save_norms(const homotopy::NormTable& table, const homotopy::ClassAlgebra& alg,
                const std::filesystem::path& path);

// ---- loops (CSV) ----
// Header line "# manifold=<id> K=<K> m=<m>", then K rows of m values.
void save_loop(const loops::LoopSamples& loop, const std::filesystem::path& path);
loops::LoopSamples load_loop(const std::filesystem::path& path);

// ---- fields (sidecar JSON + raw little-endian float64) ----
// <base>.json holds {dim, counts, h, extent, m, eps, manifold, potential, bc,
// data_file, byte_size, checksum_fnv1a64}; <base>.bin holds the value array
// row-major, components innermost.
void save_field(const gl::GridField& field, const gl::BCDescriptor& bc,
                const std::filesystem::path& base_path);
gl::GridField load_field(const std::filesystem::path& base_path, gl::BCDescriptor* bc = nullptr);

// ---- convergence trace (CSV: iteration,energy,grad_sup_norm) ----
void save_trace(const std::vector<gl::TraceSample>& trace, const std::filesystem::path& path);

// ---- analysis artifacts ----
void save_profile_csv(const std::vector<double>& radii, const std::vector<double>& values,
                      const std::filesystem::path& path);
// Cloud CSV: x,y,z,flag,cluster.
void save_cloud_csv(const analysis::SingularSetEstimate& est, const std::filesystem::path& path);

std::uint64_t fnv1a64(const void* data, std::size_t bytes);

}  // namespace glq::io
