#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "spde/estimators.hpp"
#include "spde/field.hpp"
#include "spde/noise.hpp"
#include "spde/solver.hpp"

namespace spde::io {

using nlohmann::json;

/// Shortest exact decimal for a double ("%.17g"); infinities print as
/// "inf"/"-inf". Used by every CSV writer so outputs are byte-stable.
std::string format_double(double v);

/// Atom cloud CSV: header t,x1[,x2[,x3]],z; rows in generation order.
void write_atoms_csv(const std::string& path, const NoiseRealization& real);
NoiseRealization read_atoms_csv(const std::string& path);

/// Sidecar JSON describing how the cloud was produced.
json noise_sidecar(const NoiseRealization& real, const LevyMarkSpec& spec);

/// Field CSV: header t,x1[,x2[,x3]],y; level-major, sites lexicographic.
void write_field_csv(const std::string& path, const FieldGrid& grid);

/// Binary field dump, little-endian:
///   magic "SPDH1", u8 dim, u16 pad, u64 levels, u64 sites_per_dim,
///   f64 radius, f64 norm_p, f64 times[levels], f64 values (level-major).
void write_field_binary(const std::string& path, const FieldGrid& grid);
FieldGrid read_field_binary(const std::string& path);

json describe(const KernelSpec& spec);
json describe(const LevyMarkSpec& spec);
json describe(const Box& box);
json describe(const SolveDiagnostics& diag);
json describe(const Estimate& est);

/// Long-format study row; seed < 0 marks ensemble-level rows.
struct StudyRow {
    std::string study;
    std::string param;
    long seed;
    double value;
};

/// Study CSV: header study,param,seed,value.
void write_study_csv(const std::string& path, const std::vector<StudyRow>& rows);

json study_json(const TruncationStudy& study);
json study_json(const PicardStudy& study);
json study_json(const MomentStudy& study);
json study_json(const StoppingStudy& study);

std::vector<StudyRow> study_rows(const TruncationStudy& study);
std::vector<StudyRow> study_rows(const PicardStudy& study);
std::vector<StudyRow> study_rows(const MomentStudy& study);
std::vector<StudyRow> study_rows(const StoppingStudy& study);

void write_json(const std::string& path, const json& j);
void write_text(const std::string& path, const std::string& text);

}  // namespace spde::io
