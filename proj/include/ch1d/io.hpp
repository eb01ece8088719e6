#pragma once
// Serialization: round-trippable CSV for fields and sweep tables (full
// 17-digit decimal, locale-independent), JSON for structured reports, and
// atomic whole-file writes (temp file + rename).

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "ch1d/asymptotics.hpp"
#include "ch1d/core.hpp"
#include "ch1d/energy.hpp"
#include "ch1d/minimize.hpp"

namespace ch1d {

// --- whole files -------------------------------------------------------------

// Writes content to path via a temporary sibling and rename, creating parent
// directories as needed.  Throws IoError on failure.
void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);

void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json_file(const std::filesystem::path& path);

// --- fields ------------------------------------------------------------------

void save_complex_csv(const std::filesystem::path& path, const ComplexField& u);
ComplexField load_complex_csv(const std::filesystem::path& path);

void save_polar_csv(const std::filesystem::path& path, const PolarField& p);
PolarField load_polar_csv(const std::filesystem::path& path);

// --- structured values -------------------------------------------------------

nlohmann::json breakdown_to_json(const EnergyBreakdown& b);
EnergyBreakdown breakdown_from_json(const nlohmann::json& j);

nlohmann::json jump_map_to_json(const JumpMap& jm);
JumpMap jump_map_from_json(const nlohmann::json& j);

nlohmann::json report_to_json(const MinimizeReport& r);
MinimizeReport report_from_json(const nlohmann::json& j);

nlohmann::json extrapolation_to_json(const Extrapolation& e);
Extrapolation extrapolation_from_json(const nlohmann::json& j);

// --- sweep tables ------------------------------------------------------------

std::string limit_kind_name(LimitKind kind);
LimitKind limit_kind_from_name(const std::string& name);

void save_sweep_csv(const std::filesystem::path& path,
                    const std::vector<SweepCell>& cells);
std::vector<SweepCell> load_sweep_csv(const std::filesystem::path& path);

// --- generic numeric tables ----------------------------------------------------

// A small named-column table of doubles plus an optional trailing string
// column; enough for ladder outputs that the checker re-reads.
struct NumericTable {
  std::vector<std::string> columns;       // numeric column names
  std::vector<std::vector<double>> rows;  // one inner vector per row
  std::string text_column;                // empty when absent
  std::vector<std::string> text;          // per-row values of the text column
};

void save_table_csv(const std::filesystem::path& path, const NumericTable& t);
NumericTable load_table_csv(const std::filesystem::path& path);

}  // namespace ch1d
