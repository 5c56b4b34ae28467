#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "pqf/engine.hpp"

namespace pqf::io {

// Plain nlohmann::json keeps object keys sorted, which the canonical export
// format relies on.
using json = nlohmann::json;

// --- unitary files -----------------------------------------------------------

json unitary_to_json(const Unitary& u);
Unitary unitary_from_json(const json& j, double tolerance = default_config().tol.unitarity);

// FNV-1a content hash of the canonical serialization, as 16 hex digits.
// Click files reference unitaries by this hash.
std::string unitary_hash(const Unitary& u);

void save_unitary(const Unitary& u, const std::filesystem::path& path);
Unitary load_unitary(const std::filesystem::path& path,
                     double tolerance = default_config().tol.unitarity);

// --- click files ---------------------------------------------------------------

// Text format: a file header line (JSON), then per unitary a block header line
// (JSON) followed by one record per line, each a length-m bitstring of clicks.
struct ClickFileHeader {
    int m = 0;
    int n = 0;
    std::uint64_t kprime = 0;
    std::uint64_t kdoubleprime = 0;
    std::uint64_t seed = 0;
    std::string species;
    double loss = 0.0;
    double overlap = 1.0;
    double gamma = 0.5;
};

struct IngestResult {
    ClickFileHeader header;
    std::vector<std::string> unitary_hashes;               // per block
    std::vector<std::vector<ClickRecord>> records;         // grouped by unitary
};

// Simulates the plan and writes the click file; unitaries are stored next to
// the click file in `unitary_dir` (one JSON file per content hash).
void write_click_file(const engine::ExperimentPlan& plan, const std::filesystem::path& path,
                      const std::filesystem::path& unitary_dir);

// Parses and validates a click file. Malformed lines raise DataFormatError
// with the line number.
IngestResult ingest_clicks(const std::filesystem::path& path);

// Loads the unitaries a click file references from `unitary_dir`.
std::vector<Unitary> load_referenced_unitaries(const IngestResult& ingest,
                                               const std::filesystem::path& unitary_dir);

// --- reports ---------------------------------------------------------------------

json thresholds_to_json(const stats::Thresholds& th);
json plan_to_json(const engine::ExperimentPlan& plan);
json verdict_to_json(const stats::TestVerdict& v);
json campaign_to_json(const engine::CampaignResult& result);
json pqf_report_to_json(const engine::PqfReport& report);
json matrix_to_json(const engine::SpeciesMatrix& matrix);

// Canonical export: stable key order, newline-terminated; identical results
// produce byte-identical files.
void export_results(const json& payload, const std::filesystem::path& path);
json import_results(const std::filesystem::path& path);

}  // namespace pqf::io
