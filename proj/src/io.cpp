#include "pqf/io.hpp"

#include <cstdio>
#include <fstream>

#include "pqf/errors.hpp"

namespace pqf::io {

namespace {

constexpr const char* kUnitaryFormat = "pqf-unitary/1";
constexpr const char* kClicksFormat = "pqf-clicks/1";
constexpr const char* kGenerator = "pqfsim 1.0.0";

std::string ref_mode_name(engine::RefMode mode) {
    switch (mode) {
        case engine::RefMode::ClosedForm: return "closed-form";
        case engine::RefMode::ClosedFormGamma: return "closed-form-gamma";
        case engine::RefMode::Oracle: return "oracle";
        case engine::RefMode::IdealSim: return "ideal-sim";
    }
    return "?";
}

json optional_to_json(const std::optional<double>& v) {
    if (v) return *v;
    return nullptr;
}

json moments_to_json(const stats::MomentTriple& t) {
    return json{{"nm", t.nm}, {"cv", optional_to_json(t.cv)}, {"s", optional_to_json(t.s)}};
}

}  // namespace

json unitary_to_json(const Unitary& u) {
    const int m = u.dim();
    json re = json::array(), im = json::array();
    for (int r = 0; r < m; ++r) {
        json re_row = json::array(), im_row = json::array();
        for (int c = 0; c < m; ++c) {
            re_row.push_back(u(r, c).real());
            im_row.push_back(u(r, c).imag());
        }
        re.push_back(std::move(re_row));
        im.push_back(std::move(im_row));
    }
    return json{{"format", kUnitaryFormat}, {"m", m}, {"re", std::move(re)}, {"im", std::move(im)}};
}

Unitary unitary_from_json(const json& j, double tolerance) {
    if (!j.contains("m") || !j.contains("re") || !j.contains("im")) {
        throw DataFormatError("unitary JSON needs fields m, re, im");
    }
    const int m = j.at("m").get<int>();
    const auto& re = j.at("re");
    const auto& im = j.at("im");
    if (static_cast<int>(re.size()) != m || static_cast<int>(im.size()) != m) {
        throw DataFormatError("unitary row count does not match m");
    }
    ComplexMatrix u(m, m);
    for (int r = 0; r < m; ++r) {
        if (static_cast<int>(re[r].size()) != m || static_cast<int>(im[r].size()) != m) {
            throw DataFormatError("unitary column count does not match m");
        }
        for (int c = 0; c < m; ++c) {
            u(r, c) = std::complex<double>(re[r][c].get<double>(), im[r][c].get<double>());
        }
    }
    return Unitary(std::move(u), tolerance);
}

std::string unitary_hash(const Unitary& u) {
    const std::string bytes = unitary_to_json(u).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : bytes) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

void save_unitary(const Unitary& u, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataFormatError("cannot open for writing: " + path.string());
    out << unitary_to_json(u).dump(2) << "\n";
}

Unitary load_unitary(const std::filesystem::path& path, double tolerance) {
    std::ifstream in(path);
    if (!in) throw DataFormatError("cannot open unitary file: " + path.string());
    json j;
    in >> j;
    return unitary_from_json(j, tolerance);
}

// --- click files -----------------------------------------------------------------

void write_click_file(const engine::ExperimentPlan& plan, const std::filesystem::path& path,
                      const std::filesystem::path& unitary_dir) {
    std::filesystem::create_directories(unitary_dir);
    std::ofstream out(path);
    if (!out) throw DataFormatError("cannot open for writing: " + path.string());

    const int m = plan.resolved_m();
    json header{{"format", kClicksFormat},
                {"m", m},
                {"n", plan.n},
                {"kprime", plan.kprime},
                {"kdoubleprime", plan.kdoubleprime},
                {"seed", plan.seed},
                {"species", engine::species_name(plan.source.species)},
                {"loss", plan.source.noise.loss},
                {"overlap", plan.source.noise.overlap},
                {"gamma", plan.gamma}};
    out << header.dump() << "\n";

    std::string line(m, '0');
    engine::for_each_simulated_block(
        plan, [&](int index, const Unitary& u, const std::vector<ClickRecord>& block) {
            const std::string hash = unitary_hash(u);
            save_unitary(u, unitary_dir / (hash + ".json"));
            json block_header{{"unitary", index}, {"hash", hash}, {"records", block.size()}};
            out << block_header.dump() << "\n";
            for (const ClickRecord& rec : block) {
                std::fill(line.begin(), line.end(), '0');
                for (int mode = 0; mode < m; ++mode) {
                    if (rec.pattern.occupations[mode] > 0) line[mode] = '1';
                }
                out << line << "\n";
            }
        });
}

IngestResult ingest_clicks(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataFormatError("cannot open click file: " + path.string());

    IngestResult result;
    std::string line;
    long line_no = 0;

    if (!std::getline(in, line)) throw DataFormatError("empty click file");
    ++line_no;
    json header;
    try {
        header = json::parse(line);
    } catch (const json::exception& e) {
        throw DataFormatError(std::string("bad file header: ") + e.what(), line_no);
    }
    if (header.value("format", "") != kClicksFormat) {
        throw DataFormatError("unknown click file format", line_no);
    }
    result.header.m = header.at("m").get<int>();
    result.header.n = header.at("n").get<int>();
    result.header.kprime = header.value("kprime", std::uint64_t{0});
    result.header.kdoubleprime = header.value("kdoubleprime", std::uint64_t{0});
    result.header.seed = header.value("seed", std::uint64_t{0});
    result.header.species = header.value("species", "");
    result.header.loss = header.value("loss", 0.0);
    result.header.overlap = header.value("overlap", 1.0);
    result.header.gamma = header.value("gamma", 0.5);
    const int m = result.header.m;
    const int n = result.header.n;
    if (m < 1 || n < 1 || n > m) throw DataFormatError("inconsistent m, n in header", line_no);

    std::vector<ClickRecord>* block = nullptr;
    std::uint64_t expected_records = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (line.front() == '{') {
            json bh;
            try {
                bh = json::parse(line);
            } catch (const json::exception& e) {
                throw DataFormatError(std::string("bad block header: ") + e.what(), line_no);
            }
            if (block && block->size() != expected_records) {
                throw DataFormatError("block record count does not match its header", line_no);
            }
            result.unitary_hashes.push_back(bh.value("hash", ""));
            expected_records = bh.value("records", std::uint64_t{0});
            result.records.emplace_back();
            block = &result.records.back();
            continue;
        }
        if (!block) throw DataFormatError("record line before any block header", line_no);
        if (static_cast<int>(line.size()) != m) {
            throw DataFormatError("record line length does not match m", line_no);
        }
        ClickRecord rec;
        rec.unitary_index = static_cast<int>(result.records.size()) - 1;
        rec.pattern = FockPattern::zeros(m);
        int clicks = 0;
        for (int mode = 0; mode < m; ++mode) {
            const char c = line[static_cast<std::size_t>(mode)];
            if (c == '1') {
                rec.pattern.occupations[mode] = 1;
                ++clicks;
            } else if (c != '0') {
                throw DataFormatError("record line contains a character other than 0/1", line_no);
            }
        }
        if (clicks > n) throw DataFormatError("record has more clicks than input photons", line_no);
        rec.lost = n - clicks;
        block->push_back(std::move(rec));
    }
    if (block && block->size() != expected_records) {
        throw DataFormatError("last block record count does not match its header", line_no);
    }
    if (result.records.empty()) throw DataFormatError("click file has no record blocks");
    if (result.header.kdoubleprime != 0 &&
        result.records.size() != result.header.kdoubleprime) {
        throw DataFormatError("block count does not match the kdoubleprime header field");
    }
    return result;
}

std::vector<Unitary> load_referenced_unitaries(const IngestResult& ingest,
                                               const std::filesystem::path& unitary_dir) {
    std::vector<Unitary> out;
    out.reserve(ingest.unitary_hashes.size());
    for (const std::string& hash : ingest.unitary_hashes) {
        if (hash.empty()) throw DataFormatError("click file block lacks a unitary hash");
        const std::filesystem::path p = unitary_dir / (hash + ".json");
        if (!std::filesystem::exists(p)) {
            throw DataFormatError("missing unitary file: " + p.string());
        }
        Unitary u = load_unitary(p);
        if (unitary_hash(u) != hash) {
            throw DataFormatError("unitary content hash mismatch: " + p.string());
        }
        out.push_back(std::move(u));
    }
    return out;
}

// --- reports ------------------------------------------------------------------------

json thresholds_to_json(const stats::Thresholds& th) {
    return json{{"gamma", th.gamma}, {"eps1", th.eps1},     {"eps2", th.eps2},
                {"eps3", th.eps3},   {"c_loss", th.c_loss}, {"c1", th.c1},
                {"c2", th.c2},       {"c3", th.c3},         {"c4", th.c4}};
}

json plan_to_json(const engine::ExperimentPlan& plan) {
    json src{{"species", engine::species_name(plan.source.species)},
             {"loss", plan.source.noise.loss},
             {"overlap", plan.source.noise.overlap}};
    if (plan.source.dad_alpha) src["dad_alpha"] = *plan.source.dad_alpha;
    json j{{"n", plan.n},
                {"gamma", plan.gamma},
                {"m", plan.resolved_m()},
                {"bunching_modes", plan.resolved_bunching_modes()},
                {"kprime", plan.kprime},
                {"kdoubleprime", plan.kdoubleprime},
                {"seed", plan.seed},
                {"confidence", plan.confidence},
                {"thresholds", thresholds_to_json(plan.thresholds)},
                {"source", std::move(src)},
                {"references",
                 json{{"moments", ref_mode_name(plan.refs.moments)},
                      {"bunching", ref_mode_name(plan.refs.bunching)}}}};
    if (plan.fit_window) {
        j["fit_window"] = json{{"lo", plan.fit_window->lo}, {"hi", plan.fit_window->hi}};
    }
    return j;
}

json verdict_to_json(const stats::TestVerdict& v) {
    json j{{"test", stats::test_name(v.id)},
           {"sector", v.sector},
           {"measured", v.measured},
           {"reference", v.reference},
           {"deviation", v.deviation()},
           {"bound", v.bound},
           {"stat_error", v.stat_error},
           {"pass", v.pass},
           {"inconclusive", v.inconclusive}};
    if (!v.note.empty()) j["note"] = v.note;
    return j;
}

json campaign_to_json(const engine::CampaignResult& result) {
    json sectors = json::array();
    for (const auto& s : result.sectors) {
        json js{{"sector", s.sector},
                {"records", s.records},
                {"unitaries_with_data", s.unitaries_with_data}};
        if (s.has_moments) {
            js["moments"] = json{{"measured", moments_to_json(s.measured)},
                                 {"reference", moments_to_json(s.reference)},
                                 {"stat_error", moments_to_json(s.stat_error)}};
        }
        if (s.has_bunching) {
            js["bunching"] = json{{"measured", s.bunching_measured},
                                  {"reference", s.bunching_reference},
                                  {"stat_error", s.bunching_stat_error}};
        }
        sectors.push_back(std::move(js));
    }
    json verdicts = json::array();
    for (const auto& v : result.verdicts) verdicts.push_back(verdict_to_json(v));

    json j{{"format", "pqf-report/1"},
           {"generator", kGenerator},
           {"plan", plan_to_json(result.plan)},
           {"lambda", result.lambda},
           {"lambda_stat_error", result.lambda_stat_error},
           {"lambda_per_unitary", result.lambda_per_unitary},
           {"window", json{{"lo", result.window.lo}, {"hi", result.window.hi}}},
           {"sector_counts", result.sector_counts},
           {"sectors", std::move(sectors)},
           {"verdicts", std::move(verdicts)},
           {"all_pass", result.all_pass()}};
    if (result.simulation) {
        j["simulation"] = json{{"collision_fraction", result.simulation->collision_fraction},
                               {"true_loss_mean", result.simulation->true_loss_mean}};
    }
    return j;
}

json pqf_report_to_json(const engine::PqfReport& report) {
    json entries = json::array();
    for (const auto& e : report.entries) {
        entries.push_back(json{{"n", e.n},
                               {"all_pass", e.all_pass},
                               {"failures", e.failures},
                               {"inconclusive", e.inconclusive}});
    }
    json j{{"format", "pqf-pqf/1"},
           {"generator", kGenerator},
           {"entries", std::move(entries)},
           {"non_monotone", report.non_monotone},
           {"thresholds", thresholds_to_json(report.thresholds)}};
    if (report.pqf) {
        j["pqf"] = *report.pqf;
    } else {
        j["pqf"] = nullptr;
        j["reason"] = "no evaluated input size passed every test";
    }
    return j;
}

json matrix_to_json(const engine::SpeciesMatrix& matrix) {
    const char* tests[] = {"t_loss", "t_d1", "t_d2", "t_d3", "t_d4"};
    json outcome;
    for (std::size_t s = 0; s < matrix.species.size(); ++s) {
        json row;
        for (int t = 0; t < 5; ++t) {
            row[tests[t]] = engine::cell_name(matrix.outcome[s][t]);
        }
        outcome[engine::species_name(matrix.species[s])] = std::move(row);
    }
    return json{{"format", "pqf-matrix/1"},
                {"generator", kGenerator},
                {"outcome", std::move(outcome)}};
}

void export_results(const json& payload, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataFormatError("cannot open for writing: " + path.string());
    out << payload.dump(2) << "\n";
    if (!out) throw DataFormatError("write failed: " + path.string());
}

json import_results(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataFormatError("cannot open results file: " + path.string());
    json j;
    in >> j;
    return j;
}

}  // namespace pqf::io
