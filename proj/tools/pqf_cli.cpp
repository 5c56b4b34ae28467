// Command-line front end: simulate click data, run the certification tests,
// evaluate the quality factor, compare sampling strategies, and expose the
// routing and planning utilities.

#include <CLI11.hpp>
#include <iostream>

#include "pqf/engine.hpp"
#include "pqf/errors.hpp"
#include "pqf/io.hpp"
#include "pqf/routing.hpp"

namespace {

using namespace pqf;

struct CommonPlanOptions {
    int n = 3;
    double gamma = 0.5;
    int m = 0;
    int bunching_modes = 0;
    std::uint64_t kprime = 20'000;
    std::uint64_t kdoubleprime = 40;
    std::uint64_t seed = 1;
    std::string species = "ideal";
    double loss = 0.0;
    double overlap = 1.0;
    double dad_alpha = -1.0;
    std::string refs = "closed-form";
    double confidence = 0.99;
    int workers = 1;
    stats::Thresholds thresholds;
};

void add_threshold_options(CLI::App* cmd, stats::Thresholds& th) {
    cmd->add_option("--th-gamma", th.gamma, "mode-scaling exponent gamma");
    cmd->add_option("--eps1", th.eps1, "loss test strictness exponent");
    cmd->add_option("--eps2", th.eps2, "moment tests strictness exponent");
    cmd->add_option("--eps3", th.eps3, "bunching test strictness exponent");
    cmd->add_option("--c-loss", th.c_loss, "loss bound constant");
    cmd->add_option("--c1", th.c1, "t_d1 bound constant");
    cmd->add_option("--c2", th.c2, "t_d2 bound constant");
    cmd->add_option("--c3", th.c3, "t_d3 bound constant");
    cmd->add_option("--c4", th.c4, "t_d4 bound constant");
}

void add_plan_options(CLI::App* cmd, CommonPlanOptions& opt, bool with_source) {
    cmd->add_option("--n", opt.n, "input photon count")->required();
    cmd->add_option("--gamma", opt.gamma, "mode scaling exponent (m = ceil(n^(2+gamma)))");
    cmd->add_option("--m", opt.m, "mode count override");
    cmd->add_option("--bunching-modes", opt.bunching_modes, "bunching mode count K (default m-n+1)");
    cmd->add_option("--kprime", opt.kprime, "runs per unitary");
    cmd->add_option("--kdoubleprime", opt.kdoubleprime, "number of Haar unitaries");
    cmd->add_option("--seed", opt.seed, "master seed (required for provenance)")->required();
    cmd->add_option("--confidence", opt.confidence, "loss window confidence");
    cmd->add_option("--workers", opt.workers, "worker threads");
    cmd->add_option("--refs", opt.refs,
                    "reference mode: closed-form, closed-form-gamma, oracle, ideal-sim");
    if (with_source) {
        cmd->add_option("--species", opt.species,
                        "ideal, noisy, distinguishable, meanfield, uniform, dad");
        cmd->add_option("--lambda", opt.loss, "per-photon loss probability (noisy species)");
        cmd->add_option("--x", opt.overlap, "pairwise overlap (noisy species)");
        cmd->add_option("--dad-alpha", opt.dad_alpha, "mixture weight for the dad species");
    }
    add_threshold_options(cmd, opt.thresholds);
}

engine::RefMode parse_ref_mode(const std::string& name) {
    if (name == "closed-form") return engine::RefMode::ClosedForm;
    if (name == "closed-form-gamma") return engine::RefMode::ClosedFormGamma;
    if (name == "oracle") return engine::RefMode::Oracle;
    if (name == "ideal-sim") return engine::RefMode::IdealSim;
    throw InvalidDimension("unknown reference mode: " + name);
}

engine::ExperimentPlan build_plan(const CommonPlanOptions& opt) {
    engine::ExperimentPlan plan;
    plan.n = opt.n;
    plan.gamma = opt.gamma;
    plan.m = opt.m;
    plan.bunching_modes = opt.bunching_modes;
    plan.kprime = opt.kprime;
    plan.kdoubleprime = opt.kdoubleprime;
    plan.seed = opt.seed;
    plan.confidence = opt.confidence;
    plan.thresholds = opt.thresholds;
    plan.source.species = engine::parse_species(opt.species);
    plan.source.noise = NoiseParams(opt.loss, opt.overlap);
    if (opt.dad_alpha >= 0.0) plan.source.dad_alpha = opt.dad_alpha;
    const engine::RefMode mode = parse_ref_mode(opt.refs);
    plan.refs.moments = mode;
    plan.refs.bunching = mode;
    return plan;
}

int print_verdict_lines(const engine::CampaignResult& result) {
    for (const auto& v : result.verdicts) {
        std::cout << stats::test_name(v.id);
        if (v.sector >= 0) std::cout << "[l=" << v.sector << "]";
        std::cout << ": " << (v.pass ? "pass" : "fail");
        if (v.inconclusive) std::cout << " (inconclusive)";
        std::cout << "  measured=" << v.measured << " reference=" << v.reference
                  << " bound=" << v.bound << " stat_error=" << v.stat_error << "\n";
    }
    std::cout << (result.all_pass() ? "ALL TESTS PASS" : "SOME TESTS FAIL") << "\n";
    return result.all_pass() ? 0 : 1;
}

std::vector<int> parse_int_list(const std::string& csv) {
    std::vector<int> out;
    std::size_t pos = 0;
    while (pos < csv.size()) {
        std::size_t comma = csv.find(',', pos);
        if (comma == std::string::npos) comma = csv.size();
        out.push_back(std::stoi(csv.substr(pos, comma - pos)));
        pos = comma + 1;
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Noisy BosonSampling simulator and photonic quality benchmark"};
    app.require_subcommand(1);

    // simulate ----------------------------------------------------------------
    CommonPlanOptions sim_opt;
    std::string sim_out = "clicks.txt";
    std::string sim_unitary_dir = "unitaries";
    auto* sim = app.add_subcommand("simulate", "generate a click file from a seeded campaign");
    add_plan_options(sim, sim_opt, true);
    sim->add_option("--out", sim_out, "output click file");
    sim->add_option("--unitary-dir", sim_unitary_dir, "directory for unitary JSON files");

    // test --------------------------------------------------------------------
    CommonPlanOptions test_opt;
    std::string test_in, test_unitary_dir = "unitaries", test_report;
    bool test_strict = false;
    auto* test = app.add_subcommand("test", "run the certification tests on a click file");
    test->add_option("--in", test_in, "click file")->required();
    test->add_option("--unitary-dir", test_unitary_dir, "directory with referenced unitaries");
    test->add_option("--report", test_report, "write the campaign report JSON here");
    test->add_option("--refs", test_opt.refs, "reference mode");
    test->add_option("--confidence", test_opt.confidence, "loss window confidence");
    test->add_option("--workers", test_opt.workers, "worker threads");
    test->add_flag("--strict", test_strict, "exit 1 when any test fails");
    std::vector<int> test_fit_window;
    test->add_option("--fit-window", test_fit_window,
                     "lo hi: recover the loss rate by a binomial fit over this sector window")
        ->expected(2);
    add_threshold_options(test, test_opt.thresholds);

    // pqf ---------------------------------------------------------------------
    CommonPlanOptions pqf_opt;
    std::string pqf_ns = "3,4";
    std::string pqf_report;
    auto* pqf = app.add_subcommand("pqf", "evaluate the quality factor over a schedule of n");
    add_plan_options(pqf, pqf_opt, true);
    pqf->get_option("--n")->required(false);
    pqf->add_option("--ns", pqf_ns, "comma-separated list of input sizes");
    pqf->add_option("--report", pqf_report, "write the quality factor report JSON here");

    // compare -----------------------------------------------------------------
    CommonPlanOptions cmp_opt;
    std::string cmp_species = "ideal,distinguishable,meanfield,dad";
    std::string cmp_report;
    auto* cmp = app.add_subcommand("compare", "species-by-test pass/fail matrix");
    add_plan_options(cmp, cmp_opt, false);
    cmp->add_option("--species", cmp_species, "comma-separated species list");
    cmp->add_option("--lambda", cmp_opt.loss, "per-photon loss probability (noisy species)");
    cmp->add_option("--x", cmp_opt.overlap, "pairwise overlap (noisy species)");
    cmp->add_option("--dad-alpha", cmp_opt.dad_alpha, "mixture weight for the dad species");
    cmp->add_option("--report", cmp_report, "write the matrix JSON here");

    // route -------------------------------------------------------------------
    std::string route_pattern;
    auto* route = app.add_subcommand("route", "swap-gadget plan onto the canonical pattern");
    route->add_option("--pattern", route_pattern, "collision-free bitstring, e.g. 00111")
        ->required();

    // plan-samples --------------------------------------------------------------
    double ps_eps = 0.05, ps_conf = 0.95, ps_var = 4.0;
    auto* ps = app.add_subcommand("plan-samples", "Chebyshev sample-count planner");
    ps->add_option("--eps", ps_eps, "target precision");
    ps->add_option("--confidence", ps_conf, "target confidence");
    ps->add_option("--var-bound", ps_var, "variance bound (4 covers any correlator)");

    // lemma ---------------------------------------------------------------------
    std::uint64_t lemma_n = 10;
    double lemma_x = 0.999;
    auto* lemma = app.add_subcommand("lemma", "geometric series gap check");
    lemma->add_option("--n", lemma_n, "series length parameter");
    lemma->add_option("--x", lemma_x, "overlap in [0, 1)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (sim->parsed()) {
            const engine::ExperimentPlan plan = build_plan(sim_opt);
            io::write_click_file(plan, sim_out, sim_unitary_dir);
            std::cout << "wrote " << sim_out << " (" << plan.kdoubleprime << " blocks x "
                      << plan.kprime << " records)\n";
            return 0;
        }
        if (test->parsed()) {
            const io::IngestResult ingest = io::ingest_clicks(test_in);
            engine::ExperimentPlan plan;
            plan.n = ingest.header.n;
            plan.m = ingest.header.m;
            plan.gamma = ingest.header.gamma;
            plan.kprime = ingest.header.kprime;
            plan.kdoubleprime = ingest.header.kdoubleprime;
            plan.seed = ingest.header.seed;
            plan.confidence = test_opt.confidence;
            plan.thresholds = test_opt.thresholds;
            if (!ingest.header.species.empty()) {
                plan.source.species = engine::parse_species(ingest.header.species);
            }
            plan.source.noise = NoiseParams(ingest.header.loss, ingest.header.overlap);
            if (!test_fit_window.empty()) {
                plan.fit_window = stats::IntInterval{test_fit_window[0], test_fit_window[1]};
            }
            const engine::RefMode mode = parse_ref_mode(test_opt.refs);
            plan.refs.moments = mode;
            plan.refs.bunching = mode;

            std::vector<Unitary> unitaries;
            const bool need_unitaries =
                mode == engine::RefMode::Oracle || mode == engine::RefMode::IdealSim;
            if (need_unitaries) {
                unitaries = io::load_referenced_unitaries(ingest, test_unitary_dir);
            }
            const engine::CampaignResult result = engine::run_campaign_on(
                plan, ingest.records, need_unitaries ? &unitaries : nullptr, test_opt.workers);
            if (!test_report.empty()) io::export_results(io::campaign_to_json(result), test_report);
            const int failures = print_verdict_lines(result);
            return test_strict ? failures : 0;
        }
        if (pqf->parsed()) {
            std::vector<engine::CampaignResult> results;
            for (int n : parse_int_list(pqf_ns)) {
                CommonPlanOptions opt = pqf_opt;
                opt.n = n;
                engine::ExperimentPlan plan = build_plan(opt);
                std::cerr << "running campaign n=" << n << " (m=" << plan.resolved_m() << ")\n";
                results.push_back(engine::run_campaign(plan, pqf_opt.workers));
            }
            const engine::PqfReport report = engine::evaluate_pqf(results);
            const io::json payload = io::pqf_report_to_json(report);
            if (!pqf_report.empty()) io::export_results(payload, pqf_report);
            std::cout << payload.dump(2) << "\n";
            return 0;
        }
        if (cmp->parsed()) {
            std::vector<engine::Species> list;
            std::size_t pos = 0;
            while (pos < cmp_species.size()) {
                std::size_t comma = cmp_species.find(',', pos);
                if (comma == std::string::npos) comma = cmp_species.size();
                list.push_back(engine::parse_species(cmp_species.substr(pos, comma - pos)));
                pos = comma + 1;
            }
            const engine::ExperimentPlan plan = build_plan(cmp_opt);
            const engine::SpeciesMatrix matrix = engine::compare_species(plan, list,
                                                                         cmp_opt.workers);
            const io::json payload = io::matrix_to_json(matrix);
            if (!cmp_report.empty()) io::export_results(payload, cmp_report);
            std::cout << payload.dump(2) << "\n";
            return 0;
        }
        if (route->parsed()) {
            FockPattern pattern = FockPattern::zeros(static_cast<int>(route_pattern.size()));
            for (std::size_t i = 0; i < route_pattern.size(); ++i) {
                if (route_pattern[i] == '1') {
                    pattern.occupations[i] = 1;
                } else if (route_pattern[i] != '0') {
                    throw DataFormatError("pattern must be a 0/1 bitstring");
                }
            }
            const routing::RoutingPlan plan = routing::plan_routing(pattern);
            io::json gadgets = io::json::array();
            for (const auto& g : plan.gadgets) {
                gadgets.push_back(io::json{
                    {"i", g.mode}, {"theta", g.theta}, {"phi", g.phi}, {"gamma", g.phase}});
            }
            std::cout << gadgets.dump(2) << "\n";
            return 0;
        }
        if (ps->parsed()) {
            std::cout << stats::chebyshev_sample_size(ps_eps, ps_conf, ps_var) << "\n";
            return 0;
        }
        if (lemma->parsed()) {
            const stats::SeriesGap gap = stats::lemma_series_gap(lemma_x, lemma_n);
            std::cout << io::json{{"exact", gap.exact},
                                  {"approx", gap.approx},
                                  {"kappa", gap.kappa}}
                             .dump(2)
                      << "\n";
            return 0;
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
