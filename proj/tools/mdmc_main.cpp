// mdmc: sparse inverse covariance estimation by soft-thresholding and
// maximum-determinant matrix completion.

#include <CLI11.hpp>

#include "mdmc/bench.hpp"
#include "mdmc/errors.hpp"
#include "mdmc/io.hpp"
#include "mdmc/pipeline.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace {

using namespace mdmc;

constexpr int kExitOk = 0;
constexpr int kExitSolver = 1;
constexpr int kExitInput = 2;

int default_threads() {
    if (const char* env = std::getenv("MDMC_THREADS")) {
        const int t = std::atoi(env);
        if (t >= 1) return t;
    }
    return 1;
}

struct LambdaArgs {
    double scalar = -1.0;
    std::string table_path;
    double table_default = 0.0;

    LambdaSpec build() const {
        if (!table_path.empty())
            return LambdaSpec::table(io::read_matrix_market(table_path), table_default);
        if (scalar < 0.0)
            throw InvalidArgument("a lambda value (--lambda or --lambda-table) is required");
        return LambdaSpec::uniform(scalar);
    }
    bool given() const { return scalar >= 0.0 || !table_path.empty(); }
};

void add_lambda_flags(CLI::App* cmd, LambdaArgs& args) {
    cmd->add_option("--lambda", args.scalar, "uniform off-diagonal threshold weight");
    cmd->add_option("--lambda-table", args.table_path,
                    "MatrixMarket file of per-pair weights");
    cmd->add_option("--lambda-default", args.table_default,
                    "weight for pairs absent from --lambda-table");
}

SolverConfig load_solver_config(const std::string& path) {
    SolverConfig cfg;
    if (path.empty()) return cfg;
    std::ifstream in(path);
    if (!in) throw Error("cannot open config '" + path + "'");
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto pos = line.find_first_not_of(" \t");
        if (pos == std::string::npos || line[pos] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError("config line is not key=value", lineno);
        const std::string key = line.substr(pos, eq - pos);
        const std::string val = line.substr(eq + 1);
        try {
            if (key == "newton_tol") cfg.newton_tol = std::stod(val);
            else if (key == "max_newton") cfg.max_newton = std::stoi(val);
            else if (key == "gamma") cfg.gamma = std::stod(val);
            else if (key == "rho") cfg.rho = std::stod(val);
            else if (key == "cg_max_iter") cfg.cg_max_iter = std::stoi(val);
            else if (key == "cg_tol_cap") cfg.cg_tol_cap = std::stod(val);
            else if (key == "cg_tol_floor") cfg.cg_tol_floor = std::stod(val);
            else if (key == "seed") cfg.seed = std::stoull(val);
            else if (key == "diagnostics") cfg.diagnostics = std::stoi(val) != 0;
            else throw ParseError("unknown config key '" + key + "'", lineno);
        } catch (const std::invalid_argument&) {
            throw ParseError("bad value for '" + key + "'", lineno);
        }
    }
    return cfg;
}

void write_report_file(const std::string& path, const SolverReport& rep,
                       const EmbedInfo* embed) {
    if (path.empty()) return;
    std::ofstream out(path);
    if (!out) throw Error("cannot write report '" + path + "'");
    rep.write_kv(out, /*timings=*/true);
    if (embed) {
        out << "gt_nnz=" << embed->gt_nnz << "\n";
        out << "max_clique=" << embed->max_clique << "\n";
    }
}

void print_warnings(const ThresholdWarnings& warn) {
    if (warn.tie_count > 0) {
        std::cerr << "warning: " << warn.tie_count
                  << " entries tie |C_ij| = lambda_ij exactly (mapped to zero); "
                     "first at";
        for (const auto& [i, j] : warn.tie_sample) std::cerr << " (" << i << "," << j << ")";
        std::cerr << "\n";
    }
    if (warn.zero_lambda_count > 0)
        std::cerr << "warning: " << warn.zero_lambda_count
                  << " off-diagonal pairs carry a zero weight\n";
}

// ---------------------------------------------------------------------------

int run_threshold(const std::string& samples_path, const std::string& cov_path,
                  const LambdaArgs& lambda_args, const std::string& prior_path,
                  Index block, int threads, const std::string& out_path) {
    const LambdaSpec lambda = lambda_args.build();
    std::optional<SparsityPattern> prior;
    if (!prior_path.empty()) prior = io::read_pattern(prior_path);
    const SparsityPattern* prior_ptr = prior ? &*prior : nullptr;

    ThresholdResult res;
    if (!samples_path.empty()) {
        res = threshold_covariance(io::read_samples(samples_path), lambda, prior_ptr,
                                   block, threads);
    } else {
        res = threshold_covariance(io::read_matrix_market(cov_path).dense(), lambda,
                                   prior_ptr, block, threads);
    }
    print_warnings(res.warnings);
    io::write_matrix_market(out_path, res.matrix);
    std::cout << "n=" << res.matrix.n() << " nnz=" << res.matrix.nnz() << " -> "
              << out_path << "\n";
    return kExitOk;
}

int run_embed(const std::string& pattern_path, long amalg) {
    const SparsityPattern g = io::read_pattern(pattern_path);
    ChordalEmbedding emb = symbolic_embed(g, fill_reducing_order(g));
    if (amalg > 0) emb = amalgamate(emb, amalg);
    auto eptr = std::make_shared<const ChordalEmbedding>(std::move(emb));
    const CliqueTree tree = build_clique_tree(eptr);
    std::cout << "n=" << g.n() << "\n"
              << "g_nnz=" << g.nnz() << "\n"
              << "m=" << eptr->m() << "\n"
              << "max_clique=" << tree.max_clique_size() << "\n";
    return kExitOk;
}

int run_solve(const std::string& cov_path, const std::string& config_path, long amalg,
              const std::string& out_path, const std::string& report_path, bool verbose) {
    const SparseSymMatrix c = io::read_matrix_market(cov_path);
    MdmcOptions opts;
    opts.solver = load_solver_config(config_path);
    opts.amalgamate = amalg;
    try {
        MdmcResult res = solve_mdmc(c, opts);
        io::write_matrix_market(out_path, res.x_hat);
        write_report_file(report_path, res.report, &res.embed);
        if (verbose) res.report.write_text(std::cout);
        std::cout << "gap=" << res.report.final_gap << " feas=" << res.report.final_feas
                  << " newton_steps=" << res.report.newton_steps << "\n";
        return kExitOk;
    } catch (const MaxNewtonExceeded& e) {
        std::cerr << "solver did not converge: " << e.what() << "\n";
        write_report_file(report_path, e.report(), nullptr);
        return kExitSolver;
    }
}

int run_estimate(const std::string& samples_path, const std::string& cov_path,
                 const LambdaArgs& lambda_args, const std::string& prior_path,
                 Index block, long amalg, int threads, const std::string& config_path,
                 const std::string& out_path, const std::string& report_path,
                 bool verbose) {
    const LambdaSpec lambda = lambda_args.build();
    std::optional<SparsityPattern> prior;
    if (!prior_path.empty()) prior = io::read_pattern(prior_path);

    EstimateConfig cfg;
    cfg.solver = load_solver_config(config_path);
    cfg.block_size = block;
    cfg.amalgamate = amalg;
    cfg.threads = threads;

    try {
        EstimateResult res;
        if (!samples_path.empty())
            res = rgl_estimate(io::read_samples(samples_path), lambda,
                               prior ? &*prior : nullptr, cfg);
        else
            res = rgl_estimate(io::read_matrix_market(cov_path).dense(), lambda,
                               prior ? &*prior : nullptr, cfg);
        print_warnings(res.warnings);
        io::write_matrix_market(out_path, res.x_hat);
        write_report_file(report_path, res.report, &res.embed);
        if (verbose) res.report.write_text(std::cout);
        std::cout << "n=" << res.x_hat.n() << " nnz=" << res.x_hat.nnz()
                  << " gap=" << res.report.final_gap << " feas=" << res.report.final_feas
                  << "\n";
        return kExitOk;
    } catch (const MaxNewtonExceeded& e) {
        std::cerr << "solver did not converge: " << e.what() << "\n";
        write_report_file(report_path, e.report(), nullptr);
        return kExitSolver;
    }
}

int run_check(const std::string& cov_path, const LambdaArgs& lambda_args,
              const std::string& prior_path, Index limit) {
    const LambdaSpec lambda = lambda_args.build();
    std::optional<SparsityPattern> prior;
    if (!prior_path.empty()) prior = io::read_pattern(prior_path);
    const Eigen::MatrixXd c = io::read_matrix_market(cov_path).dense();
    const Theorem1Diagnostic d =
        theorem1_check(c, lambda, prior ? &*prior : nullptr, limit);
    std::cout << "n=" << d.c_h.n() << "\n"
              << "pattern_nnz=" << d.c_h.nnz() << "\n"
              << "pd_ok=" << (d.pd_ok ? "true" : "false") << "\n"
              << "sign_ok=" << (d.sign_ok ? "true" : "false") << "\n"
              << "sign_indeterminate=" << d.sign_indeterminate << "\n"
              << "complement_norm=" << d.complement_norm << "\n"
              << "rhs_beta=" << d.rhs_beta << "\n"
              << "surrogate_ok=" << (d.surrogate_ok ? "true" : "false") << "\n"
              << "# surrogate compares this instance's complement norm (a lower\n"
              << "# bound on the worst case) against the threshold margin; it can\n"
              << "# refute the margin condition but not certify it\n";
    return kExitOk;
}

int run_bench_banded(const std::string& sizes_csv, Index bandwidth, std::uint64_t seed,
                     long amalg, const std::string& out_path) {
    std::vector<Index> sizes;
    std::stringstream ss(sizes_csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        sizes.push_back(std::stoll(tok));
    }
    if (sizes.empty()) throw InvalidArgument("bench banded: no sizes given");
    ScalingConfig cfg;
    cfg.bandwidth = bandwidth;
    cfg.seed = seed;
    if (amalg >= 0) cfg.amalgamate = amalg;
    const ScalingReport rep = scaling_run(sizes, cfg);
    rep.write_text(std::cout);
    if (!out_path.empty()) {
        std::ofstream out(out_path);
        if (!out) throw Error("cannot write '" + out_path + "'");
        rep.write_text(out);
        out << "\n";
        rep.write_kv(out);
    }
    for (const auto& r : rep.rows)
        if (!r.ok) return kExitSolver;
    return kExitOk;
}

int run_bench_graph(const std::string& pattern_path, Index num_samples,
                    std::uint64_t seed, double lambda, long amalg,
                    const std::string& out_path) {
    const SparsityPattern g = io::read_pattern(pattern_path);
    const GraphCase gc = gen_graph_case(g, num_samples, seed, std::max<Index>(g.n(), 1));
    EstimateConfig cfg;
    cfg.amalgamate = amalg;
    const EstimateResult res = rgl_estimate(gc.samples, LambdaSpec::uniform(lambda),
                                            nullptr, cfg);

    // recovered pattern vs ground truth
    long truth_nnz = 0;
    for (const double v : gc.true_inv.values())
        if (v != 0.0) ++truth_nnz;
    std::ostringstream report;
    report << "n=" << g.n() << "\n"
           << "samples=" << num_samples << "\n"
           << "lambda=" << lambda << "\n"
           << "estimate_nnz=" << res.x_hat.nnz() << "\n"
           << "truth_nnz=" << truth_nnz << "\n"
           << "gap=" << res.report.final_gap << "\n"
           << "feas=" << res.report.final_feas << "\n"
           << "newton_steps=" << res.report.newton_steps << "\n"
           << "seconds_threshold=" << res.seconds_threshold << "\n"
           << "seconds_embed=" << res.report.seconds_embed << "\n"
           << "seconds_solve=" << res.report.seconds_solve << "\n";
    std::cout << report.str();
    if (!out_path.empty()) {
        std::ofstream out(out_path);
        if (!out) throw Error("cannot write '" + out_path + "'");
        out << report.str();
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sparse inverse covariance estimation via thresholding and "
                 "max-determinant matrix completion"};
    app.require_subcommand(1);
    int threads = default_threads();
    bool verbose = false;
    app.add_option("--threads", threads, "worker threads for blockwise stages");
    app.add_flag("--verbose", verbose, "print per-iteration detail");

    // threshold
    auto* c_thresh = app.add_subcommand("threshold", "soft-threshold a covariance");
    std::string t_samples, t_cov, t_prior, t_out;
    Index t_block = 4000;
    LambdaArgs t_lambda;
    c_thresh->add_option("--samples", t_samples, "sample matrix file");
    c_thresh->add_option("--cov", t_cov, "covariance MatrixMarket file");
    add_lambda_flags(c_thresh, t_lambda);
    c_thresh->add_option("--prior", t_prior, "prior pattern file");
    c_thresh->add_option("--block", t_block, "block size");
    c_thresh->add_option("--out", t_out, "output MatrixMarket file")->required();

    // embed
    auto* c_embed = app.add_subcommand("embed", "chordal embedding statistics");
    std::string e_pattern;
    long e_amalg = 0;
    bool e_stats = false;
    c_embed->add_option("--pattern", e_pattern, "pattern file")->required();
    c_embed->add_option("--amalgamate", e_amalg, "clique merge fill budget");
    c_embed->add_flag("--out-stats", e_stats, "print embedding statistics");

    // solve
    auto* c_solve = app.add_subcommand("solve", "solve the completion problem");
    std::string s_cov, s_config, s_out, s_report;
    long s_amalg = 0;
    c_solve->add_option("--cov", s_cov, "thresholded covariance file")->required();
    c_solve->add_option("--config", s_config, "solver config file (key=value)");
    c_solve->add_option("--amalgamate", s_amalg, "clique merge fill budget");
    c_solve->add_option("--out", s_out, "estimator output file")->required();
    c_solve->add_option("--report", s_report, "report output file");

    // estimate
    auto* c_est = app.add_subcommand("estimate", "threshold + embed + solve");
    std::string est_samples, est_cov, est_prior, est_config, est_out, est_report;
    Index est_block = 4000;
    long est_amalg = 0;
    LambdaArgs est_lambda;
    c_est->add_option("--samples", est_samples, "sample matrix file");
    c_est->add_option("--cov", est_cov, "covariance MatrixMarket file");
    add_lambda_flags(c_est, est_lambda);
    c_est->add_option("--prior", est_prior, "prior pattern file");
    c_est->add_option("--block", est_block, "block size");
    c_est->add_option("--amalgamate", est_amalg, "clique merge fill budget");
    c_est->add_option("--config", est_config, "solver config file");
    c_est->add_option("--out", est_out, "estimator output file")->required();
    c_est->add_option("--report", est_report, "report output file");

    // check
    auto* c_check = app.add_subcommand("check", "equivalence diagnostic");
    std::string ch_cov, ch_prior;
    Index ch_limit = 400;
    LambdaArgs ch_lambda;
    c_check->add_option("--cov", ch_cov, "covariance file")->required();
    add_lambda_flags(c_check, ch_lambda);
    c_check->add_option("--prior", ch_prior, "prior pattern file");
    c_check->add_option("--limit", ch_limit, "dense size limit");

    // bench
    auto* c_bench = app.add_subcommand("bench", "synthetic benchmarks");
    c_bench->require_subcommand(1);
    auto* c_banded = c_bench->add_subcommand("banded", "banded scaling study");
    std::string b_sizes = "1000,2000,5000", b_out;
    Index b_bw = 101;
    std::uint64_t b_seed = 7;
    long b_amalg = -1;
    c_banded->add_option("--sizes", b_sizes, "comma-separated sizes");
    c_banded->add_option("--bandwidth", b_bw, "band width (odd)");
    c_banded->add_option("--seed", b_seed, "generator seed");
    c_banded->add_option("--amalgamate", b_amalg, "clique merge fill budget");
    c_banded->add_option("--out", b_out, "report file");

    auto* c_graph = c_bench->add_subcommand("graph", "pattern-driven estimation study");
    std::string g_pattern, g_out;
    Index g_samples = 5000;
    std::uint64_t g_seed = 7;
    double g_lambda = 0.2;
    long g_amalg = 0;
    c_graph->add_option("--pattern", g_pattern, "pattern file")->required();
    c_graph->add_option("--samples", g_samples, "sample count");
    c_graph->add_option("--seed", g_seed, "generator seed");
    c_graph->add_option("--lambda", g_lambda, "threshold weight");
    c_graph->add_option("--amalgamate", g_amalg, "clique merge fill budget");
    c_graph->add_option("--out", g_out, "report file");

    CLI11_PARSE(app, argc, argv);

    try {
        if (c_thresh->parsed()) {
            if (t_samples.empty() == t_cov.empty())
                throw InvalidArgument("exactly one of --samples or --cov is required");
            return run_threshold(t_samples, t_cov, t_lambda, t_prior, t_block, threads,
                                 t_out);
        }
        if (c_embed->parsed()) return run_embed(e_pattern, e_amalg);
        if (c_solve->parsed())
            return run_solve(s_cov, s_config, s_amalg, s_out, s_report, verbose);
        if (c_est->parsed()) {
            if (est_samples.empty() == est_cov.empty())
                throw InvalidArgument("exactly one of --samples or --cov is required");
            return run_estimate(est_samples, est_cov, est_lambda, est_prior, est_block,
                                est_amalg, threads, est_config, est_out, est_report,
                                verbose);
        }
        if (c_check->parsed()) return run_check(ch_cov, ch_lambda, ch_prior, ch_limit);
        if (c_bench->parsed()) {
            if (c_banded->parsed())
                return run_bench_banded(b_sizes, b_bw, b_seed, b_amalg, b_out);
            if (c_graph->parsed())
                return run_bench_graph(g_pattern, g_samples, g_seed, g_lambda, g_amalg,
                                       g_out);
        }
        throw InvalidArgument("no subcommand given");
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const InvalidArgument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitSolver;
    }
}
