#include <fstream>
#include <iostream>
#include <memory>

#include <CLI11.hpp>

#include "crg/harness.hpp"

namespace {

struct Globals {
    std::uint64_t seed = 1;
    std::string config;
    std::string out;
    std::size_t threads = 1;
};

// Writes to the --out file when one is given, otherwise to stdout.
class Sink {
public:
    explicit Sink(const std::string& path) {
        if (!path.empty()) {
            file_ = std::make_unique<std::ofstream>(path);
            if (!*file_) throw crg::IoError("cannot open output file: " + path);
        }
    }
    std::ostream& os() { return file_ ? *file_ : std::cout; }

private:
    std::unique_ptr<std::ofstream> file_;
};

std::vector<double> pmf_or_uniform(std::vector<double> p, std::size_t m) {
    if (p.empty()) return std::vector<double>(m, 1.0 / static_cast<double>(m));
    double s = 0.0;
    for (double v : p) s += v;
    for (double& v : p) v /= s;
    return p;
}

struct Check {
    std::string name;
    std::function<bool()> fn;
};

int selftest() {
    using namespace crg;
    std::vector<Check> checks = {
        {"two-point GH equals |a-b|/2",
         [] {
             return std::abs(gh_exact(detail::two_point(1.0), detail::two_point(4.0)) - 1.5) < 1e-12;
         }},
        {"Otter-Dwass Poisson(1), k=1 and k=2",
         [] {
             std::vector<double> pmf(20);
             for (std::size_t k = 0; k < pmf.size(); ++k) pmf[k] = std::exp(-1.0 - std::lgamma(k + 1.0));
             return std::abs(otter_dwass_pmf(pmf, 1).probability - std::exp(-1.0)) < 1e-12 &&
                    std::abs(otter_dwass_pmf(pmf, 2).probability - std::exp(-2.0)) < 1e-12;
         }},
        {"zeta constant is nonpositive", [] { return nr_limit_constants(3.5, 1.0, 1.0, 0.0, 100).zeta <= 0.0; }},
        {"critical weights have nu = 1",
         [] {
             double t = 3.5, i = critical_iota(t);
             return std::abs(power_law_second_moment(t, i) / power_law_mean(t, i) - 1.0) < 1e-12;
         }},
        {"edge list header",
         [] {
             Rng rng = make_rng(7, 0);
             auto g = sample_nr_graph(power_law_weights(1000, 3.5, critical_iota(3.5)), 0.0, 3.5, rng);
             std::ostringstream os;
             write_edge_list(os, g);
             return os.str().rfind("# n=1000", 0) == 0 && g.valid();
         }},
        {"unit path greedy cover counts",
         [] { return dim_estimate(path_space(512), {2, 4, 8, 16}).counts == std::vector<std::size_t>{171, 74, 35, 17}; }},
        {"degree-law experiment",
         [] {
             auto c = default_config("degree-law");
             c.n = {20000};
             return run(c).pass();
         }},
        {"ptree-law experiment (m=3, 2e4 samples)",
         [] {
             auto c = default_config("ptree-law");
             c.m = 3;
             c.replicas = 20000;
             c.tolerance["tv"] = 0.03;
             return run(c).pass();
         }},
        {"construction-equivalence (2e4 samples)",
         [] {
             auto c = default_config("construction-equivalence");
             c.replicas = 20000;
             c.tolerance["tv"] = 0.04;
             return run(c).pass();
         }},
        {"surplus-poisson (1e3 draws per tree)",
         [] {
             auto c = default_config("surplus-poisson");
             c.replicas = 1000;
             return run(c).pass();
         }},
        {"determinism of records",
         [] {
             auto c = default_config("surplus-poisson");
             c.replicas = 200;
             return run(c).records == run(c).records;
         }},
    };
    int failed = 0;
    for (auto& ch : checks) {
        bool ok = false;
        try {
            ok = ch.fn();
        } catch (const std::exception& e) {
            std::cout << "error: " << e.what() << "\n";
        }
        std::cout << (ok ? "PASS " : "FAIL ") << ch.name << std::endl;
        failed += !ok;
    }
    std::cout << (failed ? "selftest: failures" : "selftest: ok") << std::endl;
    return failed ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"critical inhomogeneous random graphs: samplers, limit objects and experiments"};
    app.require_subcommand(1);
    Globals gl;
    app.add_option("--seed", gl.seed, "master seed");
    app.add_option("--config", gl.config, "experiment config file (key = value lines)");
    app.add_option("--out", gl.out, "output file, or output directory for experiment");
    app.add_option("--threads", gl.threads, "worker threads")->check(CLI::PositiveNumber);

    std::size_t n = 1000;
    double tau = 3.5, lambda = 0.0, iota = 0.0;
    auto graph_opts = [&](CLI::App* sub) {
        sub->add_option("--n", n, "number of vertices")->check(CLI::PositiveNumber);
        sub->add_option("--tau", tau, "power-law exponent in (3,4)");
        sub->add_option("--lambda", lambda, "critical window parameter");
        sub->add_option("--iota", iota, "weight scale (default: critical value for tau)");
    };
    auto weights = [&] { return crg::power_law_weights(n, tau, iota > 0.0 ? iota : crg::critical_iota(tau)); };

    auto* gen = app.add_subcommand("gen-graph", "sample a Norros-Reittu graph and write its edge list");
    graph_opts(gen);

    auto* exp_walk = app.add_subcommand("explore", "breadth-first exploration walk of the matching G(x,t)");
    graph_opts(exp_walk);

    std::size_t m = 4;
    std::vector<double> p;
    double a = 1.0;
    std::string mode = "exploration";
    bool surplus = false;
    auto* pt = app.add_subcommand("ptree", "sample a p-tree");
    pt->add_option("--m", m, "number of vertices")->check(CLI::PositiveNumber);
    pt->add_option("--p", p, "vertex weights (normalized; default uniform)");
    pt->add_option("--a", a, "tilt parameter");
    pt->add_option("--mode", mode, "exploration | birthday | tilted-exact | tilted-rejection")
        ->check(CLI::IsMember({"exploration", "birthday", "tilted-exact", "tilted-rejection"}));
    pt->add_flag("--surplus", surplus, "add surplus edges and write the graph instead of the tree");

    std::vector<double> theta;
    double horizon = 20.0;
    auto* ic = app.add_subcommand("icrt", "stick-breaking ICRT approximation");
    ic->add_option("--theta", theta, "theta sequence (normalized to unit l2 norm)")->required();
    ic->add_option("--horizon", horizon, "length of the real line used");

    double alpha = 1.0;
    std::size_t J = 1000;
    bool excursions_only = false;
    auto* lv = app.add_subcommand("levy", "simulate the reflected Levy process for c_j = alpha j^{-1/(tau-1)}");
    lv->add_option("--alpha", alpha, "entrance boundary scale");
    lv->add_option("--tau", tau, "exponent in (3,4)");
    lv->add_option("--J", J, "truncation index");
    lv->add_option("--lambda", lambda, "drift parameter");
    lv->add_option("--horizon", horizon, "time horizon");
    lv->add_flag("--excursions", excursions_only, "write the excursion table instead of the path");

    std::size_t landmarks = 0;
    bool dimension = false;
    auto* mt = app.add_subcommand("metric", "metric space of the largest component of a Norros-Reittu graph");
    graph_opts(mt);
    mt->add_option("--landmarks", landmarks, "number of mass-sampled points (0: all vertices)");
    mt->add_flag("--dimension", dimension, "print the box-counting estimate instead of the distance matrix");

    std::string name;
    auto* ex = app.add_subcommand("experiment", "run one named experiment");
    ex->add_option("--name", name, "experiment name (defaults taken from the experiment)");

    auto* st = app.add_subcommand("selftest", "fast consistency checks");

    for (auto* sub : app.get_subcommands({})) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        crg::Rng rng = crg::make_rng(gl.seed, 0);
        if (gen->parsed()) {
            auto g = crg::sample_nr_graph(weights(), lambda, tau, rng);
            Sink s(gl.out);
            crg::write_edge_list(s.os(), g);
        } else if (exp_walk->parsed()) {
            auto mc = crg::nr_to_mc_params(weights(), lambda, tau);
            auto res = crg::explore(mc.x, mc.t, rng);
            Sink s(gl.out);
            crg::write_walk_csv(s.os(), res.trace);
        } else if (pt->parsed()) {
            auto pm = pmf_or_uniform(p, p.empty() ? m : p.size());
            crg::OrderedTree t;
            if (mode == "exploration")
                t = crg::sample_ordered_ptree(pm, rng);
            else if (mode == "birthday")
                t = crg::ptree_birthday(pm, rng).tree;
            else
                t = crg::sample_tilted_ptree(pm, a, rng,
                                             mode == "tilted-exact" ? crg::TiltMode::exact_enum : crg::TiltMode::rejection);
            Sink s(gl.out);
            if (surplus)
                crg::write_edge_list(s.os(), crg::add_surplus_edges(t, pm, a, rng).graph);
            else
                crg::write_tree(s.os(), t);
        } else if (ic->parsed()) {
            auto t = crg::sample_icrt(crg::normalize_theta(theta), horizon, rng);
            Sink s(gl.out);
            crg::write_stick_break_csv(s.os(), t);
        } else if (lv->parsed()) {
            auto path = crg::build_levy_path(crg::entrance_boundary(alpha, tau, J), lambda, horizon, rng);
            auto refl = crg::reflect(path);
            Sink s(gl.out);
            if (excursions_only)
                crg::write_excursions_csv(s.os(), crg::excursions(refl));
            else
                crg::write_path_csv(s.os(), refl);
        } else if (mt->parsed()) {
            auto g = crg::sample_nr_graph(weights(), lambda, tau, rng);
            auto comps = crg::components(g);
            auto space = crg::graph_metric_space(g, comps.front(), crg::LandmarkMode{landmarks}, rng);
            Sink s(gl.out);
            if (dimension) {
                auto grid = crg::detail::dimension_grid(n, tau);
                auto est = crg::dim_estimate(space, grid);
                s.os() << "points " << space.k << "\nslope " << est.slope << "\n";
            } else {
                crg::write_space(s.os(), space);
            }
        } else if (ex->parsed()) {
            crg::ExperimentConfig cfg;
            if (!gl.config.empty())
                cfg = crg::load_config(gl.config);
            else if (!name.empty())
                cfg = crg::default_config(name);
            else
                throw crg::ParameterError("experiment needs --config or --name");
            if (!name.empty() && name != cfg.experiment) throw crg::ParameterError("--name disagrees with the config file");
            if (app.count("--seed")) cfg.seed = gl.seed;
            if (!gl.out.empty()) cfg.out = gl.out;
            if (app.count("--threads")) cfg.threads = gl.threads;
            auto rep = crg::run(cfg);
            std::cout << crg::criterion_line(rep) << std::endl;
            return rep.pass() ? 0 : 1;
        } else if (st->parsed()) {
            return selftest();
        }
    } catch (const crg::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
