#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <future>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rapm/rapm.h"

namespace rapm_cli {

namespace {

struct ParamsDeleter {
    void operator()(rapm_params* p) const noexcept { rapm_params_destroy(p); }
};
struct SurfaceDeleter {
    void operator()(rapm_surface* s) const noexcept { rapm_surface_destroy(s); }
};
using ParamsPtr = std::unique_ptr<rapm_params, ParamsDeleter>;
using SurfacePtr = std::unique_ptr<rapm_surface, SurfaceDeleter>;

struct Options {
    double rate = 0.1;
    double sigma = 0.2;
    double strike = 75.0;
    double expiry = 1.0;
    double risk_premium = 0.01;
    double txn_cost = 2.0;
    double radius = 3.0;
    double dx = 0.01;
    double dtau = 0.0005;
    double theta = 0.5;
    int rannacher = 4;
    std::string order = "p1";
    std::string nonlinearity = "group";
    std::string mass = "lumped";
    std::string power = "signed";
    std::string boundary_v = "copy";
    std::string spots;
    std::string out = "rapm";
    std::string config;
    std::string ladder = "0.04,0.02,0.01,0.001";
    double fdm_dx = 0.0;
    double fdm_dtau = 0.0;
    int stride = 1;
};

// Flags a config file may set (without the leading dashes).
const std::set<std::string>& config_keys() {
    static const std::set<std::string> keys{
        "rate",   "sigma",        "strike", "expiry", "risk-premium", "txn-cost",
        "radius", "dx",           "dtau",   "theta",  "rannacher",    "order",
        "nonlinearity", "mass",   "power",  "boundary-v", "spots",    "out",
        "ladder", "fdm-dx",       "fdm-dtau", "stride"};
    return keys;
}

/// Bad user input; the message names the flag.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Solver failure carrying the library status and, if any, a partial surface.
struct NumericalFailure : std::runtime_error {
    NumericalFailure(const std::string& what, rapm_status s, SurfacePtr partial)
        : std::runtime_error(what), status(s), surface(std::move(partial)) {}
    rapm_status status;
    SurfacePtr surface;
};

bool is_config_status(rapm_status s) {
    switch (s) {
        case RAPM_ERR_INVALID_ARGUMENT:
        case RAPM_ERR_INVALID_PARAMETER:
        case RAPM_ERR_EXISTENCE_A:
        case RAPM_ERR_EXISTENCE_B:
        case RAPM_ERR_NONPOSITIVE_SPOT:
        case RAPM_ERR_DEGENERATE_SWITCH:
        case RAPM_ERR_INVALID_SPACING:
        case RAPM_ERR_OUT_OF_RANGE:
        case RAPM_ERR_INVALID_SIZE:
        case RAPM_ERR_SPOT_OUT_OF_DOMAIN:
            return true;
        default:
            return false;
    }
}

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

double parse_number(const std::string& text) {
    const std::string t = trim(text);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
        throw std::invalid_argument("not a number: '" + t + "'");
    }
    return value;
}

void require(bool ok, const std::string& message) {
    if (!ok) {
        throw ConfigError(message);
    }
}

void validate(const Options& o) {
    require(o.rate > 0 && std::isfinite(o.rate), "--rate must be positive");
    require(o.sigma > 0 && std::isfinite(o.sigma), "--sigma must be positive");
    require(o.strike > 0 && std::isfinite(o.strike), "--strike must be positive");
    require(o.expiry > 0 && std::isfinite(o.expiry), "--expiry must be positive");
    require(o.risk_premium >= 0 && std::isfinite(o.risk_premium),
            "--risk-premium must be non-negative");
    require(o.txn_cost >= 0 && std::isfinite(o.txn_cost), "--txn-cost must be non-negative");
    require(o.radius > 0 && std::isfinite(o.radius), "--radius must be positive");
    require(o.dx > 0 && o.dx < 2 * o.radius, "--dx must lie in (0, 2 * radius)");
    require(o.dtau > 0 && std::isfinite(o.dtau), "--dtau must be positive");
    require(o.theta >= 0 && o.theta <= 1, "--theta must lie in [0, 1]");
    require(o.rannacher >= 0 && o.rannacher <= 16, "--rannacher must lie in [0, 16]");
    require(o.fdm_dx >= 0 && o.fdm_dx < 2 * o.radius,
            "--fdm-dx must lie in (0, 2 * radius), or 0 for --dx");
    require(o.fdm_dtau >= 0 && std::isfinite(o.fdm_dtau),
            "--fdm-dtau must be positive, or 0 for the automatic step");
    require(o.stride >= 1, "--stride must be at least 1");
}

ParamsPtr make_params(const Options& o) {
    rapm_params* raw = nullptr;
    const rapm_status s =
        rapm_params_create(o.rate, o.sigma, o.strike, o.expiry, o.risk_premium, o.txn_cost, &raw);
    if (s != RAPM_OK) {
        std::string flags = "--rate/--sigma/--strike/--expiry";
        if (s == RAPM_ERR_EXISTENCE_A) {
            flags = "--risk-premium/--txn-cost/--sigma/--expiry";
        } else if (s == RAPM_ERR_EXISTENCE_B) {
            flags = "--risk-premium/--txn-cost";
        }
        throw ConfigError(flags + ": " + rapm_last_error());
    }
    return ParamsPtr(raw);
}

rapm_solver_options solver_options(const Options& o, const std::string& order,
                                   const std::string& nonlinearity) {
    rapm_solver_options opt;
    rapm_solver_options_default(&opt);
    opt.radius = o.radius;
    opt.dx = o.dx;
    opt.dtau = o.dtau;
    opt.theta = o.theta;
    opt.rannacher_substeps = o.rannacher;
    opt.order = order == "p2" ? RAPM_P2 : RAPM_P1;
    opt.nonlinearity = nonlinearity == "quadrature" ? RAPM_QUADRATURE : RAPM_GROUP_FE;
    opt.mass = o.mass == "consistent" ? RAPM_MASS_CONSISTENT : RAPM_MASS_LUMPED;
    opt.power = o.power == "clamped" ? RAPM_POWER_CLAMPED : RAPM_POWER_SIGNED;
    opt.boundary_v =
        o.boundary_v == "extrapolate" ? RAPM_BOUNDARY_V_EXTRAPOLATE : RAPM_BOUNDARY_V_COPY;
    return opt;
}

// Runs a solve and converts failures. The error text is captured here since
// the library's message is thread-local.
SurfacePtr checked_solve(const rapm_params* p, const rapm_solver_options& opt, bool fdm) {
    rapm_surface* raw = nullptr;
    const rapm_status s = fdm ? rapm_solve_fdm(p, &opt, &raw) : rapm_solve(p, &opt, &raw);
    SurfacePtr surface(raw);
    if (s == RAPM_OK) {
        return surface;
    }
    const std::string message = std::string(fdm ? "finite-difference solve: " : "solve: ") +
                                rapm_last_error();
    if (is_config_status(s)) {
        std::string flags = "--dx/--radius/--dtau/--theta/--rannacher";
        if (s == RAPM_ERR_INVALID_PARAMETER && opt.mass == RAPM_MASS_CONSISTENT) {
            flags = "--mass/--dx";
        } else if (s == RAPM_ERR_INVALID_SPACING) {
            flags = fdm ? "--fdm-dx/--radius" : "--dx/--radius";
        }
        throw ConfigError(flags + ": " + message);
    }
    throw NumericalFailure(message, s, std::move(surface));
}

double price(const rapm_surface* s, double spot) {
    double v = 0.0;
    const rapm_status st = rapm_surface_price(s, spot, &v);
    if (st != RAPM_OK) {
        throw ConfigError(std::string("--spots: ") + rapm_last_error());
    }
    return v;
}

rapm_diagnostics diagnostics(const rapm_surface* s) {
    rapm_diagnostics d{};
    rapm_surface_diagnostics(s, &d);
    return d;
}

std::vector<double> nodes(const rapm_surface* s) {
    std::vector<double> x(rapm_surface_node_count(s));
    rapm_surface_nodes(s, x.data(), x.size());
    return x;
}

// CSV assembly with `# key=value` metadata lines.
class Csv {
public:
    void meta(const std::string& key, const std::string& value) {
        text_ << "# " << key << '=' << value << '\n';
    }
    void meta(const std::string& key, double value) { meta(key, format_double(value)); }
    void header(const std::string& columns) { text_ << columns << '\n'; }
    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            text_ << (i ? "," : "") << cells[i];
        }
        text_ << '\n';
    }
    void row(std::initializer_list<double> values) {
        std::vector<std::string> cells;
        for (double v : values) {
            cells.push_back(format_double(v));
        }
        row(cells);
    }
    [[nodiscard]] std::string str() const { return text_.str(); }

private:
    std::ostringstream text_;
};

void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) {
        throw ConfigError("--out: cannot write '" + path + "'");
    }
    f << content;
    if (!f) {
        throw ConfigError("--out: failed writing '" + path + "'");
    }
}

void model_metadata(Csv& csv, const Options& o, const rapm_params* p) {
    csv.meta("rate", o.rate);
    csv.meta("sigma", o.sigma);
    csv.meta("strike", o.strike);
    csv.meta("expiry", o.expiry);
    csv.meta("risk_premium", o.risk_premium);
    csv.meta("txn_cost", o.txn_cost);
    rapm_derived d{};
    rapm_params_derived(p, &d);
    csv.meta("t_star", d.t_star);
    csv.meta("tau_star", d.tau_star);
    csv.meta("tau_max", d.tau_max);
    csv.meta("d_coeff", d.d_coeff);
    csv.meta("c_r", d.c_r);
}

void solver_metadata(Csv& csv, const Options& o, const std::string& order,
                     const std::string& nonlinearity) {
    csv.meta("radius", o.radius);
    csv.meta("theta", o.theta);
    csv.meta("rannacher", std::to_string(o.rannacher));
    csv.meta("order", order);
    csv.meta("nonlinearity", nonlinearity);
    csv.meta("mass", o.mass);
    csv.meta("power", o.power);
    csv.meta("boundary_v", o.boundary_v);
}

void run_metadata(Csv& csv, const std::string& prefix, const rapm_surface* s) {
    const rapm_diagnostics d = diagnostics(s);
    csv.meta(prefix + "dx_effective", d.dx);
    csv.meta(prefix + "dtau_effective", d.dtau);
    csv.meta(prefix + "steps", std::to_string(d.steps));
    csv.meta(prefix + "nodes", std::to_string(d.node_count));
    csv.meta(prefix + "dtau_over_dx2", d.dtau_over_dx2);
    csv.meta(prefix + "max_abs_v", d.max_abs_v);
}

std::vector<double> resolve_spots(const Options& o) {
    std::vector<double> spots;
    if (o.spots.empty()) {
        const double step = o.strike / 150.0;
        for (int i = 0; i <= 225; ++i) {
            spots.push_back(0.5 * o.strike + step * i);
        }
    } else {
        try {
            spots = parse_spots(o.spots);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("--spots: ") + e.what());
        }
    }
    const double lo = o.strike * std::exp(-o.radius);
    const double hi = o.strike * std::exp(o.radius);
    for (std::size_t i = 0; i < spots.size(); ++i) {
        require(spots[i] >= lo && spots[i] <= hi,
                "--spots: " + format_double(spots[i]) + " lies outside [" + format_double(lo) +
                    ", " + format_double(hi) + "] covered by --radius");
        require(i == 0 || spots[i] > spots[i - 1], "--spots must be strictly increasing");
    }
    return spots;
}

std::string gnuplot_script(const Options& o, const std::string& csv_path) {
    std::ostringstream gp;
    gp << "set datafile separator ','\n"
       << "set datafile columnheaders\n"
       << "set terminal pngcairo size 800,600\n"
       << "set output '" << o.out << "_price.png'\n"
       << "set xlabel 'S'\n"
       << "set ylabel 'V(S, 0)'\n"
       << "set key top left\n"
       << "set arrow from " << format_double(o.strike) << ", graph 0 to "
       << format_double(o.strike) << ", graph 1 nohead dashtype 3\n"
       << "plot '" << csv_path << "' using 1:2 with lines lw 2 title 'RAPM', \\\n"
       << "     '' using 1:3 with lines dashtype 2 title 'Black-Scholes'\n";
    return gp.str();
}

int cmd_price(const Options& o, std::ostream& out) {
    const std::vector<double> spots = resolve_spots(o);
    const ParamsPtr p = make_params(o);
    const SurfacePtr s = checked_solve(p.get(), solver_options(o, o.order, o.nonlinearity), false);

    Csv csv;
    csv.meta("command", "price");
    model_metadata(csv, o, p.get());
    solver_metadata(csv, o, o.order, o.nonlinearity);
    csv.meta("dx", o.dx);
    csv.meta("dtau", o.dtau);
    run_metadata(csv, "", s.get());
    csv.header("S,V_rapm,V_bs,diff");
    for (double spot : spots) {
        const double v = price(s.get(), spot);
        double bs = 0.0;
        rapm_bs_call_price(p.get(), spot, 0.0, &bs);
        csv.row({spot, v, bs, v - bs});
    }
    const std::string path = o.out + "_price.csv";
    write_file(path, csv.str());
    write_file(o.out + "_price.gp", gnuplot_script(o, path));
    out << "wrote " << path << " (" << spots.size() << " rows) and " << o.out << "_price.gp\n";
    return kOk;
}

int cmd_surface(const Options& o, std::ostream& out) {
    const ParamsPtr p = make_params(o);
    const SurfacePtr s = checked_solve(p.get(), solver_options(o, o.order, o.nonlinearity), false);
    const std::vector<double> x = nodes(s.get());
    const std::size_t levels = rapm_surface_level_count(s.get());

    Csv csv;
    csv.meta("command", "surface");
    model_metadata(csv, o, p.get());
    solver_metadata(csv, o, o.order, o.nonlinearity);
    csv.meta("dx", o.dx);
    csv.meta("dtau", o.dtau);
    csv.meta("stride", std::to_string(o.stride));
    run_metadata(csv, "", s.get());
    csv.header("tau,t,x,S,u,v,V");
    std::vector<double> u(x.size()), v(x.size());
    std::size_t rows = 0;
    const double lo = std::log(0.5), hi = std::log(2.0);
    for (std::size_t level = 0; level < levels; ++level) {
        if (level % static_cast<std::size_t>(o.stride) != 0 && level + 1 != levels) {
            continue;
        }
        double tau = 0.0;
        rapm_surface_tau(s.get(), level, &tau);
        rapm_surface_u(s.get(), level, u.data(), u.size());
        rapm_surface_v(s.get(), level, v.data(), v.size());
        const double t = std::max(0.0, o.expiry - 2.0 * tau / (o.sigma * o.sigma));
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (x[i] < lo - 1e-12 || x[i] > hi + 1e-12) {
                continue;
            }
            const double spot = o.strike * std::exp(x[i]);
            csv.row({tau, t, x[i], spot, u[i], v[i], spot * u[i]});
            ++rows;
        }
    }
    const std::string path = o.out + "_surface.csv";
    write_file(path, csv.str());
    out << "wrote " << path << " (" << rows << " rows)\n";
    return kOk;
}

std::vector<double> parse_ladder(const std::string& text) {
    std::vector<double> ladder;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        double dx = 0.0;
        try {
            dx = parse_number(item);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("--ladder: ") + e.what());
        }
        require(dx > 0, "--ladder entries must be positive");
        ladder.push_back(dx);
    }
    require(!ladder.empty(), "--ladder must name at least one spacing");
    return ladder;
}

struct ConvergeResult {
    double dx_eff = 0.0;
    double value = 0.0;
};

int cmd_converge(const Options& o, std::ostream& out) {
    const std::vector<double> ladder = parse_ladder(o.ladder);
    for (double dx : ladder) {
        require(dx < 2 * o.radius, "--ladder entries must lie in (0, 2 * radius)");
    }
    const ParamsPtr p = make_params(o);
    const std::array<std::pair<const char*, const char*>, 4> variants{
        {{"p1", "group"}, {"p1", "quadrature"}, {"p2", "group"}, {"p2", "quadrature"}}};

    std::vector<std::future<ConvergeResult>> jobs;
    for (const auto& [order, nonlinearity] : variants) {
        for (double dx : ladder) {
            Options run = o;
            run.dx = dx;
            const rapm_solver_options opt = solver_options(run, order, nonlinearity);
            jobs.push_back(std::async(std::launch::async, [&p, opt, strike = o.strike] {
                const SurfacePtr s = checked_solve(p.get(), opt, false);
                return ConvergeResult{diagnostics(s.get()).dx, price(s.get(), strike)};
            }));
        }
    }
    // Collect in submission order; rethrow the first failure after all finish.
    std::vector<ConvergeResult> results;
    std::exception_ptr failure;
    for (auto& job : jobs) {
        try {
            results.push_back(job.get());
        } catch (...) {
            if (!failure) {
                failure = std::current_exception();
            }
            results.push_back({});
        }
    }
    if (failure) {
        std::rethrow_exception(failure);
    }

    Csv csv;
    csv.meta("command", "converge");
    model_metadata(csv, o, p.get());
    solver_metadata(csv, o, "all", "all");
    csv.meta("dtau", o.dtau);
    csv.meta("ladder", o.ladder);
    csv.header("order,nonlinearity,dx,dx_eff,V_atm,change");
    std::size_t k = 0;
    for (const auto& [order, nonlinearity] : variants) {
        double previous = 0.0;
        for (std::size_t i = 0; i < ladder.size(); ++i, ++k) {
            const ConvergeResult& r = results[k];
            const double change = i == 0 ? 0.0 : r.value - previous;
            previous = r.value;
            csv.row({order, nonlinearity, format_double(ladder[i]), format_double(r.dx_eff),
                     format_double(r.value), format_double(change)});
        }
    }
    const std::string path = o.out + "_converge.csv";
    write_file(path, csv.str());
    out << "wrote " << path << " (" << results.size() << " rows)\n";
    return kOk;
}

int cmd_compare(const Options& o, std::ostream& out) {
    const ParamsPtr p = make_params(o);
    const double fdm_dx = o.fdm_dx > 0 ? o.fdm_dx : o.dx;
    const double fdm_dtau = o.fdm_dtau > 0 ? o.fdm_dtau : std::min(o.dtau, fdm_dx * fdm_dx);
    Options fdm_run = o;
    fdm_run.dx = fdm_dx;
    fdm_run.dtau = fdm_dtau;
    const rapm_solver_options fem_opt = solver_options(o, o.order, o.nonlinearity);
    const rapm_solver_options fdm_opt = solver_options(fdm_run, "p1", "group");

    auto fem_job = std::async(std::launch::async,
                              [&] { return checked_solve(p.get(), fem_opt, false); });
    auto fdm_job = std::async(std::launch::async,
                              [&] { return checked_solve(p.get(), fdm_opt, true); });
    // get() both before letting either exception escape
    SurfacePtr fem, fdm;
    std::exception_ptr failure;
    try {
        fem = fem_job.get();
    } catch (...) {
        failure = std::current_exception();
    }
    try {
        fdm = fdm_job.get();
    } catch (...) {
        if (!failure) {
            failure = std::current_exception();
        }
    }
    if (failure) {
        std::rethrow_exception(failure);
    }

    const std::vector<double> fem_x = nodes(fem.get());
    const std::vector<double> fdm_x = nodes(fdm.get());
    const std::vector<double>& coarse = fem_x.size() <= fdm_x.size() ? fem_x : fdm_x;
    const double lo = std::log(0.5), hi = std::log(2.0);

    struct Row {
        double spot, fem, fdm;
    };
    std::vector<Row> rows;
    double max_diff = 0.0, sum_diff = 0.0;
    for (double x : coarse) {
        if (x < lo - 1e-12 || x > hi + 1e-12) {
            continue;
        }
        const double spot = o.strike * std::exp(x);
        const Row r{spot, price(fem.get(), spot), price(fdm.get(), spot)};
        const double diff = std::abs(r.fem - r.fdm);
        max_diff = std::max(max_diff, diff);
        sum_diff += diff;
        rows.push_back(r);
    }
    const double mean_diff = rows.empty() ? 0.0 : sum_diff / static_cast<double>(rows.size());

    Csv csv;
    csv.meta("command", "compare");
    model_metadata(csv, o, p.get());
    solver_metadata(csv, o, o.order, o.nonlinearity);
    csv.meta("dx", o.dx);
    csv.meta("dtau", o.dtau);
    csv.meta("fdm_dx", fdm_dx);
    csv.meta("fdm_dtau", fdm_dtau);
    run_metadata(csv, "fem_", fem.get());
    run_metadata(csv, "fdm_", fdm.get());
    csv.meta("grid", fem_x.size() <= fdm_x.size() ? "fem" : "fdm");
    csv.meta("max_abs_diff", max_diff);
    csv.meta("mean_abs_diff", mean_diff);
    csv.header("S,V_fem,V_fdm,abs_diff");
    for (const Row& r : rows) {
        csv.row({r.spot, r.fem, r.fdm, std::abs(r.fem - r.fdm)});
    }
    const std::string path = o.out + "_compare.csv";
    write_file(path, csv.str());
    out << "wrote " << path << " (" << rows.size() << " rows)\n"
        << "max_abs_diff=" << format_double(max_diff)
        << " mean_abs_diff=" << format_double(mean_diff) << " over S in ["
        << format_double(0.5 * o.strike) << ", " << format_double(2.0 * o.strike) << "]\n";
    return kOk;
}

void dump_failure(const Options& o, const NumericalFailure& f, std::ostream& err) {
    err << "error: " << f.what() << '\n'
        << "# status=" << rapm_status_string(f.status) << '\n';
    if (!f.surface) {
        return;
    }
    const rapm_diagnostics d = diagnostics(f.surface.get());
    double tau = 0.0;
    rapm_surface_tau(f.surface.get(), 0, &tau);
    err << "# last_finite_tau=" << format_double(tau) << '\n'
        << "# dx=" << format_double(d.dx) << '\n'
        << "# dtau=" << format_double(d.dtau) << '\n'
        << "# dtau_over_dx2=" << format_double(d.dtau_over_dx2) << '\n'
        << "# planned_steps=" << d.steps << '\n';
    const std::vector<double> x = nodes(f.surface.get());
    std::vector<double> u(x.size());
    rapm_surface_u(f.surface.get(), 0, u.data(), u.size());
    Csv csv;
    csv.meta("command", "failure");
    csv.meta("status", rapm_status_string(f.status));
    csv.meta("last_finite_tau", tau);
    csv.meta("dtau_over_dx2", d.dtau_over_dx2);
    csv.header("x,u");
    for (std::size_t i = 0; i < x.size(); ++i) {
        csv.row({x[i], u[i]});
    }
    const std::string path = o.out + "_failure.csv";
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (file << csv.str()) {
        err << "# last finite state written to " << path << '\n';
    }
}

void add_options(CLI::App& app, Options& o) {
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    app.add_option("--rate", o.rate, "risk-free rate r")->capture_default_str();
    app.add_option("--sigma", o.sigma, "volatility")->capture_default_str();
    app.add_option("--strike", o.strike, "strike K")->capture_default_str();
    app.add_option("--expiry", o.expiry, "maturity T in years")->capture_default_str();
    app.add_option("--risk-premium", o.risk_premium, "risk premium coefficient C")
        ->capture_default_str();
    app.add_option("--txn-cost", o.txn_cost, "transaction cost measure M")->capture_default_str();
    app.add_option("--radius", o.radius, "domain half-width in ln(S/K)")->capture_default_str();
    app.add_option("--dx", o.dx, "element spacing")->capture_default_str();
    app.add_option("--dtau", o.dtau, "time step in transformed time")->capture_default_str();
    app.add_option("--theta", o.theta, "theta of the time scheme")->capture_default_str();
    app.add_option("--rannacher", o.rannacher, "backward Euler start-up substeps")
        ->capture_default_str();
    app.add_option("--order", o.order, "element order")
        ->check(CLI::IsMember({"p1", "p2"}))
        ->capture_default_str();
    app.add_option("--nonlinearity", o.nonlinearity, "treatment of the power term")
        ->check(CLI::IsMember({"group", "quadrature"}))
        ->capture_default_str();
    app.add_option("--mass", o.mass, "inner inverse mass")
        ->check(CLI::IsMember({"lumped", "consistent"}))
        ->capture_default_str();
    app.add_option("--power", o.power, "handling of negative v")
        ->check(CLI::IsMember({"signed", "clamped"}))
        ->capture_default_str();
    app.add_option("--boundary-v", o.boundary_v, "boundary values of v")
        ->check(CLI::IsMember({"copy", "extrapolate"}))
        ->capture_default_str();
    app.add_option("--spots", o.spots, "a,b,c or start:stop:step (default K/2 to 2K)");
    app.add_option("--out", o.out, "output path prefix")->capture_default_str();
    app.add_option("--config", o.config, "key = value file; flags override it");
    app.add_option("--ladder", o.ladder, "converge: comma-separated dx values")
        ->capture_default_str();
    app.add_option("--fdm-dx", o.fdm_dx, "compare: grid spacing of the reference (0: --dx)")
        ->capture_default_str();
    app.add_option("--fdm-dtau", o.fdm_dtau,
                   "compare: time step of the reference (0: min(dtau, fdm_dx^2))")
        ->capture_default_str();
    app.add_option("--stride", o.stride, "surface: write every n-th time level")
        ->capture_default_str();
}

// Finds the last --config value in the raw arguments.
std::optional<std::string> find_config(const std::vector<std::string>& args) {
    std::optional<std::string> path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) {
            path = args[i + 1];
        } else if (args[i].rfind("--config=", 0) == 0) {
            path = args[i].substr(9);
        }
    }
    return path;
}

}  // namespace

std::string format_double(double value) {
    std::array<char, 64> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    if (ec != std::errc()) {
        return "nan";
    }
    return {buf.data(), ptr};
}

std::vector<double> parse_spots(const std::string& text) {
    std::vector<double> spots;
    const std::string t = trim(text);
    if (t.find(':') != std::string::npos) {
        std::vector<double> parts;
        std::stringstream ss(t);
        std::string item;
        while (std::getline(ss, item, ':')) {
            parts.push_back(parse_number(item));
        }
        if (parts.size() != 3) {
            throw std::invalid_argument("range must be start:stop:step");
        }
        const double start = parts[0], stop = parts[1], step = parts[2];
        if (!(step > 0) || !(stop >= start)) {
            throw std::invalid_argument("range needs step > 0 and stop >= start");
        }
        const double span = (stop - start) / step;
        if (span > 1e6) {
            throw std::invalid_argument("range has too many points");
        }
        const auto count = static_cast<long long>(std::floor(span + 1e-9));
        for (long long i = 0; i <= count; ++i) {
            spots.push_back(start + step * static_cast<double>(i));
        }
        return spots;
    }
    std::stringstream ss(t);
    std::string item;
    while (std::getline(ss, item, ',')) {
        spots.push_back(parse_number(item));
    }
    if (spots.empty()) {
        throw std::invalid_argument("empty spot list");
    }
    return spots;
}

std::vector<std::string> config_to_args(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::invalid_argument("cannot read config file '" + path + "'");
    }
    std::vector<std::string> args;
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        const auto hash = line.find('#');
        if (hash != std::string::npos) {
            line.erase(hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        const std::string where = path + ":" + std::to_string(number);
        if (eq == std::string::npos) {
            throw std::invalid_argument(where + ": expected key = value");
        }
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        std::replace(key.begin(), key.end(), '_', '-');
        if (!config_keys().contains(key)) {
            throw std::invalid_argument(where + ": unknown key '" + key + "'");
        }
        if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') &&
            value.back() == value.front()) {
            value = value.substr(1, value.size() - 2);
        }
        args.push_back("--" + key);
        args.push_back(value);
    }
    return args;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Options o;
    CLI::App app("Option pricing under the risk-adjusted pricing methodology", "rapm");
    add_options(app, o);
    app.require_subcommand(1);
    app.add_subcommand("price", "price a call at t = 0 over a list of spots")->fallthrough();
    app.add_subcommand("surface", "write the solution surface u(x, tau)")->fallthrough();
    app.add_subcommand("converge", "refinement study of V(K, 0) for all four variants")
        ->fallthrough();
    app.add_subcommand("compare", "element solver against the finite-difference reference")
        ->fallthrough();

    std::vector<std::string> tokens;
    try {
        if (const auto path = find_config(args)) {
            tokens = config_to_args(*path);
        }
    } catch (const std::invalid_argument& e) {
        err << "error: --config: " << e.what() << '\n';
        return kConfigError;
    }
    tokens.insert(tokens.end(), args.begin(), args.end());

    try {
        // CLI11 takes the arguments in reverse order.
        std::vector<std::string> reversed(tokens.rbegin(), tokens.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kConfigError;
    }

    try {
        validate(o);
        const CLI::App* sub = app.get_subcommands().front();
        const std::string& name = sub->get_name();
        if (name == "price") {
            return cmd_price(o, out);
        }
        if (name == "surface") {
            return cmd_surface(o, out);
        }
        if (name == "converge") {
            return cmd_converge(o, out);
        }
        return cmd_compare(o, out);
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kConfigError;
    } catch (const NumericalFailure& e) {
        dump_failure(o, e, err);
        return kNumericalFailure;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kNumericalFailure;
    }
}

}  // namespace rapm_cli
