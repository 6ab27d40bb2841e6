// Command-line front end: ad-hoc tests on CSV data, simulation studies, timing.

#include "cattest/cattest.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

enum ExitCode : int {
    exit_ok = 0,
    exit_input = 2,      // unreadable or malformed data
    exit_config = 3,     // bad flags, unknown columns
    exit_degenerate = 4, // a tested variable has a single category
};

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DegenerateVariable : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string token;
    while (std::getline(ss, token, sep)) {
        if (!token.empty()) {
            out.push_back(token);
        }
    }
    return out;
}

long long parse_integer(const std::string& token) {
    std::size_t used = 0;
    long long v = 0;
    try {
        v = std::stoll(token, &used);
    } catch (const std::exception&) {
        throw UsageError("not an integer: '" + token + "'");
    }
    if (used != token.size()) {
        throw UsageError("not an integer: '" + token + "'");
    }
    return v;
}

/// "40:1000:20,2000" -> 40, 60, ..., 1000, 2000
std::vector<long long> parse_int_list(const std::string& text) {
    std::vector<long long> out;
    for (const auto& token : split(text, ',')) {
        const auto parts = split(token, ':');
        if (parts.size() == 1) {
            out.push_back(parse_integer(parts[0]));
        } else if (parts.size() == 3) {
            const long long lo = parse_integer(parts[0]), hi = parse_integer(parts[1]), step = parse_integer(parts[2]);
            if (step <= 0) {
                throw UsageError("range step must be positive: '" + token + "'");
            }
            for (long long v = lo; v <= hi; v += step) {
                out.push_back(v);
            }
        } else {
            throw UsageError("bad list element '" + token + "' (expected N or LO:HI:STEP)");
        }
    }
    return out;
}

std::vector<std::size_t> to_sizes(const std::string& text) {
    std::vector<std::size_t> out;
    for (long long v : parse_int_list(text)) {
        if (v <= 0) {
            throw UsageError("sample sizes must be positive");
        }
        if (out.empty() || out.back() != static_cast<std::size_t>(v)) {
            out.push_back(static_cast<std::size_t>(v));
        }
    }
    return out;
}

std::vector<int> to_ints(const std::string& text) {
    std::vector<int> out;
    for (long long v : parse_int_list(text)) {
        out.push_back(static_cast<int>(v));
    }
    return out;
}

std::vector<cattest::Method> to_methods(const std::string& text) {
    std::vector<cattest::Method> out;
    for (const auto& token : split(text, ',')) {
        const auto m = cattest::parse_method(token);
        if (!m) {
            throw UsageError("unknown method '" + token + "' (X2, G2, PermG2, PermX2)");
        }
        out.push_back(*m);
    }
    return out;
}

std::vector<std::pair<std::size_t, int>> to_bench_points(const std::string& text) {
    std::vector<std::pair<std::size_t, int>> out;
    for (const auto& token : split(text, ',')) {
        const auto parts = split(token, 'x');
        if (parts.size() != 2) {
            throw UsageError("bench point must look like NxCARD: '" + token + "'");
        }
        out.emplace_back(static_cast<std::size_t>(parse_integer(parts[0])), static_cast<int>(parse_integer(parts[1])));
    }
    return out;
}

struct CommonOptions {
    std::uint64_t seed = 2020;
    double alpha = 0.05;
    int perms = 999;
    unsigned workers = 1;
    std::string out;
    bool raw_pvalue = false;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
    cmd->add_option("--seed", o.seed, "Run seed")->capture_default_str();
    cmd->add_option("--alpha", o.alpha, "Significance level")->capture_default_str();
    cmd->add_option("--perms", o.perms, "Permutations per permutation test")->capture_default_str();
    cmd->add_option("--workers", o.workers, "Worker threads (1 = serial)")->capture_default_str();
    cmd->add_option("--out", o.out, "Output file (default: stdout)");
    cmd->add_flag("--raw-pvalue", o.raw_pvalue, "Permutation p-value as #{T_b >= T} / R instead of (1 + #) / (R + 1)");
}

struct SimOptions {
    std::string sizes;
    std::string cards;
    std::string cond = "0";
    std::string dist = "binomial";
    std::string methods = "X2,G2,PermG2";
    std::size_t columns = 100;
    double inflation = 1.5;
    int reps = 1000;
    std::string b_values = "-3:3:1";
    std::string bench_points = "100x2,200x3,400x4,800x5";
    int bench_reps = 5;
};

cattest::ExperimentConfig make_config(const CommonOptions& c, const SimOptions& s) {
    cattest::ExperimentConfig cfg;
    cfg.sizes = to_sizes(s.sizes);
    cfg.cards = to_ints(s.cards);
    cfg.conditioning = to_ints(s.cond);
    cfg.methods = to_methods(s.methods);
    const auto dist = cattest::parse_distribution(s.dist);
    if (!dist) {
        throw UsageError("unknown distribution '" + s.dist + "' (binomial, uniform)");
    }
    cfg.distribution = *dist;
    cfg.alpha = c.alpha;
    cfg.n_permutations = c.perms;
    cfg.pvalue_form = c.raw_pvalue ? cattest::PValueForm::RawProportion : cattest::PValueForm::AddOne;
    cfg.seed = c.seed;
    cfg.workers = c.workers;
    cfg.p_columns = s.columns;
    cfg.band_inflation = s.inflation;
    cfg.replications = s.reps;
    cfg.b_values = to_ints(s.b_values);
    cfg.bench_points = to_bench_points(s.bench_points);
    cfg.bench_repetitions = s.bench_reps;
    return cfg;
}

template <typename Rows>
void emit(const Rows& rows, const CommonOptions& common, const cattest::ExperimentConfig& cfg, std::string_view experiment) {
    const std::string hash = cattest::config_hash(cfg, experiment);
    if (common.out.empty()) {
        cattest::write_csv(std::cout, rows);
        std::cerr << "config_hash=" << hash << '\n';
        return;
    }
    std::ofstream file(common.out, std::ios::binary);
    if (!file) {
        throw UsageError("cannot open output file '" + common.out + "'");
    }
    cattest::write_csv(file, rows);

    std::ofstream meta(common.out + ".meta.json", std::ios::binary);
    nlohmann::json j;
    j["experiment"] = experiment;
    j["config"] = cattest::describe(cfg, experiment);
    j["config_hash"] = hash;
    j["seed"] = cfg.seed;
    meta << j.dump(2) << '\n';
}

struct TestOptions {
    std::string data;
    std::string x;
    std::string y;
    std::vector<std::string> z;
    std::string method = "X2";
    std::string format = "text";
};

int run_test_command(const CommonOptions& common, const TestOptions& t) {
    std::ifstream in(t.data, std::ios::binary);
    if (!in) {
        std::cerr << "error: cannot read '" << t.data << "'\n";
        return exit_input;
    }
    cattest::CsvTable table;
    try {
        table = cattest::read_csv(in);
    } catch (const cattest::InputError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_input;
    }

    auto lookup = [&](const std::string& name) -> std::size_t {
        const auto idx = table.column_index(name);
        if (!idx) {
            throw UsageError("unknown column '" + name + "'");
        }
        return *idx;
    };
    const auto method = cattest::parse_method(t.method);
    if (!method) {
        throw UsageError("unknown method '" + t.method + "'");
    }
    const std::size_t xi = lookup(t.x);
    const std::size_t yi = lookup(t.y);
    std::vector<std::size_t> zi;
    for (const auto& name : t.z) {
        zi.push_back(lookup(name));
    }
    if (table.rows.empty()) {
        std::cerr << "error: CSV has no data rows\n";
        return exit_input;
    }

    const auto x = cattest::encode_column(table, xi);
    const auto y = cattest::encode_column(table, yi);
    for (const auto* col : {&x, &y}) {
        if (col->codes.cardinality() < 2) {
            throw DegenerateVariable("tested variable has a single category");
        }
    }
    std::vector<cattest::CategoryVector> z;
    for (std::size_t k : zi) {
        z.push_back(cattest::encode_column(table, k).codes);
    }

    cattest::PermutationPlan plan;
    plan.n_permutations = common.perms;
    plan.seed = common.seed;
    plan.workers = common.workers;
    plan.form = common.raw_pvalue ? cattest::PValueForm::RawProportion : cattest::PValueForm::AddOne;
    const auto r = cattest::run_test(x.codes, y.codes, z, *method, plan);

    std::ostringstream out;
    char buf[64];
    auto num = [&](const std::optional<double>& v) -> std::string {
        if (!v) {
            return "NA";
        }
        std::snprintf(buf, sizeof(buf), "%.10g", *v);
        return buf;
    };
    if (t.format == "csv") {
        out << "method,statistic,dof,p_value,computable,n\n"
            << cattest::to_string(r.method) << ',' << num(r.statistic) << ',' << r.dof << ',' << num(r.p_value) << ','
            << (r.computable ? "true" : "false") << ',' << x.codes.size() << '\n';
    } else if (t.format == "json") {
        nlohmann::json j;
        j["method"] = cattest::to_string(r.method);
        j["computable"] = r.computable;
        j["statistic"] = r.statistic ? nlohmann::json(*r.statistic) : nlohmann::json(nullptr);
        j["dof"] = r.dof;
        j["p_value"] = r.p_value ? nlohmann::json(*r.p_value) : nlohmann::json(nullptr);
        j["n"] = x.codes.size();
        out << j.dump() << '\n';
    } else {
        out << "method:     " << cattest::to_string(r.method) << '\n'
            << "statistic:  " << num(r.statistic) << '\n'
            << "dof:        " << r.dof << '\n'
            << "p-value:    " << num(r.p_value) << '\n'
            << "computable: " << (r.computable ? "yes" : "no (zero row or column total)") << '\n';
    }

    if (common.out.empty()) {
        std::cout << out.str();
    } else {
        std::ofstream file(common.out, std::ios::binary);
        if (!file) {
            throw UsageError("cannot open output file '" + common.out + "'");
        }
        file << out.str();
    }
    return exit_ok;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Categorical independence tests and Monte Carlo studies"};
    app.require_subcommand(1);

    CommonOptions test_common, diff_common, type1_common, power_common, bench_common;
    TestOptions test_opts;
    SimOptions diff_opts, type1_opts, power_opts, bench_opts;
    diff_opts.sizes = "40:1000:20,2000:10000:1000";
    diff_opts.cards = "2,3,4,5";
    type1_opts.sizes = "40:1000:20";
    type1_opts.cards = "2,3,4,5";
    power_opts.sizes = "30,50,100,200";
    power_opts.cards = "2,4";
    bench_opts.sizes = "1";
    bench_opts.cards = "2";
    bench_opts.methods = "X2,G2,PermG2";

    auto* test = app.add_subcommand("test", "Test independence of two CSV columns, optionally given others");
    add_common(test, test_common);
    test->add_option("--data", test_opts.data, "CSV file with a header row")->required();
    test->add_option("--x", test_opts.x, "First variable")->required();
    test->add_option("--y", test_opts.y, "Second variable")->required();
    test->add_option("--z", test_opts.z, "Conditioning variable (repeatable)");
    test->add_option("--method", test_opts.method, "X2, G2, PermG2 or PermX2")->capture_default_str();
    test->add_option("--format", test_opts.format, "text, csv or json")->check(CLI::IsMember({"text", "csv", "json"}))->capture_default_str();

    auto add_grid = [](CLI::App* cmd, SimOptions& s) {
        cmd->add_option("--sizes", s.sizes, "Sample sizes, e.g. 40:1000:20,2000")->capture_default_str();
        cmd->add_option("--cards", s.cards, "Cardinalities")->capture_default_str();
        cmd->add_option("--cond", s.cond, "Numbers of conditioning variables")->capture_default_str();
        cmd->add_option("--dist", s.dist, "binomial or uniform")->capture_default_str();
        cmd->add_option("--columns", s.columns, "Columns per simulated matrix")->capture_default_str();
    };

    auto* diff = app.add_subcommand("sim-diff", "Mean G2 - X2 over all pairs of null columns");
    add_common(diff, diff_common);
    add_grid(diff, diff_opts);

    auto* type1 = app.add_subcommand("sim-type1", "Type I error over all pairs of null columns");
    add_common(type1, type1_common);
    add_grid(type1, type1_opts);
    type1->add_option("--methods", type1_opts.methods, "Methods")->capture_default_str();
    type1->add_option("--band-inflation", type1_opts.inflation, "Multiplier on the binomial SE of the size band")->capture_default_str();

    auto* power = app.add_subcommand("sim-power", "Power under the logistic-link alternative");
    add_common(power, power_common);
    power->add_option("--sizes", power_opts.sizes, "Sample sizes")->capture_default_str();
    power->add_option("--cards", power_opts.cards, "Binomial sizes |X| = |Y| (tables have |X| + 1 levels)")->capture_default_str();
    power->add_option("--methods", power_opts.methods, "Methods")->capture_default_str();
    power->add_option("--reps", power_opts.reps, "Replications per point")->capture_default_str();
    power->add_option("--b-values", power_opts.b_values, "Effect sizes b")->capture_default_str();

    auto* bench = app.add_subcommand("bench", "Time all-pairs sweeps per method");
    add_common(bench, bench_common);
    bench->add_option("--points", bench_opts.bench_points, "Configurations NxCARD")->capture_default_str();
    bench->add_option("--methods", bench_opts.methods, "Methods")->capture_default_str();
    bench->add_option("--columns", bench_opts.columns, "Columns per matrix")->capture_default_str();
    bench->add_option("--reps", bench_opts.bench_reps, "Timed repetitions (median reported)")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_config;
    }

    try {
        if (*test) {
            return run_test_command(test_common, test_opts);
        }
        if (*diff) {
            const auto cfg = make_config(diff_common, diff_opts);
            emit(cattest::run_diff(cfg), diff_common, cfg, "diff");
        } else if (*type1) {
            const auto cfg = make_config(type1_common, type1_opts);
            emit(cattest::run_type1(cfg), type1_common, cfg, "type1");
        } else if (*power) {
            const auto cfg = make_config(power_common, power_opts);
            emit(cattest::run_power(cfg), power_common, cfg, "power");
        } else if (*bench) {
            const auto cfg = make_config(bench_common, bench_opts);
            emit(cattest::run_bench(cfg), bench_common, cfg, "bench");
        }
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_config;
    } catch (const DegenerateVariable& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_degenerate;
    } catch (const cattest::InputError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_config;
    }
    return exit_ok;
}
