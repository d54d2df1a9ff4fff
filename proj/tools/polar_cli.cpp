// polar-degree-lab: degree, lift, census, and classification front end for
// sphere self-maps leaving the polar subsphere P = {x0 = x1 = 0} completely
// invariant. JSON is the machine interface; table and csv are sugar.
//
// Exit codes: 0 all verdicts pass, 1 ran but some verdict failed, 2 usage or
// spec error, 3 computation error.

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "polar/census.hpp"
#include "polar/local.hpp"

using json = nlohmann::ordered_json;
using namespace polar;

namespace {

constexpr const char* kSchema = "polar-degree-lab/1";

struct SpecError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// --- map spec grammar -------------------------------------------------------
// Whitespace-separated key=value tokens; braces protect nested specs, as in
// family=perturbed base={family=power_s2 d=2} amplitude=0.05 seed=7

std::vector<std::string> spec_tokens(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    int depth = 0;
    for (char ch : s) {
        if (ch == '{') ++depth;
        if (ch == '}' && --depth < 0) throw SpecError("unbalanced '}' in map spec");
        if (std::isspace(static_cast<unsigned char>(ch)) && depth == 0) {
            if (!cur.empty()) {
                out.push_back(cur);
                cur.clear();
            }
        } else {
            cur.push_back(ch);
        }
    }
    if (depth != 0) throw SpecError("unbalanced '{' in map spec");
    if (!cur.empty()) out.push_back(cur);
    return out;
}

std::map<std::string, std::string> spec_pairs(const std::vector<std::string>& tokens) {
    std::map<std::string, std::string> kv;
    for (const std::string& tok : tokens) {
        std::size_t eq = tok.find('=');
        if (eq == std::string::npos || eq == 0)
            throw SpecError("expected key=value, got '" + tok + "'");
        std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
        if (val.empty()) throw SpecError("empty value for key '" + key + "'");
        if (!kv.emplace(key, val).second) throw SpecError("duplicate key '" + key + "'");
    }
    return kv;
}

long long parse_ll(const std::string& key, const std::string& v) {
    long long out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size())
        throw SpecError("key '" + key + "' wants an integer, got '" + v + "'");
    return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size())
        throw SpecError("key '" + key + "' wants a nonnegative integer, got '" + v + "'");
    return out;
}

double parse_dbl(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        double out = std::stod(v, &used);
        if (used == v.size() && std::isfinite(out)) return out;
    } catch (const std::exception&) {
    }
    throw SpecError("key '" + key + "' wants a number, got '" + v + "'");
}

SphereMap parse_map_spec(const std::string& spec);

SphereMap build_family(std::map<std::string, std::string> kv) {
    auto take = [&kv](const char* key) {
        auto it = kv.find(key);
        if (it == kv.end()) throw SpecError(std::string("missing key '") + key + "'");
        std::string v = it->second;
        kv.erase(it);
        return v;
    };
    std::string family = take("family");
    SphereMap f;
    try {
        if (family == "power_s2") {
            f = power_s2(parse_ll("d", take("d")));
        } else if (family == "join_power") {
            long long a = parse_ll("a", take("a"));
            long long b = parse_ll("b", take("b"));
            f = join_power(a, b);
        } else if (family == "identity") {
            f = identity_map(static_cast<int>(parse_ll("m", take("m"))));
        } else if (family == "antipodal") {
            f = antipodal_map(static_cast<int>(parse_ll("m", take("m"))));
        } else if (family == "normal_model") {
            f = normal_model(parse_dbl("lambda", take("lambda")));
        } else if (family == "perturbed") {
            std::string base = take("base");
            if (base.size() < 2 || base.front() != '{' || base.back() != '}')
                throw SpecError("key 'base' wants a brace-wrapped spec, got '" + base + "'");
            SphereMap inner = parse_map_spec(base.substr(1, base.size() - 2));
            double amp = parse_dbl("amplitude", take("amplitude"));
            std::uint64_t seed = parse_u64("seed", take("seed"));
            f = perturb(inner, amp, seed);
        } else {
            throw SpecError("unknown family '" + family + "'");
        }
    } catch (const Error& e) {
        // parameter rejected by the family constructor: still a spec error
        throw SpecError(e.what());
    }
    if (!kv.empty())
        throw SpecError("unexpected key '" + kv.begin()->first + "' for family " + family);
    return f;
}

SphereMap parse_map_spec(const std::string& spec) {
    auto tokens = spec_tokens(spec);
    if (tokens.empty()) throw SpecError("empty map spec");
    return build_family(spec_pairs(tokens));
}

// --- config files -----------------------------------------------------------
// Line oriented: a line starting with family= is the map spec; any other
// nonempty line is one option default (nmax, delta, out, seed, jobs).
// '#' starts a comment.

struct ConfigFile {
    std::optional<std::string> map;
    std::map<std::string, std::string> defaults;
};

ConfigFile read_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SpecError("cannot open config file: " + path);
    ConfigFile cfg;
    std::string line;
    while (std::getline(in, line)) {
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto tokens = spec_tokens(line);
        if (tokens.empty()) continue;
        if (tokens.front().rfind("family=", 0) == 0) {
            if (cfg.map) throw SpecError("config file has more than one family line");
            std::string joined;
            for (const auto& t : tokens) {
                if (!joined.empty()) joined += ' ';
                joined += t;
            }
            cfg.map = joined;
            continue;
        }
        if (tokens.size() != 1)
            throw SpecError("config default lines take one key=value, got '" + line + "'");
        auto kv = spec_pairs(tokens);
        const auto& [key, val] = *kv.begin();
        static const char* known[] = {"nmax", "delta", "out", "seed", "jobs"};
        bool ok = false;
        for (const char* k : known) ok = ok || key == k;
        if (!ok) throw SpecError("unknown config key '" + key + "'");
        if (!cfg.defaults.emplace(key, val).second)
            throw SpecError("duplicate config key '" + key + "'");
    }
    return cfg;
}

// --- serialization helpers --------------------------------------------------

json vec_json(const Vec& v) {
    json a = json::array();
    for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string fmt_g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

void print_table(const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> w(header.size());
    for (std::size_t j = 0; j < header.size(); ++j) w[j] = header[j].size();
    for (const auto& r : rows)
        for (std::size_t j = 0; j < r.size(); ++j) w[j] = std::max(w[j], r[j].size());
    auto line = [&](const std::vector<std::string>& r) {
        std::string out;
        for (std::size_t j = 0; j < r.size(); ++j) {
            if (j) out += "  ";
            out += std::string(w[j] - r[j].size(), ' ') + r[j];
        }
        std::cout << out << "\n";
    };
    line(header);
    for (const auto& r : rows) line(r);
}

void print_csv(const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
    auto line = [](const std::vector<std::string>& r) {
        std::string out;
        for (std::size_t j = 0; j < r.size(); ++j) {
            if (j) out += ',';
            out += csv_field(r[j]);
        }
        std::cout << out << "\n";
    };
    line(header);
    for (const auto& r : rows) line(r);
}

// --- shared run settings ----------------------------------------------------

struct RunCfg {
    std::string out = "json";
    std::uint64_t seed = 42;
    int jobs = 1;
    int nmax = 6;
    double delta = 0.1;
};

DegreeOpts degree_opts(const RunCfg& cfg) {
    DegreeOpts o;
    o.seed = cfg.seed;
    o.jobs = cfg.jobs;
    return o;
}

CensusOpts census_opts(const RunCfg& cfg) {
    CensusOpts o;
    o.seed = cfg.seed;
    o.jobs = cfg.jobs;
    return o;
}

// --- commands ----------------------------------------------------------------

int cmd_degree(const SphereMap& f, const RunCfg& cfg) {
    DegreeReport rep = check_decomposition(f, degree_opts(cfg));
    if (cfg.out == "json") {
        json j{{"schema", kSchema},
               {"command", "degree"},
               {"map", f.spec},
               {"seed", cfg.seed},
               {"deg", rep.deg_f},
               {"deg_polar", rep.deg_restriction},
               {"transversal", rep.transversal_d},
               {"decomposition_ok", rep.decomposition_ok},
               {"confidence", rep.confidence},
               {"regular_value", vec_json(rep.regular_value_used.x)}};
        std::cout << j.dump(2) << "\n";
    } else {
        std::vector<std::string> header{"deg", "deg_polar", "transversal",
                                        "decomposition_ok", "confidence"};
        std::vector<std::vector<std::string>> rows{
            {std::to_string(rep.deg_f), std::to_string(rep.deg_restriction),
             std::to_string(rep.transversal_d), rep.decomposition_ok ? "true" : "false",
             std::to_string(rep.confidence)}};
        cfg.out == "csv" ? print_csv(header, rows) : print_table(header, rows);
    }
    return rep.decomposition_ok ? 0 : 1;
}

int cmd_transversal(const SphereMap& f, const RunCfg& cfg) {
    TransversalResult tr = transversal_degree_detailed(f, degree_opts(cfg));
    if (cfg.out == "json") {
        json probes = json::array();
        for (const auto& s : tr.samples)
            probes.push_back({{"radius", s.radius},
                              {"turns", s.turns},
                              {"samples", s.params.size()}});
        json j{{"schema", kSchema}, {"command", "transversal"}, {"map", f.spec},
               {"seed", cfg.seed},  {"transversal", tr.d},      {"probes", probes}};
        std::cout << j.dump(2) << "\n";
    } else {
        std::vector<std::string> header{"probe", "radius", "turns", "samples"};
        std::vector<std::vector<std::string>> rows;
        for (std::size_t i = 0; i < tr.samples.size(); ++i)
            rows.push_back({std::to_string(i), fmt_g(tr.samples[i].radius),
                            std::to_string(tr.samples[i].turns),
                            std::to_string(tr.samples[i].params.size())});
        cfg.out == "csv" ? print_csv(header, rows) : print_table(header, rows);
    }
    return 0;
}

json census_rows_json(const GrowthReport& rep) {
    json rows = json::array();
    for (const auto& row : rep.rows) {
        json r{{"n", row.n}};
        r["fix"] = row.fix_count >= 0 ? json(row.fix_count) : json(nullptr);
        r["fix_P"] = row.fix_polar_count >= 0 ? json(row.fix_polar_count) : json(nullptr);
        r["bound"] = row.bound.fits64 ? json(row.bound.value) : json(nullptr);
        r["bound_text"] = row.bound.text;
        r["ok"] = row.verdict();
        r["growth"] = row.growth ? json(*row.growth) : json(nullptr);
        r["flagged"] = row.flagged();
        r["flag_reason"] = row.flag_reason;
        r["continuum"] = row.continuum_flag;
        r["lift_certified"] = row.lift_certified ? json(*row.lift_certified) : json(nullptr);
        r["crosscheck_ok"] = row.crosscheck_ok;
        r["crosscheck_note"] = row.crosscheck_note;
        rows.push_back(std::move(r));
    }
    return rows;
}

json census_summary_json(const TheoremSummary& sum) {
    return json{{"pass", sum.pass()},
                {"failing_rows", sum.failing_rows},
                {"rows_checked", sum.rows_checked},
                {"rows_flagged", sum.rows_flagged},
                {"liminf_estimate",
                 sum.liminf_estimate ? json(*sum.liminf_estimate) : json(nullptr)},
                {"liminf_target", finite_or_null(sum.liminf_target)},
                {"liminf_ok", sum.liminf_ok},
                {"crosschecks_ok", sum.crosschecks_ok},
                {"corollary_applicable", sum.corollary_applicable},
                {"corollary_integer_ok", sum.corollary_integer_ok},
                {"corollary_growth_ok", sum.corollary_growth_ok}};
}

int cmd_census(const SphereMap& f, const RunCfg& cfg) {
    GrowthReport rep = growth_report(f, cfg.nmax, census_opts(cfg));
    TheoremSummary sum = verify_theorem1(rep);
    if (cfg.out == "json") {
        json j{{"schema", kSchema},
               {"command", "census"},
               {"map", f.spec},
               {"seed", cfg.seed},
               {"d", rep.d},
               {"deg", rep.deg_f},
               {"deg_polar", rep.deg_restriction},
               {"rows", census_rows_json(rep)},
               {"summary", census_summary_json(sum)}};
        std::cout << j.dump(2) << "\n";
    } else {
        std::vector<std::string> header{"n", "fix", "fix_P", "bound", "ok", "growth"};
        std::vector<std::vector<std::string>> rows;
        for (const auto& row : rep.rows) {
            bool fl = row.flagged();
            auto count = [fl](long long v) {
                if (v < 0) return std::string("~");
                return fl ? "~" + std::to_string(v) : std::to_string(v);
            };
            rows.push_back({fl ? "~" + std::to_string(row.n) : std::to_string(row.n),
                            count(row.fix_count), count(row.fix_polar_count), row.bound.text,
                            fl ? "~" : (row.verdict() ? "yes" : "no"),
                            row.growth && !fl ? fmt_g(*row.growth) : "~"});
        }
        cfg.out == "csv" ? print_csv(header, rows) : print_table(header, rows);
    }
    return sum.pass() ? 0 : 1;
}

int cmd_lifts(const SphereMap& f, const RunCfg& cfg) {
    LiftSearchOpts lo;
    lo.jobs = cfg.jobs;
    FamilyReport fam = search_family(f, cfg.delta, lo);
    std::optional<long long> polar_fix;
    if (f.hooks.fix_polar_count) polar_fix = f.hooks.fix_polar_count(1);
    if (!polar_fix) {
        try {
            polar_fix = static_cast<long long>(fixed_points_on_polar(f, 1, census_opts(cfg)).size());
        } catch (const Error&) {
            // bound stays unknown; reported as null, skipped in the verdict
        }
    }
    bool consistent = true;
    for (const auto& lift : fam.lifts) consistent = consistent && lift.certificate_consistent;
    bool verdict = fam.nielsen.ok && consistent &&
                   (!polar_fix || fam.free_in_box <= 2 * *polar_fix);

    if (cfg.out == "json") {
        json lifts = json::array();
        for (const auto& lift : fam.lifts) {
            json pts = json::array();
            for (const auto& rec : lift.records)
                pts.push_back({{"t", rec.location.t},
                               {"u", vec_json(rec.location.u)},
                               {"residual", rec.residual},
                               {"cluster", rec.cluster},
                               {"downstairs", vec_json(rec.downstairs.x)}});
            lifts.push_back(
                {{"k", lift.k},
                 {"box_m", lift.box.M},
                 {"box_delta", lift.box.delta},
                 {"certificate",
                  {{"degree", lift.certificate.degree},
                   {"max_depth", lift.certificate.max_depth},
                   {"simplices_accepted", lift.certificate.simplices_accepted},
                   {"min_boundary_norm", lift.certificate.min_boundary_norm}}},
                 {"fixed_points", pts},
                 {"free_in_box", lift.free_in_box()},
                 {"certificate_consistent", lift.certificate_consistent},
                 {"opposing_ok", lift.opposing.ok},
                 {"opposing_min_separation", finite_or_null(lift.opposing.min_separation)}});
        }
        json j{{"schema", kSchema},
               {"command", "lifts"},
               {"map", f.spec},
               {"seed", cfg.seed},
               {"delta", cfg.delta},
               {"d", fam.d},
               {"lifts", lifts},
               {"free_in_box", fam.free_in_box},
               {"certified_nonfree", fam.certified_nonfree},
               {"free_bound", polar_fix ? json(2 * *polar_fix) : json(nullptr)},
               {"nielsen_ok", fam.nielsen.ok},
               {"nielsen_min_separation", finite_or_null(fam.nielsen.min_separation)},
               {"pass", verdict}};
        std::cout << j.dump(2) << "\n";
    } else {
        std::vector<std::string> header{"k",    "box_M",      "cert_degree",
                                        "fixed", "free_in_box", "consistent"};
        std::vector<std::vector<std::string>> rows;
        for (const auto& lift : fam.lifts)
            rows.push_back({std::to_string(lift.k), fmt_g(lift.box.M),
                            std::to_string(lift.certificate.degree),
                            std::to_string(lift.records.size()),
                            lift.free_in_box() ? "yes" : "no",
                            lift.certificate_consistent ? "yes" : "no"});
        cfg.out == "csv" ? print_csv(header, rows) : print_table(header, rows);
    }
    return verdict ? 0 : 1;
}

int cmd_classify(const SphereMap& f, const RunCfg& cfg) {
    auto polar_pts = fixed_points_on_polar(f, 1, census_opts(cfg));
    DegreeOpts dop = degree_opts(cfg);
    bool all_pass = true;
    json records = json::array();
    std::vector<std::vector<std::string>> rows;
    for (const auto& cp : polar_pts) {
        FixedPointClass cls = classify_fixed_point(f, cp.x, dop);
        SectorReport sec = verify_sector_lemma(f, cp.x, cls);
        NeighborhoodEstimate nb = neighborhood_radius(f, cp.x, cls);
        double det = cls.a_p.a.determinant();
        all_pass = all_pass && sec.pass();
        if (cfg.out == "json") {
            json rec{{"point", vec_json(cp.x.x)},
                     {"verdict", verdict_name(cls.verdict)},
                     {"rho", cls.rho},
                     {"det", det},
                     {"singular", std::abs(det) < 1e-6},
                     {"rank1_error", cls.rank1_error},
                     {"norm",
                      {{"kind", cls.norm.kind == AdaptedNorm::Kind::l1_in_basis
                                    ? "l1_in_basis"
                                    : "l2_in_basis"},
                       {"c", cls.norm.c}}},
                     {"sector",
                      {{"pass", sec.pass()},
                       {"delta", sec.delta},
                       {"halvings", sec.halvings},
                       {"samples_checked", sec.samples_checked},
                       {"violations", sec.violations.size()}}},
                     {"neighborhood",
                      {{"delta", nb.delta},
                       {"mesh_radius", nb.mesh_radius},
                       {"gamma_max", nb.gamma_max}}}};
            rec["cone"] = cls.cone ? json{{"lambda", cls.cone->lambda},
                                          {"eps", cls.cone->eps},
                                          {"alpha", cls.cone->alpha}}
                                   : json(nullptr);
            records.push_back(std::move(rec));
        } else {
            std::string pt = "(";
            for (int i = 0; i < cp.x.x.size(); ++i)
                pt += (i ? "," : "") + fmt_g(cp.x.x[i]);
            pt += ")";
            rows.push_back({pt, verdict_name(cls.verdict), fmt_g(cls.rho),
                            std::abs(det) < 1e-6 ? "yes" : "no",
                            sec.pass() ? "yes" : "no", fmt_g(sec.delta), fmt_g(nb.delta)});
        }
    }
    if (cfg.out == "json") {
        json j{{"schema", kSchema}, {"command", "classify"},
               {"map", f.spec},     {"seed", cfg.seed},
               {"records", records}, {"all_pass", all_pass}};
        std::cout << j.dump(2) << "\n";
    } else {
        std::vector<std::string> header{"point",       "verdict",      "rho",
                                        "singular",    "sector_pass",  "sector_delta",
                                        "neigh_delta"};
        cfg.out == "csv" ? print_csv(header, rows) : print_table(header, rows);
    }
    return all_pass ? 0 : 1;
}

// --- verify battery -----------------------------------------------------------

struct Check {
    std::string name;
    bool pass = false;
    json detail;
};

LiftPoint random_cover_point(Rng& rng, int udim, double umax) {
    Vec u(udim);
    while (true) {
        for (int i = 0; i < udim; ++i) u[i] = rng.uniform(-1.0, 1.0);
        if (u.norm() <= 1.0) break;
    }
    return LiftPoint{rng.uniform(-2.0, 2.0), umax * u};
}

Check chk_degree_triples(const RunCfg& cfg) {
    Check c{"degree_triple_exactness", true, json::object()};
    json per = json::array();
    for (long long d : {2LL, 3LL, -2LL, 5LL}) {
        DegreeReport r = check_decomposition(power_s2(d), degree_opts(cfg));
        long long s = d > 0 ? 1 : -1;
        bool ok = r.deg_f == d * s && r.deg_restriction == s && r.transversal_d == d &&
                  r.decomposition_ok && r.confidence >= 3;
        c.pass = c.pass && ok;
        per.push_back({{"d", d},
                       {"deg", r.deg_f},
                       {"deg_polar", r.deg_restriction},
                       {"transversal", r.transversal_d},
                       {"confidence", r.confidence},
                       {"ok", ok}});
    }
    c.detail["families"] = per;
    return c;
}

Check chk_join_triple(const RunCfg& cfg) {
    Check c{"join_family_triple", false, json::object()};
    SphereMap f = join_power(2, 3);
    DegreeReport r = check_decomposition(f, degree_opts(cfg));
    long long t2 = transversal_degree(iterate(f, 2), degree_opts(cfg));
    c.pass = r.deg_f == 6 && r.deg_restriction == 3 && r.transversal_d == 2 &&
             r.decomposition_ok && t2 == 4;
    c.detail = {{"deg", r.deg_f},
                {"deg_polar", r.deg_restriction},
                {"transversal", r.transversal_d},
                {"iterate2_transversal", t2}};
    return c;
}

Check chk_squaring_census(const RunCfg& cfg) {
    Check c{"squaring_census_oracle", true, json::object()};
    GrowthReport rep = growth_report(power_s2(2), 6, census_opts(cfg));
    TheoremSummary sum = verify_theorem1(rep);
    json fixes = json::array();
    for (const auto& row : rep.rows) {
        long long expect = (1LL << row.n) + 1;
        c.pass = c.pass && row.fix_count == expect && row.verdict();
        fixes.push_back(row.fix_count);
    }
    double target = std::log(2.0) + std::log(65.0 / 64.0) / 6.0;
    double got = rep.rows[5].growth.value_or(0.0);
    c.pass = c.pass && sum.pass() && std::abs(got - target) <= 0.01;
    c.detail = {{"fix_counts", fixes},
                {"growth_n6", got},
                {"growth_target", target},
                {"summary_pass", sum.pass()}};
    return c;
}

Check chk_alternation(const RunCfg& cfg) {
    Check c{"alternation_census", false, json::object()};
    GrowthReport rep = growth_report(power_s2(-2), 2, census_opts(cfg));
    TheoremSummary sum = verify_theorem1(rep);
    c.pass = rep.rows[0].fix_polar_count == 0 && rep.rows[1].fix_polar_count == 2 &&
             rep.rows[0].verdict() && rep.rows[1].verdict() && sum.pass();
    c.detail = {{"fix", {rep.rows[0].fix_count, rep.rows[1].fix_count}},
                {"fix_P", {rep.rows[0].fix_polar_count, rep.rows[1].fix_polar_count}},
                {"bounds", {rep.rows[0].bound.value, rep.rows[1].bound.value}},
                {"summary_pass", sum.pass()}};
    return c;
}

Check chk_brouwer_kernel(const RunCfg& cfg) {
    Check c{"brouwer_kernel", true, json::object()};
    json per = json::array();
    for (int k : {2, 3}) {
        Box box;
        box.lo = Vec::Constant(k, -1.0);
        box.hi = Vec::Constant(k, 1.0);
        BoxDegreeOpts o;
        o.seed = cfg.seed;
        auto deg = [&](const VectorField& v) {
            return brouwer_degree_box(v, box, 1e-4, o).degree;
        };
        long long d_id = deg([](const Eigen::VectorXd& x) { return x; });
        long long d_neg = deg([](const Eigen::VectorXd& x) { return (-x).eval(); });
        Vec cv = Vec::Constant(k, 0.31);
        cv[k - 1] = -0.17;
        long long d_const = deg([cv](const Eigen::VectorXd&) { return cv; });
        bool ok = d_id == 1 && d_neg == (k % 2 == 0 ? 1 : -1) && d_const == 0;
        c.pass = c.pass && ok;
        per.push_back({{"k", k},
                       {"identity", d_id},
                       {"negation", d_neg},
                       {"constant", d_const},
                       {"ok", ok}});
    }
    c.detail["fields"] = per;
    return c;
}

Check chk_lift_algebra(const RunCfg& cfg) {
    Check c{"lift_algebra", true, json::object()};
    std::vector<SphereMap> families = {power_s2(2),     power_s2(3),
                                       power_s2(-2),    power_s2(5),
                                       identity_map(2), antipodal_map(2),
                                       perturb(power_s2(2), 0.05, 7), join_power(2, 3)};
    json per = json::array();
    for (const SphereMap& f : families) {
        Lift F = make_lift(f, 0, degree_opts(cfg));
        Rng rng(cfg.seed, "verify-lift-" + f.spec);
        int n = f.m == 2 ? 1000 : 250;
        double worst_t = 0.0, worst_u = 0.0, worst_pr = 0.0;
        for (int i = 0; i < n; ++i) {
            LiftPoint q = random_cover_point(rng, f.m - 1, 0.9);
            LiftPoint a = F(deck(q, 1));
            LiftPoint b = F(q);
            worst_t = std::max(worst_t, std::abs(a.t - b.t - static_cast<double>(F.d)));
            worst_u = std::max(worst_u, (a.u - b.u).norm());
            long long k = static_cast<long long>(rng.uniform(-3.0, 4.0));
            worst_pr = std::max(worst_pr, std::abs(pr(deck(q, k)) - pr(q) - k));
        }
        bool ok = worst_t < 1e-9 && worst_u < 1e-9 && worst_pr < 1e-9;
        c.pass = c.pass && ok;
        per.push_back({{"map", f.spec},
                       {"points", n},
                       {"equivariance_residual", std::max(worst_t, worst_u)},
                       {"pr_increment_residual", worst_pr},
                       {"ok", ok}});
    }
    c.detail["families"] = per;
    return c;
}

Check chk_lift_roots(const RunCfg& cfg) {
    Check c{"lift_class_roots", true, json::object()};
    LiftSearchOpts lo;
    lo.jobs = cfg.jobs;
    json per = json::array();
    for (long long d : {2LL, 3LL, -2LL}) {
        SphereMap f = power_s2(d);
        FamilyReport fam = search_family(f, 0.1, lo);
        long long polar_fix = *f.hooks.fix_polar_count(1);
        long long K = std::llabs(d - 1);
        double worst = 0.0;
        long long roots = 0;
        for (const auto& lift : fam.lifts)
            for (const auto& rec : lift.records) {
                ++roots;
                double best = 2.0;
                for (long long j = 0; j < K; ++j) {
                    double th = kTwoPi * static_cast<double>(j) / static_cast<double>(K);
                    Vec r(3);
                    r << std::cos(th), std::sin(th), 0.0;
                    best = std::min(best, (rec.downstairs.x - r).norm());
                }
                worst = std::max(worst, best);
            }
        bool ok = fam.free_in_box == 0 && fam.free_in_box <= 2 * polar_fix &&
                  fam.nielsen.ok && roots == K && worst < 1e-8;
        c.pass = c.pass && ok;
        per.push_back({{"d", d},
                       {"free_in_box", fam.free_in_box},
                       {"free_bound", 2 * polar_fix},
                       {"roots", roots},
                       {"worst_root_distance", worst},
                       {"ok", ok}});
    }
    c.detail["families"] = per;
    return c;
}

Check chk_local(const RunCfg& cfg) {
    Check c{"local_analysis", true, json::object()};
    // adapted norm contraction on random rank-1 matrices
    Rng rng(cfg.seed, "verify-adapted");
    long long violations = 0;
    for (int trial = 0; trial < 100; ++trial) {
        Eigen::Vector2d u(rng.normal(), rng.normal()), v(rng.normal(), rng.normal());
        u.normalize();
        v.normalize();
        double s = rng.uniform(0.2, 3.0);
        Eigen::Matrix2d a = s * u * v.transpose();
        double rho = spectral_radius(a);
        AdaptedNorm nrm = adapted_norm(a, rho + 0.1);
        for (int i = 0; i < 1000; ++i) {
            double th = rng.uniform(0.0, kTwoPi);
            Eigen::Vector2d w(std::cos(th), std::sin(th));
            if (nrm(a * w) > nrm.c * nrm(w) * (1.0 + 1e-12)) ++violations;
        }
    }
    c.pass = violations == 0;
    c.detail["adapted_norm_violations"] = violations;

    // sector lemma on the diag(0, lambda) models
    json sectors = json::array();
    for (double lambda : {1.0, 2.0, 5.0}) {
        SphereMap f = normal_model(lambda);
        Vec north(1);
        north << 1.0;
        SpherePoint p = polar_point(north);
        FixedPointClass cls = classify_fixed_point(f, p);
        SectorReport sec = verify_sector_lemma(f, p, cls);
        bool ok = sec.pass() && std::abs(cls.rho - lambda) < 1e-6;
        c.pass = c.pass && ok;
        sectors.push_back({{"lambda", lambda},
                           {"delta", sec.delta},
                           {"violations", sec.violations.size()},
                           {"ok", ok}});
    }
    c.detail["sector_models"] = sectors;

    // the normal Jacobian is singular at every polar fixed point
    json singulars = json::array();
    std::vector<SphereMap> families = {power_s2(2), power_s2(3), power_s2(5),
                                       iterate(power_s2(-2), 2), join_power(2, 3)};
    for (const SphereMap& f : families) {
        auto pts = fixed_points_on_polar(f, 1, census_opts(cfg));
        bool ok = !pts.empty();
        double worst = 0.0;
        for (const auto& cp : pts) {
            FixedPointClass cls = classify_fixed_point(f, cp.x, degree_opts(cfg));
            worst = std::max(worst, std::abs(cls.a_p.a.determinant()));
        }
        ok = ok && worst < 1e-6;
        c.pass = c.pass && ok;
        singulars.push_back({{"map", f.spec}, {"worst_det", worst}, {"ok", ok}});
    }
    c.detail["singular_flags"] = singulars;
    return c;
}

Check chk_homotopy(const RunCfg& cfg) {
    Check c{"homotopy_stability", true, json::object()};
    DegreeOpts o = degree_opts(cfg);
    LiftSearchOpts lo;
    lo.jobs = cfg.jobs;
    DegreeReport base = check_decomposition(power_s2(2), o);
    FamilyReport basef = search_family(power_s2(2), 0.1, lo);
    std::vector<bool> base_free;
    for (const auto& lift : basef.lifts) base_free.push_back(lift.free_in_box());
    json per = json::array();
    for (std::uint64_t s = 1; s <= 5; ++s) {
        SphereMap g = perturb(power_s2(2), 0.05, s);
        DegreeReport r = check_decomposition(g, o);
        bool ok = r.deg_f == base.deg_f && r.deg_restriction == base.deg_restriction &&
                  r.transversal_d == base.transversal_d && r.decomposition_ok;
        FamilyReport fam = search_family(g, 0.1, lo);
        ok = ok && fam.lifts.size() == basef.lifts.size();
        for (std::size_t i = 0; ok && i < fam.lifts.size(); ++i)
            ok = fam.lifts[i].free_in_box() == base_free[i];
        c.pass = c.pass && ok;
        per.push_back({{"seed", s}, {"ok", ok}});
    }
    c.detail["perturbations"] = per;
    return c;
}

Check chk_determinism(const RunCfg& cfg) {
    Check c{"determinism", false, json::object()};
    auto census_with_jobs = [&](int jobs) {
        CensusOpts o = census_opts(cfg);
        o.jobs = jobs;
        GrowthReport rep = growth_report(power_s2(2), 3, o);
        return census_rows_json(rep).dump();
    };
    std::string rows1 = census_with_jobs(1), rows4 = census_with_jobs(4);
    auto degree_with_jobs = [&](int jobs) {
        DegreeOpts o = degree_opts(cfg);
        o.jobs = jobs;
        DegreeReport r = check_decomposition(power_s2(3), o);
        return json{{"deg", r.deg_f},
                    {"deg_polar", r.deg_restriction},
                    {"transversal", r.transversal_d},
                    {"regular_value", vec_json(r.regular_value_used.x)}}
            .dump();
    };
    std::string deg1 = degree_with_jobs(1), deg4 = degree_with_jobs(4);
    c.pass = rows1 == rows4 && deg1 == deg4;
    c.detail = {{"census_rows_identical", rows1 == rows4},
                {"degree_identical", deg1 == deg4}};
    return c;
}

int cmd_verify(const RunCfg& cfg) {
    std::vector<Check> checks;
    auto run = [&checks](const std::string& name, auto&& fn) {
        try {
            checks.push_back(fn());
        } catch (const Error& e) {
            checks.push_back(Check{name, false, json{{"error", e.what()}}});
        }
    };
    run("degree_triple_exactness", [&] { return chk_degree_triples(cfg); });
    run("join_family_triple", [&] { return chk_join_triple(cfg); });
    run("squaring_census_oracle", [&] { return chk_squaring_census(cfg); });
    run("alternation_census", [&] { return chk_alternation(cfg); });
    run("brouwer_kernel", [&] { return chk_brouwer_kernel(cfg); });
    run("lift_algebra", [&] { return chk_lift_algebra(cfg); });
    run("lift_class_roots", [&] { return chk_lift_roots(cfg); });
    run("local_analysis", [&] { return chk_local(cfg); });
    run("homotopy_stability", [&] { return chk_homotopy(cfg); });
    run("determinism", [&] { return chk_determinism(cfg); });

    bool all_pass = true;
    for (const auto& ck : checks) all_pass = all_pass && ck.pass;
    if (cfg.out == "json") {
        json arr = json::array();
        for (const auto& ck : checks)
            arr.push_back({{"name", ck.name}, {"pass", ck.pass}, {"detail", ck.detail}});
        json j{{"schema", kSchema},
               {"command", "verify"},
               {"seed", cfg.seed},
               {"checks", arr},
               {"all_pass", all_pass}};
        std::cout << j.dump(2) << "\n";
    } else {
        std::vector<std::string> header{"check", "pass"};
        std::vector<std::vector<std::string>> rows;
        for (const auto& ck : checks) rows.push_back({ck.name, ck.pass ? "yes" : "no"});
        rows.push_back({"all", all_pass ? "yes" : "no"});
        cfg.out == "csv" ? print_csv(header, rows) : print_table(header, rows);
    }
    return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "polar-degree-lab: degrees, cyclic-cover lifts, fixed point censuses, and local "
        "classification for sphere self-maps with a completely invariant polar subsphere"};
    app.require_subcommand(1);

    std::string map_spec, config_path;
    RunCfg cfg;

    auto add_common = [&](CLI::App* sub, bool with_map) {
        if (with_map) {
            sub->add_option("--map", map_spec, "map spec, e.g. \"family=power_s2 d=2\"");
            sub->add_option("--config", config_path,
                            "config file: a family= line plus key=value defaults");
        }
        sub->add_option("--out", cfg.out, "output format")
            ->check(CLI::IsMember({"json", "csv", "table"}));
        sub->add_option("--seed", cfg.seed, "seed for every stochastic choice");
        sub->add_option("--jobs", cfg.jobs, "parallelism width")->check(CLI::PositiveNumber);
    };

    CLI::App* c_degree = app.add_subcommand(
        "degree", "degree triple (deg f, deg f|P, transversal d) and decomposition check");
    add_common(c_degree, true);
    CLI::App* c_trans =
        app.add_subcommand("transversal", "transversal degree with per-probe winding data");
    add_common(c_trans, true);
    CLI::App* c_census = app.add_subcommand(
        "census", "fixed point census of iterates with growth-bound verdicts");
    add_common(c_census, true);
    c_census->add_option("--nmax", cfg.nmax, "deepest iterate (1..12)");
    CLI::App* c_lifts = app.add_subcommand(
        "lifts", "per-deck-class fixed point search with boundary degree certificates");
    add_common(c_lifts, true);
    c_lifts->add_option("--delta", cfg.delta, "lateral inset of the search box, in (0, 0.5)");
    CLI::App* c_classify = app.add_subcommand(
        "classify", "spectral classification of the fixed points on the polar sphere");
    add_common(c_classify, true);
    CLI::App* c_verify =
        app.add_subcommand("verify", "run the built-in verification battery");
    add_common(c_verify, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    CLI::App* sub = app.get_subcommands().front();

    try {
        if (!config_path.empty()) {
            ConfigFile file = read_config(config_path);
            if (map_spec.empty() && file.map) map_spec = *file.map;
            for (const auto& [key, val] : file.defaults) {
                if (key == "seed" && !sub->count("--seed"))
                    cfg.seed = parse_u64("seed", val);
                else if (key == "jobs" && !sub->count("--jobs"))
                    cfg.jobs = static_cast<int>(parse_ll("jobs", val));
                else if (key == "out" && !sub->count("--out"))
                    cfg.out = val;
                else if (key == "nmax" && sub == c_census && !sub->count("--nmax"))
                    cfg.nmax = static_cast<int>(parse_ll("nmax", val));
                else if (key == "delta" && sub == c_lifts && !sub->count("--delta"))
                    cfg.delta = parse_dbl("delta", val);
            }
        }
        if (cfg.out != "json" && cfg.out != "csv" && cfg.out != "table")
            throw SpecError("output format must be json, csv, or table");
        if (cfg.jobs < 1) throw SpecError("jobs must be at least 1");
        if (sub == c_verify) {
            // no map involved
        } else if (map_spec.empty()) {
            throw SpecError("--map or a config file with a family= line is required");
        }
        if (sub == c_census && (cfg.nmax < 1 || cfg.nmax > 12))
            throw SpecError("nmax must be in 1..12");
        if (sub == c_lifts && !(cfg.delta > 0.0 && cfg.delta < 0.5))
            throw SpecError("delta must be in (0, 0.5)");

        if (sub == c_verify) return cmd_verify(cfg);
        SphereMap f = parse_map_spec(map_spec);
        if (sub == c_degree) return cmd_degree(f, cfg);
        if (sub == c_trans) return cmd_transversal(f, cfg);
        if (sub == c_census) return cmd_census(f, cfg);
        if (sub == c_lifts) return cmd_lifts(f, cfg);
        return cmd_classify(f, cfg);
    } catch (const SpecError& e) {
        std::cerr << "spec error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "computation error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
