#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "fdilab/grid.hpp"

namespace fdilab::grid {
namespace {

constexpr double kPi = 3.14159265358979323846;

struct RawRow {
    std::vector<double> values;
    int line = 0;
};

struct RawCase {
    double base_mva = -1.0;
    bool has_base = false;
    std::vector<RawRow> bus, branch, gen;
    bool has_bus = false, has_branch = false, has_gen = false;
};

[[noreturn]] void fail(int line, const std::string& what) {
    throw std::runtime_error("matpower parse error at line " + std::to_string(line) +
                             ": " + what);
}

std::string strip_comment(const std::string& line) {
    const auto pos = line.find('%');
    return pos == std::string::npos ? line : line.substr(0, pos);
}

bool parse_number(const std::string& tok, double& out) {
    char* end = nullptr;
    out = std::strtod(tok.c_str(), &end);
    return end && *end == '\0' && end != tok.c_str();
}

// Reads a "mpc.<name> = [ rows ];" matrix block starting after the '['.
// Rows are terminated by ';'. Returns the list of numeric rows.
std::vector<RawRow> read_matrix(std::istringstream& stream, std::string pending,
                                int& line_no, const std::string& block) {
    std::vector<RawRow> rows;
    std::vector<double> current;
    int row_line = line_no;
    std::string line = std::move(pending);
    bool done = false;
    while (true) {
        std::string body = strip_comment(line);
        std::istringstream toks(body);
        std::string tok;
        while (toks >> tok) {
            // split trailing ; or ] glued to the number
            while (!tok.empty()) {
                if (tok.front() == ']') {
                    done = true;
                    tok.erase(tok.begin());
                    continue;
                }
                auto cut = tok.find_first_of(";]");
                std::string head = tok.substr(0, cut);
                if (!head.empty()) {
                    double v;
                    if (!parse_number(head, v)) fail(line_no, "bad numeric literal '" + head + "' in mpc." + block);
                    if (current.empty()) row_line = line_no;
                    current.push_back(v);
                }
                if (cut == std::string::npos) break;
                if (tok[cut] == ';') {
                    if (!current.empty()) {
                        rows.push_back({current, row_line});
                        current.clear();
                    }
                    tok = tok.substr(cut + 1);
                } else {  // ']'
                    done = true;
                    tok = tok.substr(cut + 1);
                }
            }
        }
        if (done) break;
        // newline also ends a row (common in hand-edited files)
        if (!current.empty()) {
            rows.push_back({current, row_line});
            current.clear();
        }
        if (!std::getline(stream, line)) fail(line_no, "unterminated mpc." + block + " block");
        ++line_no;
    }
    if (!current.empty()) rows.push_back({current, row_line});
    return rows;
}

RawCase read_raw(const std::string& text) {
    RawCase raw;
    std::istringstream stream(text);
    std::string line;
    int line_no = 0;
    while (std::getline(stream, line)) {
        ++line_no;
        std::string body = strip_comment(line);
        const auto mpc = body.find("mpc.");
        if (mpc == std::string::npos) continue;
        std::string rest = body.substr(mpc + 4);
        const auto eq = rest.find('=');
        if (eq == std::string::npos) fail(line_no, "expected '=' after mpc field");
        std::string field = rest.substr(0, eq);
        field.erase(std::remove_if(field.begin(), field.end(), ::isspace), field.end());
        std::string value = rest.substr(eq + 1);

        if (field == "baseMVA") {
            auto semi = value.find(';');
            if (semi != std::string::npos) value = value.substr(0, semi);
            double v;
            std::string tok;
            std::istringstream(value) >> tok;
            if (!parse_number(tok, v)) fail(line_no, "bad baseMVA value");
            raw.base_mva = v;
            raw.has_base = true;
            continue;
        }
        if (field == "version") continue;

        if (field == "bus" || field == "branch" || field == "gen") {
            const auto open = value.find('[');
            if (open == std::string::npos) fail(line_no, "expected '[' for mpc." + field);
            auto rows = read_matrix(stream, value.substr(open + 1), line_no, field);
            if (field == "bus") {
                raw.bus = std::move(rows);
                raw.has_bus = true;
            } else if (field == "branch") {
                raw.branch = std::move(rows);
                raw.has_branch = true;
            } else {
                raw.gen = std::move(rows);
                raw.has_gen = true;
            }
            continue;
        }
        // other mpc fields (gencost, bus_name, ...) are ignored
    }
    return raw;
}

double col(const RawRow& row, std::size_t idx, double fallback) {
    return idx < row.values.size() ? row.values[idx] : fallback;
}

}  // namespace

std::size_t NetworkCase::slack_index() const {
    for (std::size_t i = 0; i < buses.size(); ++i)
        if (buses[i].kind == BusKind::Slack) return i;
    throw std::runtime_error("network has no slack bus");
}

std::size_t NetworkCase::internal_index(int ext_id) const {
    for (std::size_t i = 0; i < buses.size(); ++i)
        if (buses[i].ext_id == ext_id) return i;
    throw std::runtime_error("unknown bus id " + std::to_string(ext_id));
}

std::vector<std::size_t> NetworkCase::in_service_branches() const {
    std::vector<std::size_t> out;
    for (std::size_t l = 0; l < branches.size(); ++l)
        if (branches[l].in_service) out.push_back(l);
    return out;
}

std::vector<std::vector<std::size_t>> NetworkCase::adjacency() const {
    std::vector<std::vector<std::size_t>> adj(buses.size());
    for (const auto& br : branches) {
        if (!br.in_service) continue;
        auto add = [&](std::size_t a, std::size_t b) {
            auto& v = adj[a];
            if (std::find(v.begin(), v.end(), b) == v.end()) v.push_back(b);
        };
        add(br.from_bus, br.to_bus);
        add(br.to_bus, br.from_bus);
    }
    for (auto& v : adj) std::sort(v.begin(), v.end());
    return adj;
}

NetworkCase parse_matpower_case(const std::string& text, const std::string& name) {
    RawCase raw = read_raw(text);
    if (!raw.has_base) throw std::runtime_error("missing baseMVA block");
    if (!raw.has_bus) throw std::runtime_error("missing bus block");
    if (!raw.has_branch) throw std::runtime_error("missing branch block");
    if (!raw.has_gen) throw std::runtime_error("missing gen block");
    if (!(raw.base_mva > 0.0)) throw std::runtime_error("baseMVA must be positive");

    NetworkCase net;
    net.name = name;
    net.base_mva = raw.base_mva;

    bool warned_extra = false;
    std::map<int, std::size_t> id_map;
    int slack_count = 0;
    for (const auto& row : raw.bus) {
        if (row.values.size() < 10) fail(row.line, "bus row needs at least 10 columns");
        if (row.values.size() > 13 && !warned_extra) {
            std::cerr << "fdilab: warning: ignoring extra bus columns ("
                      << row.values.size() << " found)\n";
            warned_extra = true;
        }
        BusRecord bus;
        bus.ext_id = static_cast<int>(row.values[0]);
        const int kind = static_cast<int>(row.values[1]);
        switch (kind) {
            case 1: bus.kind = BusKind::PQ; break;
            case 2: bus.kind = BusKind::PV; break;
            case 3: bus.kind = BusKind::Slack; ++slack_count; break;
            default: fail(row.line, "unsupported bus type " + std::to_string(kind));
        }
        bus.p_load = row.values[2] / net.base_mva;
        bus.q_load = row.values[3] / net.base_mva;
        bus.g_shunt = row.values[4] / net.base_mva;
        bus.b_shunt = row.values[5] / net.base_mva;
        bus.v_setpoint = col(row, 7, 1.0);
        bus.base_kv = col(row, 9, 0.0);
        if (!(bus.v_setpoint > 0.0)) fail(row.line, "bus Vm must be positive");
        if (id_map.count(bus.ext_id)) fail(row.line, "duplicate bus id " + std::to_string(bus.ext_id));
        id_map[bus.ext_id] = net.buses.size();
        net.buses.push_back(bus);
    }
    if (slack_count != 1)
        throw std::runtime_error("expected exactly one slack bus, found " +
                                 std::to_string(slack_count));

    for (const auto& row : raw.branch) {
        if (row.values.size() < 11) fail(row.line, "branch row needs at least 11 columns");
        BranchRecord br;
        const int f = static_cast<int>(row.values[0]);
        const int t = static_cast<int>(row.values[1]);
        auto fit = id_map.find(f);
        auto tit = id_map.find(t);
        if (fit == id_map.end()) fail(row.line, "branch references unknown bus " + std::to_string(f));
        if (tit == id_map.end()) fail(row.line, "branch references unknown bus " + std::to_string(t));
        br.from_bus = fit->second;
        br.to_bus = tit->second;
        br.r = row.values[2];
        br.x = row.values[3];
        br.b_charging = row.values[4];
        br.tap = row.values[8];
        if (br.tap == 0.0) br.tap = 1.0;
        if (!(br.tap > 0.0)) fail(row.line, "branch tap must be positive");
        br.shift = row.values[9] * kPi / 180.0;
        br.in_service = row.values[10] != 0.0;
        if (br.in_service && br.r == 0.0 && br.x == 0.0)
            fail(row.line, "in-service branch with zero impedance");
        net.branches.push_back(br);
    }

    for (const auto& row : raw.gen) {
        if (row.values.size() < 8) fail(row.line, "gen row needs at least 8 columns");
        GenRecord gen;
        const int bus = static_cast<int>(row.values[0]);
        auto it = id_map.find(bus);
        if (it == id_map.end()) fail(row.line, "gen references unknown bus " + std::to_string(bus));
        gen.bus = it->second;
        gen.pg = row.values[1] / net.base_mva;
        gen.qg = row.values[2] / net.base_mva;
        gen.vg = row.values[5];
        gen.in_service = row.values[7] > 0.0;
        net.gens.push_back(gen);
    }
    return net;
}

NetworkCase load_case_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open case file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    std::string name = path;
    if (auto pos = name.find_last_of('/'); pos != std::string::npos) name = name.substr(pos + 1);
    if (auto pos = name.rfind(".m"); pos != std::string::npos) name = name.substr(0, pos);
    return parse_matpower_case(buf.str(), name);
}

std::string bundled_case_path(const std::string& name) {
    std::string dir;
    if (const char* env = std::getenv("FDILAB_DATA_DIR"))
        dir = env;
    else
#ifdef FDILAB_DATA_DIR_DEFAULT
        dir = FDILAB_DATA_DIR_DEFAULT;
#else
        dir = "data";
#endif
    return dir + "/cases/" + name + ".m";
}

NetworkCase load_bundled_case(const std::string& name) {
    return load_case_file(bundled_case_path(name));
}

bool same_network(const NetworkCase& a, const NetworkCase& b, double tol) {
    auto close = [tol](double x, double y) { return std::abs(x - y) <= tol; };
    if (a.buses.size() != b.buses.size() || a.branches.size() != b.branches.size() ||
        a.gens.size() != b.gens.size() || !close(a.base_mva, b.base_mva))
        return false;
    for (std::size_t i = 0; i < a.buses.size(); ++i) {
        const auto& u = a.buses[i];
        const auto& v = b.buses[i];
        if (u.ext_id != v.ext_id || u.kind != v.kind || !close(u.p_load, v.p_load) ||
            !close(u.q_load, v.q_load) || !close(u.g_shunt, v.g_shunt) ||
            !close(u.b_shunt, v.b_shunt) || !close(u.v_setpoint, v.v_setpoint) ||
            !close(u.base_kv, v.base_kv))
            return false;
    }
    for (std::size_t i = 0; i < a.branches.size(); ++i) {
        const auto& u = a.branches[i];
        const auto& v = b.branches[i];
        if (u.from_bus != v.from_bus || u.to_bus != v.to_bus || !close(u.r, v.r) ||
            !close(u.x, v.x) || !close(u.b_charging, v.b_charging) ||
            !close(u.tap, v.tap) || !close(u.shift, v.shift) ||
            u.in_service != v.in_service)
            return false;
    }
    for (std::size_t i = 0; i < a.gens.size(); ++i) {
        const auto& u = a.gens[i];
        const auto& v = b.gens[i];
        if (u.bus != v.bus || !close(u.pg, v.pg) || !close(u.qg, v.qg) ||
            !close(u.vg, v.vg) || u.in_service != v.in_service)
            return false;
    }
    return true;
}

}  // namespace fdilab::grid
